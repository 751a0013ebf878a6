//! Net-to-net constructions: uniformization, clearance monitors, counter
//! saturation and the coverability gadget.

mod hardness;
mod monitor;
mod uniformize;

pub use hardness::{gen_hardness_instance, gen_hardness_instance_with, HardnessGadget};
pub use monitor::{build_monitor_net, saturate_counter, MonitorNet, SaturatedNet};
pub use uniformize::{uniformize, uniformize_with, IndicatorSplit, Lift, UniformCertificate, Uniformized};
