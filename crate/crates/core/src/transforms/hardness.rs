use num_rational::BigRational;
use num_traits::One;

use crate::error::{NetError, TransformError};
use crate::model::{ProtectableEvent, Semantics, SppInstance};
use crate::net::{LabeledPetriNet, Marking, PlaceId, TransitionId};

/// Instance reducing coverability of `target` to the budget question.
#[derive(Clone, Debug)]
pub struct HardnessGadget {
    pub instance: SppInstance,
    pub t_new: TransitionId,
    pub p_new: PlaceId,
    /// Place holding the single token that lets `t_new` fire at most once.
    pub once_guard: Option<PlaceId>,
}

impl HardnessGadget {
    pub fn event(&self) -> &str {
        self.instance.net.label_name(self.t_new)
    }
}

/// Builds the gadget with the once-guard (see [`gen_hardness_instance_with`]).
pub fn gen_hardness_instance(
    net: &LabeledPetriNet,
    m0: &Marking,
    target: &Marking,
) -> Result<HardnessGadget, TransformError> {
    gen_hardness_instance_with(net, m0, target, true)
}

/// Copy of `net` (labels discarded, identity labeling) plus `t_new` that
/// consumes `target` and marks `p_new`, the sole secret place with
/// requirement 2. `t_new`'s label is the only protectable event
/// (gamma 1, cost 1) and the budget is 1.
///
/// With `once_guard`, `t_new` also consumes a token from a fresh place
/// marked once initially, so it fires at most once on every run. Without it,
/// `t_new` may fire repeatedly whenever `target` can be covered repeatedly.
pub fn gen_hardness_instance_with(
    net: &LabeledPetriNet,
    m0: &Marking,
    target: &Marking,
    once_guard: bool,
) -> Result<HardnessGadget, TransformError> {
    let m = net.num_places();
    for x in [m0, target] {
        if x.len() != m {
            return Err(NetError::DimensionMismatch {
                expected: m,
                found: x.len(),
            }
            .into());
        }
    }
    let base = net.with_identity_labels();
    let mut b = base.to_builder();
    let t_name = b.fresh_name("t_new", "hard");
    let t_new = b.add_transition(&t_name, &t_name)?;
    let p_name = b.fresh_name("p_new", "hard");
    let p_new = b.add_place(&p_name)?;
    for p in net.places() {
        let w = u64::try_from(&target[p]).map_err(|_| {
            TransformError::Model(crate::error::ModelError::Malformed(format!(
                "target weight for {} exceeds the arc weight range",
                net.place_name(p)
            )))
        })?;
        b.set_input(p, t_new, w);
    }
    b.set_output(t_new, p_new, 1);
    let guard = if once_guard {
        let g_name = b.fresh_name("once", "hard");
        let g = b.add_place(&g_name)?;
        b.set_input(g, t_new, 1);
        Some(g)
    } else {
        None
    };
    let gadget_net = b.build()?;

    let mut initial = m0.extended(gadget_net.num_places() - m);
    if let Some(g) = guard {
        initial.add(g, 1);
    }
    let mut inst = SppInstance::new(gadget_net, initial);
    inst.requirement[p_new.0] = 2;
    inst.protectable.insert(
        t_name.clone(),
        ProtectableEvent::new(&t_name, 1, BigRational::one(), Semantics::Parikh),
    );
    inst.budget = Some(BigRational::one());
    Ok(HardnessGadget {
        instance: inst,
        t_new,
        p_new,
        once_guard: guard,
    })
}
