//! Command-line front end. Report lines go to `out`; the first token of the
//! first line is the verdict keyword.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coverability::{
    backward_coverable, bounded_explore, karp_miller, parse_target, Coverability, CoverabilityQuery, UpwardBasis,
    DEFAULT_MAX_NODES,
};
use crate::error::Error;
use crate::format::{origin_notes, parse_instance, parse_net, serialize_annotated, serialize_instance};
use crate::generate::{random_instance, InstanceParams, NetParams};
use crate::model::{format_rational, parse_rational, Policy, Semantics, SppInstance};
use crate::search::{decide_budget_with, optimal_policy_with, BudgetDecision, SearchOptions, SearchStatus};
use crate::transforms::{gen_hardness_instance_with, uniformize_with, IndicatorSplit};
use crate::validity::{is_valid_oracle, is_valid_with, CheckOptions, Engine, OracleVerdict, Status, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;
pub const EXIT_EXHAUSTED: i32 = 5;

/// Token bound and depth used when `--engine oracle` stands in for an exact engine.
const ORACLE_BOUND: u64 = 8;
const ORACLE_DEPTH: usize = 10_000;

#[derive(Parser, Debug)]
#[command(name = "spp", version, about = "Secret protection policies for labeled Petri nets")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = EngineArg::Backward)]
    engine: EngineArg,
    /// Seed for generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Node budget for coverability engines.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Backward,
    KarpMiller,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TransformTarget {
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    FirstOccurrence,
    FreshLabels,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a policy is valid.
    Check {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated protected events; empty for the empty policy.
        #[arg(long, default_value = "")]
        policy: String,
    },
    /// Find a cheapest valid policy.
    Solve {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Is there a valid policy within the budget?
    Decide {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        budget: Option<String>,
    },
    /// Rewrite an instance.
    Transform {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        to: TransformTarget,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::FirstOccurrence)]
        split: SplitArg,
    },
    /// Build the budget instance that is a YES instance iff the target is not coverable.
    GenHard {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
        /// Omit the place that limits the new transition to one firing.
        #[arg(long)]
        unguarded: bool,
    },
    /// Decide coverability of a target marking.
    Cover {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        target: String,
    },
    /// Bounded explicit-state validity check.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "")]
        policy: String,
        #[arg(long)]
        bound: u64,
        #[arg(long)]
        depth: usize,
    },
    /// Write a random instance.
    GenRandom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        places: usize,
        #[arg(long, default_value_t = 4)]
        transitions: usize,
        #[arg(long, default_value_t = 3)]
        events: usize,
    },
}

/// Failure that maps to exit code 3.
struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<std::io::Error> for InputError {
    fn from(e: std::io::Error) -> Self {
        InputError(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<SppInstance, InputError> {
    parse_instance(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn parse_policy(inst: &SppInstance, text: &str) -> Result<Policy, InputError> {
    let pol: Policy = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    inst.check_policy(&pol).map_err(|e| InputError(e.to_string()))?;
    Ok(pol)
}

fn check_options(cli: &Cli) -> CheckOptions {
    let engine = match cli.engine {
        EngineArg::Backward => Engine::Backward,
        EngineArg::KarpMiller => Engine::KarpMiller,
        EngineArg::Oracle => Engine::Oracle {
            bound: ORACLE_BOUND,
            depth: ORACLE_DEPTH,
        },
    };
    CheckOptions {
        engine,
        max_nodes: cli.max_nodes,
    }
}

fn report_verdict(out: &mut dyn Write, inst: &SppInstance, v: &Verdict) -> std::io::Result<i32> {
    match v.status {
        Status::Valid => {
            writeln!(out, "VALID")?;
            Ok(EXIT_OK)
        }
        Status::Invalid => {
            let place = v.violated_place.map_or("?", |p| inst.net.place_name(p));
            let clearance = v.clearance_at_violation.clone().unwrap_or_default();
            writeln!(out, "INVALID place={place} clearance={clearance}")?;
            let names = v.witness.as_ref().map(|w| inst.net.sequence_names(w).join(" ")).unwrap_or_default();
            writeln!(out, "witness: {names}")?;
            Ok(EXIT_NEGATIVE)
        }
        Status::ResourceExhausted => {
            writeln!(out, "RESOURCE-EXHAUSTED")?;
            Ok(EXIT_EXHAUSTED)
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, InputError> {
    let opts = check_options(cli);
    let search = SearchOptions {
        check: opts,
        ..SearchOptions::default()
    };
    match &cli.command {
        Command::Check { instance, policy } => {
            let inst = load_instance(instance)?;
            let pol = parse_policy(&inst, policy)?;
            let v = is_valid_with(&inst, &pol, &opts)?;
            Ok(report_verdict(out, &inst, &v)?)
        }
        Command::Solve { instance } => {
            let inst = load_instance(instance)?;
            let res = optimal_policy_with(&inst, &search)?;
            Ok(match res.status {
                SearchStatus::Optimal { policy, cost } => {
                    writeln!(out, "OPTIMAL cost={} policy={policy}", format_rational(&cost))?;
                    EXIT_OK
                }
                SearchStatus::Infeasible => {
                    writeln!(out, "INFEASIBLE")?;
                    EXIT_INFEASIBLE
                }
                SearchStatus::ResourceExhausted => {
                    writeln!(out, "RESOURCE-EXHAUSTED")?;
                    EXIT_EXHAUSTED
                }
            })
        }
        Command::Decide { instance, budget } => {
            let inst = load_instance(instance)?;
            let w = match budget {
                Some(text) => parse_rational(text).ok_or_else(|| InputError(format!("malformed budget `{text}`")))?,
                None => inst
                    .budget
                    .clone()
                    .ok_or_else(|| InputError("no budget given in the instance or via --budget".into()))?,
            };
            if w < num_traits::Zero::zero() {
                return Err(InputError("budget must be non-negative".into()));
            }
            Ok(match decide_budget_with(&inst, &w, &search)? {
                BudgetDecision::Yes { policy, cost } => {
                    writeln!(out, "YES cost={} policy={policy}", format_rational(&cost))?;
                    EXIT_OK
                }
                BudgetDecision::No => {
                    writeln!(out, "NO")?;
                    EXIT_NEGATIVE
                }
                BudgetDecision::ResourceExhausted => {
                    writeln!(out, "RESOURCE-EXHAUSTED")?;
                    EXIT_EXHAUSTED
                }
            })
        }
        Command::Transform {
            instance,
            to: TransformTarget::Uniform,
            out: path,
            split,
        } => {
            let inst = load_instance(instance)?;
            let split = match split {
                SplitArg::FirstOccurrence => IndicatorSplit::FirstOccurrence,
                SplitArg::FreshLabels => IndicatorSplit::FreshLabels,
            };
            let u = uniformize_with(&inst, split).map_err(Error::from)?;
            let mut notes = vec![u.certificate.describe().trim_end().to_string()];
            notes.extend(origin_notes(&u.instance.net, &inst.net, &u.certificate.origin));
            write_file(path, &serialize_annotated(&u.instance, &notes))?;
            writeln!(out, "WROTE {}", path.display())?;
            Ok(EXIT_OK)
        }
        Command::GenHard {
            net,
            target,
            out: path,
            unguarded,
        } => {
            let (n, m0) = parse_net(&read(net)?).map_err(|e| InputError(format!("{}: {e}", net.display())))?;
            let target = parse_target(&n, target).map_err(InputError)?;
            let g = gen_hardness_instance_with(&n, &m0, &target, !unguarded).map_err(Error::from)?;
            let notes = vec![format!(
                "gadget transition {} marks {}; target {}",
                g.instance.net.transition_name(g.t_new),
                g.instance.net.place_name(g.p_new),
                target
            )];
            write_file(path, &serialize_annotated(&g.instance, &notes))?;
            writeln!(out, "WROTE {}", path.display())?;
            Ok(EXIT_OK)
        }
        Command::Cover { net, target } => {
            let (n, m0) = parse_net(&read(net)?).map_err(|e| InputError(format!("{}: {e}", net.display())))?;
            let target = parse_target(&n, target).map_err(InputError)?;
            let query = CoverabilityQuery::new(&n, m0.clone(), UpwardBasis::new([target.clone()]))
                .map_err(Error::from)?
                .with_max_nodes(cli.max_nodes);
            let result = match cli.engine {
                EngineArg::Backward => backward_coverable(&query),
                EngineArg::KarpMiller => match karp_miller(&n, &m0, cli.max_nodes) {
                    None => Coverability::ResourceExhausted,
                    Some(tree) if !tree.covers(&target) => Coverability::NotCoverable,
                    Some(_) => backward_coverable(&query),
                },
                EngineArg::Oracle => {
                    let ex = bounded_explore(&n, &m0, ORACLE_BOUND, ORACLE_DEPTH);
                    match ex.any_covers(&target) {
                        Some(m) => Coverability::Coverable(ex.path_to(m).expect("explored")),
                        None if ex.complete => Coverability::NotCoverable,
                        None => Coverability::ResourceExhausted,
                    }
                }
            };
            Ok(match result {
                Coverability::Coverable(w) => {
                    writeln!(out, "COVERABLE")?;
                    writeln!(out, "witness: {}", n.sequence_names(&w).join(" "))?;
                    EXIT_OK
                }
                Coverability::NotCoverable => {
                    writeln!(out, "NOT-COVERABLE")?;
                    EXIT_NEGATIVE
                }
                Coverability::ResourceExhausted => {
                    writeln!(out, "RESOURCE-EXHAUSTED")?;
                    EXIT_EXHAUSTED
                }
            })
        }
        Command::Oracle {
            instance,
            policy,
            bound,
            depth,
        } => {
            let inst = load_instance(instance)?;
            let pol = parse_policy(&inst, policy)?;
            Ok(match is_valid_oracle(&inst, &pol, *bound, *depth)? {
                OracleVerdict::Valid => {
                    writeln!(out, "VALID")?;
                    EXIT_OK
                }
                OracleVerdict::Invalid(v) => report_verdict(out, &inst, &v)?,
                OracleVerdict::Unknown => {
                    writeln!(out, "UNKNOWN")?;
                    EXIT_UNKNOWN
                }
            })
        }
        Command::GenRandom {
            out: path,
            places,
            transitions,
            events,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let params = InstanceParams {
                net: NetParams {
                    places: *places,
                    transitions: *transitions,
                    events: *events,
                    ..NetParams::default()
                },
                gammas: vec![1, 2, 3],
                semantics: vec![Semantics::Parikh, Semantics::Indicator],
                ..InstanceParams::default()
            };
            let inst = random_instance(&mut rng, &params);
            write_file(path, &serialize_instance(&inst))?;
            writeln!(out, "WROTE {}", path.display())?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}
