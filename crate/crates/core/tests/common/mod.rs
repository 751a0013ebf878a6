//! Test-side oracles written independently of the library's engines.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spp::model::{Policy, Semantics, SppInstance};
use spp::net::{LabeledPetriNet, Marking, TransitionId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn successors(net: &LabeledPetriNet, m: &[BigUint]) -> Vec<(TransitionId, Vec<BigUint>)> {
    net.transitions()
        .filter(|&t| net.places().all(|p| m[p.0] >= BigUint::from(net.input_weight(p, t))))
        .map(|t| {
            let next = net
                .places()
                .map(|p| &m[p.0] - net.input_weight(p, t) + net.output_weight(t, p))
                .collect();
            (t, next)
        })
        .collect()
}

/// Breadth-first search for a marking covering `target`, never expanding a
/// marking with more than `bound` tokens in some place. `None` when the
/// search was cut off without finding one.
pub fn explicit_coverable(net: &LabeledPetriNet, m0: &Marking, target: &Marking, bound: u64) -> Option<bool> {
    let bound = BigUint::from(bound);
    let covers = |m: &[BigUint]| m.iter().zip(target.tokens()).all(|(a, b)| a >= b);
    let start: Vec<BigUint> = m0.tokens().to_vec();
    if covers(&start) {
        return Some(true);
    }
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut cut = false;
    while let Some(m) = queue.pop_front() {
        if m.iter().any(|x| *x > bound) {
            cut = true;
            continue;
        }
        for (_, next) in successors(net, &m) {
            if covers(&next) {
                return Some(true);
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    if cut {
        None
    } else {
        Some(false)
    }
}

/// Explicit search over (marking, per-event occurrence counts). Counts are
/// clamped at the largest requirement, which cannot change any comparison
/// against a requirement. `None` when the token bound cut the search off.
pub fn explicit_valid(inst: &SppInstance, pol: &Policy, bound: u64) -> Option<bool> {
    let net = &inst.net;
    let cap = inst.requirement.iter().copied().max().unwrap_or(0);
    let events: Vec<&str> = net.alphabet().iter().map(String::as_str).collect();
    let clearance = |counts: &[u64]| -> u64 {
        events
            .iter()
            .zip(counts)
            .filter(|(e, _)| pol.contains(e))
            .map(|(e, &n)| {
                let ev = &inst.protectable[*e];
                let n = match ev.semantics {
                    Semantics::Parikh => n,
                    Semantics::Indicator => n.min(1),
                };
                ev.gamma.saturating_mul(n)
            })
            .fold(0u64, u64::saturating_add)
    };
    let breach = |m: &[BigUint], c: u64| {
        net.places()
            .any(|p| m[p.0] > BigUint::from(0u32) && inst.requirement[p.0] > c)
    };
    let bound = BigUint::from(bound);
    let start = (inst.initial.tokens().to_vec(), vec![0u64; events.len()]);
    if breach(&start.0, 0) {
        return Some(false);
    }
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut cut = false;
    while let Some((m, counts)) = queue.pop_front() {
        if m.iter().any(|x| *x > bound) {
            cut = true;
            continue;
        }
        for (t, next) in successors(net, &m) {
            let mut c = counts.clone();
            let e = net.label(t).0;
            c[e] = (c[e] + 1).min(cap);
            if breach(&next, clearance(&c)) {
                return Some(false);
            }
            let state = (next, c);
            if seen.insert(state.clone()) {
                queue.push_back(state);
            }
        }
    }
    if cut {
        None
    } else {
        Some(true)
    }
}

/// All subsets of the protectable events.
pub fn all_policies(inst: &SppInstance) -> Vec<Policy> {
    let events: Vec<&String> = inst.protectable.keys().collect();
    (0u32..1 << events.len())
        .map(|mask| {
            events
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, e)| e.as_str())
                .collect()
        })
        .collect()
}

/// Cheapest valid policy by exhaustive enumeration with the explicit oracle.
/// Outer `None`: some policy was inconclusive. Inner `None`: infeasible.
pub fn explicit_optimum(inst: &SppInstance, bound: u64) -> Option<Option<spp::Cost>> {
    let mut best: Option<spp::Cost> = None;
    for pol in all_policies(inst) {
        if explicit_valid(inst, &pol, bound)? {
            let c = inst.policy_cost(&pol).unwrap();
            if best.as_ref().map_or(true, |b| c < *b) {
                best = Some(c);
            }
        }
    }
    Some(best)
}

pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "spp"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}
