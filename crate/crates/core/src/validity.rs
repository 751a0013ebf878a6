//! Deciding whether a policy meets every requirement along every run.
//!
//! A policy is invalid iff the monitor net for it, with the clearance counter
//! clamped at the largest requirement, can reach a marking that puts a token
//! on some secret place `p` while the counter level is below `ℓ(p)`. Each such
//! (place, level) pair is an upward-closed target, so the question reduces to
//! coverability.

use std::collections::{HashMap, VecDeque};

use num_traits::Zero;

use crate::coverability::{
    backward_coverable, karp_miller, Coverability, CoverabilityQuery, UpwardBasis, DEFAULT_MAX_NODES,
};
use crate::error::Error;
use crate::model::{Policy, Semantics, SppInstance};
use crate::net::{FiringSequence, Marking, Nat, PlaceId, TransitionId};
use crate::transforms::{build_monitor_net, saturate_counter, MonitorNet, SaturatedNet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Backward,
    /// Karp–Miller decides; backward search supplies the witness.
    KarpMiller,
    /// Bounded explicit search; inconclusive runs count as resource exhaustion.
    Oracle { bound: u64, depth: usize },
}

impl Default for Engine {
    fn default() -> Self {
        Engine::Backward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub engine: Engine,
    pub max_nodes: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            engine: Engine::Backward,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Valid,
    Invalid,
    ResourceExhausted,
}

/// Outcome of a validity check. An invalid verdict carries a run of the
/// instance net whose last marking breaches `violated_place`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<FiringSequence>,
    pub violated_place: Option<PlaceId>,
    pub clearance_at_violation: Option<Nat>,
}

impl Verdict {
    pub fn valid() -> Self {
        Verdict {
            status: Status::Valid,
            witness: None,
            violated_place: None,
            clearance_at_violation: None,
        }
    }

    pub fn exhausted() -> Self {
        Verdict {
            status: Status::ResourceExhausted,
            ..Verdict::valid()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid
    }

    pub fn is_invalid(&self) -> bool {
        self.status == Status::Invalid
    }

    /// Confirms `witness` on `inst` and trims it to its first violation.
    fn invalid(inst: &SppInstance, pol: &Policy, witness: FiringSequence) -> Result<Self, Error> {
        match inst.run_violates(pol, &witness)? {
            Some(v) => Ok(Verdict {
                status: Status::Invalid,
                witness: Some(witness.prefix(v.prefix)),
                violated_place: Some(v.place),
                clearance_at_violation: Some(v.clearance),
            }),
            None => Err(Error::Internal(format!(
                "witness {:?} does not violate the requirement",
                inst.net.sequence_names(&witness)
            ))),
        }
    }
}

/// One target per secret place `p` and level `v < ℓ(p)`: `p ≥ 1 ∧ q_v ≥ 1`.
pub fn violation_targets(inst: &SppInstance, sat: &SaturatedNet) -> Vec<Marking> {
    let mut out = Vec::new();
    for p in inst.net.places() {
        let Some(sp) = sat.place_map.get(p.0).copied().flatten() else {
            continue;
        };
        let req = inst.requirement_of(p) as usize;
        for &q in sat.levels.iter().take(req) {
            let mut m = Marking::zeros(sat.net.num_places());
            m.set(sp, Nat::from(1u32));
            m.set(q, Nat::from(1u32));
            out.push(m);
        }
    }
    out
}

struct Encoding {
    mon: MonitorNet,
    sat: SaturatedNet,
    targets: UpwardBasis,
}

impl Encoding {
    fn new(inst: &SppInstance, pol: &Policy) -> Result<Self, Error> {
        let mon = build_monitor_net(inst, pol)?;
        let sat = saturate_counter(&mon, inst.max_requirement())?;
        let targets = UpwardBasis::new(violation_targets(inst, &sat));
        Ok(Encoding { mon, sat, targets })
    }

    fn query(&self, max_nodes: usize) -> Result<CoverabilityQuery<'_>, Error> {
        let mut q = CoverabilityQuery::new(&self.sat.net, self.sat.initial.clone(), self.targets.clone())?
            .with_max_nodes(max_nodes)
            .with_conserved(self.sat.levels.clone());
        for group in self.mon.conserved_groups() {
            let mapped = group.iter().filter_map(|p| self.sat.place_map[p.0]).collect();
            q = q.with_conserved(mapped);
        }
        Ok(q)
    }

    /// Saturated-net run → instance-net run.
    fn to_source(&self, s: &FiringSequence) -> FiringSequence {
        FiringSequence(
            s.steps()
                .iter()
                .map(|t| self.mon.origin[self.sat.origin[t.0].0])
                .collect(),
        )
    }
}

pub fn is_valid(inst: &SppInstance, pol: &Policy) -> Result<Verdict, Error> {
    is_valid_with(inst, pol, &CheckOptions::default())
}

pub fn is_valid_with(inst: &SppInstance, pol: &Policy, opts: &CheckOptions) -> Result<Verdict, Error> {
    inst.ensure_valid()?;
    inst.check_policy(pol)?;
    if let Engine::Oracle { bound, depth } = opts.engine {
        return Ok(match is_valid_oracle(inst, pol, bound, depth)? {
            OracleVerdict::Valid => Verdict::valid(),
            OracleVerdict::Invalid(v) => v,
            OracleVerdict::Unknown => Verdict::exhausted(),
        });
    }
    let cap = inst.max_requirement();
    if cap == 0 {
        return Ok(Verdict::valid());
    }
    if usize::try_from(cap).map_or(true, |c| c >= opts.max_nodes) {
        return Ok(Verdict::exhausted());
    }
    let enc = Encoding::new(inst, pol)?;
    let query = enc.query(opts.max_nodes)?;
    if opts.engine == Engine::KarpMiller {
        let Some(tree) = karp_miller(&enc.sat.net, &enc.sat.initial, opts.max_nodes) else {
            return Ok(Verdict::exhausted());
        };
        if !enc.targets.elements().iter().any(|t| tree.covers(t)) {
            return Ok(Verdict::valid());
        }
    }
    match backward_coverable(&query) {
        Coverability::Coverable(w) => Verdict::invalid(inst, pol, enc.to_source(&w)),
        Coverability::NotCoverable if opts.engine == Engine::KarpMiller => Err(Error::Internal(
            "karp-miller found a violation that backward search refutes".into(),
        )),
        Coverability::NotCoverable => Ok(Verdict::valid()),
        Coverability::ResourceExhausted => Ok(Verdict::exhausted()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Valid,
    Invalid(Verdict),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct OracleState {
    marking: Marking,
    // parikh clearance clamped at the largest requirement
    parikh: u64,
    fired: Vec<bool>,
}

/// Explicit breadth-first search over (marking, clearance state) pairs,
/// bounded by `bound` tokens per place and `depth` steps.
pub fn is_valid_oracle(
    inst: &SppInstance,
    pol: &Policy,
    bound: u64,
    depth: usize,
) -> Result<OracleVerdict, Error> {
    inst.ensure_valid()?;
    inst.check_policy(pol)?;
    let net = &inst.net;
    let cap = inst.max_requirement();
    let indicator: Vec<&str> = pol
        .events()
        .filter(|e| inst.protectable[*e].semantics == Semantics::Indicator)
        .collect();
    // per transition: parikh gain and index of indicator event
    let effect: Vec<(u64, Option<usize>)> = net
        .transitions()
        .map(|t| {
            let label = net.label_name(t);
            match inst.protectable.get(label).filter(|_| pol.contains(label)) {
                Some(ev) if ev.semantics == Semantics::Parikh => (ev.gamma, None),
                Some(_) => (0, indicator.iter().position(|e| *e == label)),
                None => (0, None),
            }
        })
        .collect();
    let clearance = |s: &OracleState| -> Nat {
        let ind: u64 = s
            .fired
            .iter()
            .zip(&indicator)
            .filter(|(f, _)| **f)
            .map(|(_, e)| inst.protectable[*e].gamma)
            .sum();
        Nat::from(s.parikh) + ind
    };
    let bound = Nat::from(bound);

    let root = OracleState {
        marking: inst.initial.clone(),
        parikh: 0,
        fired: vec![false; indicator.len()],
    };
    let mut states = vec![root.clone()];
    let mut parent: Vec<Option<(usize, TransitionId)>> = vec![None];
    let mut index = HashMap::from([(root, 0usize)]);
    let path = |parent: &[Option<(usize, TransitionId)>], mut i: usize, last: Option<TransitionId>| {
        let mut steps: Vec<TransitionId> = last.into_iter().collect();
        while let Some((p, t)) = parent[i] {
            steps.push(t);
            i = p;
        }
        steps.reverse();
        FiringSequence(steps)
    };

    if inst.violated_place(&states[0].marking, &Nat::zero()).is_some() {
        return Err(Error::Internal("empty run violates a validated instance".into()));
    }
    let mut complete = true;
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((i, d)) = queue.pop_front() {
        for t in net.transitions() {
            let cur = &states[i];
            if !net.enabled(&cur.marking, t)? {
                continue;
            }
            let (gain, ind) = effect[t.0];
            let mut next = OracleState {
                marking: net.fire_unchecked(&cur.marking, t),
                parikh: cur.parikh.saturating_add(gain).min(cap),
                fired: cur.fired.clone(),
            };
            if let Some(k) = ind {
                next.fired[k] = true;
            }
            if index.contains_key(&next) {
                continue;
            }
            if inst.violated_place(&next.marking, &clearance(&next)).is_some() {
                let witness = path(&parent, i, Some(t));
                return Ok(OracleVerdict::Invalid(Verdict::invalid(inst, pol, witness)?));
            }
            if d == depth || next.marking.tokens().iter().any(|n| *n > bound) {
                complete = false;
                continue;
            }
            let j = states.len();
            index.insert(next.clone(), j);
            states.push(next);
            parent.push(Some((i, t)));
            queue.push_back((j, d + 1));
        }
    }
    Ok(if complete {
        OracleVerdict::Valid
    } else {
        OracleVerdict::Unknown
    })
}
