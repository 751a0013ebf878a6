//! Secret protection instances, policies and run-level clearance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{ModelError, NetError};
use crate::net::{EventId, FiringSequence, LabeledPetriNet, Marking, Nat, PlaceId};

/// Exact non-negative rational used for costs and budgets.
pub type Cost = BigRational;

/// How occurrences of a protected event count toward clearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semantics {
    /// Every occurrence counts.
    Parikh,
    /// Counts at most once per run.
    Indicator,
}

impl Semantics {
    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Parikh => "parikh",
            Semantics::Indicator => "indicator",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtectableEvent {
    pub event: String,
    pub gamma: u64,
    pub cost: Cost,
    pub semantics: Semantics,
}

impl ProtectableEvent {
    pub fn new(event: &str, gamma: u64, cost: Cost, semantics: Semantics) -> Self {
        ProtectableEvent {
            event: event.to_string(),
            gamma,
            cost,
            semantics,
        }
    }
}

/// A net together with its initial marking, security requirement and the
/// protectable-event table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SppInstance {
    pub net: LabeledPetriNet,
    pub initial: Marking,
    /// Indexed by place; 0 for non-secret places.
    pub requirement: Vec<u64>,
    pub protectable: BTreeMap<String, ProtectableEvent>,
    pub budget: Option<Cost>,
}

/// A set of protected events.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Policy(BTreeSet<String>);

impl Policy {
    pub fn empty() -> Self {
        Policy(BTreeSet::new())
    }

    pub fn contains(&self, event: &str) -> bool {
        self.0.contains(event)
    }

    pub fn insert(&mut self, event: &str) -> bool {
        self.0.insert(event.to_string())
    }

    pub fn events(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &Policy) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &Policy) -> Policy {
        Policy(self.0.union(&other.0).cloned().collect())
    }
}

impl<S: AsRef<str>> FromIterator<S> for Policy {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Policy(iter.into_iter().map(|s| s.as_ref().to_string()).collect())
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            f.write_str(e)?;
        }
        write!(f, "}}")
    }
}

/// A broken instance invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    MarkingDimension { expected: usize, found: usize },
    RequirementDimension { expected: usize, found: usize },
    InitiallyMarkedSecret { place: String },
    ProtectableNotInAlphabet { event: String },
    ProtectableKeyMismatch { key: String, event: String },
    NegativeCost { event: String },
    NegativeBudget,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MarkingDimension { expected, found } => {
                write!(f, "initial marking has {found} entries, expected {expected}")
            }
            Diagnostic::RequirementDimension { expected, found } => {
                write!(f, "requirement has {found} entries, expected {expected}")
            }
            Diagnostic::InitiallyMarkedSecret { place } => {
                write!(f, "initially marked secret place {place}")
            }
            Diagnostic::ProtectableNotInAlphabet { event } => {
                write!(f, "protectable event {event} is not in the alphabet")
            }
            Diagnostic::ProtectableKeyMismatch { key, event } => {
                write!(f, "protectable entry {key} describes event {event}")
            }
            Diagnostic::NegativeCost { event } => write!(f, "negative cost for event {event}"),
            Diagnostic::NegativeBudget => write!(f, "negative budget"),
        }
    }
}

impl SppInstance {
    /// Instance with all requirements 0 and no protectable events.
    pub fn new(net: LabeledPetriNet, initial: Marking) -> Self {
        let m = net.num_places();
        SppInstance {
            net,
            initial,
            requirement: vec![0; m],
            protectable: BTreeMap::new(),
            budget: None,
        }
    }

    pub fn requirement_of(&self, p: PlaceId) -> u64 {
        self.requirement.get(p.0).copied().unwrap_or(0)
    }

    /// Largest requirement over all places.
    pub fn max_requirement(&self) -> u64 {
        self.requirement.iter().copied().max().unwrap_or(0)
    }

    pub fn is_protectable(&self, event: &str) -> bool {
        self.protectable.contains_key(event)
    }

    /// The full policy `Σp`.
    pub fn all_protectable(&self) -> Policy {
        self.protectable.keys().collect()
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let m = self.net.num_places();
        if self.initial.len() != m {
            out.push(Diagnostic::MarkingDimension {
                expected: m,
                found: self.initial.len(),
            });
        }
        if self.requirement.len() != m {
            out.push(Diagnostic::RequirementDimension {
                expected: m,
                found: self.requirement.len(),
            });
        }
        if self.initial.len() == m {
            for p in self.net.places() {
                if !self.initial[p].is_zero() && self.requirement_of(p) > 0 {
                    out.push(Diagnostic::InitiallyMarkedSecret {
                        place: self.net.place_name(p).to_string(),
                    });
                }
            }
        }
        for (key, ev) in &self.protectable {
            if key != &ev.event {
                out.push(Diagnostic::ProtectableKeyMismatch {
                    key: key.clone(),
                    event: ev.event.clone(),
                });
            }
            if self.net.event(key).is_none() {
                out.push(Diagnostic::ProtectableNotInAlphabet { event: key.clone() });
            }
            if ev.cost.is_negative() {
                out.push(Diagnostic::NegativeCost { event: key.clone() });
            }
        }
        if self.budget.as_ref().is_some_and(Signed::is_negative) {
            out.push(Diagnostic::NegativeBudget);
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        match self.validate().first() {
            None => Ok(()),
            Some(d) => Err(ModelError::Malformed(d.to_string())),
        }
    }

    pub fn check_policy(&self, pol: &Policy) -> Result<(), ModelError> {
        match pol.events().find(|e| !self.is_protectable(e)) {
            Some(e) => Err(ModelError::NotProtectable(e.to_string())),
            None => Ok(()),
        }
    }

    pub fn policy_cost(&self, pol: &Policy) -> Result<Cost, ModelError> {
        pol.events().try_fold(Cost::zero(), |acc, e| {
            self.protectable
                .get(e)
                .map(|ev| acc + &ev.cost)
                .ok_or_else(|| ModelError::NotProtectable(e.to_string()))
        })
    }

    pub fn clearance_of_run(&self, pol: &Policy, s: &FiringSequence) -> Result<Nat, NetError> {
        self.net.fire_sequence(&self.initial, s)?;
        let mut tracker = ClearanceTracker::new(self, pol);
        for e in self.net.label_word(s) {
            tracker.observe(e);
        }
        Ok(tracker.clearance())
    }

    /// Earliest prefix of `s` whose reached marking holds a token in a place
    /// whose requirement exceeds the clearance accumulated so far.
    pub fn run_violates(&self, pol: &Policy, s: &FiringSequence) -> Result<Option<Violation>, NetError> {
        let markings = self.net.fire_sequence(&self.initial, s)?;
        let mut tracker = ClearanceTracker::new(self, pol);
        for (i, m) in markings.iter().enumerate() {
            if i > 0 {
                tracker.observe(self.net.label(s.steps()[i - 1]));
            }
            let clearance = tracker.clearance();
            if let Some(place) = self.violated_place(m, &clearance) {
                return Ok(Some(Violation {
                    prefix: i,
                    place,
                    clearance,
                }));
            }
        }
        Ok(None)
    }

    /// First marked place whose requirement exceeds `clearance`.
    pub fn violated_place(&self, m: &Marking, clearance: &Nat) -> Option<PlaceId> {
        self.net
            .places()
            .find(|&p| !m[p].is_zero() && Nat::from(self.requirement_of(p)) > *clearance)
    }
}

/// Location of a requirement breach along a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Number of steps of the violating prefix.
    pub prefix: usize,
    pub place: PlaceId,
    pub clearance: Nat,
}

/// Incremental clearance of a run under a fixed policy.
#[derive(Clone, Debug)]
pub struct ClearanceTracker {
    // per event: Some((gamma, semantics)) when protected by the policy
    weights: Vec<Option<(u64, Semantics)>>,
    parikh: Nat,
    seen: Vec<bool>,
}

impl ClearanceTracker {
    pub fn new(inst: &SppInstance, pol: &Policy) -> Self {
        let weights = inst
            .net
            .events()
            .map(|e| {
                let name = inst.net.event_name(e);
                match inst.protectable.get(name) {
                    Some(ev) if pol.contains(name) => Some((ev.gamma, ev.semantics)),
                    _ => None,
                }
            })
            .collect::<Vec<_>>();
        let n = weights.len();
        ClearanceTracker {
            weights,
            parikh: Nat::zero(),
            seen: vec![false; n],
        }
    }

    pub fn observe(&mut self, e: EventId) {
        match self.weights[e.0] {
            Some((g, Semantics::Parikh)) => self.parikh += g,
            Some((_, Semantics::Indicator)) => self.seen[e.0] = true,
            None => {}
        }
    }

    pub fn clearance(&self) -> Nat {
        let indicator: Nat = self
            .seen
            .iter()
            .zip(&self.weights)
            .filter(|(s, _)| **s)
            .map(|(_, w)| Nat::from(w.map_or(0, |(g, _)| g)))
            .sum();
        &self.parikh + indicator
    }
}

/// Parses `a/b`, an integer, or a finite decimal exactly.
pub fn parse_rational(text: &str) -> Option<Cost> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Cost::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = Cost::new(numer, denom);
    Some(if neg { -value } else { value })
}

/// `a/b` in lowest terms.
pub fn format_rational(value: &Cost) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::TransitionId;

    fn ratio(n: i64, d: i64) -> Cost {
        Cost::new(BigInt::from(n), BigInt::from(d))
    }

    /// p0 -t(a)-> ps with l(ps)=1.
    fn two_place(semantics: Semantics) -> SppInstance {
        let mut b = LabeledPetriNet::builder();
        let p0 = b.add_place("p0").unwrap();
        let ps = b.add_place("ps").unwrap();
        let t = b.add_transition("t", "a").unwrap();
        b.set_input(p0, t, 1);
        b.set_output(t, ps, 1);
        let mut inst = SppInstance::new(b.build().unwrap(), Marking::from_counts([1, 0]));
        inst.requirement[1] = 1;
        inst.protectable
            .insert("a".into(), ProtectableEvent::new("a", 1, ratio(5, 1), semantics));
        inst
    }

    #[test]
    fn diagnostics() {
        let mut inst = two_place(Semantics::Parikh);
        assert!(inst.validate().is_empty());
        inst.requirement[0] = 2;
        assert_eq!(
            inst.validate(),
            vec![Diagnostic::InitiallyMarkedSecret { place: "p0".into() }]
        );
        assert_eq!(inst.validate()[0].to_string(), "initially marked secret place p0");
        inst.requirement[0] = 0;
        inst.protectable
            .insert("zz".into(), ProtectableEvent::new("zz", 1, ratio(1, 1), Semantics::Parikh));
        assert_eq!(
            inst.validate(),
            vec![Diagnostic::ProtectableNotInAlphabet { event: "zz".into() }]
        );
    }

    #[test]
    fn clearance_parikh_vs_indicator() {
        let mut b = LabeledPetriNet::builder();
        let p = b.add_place("p").unwrap();
        let t1 = b.add_transition("t1", "a").unwrap();
        let t2 = b.add_transition("t2", "a").unwrap();
        b.set_output(t1, p, 1);
        b.set_output(t2, p, 1);
        let net = b.build().unwrap();
        let s = FiringSequence(vec![TransitionId(0), TransitionId(1)]);
        for (sem, expected) in [(Semantics::Parikh, 2u32), (Semantics::Indicator, 1)] {
            let mut inst = SppInstance::new(net.clone(), Marking::from_counts([0]));
            inst.protectable
                .insert("a".into(), ProtectableEvent::new("a", 1, ratio(1, 1), sem));
            let pol: Policy = ["a"].into_iter().collect();
            assert_eq!(inst.clearance_of_run(&pol, &s).unwrap(), Nat::from(expected));
            assert_eq!(inst.clearance_of_run(&Policy::empty(), &s).unwrap(), Nat::zero());
        }
    }

    #[test]
    fn violations_on_two_place_net() {
        let inst = two_place(Semantics::Parikh);
        let s = FiringSequence(vec![TransitionId(0)]);
        let pol: Policy = ["a"].into_iter().collect();
        assert_eq!(inst.run_violates(&pol, &s).unwrap(), None);
        let v = inst.run_violates(&Policy::empty(), &s).unwrap().unwrap();
        assert_eq!((v.prefix, inst.net.place_name(v.place)), (1, "ps"));
        assert_eq!(inst.run_violates(&Policy::empty(), &FiringSequence::empty()).unwrap(), None);
        let bad = FiringSequence(vec![TransitionId(0), TransitionId(0)]);
        assert!(inst.run_violates(&pol, &bad).is_err());
    }

    #[test]
    fn costs() {
        let mut inst = two_place(Semantics::Parikh);
        assert_eq!(inst.policy_cost(&Policy::empty()).unwrap(), Cost::zero());
        inst.protectable.get_mut("a").unwrap().cost = ratio(1, 2);
        let mut b = inst.net.to_builder();
        let t = b.add_transition("t2", "b").unwrap();
        b.set_input(PlaceId(0), t, 1);
        inst.net = b.build().unwrap();
        inst.protectable
            .insert("b".into(), ProtectableEvent::new("b", 1, ratio(1, 3), Semantics::Parikh));
        let pol: Policy = ["a", "b"].into_iter().collect();
        assert_eq!(inst.policy_cost(&pol).unwrap(), ratio(5, 6));
        let unknown: Policy = ["q"].into_iter().collect();
        assert!(matches!(inst.policy_cost(&unknown), Err(ModelError::NotProtectable(_))));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("0.5"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("10/4"), Some(ratio(5, 2)));
        assert_eq!(parse_rational("3"), Some(ratio(3, 1)));
        assert_eq!(parse_rational(".25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("."), None);
        assert_eq!(format_rational(&ratio(10, 4)), "5/2");
        assert_eq!(format_rational(&ratio(0, 1)), "0/1");
    }
}
