//! Coverability for plain nets.
//!
//! [`backward_coverable`] is the decision engine used by validity checking.
//! [`karp_miller`] and [`bounded_explore`] are independent engines used to
//! cross-check it.

mod backward;
mod explore;
mod karp_miller;

pub use backward::{backward_coverable, backward_fixpoint, Fixpoint};
pub use explore::{bounded_explore, Exploration};
pub use karp_miller::{karp_miller, CoverabilityTree, OmegaMarking, OmegaNat};

use num_traits::Zero;

use crate::error::NetError;
use crate::net::{FiringSequence, LabeledPetriNet, Marking, Nat, PlaceId, TransitionId};

/// Default cap on basis elements or tree nodes before giving up.
pub const DEFAULT_MAX_NODES: usize = 1_000_000;

/// Finite antichain of minimal markings; denotes its upward closure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpwardBasis {
    elements: Vec<Marking>,
}

impl UpwardBasis {
    pub fn new<I: IntoIterator<Item = Marking>>(markings: I) -> Self {
        let mut basis = UpwardBasis::default();
        let mut sorted: Vec<Marking> = markings.into_iter().collect();
        sorted.sort();
        for m in sorted {
            basis.insert(m);
        }
        basis
    }

    pub fn elements(&self) -> &[Marking] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Membership in the upward closure.
    pub fn contains(&self, m: &Marking) -> bool {
        self.elements.iter().any(|b| m.covers(b))
    }

    /// Adds `m` unless already covered, dropping elements it dominates.
    pub fn insert(&mut self, m: Marking) -> bool {
        if self.contains(&m) {
            return false;
        }
        self.elements.retain(|b| !b.covers(&m));
        self.elements.push(m);
        true
    }

    pub fn is_antichain(&self) -> bool {
        self.elements.iter().enumerate().all(|(i, a)| {
            self.elements
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.covers(b))
        })
    }
}

/// Places whose token sum is the same in every reachable marking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservedGroup {
    places: Vec<PlaceId>,
    total: Nat,
}

impl ConservedGroup {
    /// Checks structurally that every transition preserves the sum over
    /// `places`; the total is read off the initial marking.
    pub fn new(net: &LabeledPetriNet, initial: &Marking, places: Vec<PlaceId>) -> Option<Self> {
        let conserved = net.transitions().all(|t| {
            let consumed: u64 = places.iter().map(|&p| net.input_weight(p, t)).sum();
            let produced: u64 = places.iter().map(|&p| net.output_weight(t, p)).sum();
            consumed == produced
        });
        if !conserved {
            return None;
        }
        let total = places.iter().map(|&p| initial[p].clone()).sum();
        Some(ConservedGroup { places, total })
    }

    /// True if no reachable marking can cover `m`.
    pub fn excludes(&self, m: &Marking) -> bool {
        let demand: Nat = self.places.iter().map(|&p| m[p].clone()).sum();
        demand > self.total
    }
}

/// Can some marking of the target's upward closure be reached from `initial`?
#[derive(Clone, Debug)]
pub struct CoverabilityQuery<'a> {
    pub net: &'a LabeledPetriNet,
    pub initial: Marking,
    pub target: UpwardBasis,
    /// Optional pruning hints; each must be a genuine invariant.
    pub conserved: Vec<ConservedGroup>,
    pub max_nodes: usize,
}

impl<'a> CoverabilityQuery<'a> {
    pub fn new(net: &'a LabeledPetriNet, initial: Marking, target: UpwardBasis) -> Result<Self, NetError> {
        let m = net.num_places();
        for x in std::iter::once(&initial).chain(target.elements()) {
            if x.len() != m {
                return Err(NetError::DimensionMismatch {
                    expected: m,
                    found: x.len(),
                });
            }
        }
        Ok(CoverabilityQuery {
            net,
            initial,
            target,
            conserved: Vec::new(),
            max_nodes: DEFAULT_MAX_NODES,
        })
    }

    pub fn with_max_nodes(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    /// Registers a conserved group if the net really conserves it.
    pub fn with_conserved(mut self, places: Vec<PlaceId>) -> Self {
        if let Some(g) = ConservedGroup::new(self.net, &self.initial, places) {
            self.conserved.push(g);
        }
        self
    }

    pub(crate) fn excluded(&self, m: &Marking) -> bool {
        self.conserved.iter().any(|g| g.excludes(m))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverability {
    Coverable(FiringSequence),
    NotCoverable,
    ResourceExhausted,
}

impl Coverability {
    pub fn is_coverable(&self) -> bool {
        matches!(self, Coverability::Coverable(_))
    }
}

/// Minimal predecessor of the upward closure of `b` through `t`:
/// `pred(p) = max(F(p,t), b(p) + F(p,t) - F(t,p))`.
pub fn pre_image(net: &LabeledPetriNet, b: &Marking, t: TransitionId) -> Marking {
    let tokens = b
        .tokens()
        .iter()
        .zip(net.pre_vector(t).iter().zip(net.post_vector(t)))
        .map(|(need, (&i, &o))| {
            let shifted = need + i;
            let shifted = if shifted >= Nat::from(o) { shifted - o } else { Nat::zero() };
            shifted.max(Nat::from(i))
        })
        .collect();
    Marking::from_vec(tokens)
}

/// One predecessor per transition, in transition order.
pub fn pre_step(net: &LabeledPetriNet, b: &Marking) -> Vec<(TransitionId, Marking)> {
    net.transitions().map(|t| (t, pre_image(net, b, t))).collect()
}

/// Parses `p>=k` / `p≥k` / `p=k` entries separated by commas into a marking.
pub fn parse_target(net: &LabeledPetriNet, text: &str) -> Result<Marking, String> {
    let mut m = Marking::zeros(net.num_places());
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = ["≥", ">=", "="]
            .iter()
            .find_map(|sep| item.split_once(sep))
            .ok_or_else(|| format!("malformed target entry `{item}`"))?;
        let p = net
            .place(name.trim())
            .ok_or_else(|| format!("unknown place `{}`", name.trim()))?;
        let k: Nat = value
            .trim()
            .parse()
            .map_err(|_| format!("malformed count in `{item}`"))?;
        m.set(p, k);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_net() -> LabeledPetriNet {
        let mut b = LabeledPetriNet::builder();
        let p1 = b.add_place("p1").unwrap();
        let p2 = b.add_place("p2").unwrap();
        let t = b.add_transition("t", "a").unwrap();
        b.set_input(p1, t, 1);
        b.set_output(t, p2, 1);
        b.build().unwrap()
    }

    #[test]
    fn pre_step_examples() {
        let n = chain_net();
        let pred = pre_step(&n, &Marking::from_counts([0, 1]));
        assert_eq!(pred, vec![(TransitionId(0), Marking::from_counts([1, 0]))]);

        let mut b = LabeledPetriNet::builder();
        let p = b.add_place("p").unwrap();
        let t = b.add_transition("t", "a").unwrap();
        b.set_input(p, t, 1);
        b.set_output(t, p, 1);
        let n = b.build().unwrap();
        assert_eq!(pre_image(&n, &Marking::from_counts([1]), t), Marking::from_counts([1]));

        let mut b = LabeledPetriNet::builder();
        let p1 = b.add_place("p1").unwrap();
        let p2 = b.add_place("p2").unwrap();
        let t = b.add_transition("t", "a").unwrap();
        b.set_input(p1, t, 2);
        b.set_output(t, p2, 3);
        let n = b.build().unwrap();
        let target = Marking::from_counts([0, 4]);
        let pred = pre_image(&n, &target, t);
        assert_eq!(pred, Marking::from_counts([2, 1]));
        assert!(n.fire(&pred, t).unwrap().covers(&target));
    }

    #[test]
    fn basis_minimization() {
        let mut basis = UpwardBasis::new([
            Marking::from_counts([1, 1]),
            Marking::from_counts([2, 1]),
            Marking::from_counts([0, 3]),
        ]);
        assert_eq!(basis.len(), 2);
        assert!(basis.is_antichain());
        assert!(basis.insert(Marking::from_counts([1, 0])));
        assert_eq!(basis.elements().len(), 2);
        assert!(!basis.insert(Marking::from_counts([5, 5])));
        assert!(basis.contains(&Marking::from_counts([1, 0])));
        assert!(!basis.contains(&Marking::from_counts([0, 2])));
    }

    #[test]
    fn conserved_group_detection() {
        let n = chain_net();
        let init = Marking::from_counts([1, 0]);
        let g = ConservedGroup::new(&n, &init, vec![PlaceId(0), PlaceId(1)]).unwrap();
        assert!(g.excludes(&Marking::from_counts([1, 1])));
        assert!(!g.excludes(&Marking::from_counts([0, 1])));
        assert!(ConservedGroup::new(&n, &init, vec![PlaceId(0)]).is_none());
    }

    #[test]
    fn target_parsing() {
        let n = chain_net();
        assert_eq!(parse_target(&n, "p2>=3").unwrap(), Marking::from_counts([0, 3]));
        assert_eq!(parse_target(&n, "p1≥1, p2=2").unwrap(), Marking::from_counts([1, 2]));
        assert!(parse_target(&n, "q>=1").is_err());
        assert!(parse_target(&n, "p1").is_err());
    }
}
