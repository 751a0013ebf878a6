use std::collections::{HashMap, VecDeque};

use crate::net::{FiringSequence, LabeledPetriNet, Marking, Nat, TransitionId};

/// Breadth-first reachability truncated by a per-place token bound and a
/// depth bound.
#[derive(Clone, Debug)]
pub struct Exploration {
    /// Reached markings in discovery order.
    pub markings: Vec<Marking>,
    /// True iff nothing was cut off; then `markings` is the exact reachability set.
    pub complete: bool,
    index: HashMap<Marking, usize>,
    parent: Vec<Option<(usize, TransitionId)>>,
}

impl Exploration {
    pub fn contains(&self, m: &Marking) -> bool {
        self.index.contains_key(m)
    }

    pub fn any_covers(&self, target: &Marking) -> Option<&Marking> {
        self.markings.iter().find(|m| m.covers(target))
    }

    /// Shortest firing sequence (in BFS order) reaching `m`.
    pub fn path_to(&self, m: &Marking) -> Option<FiringSequence> {
        let mut idx = *self.index.get(m)?;
        let mut steps = Vec::new();
        while let Some((prev, t)) = self.parent[idx] {
            steps.push(t);
            idx = prev;
        }
        steps.reverse();
        Some(FiringSequence(steps))
    }
}

pub fn bounded_explore(net: &LabeledPetriNet, m0: &Marking, bound: u64, depth: usize) -> Exploration {
    let bound = Nat::from(bound);
    let mut ex = Exploration {
        markings: vec![m0.clone()],
        complete: true,
        index: HashMap::from([(m0.clone(), 0)]),
        parent: vec![None],
    };
    if m0.tokens().iter().any(|n| *n > bound) {
        ex.complete = false;
        return ex;
    }
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((idx, d)) = queue.pop_front() {
        for t in net.transitions() {
            let cur = &ex.markings[idx];
            if !net.enabled(cur, t).expect("dimensioned marking") {
                continue;
            }
            let next = net.fire_unchecked(cur, t);
            if ex.index.contains_key(&next) {
                continue;
            }
            if d == depth || next.tokens().iter().any(|n| *n > bound) {
                ex.complete = false;
                continue;
            }
            let j = ex.markings.len();
            ex.index.insert(next.clone(), j);
            ex.markings.push(next);
            ex.parent.push(Some((idx, t)));
            queue.push_back((j, d + 1));
        }
    }
    ex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safe_cycle_is_complete() {
        let mut b = LabeledPetriNet::builder();
        let p = b.add_place("p").unwrap();
        let q = b.add_place("q").unwrap();
        let t = b.add_transition("t", "a").unwrap();
        let u = b.add_transition("u", "b").unwrap();
        b.set_input(p, t, 1);
        b.set_output(t, q, 1);
        b.set_input(q, u, 1);
        b.set_output(u, p, 1);
        let n = b.build().unwrap();
        let ex = bounded_explore(&n, &Marking::from_counts([1, 0]), 1, 10);
        assert!(ex.complete);
        assert_eq!(ex.markings.len(), 2);
        let w = ex.path_to(&Marking::from_counts([0, 1])).unwrap();
        assert_eq!(n.sequence_names(&w), ["t"]);
    }

    #[test]
    fn source_is_truncated() {
        let mut b = LabeledPetriNet::builder();
        let p = b.add_place("p").unwrap();
        let t = b.add_transition("src", "a").unwrap();
        b.set_output(t, p, 1);
        let n = b.build().unwrap();
        let ex = bounded_explore(&n, &Marking::zeros(1), 3, 100);
        assert!(!ex.complete);
        assert_eq!(ex.markings.len(), 4);
        let ex = bounded_explore(&n, &Marking::zeros(1), 100, 2);
        assert!(!ex.complete);
        assert_eq!(ex.markings.len(), 3);
    }
}
