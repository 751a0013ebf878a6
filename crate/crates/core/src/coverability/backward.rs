use super::{pre_image, Coverability, CoverabilityQuery, UpwardBasis};
use crate::net::{FiringSequence, Marking, TransitionId};

struct Node {
    marking: Marking,
    // transition leading towards the target, and the node it reaches
    via: Option<(TransitionId, usize)>,
}

/// Result of running the backward saturation to completion.
#[derive(Clone, Debug)]
pub struct Fixpoint {
    /// Minimal markings from which the target is coverable.
    pub basis: UpwardBasis,
    pub iterations: usize,
}

enum Stop {
    Found(usize),
    Saturated,
    Exhausted,
}

struct Search<'q, 'a> {
    query: &'q CoverabilityQuery<'a>,
    nodes: Vec<Node>,
    active: Vec<usize>,
    iterations: usize,
}

impl<'q, 'a> Search<'q, 'a> {
    fn new(query: &'q CoverabilityQuery<'a>) -> Self {
        Search {
            query,
            nodes: Vec::new(),
            active: Vec::new(),
            iterations: 0,
        }
    }

    fn is_covered(&self, m: &Marking) -> bool {
        self.active.iter().any(|&i| m.covers(&self.nodes[i].marking))
    }

    fn insert(&mut self, marking: Marking, via: Option<(TransitionId, usize)>) -> Option<usize> {
        if self.query.excluded(&marking) || self.is_covered(&marking) {
            return None;
        }
        let nodes = &self.nodes;
        self.active.retain(|&i| !nodes[i].marking.covers(&marking));
        let idx = self.nodes.len();
        self.nodes.push(Node { marking, via });
        self.active.push(idx);
        Some(idx)
    }

    fn run(&mut self, stop_at_initial: bool) -> Stop {
        let initial = &self.query.initial;
        let mut frontier = Vec::new();
        let mut targets = self.query.target.elements().to_vec();
        targets.sort();
        for m in targets {
            if let Some(i) = self.insert(m, None) {
                frontier.push(i);
            }
        }
        if stop_at_initial {
            if let Some(&i) = self.active.iter().find(|&&i| initial.covers(&self.nodes[i].marking)) {
                return Stop::Found(i);
            }
        }
        while !frontier.is_empty() {
            self.iterations += 1;
            frontier.sort_by(|&a, &b| self.nodes[a].marking.cmp(&self.nodes[b].marking));
            let mut next = Vec::new();
            for idx in frontier {
                // superseded by a smaller element whose predecessors dominate ours
                if !self.active.contains(&idx) {
                    continue;
                }
                for t in self.query.net.transitions() {
                    let pred = pre_image(self.query.net, &self.nodes[idx].marking, t);
                    if let Some(new) = self.insert(pred, Some((t, idx))) {
                        if stop_at_initial && initial.covers(&self.nodes[new].marking) {
                            return Stop::Found(new);
                        }
                        if self.nodes.len() > self.query.max_nodes {
                            return Stop::Exhausted;
                        }
                        next.push(new);
                    }
                }
            }
            frontier = next;
        }
        Stop::Saturated
    }

    fn witness(&self, mut idx: usize) -> FiringSequence {
        let mut steps = Vec::new();
        while let Some((t, succ)) = self.nodes[idx].via {
            steps.push(t);
            idx = succ;
        }
        FiringSequence(steps)
    }
}

/// Backward coverability with early exit. A positive answer carries a
/// witness that has been replayed forward and checked to cover the target.
pub fn backward_coverable(query: &CoverabilityQuery<'_>) -> Coverability {
    let mut search = Search::new(query);
    match search.run(true) {
        Stop::Found(idx) => {
            let witness = search.witness(idx);
            let replay = query
                .net
                .fire_sequence(&query.initial, &witness)
                .expect("backward witness must replay");
            let last = replay.last().expect("nonempty replay");
            assert!(query.target.contains(last), "backward witness must cover the target");
            Coverability::Coverable(witness)
        }
        Stop::Saturated => Coverability::NotCoverable,
        Stop::Exhausted => Coverability::ResourceExhausted,
    }
}

/// Full backward saturation without early exit; `None` on budget exhaustion.
pub fn backward_fixpoint(query: &CoverabilityQuery<'_>) -> Option<Fixpoint> {
    let mut search = Search::new(query);
    match search.run(false) {
        Stop::Saturated => Some(Fixpoint {
            basis: UpwardBasis::new(search.active.iter().map(|&i| search.nodes[i].marking.clone())),
            iterations: search.iterations,
        }),
        Stop::Exhausted => None,
        Stop::Found(_) => unreachable!("early exit disabled"),
    }
}
