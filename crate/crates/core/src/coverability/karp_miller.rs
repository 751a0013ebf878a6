use std::collections::VecDeque;
use std::fmt;

use crate::net::{LabeledPetriNet, Marking, Nat};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OmegaNat {
    Finite(Nat),
    Omega,
}

impl OmegaNat {
    fn ge(&self, other: &OmegaNat) -> bool {
        match (self, other) {
            (OmegaNat::Omega, _) => true,
            (OmegaNat::Finite(_), OmegaNat::Omega) => false,
            (OmegaNat::Finite(a), OmegaNat::Finite(b)) => a >= b,
        }
    }

    fn ge_nat(&self, n: &Nat) -> bool {
        match self {
            OmegaNat::Omega => true,
            OmegaNat::Finite(a) => a >= n,
        }
    }
}

impl fmt::Display for OmegaNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaNat::Finite(n) => write!(f, "{n}"),
            OmegaNat::Omega => write!(f, "ω"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OmegaMarking(pub Vec<OmegaNat>);

impl OmegaMarking {
    pub fn from_marking(m: &Marking) -> Self {
        OmegaMarking(m.tokens().iter().cloned().map(OmegaNat::Finite).collect())
    }

    pub fn covers(&self, other: &OmegaMarking) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.ge(b))
    }

    pub fn covers_marking(&self, m: &Marking) -> bool {
        self.0.iter().zip(m.tokens()).all(|(a, b)| a.ge_nat(b))
    }

    pub fn has_omega(&self) -> bool {
        self.0.contains(&OmegaNat::Omega)
    }

    /// Finite marking if no coordinate is ω.
    pub fn to_marking(&self) -> Option<Marking> {
        self.0
            .iter()
            .map(|x| match x {
                OmegaNat::Finite(n) => Some(n.clone()),
                OmegaNat::Omega => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Marking::from_vec)
    }
}

impl fmt::Display for OmegaMarking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug)]
struct KmNode {
    marking: OmegaMarking,
    parent: Option<usize>,
}

/// Karp–Miller coverability tree.
#[derive(Clone, Debug)]
pub struct CoverabilityTree {
    nodes: Vec<KmNode>,
}

impl CoverabilityTree {
    pub fn markings(&self) -> impl Iterator<Item = &OmegaMarking> {
        self.nodes.iter().map(|n| &n.marking)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Is some reachable marking `>= target`?
    pub fn covers(&self, target: &Marking) -> bool {
        self.markings().any(|m| m.covers_marking(target))
    }

    pub fn has_omega(&self) -> bool {
        self.markings().any(OmegaMarking::has_omega)
    }
}

fn enabled(net: &LabeledPetriNet, m: &OmegaMarking, t: crate::net::TransitionId) -> bool {
    m.0.iter()
        .zip(net.pre_vector(t))
        .all(|(x, &w)| x.ge_nat(&Nat::from(w)))
}

fn fire(net: &LabeledPetriNet, m: &OmegaMarking, t: crate::net::TransitionId) -> OmegaMarking {
    let pre = net.pre_vector(t);
    let post = net.post_vector(t);
    OmegaMarking(
        m.0.iter()
            .enumerate()
            .map(|(p, x)| match x {
                OmegaNat::Omega => OmegaNat::Omega,
                OmegaNat::Finite(n) => OmegaNat::Finite(n - pre[p] + post[p]),
            })
            .collect(),
    )
}

/// Builds the tree breadth-first; `None` once more than `max_nodes` nodes exist.
pub fn karp_miller(net: &LabeledPetriNet, m0: &Marking, max_nodes: usize) -> Option<CoverabilityTree> {
    let mut nodes = vec![KmNode {
        marking: OmegaMarking::from_marking(m0),
        parent: None,
    }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for t in net.transitions() {
            if !enabled(net, &nodes[idx].marking, t) {
                continue;
            }
            let mut succ = fire(net, &nodes[idx].marking, t);
            // accelerate against strictly smaller ancestors until stable
            loop {
                let mut changed = false;
                let mut anc = Some(idx);
                while let Some(a) = anc {
                    let am = &nodes[a].marking;
                    if succ.covers(am) && *am != succ {
                        for (x, y) in succ.0.iter_mut().zip(&am.0) {
                            if *x != OmegaNat::Omega && !y.ge(x) {
                                *x = OmegaNat::Omega;
                                changed = true;
                            }
                        }
                    }
                    anc = nodes[a].parent;
                }
                if !changed {
                    break;
                }
            }
            let mut anc = Some(idx);
            let mut repeats = false;
            while let Some(a) = anc {
                if nodes[a].marking == succ {
                    repeats = true;
                    break;
                }
                anc = nodes[a].parent;
            }
            let j = nodes.len();
            nodes.push(KmNode {
                marking: succ,
                parent: Some(idx),
            });
            if nodes.len() > max_nodes {
                return None;
            }
            if !repeats {
                queue.push_back(j);
            }
        }
    }
    Some(CoverabilityTree { nodes })
}
