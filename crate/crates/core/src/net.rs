//! Labeled Petri nets and the token game.
//!
//! A [`LabeledPetriNet`] is immutable once built. Places, transitions and
//! events are addressed by dense indices assigned in declaration order;
//! names are kept for I/O and diagnostics.

use std::collections::HashMap;
use std::fmt;
use std::ops::Index;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::NetError;

/// Arbitrary-precision natural number used for token counts.
pub type Nat = BigUint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub usize);

/// Token vector indexed by place.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<Nat>);

impl Marking {
    pub fn zeros(len: usize) -> Self {
        Marking(vec![Nat::zero(); len])
    }

    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        Marking(counts.into_iter().map(Nat::from).collect())
    }

    pub fn from_vec(tokens: Vec<Nat>) -> Self {
        Marking(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Nat] {
        &self.0
    }

    pub fn set(&mut self, place: PlaceId, value: Nat) {
        self.0[place.0] = value;
    }

    pub fn add(&mut self, place: PlaceId, amount: u64) {
        self.0[place.0] += amount;
    }

    /// Componentwise `self >= other`.
    pub fn covers(&self, other: &Marking) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// Extend with zero-marked places.
    pub fn extended(&self, extra: usize) -> Marking {
        let mut tokens = self.0.clone();
        tokens.extend(std::iter::repeat_with(Nat::zero).take(extra));
        Marking(tokens)
    }

    pub fn into_vec(self) -> Vec<Nat> {
        self.0
    }
}

impl Index<PlaceId> for Marking {
    type Output = Nat;

    fn index(&self, place: PlaceId) -> &Nat {
        &self.0[place.0]
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// A finite sequence of transitions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiringSequence(pub Vec<TransitionId>);

impl FiringSequence {
    pub fn empty() -> Self {
        FiringSequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[TransitionId] {
        &self.0
    }

    pub fn prefix(&self, len: usize) -> FiringSequence {
        FiringSequence(self.0[..len].to_vec())
    }

    pub fn concat(&self, other: &FiringSequence) -> FiringSequence {
        let mut steps = self.0.clone();
        steps.extend_from_slice(&other.0);
        FiringSequence(steps)
    }
}

impl From<Vec<TransitionId>> for FiringSequence {
    fn from(steps: Vec<TransitionId>) -> Self {
        FiringSequence(steps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPetriNet {
    places: Vec<String>,
    transitions: Vec<String>,
    // pre[t][p] = F(p, t), post[t][p] = F(t, p)
    pre: Vec<Vec<u64>>,
    post: Vec<Vec<u64>>,
    alphabet: Vec<String>,
    labeling: Vec<EventId>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
    event_index: HashMap<String, EventId>,
}

impl LabeledPetriNet {
    pub fn builder() -> NetBuilder {
        NetBuilder::default()
    }

    /// Builder pre-populated with a copy of this net, for constructions that
    /// extend an existing net.
    pub fn to_builder(&self) -> NetBuilder {
        NetBuilder {
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            pre: self.pre.iter().map(|r| r.clone()).collect(),
            post: self.post.iter().map(|r| r.clone()).collect(),
            alphabet: self.alphabet.clone(),
            labeling: self.labeling.clone(),
            place_index: self.place_index.clone(),
            transition_index: self.transition_index.clone(),
            event_index: self.event_index.clone(),
        }
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> impl ExactSizeIterator<Item = PlaceId> {
        (0..self.places.len()).map(PlaceId)
    }

    pub fn transitions(&self) -> impl ExactSizeIterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = EventId> {
        (0..self.alphabet.len()).map(EventId)
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.0]
    }

    pub fn transition_name(&self, t: TransitionId) -> &str {
        &self.transitions[t.0]
    }

    pub fn event_name(&self, e: EventId) -> &str {
        &self.alphabet[e.0]
    }

    pub fn place(&self, name: &str) -> Option<PlaceId> {
        self.place_index.get(name).copied()
    }

    pub fn transition(&self, name: &str) -> Option<TransitionId> {
        self.transition_index.get(name).copied()
    }

    pub fn event(&self, name: &str) -> Option<EventId> {
        self.event_index.get(name).copied()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn place_names(&self) -> &[String] {
        &self.places
    }

    pub fn transition_names(&self) -> &[String] {
        &self.transitions
    }

    pub fn label(&self, t: TransitionId) -> EventId {
        self.labeling[t.0]
    }

    pub fn label_name(&self, t: TransitionId) -> &str {
        self.event_name(self.label(t))
    }

    /// `F(p, t)`.
    pub fn input_weight(&self, p: PlaceId, t: TransitionId) -> u64 {
        self.pre[t.0][p.0]
    }

    /// `F(t, p)`.
    pub fn output_weight(&self, t: TransitionId, p: PlaceId) -> u64 {
        self.post[t.0][p.0]
    }

    pub fn pre_vector(&self, t: TransitionId) -> &[u64] {
        &self.pre[t.0]
    }

    pub fn post_vector(&self, t: TransitionId) -> &[u64] {
        &self.post[t.0]
    }

    /// Transitions carrying the given label, in index order.
    pub fn transitions_labeled(&self, e: EventId) -> impl Iterator<Item = TransitionId> + '_ {
        self.transitions().filter(move |&t| self.labeling[t.0] == e)
    }

    pub fn transition_by_name(&self, name: &str) -> Result<TransitionId, NetError> {
        self.transition(name)
            .ok_or_else(|| NetError::UnknownTransition(name.to_string()))
    }

    pub fn place_by_name(&self, name: &str) -> Result<PlaceId, NetError> {
        self.place(name)
            .ok_or_else(|| NetError::UnknownPlace(name.to_string()))
    }

    fn check_transition(&self, t: TransitionId) -> Result<(), NetError> {
        if t.0 < self.transitions.len() {
            Ok(())
        } else {
            Err(NetError::UnknownTransition(format!("#{}", t.0)))
        }
    }

    fn check_marking(&self, m: &Marking) -> Result<(), NetError> {
        if m.len() == self.places.len() {
            Ok(())
        } else {
            Err(NetError::DimensionMismatch {
                expected: self.places.len(),
                found: m.len(),
            })
        }
    }

    /// First place that lacks tokens for `t`, if any.
    fn blocking_place(&self, m: &Marking, t: TransitionId) -> Option<PlaceId> {
        self.pre[t.0]
            .iter()
            .zip(m.tokens())
            .position(|(&w, n)| w > 0 && *n < Nat::from(w))
            .map(PlaceId)
    }

    pub fn enabled(&self, m: &Marking, t: TransitionId) -> Result<bool, NetError> {
        self.check_transition(t)?;
        self.check_marking(m)?;
        Ok(self.blocking_place(m, t).is_none())
    }

    /// `M'(p) = M(p) - F(p,t) + F(t,p)`.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, NetError> {
        self.check_transition(t)?;
        self.check_marking(m)?;
        if let Some(p) = self.blocking_place(m, t) {
            return Err(NetError::NotEnabled {
                transition: self.transition_name(t).to_string(),
                place: self.place_name(p).to_string(),
            });
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: TransitionId) -> Marking {
        let tokens = m
            .tokens()
            .iter()
            .zip(self.pre[t.0].iter().zip(&self.post[t.0]))
            .map(|(n, (&i, &o))| n - i + o)
            .collect();
        Marking(tokens)
    }

    /// All intermediate markings `m0, m1, ..., mk` of the run.
    pub fn fire_sequence(&self, m: &Marking, s: &FiringSequence) -> Result<Vec<Marking>, NetError> {
        self.check_marking(m)?;
        let mut out = Vec::with_capacity(s.len() + 1);
        out.push(m.clone());
        for (index, &t) in s.steps().iter().enumerate() {
            self.check_transition(t)?;
            let cur = out.last().expect("nonempty");
            if let Some(p) = self.blocking_place(cur, t) {
                return Err(NetError::StepDisabled {
                    index,
                    transition: self.transition_name(t).to_string(),
                    place: self.place_name(p).to_string(),
                });
            }
            let next = self.fire_unchecked(cur, t);
            out.push(next);
        }
        Ok(out)
    }

    pub fn label_word(&self, s: &FiringSequence) -> Vec<EventId> {
        s.steps().iter().map(|&t| self.labeling[t.0]).collect()
    }

    pub fn sequence_names(&self, s: &FiringSequence) -> Vec<&str> {
        s.steps().iter().map(|&t| self.transition_name(t)).collect()
    }

    pub fn parse_sequence<'a, I>(&self, names: I) -> Result<FiringSequence, NetError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        names
            .into_iter()
            .map(|n| self.transition_by_name(n))
            .collect::<Result<Vec<_>, _>>()
            .map(FiringSequence)
    }

    /// Net with identical structure where every transition is labeled by its
    /// own name.
    pub fn with_identity_labels(&self) -> LabeledPetriNet {
        let mut b = NetBuilder::default();
        for name in &self.places {
            b.add_place(name).expect("names unique in source");
        }
        for (i, name) in self.transitions.iter().enumerate() {
            let t = b.add_transition(name, name).expect("names unique in source");
            for p in 0..self.places.len() {
                b.set_input(PlaceId(p), t, self.pre[i][p]);
                b.set_output(t, PlaceId(p), self.post[i][p]);
            }
        }
        b.build().expect("source net is well formed")
    }
}

/// Incremental constructor for [`LabeledPetriNet`].
#[derive(Clone, Debug, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<String>,
    pre: Vec<Vec<u64>>,
    post: Vec<Vec<u64>>,
    alphabet: Vec<String>,
    labeling: Vec<EventId>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
    event_index: HashMap<String, EventId>,
}

impl NetBuilder {
    fn check_fresh(&self, name: &str) -> Result<(), NetError> {
        if name.is_empty() {
            return Err(NetError::EmptyName);
        }
        if self.place_index.contains_key(name) || self.transition_index.contains_key(name) {
            return Err(NetError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    pub fn has_name(&self, name: &str) -> bool {
        self.place_index.contains_key(name)
            || self.transition_index.contains_key(name)
            || self.event_index.contains_key(name)
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn add_place(&mut self, name: &str) -> Result<PlaceId, NetError> {
        self.check_fresh(name)?;
        let id = PlaceId(self.places.len());
        self.places.push(name.to_string());
        self.place_index.insert(name.to_string(), id);
        for row in self.pre.iter_mut().chain(self.post.iter_mut()) {
            row.push(0);
        }
        Ok(id)
    }

    /// Registers an event; idempotent.
    pub fn add_event(&mut self, name: &str) -> Result<EventId, NetError> {
        if name.is_empty() {
            return Err(NetError::EmptyName);
        }
        if let Some(&e) = self.event_index.get(name) {
            return Ok(e);
        }
        let id = EventId(self.alphabet.len());
        self.alphabet.push(name.to_string());
        self.event_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_transition(&mut self, name: &str, label: &str) -> Result<TransitionId, NetError> {
        self.check_fresh(name)?;
        let e = self.add_event(label)?;
        let id = TransitionId(self.transitions.len());
        self.transitions.push(name.to_string());
        self.transition_index.insert(name.to_string(), id);
        self.pre.push(vec![0; self.places.len()]);
        self.post.push(vec![0; self.places.len()]);
        self.labeling.push(e);
        Ok(id)
    }

    pub fn place(&self, name: &str) -> Option<PlaceId> {
        self.place_index.get(name).copied()
    }

    pub fn transition(&self, name: &str) -> Option<TransitionId> {
        self.transition_index.get(name).copied()
    }

    pub fn set_input(&mut self, p: PlaceId, t: TransitionId, weight: u64) {
        self.pre[t.0][p.0] = weight;
    }

    pub fn set_output(&mut self, t: TransitionId, p: PlaceId, weight: u64) {
        self.post[t.0][p.0] = weight;
    }

    pub fn input(&self, p: PlaceId, t: TransitionId) -> u64 {
        self.pre[t.0][p.0]
    }

    pub fn output(&self, t: TransitionId, p: PlaceId) -> u64 {
        self.post[t.0][p.0]
    }

    pub fn relabel(&mut self, t: TransitionId, label: &str) -> Result<(), NetError> {
        let e = self.add_event(label)?;
        self.labeling[t.0] = e;
        Ok(())
    }

    /// Drops events that label no transition, keeping at least one event.
    pub fn prune_unused_events(&mut self, keep: &[&str]) {
        let used: Vec<bool> = (0..self.alphabet.len())
            .map(|e| {
                self.labeling.contains(&EventId(e)) || keep.contains(&self.alphabet[e].as_str())
            })
            .collect();
        if used.iter().all(|&u| u) || !used.iter().any(|&u| u) {
            return;
        }
        let mut remap = vec![None; self.alphabet.len()];
        let mut alphabet = Vec::new();
        for (e, name) in self.alphabet.iter().enumerate() {
            if used[e] {
                remap[e] = Some(EventId(alphabet.len()));
                alphabet.push(name.clone());
            }
        }
        for l in &mut self.labeling {
            *l = remap[l.0].expect("label in use");
        }
        self.event_index = alphabet
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), EventId(i)))
            .collect();
        self.alphabet = alphabet;
    }

    /// Picks `base##{role}{k}` for the smallest `k` not yet taken.
    pub fn fresh_name(&self, base: &str, role: &str) -> String {
        (0..)
            .map(|k| format!("{base}##{role}{k}"))
            .find(|n| !self.has_name(n))
            .expect("unbounded index space")
    }

    pub fn build(self) -> Result<LabeledPetriNet, NetError> {
        if self.places.is_empty() {
            return Err(NetError::NoPlaces);
        }
        if self.transitions.is_empty() {
            return Err(NetError::NoTransitions);
        }
        if self.alphabet.is_empty() {
            return Err(NetError::EmptyAlphabet);
        }
        Ok(LabeledPetriNet {
            places: self.places,
            transitions: self.transitions,
            pre: self.pre,
            post: self.post,
            alphabet: self.alphabet,
            labeling: self.labeling,
            place_index: self.place_index,
            transition_index: self.transition_index,
            event_index: self.event_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(arcs: &[(&str, &str, u64)], places: &[&str], transitions: &[(&str, &str)]) -> LabeledPetriNet {
        let mut b = LabeledPetriNet::builder();
        for p in places {
            b.add_place(p).unwrap();
        }
        for (t, l) in transitions {
            b.add_transition(t, l).unwrap();
        }
        for &(from, to, w) in arcs {
            match (b.place(from), b.transition(to)) {
                (Some(p), Some(t)) => b.set_input(p, t, w),
                _ => {
                    let t = b.transition(from).unwrap();
                    let p = b.place(to).unwrap();
                    b.set_output(t, p, w)
                }
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn enabled_thresholds() {
        let n = net(&[("p1", "t", 1)], &["p1"], &[("t", "a")]);
        let t = n.transition("t").unwrap();
        assert!(n.enabled(&Marking::from_counts([1]), t).unwrap());
        let n = net(&[("p1", "t", 2)], &["p1"], &[("t", "a")]);
        assert!(!n.enabled(&Marking::from_counts([1]), t).unwrap());
        let n = net(&[("t", "p1", 1)], &["p1"], &[("t", "a")]);
        assert!(n.enabled(&Marking::from_counts([0]), t).unwrap());
        assert!(matches!(
            n.enabled(&Marking::from_counts([0]), TransitionId(7)),
            Err(NetError::UnknownTransition(_))
        ));
    }

    #[test]
    fn firing_equation() {
        let n = net(&[("p1", "t", 1), ("t", "p2", 1)], &["p1", "p2"], &[("t", "a")]);
        let t = TransitionId(0);
        assert_eq!(n.fire(&Marking::from_counts([1, 0]), t).unwrap(), Marking::from_counts([0, 1]));

        let n = net(&[("p", "t", 1), ("t", "p", 1)], &["p"], &[("t", "a")]);
        assert_eq!(n.fire(&Marking::from_counts([1]), t).unwrap(), Marking::from_counts([1]));

        let n = net(
            &[("p1", "t", 2), ("t", "p1", 1), ("t", "p2", 3)],
            &["p1", "p2"],
            &[("t", "a")],
        );
        assert_eq!(n.fire(&Marking::from_counts([2, 0]), t).unwrap(), Marking::from_counts([1, 3]));
        match n.fire(&Marking::from_counts([1, 0]), t) {
            Err(NetError::NotEnabled { place, .. }) => assert_eq!(place, "p1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sequences() {
        let n = net(&[("p", "t", 1)], &["p"], &[("t", "a")]);
        let m = Marking::from_counts([1]);
        assert_eq!(n.fire_sequence(&m, &FiringSequence::empty()).unwrap(), vec![m.clone()]);
        let s = FiringSequence(vec![TransitionId(0), TransitionId(0)]);
        match n.fire_sequence(&m, &s) {
            Err(NetError::StepDisabled { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels() {
        let n = net(&[], &["p"], &[("t1", "a"), ("t2", "a")]);
        assert!(n.label_word(&FiringSequence::empty()).is_empty());
        let w = n.label_word(&FiringSequence(vec![TransitionId(0), TransitionId(1)]));
        let names: Vec<_> = w.iter().map(|&e| n.event_name(e)).collect();
        assert_eq!(names, ["a", "a"]);
    }

    #[test]
    fn big_token_counts_do_not_overflow() {
        let n = net(&[("t", "p", u64::MAX)], &["p"], &[("t", "a")]);
        let mut m = Marking::from_counts([u64::MAX]);
        for _ in 0..3 {
            m = n.fire(&m, TransitionId(0)).unwrap();
        }
        assert_eq!(m[PlaceId(0)], Nat::from(u64::MAX) * 4u32);
    }

    #[test]
    fn builder_rejects_duplicates() {
        let mut b = LabeledPetriNet::builder();
        b.add_place("x").unwrap();
        assert!(matches!(b.add_transition("x", "a"), Err(NetError::DuplicateName(_))));
        assert!(matches!(LabeledPetriNet::builder().build(), Err(NetError::NoPlaces)));
        assert_eq!(b.fresh_name("x", "ctrl"), "x##ctrl0");
    }
}
