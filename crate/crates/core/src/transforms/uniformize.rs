//! Rewriting an instance so every protectable event grants one clearance unit.
//!
//! A transition whose protected label grants `k > 1` units becomes a chain of
//! `k` transitions. A control place, self-looped on every transition and
//! taken by the first link of a chain until its last link returns it, makes
//! each chain atomic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::Zero;

use crate::error::TransformError;
use crate::model::{Cost, Policy, ProtectableEvent, Semantics, SppInstance};
use crate::net::{FiringSequence, LabeledPetriNet, NetBuilder, PlaceId, TransitionId};

/// How indicator events with clearance `k > 1` are split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IndicatorSplit {
    /// The first occurrence of the event in a run is simulated by a chain of
    /// `k` transitions carrying the event itself, now counted per occurrence;
    /// later occurrences carry a fresh unprotectable label. Guarded by a
    /// `first`/`other` place pair so the chain runs at most once per run.
    #[default]
    FirstOccurrence,
    /// A chain with `k` fresh indicator labels `a_1..a_k`, the whole cost on
    /// `a_1` and cost 0 on the rest. A policy may protect `a_2..a_k` for free,
    /// so optimal cost can drop below the source instance's.
    FreshLabels,
}

/// How one source transition is realized in the uniform net.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lift {
    Copy(TransitionId),
    Chain(Vec<TransitionId>),
    Gadget {
        event: String,
        first: Vec<TransitionId>,
        repeat: TransitionId,
    },
}

/// Bookkeeping relating a uniformized instance to its source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformCertificate {
    pub split: IndicatorSplit,
    pub control_place: Option<PlaceId>,
    /// Source protectable event → protectable events standing for it.
    /// Empty for events granting no clearance, which become unprotectable.
    pub event_map: BTreeMap<String, Vec<String>>,
    /// Uniform transition → source transition.
    pub origin: Vec<TransitionId>,
    /// Whether a uniform transition completes the simulation of its origin.
    pub completes: Vec<bool>,
    /// Source transition → realization.
    pub lift: Vec<Lift>,
    notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Uniformized {
    pub instance: SppInstance,
    pub certificate: UniformCertificate,
}

impl UniformCertificate {
    fn identity(inst: &SppInstance) -> Self {
        UniformCertificate {
            split: IndicatorSplit::default(),
            control_place: None,
            event_map: inst
                .protectable
                .keys()
                .map(|e| (e.clone(), vec![e.clone()]))
                .collect(),
            origin: inst.net.transitions().collect(),
            completes: vec![true; inst.net.num_transitions()],
            lift: inst.net.transitions().map(Lift::Copy).collect(),
            notes: vec!["all clearances already uniform; instance unchanged".into()],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.control_place.is_none() && self.event_map.iter().all(|(k, v)| v == std::slice::from_ref(k))
    }

    pub fn map_policy(&self, pol: &Policy) -> Policy {
        pol.events()
            .flat_map(|e| self.event_map.get(e).into_iter().flatten())
            .collect()
    }

    /// A uniform policy naming the first event of a split maps back to the
    /// source event.
    pub fn map_policy_back(&self, pol: &Policy) -> Policy {
        self.event_map
            .iter()
            .filter(|(_, v)| v.first().is_some_and(|first| pol.contains(first)))
            .map(|(k, _)| k)
            .collect()
    }

    /// Erases chain-internal steps.
    pub fn project_run(&self, s: &FiringSequence) -> FiringSequence {
        FiringSequence(
            s.steps()
                .iter()
                .filter(|t| self.completes[t.0])
                .map(|t| self.origin[t.0])
                .collect(),
        )
    }

    pub fn lift_run(&self, s: &FiringSequence) -> FiringSequence {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for t in s.steps() {
            match &self.lift[t.0] {
                Lift::Copy(u) => out.push(*u),
                Lift::Chain(chain) => out.extend_from_slice(chain),
                Lift::Gadget { event, first, repeat } => {
                    if seen.insert(event.as_str()) {
                        out.extend_from_slice(first);
                    } else {
                        out.push(*repeat);
                    }
                }
            }
        }
        FiringSequence(out)
    }

    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "indicator split: {:?}", self.split);
        for note in &self.notes {
            let _ = writeln!(out, "{note}");
        }
        out
    }
}

pub fn uniformize(inst: &SppInstance) -> Result<Uniformized, TransformError> {
    uniformize_with(inst, IndicatorSplit::default())
}

pub fn uniformize_with(inst: &SppInstance, split: IndicatorSplit) -> Result<Uniformized, TransformError> {
    inst.ensure_valid()?;
    if inst.protectable.values().all(|ev| ev.gamma == 1) {
        return Ok(Uniformized {
            instance: inst.clone(),
            certificate: UniformCertificate::identity(inst),
        });
    }
    let src = &inst.net;
    let multi = |label: &str| inst.protectable.get(label).filter(|ev| ev.gamma > 1);

    let mut b = LabeledPetriNet::builder();
    for p in src.places() {
        b.add_place(src.place_name(p))?;
    }
    for e in src.alphabet() {
        b.add_event(e)?;
    }
    let needs_ctrl = src.transitions().any(|t| multi(src.label_name(t)).is_some());
    let mut notes = Vec::new();
    let ctrl = if needs_ctrl {
        let name = b.fresh_name("uniform", "ctrl");
        notes.push(format!("control place {name}"));
        Some(b.add_place(&name)?)
    } else {
        None
    };
    let mut protectable = BTreeMap::new();
    let mut event_map = BTreeMap::new();
    let mut gadgets: BTreeMap<String, (PlaceId, PlaceId, String)> = BTreeMap::new();
    let mut split_events = Vec::new();
    let mut split_labels: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (name, ev) in &inst.protectable {
        let used = src.event(name).is_some_and(|e| src.transitions_labeled(e).next().is_some());
        match (ev.gamma, ev.semantics) {
            (0, _) => {
                event_map.insert(name.clone(), Vec::new());
                notes.push(format!("event {name}: grants no clearance, now unprotectable"));
            }
            (1, _) => {
                protectable.insert(name.clone(), ev.clone());
                event_map.insert(name.clone(), vec![name.clone()]);
            }
            (k, Semantics::Parikh) => {
                protectable.insert(name.clone(), ProtectableEvent::new(name, 1, ev.cost.clone(), Semantics::Parikh));
                event_map.insert(name.clone(), vec![name.clone()]);
                notes.push(format!("event {name}: parikh, each occurrence becomes a chain of {k}"));
            }
            (k, Semantics::Indicator) => match split {
                IndicatorSplit::FreshLabels => {
                    let mut labels = Vec::new();
                    for i in 0..k {
                        let l = b.fresh_name(name, "split");
                        b.add_event(&l)?;
                        let cost = if i == 0 { ev.cost.clone() } else { Cost::zero() };
                        protectable.insert(l.clone(), ProtectableEvent::new(&l, 1, cost, Semantics::Indicator));
                        labels.push(l);
                    }
                    notes.push(format!("event {name}: indicator, split into {}", labels.join(" ")));
                    event_map.insert(name.clone(), labels.clone());
                    split_labels.insert(name.clone(), labels);
                    split_events.push(name.clone());
                }
                IndicatorSplit::FirstOccurrence => {
                    protectable.insert(name.clone(), ProtectableEvent::new(name, 1, ev.cost.clone(), Semantics::Parikh));
                    event_map.insert(name.clone(), vec![name.clone()]);
                    if used {
                        let first = b.fresh_name(name, "first");
                        let first = b.add_place(&first)?;
                        let other = b.fresh_name(name, "other");
                        let other = b.add_place(&other)?;
                        let rep = b.fresh_name(name, "rep");
                        b.add_event(&rep)?;
                        notes.push(format!(
                            "event {name}: indicator, first occurrence becomes a chain of {k} counted per occurrence, repeats relabeled {rep}"
                        ));
                        gadgets.insert(name.clone(), (first, other, rep));
                    } else {
                        notes.push(format!("event {name}: indicator, labels no transition"));
                    }
                }
            },
        }
    }

    let mut origin = Vec::new();
    let mut completes = Vec::new();
    let mut lift = Vec::new();
    for t in src.transitions() {
        let label = src.label_name(t);
        let tname = src.transition_name(t);
        let Some(ev) = multi(label) else {
            let nt = copy_transition(&mut b, src, t, tname, label, ctrl)?;
            origin.push(t);
            completes.push(true);
            lift.push(Lift::Copy(nt));
            continue;
        };
        let k = ev.gamma as usize;
        let ctrl = ctrl.expect("control place exists when chains exist");
        match (ev.semantics, split) {
            (Semantics::Parikh, _) => {
                let labels = vec![label.to_string(); k];
                let chain = add_chain(&mut b, src, t, &labels, ctrl, None)?;
                push_chain(&chain, t, &mut origin, &mut completes);
                lift.push(Lift::Chain(chain));
            }
            (Semantics::Indicator, IndicatorSplit::FreshLabels) => {
                let chain = add_chain(&mut b, src, t, &split_labels[label], ctrl, None)?;
                push_chain(&chain, t, &mut origin, &mut completes);
                lift.push(Lift::Chain(chain));
            }
            (Semantics::Indicator, IndicatorSplit::FirstOccurrence) => {
                let (first, other, rep) = gadgets[label].clone();
                let repeat = copy_transition(&mut b, src, t, tname, &rep, Some(ctrl))?;
                b.set_input(other, repeat, 1);
                b.set_output(repeat, other, 1);
                origin.push(t);
                completes.push(true);
                let labels = vec![label.to_string(); k];
                let chain = add_chain(&mut b, src, t, &labels, ctrl, Some((first, other)))?;
                push_chain(&chain, t, &mut origin, &mut completes);
                lift.push(Lift::Gadget {
                    event: label.to_string(),
                    first: chain,
                    repeat,
                });
            }
        }
    }

    if !split_events.is_empty() {
        let keep: Vec<&str> = src
            .alphabet()
            .iter()
            .map(String::as_str)
            .filter(|e| !split_events.iter().any(|s| s == e))
            .chain(protectable.keys().map(String::as_str))
            .collect();
        b.prune_unused_events(&keep);
    }
    let net = b.build()?;
    let extra = net.num_places() - src.num_places();
    let mut initial = inst.initial.extended(extra);
    if let Some(c) = ctrl {
        initial.add(c, 1);
    }
    for (first, _, _) in gadgets.values() {
        initial.add(*first, 1);
    }
    let mut requirement = inst.requirement.clone();
    requirement.resize(net.num_places(), 0);
    let instance = SppInstance {
        net,
        initial,
        requirement,
        protectable,
        budget: inst.budget.clone(),
    };
    Ok(Uniformized {
        instance,
        certificate: UniformCertificate {
            split,
            control_place: ctrl,
            event_map,
            origin,
            completes,
            lift,
            notes,
        },
    })
}

fn copy_transition(
    b: &mut NetBuilder,
    src: &LabeledPetriNet,
    t: TransitionId,
    name: &str,
    label: &str,
    ctrl: Option<PlaceId>,
) -> Result<TransitionId, TransformError> {
    let nt = b.add_transition(name, label)?;
    for p in src.places() {
        b.set_input(p, nt, src.input_weight(p, t));
        b.set_output(nt, p, src.output_weight(t, p));
    }
    if let Some(c) = ctrl {
        b.set_input(c, nt, 1);
        b.set_output(nt, c, 1);
    }
    Ok(nt)
}

/// Chain `t_1 .. t_k` through fresh link places; `t_1` takes the control
/// token and the inputs of `t`, `t_k` returns them with the outputs of `t`.
fn add_chain(
    b: &mut NetBuilder,
    src: &LabeledPetriNet,
    t: TransitionId,
    labels: &[String],
    ctrl: PlaceId,
    guard: Option<(PlaceId, PlaceId)>,
) -> Result<Vec<TransitionId>, TransformError> {
    let tname = src.transition_name(t);
    let k = labels.len();
    let mut chain = Vec::with_capacity(k);
    let mut links = Vec::with_capacity(k.saturating_sub(1));
    for label in labels {
        let name = b.fresh_name(tname, "chain");
        chain.push(b.add_transition(&name, label)?);
    }
    for _ in 1..k {
        let name = b.fresh_name(tname, "link");
        links.push(b.add_place(&name)?);
    }
    let (head, tail) = (chain[0], chain[k - 1]);
    for p in src.places() {
        b.set_input(p, head, src.input_weight(p, t));
        b.set_output(tail, p, src.output_weight(t, p));
    }
    for (i, &link) in links.iter().enumerate() {
        b.set_output(chain[i], link, 1);
        b.set_input(link, chain[i + 1], 1);
    }
    // with k == 1 head and tail coincide and these form a self-loop
    b.set_input(ctrl, head, 1);
    b.set_output(tail, ctrl, 1);
    if let Some((first, other)) = guard {
        b.set_input(first, head, 1);
        b.set_output(tail, other, 1);
    }
    Ok(chain)
}

fn push_chain(chain: &[TransitionId], t: TransitionId, origin: &mut Vec<TransitionId>, completes: &mut Vec<bool>) {
    for (i, _) in chain.iter().enumerate() {
        origin.push(t);
        completes.push(i + 1 == chain.len());
    }
}
