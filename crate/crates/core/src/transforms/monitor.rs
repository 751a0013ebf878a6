use std::collections::BTreeMap;

use crate::error::TransformError;
use crate::model::{Policy, Semantics, SppInstance};
use crate::net::{LabeledPetriNet, Marking, PlaceId, TransitionId};

/// The instance net extended with a clearance counter for a fixed policy.
///
/// Places `0..source_places` and transitions `0..source_transitions` are the
/// instance's own, in the same order.
#[derive(Clone, Debug)]
pub struct MonitorNet {
    pub net: LabeledPetriNet,
    pub initial: Marking,
    pub counter: PlaceId,
    /// Indicator events of the policy → (first, other).
    pub gadget_places: BTreeMap<String, (PlaceId, PlaceId)>,
    /// Monitor transition → source transition.
    pub origin: Vec<TransitionId>,
    pub source_places: usize,
}

impl MonitorNet {
    /// Token value of the counter in `m`.
    pub fn counter_value<'m>(&self, m: &'m Marking) -> &'m crate::net::Nat {
        &m[self.counter]
    }

    /// Groups whose token sum never changes, used to prune backward search.
    pub fn conserved_groups(&self) -> Vec<Vec<PlaceId>> {
        self.gadget_places.values().map(|&(f, o)| vec![f, o]).collect()
    }
}

/// Parikh events of the policy feed `gamma` tokens into the counter on every
/// occurrence; indicator events route their first occurrence through a
/// copy guarded by `first_a` that alone feeds the counter.
pub fn build_monitor_net(inst: &SppInstance, pol: &Policy) -> Result<MonitorNet, TransformError> {
    inst.check_policy(pol)?;
    let net = &inst.net;
    let mut b = net.to_builder();
    let counter_name = b.fresh_name("clearance", "counter");
    let counter = b.add_place(&counter_name)?;

    let mut gadget_places = BTreeMap::new();
    for e in pol.events() {
        let ev = &inst.protectable[e];
        if ev.semantics == Semantics::Indicator {
            let first = b.fresh_name(e, "first");
            let first = b.add_place(&first)?;
            let other = b.fresh_name(e, "other");
            let other = b.add_place(&other)?;
            gadget_places.insert(e.to_string(), (first, other));
        }
    }

    let mut origin: Vec<TransitionId> = net.transitions().collect();
    for t in net.transitions() {
        let label = net.label_name(t);
        let Some(ev) = inst.protectable.get(label).filter(|_| pol.contains(label)) else {
            continue;
        };
        match ev.semantics {
            Semantics::Parikh => b.set_output(t, counter, ev.gamma),
            Semantics::Indicator => {
                let (first, other) = gadget_places[label];
                b.set_input(other, t, 1);
                b.set_output(t, other, 1);
                let copy_name = b.fresh_name(net.transition_name(t), "first");
                let copy = b.add_transition(&copy_name, label)?;
                for p in net.places() {
                    b.set_input(p, copy, net.input_weight(p, t));
                    b.set_output(copy, p, net.output_weight(t, p));
                }
                b.set_input(first, copy, 1);
                b.set_output(copy, other, 1);
                b.set_output(copy, counter, ev.gamma);
                origin.push(t);
            }
        }
    }

    let monitor = b.build()?;
    let mut initial = inst.initial.extended(monitor.num_places() - net.num_places());
    for &(first, _) in gadget_places.values() {
        initial.add(first, 1);
    }
    Ok(MonitorNet {
        net: monitor,
        initial,
        counter,
        gadget_places,
        origin,
        source_places: net.num_places(),
    })
}

/// Monitor net with the counter replaced by mutually exclusive level places
/// `q_0..q_L`; the marked level is `min(counter, L)`.
#[derive(Clone, Debug)]
pub struct SaturatedNet {
    pub net: LabeledPetriNet,
    pub initial: Marking,
    pub levels: Vec<PlaceId>,
    /// Saturated transition → monitor transition.
    pub origin: Vec<TransitionId>,
    /// Monitor place → saturated place (`None` for the removed counter).
    pub place_map: Vec<Option<PlaceId>>,
}

impl SaturatedNet {
    /// Index of the marked level place.
    pub fn level(&self, m: &Marking) -> Option<usize> {
        self.levels.iter().position(|&q| m[q] == 1u32.into())
    }

    /// Project a marking onto the monitor net's places, counter excluded.
    pub fn project(&self, m: &Marking, monitor_places: usize) -> Vec<Option<crate::net::Nat>> {
        (0..monitor_places)
            .map(|p| self.place_map[p].map(|q| m[q].clone()))
            .collect()
    }
}

pub fn saturate_counter(mon: &MonitorNet, cap: u64) -> Result<SaturatedNet, TransformError> {
    let src = &mon.net;
    if src.transitions().any(|t| src.input_weight(mon.counter, t) > 0) {
        return Err(TransformError::CounterConsumed(
            src.place_name(mon.counter).to_string(),
        ));
    }
    let cap = usize::try_from(cap).expect("level count fits in memory");
    let mut b = LabeledPetriNet::builder();
    let mut place_map = vec![None; src.num_places()];
    for p in src.places() {
        if p != mon.counter {
            place_map[p.0] = Some(b.add_place(src.place_name(p))?);
        }
    }
    let counter_name = src.place_name(mon.counter).to_string();
    let mut levels = Vec::with_capacity(cap + 1);
    for _ in 0..=cap {
        let name = b.fresh_name(&counter_name, "q");
        levels.push(b.add_place(&name)?);
    }

    let mut origin = Vec::new();
    let copy_arcs = |b: &mut crate::net::NetBuilder, from: TransitionId, to: TransitionId| {
        for p in src.places() {
            if let Some(q) = place_map[p.0] {
                b.set_input(q, to, src.input_weight(p, from));
                b.set_output(to, q, src.output_weight(from, p));
            }
        }
    };
    for t in src.transitions() {
        let gain = src.output_weight(t, mon.counter);
        let name = src.transition_name(t);
        let label = src.label_name(t);
        if gain == 0 {
            let nt = b.add_transition(name, label)?;
            copy_arcs(&mut b, t, nt);
            origin.push(t);
            continue;
        }
        for v in 0..=cap {
            let vname = b.fresh_name(name, "lv");
            let nt = b.add_transition(&vname, label)?;
            copy_arcs(&mut b, t, nt);
            let reached = usize::try_from(gain).map_or(cap, |g| v.saturating_add(g).min(cap));
            b.set_input(levels[v], nt, 1);
            b.set_output(nt, levels[reached], 1);
            origin.push(t);
        }
    }
    let net = b.build()?;
    let mut initial = Marking::zeros(net.num_places());
    for p in src.places() {
        if let Some(q) = place_map[p.0] {
            initial.set(q, mon.initial[p].clone());
        }
    }
    initial.add(levels[0], 1);
    Ok(SaturatedNet {
        net,
        initial,
        levels,
        origin,
        place_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProtectableEvent;
    use crate::net::{FiringSequence, Nat};
    use num_rational::BigRational;
    use num_traits::One;

    /// p -a-> p (self-loop source of a-events), gamma configurable.
    fn loop_instance(semantics: Semantics, gamma: u64) -> SppInstance {
        let mut b = LabeledPetriNet::builder();
        let p = b.add_place("p").unwrap();
        let t = b.add_transition("t", "a").unwrap();
        let u = b.add_transition("u", "a").unwrap();
        for x in [t, u] {
            b.set_input(p, x, 1);
            b.set_output(x, p, 1);
        }
        let mut inst = SppInstance::new(b.build().unwrap(), Marking::from_counts([1]));
        inst.protectable.insert(
            "a".into(),
            ProtectableEvent::new("a", gamma, BigRational::one(), semantics),
        );
        inst
    }

    #[test]
    fn empty_policy_isolates_counter() {
        let inst = loop_instance(Semantics::Parikh, 2);
        let mon = build_monitor_net(&inst, &Policy::empty()).unwrap();
        assert_eq!(mon.net.num_transitions(), 2);
        assert!(mon
            .net
            .transitions()
            .all(|t| mon.net.output_weight(t, mon.counter) == 0 && mon.net.input_weight(mon.counter, t) == 0));
    }

    #[test]
    fn parikh_counter_accumulates() {
        let inst = loop_instance(Semantics::Parikh, 2);
        let pol: Policy = ["a"].into_iter().collect();
        let mon = build_monitor_net(&inst, &pol).unwrap();
        let run = FiringSequence(vec![TransitionId(0), TransitionId(1)]);
        let ms = mon.net.fire_sequence(&mon.initial, &run).unwrap();
        assert_eq!(*mon.counter_value(ms.last().unwrap()), Nat::from(4u32));
    }

    #[test]
    fn indicator_counter_counts_once() {
        let inst = loop_instance(Semantics::Indicator, 2);
        let pol: Policy = ["a"].into_iter().collect();
        let mon = build_monitor_net(&inst, &pol).unwrap();
        let (first, other) = mon.gadget_places["a"];
        // originals are disabled until the copy moved the gadget token
        assert!(!mon.net.enabled(&mon.initial, TransitionId(0)).unwrap());
        let copy = mon.net.transition("t##first0").unwrap();
        let run = FiringSequence(vec![copy, TransitionId(1), TransitionId(0)]);
        let ms = mon.net.fire_sequence(&mon.initial, &run).unwrap();
        let last = ms.last().unwrap();
        assert_eq!(*mon.counter_value(last), Nat::from(2u32));
        assert_eq!((last[first].clone(), last[other].clone()), (Nat::from(0u32), Nat::from(1u32)));
        assert!(mon.net.fire(last, copy).is_err());
    }

    #[test]
    fn saturation_unrolls_levels() {
        let inst = loop_instance(Semantics::Parikh, 1);
        let pol: Policy = ["a"].into_iter().collect();
        let mon = build_monitor_net(&inst, &pol).unwrap();
        let sat = saturate_counter(&mon, 2).unwrap();
        assert_eq!(sat.levels.len(), 3);
        // transition t: three variants q0->q1, q1->q2, q2->q2
        let steps: Vec<(usize, usize)> = (0..3)
            .map(|v| {
                let nt = TransitionId(v);
                let from = sat.levels.iter().position(|&q| sat.net.input_weight(q, nt) == 1).unwrap();
                let to = sat.levels.iter().position(|&q| sat.net.output_weight(nt, q) == 1).unwrap();
                (from, to)
            })
            .collect();
        assert_eq!(steps, vec![(0, 1), (1, 2), (2, 2)]);
        assert_eq!(sat.level(&sat.initial), Some(0));

        let inst = loop_instance(Semantics::Parikh, 5);
        let mon = build_monitor_net(&inst, &pol).unwrap();
        let sat = saturate_counter(&mon, 2).unwrap();
        for v in 0..3 {
            let nt = TransitionId(v);
            assert_eq!(sat.net.output_weight(nt, sat.levels[2]), 1);
        }
    }

    #[test]
    fn zero_cap_keeps_single_level() {
        let inst = loop_instance(Semantics::Parikh, 1);
        let pol: Policy = ["a"].into_iter().collect();
        let mon = build_monitor_net(&inst, &pol).unwrap();
        let sat = saturate_counter(&mon, 0).unwrap();
        assert_eq!(sat.levels.len(), 1);
        assert_eq!(sat.net.num_transitions(), 2);
    }

    #[test]
    fn consumed_counter_is_rejected() {
        let inst = loop_instance(Semantics::Parikh, 1);
        let mut mon = build_monitor_net(&inst, &Policy::empty()).unwrap();
        let mut b = mon.net.to_builder();
        b.set_input(mon.counter, TransitionId(0), 1);
        mon.net = b.build().unwrap();
        assert!(matches!(saturate_counter(&mon, 1), Err(TransformError::CounterConsumed(_))));
    }
}
