//! Seeded random nets and instances for testing and benchmarking.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::coverability::bounded_explore;
use crate::model::{Cost, ProtectableEvent, Semantics, SppInstance};
use crate::net::{LabeledPetriNet, Marking, PlaceId, TransitionId};

#[derive(Clone, Debug)]
pub struct NetParams {
    pub places: usize,
    pub transitions: usize,
    /// Size of the alphabet labels are drawn from.
    pub events: usize,
    pub max_weight: u64,
    pub max_tokens: u64,
    /// Probability of each potential arc.
    pub arc_density: f64,
    /// Probability that a transition has no input arcs.
    pub source_prob: f64,
    /// Every transition consumes and produces the same number of tokens
    /// (one or two, unit weights), so the token total never changes. Only one
    /// or two places start marked.
    pub conservative: bool,
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            places: 4,
            transitions: 4,
            events: 3,
            max_weight: 2,
            max_tokens: 2,
            arc_density: 0.3,
            source_prob: 0.1,
            conservative: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InstanceParams {
    pub net: NetParams,
    /// Number of protectable events, capped by the alphabet size.
    pub protectable: usize,
    pub gammas: Vec<u64>,
    pub semantics: Vec<Semantics>,
    pub max_requirement: u64,
    /// Costs are drawn from `{0, 1/2, 1, .., max_cost}`.
    pub max_cost: u64,
    pub secret_prob: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            net: NetParams::default(),
            protectable: 3,
            gammas: vec![1],
            semantics: vec![Semantics::Parikh, Semantics::Indicator],
            max_requirement: 2,
            max_cost: 4,
            secret_prob: 0.4,
        }
    }
}

/// Random labeled net and initial marking. Places are `p0..`, transitions
/// `t0..`, events `e0..`.
pub fn random_net<R: Rng + ?Sized>(rng: &mut R, params: &NetParams) -> (LabeledPetriNet, Marking) {
    let mut b = LabeledPetriNet::builder();
    let places: Vec<PlaceId> = (0..params.places.max(1))
        .map(|i| b.add_place(&format!("p{i}")).expect("fresh"))
        .collect();
    let events = params.events.max(1);
    let transitions: Vec<TransitionId> = (0..params.transitions.max(1))
        .map(|i| {
            let label = format!("e{}", rng.gen_range(0..events));
            b.add_transition(&format!("t{i}"), &label).expect("fresh")
        })
        .collect();
    let weight = |rng: &mut R| rng.gen_range(1..=params.max_weight.max(1));
    if params.conservative {
        for &t in &transitions {
            let k = if places.len() > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
            for p in places.choose_multiple(rng, k).copied().collect::<Vec<_>>() {
                b.set_input(p, t, 1);
            }
            for p in places.choose_multiple(rng, k).copied().collect::<Vec<_>>() {
                b.set_output(t, p, 1);
            }
        }
        let mut initial = Marking::zeros(places.len());
        let marked = rng.gen_range(1..=2.min(places.len()));
        for &p in places.choose_multiple(rng, marked) {
            initial.add(p, rng.gen_range(1..=params.max_tokens.max(1)));
        }
        return (b.build().expect("nonempty net"), initial);
    }
    for &t in &transitions {
        let source = rng.gen_bool(params.source_prob);
        for &p in &places {
            if !source && rng.gen_bool(params.arc_density) {
                b.set_input(p, t, weight(rng));
            }
            if rng.gen_bool(params.arc_density) {
                b.set_output(t, p, weight(rng));
            }
        }
    }
    let initial = Marking::from_counts(places.iter().map(|_| rng.gen_range(0..=params.max_tokens)));
    (b.build().expect("nonempty net"), initial)
}

/// Random target with entries in `0..=max`, at least one positive.
pub fn random_target<R: Rng + ?Sized>(rng: &mut R, net: &LabeledPetriNet, max: u64) -> Marking {
    let mut m = Marking::from_counts(net.places().map(|_| if rng.gen_bool(0.5) { rng.gen_range(0..=max) } else { 0 }));
    if m.tokens().iter().all(|x| x == &0u32.into()) {
        let p = PlaceId(rng.gen_range(0..net.num_places()));
        m.add(p, max.max(1));
    }
    m
}

/// Decorates a net with requirements on initially empty places and a random
/// protectable table.
pub fn random_instance_on<R: Rng + ?Sized>(
    rng: &mut R,
    net: LabeledPetriNet,
    initial: Marking,
    params: &InstanceParams,
) -> SppInstance {
    let mut inst = SppInstance::new(net, initial);
    for p in inst.net.places() {
        if inst.initial[p] == 0u32.into() && rng.gen_bool(params.secret_prob) {
            inst.requirement[p.0] = rng.gen_range(1..=params.max_requirement.max(1));
        }
    }
    let mut events: Vec<String> = inst.net.alphabet().to_vec();
    events.shuffle(rng);
    for e in events.into_iter().take(params.protectable) {
        let gamma = *params.gammas.choose(rng).unwrap_or(&1);
        let semantics = *params.semantics.choose(rng).unwrap_or(&Semantics::Parikh);
        let halves = rng.gen_range(0..=2 * params.max_cost);
        let cost = Cost::new(BigInt::from(halves), BigInt::from(2));
        inst.protectable
            .insert(e.clone(), ProtectableEvent::new(&e, gamma, cost, semantics));
    }
    inst
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: &InstanceParams) -> SppInstance {
    let (net, initial) = random_net(rng, &params.net);
    random_instance_on(rng, net, initial, params)
}

/// Random net whose reachable markings are all 1-safe, found by rejection.
/// Weights and initial tokens are forced to 1.
pub fn random_safe_net<R: Rng + ?Sized>(rng: &mut R, params: &NetParams, tries: usize) -> Option<(LabeledPetriNet, Marking)> {
    let params = NetParams {
        max_weight: 1,
        max_tokens: 1,
        source_prob: 0.0,
        ..params.clone()
    };
    (0..tries).find_map(|_| {
        let (net, m0) = random_net(rng, &params);
        bounded_explore(&net, &m0, 1, usize::MAX).complete.then_some((net, m0))
    })
}

pub fn random_safe_instance<R: Rng + ?Sized>(rng: &mut R, params: &InstanceParams, tries: usize) -> Option<SppInstance> {
    let (net, m0) = random_safe_net(rng, &params.net, tries)?;
    Some(random_instance_on(rng, net, m0, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_per_seed() {
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(7), &InstanceParams::default());
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(7), &InstanceParams::default());
        assert_eq!(a, b);
    }

    #[test]
    fn instances_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, &InstanceParams::default());
            assert!(inst.validate().is_empty(), "{:?}", inst.validate());
        }
    }

    #[test]
    fn safe_nets_are_safe() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (net, m0) = random_safe_net(&mut rng, &NetParams::default(), 1000).unwrap();
        let ex = bounded_explore(&net, &m0, 1, usize::MAX);
        assert!(ex.complete);
        assert!(ex.markings.iter().all(|m| m.tokens().iter().all(|x| *x <= 1u32.into())));
    }
}
