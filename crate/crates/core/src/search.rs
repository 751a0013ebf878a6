//! Policy synthesis over the subset lattice of protectable events.
//!
//! Validity is monotone in the policy: adding protected events never lowers
//! clearance. Candidates are enumerated cheapest first, so the first valid one
//! is optimal. A candidate is skipped without a check when it is a subset of
//! a policy already found invalid, or more generally when the witness run of
//! an earlier invalid verdict still violates under it.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use itertools::Itertools;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::Error;
use crate::model::{Cost, Policy, SppInstance};
use crate::net::FiringSequence;
use crate::validity::{is_valid_with, CheckOptions, Status, Verdict};

/// Candidates checked together per round when running in parallel.
const BATCH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub check: CheckOptions,
    pub parallel: bool,
    /// Skip candidates refuted by an earlier witness.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            check: CheckOptions::default(),
            parallel: true,
            prune: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Optimal { policy: Policy, cost: Cost },
    Infeasible,
    ResourceExhausted,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub status: SearchStatus,
    /// Number of validity checks performed.
    pub explored: usize,
    /// Invalid verdicts of the cheaper candidates, checked or pruned.
    pub certificates: Vec<(Policy, Verdict)>,
    /// Candidates refuted by replaying an earlier witness instead of a check.
    pub pruned: Vec<Policy>,
}

impl SearchResult {
    pub fn optimal_cost(&self) -> Option<&Cost> {
        match &self.status {
            SearchStatus::Optimal { cost, .. } => Some(cost),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BudgetDecision {
    Yes { policy: Policy, cost: Cost },
    No,
    ResourceExhausted,
}

impl BudgetDecision {
    pub fn is_yes(&self) -> bool {
        matches!(self, BudgetDecision::Yes { .. })
    }
}

/// Subsets of `costs` (all strictly positive) in non-decreasing total cost,
/// grouped by equal cost.
struct CostOrder<'c> {
    costs: &'c [Cost],
    heap: BinaryHeap<Reverse<(Cost, Vec<usize>)>>,
    started: bool,
}

impl<'c> CostOrder<'c> {
    fn new(costs: &'c [Cost]) -> Self {
        CostOrder {
            costs,
            heap: BinaryHeap::new(),
            started: false,
        }
    }

    fn pop(&mut self) -> Option<(Cost, Vec<usize>)> {
        let Reverse((cost, set)) = self.heap.pop()?;
        let last = *set.last().expect("nonempty");
        if last + 1 < self.costs.len() {
            let mut grown = set.clone();
            grown.push(last + 1);
            self.heap.push(Reverse((&cost + &self.costs[last + 1], grown)));
            let mut shifted = set.clone();
            *shifted.last_mut().expect("nonempty") = last + 1;
            let c = &cost - &self.costs[last] + &self.costs[last + 1];
            self.heap.push(Reverse((c, shifted)));
        }
        Some((cost, set))
    }
}

impl Iterator for CostOrder<'_> {
    type Item = (Cost, Vec<Vec<usize>>);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            if !self.costs.is_empty() {
                self.heap.push(Reverse((self.costs[0].clone(), vec![0])));
            }
            return Some((Cost::zero(), vec![Vec::new()]));
        }
        let (cost, first) = self.pop()?;
        let mut group = vec![first];
        while self.heap.peek().is_some_and(|Reverse((c, _))| *c == cost) {
            group.push(self.pop().expect("peeked").1);
        }
        Some((cost, group))
    }
}

enum Outcome {
    Found(Policy, Cost),
    Infeasible,
    OverBudget,
    Exhausted,
}

fn run_search(
    inst: &SppInstance,
    opts: &SearchOptions,
    budget: Option<&Cost>,
) -> Result<(Outcome, usize, Vec<(Policy, Verdict)>, Vec<Policy>), Error> {
    inst.ensure_valid()?;
    let check = |pol: &Policy| is_valid_with(inst, pol, &opts.check);
    let mut explored = 0;
    let mut certificates = Vec::new();
    let mut pruned = Vec::new();

    // cost-0 events never hurt validity and never add cost
    let free: Policy = inst
        .protectable
        .iter()
        .filter(|(_, ev)| ev.cost.is_zero())
        .map(|(k, _)| k)
        .collect();
    let mut paid: Vec<(&String, &Cost)> = inst
        .protectable
        .iter()
        .filter(|(_, ev)| !ev.cost.is_zero())
        .map(|(k, ev)| (k, &ev.cost))
        .collect();
    paid.sort_by(|a, b| a.1.cmp(b.1).then_with(|| a.0.cmp(b.0)));
    let costs: Vec<Cost> = paid.iter().map(|(_, c)| (*c).clone()).collect();

    let full = inst.all_protectable();
    explored += 1;
    let verdict = check(&full)?;
    match verdict.status {
        Status::Invalid => return Ok((Outcome::Infeasible, explored, vec![(full, verdict)], pruned)),
        Status::ResourceExhausted => return Ok((Outcome::Exhausted, explored, certificates, pruned)),
        Status::Valid => {}
    }

    let mut invalid: Vec<(Policy, FiringSequence)> = Vec::new();
    for (cost, group) in CostOrder::new(&costs) {
        if budget.is_some_and(|w| cost > *w) {
            return Ok((Outcome::OverBudget, explored, certificates, pruned));
        }
        let mut candidates: Vec<Policy> = group
            .into_iter()
            .map(|set| {
                let chosen: Policy = set.iter().map(|&i| paid[i].0).collect();
                chosen.union(&free)
            })
            .collect();
        candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let mut pending = Vec::new();
        for c in candidates {
            match opts.prune.then(|| refute(inst, &c, &invalid)).transpose()?.flatten() {
                Some(verdict) => {
                    certificates.push((c.clone(), verdict));
                    pruned.push(c);
                }
                None => pending.push(c),
            }
        }
        let chunk = if opts.parallel { BATCH } else { 1 };
        for batch in pending.chunks(chunk) {
            let verdicts: Vec<Result<Verdict, Error>> = if opts.parallel {
                batch.par_iter().map(check).collect()
            } else {
                batch.iter().map(check).collect()
            };
            explored += batch.len();
            for (pol, verdict) in batch.iter().zip(verdicts) {
                let verdict = verdict?;
                match verdict.status {
                    Status::Valid => return Ok((Outcome::Found(pol.clone(), cost), explored, certificates, pruned)),
                    Status::ResourceExhausted => return Ok((Outcome::Exhausted, explored, certificates, pruned)),
                    Status::Invalid => {
                        let w = verdict.witness.clone().expect("invalid verdicts carry a witness");
                        invalid.push((pol.clone(), w));
                        certificates.push((pol.clone(), verdict));
                    }
                }
            }
        }
    }
    // Σp is valid, so the enumeration reaches a valid candidate
    Err(Error::Internal("full policy valid but no candidate accepted".into()))
}

/// Invalid verdict for `pol` from a stored witness, if one still violates.
/// A subset of a refuted policy is always refuted by the same run.
fn refute(inst: &SppInstance, pol: &Policy, invalid: &[(Policy, FiringSequence)]) -> Result<Option<Verdict>, Error> {
    let order = invalid
        .iter()
        .filter(|(bad, _)| pol.is_subset(bad))
        .chain(invalid.iter().filter(|(bad, _)| !pol.is_subset(bad)));
    for (_, w) in order {
        if let Some(v) = inst.run_violates(pol, w)? {
            return Ok(Some(Verdict {
                status: Status::Invalid,
                witness: Some(w.prefix(v.prefix)),
                violated_place: Some(v.place),
                clearance_at_violation: Some(v.clearance),
            }));
        }
    }
    Ok(None)
}

pub fn optimal_policy(inst: &SppInstance) -> Result<SearchResult, Error> {
    optimal_policy_with(inst, &SearchOptions::default())
}

pub fn optimal_policy_with(inst: &SppInstance, opts: &SearchOptions) -> Result<SearchResult, Error> {
    let (outcome, explored, certificates, pruned) = run_search(inst, opts, None)?;
    let status = match outcome {
        Outcome::Found(policy, cost) => SearchStatus::Optimal { policy, cost },
        Outcome::Infeasible => SearchStatus::Infeasible,
        Outcome::Exhausted => SearchStatus::ResourceExhausted,
        Outcome::OverBudget => unreachable!("no budget given"),
    };
    Ok(SearchResult {
        status,
        explored,
        certificates,
        pruned,
    })
}

/// Is there a valid policy of cost at most `budget`?
pub fn decide_budget(inst: &SppInstance, budget: &Cost) -> Result<BudgetDecision, Error> {
    decide_budget_with(inst, budget, &SearchOptions::default())
}

pub fn decide_budget_with(inst: &SppInstance, budget: &Cost, opts: &SearchOptions) -> Result<BudgetDecision, Error> {
    if budget.is_negative_value() {
        return Ok(BudgetDecision::No);
    }
    let (outcome, ..) = run_search(inst, opts, Some(budget))?;
    Ok(match outcome {
        Outcome::Found(policy, cost) => BudgetDecision::Yes { policy, cost },
        Outcome::Infeasible | Outcome::OverBudget => BudgetDecision::No,
        Outcome::Exhausted => BudgetDecision::ResourceExhausted,
    })
}

trait NegativeValue {
    fn is_negative_value(&self) -> bool;
}

impl NegativeValue for Cost {
    fn is_negative_value(&self) -> bool {
        *self < Cost::zero()
    }
}

/// All inclusion-minimal valid policies, smallest first; `None` if a check
/// ran out of resources.
pub fn minimal_valid_policies(inst: &SppInstance, opts: &CheckOptions) -> Result<Option<Vec<Policy>>, Error> {
    inst.ensure_valid()?;
    let events: Vec<&String> = inst.protectable.keys().collect();
    let mut minimal: Vec<Policy> = Vec::new();
    let mut invalid: Vec<Policy> = Vec::new();
    for k in 0..=events.len() {
        for combo in (0..events.len()).combinations(k) {
            let pol: Policy = combo.iter().map(|&i| events[i]).collect();
            if minimal.iter().any(|m| m.is_subset(&pol)) || invalid.iter().any(|bad| pol.is_subset(bad)) {
                continue;
            }
            match is_valid_with(inst, &pol, opts)?.status {
                Status::Valid => minimal.push(pol),
                Status::Invalid => invalid.push(pol),
                Status::ResourceExhausted => return Ok(None),
            }
        }
    }
    Ok(Some(minimal))
}
