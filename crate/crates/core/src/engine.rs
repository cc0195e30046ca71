//! Fixpoint iteration, safety checking and deadlock detection.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{
    includes, intersect_guards, union, union_all, widen_automata, Automaton, GuardAutomaton, WideningPolicy,
};
use crate::domain::{Letter, Location};
use crate::frontend::CompiledSemantics;
use crate::rules::apply_rule;
use crate::transducer::apply_transducer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Iterations that only join before widening starts.
    pub widening_delay: usize,
    /// Incoming path length used to merge states when shapes change.
    pub shape_k: usize,
    pub step_budget: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            widening_delay: 2,
            shape_k: 1,
            step_budget: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlarmKind {
    PropertyViolation,
    PotentialDeadlock,
    Division,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alarm {
    pub kind: AlarmKind,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub reach: Automaton,
    pub iterations: usize,
    /// Locations where a division by zero may happen.
    pub division: BTreeSet<Location>,
}

impl AnalysisResult {
    pub fn alarms(&self) -> Vec<Alarm> {
        self.division
            .iter()
            .map(|l| Alarm {
                kind: AlarmKind::Division,
                witness: format!("possible division by zero at {l}"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("no post-fixpoint within {0} steps")]
    BudgetExhausted(usize),
    #[error("property mentions location {0}, which the program does not have")]
    UnknownLocation(Location),
}

/// One application of the global transition function.
pub fn step(sem: &CompiledSemantics, s: &Automaton) -> (Automaton, BTreeSet<Location>) {
    if s.is_empty() {
        return (Automaton::empty(), BTreeSet::new());
    }
    let (local, mut alarms) = apply_transducer(&sem.transducer, s, &sem.ctx);
    let images: Vec<(Automaton, BTreeSet<Location>)> =
        sem.rules.par_iter().map(|r| apply_rule(r, s, &sem.ctx)).collect();
    let mut parts = vec![local];
    for (a, al) in images {
        parts.push(a);
        alarms.extend(al);
    }
    (union_all(parts), alarms)
}

pub fn widening_policy(sem: &CompiledSemantics, config: &AnalysisConfig) -> WideningPolicy {
    let mut points = sem.loop_heads.clone();
    if sem.has_create {
        points.insert(sem.entry);
    }
    points.insert(Location::Collector);
    let initial_cyclic = sem.initial.transitions.iter().any(|t| t.from >= t.to);
    WideningPolicy {
        points,
        cycles: true,
        quotient_k: (sem.has_create || initial_cyclic).then_some(config.shape_k),
    }
}

/// Iterates from the initial automaton until the transition function
/// adds nothing, widening after `widening_delay` rounds.
pub fn fixpoint(sem: &CompiledSemantics, config: &AnalysisConfig) -> Result<AnalysisResult, EngineError> {
    let policy = widening_policy(sem, config);
    let mut s = sem.initial.normalize();
    let mut division = BTreeSet::new();
    for k in 0..config.step_budget {
        let (t, al) = step(sem, &s);
        division.extend(al);
        if includes(&s, &t) {
            return Ok(AnalysisResult {
                reach: s,
                iterations: k,
                division,
            });
        }
        let joined = union(&s, &t);
        s = if k < config.widening_delay {
            joined
        } else {
            widen_automata(&s, &joined, &policy)
        };
    }
    Err(EngineError::BudgetExhausted(config.step_budget))
}

/// A word template: one abstract letter per process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub letters: Vec<Letter>,
}

impl Witness {
    pub fn locations(&self) -> Vec<Location> {
        self.letters.iter().map(|l| l.loc).collect()
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, " . ")?;
            }
            write!(f, "<{l}>")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Safe,
    Alarm(Witness),
}

/// Checks that no reachable word is accepted by `bad`; on failure reports
/// a shortest word of the intersection.
pub fn check_safety(sem: &CompiledSemantics, reach: &Automaton, bad: &GuardAutomaton) -> Result<Verdict, EngineError> {
    if let Some(l) = bad.locations().into_iter().find(|l| !sem.locations.contains(l)) {
        return Err(EngineError::UnknownLocation(l));
    }
    let product = intersect_guards(reach, bad, &sem.ctx.kinds);
    Ok(match shortest_word(&product) {
        Some(letters) => Verdict::Alarm(Witness { letters }),
        None => Verdict::Safe,
    })
}

/// Breadth-first search over edges sorted by location then target, so
/// the first path found is the shortest and, among those, the smallest
/// location sequence.
fn shortest_word(a: &Automaton) -> Option<Vec<Letter>> {
    let mut out: Vec<Vec<usize>> = a.out_edges();
    for edges in &mut out {
        edges.sort_by_key(|&i| (a.transitions[i].label.loc, a.transitions[i].to));
    }
    let mut parent: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &q in &a.initial {
        parent.insert(q, None);
        queue.push_back(q);
    }
    while let Some(q) = queue.pop_front() {
        if a.finals.contains(&q) {
            let mut letters = Vec::new();
            let mut cur = q;
            while let Some(Some(i)) = parent.get(&cur) {
                letters.push(a.transitions[*i].label.clone());
                cur = a.transitions[*i].from;
            }
            letters.reverse();
            return Some(letters);
        }
        for &i in &out[q] {
            let to = a.transitions[i].to;
            if !parent.contains_key(&to) {
                parent.insert(to, Some(i));
                queue.push_back(to);
            }
        }
    }
    None
}

/// Reachable words in which every process waits on a communication or
/// has terminated, some process has not terminated, and no rule can fire.
///
/// Words are taken from paths of the reach automaton visiting each state
/// at most twice.
pub fn check_deadlock(sem: &CompiledSemantics, reach: &Automaton) -> Vec<Witness> {
    const MAX_PATHS: usize = 100_000;
    let waiting = |l: Location| sem.blocking.contains(&l) || l == sem.exit;
    let mut out_edges = reach.out_edges();
    for edges in &mut out_edges {
        edges.sort_by_key(|&i| (reach.transitions[i].label.loc, reach.transitions[i].to));
    }
    let mut candidates: Vec<Vec<Letter>> = Vec::new();
    let mut visits = vec![0u8; reach.states];
    let mut path: Vec<Letter> = Vec::new();
    fn walk(
        q: usize,
        reach: &Automaton,
        out: &[Vec<usize>],
        waiting: &dyn Fn(Location) -> bool,
        visits: &mut Vec<u8>,
        path: &mut Vec<Letter>,
        found: &mut Vec<Vec<Letter>>,
    ) {
        if found.len() >= MAX_PATHS {
            return;
        }
        if reach.finals.contains(&q) && !path.is_empty() {
            found.push(path.clone());
        }
        for &i in &out[q] {
            let t = &reach.transitions[i];
            if !waiting(t.label.loc) || visits[t.to] >= 2 {
                continue;
            }
            visits[t.to] += 1;
            path.push(t.label.clone());
            walk(t.to, reach, out, waiting, visits, path, found);
            path.pop();
            visits[t.to] -= 1;
        }
    }
    for &q in &reach.initial {
        visits[q] += 1;
        walk(q, reach, &out_edges, &waiting, &mut visits, &mut path, &mut candidates);
        visits[q] -= 1;
    }
    let mut seen = BTreeSet::new();
    let mut witnesses = Vec::new();
    for letters in candidates {
        if letters.iter().all(|l| l.loc == sem.exit) {
            continue;
        }
        let word = Automaton::word(&letters);
        let local_moves = apply_transducer_without_idling(sem, &word);
        if local_moves || sem.rules.iter().any(|r| !apply_rule(r, &word, &sem.ctx).0.is_empty()) {
            continue;
        }
        let w = Witness { letters };
        if seen.insert(w.locations()) {
            witnesses.push(w);
        }
    }
    witnesses
}

fn apply_transducer_without_idling(sem: &CompiledSemantics, word: &Automaton) -> bool {
    let mut t = sem.transducer.clone();
    let idle = crate::transducer::LatticeTransducer::inactivity_rule();
    t.rules.retain(|r| (r.guard.clone(), r.requires.clone(), r.outputs.clone()) != idle);
    !t.rules.is_empty() && !apply_transducer(&t, word, &sem.ctx).0.is_empty()
}
