//! Widening of lattice automata.
//!
//! Labels are extrapolated with the letter widening on transitions that
//! can repeat: those at designated widening locations and those at
//! unbounded positions in words, that is, leaving a state reachable from
//! a cycle of the shape. When words keep growing, states are first merged
//! by the locations on their incoming paths of length at most `k`, which
//! folds repeated letters into loops.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{includes, union, Automaton, Builder, State};
use crate::domain::{Letter, Location};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WideningPolicy {
    /// Locations whose labels are always widened.
    pub points: BTreeSet<Location>,
    /// Widen labels on and after shape cycles as well.
    pub cycles: bool,
    /// Merge states by incoming paths of this length when the shape
    /// changes; `None` keeps shapes as they are.
    pub quotient_k: Option<usize>,
}

impl Default for WideningPolicy {
    fn default() -> Self {
        WideningPolicy {
            points: BTreeSet::new(),
            cycles: true,
            quotient_k: None,
        }
    }
}

/// Upper bound of `a` and `b` that stabilizes increasing sequences.
pub fn widen_automata(a: &Automaton, b: &Automaton, policy: &WideningPolicy) -> Automaton {
    let mut b = if includes(b, a) { b.clone() } else { union(a, b) };
    if b.is_empty() || a.is_empty() {
        return b;
    }
    if let Some(k) = policy.quotient_k {
        if a.shape() != b.shape() {
            b = quotient(&b, k);
        }
    }
    let on_cycle = if policy.cycles {
        after_cycle_transitions(&b)
    } else {
        vec![false; b.transitions.len()]
    };

    // Pair states of `b` with the states of `a` reached by the same
    // location word.
    let a_out = a.out_edges();
    let b_out = b.out_edges();
    let mut pairs: BTreeSet<(State, State)> = BTreeSet::new();
    let mut stack = vec![(0, 0)];
    while let Some((qb, qa)) = stack.pop() {
        if !pairs.insert((qb, qa)) {
            continue;
        }
        for &i in &b_out[qb] {
            let tb = &b.transitions[i];
            for &j in &a_out[qa] {
                let ta = &a.transitions[j];
                if ta.label.loc == tb.label.loc {
                    stack.push((tb.to, ta.to));
                }
            }
        }
    }
    let mut partners: BTreeMap<usize, Letter> = BTreeMap::new();
    for &(qb, qa) in &pairs {
        for &i in &b_out[qb] {
            let tb = &b.transitions[i];
            for &j in &a_out[qa] {
                let ta = &a.transitions[j];
                if ta.label.loc == tb.label.loc {
                    let joined = match partners.get(&i) {
                        Some(l) => l.join(&ta.label),
                        None => ta.label.clone(),
                    };
                    partners.insert(i, joined);
                }
            }
        }
    }

    let mut builder = Builder::new();
    for _ in 0..b.states {
        builder.add_state();
    }
    for &q in &b.initial {
        builder.set_initial(q);
    }
    for &q in &b.finals {
        builder.set_final(q);
    }
    for (i, t) in b.transitions.iter().enumerate() {
        let eligible = on_cycle[i] || policy.points.contains(&t.label.loc);
        let label = match partners.get(&i) {
            Some(old) if eligible && !t.label.leq(old) => old.widen(&old.join(&t.label)),
            _ => t.label.clone(),
        };
        builder.add(t.from, label, t.to);
    }
    builder.finish()
}

/// For each transition, whether it lies on a cycle.
pub fn shape_cycle_transitions(a: &Automaton) -> Vec<bool> {
    let comp = scc(a);
    a.transitions.iter().map(|t| comp[t.from] == comp[t.to]).collect()
}

/// For each transition, whether its source is reachable from a cycle.
pub fn after_cycle_transitions(a: &Automaton) -> Vec<bool> {
    let comp = scc(a);
    let mut size = vec![0usize; a.states];
    for &c in &comp {
        size[c] += 1;
    }
    let mut marked: Vec<bool> = (0..a.states).map(|q| size[comp[q]] > 1).collect();
    for t in &a.transitions {
        if t.from == t.to {
            marked[t.from] = true;
        }
    }
    let out = a.out_edges();
    let mut stack: Vec<State> = (0..a.states).filter(|&q| marked[q]).collect();
    while let Some(q) = stack.pop() {
        for &i in &out[q] {
            let to = a.transitions[i].to;
            if !marked[to] {
                marked[to] = true;
                stack.push(to);
            }
        }
    }
    a.transitions.iter().map(|t| marked[t.from]).collect()
}

/// Strongly connected components (Kosaraju, iterative).
fn scc(a: &Automaton) -> Vec<usize> {
    let n = a.states;
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for t in &a.transitions {
        fwd[t.from].push(t.to);
        bwd[t.to].push(t.from);
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if i < fwd[v].len() {
                stack.push((v, i + 1));
                let w = fwd[v][i];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut c = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = c;
        while let Some(v) = stack.pop() {
            for &w in &bwd[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    stack.push(w);
                }
            }
        }
        c += 1;
    }
    comp
}

type Signature = (bool, BTreeSet<(bool, Vec<Location>)>);

/// Merges states with the same incoming location paths of length `k`
/// (shorter paths count only when they start at the initial state).
pub fn quotient(a: &Automaton, k: usize) -> Automaton {
    let n = a.states;
    let mut sigs: Vec<Signature> = (0..n)
        .map(|q| (a.initial.contains(&q), BTreeSet::new()))
        .collect();
    // paths[q]: incoming location strings of the current length, each
    // tagged with whether it starts at an initial state.
    let mut paths: Vec<BTreeSet<(bool, Vec<Location>)>> = (0..n)
        .map(|q| BTreeSet::from([(a.initial.contains(&q), Vec::new())]))
        .collect();
    for len in 1..=k {
        let mut next: Vec<BTreeSet<(bool, Vec<Location>)>> = vec![BTreeSet::new(); n];
        for t in &a.transitions {
            for (anchored, s) in &paths[t.from] {
                let mut s2 = s.clone();
                s2.push(t.label.loc);
                next[t.to].insert((*anchored, s2));
            }
        }
        for q in 0..n {
            for (anchored, s) in &paths[q] {
                if *anchored && s.len() == len - 1 {
                    sigs[q].1.insert((true, s.clone()));
                }
            }
        }
        paths = next;
    }
    for q in 0..n {
        for (_, s) in &paths[q] {
            sigs[q].1.insert((false, s.clone()));
        }
    }
    let mut class: BTreeMap<&Signature, State> = BTreeMap::new();
    let mut of = vec![0; n];
    for q in 0..n {
        let c = class.len();
        of[q] = *class.entry(&sigs[q]).or_insert(c);
    }
    let mut b = Builder::new();
    for _ in 0..class.len() {
        b.add_state();
    }
    for &q in &a.initial {
        b.set_initial(of[q]);
    }
    for &q in &a.finals {
        b.set_final(of[q]);
    }
    for t in &a.transitions {
        b.add(of[t.from], t.label.clone(), of[t.to]);
    }
    b.finish()
}
