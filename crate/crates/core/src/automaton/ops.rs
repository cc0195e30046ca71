use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{Automaton, Builder, GuardAutomaton, State};
use crate::domain::{ConcreteLetter, GuardElement, Letter, VarKinds};

pub fn union(a: &Automaton, b: &Automaton) -> Automaton {
    let mut builder = Builder::new();
    builder.embed(a);
    builder.embed(b);
    builder.finish()
}

/// Normalized union of many automata, merged pairwise so intermediate
/// determinizations stay small.
pub fn union_all(mut parts: Vec<Automaton>) -> Automaton {
    parts.retain(|a| !a.is_empty());
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => union(&a, &b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().unwrap_or_else(Automaton::empty)
}

/// Product construction with label meet. The raw product is returned
/// normalized.
pub fn intersection(a: &Automaton, b: &Automaton, kinds: &VarKinds) -> Automaton {
    product(a, |q| b.initial.contains(&q), |q| b.finals.contains(&q), b.states, |p, l| {
        b.transitions
            .iter()
            .filter(|t| t.from == p)
            .filter_map(|t| Some((t.label.meet(l, kinds)?, t.to)))
            .collect()
    })
    .finish()
}

/// Product of a lattice automaton with a guard automaton, without
/// normalization (so paths can be reported as they are).
pub fn intersect_guards(a: &Automaton, g: &GuardAutomaton, kinds: &VarKinds) -> Automaton {
    product(
        a,
        |q| g.initial.contains(&q),
        |q| g.finals.contains(&q),
        g.states.len(),
        |p, l| {
            g.transitions
                .iter()
                .filter(|(from, _, _)| *from == p)
                .filter_map(|(_, guard, to)| Some((guard.meet(l, kinds)?, *to)))
                .collect()
        },
    )
    .finish_raw()
}

fn product(
    a: &Automaton,
    other_initial: impl Fn(State) -> bool,
    other_final: impl Fn(State) -> bool,
    other_states: usize,
    step: impl Fn(State, &Letter) -> Vec<(Letter, State)>,
) -> Builder {
    let mut b = Builder::new();
    let mut ids: HashMap<(State, State), State> = HashMap::new();
    let mut stack = Vec::new();
    let mut get = |b: &mut Builder, stack: &mut Vec<(State, State)>, pair: (State, State)| {
        *ids.entry(pair).or_insert_with(|| {
            stack.push(pair);
            b.add_state()
        })
    };
    for &qa in &a.initial {
        for qb in (0..other_states).filter(|&q| other_initial(q)) {
            let s = get(&mut b, &mut stack, (qa, qb));
            b.set_initial(s);
        }
    }
    let out = a.out_edges();
    while let Some((qa, qb)) = stack.pop() {
        let s = get(&mut b, &mut Vec::new(), (qa, qb));
        if a.finals.contains(&qa) && other_final(qb) {
            b.set_final(s);
        }
        for &i in &out[qa] {
            let t = &a.transitions[i];
            for (label, tb) in step(qb, &t.label) {
                let d = get(&mut b, &mut stack, (t.to, tb));
                b.add(s, label, d);
            }
        }
    }
    b
}

/// No accepting path.
pub fn is_empty(a: &Automaton) -> bool {
    let out = a.out_edges();
    let mut seen = vec![false; a.states];
    let mut stack: Vec<State> = a.initial.iter().copied().collect();
    for &q in &stack {
        seen[q] = true;
    }
    while let Some(p) = stack.pop() {
        if a.finals.contains(&p) {
            return false;
        }
        for &i in &out[p] {
            let q = a.transitions[i].to;
            if !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    true
}

/// Sound test of `L(b) ⊆ L(a)` for normalized automata, by simulating `b`
/// in `a` along equal locations with label inclusion.
pub fn includes(a: &Automaton, b: &Automaton) -> bool {
    if b.initial.is_empty() {
        return true;
    }
    if a.initial.is_empty() {
        return false;
    }
    let a_out = a.out_edges();
    let b_out = b.out_edges();
    // With one initial state on each side (normalized input) the
    // simulation below is a product walk.
    if b.initial.len() != 1 || a.initial.len() != 1 {
        return includes(&a.normalize(), &b.normalize());
    }
    let mut seen: HashSet<(State, State)> = HashSet::new();
    let mut stack = vec![(b.initial.first().copied().unwrap(), a.initial.first().copied().unwrap())];
    while let Some((qb, qa)) = stack.pop() {
        if !seen.insert((qb, qa)) {
            continue;
        }
        if b.finals.contains(&qb) && !a.finals.contains(&qa) {
            return false;
        }
        for &i in &b_out[qb] {
            let tb = &b.transitions[i];
            let mut matched = false;
            for &j in &a_out[qa] {
                let ta = &a.transitions[j];
                if ta.label.loc == tb.label.loc {
                    if !tb.label.leq(&ta.label) {
                        return false;
                    }
                    stack.push((tb.to, ta.to));
                    matched = true;
                }
            }
            if !matched {
                return false;
            }
        }
    }
    true
}

/// A matching of a guard word against a path of the automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchTriple {
    pub begin: State,
    pub letters: Vec<Letter>,
    pub end: State,
}

/// All paths of length `|w|` whose labels meet the guards non-trivially.
pub fn matches(w: &[GuardElement], a: &Automaton, kinds: &VarKinds) -> Vec<MatchTriple> {
    assert!(!w.is_empty(), "guard word must be non-empty");
    let out = a.out_edges();
    let mut result = Vec::new();
    for q in 0..a.states {
        let mut partial = vec![(q, Vec::new())];
        for g in w {
            let mut next = Vec::new();
            for (p, letters) in partial {
                for &i in &out[p] {
                    let t = &a.transitions[i];
                    if let Some(v) = g.meet(&t.label, kinds) {
                        let mut l2: Vec<Letter> = letters.clone();
                        l2.push(v);
                        next.push((t.to, l2));
                    }
                }
            }
            partial = next;
        }
        for (end, letters) in partial {
            result.push(MatchTriple {
                begin: q,
                letters,
                end,
            });
        }
    }
    result
}

/// All label sequences of length `n` starting at `q`, with end states.
pub fn path_enumerate(a: &Automaton, q: State, n: usize) -> Vec<(Vec<Letter>, State)> {
    let out = a.out_edges();
    let mut partial = vec![(Vec::new(), q)];
    for _ in 0..n {
        let mut next = Vec::new();
        for (letters, p) in partial {
            for &i in &out[p] {
                let t = &a.transitions[i];
                let mut l2 = letters.clone();
                l2.push(t.label.clone());
                next.push((l2, t.to));
            }
        }
        partial = next;
    }
    partial
}

/// The same automaton with initial state `qb` and final state `qe`.
pub fn sub_automaton(a: &Automaton, qb: State, qe: State) -> Automaton {
    let mut sub = a.clone();
    sub.initial = BTreeSet::from([qb]);
    sub.finals = BTreeSet::from([qe]);
    sub
}

/// Relabels every transition; transitions mapped to bottom disappear.
pub fn map_labels(a: &Automaton, f: impl Fn(&Letter) -> Option<Letter>) -> Automaton {
    let mut out = a.clone();
    out.transitions = a
        .transitions
        .iter()
        .filter_map(|t| {
            Some(super::Transition {
                from: t.from,
                label: f(&t.label)?,
                to: t.to,
            })
        })
        .collect();
    out
}

/// Membership of a concrete word.
pub fn accepts(a: &Automaton, word: &[ConcreteLetter]) -> bool {
    let out = a.out_edges();
    let mut cur: BTreeSet<State> = a.initial.clone();
    for s in word {
        let mut next = BTreeSet::new();
        for &p in &cur {
            for &i in &out[p] {
                let t = &a.transitions[i];
                if t.label.contains(s) {
                    next.insert(t.to);
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        cur = next;
    }
    cur.iter().any(|q| a.finals.contains(q))
}

/// Accepted words of length at most `max_len` over a finite set of
/// concrete letters.
pub fn enumerate_words(
    a: &Automaton,
    universe: &[ConcreteLetter],
    max_len: usize,
) -> BTreeSet<Vec<ConcreteLetter>> {
    let out = a.out_edges();
    let mut result = BTreeSet::new();
    let mut layer: BTreeMap<Vec<ConcreteLetter>, BTreeSet<State>> = BTreeMap::new();
    layer.insert(Vec::new(), a.initial.clone());
    for len in 0..=max_len {
        let mut next: BTreeMap<Vec<ConcreteLetter>, BTreeSet<State>> = BTreeMap::new();
        for (w, states) in &layer {
            if states.iter().any(|q| a.finals.contains(q)) {
                result.insert(w.clone());
            }
            if len == max_len {
                continue;
            }
            for &p in states {
                for &i in &out[p] {
                    let t = &a.transitions[i];
                    for s in universe.iter().filter(|s| t.label.contains(s)) {
                        let mut w2 = w.clone();
                        w2.push(s.clone());
                        next.entry(w2).or_default().insert(t.to);
                    }
                }
            }
        }
        layer = next;
    }
    result
}
