//! Partitioned lattice automata over [`Letter`]s.
//!
//! Every label sits at a single location, which is its partition key. A
//! normalized automaton is deterministic and minimal over keys, with the
//! labels of merged transitions joined, and its states are numbered in
//! breadth-first order from the single initial state. Two normalized
//! automata built from the same language and label structure are therefore
//! structurally equal.

mod export;
mod ops;
mod widen;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::domain::{ConcreteLetter, GuardElement, Letter, Location};

pub use export::to_dot;
pub use ops::{
    accepts, enumerate_words, includes, intersection, intersect_guards, is_empty, map_labels,
    matches, path_enumerate, sub_automaton, union, union_all, MatchTriple,
};
pub use widen::{shape_cycle_transitions, widen_automata, WideningPolicy};

pub type State = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: State,
    pub label: Letter,
    pub to: State,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Automaton {
    pub states: usize,
    pub initial: BTreeSet<State>,
    pub finals: BTreeSet<State>,
    pub transitions: Vec<Transition>,
}

impl Automaton {
    /// The automaton with no states, recognizing nothing.
    pub fn empty() -> Automaton {
        Automaton {
            states: 0,
            initial: BTreeSet::new(),
            finals: BTreeSet::new(),
            transitions: Vec::new(),
        }
    }

    /// Accepts exactly the one-word language `letters` (as a chain).
    pub fn word(letters: &[Letter]) -> Automaton {
        let mut b = Builder::new();
        let mut q = b.add_state();
        b.set_initial(q);
        for l in letters {
            let t = b.add_state();
            b.add(q, l.clone(), t);
            q = t;
        }
        b.set_final(q);
        b.finish()
    }

    pub fn is_empty(&self) -> bool {
        is_empty(self)
    }

    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        out
    }

    /// The shape: transitions with labels replaced by their location.
    pub fn shape(&self) -> Shape {
        Shape {
            states: self.states,
            initial: self.initial.clone(),
            finals: self.finals.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| (t.from, t.label.loc, t.to))
                .collect(),
        }
    }

    pub fn locations(&self) -> BTreeSet<Location> {
        self.transitions.iter().map(|t| t.label.loc).collect()
    }

    pub fn normalize(&self) -> Automaton {
        let mut b = Builder::new();
        b.embed(self);
        b.finish()
    }
}

/// A finite automaton over locations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    pub states: usize,
    pub initial: BTreeSet<State>,
    pub finals: BTreeSet<State>,
    pub transitions: Vec<(State, Location, State)>,
}

/// Incremental construction of an automaton with epsilon edges.
/// [`Builder::finish`] normalizes.
#[derive(Debug, Clone, Default)]
pub struct Builder {
    states: usize,
    initial: BTreeSet<State>,
    finals: BTreeSet<State>,
    trans: Vec<(State, Letter, State)>,
    eps: Vec<(State, State)>,
}

impl Builder {
    pub fn new() -> Builder {
        Builder::default()
    }

    pub fn add_state(&mut self) -> State {
        self.states += 1;
        self.states - 1
    }

    pub fn set_initial(&mut self, q: State) {
        self.initial.insert(q);
    }

    pub fn set_final(&mut self, q: State) {
        self.finals.insert(q);
    }

    pub fn add(&mut self, from: State, label: Letter, to: State) {
        self.trans.push((from, label, to));
    }

    pub fn add_eps(&mut self, from: State, to: State) {
        if from != to {
            self.eps.push((from, to));
        }
    }

    /// Copies `a` in with fresh states, keeping its initial and final
    /// markers. Returns the offset of the copy.
    pub fn embed(&mut self, a: &Automaton) -> usize {
        let off = self.embed_states(a);
        self.initial.extend(a.initial.iter().map(|q| q + off));
        self.finals.extend(a.finals.iter().map(|q| q + off));
        off
    }

    /// Copies the states and transitions of `a` without markers.
    pub fn embed_states(&mut self, a: &Automaton) -> usize {
        let off = self.states;
        self.states += a.states;
        for t in &a.transitions {
            self.trans.push((t.from + off, t.label.clone(), t.to + off));
        }
        off
    }

    /// Copies the transitions of `a` accepted by `f` with relabelling.
    pub fn embed_mapped(&mut self, a: &Automaton, f: impl Fn(&Letter) -> Option<Letter>) -> usize {
        let off = self.states;
        self.states += a.states;
        for t in &a.transitions {
            if let Some(l) = f(&t.label) {
                self.trans.push((t.from + off, l, t.to + off));
            }
        }
        off
    }

    pub fn finish(self) -> Automaton {
        normalize_parts(self)
    }

    /// Ends construction without normalizing; epsilon edges are removed.
    pub fn finish_raw(self) -> Automaton {
        let (finals, trans) = remove_eps(&self);
        Automaton {
            states: self.states,
            initial: self.initial,
            finals,
            transitions: trans
                .into_iter()
                .map(|(from, label, to)| Transition { from, label, to })
                .collect(),
        }
    }
}

type Edge = (State, Letter, State);

fn remove_eps(b: &Builder) -> (BTreeSet<State>, Vec<Edge>) {
    if b.eps.is_empty() {
        return (b.finals.clone(), b.trans.clone());
    }
    let mut eps_out = vec![Vec::new(); b.states];
    for &(p, q) in &b.eps {
        eps_out[p].push(q);
    }
    let mut by_src: Vec<Vec<usize>> = vec![Vec::new(); b.states];
    for (i, t) in b.trans.iter().enumerate() {
        by_src[t.0].push(i);
    }
    let mut finals = BTreeSet::new();
    let mut trans = Vec::new();
    for q in 0..b.states {
        let mut seen = BTreeSet::from([q]);
        let mut stack = vec![q];
        while let Some(p) = stack.pop() {
            for &r in &eps_out[p] {
                if seen.insert(r) {
                    stack.push(r);
                }
            }
        }
        for p in seen {
            if b.finals.contains(&p) {
                finals.insert(q);
            }
            for &i in &by_src[p] {
                let (_, l, t) = &b.trans[i];
                trans.push((q, l.clone(), *t));
            }
        }
    }
    (finals, trans)
}

/// Indices of states both reachable from an initial state and
/// co-reachable to a final one.
fn useful_states(states: usize, initial: &BTreeSet<State>, finals: &BTreeSet<State>, trans: &[Edge]) -> Vec<bool> {
    let mut fwd = vec![Vec::new(); states];
    let mut bwd = vec![Vec::new(); states];
    for (p, _, q) in trans {
        fwd[*p].push(*q);
        bwd[*q].push(*p);
    }
    let reach = |start: &BTreeSet<State>, adj: &Vec<Vec<State>>| {
        let mut seen = vec![false; states];
        let mut stack: Vec<State> = start.iter().copied().collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(p) = stack.pop() {
            for &q in &adj[p] {
                if !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        seen
    };
    let f = reach(initial, &fwd);
    let b = reach(finals, &bwd);
    (0..states).map(|q| f[q] && b[q]).collect()
}

fn normalize_parts(b: Builder) -> Automaton {
    let (finals, trans) = remove_eps(&b);
    let useful = useful_states(b.states, &b.initial, &finals, &trans);
    let initial: BTreeSet<State> = b.initial.iter().copied().filter(|&q| useful[q]).collect();
    if initial.is_empty() {
        return Automaton::empty();
    }
    let mut by_src: Vec<Vec<usize>> = vec![Vec::new(); b.states];
    for (i, (p, _, q)) in trans.iter().enumerate() {
        if useful[*p] && useful[*q] {
            by_src[*p].push(i);
        }
    }

    // Subset construction, one successor per location.
    let mut ids: HashMap<BTreeSet<State>, usize> = HashMap::new();
    let mut subsets: Vec<BTreeSet<State>> = Vec::new();
    let mut dtrans: Vec<BTreeMap<Location, (Letter, usize)>> = Vec::new();
    ids.insert(initial.clone(), 0);
    subsets.push(initial);
    let mut next = 0;
    while next < subsets.len() {
        let mut groups: BTreeMap<Location, (Letter, BTreeSet<State>)> = BTreeMap::new();
        for &p in &subsets[next] {
            for &i in &by_src[p] {
                let (_, l, q) = &trans[i];
                match groups.get_mut(&l.loc) {
                    Some((acc, targets)) => {
                        if !l.leq(acc) {
                            *acc = acc.join(l);
                        }
                        targets.insert(*q);
                    }
                    None => {
                        groups.insert(l.loc, (l.clone(), BTreeSet::from([*q])));
                    }
                }
            }
        }
        let mut row = BTreeMap::new();
        for (loc, (label, targets)) in groups {
            let id = match ids.get(&targets) {
                Some(&id) => id,
                None => {
                    let id = subsets.len();
                    ids.insert(targets.clone(), id);
                    subsets.push(targets);
                    id
                }
            };
            row.insert(loc, (label, id));
        }
        dtrans.push(row);
        next += 1;
    }
    let n = subsets.len();
    let is_final: Vec<bool> = subsets.iter().map(|s| s.iter().any(|q| finals.contains(q))).collect();

    // Moore refinement with interned labels.
    let mut label_ids: HashMap<&Letter, usize> = HashMap::new();
    for row in &dtrans {
        for (l, _) in row.values() {
            let k = label_ids.len();
            label_ids.entry(l).or_insert(k);
        }
    }
    let mut block: Vec<usize> = is_final.iter().map(|&f| f as usize).collect();
    let mut count = block.iter().collect::<BTreeSet<_>>().len();
    loop {
        let mut sigs: HashMap<(usize, Vec<(Location, usize, usize)>), usize> = HashMap::new();
        let mut new_block = vec![0; n];
        for q in 0..n {
            let sig: Vec<(Location, usize, usize)> = dtrans[q]
                .iter()
                .map(|(loc, (l, t))| (*loc, label_ids[l], block[*t]))
                .collect();
            let k = sigs.len();
            new_block[q] = *sigs.entry((block[q], sig)).or_insert(k);
        }
        let new_count = sigs.len();
        block = new_block;
        if new_count == count {
            break;
        }
        count = new_count;
    }

    // Canonical numbering: breadth-first from the initial block, edges in
    // location order.
    let mut rep = vec![usize::MAX; count];
    for q in (0..n).rev() {
        rep[block[q]] = q;
    }
    let mut number = vec![usize::MAX; count];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([block[0]]);
    number[block[0]] = 0;
    while let Some(bk) = queue.pop_front() {
        order.push(bk);
        for (_, t) in dtrans[rep[bk]].values() {
            let tb = block[*t];
            if number[tb] == usize::MAX {
                number[tb] = order.len() + queue.len();
                queue.push_back(tb);
            }
        }
    }
    let mut transitions = Vec::new();
    let mut out_finals = BTreeSet::new();
    for &bk in &order {
        let q = rep[bk];
        if is_final[q] {
            out_finals.insert(number[bk]);
        }
        for (l, t) in dtrans[q].values() {
            transitions.push(Transition {
                from: number[bk],
                label: l.clone(),
                to: number[block[*t]],
            });
        }
    }
    transitions.sort_by(|a, b| (a.from, a.label.loc, a.to).cmp(&(b.from, b.label.loc, b.to)));
    Automaton {
        states: order.len(),
        initial: BTreeSet::from([0]),
        finals: out_finals,
        transitions,
    }
}

/// An automaton whose transitions carry guards; used for properties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardAutomaton {
    pub states: Vec<String>,
    pub initial: BTreeSet<State>,
    pub finals: BTreeSet<State>,
    pub transitions: Vec<(State, GuardElement, State)>,
}

impl GuardAutomaton {
    pub fn locations(&self) -> BTreeSet<Location> {
        self.transitions
            .iter()
            .filter_map(|(_, g, _)| g.locs.as_ref())
            .flatten()
            .copied()
            .collect()
    }

    pub fn accepts(&self, word: &[ConcreteLetter]) -> bool {
        let mut cur: BTreeSet<State> = self.initial.clone();
        for s in word {
            cur = self
                .transitions
                .iter()
                .filter(|(p, g, _)| cur.contains(p) && g.contains(s))
                .map(|(_, _, q)| *q)
                .collect();
        }
        cur.iter().any(|q| self.finals.contains(q))
    }
}
