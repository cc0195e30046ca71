//! Symbolic rewriting rules for communication, creation and reduction.
//!
//! A rule's guard is `g0* w1 g1* ... wn gn*`: starred guards `g_i` match
//! arbitrary runs of letters and each `w_i` matches a fixed-length word.
//! Its rewriters produce `f0 h0(..) f1 h1(..) ... fn hn(..) f_{n+1}`: each
//! `f_i` (for `1 <= i <= n`) replaces the letters matched by `w_i`, `f0` and
//! `f_{n+1}` insert at the ends, and each `h_i` rewrites every letter of the
//! `i`-th starred run. The matched letters are numbered `0..N` across all
//! `w_i`; a starred rewriter sees them plus the starred letter as slot `N`.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::automaton::{map_labels, matches, sub_automaton, Automaton, Builder, MatchTriple, State, union_all};
use crate::domain::{ConcreteLetter, GuardElement, Interval, Letter, Location, Rational};
use crate::expr::{qualified, BinOp, Expr, ID_VAR};
use crate::transducer::{
    abstract_requires, concrete_joint, concrete_requires, Ctx, IdAction, Rewriter, FRESH,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    pub name: String,
    /// `g_0 .. g_n`.
    pub stars: Vec<GuardElement>,
    /// `w_1 .. w_n`, each non-empty.
    pub words: Vec<Vec<GuardElement>>,
    /// Conditions over the matched letters, with slot-qualified names.
    pub requires: Vec<Expr>,
    /// `f_0 .. f_{n+1}`.
    pub inserts: Vec<Vec<Rewriter>>,
    /// `h_0 .. h_n`.
    pub star_maps: Vec<Rewriter>,
}

impl RewriteRule {
    pub fn arity(&self) -> usize {
        self.words.iter().map(Vec::len).sum()
    }

    fn check(&self) {
        let n = self.words.len();
        assert_eq!(self.stars.len(), n + 1, "rule {}: star guards", self.name);
        assert_eq!(self.inserts.len(), n + 2, "rule {}: inserted words", self.name);
        assert_eq!(self.star_maps.len(), n + 1, "rule {}: star rewriters", self.name);
        assert!(self.words.iter().all(|w| !w.is_empty()), "rule {}: empty word", self.name);
    }

    fn uses_fresh(&self) -> bool {
        self.inserts.iter().flatten().chain(&self.star_maps).any(|r| {
            r.id == IdAction::Fresh || r.assigns.iter().any(|(_, e)| e.vars().contains(FRESH))
        })
    }
}

/// A segment of the input automaton between two states, restricted to
/// one starred guard.
struct Segment {
    aut: Automaton,
    min_len: usize,
    max_len: Option<usize>,
}

impl Segment {
    fn build(filtered: &Automaton, entry: State, exit: Option<State>) -> Option<Segment> {
        let mut sub = sub_automaton(filtered, entry, 0);
        if exit.is_none() {
            sub.finals = filtered.finals.clone();
        } else {
            sub.finals = BTreeSet::from([exit.unwrap()]);
        }
        let aut = sub.normalize();
        if aut.is_empty() {
            return None;
        }
        let (min_len, max_len) = length_range(&aut);
        Some(Segment { aut, min_len, max_len })
    }
}

/// Shortest and longest accepted word length (`None` when unbounded) of
/// a trimmed automaton.
fn length_range(a: &Automaton) -> (usize, Option<usize>) {
    let out = a.out_edges();
    let mut indeg = vec![0usize; a.states];
    for t in &a.transitions {
        indeg[t.to] += 1;
    }
    let mut order = Vec::new();
    let mut ready: Vec<State> = (0..a.states).filter(|&q| indeg[q] == 0).collect();
    while let Some(q) = ready.pop() {
        order.push(q);
        for &i in &out[q] {
            let t = a.transitions[i].to;
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.push(t);
            }
        }
    }
    // Shortest path by BFS.
    let mut dist = vec![usize::MAX; a.states];
    let mut queue = std::collections::VecDeque::new();
    for &q in &a.initial {
        dist[q] = 0;
        queue.push_back(q);
    }
    while let Some(q) = queue.pop_front() {
        for &i in &out[q] {
            let t = a.transitions[i].to;
            if dist[t] == usize::MAX {
                dist[t] = dist[q] + 1;
                queue.push_back(t);
            }
        }
    }
    let min = a.finals.iter().map(|&q| dist[q]).min().unwrap_or(0);
    if order.len() < a.states {
        return (min, None);
    }
    let mut longest = vec![None::<usize>; a.states];
    for &q in &a.initial {
        longest[q] = Some(0);
    }
    for &q in &order {
        if let Some(d) = longest[q] {
            for &i in &out[q] {
                let t = a.transitions[i].to;
                longest[t] = Some(longest[t].map_or(d + 1, |e| e.max(d + 1)));
            }
        }
    }
    let max = a.finals.iter().filter_map(|&q| longest[q]).max().unwrap_or(0);
    (min, Some(max))
}

struct Applier<'a> {
    rule: &'a RewriteRule,
    a: &'a Automaton,
    ctx: &'a Ctx,
    filtered: Vec<Automaton>,
    segments: HashMap<(usize, State, Option<State>), Option<std::rc::Rc<Segment>>>,
    builder: Builder,
    parts: Vec<Automaton>,
    alarms: BTreeSet<Location>,
}

impl Applier<'_> {
    fn segment(&mut self, i: usize, entry: State, exit: Option<State>) -> Option<std::rc::Rc<Segment>> {
        let filtered = &self.filtered[i];
        self.segments
            .entry((i, entry, exit))
            .or_insert_with(|| Segment::build(filtered, entry, exit).map(std::rc::Rc::new))
            .clone()
    }

    fn chain(&mut self, mut cur: State, letters: Vec<Letter>) -> State {
        for l in letters {
            let next = self.builder.add_state();
            self.builder.add(cur, l, next);
            cur = next;
        }
        cur
    }

    fn instance(&mut self, chosen: &[MatchTriple], segs: &[std::rc::Rc<Segment>]) {
        let rule = self.rule;
        let ctx = self.ctx;
        let letters: Vec<Letter> = chosen.iter().flat_map(|m| m.letters.iter().cloned()).collect();
        let big_n = letters.len();
        let Some(mut joint) = abstract_requires(&letters, &rule.requires, ctx) else {
            return;
        };
        if rule.uses_fresh() {
            let Some(j) = constrain_fresh(joint, big_n, segs, ctx) else {
                return;
            };
            joint = j;
        }
        let mut alarm = false;
        let mut inserted: Vec<Vec<Letter>> = Vec::new();
        for f in &rule.inserts {
            inserted.push(
                f.iter()
                    .map(|r| {
                        let (l, a) = r.apply(&joint, &letters, ctx);
                        alarm |= a;
                        l
                    })
                    .collect(),
            );
        }
        let start = self.builder.add_state();
        self.builder.set_initial(start);
        let mut cur = start;
        for (i, seg) in segs.iter().enumerate() {
            cur = self.chain(cur, std::mem::take(&mut inserted[i]));
            let h = &rule.star_maps[i];
            let off = if h.is_identity() {
                self.builder.embed_states(&seg.aut)
            } else {
                let star_alarm = std::cell::Cell::new(false);
                let off = self.builder.embed_mapped(&seg.aut, |x| {
                    let mut inputs = letters.clone();
                    inputs.push(x.clone());
                    let j = joint.product(&x.env.project(|_| true, |v| qualified(big_n, v)));
                    let (l, a) = h.apply(&j, &inputs, ctx);
                    if a {
                        star_alarm.set(true);
                    }
                    Some(l)
                });
                alarm |= star_alarm.get();
                off
            };
            for &q in &seg.aut.initial {
                self.builder.add_eps(cur, off + q);
            }
            let exit = self.builder.add_state();
            for &q in &seg.aut.finals {
                self.builder.add_eps(off + q, exit);
            }
            cur = exit;
        }
        let last = std::mem::take(&mut inserted[segs.len()]);
        cur = self.chain(cur, last);
        self.builder.set_final(cur);
        self.parts.push(std::mem::take(&mut self.builder).finish());
        if alarm {
            if let Some(l) = letters.first() {
                self.alarms.insert(l.loc);
            }
        }
    }

    fn search(&mut self, i: usize, prev_end: State, chosen: &mut Vec<MatchTriple>, segs: &mut Vec<std::rc::Rc<Segment>>, all: &[Vec<MatchTriple>]) {
        let n = self.rule.words.len();
        if i == n {
            if let Some(last) = self.segment(n, prev_end, None) {
                segs.push(last);
                self.instance(chosen, segs);
                segs.pop();
            }
            return;
        }
        for m in &all[i] {
            let Some(seg) = self.segment(i, prev_end, Some(m.begin)) else {
                continue;
            };
            segs.push(seg);
            chosen.push(m.clone());
            self.search(i + 1, m.end, chosen, segs, all);
            chosen.pop();
            segs.pop();
        }
    }
}

/// `fresh` is the current word length; with positional numbering it is
/// also one past the last matched letter's id plus the suffix length.
fn constrain_fresh(
    joint: crate::domain::Env,
    big_n: usize,
    segs: &[std::rc::Rc<Segment>],
    ctx: &Ctx,
) -> Option<crate::domain::Env> {
    let min: usize = big_n + segs.iter().map(|s| s.min_len).sum::<usize>();
    let max: Option<usize> = segs
        .iter()
        .try_fold(big_n, |acc, s| s.max_len.map(|m| acc + m));
    let total = match max {
        Some(m) => Interval::range(min as i64, m as i64),
        None => Interval::at_least(Rational::from_int(min as i64)),
    };
    let mut j = joint.constrain(FRESH, total)?;
    if ctx.positional_fresh && big_n > 0 {
        let suffix = segs.last().unwrap();
        let anchor = Expr::var(qualified(big_n - 1, ID_VAR));
        let plus = |k: usize| Expr::bin(BinOp::Add, anchor.clone(), Expr::int(1 + k as i64));
        if suffix.max_len == Some(suffix.min_len) {
            j = j.filter(&Expr::bin(BinOp::Eq, Expr::var(FRESH), plus(suffix.min_len)), true, &ctx.kinds)?;
        } else {
            j = j.filter(&Expr::bin(BinOp::Ge, Expr::var(FRESH), plus(suffix.min_len)), true, &ctx.kinds)?;
            if let Some(m) = suffix.max_len {
                j = j.filter(&Expr::bin(BinOp::Le, Expr::var(FRESH), plus(m)), true, &ctx.kinds)?;
            }
        }
    }
    Some(j)
}

/// Applies `rule` to the language of normalized `a`, with the locations
/// where a division by zero may happen.
pub fn apply_rule(rule: &RewriteRule, a: &Automaton, ctx: &Ctx) -> (Automaton, BTreeSet<Location>) {
    rule.check();
    if a.is_empty() {
        return (Automaton::empty(), BTreeSet::new());
    }
    let filtered: Vec<Automaton> = rule
        .stars
        .iter()
        .map(|g| map_labels(a, |l| g.meet(l, &ctx.kinds)))
        .collect();
    let all: Vec<Vec<MatchTriple>> = rule.words.iter().map(|w| matches(w, a, &ctx.kinds)).collect();
    if all.iter().any(Vec::is_empty) {
        return (Automaton::empty(), BTreeSet::new());
    }
    let mut ap = Applier {
        rule,
        a,
        ctx,
        filtered,
        segments: HashMap::new(),
        builder: Builder::new(),
        parts: Vec::new(),
        alarms: BTreeSet::new(),
    };
    for &q0 in &ap.a.initial.clone() {
        ap.search(0, q0, &mut Vec::new(), &mut Vec::new(), &all);
    }
    (union_all(ap.parts), ap.alarms)
}

/// All images of a concrete word under `rule`.
pub fn apply_rule_concrete(rule: &RewriteRule, word: &[ConcreteLetter], ctx: &Ctx) -> BTreeSet<Vec<ConcreteLetter>> {
    rule.check();
    let mut out = BTreeSet::new();
    let n = rule.words.len();
    // Start positions of each w_i.
    fn place(
        rule: &RewriteRule,
        word: &[ConcreteLetter],
        i: usize,
        from: usize,
        starts: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        let n = rule.words.len();
        let star_ok = |lo: usize, hi: usize, g: &GuardElement| word[lo..hi].iter().all(|s| g.contains(s));
        if i == n {
            if star_ok(from, word.len(), &rule.stars[n]) {
                found.push(starts.clone());
            }
            return;
        }
        let len = rule.words[i].len();
        if from + len > word.len() {
            return;
        }
        for p in from..=word.len() - len {
            if p > from && !rule.stars[i].contains(&word[p - 1]) {
                break;
            }
            if word[p..p + len].iter().zip(&rule.words[i]).all(|(s, g)| g.contains(s)) {
                starts.push(p);
                place(rule, word, i + 1, p + len, starts, found);
                starts.pop();
            }
        }
    }
    let mut found = Vec::new();
    place(rule, word, 0, 0, &mut Vec::new(), &mut found);
    for starts in found {
        let mut matched = Vec::new();
        for (i, &p) in starts.iter().enumerate() {
            matched.extend_from_slice(&word[p..p + rule.words[i].len()]);
        }
        let mut joint = concrete_joint(&matched);
        joint.insert(FRESH.to_string(), Rational::from_int(word.len() as i64));
        if !concrete_requires(&rule.requires, &joint) {
            continue;
        }
        let mut result = Vec::new();
        let mut ok = true;
        let mut cursor = 0;
        for i in 0..=n {
            for r in &rule.inserts[i] {
                match r.apply_concrete(&joint, &matched, ctx) {
                    Some(l) => result.push(l),
                    None => ok = false,
                }
            }
            let seg_end = if i < n { starts[i] } else { word.len() };
            for x in &word[cursor..seg_end] {
                let mut inputs = matched.clone();
                inputs.push(x.clone());
                let mut j = joint.clone();
                for (k, v) in concrete_joint(std::slice::from_ref(x)) {
                    j.insert(k.replacen("0.", &format!("{}.", matched.len()), 1), v);
                }
                match rule.star_maps[i].apply_concrete(&j, &inputs, ctx) {
                    Some(l) => result.push(l),
                    None => ok = false,
                }
            }
            if i < n {
                cursor = starts[i] + rule.words[i].len();
            }
        }
        for r in &rule.inserts[n + 1] {
            match r.apply_concrete(&joint, &matched, ctx) {
                Some(l) => result.push(l),
                None => ok = false,
            }
        }
        if ok {
            out.insert(result);
        }
    }
    out
}

/// A communication endpoint: the instruction at `from` moving to `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommEdge {
    pub from: Location,
    pub to: Location,
    /// Partner id expression; `None` is `any_id`.
    pub partner: Option<Expr>,
    pub var: String,
}

/// The two rules (sender first, receiver first) for a send/receive pair.
pub fn make_send_receive_rules(send: &CommEdge, recv: &CommEdge) -> [RewriteRule; 2] {
    let build = |sender_first: bool| {
        let (s, r) = if sender_first { (0, 1) } else { (1, 0) };
        let mut requires = Vec::new();
        if let Some(e) = &send.partner {
            requires.push(Expr::bin(BinOp::Eq, Expr::var(qualified(r, ID_VAR)), e.qualify(s)));
        }
        if let Some(e) = &recv.partner {
            requires.push(Expr::bin(BinOp::Eq, Expr::var(qualified(s, ID_VAR)), e.qualify(r)));
        }
        let sender = Rewriter::identity(s).goto(send.to);
        let receiver = Rewriter::identity(r)
            .goto(recv.to)
            .assign(recv.var.clone(), Expr::var(qualified(s, &send.var)));
        let (w1, w2, f1, f2) = if sender_first {
            (send.from, recv.from, sender, receiver)
        } else {
            (recv.from, send.from, receiver, sender)
        };
        RewriteRule {
            name: format!(
                "comm {}->{} {}",
                send.from,
                recv.from,
                if sender_first { "sr" } else { "rs" }
            ),
            stars: vec![GuardElement::top(), GuardElement::top(), GuardElement::top()],
            words: vec![vec![GuardElement::at(w1)], vec![GuardElement::at(w2)]],
            requires,
            inserts: vec![vec![], vec![f1], vec![f2], vec![]],
            star_maps: vec![Rewriter::identity(2); 3],
        }
    };
    [build(true), build(false)]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastEdge {
    pub from: Location,
    pub to: Location,
    pub root: Expr,
    pub var: String,
}

/// Every process is at the broadcast; the root (whose `id` equals the
/// root expression) sends `var` to all others; everyone moves on.
pub fn make_broadcast_rule(edge: &BroadcastEdge) -> RewriteRule {
    let at = GuardElement::at(edge.from);
    let copy = Rewriter::identity(1)
        .goto(edge.to)
        .assign(edge.var.clone(), Expr::var(qualified(0, &edge.var)));
    RewriteRule {
        name: format!("broadcast {}", edge.from),
        stars: vec![at.clone(), at.clone()],
        words: vec![vec![at.with_cond(Expr::bin(BinOp::Eq, Expr::var(ID_VAR), edge.root.clone()))]],
        requires: vec![],
        inserts: vec![vec![], vec![Rewriter::identity(0).goto(edge.to)], vec![]],
        star_maps: vec![copy.clone(), copy],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateEdge {
    pub from: Location,
    pub to: Location,
    pub var: String,
    /// Entry location of new processes.
    pub entry: Location,
}

/// The creator stores the fresh id in `var`; a new process with that id
/// and all-zero variables is appended.
pub fn make_create_rule(edge: &CreateEdge) -> RewriteRule {
    RewriteRule {
        name: format!("create {}", edge.from),
        stars: vec![GuardElement::top(), GuardElement::top()],
        words: vec![vec![GuardElement::at(edge.from)]],
        requires: vec![],
        inserts: vec![
            vec![],
            vec![Rewriter::identity(0).goto(edge.to).assign(edge.var.clone(), Expr::var(FRESH))],
            vec![Rewriter::new_process(edge.entry, IdAction::Fresh)],
        ],
        star_maps: vec![Rewriter::identity(1); 2],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceOp {
    Sum,
    Product,
    Min,
    Max,
}

impl ReduceOp {
    pub fn binop(self) -> BinOp {
        match self {
            ReduceOp::Sum => BinOp::Add,
            ReduceOp::Product => BinOp::Mul,
            ReduceOp::Min => BinOp::Min,
            ReduceOp::Max => BinOp::Max,
        }
    }

    /// Neutral element, where one exists among rationals.
    pub fn neutral(self) -> Option<Rational> {
        match self {
            ReduceOp::Sum => Some(Rational::zero()),
            ReduceOp::Product => Some(Rational::one()),
            ReduceOp::Min | ReduceOp::Max => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ReduceOp::Sum => "+",
            ReduceOp::Product => "*",
            ReduceOp::Min => "min",
            ReduceOp::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReduceEdge {
    pub from: Location,
    pub to: Location,
    pub acc: String,
    pub src: String,
    pub op: ReduceOp,
    pub root: Expr,
}

/// The collector sweep: spawn and lock, accumulate left to right, deliver
/// to the root and unlock.
///
/// For `min` and `max`, which have no rational neutral element, the
/// collector is spawned right after the first process, seeded with its
/// value.
pub fn make_reduce_rules(edge: &ReduceEdge) -> [RewriteRule; 3] {
    let at = GuardElement::at(edge.from);
    let lock = Location::Lock(match edge.from {
        Location::Pc(n) => n,
        other => panic!("reduce at synthetic location {other}"),
    });
    let locked = GuardElement::at(lock);
    let collector = GuardElement::at(Location::Collector);
    let spawn = Rewriter::new_process(Location::Collector, IdAction::Const(-1));
    let spawn_rule = match edge.op.neutral() {
        Some(q) => RewriteRule {
            name: format!("reduce {} spawn", edge.from),
            stars: vec![at.clone()],
            words: vec![],
            requires: vec![],
            inserts: vec![vec![spawn.assign(edge.acc.clone(), Expr::Const(q))], vec![]],
            star_maps: vec![Rewriter::identity(0).goto(lock)],
        },
        None => RewriteRule {
            name: format!("reduce {} spawn", edge.from),
            stars: vec![GuardElement::bottom(), at.clone()],
            words: vec![vec![at.clone()]],
            requires: vec![],
            inserts: vec![
                vec![],
                vec![
                    Rewriter::identity(0).goto(lock),
                    spawn.assign(edge.acc.clone(), Expr::var(qualified(0, &edge.src))),
                ],
                vec![],
            ],
            star_maps: vec![Rewriter::identity(1), Rewriter::identity(1).goto(lock)],
        },
    };
    let step = RewriteRule {
        name: format!("reduce {} step", edge.from),
        stars: vec![GuardElement::top(), GuardElement::top()],
        words: vec![vec![collector.clone(), locked.clone()]],
        requires: vec![],
        inserts: vec![
            vec![],
            vec![
                Rewriter::identity(1),
                Rewriter::identity(0).assign(
                    edge.acc.clone(),
                    Expr::bin(
                        edge.op.binop(),
                        Expr::var(qualified(0, &edge.acc)),
                        Expr::var(qualified(1, &edge.src)),
                    ),
                ),
            ],
            vec![],
        ],
        star_maps: vec![Rewriter::identity(2); 2],
    };
    let unlock = Rewriter::identity(2).goto(edge.to);
    let finish = RewriteRule {
        name: format!("reduce {} finish", edge.from),
        stars: vec![locked.clone(), locked.clone(), GuardElement::bottom()],
        words: vec![
            vec![locked.with_cond(Expr::bin(BinOp::Eq, Expr::var(ID_VAR), edge.root.clone()))],
            vec![collector],
        ],
        requires: vec![],
        inserts: vec![
            vec![],
            vec![Rewriter::identity(0)
                .goto(edge.to)
                .assign(edge.acc.clone(), Expr::var(qualified(1, &edge.acc)))],
            vec![],
            vec![],
        ],
        star_maps: vec![unlock.clone(), unlock, Rewriter::identity(2)],
    };
    [spawn_rule, step, finish]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{accepts, includes};
    use crate::domain::{Env, VarKinds};

    fn ctx(vars: &[&str], rats: &[&str]) -> Ctx {
        Ctx {
            kinds: VarKinds::new(rats.iter().map(|s| s.to_string())),
            affine: false,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            positional_fresh: false,
        }
    }

    fn point(ctx: &Ctx, id: i64, loc: Location, vals: &[(&str, Rational)]) -> Letter {
        let mut env = Env::top(ctx.affine).constrain(ID_VAR, Interval::int(id)).unwrap();
        for (v, q) in vals {
            env = env.constrain(v, Interval::point(q.clone())).unwrap();
        }
        Letter::new(loc, env)
    }

    fn concrete(id: i64, loc: Location, vals: &[(&str, Rational)]) -> ConcreteLetter {
        ConcreteLetter {
            id,
            loc,
            env: vals.iter().map(|(v, q)| (v.to_string(), q.clone())).collect(),
        }
    }

    #[test]
    fn identity_rule_keeps_words_with_the_location() {
        let c = ctx(&[], &[]);
        let l = Location::Pc(3);
        let rule = RewriteRule {
            name: "id".into(),
            stars: vec![GuardElement::top(), GuardElement::top()],
            words: vec![vec![GuardElement::at(l)]],
            requires: vec![],
            inserts: vec![vec![], vec![Rewriter::identity(0)], vec![]],
            star_maps: vec![Rewriter::identity(1); 2],
        };
        let with = Automaton::word(&[point(&c, 0, Location::Pc(1), &[]), point(&c, 1, l, &[])]);
        let without = Automaton::word(&[point(&c, 0, Location::Pc(1), &[])]);
        let a = crate::automaton::union(&with, &without);
        let (out, _) = apply_rule(&rule, &a, &c);
        assert_eq!(out, with);
    }

    #[test]
    fn no_match_gives_empty() {
        let c = ctx(&[], &[]);
        let edge = CreateEdge {
            from: Location::Pc(9),
            to: Location::Pc(10),
            var: "next".into(),
            entry: Location::Pc(0),
        };
        let a = Automaton::word(&[point(&c, 0, Location::Pc(1), &[])]);
        assert!(apply_rule(&make_create_rule(&edge), &a, &c).0.is_empty());
    }

    #[test]
    fn create_appends_new_process() {
        let c = ctx(&["next"], &[]);
        let edge = CreateEdge {
            from: Location::Pc(3),
            to: Location::Pc(4),
            var: "next".into(),
            entry: Location::Pc(0),
        };
        let zero = Rational::zero();
        let a = Automaton::word(&[point(&c, 0, Location::Pc(3), &[("next", zero.clone())])]);
        let (out, _) = apply_rule(&make_create_rule(&edge), &a, &c);
        let w = [concrete(0, Location::Pc(3), &[("next", zero.clone())])];
        let images = apply_rule_concrete(&make_create_rule(&edge), &w, &c);
        let expected = vec![
            concrete(0, Location::Pc(4), &[("next", Rational::one())]),
            concrete(1, Location::Pc(0), &[("next", zero)]),
        ];
        assert_eq!(images, BTreeSet::from([expected.clone()]));
        assert!(accepts(&out, &expected));
    }

    #[test]
    fn send_receive_example_word() {
        // Three processes: 0 at l9, 1 at l8 sending x to next = 2, 2 at l4
        // receiving from anyone.
        let c = ctx(&["next", "x"], &[]);
        let q = Rational::from_int;
        let send = CommEdge {
            from: Location::Pc(8),
            to: Location::Pc(9),
            partner: Some(Expr::var("next")),
            var: "x".into(),
        };
        let recv = CommEdge {
            from: Location::Pc(4),
            to: Location::Pc(5),
            partner: None,
            var: "x".into(),
        };
        let rules = make_send_receive_rules(&send, &recv);
        let w = vec![
            concrete(0, Location::Pc(9), &[("next", q(1)), ("x", q(5))]),
            concrete(1, Location::Pc(8), &[("next", q(2)), ("x", q(9))]),
            concrete(2, Location::Pc(4), &[("next", q(2)), ("x", q(0))]),
        ];
        let expected = vec![
            w[0].clone(),
            concrete(1, Location::Pc(9), &[("next", q(2)), ("x", q(9))]),
            concrete(2, Location::Pc(5), &[("next", q(2)), ("x", q(9))]),
        ];
        let images: BTreeSet<_> = rules.iter().flat_map(|r| apply_rule_concrete(r, &w, &c)).collect();
        assert_eq!(images, BTreeSet::from([expected.clone()]));
        let a = Automaton::word(
            &w.iter()
                .map(|s| {
                    let vals: Vec<(&str, Rational)> = s.env.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
                    point(&c, s.id, s.loc, &vals)
                })
                .collect::<Vec<_>>(),
        );
        let out = rules
            .iter()
            .map(|r| apply_rule(r, &a, &c).0)
            .fold(Automaton::empty(), |acc, x| crate::automaton::union(&acc, &x));
        assert!(accepts(&out, &expected));
        assert_eq!(crate::automaton::enumerate_words(&out, &[expected[0].clone(), expected[1].clone(), expected[2].clone()], 3).len(), 1);

        // Sender targets id 2 but the receiver has id 6.
        let w2 = vec![
            concrete(1, Location::Pc(8), &[("next", q(2)), ("x", q(13))]),
            concrete(6, Location::Pc(4), &[("next", q(0)), ("x", q(0))]),
        ];
        assert!(rules.iter().all(|r| apply_rule_concrete(r, &w2, &c).is_empty()));
        let a2 = Automaton::word(&[
            point(&c, 1, Location::Pc(8), &[("next", q(2)), ("x", q(13))]),
            point(&c, 6, Location::Pc(4), &[("next", q(0)), ("x", q(0))]),
        ]);
        assert!(rules.iter().all(|r| apply_rule(r, &a2, &c).0.is_empty()));
        let _ = includes;
    }

    #[test]
    fn reduce_sweep_two_processes() {
        let c = ctx(&["res", "total"], &["res", "total"]);
        let edge = ReduceEdge {
            from: Location::Pc(4),
            to: Location::Pc(5),
            acc: "total".into(),
            src: "res".into(),
            op: ReduceOp::Sum,
            root: Expr::int(0),
        };
        let [spawn, step, finish] = make_reduce_rules(&edge);
        let half = Rational::new(1, 2);
        let quarter = Rational::new(1, 4);
        let zero = Rational::zero();
        let a = Automaton::word(&[
            point(&c, 0, Location::Pc(4), &[("res", half.clone()), ("total", zero.clone())]),
            point(&c, 1, Location::Pc(4), &[("res", quarter.clone()), ("total", zero.clone())]),
        ]);
        let (a1, _) = apply_rule(&spawn, &a, &c);
        assert_eq!(a1.transitions[0].label.loc, Location::Collector);
        assert_eq!(a1.transitions[0].label.env.get("total"), Interval::int(0));
        assert!(apply_rule(&finish, &a1, &c).0.is_empty());
        let (a2, _) = apply_rule(&step, &a1, &c);
        let (a3, _) = apply_rule(&step, &a2, &c);
        assert!(apply_rule(&step, &a3, &c).0.is_empty());
        let (a4, _) = apply_rule(&finish, &a3, &c);
        assert_eq!(a4.transitions.len(), 2);
        let root = &a4.transitions[0].label;
        assert_eq!(root.loc, Location::Pc(5));
        assert_eq!(root.env.get("total"), Interval::point(Rational::new(3, 4)));
    }
}
