//! Lattice transducers and the rewriters shared with rewriting rules.
//!
//! A rewriter describes one output letter as data: which input letter it
//! starts from, where it moves, what happens to `id`, and a list of
//! assignments. Assignments are evaluated in the joint environment of all
//! matched letters, where variable `v` of the `k`-th letter is named `k.v`
//! and the fresh identifier (for creation) is `fresh`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::automaton::{path_enumerate, Automaton, Builder, State};
use crate::domain::letter::{joint_env, slot_env};
use crate::domain::{ConcreteLetter, Env, GuardElement, Letter, Location, Rational, VarKinds};
use crate::expr::{qualified, split_qualified, Expr, ID_VAR};

/// Name of the fresh identifier in joint environments.
pub const FRESH: &str = "fresh";

/// Facts about the program that rewriters need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ctx {
    pub kinds: VarKinds,
    pub affine: bool,
    /// Program variables (without `id`), all zero in a new process.
    pub vars: Vec<String>,
    /// Relate fresh identifiers to the position of the creator; valid when
    /// every reachable word numbers its processes by position.
    pub positional_fresh: bool,
}

impl Ctx {
    pub fn zero_env(&self) -> Env {
        let mut env = Env::zero(&self.vars, self.affine);
        env = env.constrain(ID_VAR, crate::domain::Interval::int(0)).unwrap();
        env
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdAction {
    Keep,
    Const(i64),
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rewriter {
    /// Input letter the output starts from; `None` starts from a new
    /// process with every variable zero.
    pub base: Option<usize>,
    /// New location; `None` keeps the base letter's.
    pub loc: Option<Location>,
    pub id: IdAction,
    /// Sequential assignments `v := e` to the output letter.
    pub assigns: Vec<(String, Expr)>,
}

impl Rewriter {
    pub fn identity(slot: usize) -> Rewriter {
        Rewriter {
            base: Some(slot),
            loc: None,
            id: IdAction::Keep,
            assigns: Vec::new(),
        }
    }

    pub fn new_process(loc: Location, id: IdAction) -> Rewriter {
        Rewriter {
            base: None,
            loc: Some(loc),
            id,
            assigns: Vec::new(),
        }
    }

    pub fn goto(mut self, loc: Location) -> Rewriter {
        self.loc = Some(loc);
        self
    }

    pub fn assign(mut self, v: impl Into<String>, e: Expr) -> Rewriter {
        self.assigns.push((v.into(), e));
        self
    }

    pub fn is_identity(&self) -> bool {
        self.base.is_some() && self.loc.is_none() && self.id == IdAction::Keep && self.assigns.is_empty()
    }

    fn target(&self, inputs: usize) -> usize {
        self.base.unwrap_or(inputs)
    }

    /// Abstract output letter. `joint` is the joint environment of
    /// `inputs` (possibly refined, and possibly carrying `fresh`). The flag
    /// reports a possible division by zero.
    pub fn apply(&self, joint: &Env, inputs: &[Letter], ctx: &Ctx) -> (Letter, bool) {
        let loc = self
            .loc
            .or_else(|| self.base.map(|k| inputs[k].loc))
            .expect("new processes need a location");
        let t = self.target(inputs.len());
        let mut j = joint.clone();
        if self.base.is_none() {
            j = j.product(&ctx.zero_env().project(|_| true, |v| qualified(t, v)));
        }
        let mut alarm = false;
        for (v, e) in &self.assigns {
            let (next, a) = j.assign(&qualified(t, v), e, &ctx.kinds);
            j = next;
            alarm |= a;
        }
        match self.id {
            IdAction::Keep => {}
            IdAction::Const(c) => j = j.assign(&qualified(t, ID_VAR), &Expr::int(c), &ctx.kinds).0,
            IdAction::Fresh => j = j.assign(&qualified(t, ID_VAR), &Expr::var(FRESH), &ctx.kinds).0,
        }
        (Letter::new(loc, slot_env(&j, t)), alarm)
    }

    /// Single-input shortcut that works on the letter's own environment.
    fn apply_single(&self, input: &Letter, ctx: &Ctx) -> (Letter, bool) {
        let loc = self.loc.unwrap_or(input.loc);
        let mut env = input.env.clone();
        let mut alarm = false;
        let unq = |e: &Expr| e.map_vars(&|v| Expr::var(split_qualified(v).map_or(v, |(_, b)| b)));
        for (v, e) in &self.assigns {
            let (next, a) = env.assign(v, &unq(e), &ctx.kinds);
            env = next;
            alarm |= a;
        }
        if let IdAction::Const(c) = self.id {
            env = env.assign(ID_VAR, &Expr::int(c), &ctx.kinds).0;
        }
        (Letter::new(loc, env), alarm)
    }

    fn single_input(&self) -> bool {
        self.base == Some(0) && self.id != IdAction::Fresh
    }

    /// Concrete output letter; `None` if an assignment is undefined.
    pub fn apply_concrete(
        &self,
        joint: &BTreeMap<String, Rational>,
        inputs: &[ConcreteLetter],
        ctx: &Ctx,
    ) -> Option<ConcreteLetter> {
        let t = self.target(inputs.len());
        let (mut out, mut j) = match self.base {
            Some(k) => (inputs[k].clone(), joint.clone()),
            None => {
                let env: BTreeMap<String, Rational> =
                    ctx.vars.iter().map(|v| (v.clone(), Rational::zero())).collect();
                let mut j = joint.clone();
                for v in &ctx.vars {
                    j.insert(qualified(t, v), Rational::zero());
                }
                j.insert(qualified(t, ID_VAR), Rational::zero());
                (
                    ConcreteLetter {
                        id: 0,
                        loc: self.loc?,
                        env,
                    },
                    j,
                )
            }
        };
        for (v, e) in &self.assigns {
            let mut q = crate::concrete::eval(e, &j)?;
            if ctx.kinds.is_int(v) {
                q = q.trunc();
            }
            j.insert(qualified(t, v), q.clone());
            if v == ID_VAR {
                out.id = q.to_i64()?;
            } else {
                out.env.insert(v.clone(), q);
            }
        }
        match self.id {
            IdAction::Keep => {}
            IdAction::Const(c) => out.id = c,
            IdAction::Fresh => out.id = j.get(FRESH)?.to_i64()?,
        }
        if let Some(l) = self.loc {
            out.loc = l;
        }
        Some(out)
    }
}

/// Joint valuation of concrete letters.
pub fn concrete_joint(inputs: &[ConcreteLetter]) -> BTreeMap<String, Rational> {
    let mut j = BTreeMap::new();
    for (k, s) in inputs.iter().enumerate() {
        j.insert(qualified(k, ID_VAR), Rational::from_int(s.id));
        for (v, q) in &s.env {
            j.insert(qualified(k, v), q.clone());
        }
    }
    j
}

/// Checks every condition of `requires` concretely.
pub fn concrete_requires(requires: &[Expr], joint: &BTreeMap<String, Rational>) -> bool {
    requires
        .iter()
        .all(|c| crate::concrete::eval(c, joint).is_some_and(|q| !q.is_zero()))
}

/// Abstract joint environment of matched letters restricted by `requires`.
pub fn abstract_requires(letters: &[Letter], requires: &[Expr], ctx: &Ctx) -> Option<Env> {
    let mut j = joint_env(letters, ctx.affine);
    for c in requires {
        j = j.filter(c, true, &ctx.kinds)?;
    }
    Some(j)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransducerRule {
    pub from: State,
    pub guard: Vec<GuardElement>,
    /// Conditions relating the matched letters (qualified names).
    pub requires: Vec<Expr>,
    pub outputs: Vec<Rewriter>,
    pub to: State,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeTransducer {
    pub states: usize,
    pub initial: BTreeSet<State>,
    pub finals: BTreeSet<State>,
    pub rules: Vec<TransducerRule>,
}

impl LatticeTransducer {
    /// One state, initial and final, carrying the given self-loops.
    pub fn single_state(rules: Vec<(Vec<GuardElement>, Vec<Expr>, Vec<Rewriter>)>) -> LatticeTransducer {
        LatticeTransducer {
            states: 1,
            initial: BTreeSet::from([0]),
            finals: BTreeSet::from([0]),
            rules: rules
                .into_iter()
                .map(|(guard, requires, outputs)| TransducerRule {
                    from: 0,
                    guard,
                    requires,
                    outputs,
                    to: 0,
                })
                .collect(),
        }
    }

    /// The rule `⊤ / identity` letting any process stay put.
    pub fn inactivity_rule() -> (Vec<GuardElement>, Vec<Expr>, Vec<Rewriter>) {
        (vec![GuardElement::top()], Vec::new(), vec![Rewriter::identity(0)])
    }
}

/// Applies `t` to the language of `a`, with the locations where a
/// division by zero may happen.
pub fn apply_transducer(t: &LatticeTransducer, a: &Automaton, ctx: &Ctx) -> (Automaton, BTreeSet<Location>) {
    let mut alarms = BTreeSet::new();
    let mut b = Builder::new();
    let n = a.states;
    for _ in 0..t.states * n {
        b.add_state();
    }
    let pair = |p: State, q: State| p * n + q;
    for &p in &t.initial {
        for &q in &a.initial {
            b.set_initial(pair(p, q));
        }
    }
    for &p in &t.finals {
        for &q in &a.finals {
            b.set_final(pair(p, q));
        }
    }
    for rule in &t.rules {
        for q in 0..n {
            for (letters, q2) in path_enumerate(a, q, rule.guard.len()) {
                let Some(meets) = letters
                    .iter()
                    .zip(&rule.guard)
                    .map(|(l, g)| g.meet(l, &ctx.kinds))
                    .collect::<Option<Vec<Letter>>>()
                else {
                    continue;
                };
                let Some(outputs) = rewrite(&meets, &rule.requires, &rule.outputs, ctx, &mut alarms) else {
                    continue;
                };
                let (src, dst) = (pair(rule.from, q), pair(rule.to, q2));
                if outputs.is_empty() {
                    b.add_eps(src, dst);
                    continue;
                }
                let mut cur = src;
                for (i, l) in outputs.into_iter().enumerate() {
                    let next = if i + 1 == rule.outputs.len() { dst } else { b.add_state() };
                    b.add(cur, l, next);
                    cur = next;
                }
            }
        }
    }
    (b.finish(), alarms)
}

/// Output letters of one rule instance, or `None` if the conditions
/// exclude every state.
fn rewrite(
    meets: &[Letter],
    requires: &[Expr],
    outputs: &[Rewriter],
    ctx: &Ctx,
    alarms: &mut BTreeSet<Location>,
) -> Option<Vec<Letter>> {
    if meets.len() == 1 && requires.is_empty() && outputs.iter().all(|r| r.single_input()) {
        return Some(
            outputs
                .iter()
                .map(|r| {
                    if r.is_identity() {
                        return meets[0].clone();
                    }
                    let (l, alarm) = r.apply_single(&meets[0], ctx);
                    if alarm {
                        alarms.insert(meets[0].loc);
                    }
                    l
                })
                .collect(),
        );
    }
    let joint = abstract_requires(meets, requires, ctx)?;
    Some(
        outputs
            .iter()
            .map(|r| {
                let (l, alarm) = r.apply(&joint, meets, ctx);
                if alarm {
                    alarms.insert(meets[0].loc);
                }
                l
            })
            .collect(),
    )
}

/// All images of a concrete word under `t`.
pub fn apply_transducer_concrete(
    t: &LatticeTransducer,
    word: &[ConcreteLetter],
    ctx: &Ctx,
) -> BTreeSet<Vec<ConcreteLetter>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<(State, usize, Vec<ConcreteLetter>)> =
        t.initial.iter().map(|&p| (p, 0, Vec::new())).collect();
    while let Some((p, i, acc)) = stack.pop() {
        if i == word.len() && t.finals.contains(&p) {
            out.insert(acc.clone());
        }
        for rule in t.rules.iter().filter(|r| r.from == p) {
            let n = rule.guard.len();
            if i + n > word.len() {
                continue;
            }
            let slice = &word[i..i + n];
            if !slice.iter().zip(&rule.guard).all(|(s, g)| g.contains(s)) {
                continue;
            }
            let joint = concrete_joint(slice);
            if !concrete_requires(&rule.requires, &joint) {
                continue;
            }
            let Some(letters) = rule
                .outputs
                .iter()
                .map(|r| r.apply_concrete(&joint, slice, ctx))
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let mut acc2 = acc.clone();
            acc2.extend(letters);
            stack.push((rule.to, i + n, acc2));
        }
    }
    out
}
