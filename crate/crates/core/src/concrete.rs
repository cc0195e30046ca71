//! Concrete semantics: expression evaluation and a bounded interpreter
//! over control-flow graphs, used as the reference for the abstract
//! analysis.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::domain::{ConcreteLetter, Rational, VarKinds};
use crate::expr::{BinOp, Expr, UnOp, ID_VAR};
use crate::frontend::{Cfg, Instr, NPROCS};
use crate::rules::ReduceOp;

/// Evaluates `e`; `None` when the expression is undefined (division by
/// zero, shifts of non-integers or by out-of-range amounts, `?`).
pub fn eval(e: &Expr, val: &BTreeMap<String, Rational>) -> Option<Rational> {
    let truth = |b: bool| Rational::from_int(b as i64);
    Some(match e {
        Expr::Const(c) => c.clone(),
        Expr::Var(v) => val.get(v).cloned().unwrap_or_default(),
        Expr::Nondet => return None,
        Expr::Unary(UnOp::Neg, a) => -eval(a, val)?,
        Expr::Unary(UnOp::Not, a) => truth(eval(a, val)?.is_zero()),
        Expr::Binary(BinOp::And, a, b) => {
            truth(!eval(a, val)?.is_zero() && !eval(b, val)?.is_zero())
        }
        Expr::Binary(BinOp::Or, a, b) => {
            truth(!eval(a, val)?.is_zero() || !eval(b, val)?.is_zero())
        }
        Expr::Binary(op, a, b) => {
            let x = eval(a, val)?;
            let y = eval(b, val)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.is_zero() {
                        return None;
                    }
                    x / y
                }
                BinOp::Mod => {
                    if y.is_zero() {
                        return None;
                    }
                    let q = (&x / &y).trunc();
                    &x - &(&q * &y)
                }
                BinOp::Shl | BinOp::Shr => {
                    if !x.is_integer() {
                        return None;
                    }
                    let s = y.to_i64().filter(|s| (0..=256).contains(s))? as usize;
                    let n: BigInt = x.numer().clone();
                    let r = if *op == BinOp::Shl {
                        n << s
                    } else {
                        // Arithmetic shift rounds toward negative infinity.
                        let d = BigInt::from(1) << s;
                        let q = &n / &d;
                        if (&n % &d).is_zero() || n >= BigInt::zero() {
                            q
                        } else {
                            q - 1
                        }
                    };
                    Rational::from_bigint(r)
                }
                BinOp::Min => x.min(y),
                BinOp::Max => x.max(y),
                BinOp::Lt => truth(x < y),
                BinOp::Le => truth(x <= y),
                BinOp::Gt => truth(x > y),
                BinOp::Ge => truth(x >= y),
                BinOp::Eq => truth(x == y),
                BinOp::Ne => truth(x != y),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

/// A global state: the processes in creation order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConcreteConfig {
    pub word: Vec<ConcreteLetter>,
}

impl std::fmt::Display for ConcreteConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, s) in self.word.iter().enumerate() {
            if k > 0 {
                write!(f, " . ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Transition system of a program.
pub struct Interpreter<'a> {
    pub cfg: &'a Cfg,
    pub kinds: VarKinds,
    /// Value of `nprocs`, when bounded.
    pub nprocs: Option<i64>,
}

impl<'a> Interpreter<'a> {
    pub fn new(cfg: &'a Cfg, nprocs: Option<i64>) -> Interpreter<'a> {
        Interpreter {
            cfg,
            kinds: VarKinds::new(cfg.rats.iter().cloned()),
            nprocs,
        }
    }

    fn fresh_process(&self, id: i64) -> ConcreteLetter {
        ConcreteLetter {
            id,
            loc: self.cfg.entry,
            env: self.cfg.vars.iter().map(|v| (v.clone(), Rational::zero())).collect(),
        }
    }

    /// `n` processes with ids `0..n` at the entry, every variable zero.
    pub fn initial(&self, n: usize) -> ConcreteConfig {
        ConcreteConfig {
            word: (0..n as i64).map(|i| self.fresh_process(i)).collect(),
        }
    }

    fn valuation(&self, s: &ConcreteLetter) -> BTreeMap<String, Rational> {
        let mut val = s.env.clone();
        val.insert(ID_VAR.to_string(), Rational::from_int(s.id));
        if let Some(n) = self.nprocs {
            val.insert(NPROCS.to_string(), Rational::from_int(n));
        }
        val
    }

    fn store(&self, s: &mut ConcreteLetter, v: &str, q: Rational) {
        let q = if self.kinds.is_int(v) { q.trunc() } else { q };
        s.env.insert(v.to_string(), q);
    }

    fn holds(&self, e: &Expr, s: &ConcreteLetter) -> bool {
        *e == Expr::Nondet || eval(e, &self.valuation(s)).is_some_and(|q| !q.is_zero())
    }

    /// Whether `e` evaluates to the id `target` in the state of `s`.
    fn names(&self, e: &Expr, s: &ConcreteLetter, target: i64) -> bool {
        eval(e, &self.valuation(s)).is_some_and(|q| q == Rational::from_int(target))
    }

    /// All successors of `c`.
    pub fn post(&self, c: &ConcreteConfig) -> BTreeSet<ConcreteConfig> {
        let mut out = BTreeSet::new();
        let w = &c.word;
        for (i, s) in w.iter().enumerate() {
            for e in self.cfg.out_edges(s.loc) {
                let step = |f: &dyn Fn(&mut Vec<ConcreteLetter>)| {
                    let mut w2 = w.clone();
                    f(&mut w2);
                    ConcreteConfig { word: w2 }
                };
                match &e.instr {
                    Instr::Assign(v, x) => {
                        if let Some(q) = eval(x, &self.valuation(s)) {
                            out.insert(step(&|w2| {
                                self.store(&mut w2[i], v, q.clone());
                                w2[i].loc = e.to;
                            }));
                        }
                    }
                    Instr::Filter(x) => {
                        if self.holds(x, s) {
                            out.insert(step(&|w2| w2[i].loc = e.to));
                        }
                    }
                    Instr::Create(v) => {
                        let fresh = w.len() as i64;
                        out.insert(step(&|w2| {
                            self.store(&mut w2[i], v, Rational::from_int(fresh));
                            w2[i].loc = e.to;
                            w2.push(self.fresh_process(fresh));
                        }));
                    }
                    Instr::Send(p, v) => {
                        for (j, r) in w.iter().enumerate() {
                            if j == i {
                                continue;
                            }
                            for e2 in self.cfg.out_edges(r.loc) {
                                let Instr::Receive(q, v2) = &e2.instr else { continue };
                                let to_ok = p.expr().is_none_or(|x| self.names(x, s, r.id));
                                let from_ok = q.expr().is_none_or(|x| self.names(x, r, s.id));
                                if to_ok && from_ok {
                                    let val = s.env.get(v).cloned().unwrap_or_default();
                                    out.insert(step(&|w2| {
                                        w2[i].loc = e.to;
                                        self.store(&mut w2[j], v2, val.clone());
                                        w2[j].loc = e2.to;
                                    }));
                                }
                            }
                        }
                    }
                    Instr::Receive(..) => {}
                    Instr::Broadcast(root, v) => {
                        if w.iter().all(|t| t.loc == e.from) && self.names(root, s, s.id) {
                            let val = s.env.get(v).cloned().unwrap_or_default();
                            out.insert(step(&|w2| {
                                for (k, t) in w2.iter_mut().enumerate() {
                                    if k != i {
                                        self.store(t, v, val.clone());
                                    }
                                    t.loc = e.to;
                                }
                            }));
                        }
                    }
                    Instr::Reduce(r) => {
                        if w.iter().all(|t| t.loc == e.from) && self.names(&r.root, s, s.id) {
                            let mut vals = w.iter().map(|t| t.env.get(&r.src).cloned().unwrap_or_default());
                            let first = match r.op.neutral() {
                                Some(q) => q,
                                None => vals.next().expect("non-empty word"),
                            };
                            let total = vals.fold(first, |acc, q| fold(r.op, acc, q));
                            out.insert(step(&|w2| {
                                self.store(&mut w2[i], &r.acc, total.clone());
                                for t in w2.iter_mut() {
                                    t.loc = e.to;
                                }
                            }));
                        }
                    }
                }
            }
        }
        out
    }

    /// No successor while some process has not terminated.
    pub fn is_stuck(&self, c: &ConcreteConfig) -> bool {
        c.word.iter().any(|s| s.loc != self.cfg.exit) && self.post(c).is_empty()
    }

    /// Configurations reachable from `init` in at most `depth` steps,
    /// dropping those with more than `max_procs` processes. The flag
    /// reports whether anything was dropped.
    pub fn reach_bounded(
        &self,
        init: &ConcreteConfig,
        depth: usize,
        max_procs: usize,
    ) -> (BTreeSet<ConcreteConfig>, bool) {
        let mut seen = BTreeSet::from([init.clone()]);
        let mut frontier = vec![init.clone()];
        let mut pruned = false;
        for _ in 0..depth {
            let mut next = Vec::new();
            for c in &frontier {
                for d in self.post(c) {
                    if d.word.len() > max_procs {
                        pruned = true;
                    } else if seen.insert(d.clone()) {
                        next.push(d);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        (seen, pruned)
    }
}

fn fold(op: ReduceOp, acc: Rational, q: Rational) -> Rational {
    match op {
        ReduceOp::Sum => acc + q,
        ReduceOp::Product => acc * q,
        ReduceOp::Min => acc.min(q),
        ReduceOp::Max => acc.max(q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Location;
    use crate::frontend::{build_cfg, parse};

    fn cfg(src: &str) -> Cfg {
        build_cfg(&parse(src).unwrap())
    }

    const CHAIN: &str = "if (id == 0) x := 1 else receive(any_id, x); create(next); x := x + 4; send(next, x)";

    #[test]
    fn straight_line_reach_is_one_per_location() {
        let g = cfg("x := 1; x := x + 1; y := x * 2");
        let it = Interpreter::new(&g, Some(1));
        let (reach, pruned) = it.reach_bounded(&it.initial(1), 10, 1);
        assert_eq!(reach.len(), g.count as usize);
        assert!(!pruned);
        let (reach, _) = it.reach_bounded(&it.initial(1), 0, 1);
        assert_eq!(reach.len(), 1);
    }

    #[test]
    fn all_at_exit_has_no_successor() {
        let g = cfg("x := 1");
        let it = Interpreter::new(&g, Some(2));
        let mut c = it.initial(2);
        for s in &mut c.word {
            s.loc = g.exit;
        }
        assert!(it.post(&c).is_empty());
        assert!(!it.is_stuck(&c));
    }

    #[test]
    fn create_appends_zeroed_process() {
        let g = cfg("x := 3; create(n)");
        let it = Interpreter::new(&g, None);
        let mut c = it.initial(1);
        c.word[0].loc = Location::Pc(1);
        c.word[0].env.insert("x".into(), Rational::from_int(3));
        let post = it.post(&c);
        assert_eq!(post.len(), 1);
        let d = post.first().unwrap();
        assert_eq!(d.word.len(), 2);
        assert_eq!(d.word[0].env["n"], Rational::from_int(1));
        assert_eq!(d.word[1].id, 1);
        assert_eq!(d.word[1].loc, g.entry);
        assert!(d.word[1].env.values().all(Rational::is_zero));
    }

    #[test]
    fn example_word_communication() {
        let g = cfg(CHAIN);
        let it = Interpreter::new(&g, None);
        let send = g.edges.iter().find(|e| matches!(e.instr, Instr::Send(..))).unwrap();
        let recv = g.edges.iter().find(|e| matches!(e.instr, Instr::Receive(..))).unwrap();
        let q = Rational::from_int;
        let letter = |id, loc, x, next| ConcreteLetter {
            id,
            loc,
            env: BTreeMap::from([("x".to_string(), q(x)), ("next".to_string(), q(next))]),
        };
        let c = ConcreteConfig {
            word: vec![
                letter(0, g.exit, 5, 1),
                letter(1, send.from, 9, 2),
                letter(2, recv.from, 0, 2),
            ],
        };
        let expected = ConcreteConfig {
            word: vec![
                letter(0, g.exit, 5, 1),
                letter(1, g.exit, 9, 2),
                letter(2, recv.to, 9, 2),
            ],
        };
        assert_eq!(it.post(&c), BTreeSet::from([expected]));
    }

    #[test]
    fn chain_reaches_second_process_at_exit() {
        let g = cfg(CHAIN);
        let it = Interpreter::new(&g, None);
        let (reach, _) = it.reach_bounded(&it.initial(1), 12, 3);
        assert!(reach.iter().any(|c| c
            .word
            .iter()
            .any(|s| s.id == 1 && s.loc == g.exit && s.env["x"] == Rational::from_int(9))));
    }

    #[test]
    fn reduce_is_atomic() {
        let g = cfg("rat r, t; r := 1 / (id + 1); reduce(t, r, +, 0)");
        let it = Interpreter::new(&g, Some(2));
        let (reach, _) = it.reach_bounded(&it.initial(2), 10, 2);
        let done: Vec<_> = reach.iter().filter(|c| c.word.iter().all(|s| s.loc == g.exit)).collect();
        assert_eq!(done.len(), 1);
        assert_eq!(done[0].word[0].env["t"], Rational::new(3, 2));
        assert_eq!(done[0].word[1].env["t"], Rational::zero());
    }

    #[test]
    fn opposite_sends_are_stuck() {
        let g = cfg("other := 1 - id; send(other, x)");
        let it = Interpreter::new(&g, Some(2));
        let (reach, _) = it.reach_bounded(&it.initial(2), 5, 2);
        assert!(reach.iter().any(|c| it.is_stuck(c)));
    }
}
