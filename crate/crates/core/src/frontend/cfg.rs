use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{block_size, Partner, Program, Reduce, Stmt, StmtKind, NPROCS};
use crate::domain::Location;
use crate::expr::{Expr, ID_VAR};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instr {
    Assign(String, Expr),
    /// Proceeds when the condition holds; `?` always may.
    Filter(Expr),
    Create(String),
    Send(Partner, String),
    Receive(Partner, String),
    Broadcast(Expr, String),
    Reduce(Reduce),
}

impl Instr {
    /// Instructions that need a partner (or all processes) to proceed.
    pub fn is_blocking(&self) -> bool {
        matches!(
            self,
            Instr::Send(..) | Instr::Receive(..) | Instr::Broadcast(..) | Instr::Reduce(_)
        )
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Instr::Assign(_, e) | Instr::Filter(e) | Instr::Broadcast(e, _) => vec![e],
            Instr::Send(p, _) | Instr::Receive(p, _) => p.expr().into_iter().collect(),
            Instr::Reduce(r) => vec![&r.root],
            Instr::Create(_) => vec![],
        }
    }

    fn vars(&self) -> BTreeSet<String> {
        let mut vs: BTreeSet<String> = self.exprs().iter().flat_map(|e| e.vars()).collect();
        match self {
            Instr::Assign(v, _) | Instr::Create(v) | Instr::Send(_, v) | Instr::Receive(_, v) | Instr::Broadcast(_, v) => {
                vs.insert(v.clone());
            }
            Instr::Reduce(r) => {
                vs.insert(r.acc.clone());
                vs.insert(r.src.clone());
            }
            Instr::Filter(_) => {}
        }
        vs
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Assign(v, e) => write!(f, "{v} := {e}"),
            Instr::Filter(e) => write!(f, "[{e}]"),
            Instr::Create(v) => write!(f, "create({v})"),
            Instr::Send(p, v) => write!(f, "send({p}, {v})"),
            Instr::Receive(p, v) => write!(f, "receive({p}, {v})"),
            Instr::Broadcast(r, v) => write!(f, "broadcast({r}, {v})"),
            Instr::Reduce(r) => write!(f, "reduce({}, {}, {}, {})", r.acc, r.src, r.op.symbol(), r.root),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: Location,
    pub instr: Instr,
    pub to: Location,
}

/// Control-flow graph. Locations are numbered `0..count` in source
/// order: each statement is the location where it starts, and the exit
/// is the last one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfg {
    pub count: u32,
    pub entry: Location,
    pub exit: Location,
    pub edges: Vec<Edge>,
    pub loop_heads: BTreeSet<Location>,
    pub rats: BTreeSet<String>,
    /// Program variables, without `id` and `nprocs`.
    pub vars: Vec<String>,
}

impl Cfg {
    pub fn locations(&self) -> impl Iterator<Item = Location> {
        (0..self.count).map(Location::Pc)
    }

    pub fn out_edges(&self, l: Location) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == l)
    }

    pub fn uses_nprocs(&self) -> bool {
        self.edges.iter().any(|e| e.instr.exprs().iter().any(|x| x.vars().contains(NPROCS)))
    }
}

pub fn build_cfg(prog: &Program) -> Cfg {
    let count = block_size(&prog.body) + 1;
    let mut cfg = Cfg {
        count,
        entry: Location::Pc(0),
        exit: Location::Pc(count - 1),
        edges: Vec::new(),
        loop_heads: BTreeSet::new(),
        rats: prog.rats.clone(),
        vars: Vec::new(),
    };
    block(&mut cfg, &prog.body, 0, count - 1);
    let mut vars: BTreeSet<String> = cfg.edges.iter().flat_map(|e| e.instr.vars()).collect();
    vars.extend(prog.rats.iter().cloned());
    vars.remove(ID_VAR);
    vars.remove(NPROCS);
    cfg.vars = vars.into_iter().collect();
    cfg
}

fn block(cfg: &mut Cfg, stmts: &[Stmt], first: u32, next: u32) {
    let mut at = first;
    for (k, s) in stmts.iter().enumerate() {
        let follow = if k + 1 == stmts.len() { next } else { at + s.size() };
        stmt(cfg, s, at, follow);
        at += s.size();
    }
}

fn stmt(cfg: &mut Cfg, s: &Stmt, at: u32, follow: u32) {
    let edge = |cfg: &mut Cfg, instr: Instr, to: u32| {
        cfg.edges.push(Edge {
            from: Location::Pc(at),
            instr,
            to: Location::Pc(to),
        })
    };
    let negate = |c: &Expr| if *c == Expr::Nondet { Expr::Nondet } else { Expr::not(c.clone()) };
    match &s.kind {
        StmtKind::If(c, t, e) => {
            let t_entry = if t.is_empty() { follow } else { at + 1 };
            let e_entry = if e.is_empty() { follow } else { at + 1 + block_size(t) };
            edge(cfg, Instr::Filter(c.clone()), t_entry);
            edge(cfg, Instr::Filter(negate(c)), e_entry);
            block(cfg, t, at + 1, follow);
            block(cfg, e, at + 1 + block_size(t), follow);
        }
        StmtKind::While(c, b) => {
            cfg.loop_heads.insert(Location::Pc(at));
            let b_entry = if b.is_empty() { at } else { at + 1 };
            edge(cfg, Instr::Filter(c.clone()), b_entry);
            edge(cfg, Instr::Filter(negate(c)), follow);
            block(cfg, b, at + 1, at);
        }
        StmtKind::Assign(v, e) => edge(cfg, Instr::Assign(v.clone(), e.clone()), follow),
        StmtKind::Create(v) => edge(cfg, Instr::Create(v.clone()), follow),
        StmtKind::Send(p, v) => edge(cfg, Instr::Send(p.clone(), v.clone()), follow),
        StmtKind::Receive(p, v) => edge(cfg, Instr::Receive(p.clone(), v.clone()), follow),
        StmtKind::Broadcast(r, v) => edge(cfg, Instr::Broadcast(r.clone(), v.clone()), follow),
        StmtKind::Reduce(r) => edge(cfg, Instr::Reduce(r.clone()), follow),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn straight_line() {
        let cfg = build_cfg(&parse("x := 1; y := 2").unwrap());
        assert_eq!(cfg.count, 3);
        assert_eq!(cfg.edges.len(), 2);
        assert_eq!(cfg.exit, Location::Pc(2));
    }

    #[test]
    fn while_head_is_loop_head() {
        let cfg = build_cfg(&parse("while (x) x := x-1").unwrap());
        assert_eq!(cfg.loop_heads, BTreeSet::from([Location::Pc(0)]));
        assert!(cfg.edges.iter().any(|e| e.from == Location::Pc(1) && e.to == Location::Pc(0)));
    }

    #[test]
    fn if_else_diamond() {
        let cfg = build_cfg(&parse("if (x) y := 1 else y := 2").unwrap());
        let pairs: Vec<(Location, Location)> = cfg.edges.iter().map(|e| (e.from, e.to)).collect();
        let l = Location::Pc;
        assert_eq!(pairs, vec![(l(0), l(1)), (l(0), l(2)), (l(1), l(3)), (l(2), l(3))]);
    }
}
