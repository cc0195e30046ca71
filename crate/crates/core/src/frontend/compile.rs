use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Cfg, Instr, NPROCS};
use crate::automaton::{Automaton, Builder};
use crate::domain::{DomainKind, Env, GuardElement, Interval, Letter, Location, Rational, VarKinds};
use crate::expr::{Expr, ID_VAR};
use crate::rules::{
    make_broadcast_rule, make_create_rule, make_reduce_rules, make_send_receive_rules, BroadcastEdge,
    CommEdge, CreateEdge, ReduceEdge, RewriteRule,
};
use crate::transducer::{Ctx, LatticeTransducer, Rewriter};

/// Number of processes present initially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procs {
    Count(u32),
    Unbounded,
}

impl FromStr for Procs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unbounded" {
            return Ok(Procs::Unbounded);
        }
        match s.parse::<u32>() {
            Ok(n) if n > 0 => Ok(Procs::Count(n)),
            _ => Err(format!("expected a positive process count or `unbounded`, got `{s}`")),
        }
    }
}

impl fmt::Display for Procs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Procs::Count(n) => write!(f, "{n}"),
            Procs::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("`nprocs` is undefined with an unbounded number of processes")]
    NprocsUnbounded,
    #[error("the process count must be positive")]
    NoProcesses,
}

/// A program as a transducer for local steps plus rewriting rules for
/// everything involving several processes or creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledSemantics {
    pub domain: DomainKind,
    pub procs: Procs,
    pub transducer: LatticeTransducer,
    pub rules: Vec<RewriteRule>,
    pub initial: Automaton,
    pub ctx: Ctx,
    pub entry: Location,
    pub exit: Location,
    pub loop_heads: BTreeSet<Location>,
    /// Locations where a process waits for others.
    pub blocking: BTreeSet<Location>,
    pub has_create: bool,
    /// Every location a letter may carry.
    pub locations: BTreeSet<Location>,
}

pub fn compile(cfg: &Cfg, domain: DomainKind, procs: Procs) -> Result<CompiledSemantics, CompileError> {
    let nprocs = match procs {
        Procs::Count(0) => return Err(CompileError::NoProcesses),
        Procs::Count(n) => Expr::int(n as i64),
        Procs::Unbounded if cfg.uses_nprocs() => return Err(CompileError::NprocsUnbounded),
        Procs::Unbounded => Expr::int(0),
    };
    let fix = |e: &Expr| e.substitute(NPROCS, &nprocs);
    let ctx = Ctx {
        kinds: VarKinds::new(cfg.rats.iter().cloned()),
        affine: domain.is_affine(),
        vars: cfg.vars.clone(),
        positional_fresh: true,
    };

    let mut local = Vec::new();
    let mut rules = Vec::new();
    let mut sends = Vec::new();
    let mut receives = Vec::new();
    let mut blocking = BTreeSet::new();
    let mut locations: BTreeSet<Location> = cfg.locations().collect();
    for e in &cfg.edges {
        if e.instr.is_blocking() {
            blocking.insert(e.from);
        }
        match &e.instr {
            Instr::Assign(v, x) => local.push((
                vec![GuardElement::at(e.from)],
                vec![],
                vec![Rewriter::identity(0).goto(e.to).assign(v.clone(), fix(x).qualify(0))],
            )),
            Instr::Filter(c) => {
                let g = GuardElement::at(e.from);
                let g = if *c == Expr::Nondet { g } else { g.with_cond(fix(c)) };
                local.push((vec![g], vec![], vec![Rewriter::identity(0).goto(e.to)]));
            }
            Instr::Create(v) => rules.push(make_create_rule(&CreateEdge {
                from: e.from,
                to: e.to,
                var: v.clone(),
                entry: cfg.entry,
            })),
            Instr::Send(p, v) => sends.push(CommEdge {
                from: e.from,
                to: e.to,
                partner: p.expr().map(fix),
                var: v.clone(),
            }),
            Instr::Receive(p, v) => receives.push(CommEdge {
                from: e.from,
                to: e.to,
                partner: p.expr().map(fix),
                var: v.clone(),
            }),
            Instr::Broadcast(root, v) => rules.push(make_broadcast_rule(&BroadcastEdge {
                from: e.from,
                to: e.to,
                root: fix(root),
                var: v.clone(),
            })),
            Instr::Reduce(r) => {
                let Location::Pc(n) = e.from else { unreachable!() };
                blocking.insert(Location::Lock(n));
                locations.insert(Location::Lock(n));
                locations.insert(Location::Collector);
                rules.extend(make_reduce_rules(&ReduceEdge {
                    from: e.from,
                    to: e.to,
                    acc: r.acc.clone(),
                    src: r.src.clone(),
                    op: r.op,
                    root: fix(&r.root),
                }));
            }
        }
    }
    for s in &sends {
        for r in &receives {
            rules.extend(make_send_receive_rules(s, r));
        }
    }
    local.push(LatticeTransducer::inactivity_rule());

    let zero = Env::zero(&cfg.vars, ctx.affine);
    let letter = |id: Interval| Letter::new(cfg.entry, zero.constrain(ID_VAR, id).expect("zero env"));
    let initial = match procs {
        Procs::Count(n) => Automaton::word(&(0..n as i64).map(|i| letter(Interval::int(i))).collect::<Vec<_>>()),
        Procs::Unbounded => {
            // At least one process, ids from 0.
            let l = letter(Interval::at_least(Rational::zero()));
            let mut b = Builder::new();
            let (q0, q1) = (b.add_state(), b.add_state());
            b.set_initial(q0);
            b.set_final(q1);
            b.add(q0, l.clone(), q1);
            b.add(q1, l, q1);
            b.finish()
        }
    };
    Ok(CompiledSemantics {
        domain,
        procs,
        transducer: LatticeTransducer::single_state(local),
        rules,
        initial,
        ctx,
        entry: cfg.entry,
        exit: cfg.exit,
        loop_heads: cfg.loop_heads.clone(),
        blocking,
        has_create: cfg.edges.iter().any(|e| matches!(e.instr, Instr::Create(_))),
        locations,
    })
}
