//! Shared helpers for the integration tests: program loading, analysis
//! runs with a post-fixpoint check, and random generators.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use latra::automaton::{includes, Automaton, Builder};
use latra::domain::{ConcreteLetter, DomainKind, Env, GuardElement, Interval, Letter, Location, Rational, VarKinds};
use latra::engine::{fixpoint, step, AnalysisConfig, AnalysisResult};
use latra::expr::{qualified, BinOp, Expr, ID_VAR};
use latra::frontend::{build_cfg, compile, parse, parse_expr, Cfg, CompiledSemantics, Procs};
use latra::rules::{
    make_broadcast_rule, make_create_rule, make_reduce_rules, make_send_receive_rules, BroadcastEdge, CommEdge,
    CreateEdge, ReduceEdge, ReduceOp, RewriteRule,
};
use latra::transducer::{Ctx, LatticeTransducer, Rewriter};
use proptest::prelude::*;

pub fn program_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs").join(name)
}

pub fn program(name: &str) -> String {
    std::fs::read_to_string(program_path(name)).expect("program file")
}

pub fn cfg_of(src: &str) -> Cfg {
    build_cfg(&parse(src).expect("program parses"))
}

pub struct Run {
    pub cfg: Cfg,
    pub sem: CompiledSemantics,
    pub result: AnalysisResult,
    /// `includes(reach, step(reach))`.
    pub post_fixpoint: bool,
}

pub fn analyze(src: &str, domain: DomainKind, procs: Procs) -> Run {
    let cfg = cfg_of(src);
    let sem = compile(&cfg, domain, procs).expect("program compiles");
    let result = fixpoint(&sem, &AnalysisConfig::default()).expect("fixpoint within budget");
    let (next, _) = step(&sem, &result.reach);
    let post_fixpoint = includes(&result.reach, &next);
    Run {
        cfg,
        sem,
        result,
        post_fixpoint,
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

// ---------------------------------------------------------------------
// Random rules, transducers and automata over a small universe.

pub const VARS: [&str; 2] = ["x", "y"];
pub const LOCS: u32 = 3;

pub fn small_ctx(affine: bool) -> Ctx {
    Ctx {
        kinds: VarKinds::new(Vec::<String>::new()),
        affine,
        vars: VARS.iter().map(|v| v.to_string()).collect(),
        positional_fresh: false,
    }
}

/// Every concrete letter with id in 0..=2, a location below `LOCS` and
/// variables in -2..=2.
pub fn universe() -> Vec<ConcreteLetter> {
    let mut out = Vec::new();
    for id in 0..=2 {
        for l in 0..LOCS {
            for x in -2..=2 {
                for y in -2..=2 {
                    out.push(ConcreteLetter {
                        id,
                        loc: Location::Pc(l),
                        env: [("x".to_string(), Rational::from_int(x)), ("y".to_string(), Rational::from_int(y))]
                            .into_iter()
                            .collect(),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LabelSpec {
    pub loc: u32,
    pub id: (i64, i64),
    pub x: (i64, i64),
    pub y: (i64, i64),
    /// Optional relation `x == y + k`.
    pub rel: Option<i64>,
}

fn range(lo: i64, hi: i64) -> impl Strategy<Value = (i64, i64)> {
    (lo..=hi, lo..=hi).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

pub fn label_spec() -> impl Strategy<Value = LabelSpec> {
    (0..LOCS, range(0, 2), range(-2, 2), range(-2, 2), prop::option::weighted(0.3, -1i64..=1))
        .prop_map(|(loc, id, x, y, rel)| LabelSpec { loc, id, x, y, rel })
}

pub fn letter(spec: &LabelSpec, ctx: &Ctx) -> Option<Letter> {
    let mut env = Env::top(ctx.affine)
        .constrain(ID_VAR, Interval::range(spec.id.0, spec.id.1))?
        .constrain("x", Interval::range(spec.x.0, spec.x.1))?
        .constrain("y", Interval::range(spec.y.0, spec.y.1))?;
    if let Some(k) = spec.rel {
        let e = Expr::bin(BinOp::Eq, Expr::var("x"), Expr::bin(BinOp::Add, Expr::var("y"), Expr::int(k)));
        env = env.filter(&e, true, &ctx.kinds)?;
    }
    Some(Letter::new(Location::Pc(spec.loc), env))
}

#[derive(Debug, Clone)]
pub struct AutSpec {
    pub states: usize,
    pub finals: Vec<bool>,
    pub edges: Vec<(usize, LabelSpec, usize)>,
}

pub fn aut_spec() -> impl Strategy<Value = AutSpec> {
    (1usize..=3).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec((0..n, label_spec(), 0..n), 1..=5),
        )
            .prop_map(|(states, mut finals, edges)| {
                if !finals.iter().any(|&f| f) {
                    finals[states - 1] = true;
                }
                AutSpec { states, finals, edges }
            })
    })
}

pub fn automaton(spec: &AutSpec, ctx: &Ctx) -> Automaton {
    let mut b = Builder::new();
    for _ in 0..spec.states {
        b.add_state();
    }
    b.set_initial(0);
    for (q, &f) in spec.finals.iter().enumerate() {
        if f {
            b.set_final(q);
        }
    }
    for (p, l, q) in &spec.edges {
        if let Some(l) = letter(l, ctx) {
            b.add(*p, l, *q);
        }
    }
    b.finish()
}

fn loc(l: u32) -> Location {
    Location::Pc(l)
}

fn small_expr() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-2i64..=2).prop_map(Expr::int),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        Just(Expr::var(ID_VAR)),
        (-1i64..=1).prop_map(|k| Expr::bin(BinOp::Add, Expr::var(ID_VAR), Expr::int(k))),
        (-1i64..=2).prop_map(|k| Expr::bin(BinOp::Add, Expr::var("x"), Expr::int(k))),
        Just(Expr::bin(BinOp::Mul, Expr::var("x"), Expr::var("y"))),
        Just(Expr::bin(BinOp::Div, Expr::var("x"), Expr::var("y"))),
        Just(Expr::bin(BinOp::Sub, Expr::var("x"), Expr::var("y"))),
    ]
}

fn small_cond() -> impl Strategy<Value = Expr> {
    let ops = prop_oneof![
        Just(BinOp::Lt),
        Just(BinOp::Le),
        Just(BinOp::Eq),
        Just(BinOp::Ne),
        Just(BinOp::Gt),
        Just(BinOp::Ge),
    ];
    (ops, prop_oneof![Just("x"), Just("y"), Just(ID_VAR)], small_expr())
        .prop_map(|(op, v, e)| Expr::bin(op, Expr::var(v), e))
}

/// A rule built by the same constructors the compiler uses.
pub fn rule_strategy() -> impl Strategy<Value = RewriteRule> {
    let partner = prop::option::of(small_expr());
    let var = prop_oneof![Just("x".to_string()), Just("y".to_string())];
    let op = prop_oneof![
        Just(ReduceOp::Sum),
        Just(ReduceOp::Product),
        Just(ReduceOp::Min),
        Just(ReduceOp::Max)
    ];
    prop_oneof![
        (0..LOCS, 0..LOCS, 0..LOCS, 0..LOCS, prop::option::of(small_expr()), partner, var.clone(), any::<bool>()).prop_map(
            |(a, b, c, d, ps, pr, v, first)| {
                let send = CommEdge { from: loc(a), to: loc(b), partner: ps, var: "x".into() };
                let recv = CommEdge { from: loc(c), to: loc(d), partner: pr, var: v };
                let [sr, rs] = make_send_receive_rules(&send, &recv);
                if first { sr } else { rs }
            }
        ),
        (0..LOCS, 0..LOCS, var.clone(), 0..LOCS).prop_map(|(a, b, v, e)| {
            make_create_rule(&CreateEdge { from: loc(a), to: loc(b), var: v, entry: loc(e) })
        }),
        (0..LOCS, 0..LOCS, small_expr(), var).prop_map(|(a, b, root, v)| {
            make_broadcast_rule(&BroadcastEdge { from: loc(a), to: loc(b), root, var: v })
        }),
        (0..LOCS - 1, 0..LOCS - 1, op, small_expr(), 0usize..3).prop_map(|(a, b, op, root, k)| {
            // Reduce locations stay below the last one so locked copies
            // never collide with the universe's locations.
            let e = ReduceEdge { from: loc(a), to: loc(b), acc: "y".into(), src: "x".into(), op, root };
            make_reduce_rules(&e)[k].clone()
        }),
    ]
}

type LocalRule = (Vec<GuardElement>, Vec<Expr>, Vec<Rewriter>);

fn local_rule() -> impl Strategy<Value = LocalRule> {
    let single = (0..LOCS, prop::option::of(small_cond()), 0..LOCS, prop_oneof![Just("x"), Just("y")], small_expr())
        .prop_map(|(a, c, b, v, e)| {
            let mut g = GuardElement::at(loc(a));
            if let Some(c) = c {
                g = g.with_cond(c);
            }
            let e = e.qualify(0);
            (vec![g], vec![], vec![Rewriter::identity(0).goto(loc(b)).assign(v, e)])
        });
    let pair = (0..LOCS, 0..LOCS, any::<bool>()).prop_map(|(a, b, rel)| {
        let requires = if rel {
            vec![Expr::bin(BinOp::Lt, Expr::var(qualified(0, "x")), Expr::var(qualified(1, "x")))]
        } else {
            vec![]
        };
        (
            vec![GuardElement::at(loc(a)), GuardElement::at(loc(b))],
            requires,
            vec![
                Rewriter::identity(1),
                Rewriter::identity(0).assign("y", Expr::var(qualified(1, "x"))),
            ],
        )
    });
    prop_oneof![3 => single, 1 => pair]
}

pub fn transducer_strategy() -> impl Strategy<Value = LatticeTransducer> {
    (prop::collection::vec(local_rule(), 1..=3), any::<bool>()).prop_map(|(mut rules, idle)| {
        if idle {
            rules.push(LatticeTransducer::inactivity_rule());
        }
        LatticeTransducer::single_state(rules)
    })
}

// ---------------------------------------------------------------------
// Random programs.

fn stmt(depth: u32) -> BoxedStrategy<String> {
    let c = || -2i64..=2;
    let v = || prop_oneof![Just("x"), Just("y")];
    let leaf = prop_oneof![
        4 => (v(), c()).prop_map(|(v, k)| format!("{v} := {k}")),
        3 => (v(), v(), c()).prop_map(|(a, b, k)| format!("{a} := {b} + {k}")),
        1 => (v(), c()).prop_map(|(a, k)| format!("{a} := id * {k}")),
        1 => (v(), v()).prop_map(|(a, b)| format!("{a} := {a} / {b}")),
        2 => v().prop_map(|a| format!("send(id + 1, {a})")),
        1 => v().prop_map(|a| format!("send(any_id, {a})")),
        2 => v().prop_map(|a| format!("receive(any_id, {a})")),
        1 => v().prop_map(|a| format!("receive(id - 1, {a})")),
        1 => (c(), v()).prop_map(|(k, a)| format!("broadcast({}, {a})", k.abs() % 2)),
        1 => v().prop_map(|a| format!("reduce(t, {a}, +, 0)")),
        3 => (v(), v()).prop_map(|(a, b)| format!("if (id % 2 == 0) {{ send(id + 1, {a}) }} else {{ receive(id - 1, {b}) }}")),
        2 => (v(), v()).prop_map(|(a, b)| format!("if (id == 0) {{ receive(any_id, {a}) }} else {{ send(0, {b}) }}")),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        5 => leaf,
        1 => (v(), c(), stmt(depth - 1), stmt(depth - 1))
            .prop_map(|(a, k, s, t)| format!("if ({a} < {k}) {{ {s} }} else {{ {t} }}")),
        1 => (stmt(depth - 1), stmt(depth - 1)).prop_map(|(s, t)| format!("if (?) {{ {s} }} else {{ {t} }}")),
        1 => (v(), c()).prop_map(|(a, k)| format!("while ({a} < {k}) {{ {a} := {a} + 1 }}")),
    ]
    .boxed()
}

/// Source text of a small program with at most six locations. Programs
/// never create processes, so the process count stays fixed.
pub fn program_strategy() -> impl Strategy<Value = String> {
    (-2i64..=2, prop::collection::vec(stmt(1), 1..=3))
        .prop_map(|(k, body)| format!("rat t;\nx := id + {k};\n{}\n", body.join(";\n")))
        .prop_filter("at most six locations", |src| cfg_of(src).count <= 6)
}

pub fn domain_strategy() -> impl Strategy<Value = DomainKind> {
    prop_oneof![Just(DomainKind::Interval), Just(DomainKind::Affine)]
}

/// Accepted words over `universe`: every word of length at most one,
/// then `samples` random accepting walks of length up to `max_len`, each
/// letter drawn from the universe members of its label.
pub fn sample_words(
    a: &Automaton,
    universe: &[ConcreteLetter],
    max_len: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> BTreeSet<Vec<ConcreteLetter>> {
    let mut out = latra::automaton::enumerate_words(a, universe, 1);
    let out_edges = a.out_edges();
    let members: Vec<Vec<&ConcreteLetter>> = a
        .transitions
        .iter()
        .map(|t| universe.iter().filter(|s| t.label.contains(s)).collect())
        .collect();
    let initial: Vec<usize> = a.initial.iter().copied().collect();
    if initial.is_empty() {
        return out;
    }
    let mut pick = |n: usize| (rng.next_u64() % n as u64) as usize;
    for _ in 0..samples {
        let len = 2 + pick(max_len.saturating_sub(1).max(1));
        let mut q = initial[pick(initial.len())];
        let mut word = Vec::new();
        for _ in 0..len {
            let choices: Vec<usize> = out_edges[q].iter().copied().filter(|&i| !members[i].is_empty()).collect();
            if choices.is_empty() {
                break;
            }
            let i = choices[pick(choices.len())];
            word.push(members[i][pick(members[i].len())].clone());
            q = a.transitions[i].to;
            if a.finals.contains(&q) {
                out.insert(word.clone());
            }
        }
    }
    out
}

/// Exact words of a concrete configuration set not accepted by `a`.
pub fn missing<'a>(a: &Automaton, words: impl IntoIterator<Item = &'a Vec<ConcreteLetter>>) -> Vec<Vec<ConcreteLetter>> {
    words
        .into_iter()
        .filter(|w| !latra::automaton::accepts(a, w))
        .cloned()
        .collect()
}

pub fn locations_of(word: &[ConcreteLetter]) -> Vec<Location> {
    word.iter().map(|s| s.loc).collect()
}

pub fn point_values(a: &Automaton, at: Location, var: &str) -> BTreeSet<Option<Rational>> {
    a.transitions
        .iter()
        .filter(|t| t.label.loc == at)
        .map(|t| t.label.env.get(var).as_point().cloned())
        .collect()
}

pub fn parse_cond(src: &str) -> Expr {
    parse_expr(src).expect("condition parses")
}
