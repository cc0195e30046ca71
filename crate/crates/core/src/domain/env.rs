//! Numeric environments: per-variable intervals, optionally reduced with
//! affine equalities.
//!
//! An [`Env`] is the interval environment alone in the interval domain and
//! the reduced product of intervals and affine equalities in the affine
//! domain. Bottom is never stored; fallible operations return `None`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::affine::{AffineEnv, LinExpr};
use super::interval::{Bound, Interval, Truth};
use super::Rational;
use crate::expr::{split_qualified, BinOp, Expr, UnOp, ID_VAR};

/// Which variables hold rationals; every other variable is integer-valued.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarKinds {
    rats: BTreeSet<String>,
}

impl VarKinds {
    pub fn new(rats: impl IntoIterator<Item = String>) -> VarKinds {
        VarKinds {
            rats: rats.into_iter().collect(),
        }
    }

    pub fn is_int(&self, name: &str) -> bool {
        let base = split_qualified(name).map_or(name, |(_, v)| v);
        !self.rats.contains(base)
    }

    pub fn rationals(&self) -> impl Iterator<Item = &String> {
        self.rats.iter()
    }
}

/// Variable to interval; absent variables are unconstrained.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct IntervalEnv {
    vars: BTreeMap<String, Interval>,
}

impl IntervalEnv {
    pub fn get(&self, v: &str) -> Interval {
        self.vars.get(v).cloned().unwrap_or_else(Interval::top)
    }

    /// Sets `v`; `None` if the interval is bottom.
    pub fn with(&self, v: &str, i: Interval) -> Option<IntervalEnv> {
        if i.is_bottom() {
            return None;
        }
        let mut out = self.clone();
        if i.is_top() {
            out.vars.remove(v);
        } else {
            out.vars.insert(v.to_string(), i);
        }
        Some(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Interval)> {
        self.vars.iter()
    }

    pub fn leq(&self, other: &IntervalEnv) -> bool {
        other.vars.iter().all(|(v, i)| self.get(v).leq(i))
    }

    pub fn join(&self, other: &IntervalEnv) -> IntervalEnv {
        self.combine(other, Interval::join)
    }

    pub fn widen(&self, other: &IntervalEnv) -> IntervalEnv {
        self.combine(other, Interval::widen)
    }

    fn combine(&self, other: &IntervalEnv, f: impl Fn(&Interval, &Interval) -> Interval) -> IntervalEnv {
        let mut vars = BTreeMap::new();
        for (v, a) in &self.vars {
            if let Some(b) = other.vars.get(v) {
                let c = f(a, b);
                if !c.is_top() {
                    vars.insert(v.clone(), c);
                }
            }
        }
        IntervalEnv { vars }
    }

    pub fn meet(&self, other: &IntervalEnv) -> Option<IntervalEnv> {
        let mut out = self.clone();
        for (v, b) in &other.vars {
            let m = out.get(v).meet(b);
            out = out.with(v, m)?;
        }
        Some(out)
    }

    pub fn forget(&self, v: &str) -> IntervalEnv {
        let mut out = self.clone();
        out.vars.remove(v);
        out
    }

    fn eval_lin(&self, lin: &LinExpr) -> Interval {
        lin.coeffs.iter().fold(Interval::point(lin.constant.clone()), |acc, (v, a)| {
            acc.add(&self.get(v).mul(&Interval::point(a.clone())))
        })
    }
}

impl fmt::Debug for IntervalEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.vars.iter()).finish()
    }
}

/// Result of evaluating an expression abstractly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eval {
    pub value: Interval,
    /// The expression may divide by zero.
    pub div_alarm: bool,
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Env {
    iv: IntervalEnv,
    aff: Option<AffineEnv>,
}

impl Env {
    pub fn top(affine: bool) -> Env {
        Env {
            iv: IntervalEnv::default(),
            aff: affine.then(AffineEnv::top),
        }
    }

    /// Every listed variable bound to zero.
    pub fn zero<'a>(vars: impl IntoIterator<Item = &'a String>, affine: bool) -> Env {
        let mut env = Env::top(affine);
        for v in vars {
            env = env.constrain(v, Interval::int(0)).expect("zero is consistent");
        }
        env
    }

    pub fn is_affine(&self) -> bool {
        self.aff.is_some()
    }

    pub fn intervals(&self) -> &IntervalEnv {
        &self.iv
    }

    pub fn affine(&self) -> Option<&AffineEnv> {
        self.aff.as_ref()
    }

    pub fn from_parts(iv: IntervalEnv, aff: Option<AffineEnv>) -> Env {
        Env { iv, aff }
    }

    pub fn get(&self, v: &str) -> Interval {
        self.iv.get(v)
    }

    pub fn id(&self) -> Interval {
        self.get(ID_VAR)
    }

    /// Variables mentioned by any constraint.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.iv.vars.keys().cloned().collect();
        if let Some(a) = &self.aff {
            out.extend(a.vars());
        }
        out
    }

    /// Meets the value of `v` with `i`.
    pub fn constrain(&self, v: &str, i: Interval) -> Option<Env> {
        let m = self.iv.get(v).meet(&i);
        let mut out = Env {
            iv: self.iv.with(v, m.clone())?,
            aff: self.aff.clone(),
        };
        if let (Some(a), Some(q)) = (&out.aff, m.as_point()) {
            out.aff = Some(a.add_equation(&LinExpr::var(v).sub(&LinExpr::constant(q.clone())))?);
        }
        Some(out)
    }

    pub fn leq(&self, other: &Env) -> bool {
        self.iv.leq(&other.iv)
            && match (&self.aff, &other.aff) {
                (_, None) => true,
                (Some(a), Some(b)) => a.leq(b),
                (None, Some(b)) => b.is_top(),
            }
    }

    pub fn join(&self, other: &Env) -> Env {
        Env {
            iv: self.iv.join(&other.iv),
            aff: join_aff(&self.aff, &other.aff),
        }
    }

    /// Intervals widen; the affine part has finite height and joins.
    pub fn widen(&self, other: &Env) -> Env {
        Env {
            iv: self.iv.widen(&other.iv),
            aff: join_aff(&self.aff, &other.aff),
        }
    }

    pub fn meet(&self, other: &Env, kinds: &VarKinds) -> Option<Env> {
        let iv = self.iv.meet(&other.iv)?;
        let aff = match (&self.aff, &other.aff) {
            (Some(a), Some(b)) => Some(a.meet(b)?),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        Env { iv, aff }.reduce(kinds)
    }

    pub fn forget(&self, v: &str) -> Env {
        Env {
            iv: self.iv.forget(v),
            aff: self.aff.as_ref().map(|a| a.forget(v)),
        }
    }

    /// Keeps the variables accepted by `keep`, renamed by `rename`.
    pub fn project(&self, keep: impl Fn(&str) -> bool, rename: impl Fn(&str) -> String) -> Env {
        let iv = IntervalEnv {
            vars: self
                .iv
                .vars
                .iter()
                .filter(|(v, _)| keep(v))
                .map(|(v, i)| (rename(v), i.clone()))
                .collect(),
        };
        let aff = self.aff.as_ref().map(|a| a.project(&keep).rename(&rename));
        Env { iv, aff }
    }

    /// Conjunction of two environments over disjoint variables.
    pub fn product(&self, other: &Env) -> Env {
        let mut iv = self.iv.clone();
        iv.vars.extend(other.iv.vars.iter().map(|(k, v)| (k.clone(), v.clone())));
        let aff = match (&self.aff, &other.aff) {
            (Some(a), Some(b)) => Some(a.meet(b).expect("disjoint variables")),
            (a, b) => a.clone().or(b.clone()),
        };
        Env { iv, aff }
    }

    /// Propagates information between the interval and affine parts.
    pub fn reduce(self, kinds: &VarKinds) -> Option<Env> {
        let mut env = self;
        let Some(aff) = env.aff.clone() else {
            return Some(env);
        };
        let mut aff = aff;
        for (v, i) in &env.iv.vars {
            if let Some(q) = i.as_point() {
                aff = aff.add_equation(&LinExpr::var(v).sub(&LinExpr::constant(q.clone())))?;
            }
        }
        for _ in 0..2 {
            let mut changed = false;
            for row in aff.equations() {
                for (v, a) in &row.coeffs {
                    // a v = -(row - a v)
                    let mut rest = row.clone();
                    rest.coeffs.remove(v);
                    let val = env.iv.eval_lin(&rest.scale(&-a.recip()));
                    let old = env.iv.get(v);
                    let mut new = old.meet(&val);
                    if kinds.is_int(v) {
                        new = new.tighten_int();
                    }
                    if new != old {
                        env.iv = env.iv.with(v, new)?;
                        changed = true;
                    }
                }
            }
            for (v, i) in &env.iv.vars {
                if let Some(q) = i.as_point() {
                    if aff.implied_value(&LinExpr::var(v)).is_none() {
                        aff = aff
                            .add_equation(&LinExpr::var(v).sub(&LinExpr::constant(q.clone())))?;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        env.aff = Some(aff);
        Some(env)
    }

    pub fn eval(&self, e: &Expr) -> Eval {
        let mut alarm = false;
        let value = self.eval_rec(e, &mut alarm);
        Eval {
            value,
            div_alarm: alarm,
        }
    }

    /// Interval of a linear form, using equalities to cancel terms first.
    pub fn eval_linear(&self, lin: &LinExpr) -> Interval {
        match &self.aff {
            Some(a) => self.iv.eval_lin(&a.reduce(lin)).meet(&self.iv.eval_lin(lin)),
            None => self.iv.eval_lin(lin),
        }
    }

    fn eval_rec(&self, e: &Expr, alarm: &mut bool) -> Interval {
        if self.aff.is_some() {
            if let Some(lin) = LinExpr::from_expr(e) {
                if !lin.is_constant() {
                    return self.eval_linear(&lin);
                }
            }
        }
        match e {
            Expr::Const(c) => Interval::point(c.clone()),
            Expr::Var(v) => self.iv.get(v),
            Expr::Nondet => Interval::range(0, 1),
            Expr::Unary(UnOp::Neg, a) => self.eval_rec(a, alarm).neg(),
            Expr::Unary(UnOp::Not, a) => {
                let t = self.eval_rec(a, alarm).truth();
                Interval::from_truth(match t {
                    Truth::True => Truth::False,
                    Truth::False => Truth::True,
                    other => other,
                })
            }
            Expr::Binary(op, a, b) => {
                if op.is_comparison() {
                    return Interval::from_truth(self.compare(*op, a, b, alarm));
                }
                let x = self.eval_rec(a, alarm);
                match op {
                    BinOp::And | BinOp::Or => {
                        let tx = x.truth();
                        let short = if *op == BinOp::And { Truth::False } else { Truth::True };
                        if tx == short || tx == Truth::Unreachable {
                            return Interval::from_truth(tx);
                        }
                        let ty = self.eval_rec(b, alarm).truth();
                        Interval::from_truth(match (tx, ty) {
                            (_, Truth::Unreachable) => Truth::Unreachable,
                            (Truth::Unknown, t) if t == short => short,
                            (Truth::Unknown, _) => Truth::Unknown,
                            (_, t) => t,
                        })
                    }
                    _ => {
                        let y = self.eval_rec(b, alarm);
                        arith(*op, &x, &y, alarm)
                    }
                }
            }
        }
    }

    fn compare(&self, op: BinOp, a: &Expr, b: &Expr, alarm: &mut bool) -> Truth {
        if let (Some(la), Some(lb)) = (LinExpr::from_expr(a), LinExpr::from_expr(b)) {
            let d = self.eval_linear(&la.sub(&lb));
            return d.compare(op, &Interval::int(0));
        }
        let x = self.eval_rec(a, alarm);
        let y = self.eval_rec(b, alarm);
        x.compare(op, &y)
    }

    /// `v := e`. Integer variables receive the truncated value.
    pub fn assign(&self, v: &str, e: &Expr, kinds: &VarKinds) -> (Env, bool) {
        let Eval { value, div_alarm } = self.eval(e);
        let value = if kinds.is_int(v) { value.trunc() } else { value };
        let mut out = self.clone();
        if let Some(a) = &self.aff {
            let exact = LinExpr::from_expr(e).filter(|lin| {
                !kinds.is_int(v)
                    || (lin.has_integer_coefficients() && lin.coeffs.keys().all(|x| kinds.is_int(x)))
            });
            out.aff = Some(match exact {
                Some(lin) => a.assign(v, &lin),
                None => a.forget(v),
            });
        }
        out.iv = out.iv.forget(v);
        let out = out
            .constrain(v, value)
            .and_then(|o| o.reduce(kinds))
            // The value is non-bottom on a non-bottom input; keep the
            // unreduced form if reduction was overly eager.
            .unwrap_or_else(|| self.forget(v));
        (out, div_alarm)
    }

    /// Restricts to states where `e` is nonzero (`branch`) or zero (`!branch`).
    pub fn filter(&self, e: &Expr, branch: bool, kinds: &VarKinds) -> Option<Env> {
        match e {
            Expr::Nondet => Some(self.clone()),
            Expr::Unary(UnOp::Not, a) => self.filter(a, !branch, kinds),
            Expr::Binary(BinOp::And, a, b) if branch => {
                self.filter(a, true, kinds)?.filter(b, true, kinds)
            }
            Expr::Binary(BinOp::Or, a, b) if !branch => {
                self.filter(a, false, kinds)?.filter(b, false, kinds)
            }
            Expr::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                // `!(a && b)` and `a || b` are unions.
                let want = *op == BinOp::Or;
                let l = self.filter(a, want, kinds);
                let r = self.filter(b, want, kinds);
                match (l, r) {
                    (Some(l), Some(r)) => Some(l.join(&r)),
                    (l, r) => l.or(r),
                }
            }
            Expr::Binary(op, a, b) if op.is_comparison() => {
                let op = if branch { *op } else { op.negate().unwrap() };
                self.filter_cmp(op, a, b, kinds)
            }
            other => {
                let op = if branch { BinOp::Ne } else { BinOp::Eq };
                self.filter_cmp(op, other, &Expr::int(0), kinds)
            }
        }
    }

    fn filter_cmp(&self, op: BinOp, a: &Expr, b: &Expr, kinds: &VarKinds) -> Option<Env> {
        let mut alarm = false;
        if self.compare(op, a, b, &mut alarm) == Truth::False {
            return None;
        }
        let (Some(la), Some(lb)) = (LinExpr::from_expr(a), LinExpr::from_expr(b)) else {
            return Some(self.clone());
        };
        let d = la.sub(&lb);
        let mut env = self.clone();
        if op == BinOp::Eq {
            if let Some(aff) = &env.aff {
                env.aff = Some(aff.add_equation(&d)?);
            }
        }
        for _ in 0..2 {
            for (v, c) in &d.coeffs {
                let mut rest = d.clone();
                rest.coeffs.remove(v);
                // c v op -rest, so v op' -rest / c
                let t = env.iv.eval_lin(&rest.scale(&-c.recip()));
                let op = if c.is_negative() { op.flip() } else { op };
                let bound = bound_for(op, &t, &env.iv.get(v), kinds.is_int(v));
                env = env.constrain(v, bound)?;
            }
        }
        let env = env.reduce(kinds)?;
        if env.compare(op, a, b, &mut alarm) == Truth::False {
            return None;
        }
        Some(env)
    }

    /// Whether a concrete valuation lies in the concretization.
    pub fn contains(&self, valuation: &BTreeMap<String, Rational>) -> bool {
        let val = |v: &str| valuation.get(v).cloned().unwrap_or_default();
        self.iv.vars.iter().all(|(v, i)| i.contains(&val(v)))
            && self.aff.as_ref().map_or(true, |a| {
                a.equations().iter().all(|row| {
                    row.coeffs
                        .iter()
                        .fold(row.constant.clone(), |acc, (v, c)| &acc + &(c * &val(v)))
                        .is_zero()
                })
            })
    }
}

fn join_aff(a: &Option<AffineEnv>, b: &Option<AffineEnv>) -> Option<AffineEnv> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.join(b)),
        (Some(_), None) | (None, Some(_)) => Some(AffineEnv::top()),
        (None, None) => None,
    }
}

/// Values of `v` compatible with `v op t` for some element of `t`.
fn bound_for(op: BinOp, t: &Interval, cur: &Interval, int: bool) -> Interval {
    if t.is_bottom() {
        return Interval::bottom();
    }
    let strict_step = |b: &Bound, up: bool| -> Bound {
        match b {
            Bound::Finite(q) if int && q.is_integer() => {
                Bound::Finite(if up { q + &Rational::one() } else { q - &Rational::one() })
            }
            other => other.clone(),
        }
    };
    let i = match op {
        BinOp::Lt => Interval::new(Bound::NegInf, strict_step(t.hi(), false)),
        BinOp::Le => Interval::new(Bound::NegInf, t.hi().clone()),
        BinOp::Gt => Interval::new(strict_step(t.lo(), true), Bound::PosInf),
        BinOp::Ge => Interval::new(t.lo().clone(), Bound::PosInf),
        BinOp::Eq => t.clone(),
        BinOp::Ne => match t.as_point() {
            Some(q) if int && cur.lo() == &Bound::Finite(q.clone()) => {
                Interval::new(Bound::Finite(q + &Rational::one()), Bound::PosInf)
            }
            Some(q) if int && cur.hi() == &Bound::Finite(q.clone()) => {
                Interval::new(Bound::NegInf, Bound::Finite(q - &Rational::one()))
            }
            Some(q) if cur.as_point() == Some(q) => Interval::bottom(),
            _ => Interval::top(),
        },
        _ => Interval::top(),
    };
    if int {
        i.tighten_int()
    } else {
        i
    }
}

fn arith(op: BinOp, x: &Interval, y: &Interval, alarm: &mut bool) -> Interval {
    let checked = |r: Option<Interval>, alarm: &mut bool| {
        r.unwrap_or_else(|| {
            *alarm = true;
            Interval::top()
        })
    };
    match op {
        BinOp::Add => x.add(y),
        BinOp::Sub => x.sub(y),
        BinOp::Mul => x.mul(y),
        BinOp::Div => checked(x.div(y), alarm),
        BinOp::Mod => checked(x.rem(y), alarm),
        BinOp::Shl => x.shl(y),
        BinOp::Shr => x.shr(y),
        BinOp::Min => x.min(y),
        BinOp::Max => x.max(y),
        _ => unreachable!("not an arithmetic operator"),
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .iv
            .vars
            .iter()
            .filter(|(v, i)| {
                // Points implied by equalities are printed once, as intervals.
                v.as_str() != ID_VAR || i.as_point().is_none() || self.aff.is_none()
            })
            .map(|(v, i)| format!("{v} in {i}"))
            .collect();
        if let Some(a) = &self.aff {
            let pinned: BTreeSet<&String> = self
                .iv
                .vars
                .iter()
                .filter(|(_, i)| i.as_point().is_some())
                .map(|(v, _)| v)
                .collect();
            for row in a.equations() {
                if row.coeffs.len() == 1 && pinned.contains(row.coeffs.keys().next().unwrap()) {
                    continue;
                }
                let mut rhs = row.scale(&-Rational::one());
                let (p, _) = row.coeffs.iter().next().unwrap();
                rhs.coeffs.remove(p);
                parts.push(format!("{p} = {rhs}"));
            }
        }
        if parts.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", parts.join(", "))
        }
    }
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
