//! Affine equality constraints (Karr's domain).
//!
//! An [`AffineEnv`] is a conjunction of equalities `sum a_i x_i = c` kept in
//! reduced row-echelon form. Variables are ordered by name; each row's
//! pivot is its smallest variable, has coefficient 1, and appears in no
//! other row. Variables that occur in no row are unconstrained. Under these
//! rules two environments describe the same affine subspace exactly when
//! their rows are identical. The empty subspace is not representable here;
//! operations that can produce it return `None`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Rational;
use crate::expr::{BinOp, Expr, UnOp};

/// A linear form `sum coeffs[v] * v + constant`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn constant(c: Rational) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: &str) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.to_string(), Rational::one());
        LinExpr {
            coeffs,
            constant: Rational::zero(),
        }
    }

    /// Extracts a linear form, or `None` for nonlinear expressions.
    pub fn from_expr(e: &Expr) -> Option<LinExpr> {
        match e {
            Expr::Const(c) => Some(LinExpr::constant(c.clone())),
            Expr::Var(v) => Some(LinExpr::var(v)),
            Expr::Unary(UnOp::Neg, a) => Some(LinExpr::from_expr(a)?.scale(&-Rational::one())),
            Expr::Binary(BinOp::Add, a, b) => {
                Some(LinExpr::from_expr(a)?.add(&LinExpr::from_expr(b)?))
            }
            Expr::Binary(BinOp::Sub, a, b) => Some(LinExpr::from_expr(a)?.sub(&LinExpr::from_expr(b)?)),
            Expr::Binary(BinOp::Mul, a, b) => {
                let la = LinExpr::from_expr(a)?;
                let lb = LinExpr::from_expr(b)?;
                if la.is_constant() {
                    Some(lb.scale(&la.constant))
                } else if lb.is_constant() {
                    Some(la.scale(&lb.constant))
                } else {
                    None
                }
            }
            Expr::Binary(BinOp::Div, a, b) => {
                let lb = LinExpr::from_expr(b)?;
                if lb.is_constant() && !lb.constant.is_zero() {
                    Some(LinExpr::from_expr(a)?.scale(&lb.constant.recip()))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, v: &str) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_default()
    }

    pub fn scale(&self, k: &Rational) -> LinExpr {
        if k.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, a)| (v.clone(), a * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (v, a) in &other.coeffs {
            out.add_term(v, a);
        }
        out.constant = &out.constant + &other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn add_term(&mut self, v: &str, a: &Rational) {
        let sum = &self.coeff(v) + a;
        if sum.is_zero() {
            self.coeffs.remove(v);
        } else {
            self.coeffs.insert(v.to_string(), sum);
        }
    }

    /// Replaces `v` by the linear form `with`.
    pub fn substitute(&self, v: &str, with: &LinExpr) -> LinExpr {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(a) => {
                let mut rest = self.clone();
                rest.coeffs.remove(v);
                rest.add(&with.scale(a))
            }
        }
    }

    pub fn rename(&self, f: &impl Fn(&str) -> String) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, a) in &self.coeffs {
            out.add_term(&f(v), a);
        }
        out
    }

    /// True when every coefficient and the constant are integers.
    pub fn has_integer_coefficients(&self) -> bool {
        self.constant.is_integer() && self.coeffs.values().all(|a| a.is_integer())
    }

    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (v, a) in &self.coeffs {
            let term = if *a == Rational::one() {
                Expr::var(v.clone())
            } else {
                Expr::bin(BinOp::Mul, Expr::Const(a.clone()), Expr::var(v.clone()))
            };
            acc = Some(match acc {
                None => term,
                Some(e) => Expr::bin(BinOp::Add, e, term),
            });
        }
        match acc {
            None => Expr::Const(self.constant.clone()),
            Some(e) if self.constant.is_zero() => e,
            Some(e) => Expr::bin(BinOp::Add, e, Expr::Const(self.constant.clone())),
        }
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl fmt::Debug for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// One equality `lhs = 0`, where `lhs` carries its constant term.
type Row = LinExpr;

#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AffineEnv {
    rows: Vec<Row>,
}

impl AffineEnv {
    pub fn top() -> AffineEnv {
        AffineEnv::default()
    }

    /// Builds the subspace `lhs_i = 0` for each form, or `None` if empty.
    pub fn from_equations<'a>(eqs: impl IntoIterator<Item = &'a LinExpr>) -> Option<AffineEnv> {
        let mut env = AffineEnv::top();
        for e in eqs {
            env = env.add_equation(e)?;
        }
        Some(env)
    }

    pub fn is_top(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows as equations `lhs = 0`, in canonical order.
    pub fn equations(&self) -> &[LinExpr] {
        &self.rows
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.rows
            .iter()
            .flat_map(|r| r.coeffs.keys().cloned())
            .collect()
    }

    fn pivot(row: &Row) -> &str {
        row.coeffs.keys().next().expect("rows are never constant")
    }

    /// Rewrites `lin` using the rows so that no pivot variable remains.
    pub fn reduce(&self, lin: &LinExpr) -> LinExpr {
        let mut out = lin.clone();
        for row in &self.rows {
            let p = Self::pivot(row);
            if let Some(a) = out.coeffs.get(p).cloned() {
                // p = -(row - p)
                out = out.sub(&row.scale(&a));
            }
        }
        out
    }

    /// The constant value of `lin` on the whole subspace, if it has one.
    pub fn implied_value(&self, lin: &LinExpr) -> Option<Rational> {
        let r = self.reduce(lin);
        r.is_constant().then_some(r.constant)
    }

    /// Intersects with `lhs = 0`.
    pub fn add_equation(&self, lhs: &LinExpr) -> Option<AffineEnv> {
        let r = self.reduce(lhs);
        if r.is_constant() {
            return if r.constant.is_zero() {
                Some(self.clone())
            } else {
                None
            };
        }
        let (p, a) = r
            .coeffs
            .iter()
            .next()
            .map(|(p, a)| (p.clone(), a.clone()))
            .unwrap();
        let r = r.scale(&a.recip());
        let mut rows: Vec<Row> = self
            .rows
            .iter()
            .map(|row| match row.coeffs.get(&p) {
                Some(b) => row.sub(&r.scale(b)),
                None => row.clone(),
            })
            .collect();
        rows.push(r);
        rows.sort_by(|x, y| Self::pivot(x).cmp(Self::pivot(y)));
        Some(AffineEnv { rows })
    }

    pub fn meet(&self, other: &AffineEnv) -> Option<AffineEnv> {
        let mut env = self.clone();
        for r in &other.rows {
            env = env.add_equation(r)?;
        }
        Some(env)
    }

    pub fn leq(&self, other: &AffineEnv) -> bool {
        other
            .rows
            .iter()
            .all(|r| self.implied_value(r).is_some_and(|c| c.is_zero()))
    }

    /// Existential projection of `v`.
    pub fn forget(&self, v: &str) -> AffineEnv {
        let Some(k) = self.rows.iter().position(|r| r.coeffs.contains_key(v)) else {
            return self.clone();
        };
        let elim = &self.rows[k];
        let a = elim.coeff(v);
        let mut out = AffineEnv::top();
        for (i, row) in self.rows.iter().enumerate() {
            if i == k {
                continue;
            }
            let row = match row.coeffs.get(v) {
                Some(b) => row.sub(&elim.scale(&(b / &a))),
                None => row.clone(),
            };
            out = out
                .add_equation(&row)
                .expect("projection of a non-empty subspace is non-empty");
        }
        out
    }

    pub fn forget_all<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> AffineEnv {
        let mut out = self.clone();
        for v in vars {
            out = out.forget(v);
        }
        out
    }

    /// Keeps only constraints over variables accepted by `keep`.
    pub fn project(&self, keep: impl Fn(&str) -> bool) -> AffineEnv {
        let drop: Vec<String> = self.vars().into_iter().filter(|v| !keep(v)).collect();
        self.forget_all(&drop)
    }

    pub fn rename(&self, f: &impl Fn(&str) -> String) -> AffineEnv {
        AffineEnv::from_equations(&self.rows.iter().map(|r| r.rename(f)).collect::<Vec<_>>())
            .expect("renaming preserves satisfiability")
    }

    /// `v := lin`.
    pub fn assign(&self, v: &str, lin: &LinExpr) -> AffineEnv {
        let a = lin.coeff(v);
        if !a.is_zero() {
            // Invertible: v_old = (v_new - (lin - a v_old)) / a.
            let mut rest = lin.clone();
            rest.coeffs.remove(v);
            let old = LinExpr::var(v).sub(&rest).scale(&a.recip());
            let rows: Vec<Row> = self.rows.iter().map(|r| r.substitute(v, &old)).collect();
            return AffineEnv::from_equations(&rows).expect("invertible assignment");
        }
        self.forget(v)
            .add_equation(&LinExpr::var(v).sub(lin))
            .expect("fresh variable equation is satisfiable")
    }

    /// Affine hull of the union.
    pub fn join(&self, other: &AffineEnv) -> AffineEnv {
        if self.leq(other) {
            return other.clone();
        }
        if other.leq(self) {
            return self.clone();
        }
        let vars: Vec<String> = self.vars().union(&other.vars()).cloned().collect();
        let index: BTreeMap<&str, usize> =
            vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let n = vars.len();
        let (pa, mut dirs) = self.generators(&vars, &index);
        let (pb, db) = other.generators(&vars, &index);
        dirs.extend(db);
        dirs.push((0..n).map(|i| &pb[i] - &pa[i]).collect());
        let normals = nullspace(&dirs, n);
        let mut out = AffineEnv::top();
        for a in normals {
            let mut lhs = LinExpr::default();
            let mut c = Rational::zero();
            for (i, ai) in a.iter().enumerate() {
                if !ai.is_zero() {
                    lhs.add_term(&vars[i], ai);
                    c = &c + &(ai * &pa[i]);
                }
            }
            lhs.constant = -c;
            out = out.add_equation(&lhs).expect("hull contains both points");
        }
        out
    }

    /// A particular point and a basis of directions over `vars`.
    fn generators(
        &self,
        vars: &[String],
        index: &BTreeMap<&str, usize>,
    ) -> (Vec<Rational>, Vec<Vec<Rational>>) {
        let n = vars.len();
        let mut point = vec![Rational::zero(); n];
        let pivots: BTreeSet<&str> = self.rows.iter().map(|r| Self::pivot(r)).collect();
        for r in &self.rows {
            point[index[Self::pivot(r)]] = -&r.constant;
        }
        let mut dirs = Vec::new();
        for f in vars.iter().filter(|v| !pivots.contains(v.as_str())) {
            let mut d = vec![Rational::zero(); n];
            d[index[f.as_str()]] = Rational::one();
            for r in &self.rows {
                if let Some(a) = r.coeffs.get(f) {
                    d[index[Self::pivot(r)]] = -a;
                }
            }
            dirs.push(d);
        }
        (point, dirs)
    }
}

/// Basis of `{ a | a . d = 0 for every d in rows }` in dimension `n`.
fn nullspace(rows: &[Vec<Rational>], n: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(k) = (r..m.len()).find(|&k| !m[k][col].is_zero()) else {
            continue;
        };
        m.swap(r, k);
        let inv = m[r][col].recip();
        m[r] = m[r].iter().map(|x| x * &inv).collect();
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                m[i] = m[i].iter().zip(&m[r]).map(|(x, y)| x - &(&f * y)).collect();
            }
        }
        pivot_cols.push(col);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let mut a = vec![Rational::zero(); n];
        a[free] = Rational::one();
        for (i, &pc) in pivot_cols.iter().enumerate() {
            a[pc] = -&m[i][free];
        }
        basis.push(a);
    }
    basis
}

impl fmt::Display for AffineEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            return write!(f, "true");
        }
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, " && ")?;
            }
            let p = Self::pivot(r);
            let mut rhs = r.scale(&-Rational::one());
            rhs.coeffs.remove(p);
            write!(f, "{p} = {rhs}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for AffineEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
