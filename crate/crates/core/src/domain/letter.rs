//! Abstract local states (the automaton alphabet) and guard elements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::env::{Env, VarKinds};
use super::interval::Interval;
use super::Rational;
use crate::expr::{qualified, split_qualified, Expr, ID_VAR};

/// A program point. Reduce sweeps add a locked copy of the reduce
/// location and a single collector location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Pc(u32),
    Lock(u32),
    Collector,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Pc(n) => write!(f, "l{n}"),
            Location::Lock(n) => write!(f, "lock{n}"),
            Location::Collector => write!(f, "collector"),
        }
    }
}

/// One letter: a location and a numeric abstraction of `id` and the
/// variables. Bottom letters are never constructed.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub loc: Location,
    pub env: Env,
}

impl Letter {
    pub fn new(loc: Location, env: Env) -> Letter {
        Letter { loc, env }
    }

    pub fn id(&self) -> Interval {
        self.env.id()
    }

    pub fn leq(&self, other: &Letter) -> bool {
        self.loc == other.loc && self.env.leq(&other.env)
    }

    /// Join of two letters at the same location.
    pub fn join(&self, other: &Letter) -> Letter {
        assert_eq!(self.loc, other.loc, "join across partition classes");
        Letter::new(self.loc, self.env.join(&other.env))
    }

    pub fn widen(&self, other: &Letter) -> Letter {
        assert_eq!(self.loc, other.loc, "widening across partition classes");
        Letter::new(self.loc, self.env.widen(&other.env))
    }

    pub fn meet(&self, other: &Letter, kinds: &VarKinds) -> Option<Letter> {
        if self.loc != other.loc {
            return None;
        }
        Some(Letter::new(self.loc, self.env.meet(&other.env, kinds)?))
    }

    pub fn contains(&self, s: &ConcreteLetter) -> bool {
        if s.loc != self.loc {
            return false;
        }
        let mut val = s.env.clone();
        val.insert(ID_VAR.to_string(), Rational::from_int(s.id));
        self.env.contains(&val)
    }

    /// The concrete states of `vars` with id and every value drawn from
    /// `universe`.
    pub fn concretize_bounded(&self, vars: &[String], universe: &[i64]) -> BTreeSet<ConcreteLetter> {
        let mut out = BTreeSet::new();
        let mut digits = vec![0usize; vars.len() + 1];
        if universe.is_empty() {
            return out;
        }
        loop {
            let s = ConcreteLetter {
                id: universe[digits[0]],
                loc: self.loc,
                env: vars
                    .iter()
                    .zip(&digits[1..])
                    .map(|(v, &d)| (v.clone(), Rational::from_int(universe[d])))
                    .collect(),
            };
            if self.contains(&s) {
                out.insert(s);
            }
            // Odometer increment over the cartesian product.
            let mut k = 0;
            loop {
                if k == digits.len() {
                    return out;
                }
                digits[k] += 1;
                if digits[k] < universe.len() {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {} | {}", self.id(), self.loc, self.env)
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{self}>")
    }
}

/// A concrete local state `<id, l, rho>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConcreteLetter {
    pub id: i64,
    pub loc: Location,
    pub env: BTreeMap<String, Rational>,
}

impl fmt::Display for ConcreteLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}", self.id, self.loc)?;
        for (v, q) in &self.env {
            write!(f, ", {v}={q}")?;
        }
        write!(f, ">")
    }
}

/// A guard: any of a set of locations, constrained by conditions over
/// the letter's own variables (and `id`).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GuardElement {
    /// `None` matches every location; an empty set matches nothing.
    pub locs: Option<BTreeSet<Location>>,
    pub conds: Vec<Expr>,
}

impl GuardElement {
    pub fn top() -> GuardElement {
        GuardElement {
            locs: None,
            conds: Vec::new(),
        }
    }

    pub fn bottom() -> GuardElement {
        GuardElement {
            locs: Some(BTreeSet::new()),
            conds: Vec::new(),
        }
    }

    pub fn at(loc: Location) -> GuardElement {
        GuardElement {
            locs: Some([loc].into_iter().collect()),
            conds: Vec::new(),
        }
    }

    pub fn with_cond(mut self, e: Expr) -> GuardElement {
        self.conds.push(e);
        self
    }

    pub fn is_top(&self) -> bool {
        self.locs.is_none() && self.conds.is_empty()
    }

    pub fn admits(&self, loc: Location) -> bool {
        self.locs.as_ref().map_or(true, |s| s.contains(&loc))
    }

    /// `letter ⊓ guard`.
    pub fn meet(&self, l: &Letter, kinds: &VarKinds) -> Option<Letter> {
        if !self.admits(l.loc) {
            return None;
        }
        let mut env = l.env.clone();
        for c in &self.conds {
            env = env.filter(c, true, kinds)?;
        }
        Some(Letter::new(l.loc, env))
    }

    /// Sound test of `letter ⊑ guard`: may answer false when it holds.
    pub fn contains_letter(&self, l: &Letter, kinds: &VarKinds) -> bool {
        self.admits(l.loc)
            && self
                .conds
                .iter()
                .all(|c| l.env.filter(c, false, kinds).is_none())
    }

    pub fn contains(&self, s: &ConcreteLetter) -> bool {
        if !self.admits(s.loc) {
            return false;
        }
        let mut val = s.env.clone();
        val.insert(ID_VAR.to_string(), Rational::from_int(s.id));
        self.conds
            .iter()
            .all(|c| crate::concrete::eval(c, &val).is_some_and(|q| !q.is_zero()))
    }
}

impl fmt::Display for GuardElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.locs {
            None => write!(f, "_")?,
            Some(s) if s.is_empty() => write!(f, "none")?,
            Some(s) => {
                let names: Vec<String> = s.iter().map(|l| l.to_string()).collect();
                write!(f, "{}", names.join("|"))?;
            }
        }
        for c in &self.conds {
            write!(f, ", {c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GuardElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{self}>")
    }
}

/// Combines letters into one environment over slot-qualified names
/// (`k.v` for variable `v` of letter `k`).
pub fn joint_env(letters: &[Letter], affine: bool) -> Env {
    letters
        .iter()
        .enumerate()
        .fold(Env::top(affine), |acc, (k, l)| {
            acc.product(&l.env.project(|_| true, |v| qualified(k, v)))
        })
}

/// The environment of slot `k` inside a joint environment.
pub fn slot_env(joint: &Env, k: usize) -> Env {
    joint.project(
        |v| matches!(split_qualified(v), Some((s, _)) if s == k),
        |v| split_qualified(v).map(|(_, b)| b.to_string()).unwrap(),
    )
}
