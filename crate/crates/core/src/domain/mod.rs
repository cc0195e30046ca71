//! Abstract domains for local process states.

pub mod affine;
pub mod env;
pub mod interval;
pub mod letter;
pub mod rational;

pub use affine::{AffineEnv, LinExpr};
pub use env::{Env, Eval, IntervalEnv, VarKinds};
pub use interval::{Bound, Interval, Truth};
pub use letter::{ConcreteLetter, GuardElement, Letter, Location};
pub use rational::Rational;

/// Choice of numeric abstraction for letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Affine,
}

impl DomainKind {
    pub fn is_affine(self) -> bool {
        self == DomainKind::Affine
    }
}
