//! The input language: parsing, control-flow graphs, and compilation to
//! a transducer plus rewriting rules.
//!
//! ```text
//! program := decl* stmt*
//! decl    := ("rat" | "int") ident ("," ident)* ";"
//! stmt    := ident ":=" expr
//!          | "if" "(" cond ")" block ("else" block)?
//!          | "while" "(" cond ")" block
//!          | "create" "(" ident ")"
//!          | "send" "(" partner "," ident ")"
//!          | "receive" "(" partner "," ident ")"
//!          | "broadcast" "(" expr "," ident ")"
//!          | "reduce" "(" ident "," ident "," ("+" | "*" | "min" | "max") "," expr ")"
//! block   := "{" stmt* "}" | stmt
//! cond    := "?" | expr
//! partner := "any_id" | expr
//! ```
//!
//! Statements may be separated by `;`. Variables are integers unless
//! declared `rat`.

mod cfg;
mod compile;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::rules::ReduceOp;

pub use cfg::{build_cfg, Cfg, Edge, Instr};
pub use compile::{compile, CompileError, CompiledSemantics, Procs};
pub use parser::{parse, parse_expr};

/// Builtin holding the number of processes in bounded mode.
pub const NPROCS: &str = "nprocs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError { pos, msg: msg.into() }
    }
}

/// Communication partner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Partner {
    Any,
    Id(Expr),
}

impl Partner {
    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Partner::Any => None,
            Partner::Id(e) => Some(e),
        }
    }
}

impl fmt::Display for Partner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partner::Any => write!(f, "any_id"),
            Partner::Id(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reduce {
    pub acc: String,
    pub src: String,
    pub op: ReduceOp,
    pub root: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign(String, Expr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    While(Expr, Vec<Stmt>),
    Create(String),
    Send(Partner, String),
    Receive(Partner, String),
    Broadcast(Expr, String),
    Reduce(Reduce),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl Stmt {
    /// Number of statements in this subtree.
    pub fn size(&self) -> u32 {
        match &self.kind {
            StmtKind::If(_, t, e) => 1 + block_size(t) + block_size(e),
            StmtKind::While(_, b) => 1 + block_size(b),
            _ => 1,
        }
    }
}

pub fn block_size(stmts: &[Stmt]) -> u32 {
    stmts.iter().map(Stmt::size).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    /// Variables declared `rat`.
    pub rats: BTreeSet<String>,
    pub body: Vec<Stmt>,
}
