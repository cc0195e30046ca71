use std::collections::BTreeSet;

use super::lexer::{lex, Tok};
use super::{ParseError, Partner, Pos, Program, Reduce, Stmt, StmtKind, NPROCS};
use crate::expr::{BinOp, Expr, UnOp, ID_VAR};
use crate::rules::ReduceOp;

const KEYWORDS: &[&str] = &[
    "if", "else", "while", "create", "send", "receive", "broadcast", "reduce", "rat", "int", "any_id", "min", "max",
];

pub fn parse(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    let mut rats = BTreeSet::new();
    let mut ints = BTreeSet::new();
    while let Tok::Ident(kw) = p.peek().clone() {
        if kw != "rat" && kw != "int" {
            break;
        }
        p.bump();
        loop {
            let (name, pos) = p.ident()?;
            if name == ID_VAR || name == NPROCS {
                return Err(ParseError::new(pos, format!("cannot declare builtin `{name}`")));
            }
            let clash = if kw == "rat" { ints.contains(&name) } else { rats.contains(&name) };
            if clash {
                return Err(ParseError::new(pos, format!("`{name}` declared both int and rat")));
            }
            if kw == "rat" {
                rats.insert(name);
            } else {
                ints.insert(name);
            }
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(&Tok::Semi)?;
    }
    let body = p.stmts(&Tok::Eof)?;
    Ok(Program { rats, body })
}

/// Parses a standalone expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("{t}")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::new(self.pos(), format!("expected {wanted}, found {}", self.peek()))
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let pos = self.bump().1;
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn variable(&mut self) -> Result<String, ParseError> {
        let (name, pos) = self.ident()?;
        if name == ID_VAR || name == NPROCS {
            return Err(ParseError::new(pos, format!("cannot assign to builtin `{name}`")));
        }
        Ok(name)
    }

    fn stmts(&mut self, end: &Tok) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.peek() == end {
                return Ok(out);
            }
            out.push(self.stmt()?);
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.eat(&Tok::LBrace) {
            let b = self.stmts(&Tok::RBrace)?;
            self.expect(&Tok::RBrace)?;
            Ok(b)
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn cond(&mut self) -> Result<Expr, ParseError> {
        self.expect(&Tok::LParen)?;
        let c = if self.eat(&Tok::Question) { Expr::Nondet } else { self.expr()? };
        self.expect(&Tok::RParen)?;
        Ok(c)
    }

    fn partner(&mut self) -> Result<Partner, ParseError> {
        if self.peek() == &Tok::Ident("any_id".into()) {
            self.bump();
            Ok(Partner::Any)
        } else {
            Ok(Partner::Id(self.expr()?))
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let Tok::Ident(word) = self.peek().clone() else {
            return Err(self.unexpected("statement"));
        };
        let kind = match word.as_str() {
            "if" => {
                self.bump();
                let c = self.cond()?;
                let t = self.block()?;
                let e = if self.eat(&Tok::Ident("else".into())) { self.block()? } else { Vec::new() };
                StmtKind::If(c, t, e)
            }
            "while" => {
                self.bump();
                let c = self.cond()?;
                StmtKind::While(c, self.block()?)
            }
            "create" => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let v = self.variable()?;
                self.expect(&Tok::RParen)?;
                StmtKind::Create(v)
            }
            "send" | "receive" => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let p = self.partner()?;
                self.expect(&Tok::Comma)?;
                let v = if word == "send" { self.ident()?.0 } else { self.variable()? };
                self.expect(&Tok::RParen)?;
                if word == "send" {
                    StmtKind::Send(p, v)
                } else {
                    StmtKind::Receive(p, v)
                }
            }
            "broadcast" => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let root = self.expr()?;
                self.expect(&Tok::Comma)?;
                let v = self.variable()?;
                self.expect(&Tok::RParen)?;
                StmtKind::Broadcast(root, v)
            }
            "reduce" => {
                self.bump();
                self.reduce()?
            }
            "else" => return Err(ParseError::new(pos, "`else` without `if`")),
            _ => {
                let v = self.variable()?;
                self.expect(&Tok::Assign)?;
                StmtKind::Assign(v, self.expr()?)
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn reduce(&mut self) -> Result<StmtKind, ParseError> {
        let open = self.pos();
        self.expect(&Tok::LParen)?;
        let mut args = 1;
        let acc = self.variable()?;
        let arity = |p: &Parser, args: usize| {
            ParseError::new(p.pos(), format!("reduce expects 4 arguments (acc, src, op, root), found {args}"))
        };
        if !self.eat(&Tok::Comma) {
            return Err(arity(self, args));
        }
        let src = self.ident()?.0;
        args += 1;
        if !self.eat(&Tok::Comma) {
            return Err(arity(self, args));
        }
        let op = match self.bump() {
            (Tok::Plus, _) => ReduceOp::Sum,
            (Tok::Star, _) => ReduceOp::Product,
            (Tok::Ident(s), _) if s == "min" => ReduceOp::Min,
            (Tok::Ident(s), _) if s == "max" => ReduceOp::Max,
            (t, pos) => {
                return Err(ParseError::new(pos, format!("unsupported reduce operator {t} (use +, *, min or max)")))
            }
        };
        args += 1;
        if !self.eat(&Tok::Comma) {
            return Err(arity(self, args));
        }
        let root = self.expr()?;
        args += 1;
        if self.peek() == &Tok::Comma {
            while self.peek() != &Tok::RParen && self.peek() != &Tok::Eof {
                if self.eat(&Tok::Comma) {
                    args += 1;
                } else {
                    self.bump();
                }
            }
            return Err(ParseError::new(open, format!("reduce expects 4 arguments (acc, src, op, root), found {args}")));
        }
        self.expect(&Tok::RParen)?;
        Ok(StmtKind::Reduce(Reduce { acc, src, op, root }))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(0)
    }

    fn binop(&self) -> Option<(BinOp, u8)> {
        Some(match self.peek() {
            Tok::OrOr => (BinOp::Or, 1),
            Tok::AndAnd => (BinOp::And, 2),
            Tok::EqEq => (BinOp::Eq, 3),
            Tok::Ne => (BinOp::Ne, 3),
            Tok::Lt => (BinOp::Lt, 4),
            Tok::Le => (BinOp::Le, 4),
            Tok::Gt => (BinOp::Gt, 4),
            Tok::Ge => (BinOp::Ge, 4),
            Tok::Shl => (BinOp::Shl, 5),
            Tok::Shr => (BinOp::Shr, 5),
            Tok::Plus => (BinOp::Add, 6),
            Tok::Minus => (BinOp::Sub, 6),
            Tok::Star => (BinOp::Mul, 7),
            Tok::Slash => (BinOp::Div, 7),
            Tok::Percent => (BinOp::Mod, 7),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop() {
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            (Tok::Num(n), _) => Ok(Expr::Const(n)),
            (Tok::LParen, _) => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            (Tok::Ident(s), _) if s == "min" || s == "max" => {
                self.expect(&Tok::LParen)?;
                let a = self.expr()?;
                self.expect(&Tok::Comma)?;
                let b = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(Expr::bin(if s == "min" { BinOp::Min } else { BinOp::Max }, a, b))
            }
            (Tok::Ident(s), _) if s == "any_id" => Err(ParseError::new(
                pos,
                "`any_id` is only allowed as the partner of send or receive",
            )),
            (Tok::Ident(s), _) if KEYWORDS.contains(&s.as_str()) => {
                Err(ParseError::new(pos, format!("expected expression, found `{s}`")))
            }
            (Tok::Ident(s), _) => Ok(Expr::var(s)),
            (Tok::Question, _) => Err(ParseError::new(pos, "`?` is only allowed as a whole condition")),
            (t, _) => Err(ParseError::new(pos, format!("expected expression, found {t}"))),
        }
    }
}
