//! Bad-configuration automata in text form.
//!
//! ```text
//! // comments run to the end of the line
//! states q0, q1
//! initial q0
//! final q1
//! q0 -> q0 : true
//! q0 -> q1 : loc=exit, id >= 0, x != 5 + id * 4
//! q1 -> q1 : true
//! ```
//!
//! A label is `true` or a comma-separated list of constraints. `loc=` takes
//! `l<N>`, `lock<N>`, `collector`, `entry`, `exit` or `any`; every other
//! constraint is a condition over the letter's `id` and variables.

use std::collections::BTreeSet;

use crate::automaton::GuardAutomaton;
use crate::domain::{GuardElement, Location};
use crate::frontend::parse_expr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct PropertyError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_property(text: &str, entry: Location, exit: Location) -> Result<GuardAutomaton, PropertyError> {
    let mut states: Vec<String> = Vec::new();
    let mut initial = BTreeSet::new();
    let mut finals = BTreeSet::new();
    let mut transitions = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |msg: String| PropertyError { line, msg };
        let body = raw.split("//").next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let names = |rest: &str| -> Vec<String> {
            rest.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };
        let lookup = |states: &Vec<String>, n: &str| {
            states
                .iter()
                .position(|s| s == n)
                .ok_or_else(|| err(format!("undeclared state `{n}`")))
        };
        if let Some(rest) = body.strip_prefix("states ") {
            for n in names(rest) {
                if states.contains(&n) {
                    return Err(err(format!("state `{n}` declared twice")));
                }
                states.push(n);
            }
        } else if let Some(rest) = body.strip_prefix("initial ") {
            for n in names(rest) {
                initial.insert(lookup(&states, &n)?);
            }
        } else if let Some(rest) = body.strip_prefix("final ") {
            for n in names(rest) {
                finals.insert(lookup(&states, &n)?);
            }
        } else if let Some((arrow, label)) = body.split_once(':') {
            let (from, to) = arrow
                .split_once("->")
                .ok_or_else(|| err("expected `state -> state : label`".into()))?;
            let from = lookup(&states, from.trim())?;
            let to = lookup(&states, to.trim())?;
            let guard = parse_label(label.trim(), entry, exit).map_err(err)?;
            transitions.push((from, guard, to));
        } else {
            return Err(err(format!("cannot read `{body}`")));
        }
    }
    if initial.is_empty() {
        return Err(PropertyError {
            line: 0,
            msg: "no initial state".into(),
        });
    }
    Ok(GuardAutomaton {
        states,
        initial,
        finals,
        transitions,
    })
}

fn parse_label(label: &str, entry: Location, exit: Location) -> Result<GuardElement, String> {
    let mut g = GuardElement::top();
    if label == "true" {
        return Ok(g);
    }
    for part in split_top_level(label) {
        let part = part.trim();
        if let Some(loc) = part.strip_prefix("loc").map(str::trim_start).and_then(|r| r.strip_prefix('=')) {
            let loc = loc.trim();
            if loc == "any" {
                continue;
            }
            let l = parse_location(loc, entry, exit).ok_or_else(|| format!("unknown location `{loc}`"))?;
            g.locs = Some(BTreeSet::from([l]));
        } else {
            let e = parse_expr(part).map_err(|e| format!("in `{part}`: {}", e.msg))?;
            g = g.with_cond(e);
        }
    }
    Ok(g)
}

fn parse_location(s: &str, entry: Location, exit: Location) -> Option<Location> {
    match s {
        "entry" => Some(entry),
        "exit" => Some(exit),
        "collector" => Some(Location::Collector),
        _ => {
            if let Some(n) = s.strip_prefix("lock") {
                n.parse().ok().map(Location::Lock)
            } else {
                s.strip_prefix('l')?.parse().ok().map(Location::Pc)
            }
        }
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}
