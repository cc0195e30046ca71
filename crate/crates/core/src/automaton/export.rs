use std::fmt::Write;

use super::Automaton;

/// Graphviz rendering: one node per state, final states doubled, edges
/// labelled `id | location | constraints`.
pub fn to_dot(a: &Automaton) -> String {
    let mut s = String::from("digraph reach {\n  rankdir=LR;\n");
    for q in 0..a.states {
        let shape = if a.finals.contains(&q) { "doublecircle" } else { "circle" };
        let _ = writeln!(s, "  q{q} [shape={shape}, label=\"{q}\"];");
    }
    for (i, q) in a.initial.iter().enumerate() {
        let _ = writeln!(s, "  init{i} [shape=point];\n  init{i} -> q{q};");
    }
    for t in &a.transitions {
        let label = t.label.to_string().replace('"', "\\\"");
        let _ = writeln!(s, "  q{} -> q{} [label=\"{}\"];", t.from, t.to, label);
    }
    s.push_str("}\n");
    s
}
