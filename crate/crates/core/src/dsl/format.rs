use std::fmt::Write;

use crate::model::{SystemExpr, SystemSpec};

/// Prints `spec` in the text grammar. Numbers use the shortest representation
/// that parses back to the same `f64`.
pub fn format(spec: &SystemSpec) -> String {
    let mut out = String::new();
    if let Some(name) = &spec.metadata.name {
        for line in name.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    if let Some(desc) = &spec.metadata.description {
        for line in desc.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    for c in spec.components.values() {
        let _ = write!(out, "comp {}(lambda={}, t0={}", c.id, c.lambda, c.t0);
        if let Some(p) = c.static_p {
            let _ = write!(out, ", p={p}");
        }
        out.push_str(")\n");
    }
    out.push_str("system: ");
    out.push_str(&format_expr(&spec.root));
    out.push('\n');
    out
}

pub fn format_expr(expr: &SystemExpr) -> String {
    let mut out = String::new();
    write_expr(expr, &mut out);
    out
}

fn write_expr(expr: &SystemExpr, out: &mut String) {
    match expr {
        SystemExpr::Leaf(id) => out.push_str(id),
        SystemExpr::Series(children) => {
            for (i, child) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                if matches!(child, SystemExpr::Series(_)) {
                    out.push('(');
                    write_expr(child, out);
                    out.push(')');
                } else {
                    write_expr(child, out);
                }
            }
        }
        SystemExpr::ProbChoice(branches) => {
            out.push('[');
            for (i, (w, child)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{w}: ");
                write_expr(child, out);
            }
            out.push(']');
        }
        SystemExpr::UniformChoice(children) => {
            out.push('<');
            for (i, child) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                write_expr(child, out);
            }
            out.push('>');
        }
    }
}
