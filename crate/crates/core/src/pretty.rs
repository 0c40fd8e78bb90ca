//! Canonical printer. Output re-parses to a structurally equal tree and
//! printing is idempotent.

use std::fmt;

use crate::ast::*;

fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Maplet(..) => 0,
        Expr::Union(..) | Expr::Diff(..) => 1,
        Expr::Inter(..) => 2,
        Expr::Override(..) => 3,
        Expr::DomSub(..) | Expr::RanSub(..) | Expr::DomRes(..) | Expr::RanRes(..) => 4,
        _ => 5,
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    if expr_level(e) < min {
        out.push('(');
        write_expr(out, e, 0);
        out.push(')');
        return;
    }
    let mut bin = |l: &Expr, op: &str, r: &Expr, lvl: u8| {
        write_expr(out, l, lvl);
        out.push(' ');
        out.push_str(op);
        out.push(' ');
        write_expr(out, r, lvl + 1);
    };
    match e {
        Expr::Ident(n) => out.push_str(n),
        Expr::Empty => out.push_str("{}"),
        Expr::SetLit(els) => {
            out.push('{');
            for (i, x) in els.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, x, 0);
            }
            out.push('}');
        }
        Expr::Maplet(a, b) => bin(a, "|->", b, 0),
        Expr::Union(a, b) => bin(a, "\\/", b, 1),
        Expr::Diff(a, b) => bin(a, "-", b, 1),
        Expr::Inter(a, b) => bin(a, "/\\", b, 2),
        Expr::Override(a, b) => bin(a, "<+", b, 3),
        Expr::DomSub(a, b) => bin(a, "<<|", b, 4),
        Expr::RanSub(a, b) => bin(a, "|>>", b, 4),
        Expr::DomRes(a, b) => bin(a, "<|", b, 4),
        Expr::RanRes(a, b) => bin(a, "|>", b, 4),
        Expr::Dom(a) | Expr::Ran(a) => {
            out.push_str(if matches!(e, Expr::Dom(_)) { "dom(" } else { "ran(" });
            write_expr(out, a, 0);
            out.push(')');
        }
        Expr::Apply(f, x) => {
            write_expr(out, f, 5);
            out.push('(');
            write_expr(out, x, 0);
            out.push(')');
        }
    }
}

fn write_pred(out: &mut String, p: &Pred) {
    match p {
        Pred::True => out.push_str("btrue"),
        Pred::False => out.push_str("bfalse"),
        Pred::And(..) => {
            for (i, c) in and_spine(p).into_iter().enumerate() {
                if i > 0 {
                    out.push_str(" & ");
                }
                write_conjunct(out, c);
            }
        }
        Pred::Not(q) => {
            out.push_str("not(");
            write_pred(out, q);
            out.push(')');
        }
        Pred::In(a, b) => rel(out, a, ":", b),
        Pred::Subset(a, b) => rel(out, a, "<:", b),
        Pred::Eq(a, b) => rel(out, a, "=", b),
        Pred::Neq(a, b) => rel(out, a, "/=", b),
        Pred::Rel(f, a, b, k) => {
            rel(out, f, ":", a);
            out.push(' ');
            out.push_str(k.arrow());
            out.push(' ');
            write_expr(out, b, 0);
        }
    }
}

fn rel(out: &mut String, a: &Expr, op: &str, b: &Expr) {
    write_expr(out, a, 0);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    write_expr(out, b, 0);
}

/// The left-associated conjunction spine; right operands that are themselves
/// conjunctions stay grouped.
fn and_spine(p: &Pred) -> Vec<&Pred> {
    match p {
        Pred::And(a, b) => {
            let mut v = and_spine(a);
            v.push(b);
            v
        }
        _ => vec![p],
    }
}

fn write_conjunct(out: &mut String, c: &Pred) {
    if matches!(c, Pred::And(..)) {
        out.push('(');
        write_pred(out, c);
        out.push(')');
    } else {
        write_pred(out, c);
    }
}

fn par_spine(s: &Subst) -> Vec<&Subst> {
    match s {
        Subst::Parallel(a, b) => {
            let mut v = par_spine(a);
            v.push(b);
            v
        }
        _ => vec![s],
    }
}

fn write_branch(out: &mut String, s: &Subst) {
    if matches!(s, Subst::Parallel(..)) {
        out.push_str("BEGIN ");
        write_subst(out, s);
        out.push_str(" END");
    } else {
        write_subst(out, s);
    }
}

fn write_subst(out: &mut String, s: &Subst) {
    match s {
        Subst::Skip => out.push_str("skip"),
        Subst::Assign(xs, es) => {
            out.push_str(&xs.join(", "));
            out.push_str(" := ");
            write_list(out, es);
        }
        Subst::FunAssign(f, x, v) => {
            out.push_str(f);
            out.push('(');
            write_expr(out, x, 0);
            out.push_str(") := ");
            write_expr(out, v, 0);
        }
        Subst::Parallel(..) => {
            for (i, b) in par_spine(s).into_iter().enumerate() {
                if i > 0 {
                    out.push_str(" || ");
                }
                write_branch(out, b);
            }
        }
        Subst::Pre(p, body) => {
            out.push_str("PRE ");
            write_pred(out, p);
            out.push_str(" THEN ");
            write_subst(out, body);
            out.push_str(" END");
        }
        Subst::Call { outputs, op, args } => {
            if !outputs.is_empty() {
                out.push_str(&outputs.join(", "));
                out.push_str(" <-- ");
            }
            out.push_str(op);
            if !args.is_empty() {
                out.push('(');
                write_list(out, args);
                out.push(')');
            }
        }
    }
}

fn write_list(out: &mut String, es: &[Expr]) {
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, e, 0);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, 0);
        f.write_str(&s)
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_pred(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_subst(&mut s, self);
        f.write_str(&s)
    }
}

const IND: &str = "    ";

fn clause_list(out: &mut String, kw: &str, items: &[String], sep: &str) {
    if items.is_empty() {
        return;
    }
    out.push_str(kw);
    out.push('\n');
    for (i, it) in items.iter().enumerate() {
        out.push_str(IND);
        out.push_str(it);
        if i + 1 < items.len() {
            out.push_str(sep);
        }
        out.push('\n');
    }
}

fn subst_lines(s: &Subst, indent: &str, out: &mut String) {
    let branches = par_spine(s);
    for (i, b) in branches.iter().enumerate() {
        out.push_str(indent);
        let mut line = String::new();
        write_branch(&mut line, b);
        out.push_str(&line);
        if i + 1 < branches.len() {
            out.push_str(" ||");
        }
        out.push('\n');
    }
}

fn pred_lines(p: &Pred, indent: &str, out: &mut String) {
    let cs = and_spine(p);
    for (i, c) in cs.iter().enumerate() {
        out.push_str(indent);
        let mut line = String::new();
        write_conjunct(&mut line, c);
        out.push_str(&line);
        if i + 1 < cs.len() {
            out.push_str(" &");
        }
        out.push('\n');
    }
}

fn instance_str(i: &Instance) -> String {
    if i.actuals.is_empty() {
        i.machine.clone()
    } else {
        let mut s = format!("{}(", i.machine);
        write_list(&mut s, &i.actuals);
        s.push(')');
        s
    }
}

fn operation_str(op: &Operation) -> String {
    let mut out = String::from(IND);
    if !op.outputs.is_empty() {
        out.push_str(&op.outputs.join(", "));
        out.push_str(" <-- ");
    }
    out.push_str(&op.name);
    if !op.inputs.is_empty() {
        out.push('(');
        out.push_str(&op.inputs.join(", "));
        out.push(')');
    }
    out.push_str(" =\n");
    let deep = IND.repeat(2);
    let deeper = IND.repeat(3);
    match &op.body {
        Subst::Pre(p, body) => {
            out.push_str(&format!("{deep}PRE\n"));
            pred_lines(p, &deeper, &mut out);
            out.push_str(&format!("{deep}THEN\n"));
            subst_lines(body, &deeper, &mut out);
            out.push_str(&format!("{deep}END"));
        }
        body => {
            let mut lines = String::new();
            subst_lines(body, &deep, &mut lines);
            out.push_str(lines.trim_end_matches('\n'));
        }
    }
    out
}

/// Canonical multi-line rendering of a machine.
pub fn pretty_print(m: &Machine) -> String {
    let mut out = String::new();
    out.push_str(match m.kind {
        MachineKind::Abstract => "MACHINE ",
        MachineKind::Refinement => "REFINEMENT ",
    });
    out.push_str(&m.name);
    if !m.parameters.is_empty() {
        out.push_str(&format!("({})", m.parameters.join(", ")));
    }
    out.push('\n');
    if let Some(r) = &m.refines {
        out.push_str(&format!("REFINES\n{IND}{r}\n"));
    }
    let sets: Vec<String> = m
        .sets
        .iter()
        .map(|s| match &s.elements {
            Some(els) => format!("{} = {{{}}}", s.name, els.join(", ")),
            None => s.name.clone(),
        })
        .collect();
    clause_list(&mut out, "SETS", &sets, ";");
    clause_list(&mut out, "VARIABLES", &m.variables, ",");
    let defs: Vec<String> =
        m.definitions.pairs().iter().map(|(n, o)| format!("{n} == {o}")).collect();
    clause_list(&mut out, "DEFINITIONS", &defs, ";");
    let incs: Vec<String> = m.includes.iter().map(instance_str).collect();
    clause_list(&mut out, "INCLUDES", &incs, ",");
    let exts: Vec<String> = m.extends.iter().map(instance_str).collect();
    clause_list(&mut out, "EXTENDS", &exts, ",");
    clause_list(&mut out, "PROMOTES", &m.promotes, ",");
    if m.invariant != Pred::True {
        out.push_str("INVARIANT\n");
        pred_lines(&m.invariant, IND, &mut out);
    }
    if m.initialisation != Subst::Skip {
        out.push_str("INITIALISATION\n");
        subst_lines(&m.initialisation, IND, &mut out);
    }
    if !m.operations.is_empty() {
        out.push_str("OPERATIONS\n");
        let ops: Vec<String> = m.operations.iter().map(operation_str).collect();
        out.push_str(&ops.join(";\n\n"));
        out.push('\n');
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_machine_str, parse_pred};

    #[test]
    fn minimal_machine_prints_exactly() {
        let m = Machine::new(MachineKind::Abstract, "M");
        assert_eq!(pretty_print(&m), "MACHINE M\nEND\n");
    }

    #[test]
    fn parentheses_only_where_needed() {
        for (src, want) in [
            ("(A - B) \\/ C", "A - B \\/ C"),
            ("A - (B \\/ C)", "A - (B \\/ C)"),
            ("(f <+ g)(x)", "(f <+ g)(x)"),
            ("({x} <<| f) |>> S", "{x} <<| f |>> S"),
            ("dom((Father |> {father}))", "dom(Father |> {father})"),
            ("a |-> (b |-> c)", "a |-> (b |-> c)"),
        ] {
            assert_eq!(parse_expr(src).unwrap().to_string(), want, "{src}");
        }
    }

    #[test]
    fn right_nested_conjunction_keeps_grouping() {
        let p = Pred::and(Pred::True, Pred::and(Pred::False, Pred::True));
        let text = p.to_string();
        assert_eq!(text, "btrue & (bfalse & btrue)");
        assert_eq!(parse_pred(&text).unwrap(), p);
    }

    #[test]
    fn right_nested_parallel_keeps_grouping() {
        let s = Subst::Parallel(
            Box::new(Subst::Skip),
            Box::new(Subst::Parallel(Box::new(Subst::Skip), Box::new(Subst::Skip))),
        );
        let m = {
            let mut m = Machine::new(MachineKind::Abstract, "M");
            m.initialisation = s.clone();
            m
        };
        let back = parse_machine_str(&pretty_print(&m)).unwrap();
        assert_eq!(back.initialisation, s);
    }
}
