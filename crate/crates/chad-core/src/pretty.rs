//! Canonical pretty-printer for the source language.
//!
//! The output is deterministic (golden-testable): 2-space indentation,
//! stable operator spelling, `let`/`case`/`match`/`iterate` broken across
//! lines at statement level and everything else inline. Projection
//! expansions and the `iterate .. from` expansion are folded back into
//! their sugared spellings.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::syntax::{OpRef, SrcDef, SrcTerm, SrcType};

pub fn pretty_type(ty: &SrcType) -> String {
    let mut s = String::new();
    type_into(ty, 0, &mut s);
    s
}

// prec 0: sums, 1: products, 2: atoms
fn type_into(ty: &SrcType, prec: u8, out: &mut String) {
    match ty {
        SrcType::Real(n) => {
            let _ = write!(out, "real {n}");
        }
        SrcType::Unit => out.push_str("unit"),
        SrcType::Void => out.push_str("void"),
        SrcType::Prod(ts) => {
            if prec > 1 {
                out.push('(');
            }
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" * ");
                }
                type_into(t, 2, out);
            }
            if prec > 1 {
                out.push(')');
            }
        }
        SrcType::Sum(ts) => {
            if prec > 0 {
                out.push('(');
            }
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                type_into(t, 1, out);
            }
            if prec > 0 {
                out.push(')');
            }
        }
    }
}

pub fn pretty_opref(op: &OpRef) -> String {
    let mut s = String::new();
    opref_into(op, &mut s);
    s
}

fn opref_into(op: &OpRef, out: &mut String) {
    out.push_str(&op.base);
    if !op.params.is_empty() {
        out.push('[');
        for (i, p) in op.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{p}");
        }
        out.push(']');
    }
}

/// Recognize the projection expansion `match t with (_prj0, ..) => _prji`.
fn as_prj(term: &SrcTerm) -> Option<(usize, &SrcTerm)> {
    if let SrcTerm::ProdMatch(scrut, names, body) = term {
        if names.iter().enumerate().all(|(k, n)| n == &alloc::format!("_prj{k}")) {
            if let SrcTerm::Var(x) = &**body {
                if let Some(pos) = names.iter().position(|n| n == x) {
                    return Some((pos + 1, scrut));
                }
            }
        }
    }
    None
}

/// Recognize the iterate-from expansion `let x = e in iterate x. body`.
fn as_iterate_from<'t>(term: &'t SrcTerm) -> Option<(&'t str, &'t SrcTerm, &'t SrcTerm)> {
    if let SrcTerm::Let(x, bound, rest) = term {
        if let SrcTerm::Iterate(y, body) = &**rest {
            if x == y {
                return Some((x, bound, body));
            }
        }
    }
    None
}

/// Statement renderings of these forms end inside a nested body, where a
/// following `|` would attach to the wrong case.
fn open_spine(t: &SrcTerm) -> bool {
    if as_iterate_from(t).is_some() || as_prj(t).is_some() {
        return false;
    }
    matches!(t, SrcTerm::Let(..) | SrcTerm::SumMatch(..) | SrcTerm::ProdMatch(..))
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn stmt(term: &SrcTerm, indent: usize, out: &mut String) {
    if let Some((x, from, body)) = as_iterate_from(term) {
        let _ = write!(out, "iterate {x} from ");
        inline(from, out);
        out.push_str(" {\n");
        pad(indent + 1, out);
        stmt(body, indent + 1, out);
        out.push('\n');
        pad(indent, out);
        out.push('}');
        return;
    }
    match term {
        SrcTerm::Let(x, bound, body) => {
            let _ = write!(out, "let {x} = ");
            inline(bound, out);
            out.push_str(" in\n");
            pad(indent, out);
            stmt(body, indent, out);
        }
        SrcTerm::SumMatch(scrut, branches) => {
            out.push_str("case ");
            inline(scrut, out);
            out.push_str(" of\n");
            for (i, (x, t)) in branches.iter().enumerate() {
                if i == 0 {
                    pad(indent + 1, out);
                } else {
                    out.push('\n');
                    pad(indent, out);
                    out.push_str("| ");
                }
                let _ = write!(out, "in{} {x} => ", i + 1);
                // A non-final branch body must not end in an open spine: a
                // trailing case would swallow the next `|`.
                if i + 1 < branches.len() && open_spine(t) {
                    out.push('(');
                    stmt(t, indent + 2, out);
                    out.push(')');
                } else {
                    stmt(t, indent + 2, out);
                }
            }
        }
        SrcTerm::ProdMatch(..) if as_prj(term).is_some() => inline(term, out),
        SrcTerm::ProdMatch(scrut, names, body) => {
            out.push_str("match ");
            inline(scrut, out);
            out.push_str(" with (");
            out.push_str(&names.join(", "));
            out.push_str(") =>\n");
            pad(indent + 1, out);
            stmt(body, indent + 1, out);
        }
        SrcTerm::Iterate(x, body) => {
            // Bare iterate only arises on synthesized terms; normalize to the
            // self-from spelling, which reparses to a semantically equal term.
            let _ = write!(out, "iterate {x} from {x} {{\n");
            pad(indent + 1, out);
            stmt(body, indent + 1, out);
            out.push('\n');
            pad(indent, out);
            out.push('}');
        }
        _ => inline(term, out),
    }
}

fn inline(term: &SrcTerm, out: &mut String) {
    if let Some((i, scrut)) = as_prj(term) {
        let _ = write!(out, "prj{i} ");
        inline_atom(scrut, out);
        return;
    }
    if let Some((x, from, body)) = as_iterate_from(term) {
        let _ = write!(out, "(iterate {x} from ");
        inline(from, out);
        out.push_str(" { ");
        inline(body, out);
        out.push_str(" })");
        return;
    }
    match term {
        SrcTerm::Var(x) => out.push_str(x),
        SrcTerm::Op(op, args) => {
            out.push_str("op ");
            opref_into(op, out);
            out.push_str(" (");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                inline(a, out);
            }
            out.push(')');
        }
        SrcTerm::Let(x, bound, body) => {
            let _ = write!(out, "(let {x} = ");
            inline(bound, out);
            out.push_str(" in ");
            inline(body, out);
            out.push(')');
        }
        SrcTerm::Inj(i, payload, ty) => {
            let _ = write!(out, "in{i} ");
            inline_atom(payload, out);
            out.push_str(" : ");
            type_into(ty, 0, out);
        }
        SrcTerm::SumMatch(scrut, branches) => {
            out.push_str("(case ");
            inline(scrut, out);
            out.push_str(" of ");
            for (i, (x, t)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                let _ = write!(out, "in{} {x} => ", i + 1);
                inline(t, out);
            }
            out.push(')');
        }
        SrcTerm::Tuple(ts) => {
            out.push('(');
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                inline(t, out);
            }
            out.push(')');
        }
        SrcTerm::ProdMatch(scrut, names, body) => {
            out.push_str("(match ");
            inline(scrut, out);
            out.push_str(" with (");
            out.push_str(&names.join(", "));
            out.push_str(") => ");
            inline(body, out);
            out.push(')');
        }
        SrcTerm::Iterate(x, body) => {
            let _ = write!(out, "(iterate {x} from {x} {{ ");
            inline(body, out);
            out.push_str(" })");
        }
    }
}

/// Like `inline` but parenthesizes forms that are not self-delimiting, for
/// injection-payload position.
fn inline_atom(term: &SrcTerm, out: &mut String) {
    let atomic = matches!(term, SrcTerm::Var(_) | SrcTerm::Tuple(_)) || as_prj(term).is_some();
    if atomic && !matches!(term, SrcTerm::Inj(..)) {
        inline(term, out);
    } else {
        match term {
            // Already parenthesized by `inline`.
            SrcTerm::Let(..) | SrcTerm::SumMatch(..) | SrcTerm::ProdMatch(..)
            | SrcTerm::Iterate(..) => inline(term, out),
            _ => {
                out.push('(');
                inline(term, out);
                out.push(')');
            }
        }
    }
}

pub fn pretty_term(term: &SrcTerm) -> String {
    let mut s = String::new();
    stmt(term, 1, &mut s);
    s
}

pub fn pretty_def(def: &SrcDef) -> String {
    let mut s = String::new();
    let _ = write!(s, "def {} (", def.name);
    let params: Vec<String> = def
        .ctx
        .0
        .iter()
        .map(|(n, t)| alloc::format!("{n}: {}", pretty_type(t)))
        .collect();
    s.push_str(&params.join(", "));
    let _ = write!(s, ") : {} =\n", pretty_type(&def.ret));
    pad(1, &mut s);
    stmt(&def.body, 1, &mut s);
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;
    use alloc::boxed::Box;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn golden_identity() {
        let def = SrcDef {
            name: "f".to_string(),
            ctx: SrcContext(vec![("x".to_string(), real(1))]),
            ret: real(1),
            body: var("x"),
        };
        assert_eq!(pretty_def(&def), "def f (x: real 1) : real 1 =\n  x\n");
    }

    #[test]
    fn golden_halving_loop() {
        let body = SrcTerm::SumMatch(
            Box::new(SrcTerm::Op(OpRef::with_params("decider", vec![1.0]), vec![var("y")])),
            vec![
                (
                    "z".to_string(),
                    SrcTerm::Inj(
                        2,
                        Box::new(SrcTerm::Op(
                            OpRef::new("mul"),
                            vec![var("z"), SrcTerm::Op(OpRef::with_params("cnst", vec![0.5]), vec![])],
                        )),
                        sum2(real(1), real(1)),
                    ),
                ),
                (
                    "z".to_string(),
                    SrcTerm::Inj(1, Box::new(var("z")), sum2(real(1), real(1))),
                ),
            ],
        );
        let def = SrcDef {
            name: "halve".to_string(),
            ctx: SrcContext(vec![("x".to_string(), real(1))]),
            ret: real(1),
            body: SrcTerm::Let(
                "y".to_string(),
                Box::new(var("x")),
                Box::new(SrcTerm::Iterate("y".to_string(), Box::new(body))),
            ),
        };
        let expected = "def halve (x: real 1) : real 1 =\n  \
             iterate y from x {\n    \
             case op decider[1] (y) of\n      \
             in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1\n    \
             | in2 z => in1 z : real 1 + real 1\n  \
             }\n";
        assert_eq!(pretty_def(&def), expected);
    }

    #[test]
    fn prj_folds_back() {
        let t = prj(2, 3, var("p"));
        assert_eq!(pretty_term(&t), "prj2 p");
    }
}
