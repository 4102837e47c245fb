//! Syntax-directed typing for the source language, plus the expansion of
//! iteration-with-context into plain iteration over a tuple state.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::prim;
use crate::syntax::{NameSupply, SrcContext, SrcTerm, SrcType};

#[derive(Clone, Debug, PartialEq)]
pub struct TypeError {
    /// Name of the failing rule or check.
    pub rule: &'static str,
    /// Path from the root to the offending subterm, e.g. `let.bound/op.arg1`.
    pub path: String,
    pub detail: String,
}

impl core::fmt::Display for TypeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "type error [{}] at {}: {}", self.rule, self.path, self.detail)
    }
}

fn err<T>(rule: &'static str, path: &str, detail: String) -> Result<T, TypeError> {
    Err(TypeError { rule, path: path.to_string(), detail })
}

/// Type of the unique derivation for `ctx |- term`, or the first failure.
pub fn typecheck_source(ctx: &SrcContext, term: &SrcTerm) -> Result<SrcType, TypeError> {
    if !ctx.is_well_formed() {
        return err("context", "", "ill-formed context (duplicate name or bad type)".into());
    }
    check(ctx, term, "")
}

fn check(ctx: &SrcContext, term: &SrcTerm, path: &str) -> Result<SrcType, TypeError> {
    match term {
        SrcTerm::Var(x) => ctx
            .lookup(x)
            .cloned()
            .ok_or_else(|| TypeError {
                rule: "var",
                path: path.to_string(),
                detail: format!("unbound variable `{x}`"),
            }),
        SrcTerm::Op(op, args) => {
            let mut dims = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                let sub = format!("{path}/op.arg{}", i + 1);
                match check(ctx, a, &sub)? {
                    SrcType::Real(n) => dims.push(n),
                    other => {
                        return err(
                            "op",
                            &sub,
                            format!(
                                "operation arguments must be real arrays, got {other:?}"
                            ),
                        )
                    }
                }
            }
            let desc = prim::resolve(op, &dims).map_err(|e| TypeError {
                rule: "op",
                path: path.to_string(),
                detail: format!("{e}"),
            })?;
            Ok(out_type(&desc.out_dims))
        }
        SrcTerm::Let(x, bound, body) => {
            let tb = check(ctx, bound, &format!("{path}/let.bound"))?;
            let mut ctx2 = ctx.clone();
            ctx2.0.push((x.clone(), tb));
            check(&ctx2, body, &format!("{path}/let.body"))
        }
        SrcTerm::Inj(i, payload, ann) => {
            let SrcType::Sum(summands) = ann else {
                return err("inj", path, format!("injection annotation must be a sum, got {ann:?}"));
            };
            if *i == 0 || *i > summands.len() {
                return err(
                    "inj",
                    path,
                    format!("injection index {i} out of range for a {}-ary sum", summands.len()),
                );
            }
            let tp = check(ctx, payload, &format!("{path}/inj.payload"))?;
            if tp != summands[*i - 1] {
                return err(
                    "inj",
                    path,
                    format!("payload has type {tp:?}, summand {i} wants {:?}", summands[*i - 1]),
                );
            }
            Ok(ann.clone())
        }
        SrcTerm::SumMatch(scrut, branches) => {
            let ts = check(ctx, scrut, &format!("{path}/case.scrutinee"))?;
            let SrcType::Sum(summands) = &ts else {
                return err("case", path, format!("scrutinee must have sum type, got {ts:?}"));
            };
            if summands.len() != branches.len() {
                return err(
                    "case",
                    path,
                    format!("{} branches for a {}-ary sum", branches.len(), summands.len()),
                );
            }
            let mut result: Option<SrcType> = None;
            for (i, ((x, body), summand)) in branches.iter().zip(summands).enumerate() {
                let mut ctx2 = ctx.clone();
                ctx2.0.push((x.clone(), summand.clone()));
                let tb = check(&ctx2, body, &format!("{path}/case.branch{}", i + 1))?;
                match &result {
                    None => result = Some(tb),
                    Some(t0) if *t0 == tb => {}
                    Some(t0) => {
                        return err(
                            "case",
                            path,
                            format!("branch {} has type {tb:?}, earlier branches {t0:?}", i + 1),
                        )
                    }
                }
            }
            result.ok_or_else(|| TypeError {
                rule: "case",
                path: path.to_string(),
                detail: "empty case has no type without an annotation".into(),
            })
        }
        SrcTerm::Tuple(ts) => {
            if ts.len() == 1 {
                return err("tuple", path, "tuples are nullary or >= 2-ary".into());
            }
            let mut tys = Vec::with_capacity(ts.len());
            for (i, t) in ts.iter().enumerate() {
                tys.push(check(ctx, t, &format!("{path}/tuple.{}", i + 1))?);
            }
            Ok(if tys.is_empty() { SrcType::Unit } else { SrcType::Prod(tys) })
        }
        SrcTerm::ProdMatch(scrut, names, body) => {
            let ts = check(ctx, scrut, &format!("{path}/match.scrutinee"))?;
            let components: Vec<SrcType> = match &ts {
                SrcType::Unit => vec![],
                SrcType::Prod(cs) => cs.clone(),
                other => {
                    return err("match", path, format!("scrutinee must have product type, got {other:?}"))
                }
            };
            if components.len() != names.len() {
                return err(
                    "match",
                    path,
                    format!("{} binders for a {}-ary product", names.len(), components.len()),
                );
            }
            let mut ctx2 = ctx.clone();
            for (n, t) in names.iter().zip(components) {
                ctx2.0.push((n.clone(), t));
            }
            check_shadowed(&mut ctx2);
            check(&ctx2, body, &format!("{path}/match.body"))
        }
        SrcTerm::Iterate(x, body) => {
            let Some(tx) = ctx.lookup(x).cloned() else {
                return err("iterate", path, format!("unbound loop variable `{x}`"));
            };
            let tb = check(ctx, body, &format!("{path}/iterate.body"))?;
            let SrcType::Sum(summands) = &tb else {
                return err("iterate", path, format!("loop body must have sum type, got {tb:?}"));
            };
            if summands.len() != 2 {
                return err(
                    "iterate",
                    path,
                    format!("loop body must have a binary sum type, got a {}-ary sum", summands.len()),
                );
            }
            if summands[1] != tx {
                return err(
                    "iterate",
                    path,
                    format!(
                        "loop body continues at {:?} but the loop variable has type {tx:?}",
                        summands[1]
                    ),
                );
            }
            Ok(summands[0].clone())
        }
    }
}

/// Contexts reached through binders may repeat names (shadowing); lookup
/// takes the latest, so nothing to repair. Kept as an explicit point for the
/// well-formedness story: only top-level contexts must have distinct names.
fn check_shadowed(_ctx: &mut SrcContext) {}

fn out_type(out_dims: &[usize]) -> SrcType {
    match out_dims.len() {
        0 => SrcType::Unit,
        1 => SrcType::Real(out_dims[0]),
        _ => SrcType::Sum(out_dims.iter().map(|m| SrcType::Real(*m)).collect()),
    }
}

/// Typecheck allowing shadowed contexts (used internally by the transform,
/// where `let` re-binding legitimately duplicates a name).
pub fn typecheck_source_shadowing(ctx: &SrcContext, term: &SrcTerm) -> Result<SrcType, TypeError> {
    check(ctx, term, "")
}

/// Expand `iterate^Gamma x. body` into a plain iteration over the product
/// state `(Gamma-tuple, x)`:
///
/// ```text
/// let w = (x1, ..., xn, x) in
/// iterate w. match w with (x1, ..., xn, x) =>
///   case body of in1 u => in1 u | in2 z => in2 (x1, ..., xn, z)
/// ```
///
/// `gamma` is the surrounding context, excluding the loop variable itself.
/// For empty `gamma` the expansion collapses to the plain `iterate`.
pub fn desugar_iterate_with_context(
    gamma: &SrcContext,
    loop_var: &str,
    loop_var_ty: &SrcType,
    body: &SrcTerm,
) -> Result<SrcTerm, TypeError> {
    // Precondition: gamma, x:tau |- body : sigma + tau.
    let mut full = gamma.clone();
    full.0.push((loop_var.to_string(), loop_var_ty.clone()));
    let tb = typecheck_source_shadowing(&full, body)?;
    let SrcType::Sum(summands) = &tb else {
        return err("iterate", "", format!("loop body must have sum type, got {tb:?}"));
    };
    if summands.len() != 2 || &summands[1] != loop_var_ty {
        return err("iterate", "", format!("loop body type {tb:?} does not match state {loop_var_ty:?}"));
    }
    let sigma = summands[0].clone();

    if gamma.0.is_empty() {
        return Ok(SrcTerm::Iterate(loop_var.to_string(), Box::new(body.clone())));
    }

    let mut supply = NameSupply::for_term(body, &full.names());
    let w = supply.fresh("_w");
    let u = supply.fresh("_u");
    let z = supply.fresh("_z");

    let mut state_tys: Vec<SrcType> = gamma.0.iter().map(|(_, t)| t.clone()).collect();
    state_tys.push(loop_var_ty.clone());
    let state_ty = SrcType::Prod(state_tys);
    let out_sum = SrcType::Sum(vec![sigma, state_ty]);

    let mut binders: Vec<String> = gamma.names();
    binders.push(loop_var.to_string());

    let mut continue_tuple: Vec<SrcTerm> =
        gamma.names().into_iter().map(SrcTerm::Var).collect();
    continue_tuple.push(SrcTerm::Var(z.clone()));

    let inner = SrcTerm::SumMatch(
        Box::new(body.clone()),
        vec![
            (u.clone(), SrcTerm::Inj(1, Box::new(SrcTerm::Var(u.clone())), out_sum.clone())),
            (z.clone(), SrcTerm::Inj(2, Box::new(SrcTerm::Tuple(continue_tuple)), out_sum)),
        ],
    );
    let loop_body = SrcTerm::ProdMatch(Box::new(SrcTerm::Var(w.clone())), binders.clone(), Box::new(inner));

    let mut init_tuple: Vec<SrcTerm> = gamma.names().into_iter().map(SrcTerm::Var).collect();
    init_tuple.push(SrcTerm::Var(loop_var.to_string()));

    Ok(SrcTerm::Let(
        w.clone(),
        Box::new(SrcTerm::Tuple(init_tuple)),
        Box::new(SrcTerm::Iterate(w, Box::new(loop_body))),
    ))
}
