//! The reverse-mode AD code transformation.
//!
//! Every source term in context is sent to a target term pairing the primal
//! computation with a linear map pulling output cotangents back to a
//! cotangent for the whole context:
//!
//! ```text
//! D[Gamma]_1 |- D[t] : Sigma p: D[tau]_1. (D[tau]_2 -o D[Gamma]_2)
//! ```
//!
//! Loops become an iteration on the primal side paired with a fold that
//! replays the loop's backward steps; loops whose body uses surrounding
//! variables are first expanded to a loop over a tuple state carrying those
//! variables, and the standard clauses then compose the derived rule.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::syntax::{NameSupply, SrcContext, SrcTerm, SrcType};
use crate::target::syntax::{prj as tprj, CartType, FoldData, LinType, TgtTerm};
use crate::target::typeck::CartCtx;
use crate::typecheck::{desugar_iterate_with_context, typecheck_source_shadowing, TypeError};

pub struct TransformEnv {
    supply: NameSupply,
}

impl TransformEnv {
    pub fn for_def(ctx: &SrcContext, body: &SrcTerm) -> Self {
        TransformEnv { supply: NameSupply::for_term(body, &ctx.names()) }
    }

    fn fresh(&mut self, hint: &str) -> String {
        self.supply.fresh(hint)
    }
}

/// Primal type translation: structural on the source fragment.
pub fn chad_type_primal(t: &SrcType) -> CartType {
    CartType::from(t)
}

/// Cotangent type translation `D[t]_2[p := subject]`.
pub fn chad_type_cotangent(t: &SrcType, subject: &TgtTerm) -> LinType {
    match t {
        SrcType::Real(n) => LinType::CReal(*n),
        SrcType::Unit => LinType::LUnit,
        SrcType::Void => LinType::TypeCase(Box::new(subject.clone()), vec![]),
        SrcType::Prod(ts) => LinType::Biprod(
            ts.iter()
                .enumerate()
                .map(|(i, ti)| chad_type_cotangent(ti, &tprj(i + 1, ts.len(), subject.clone())))
                .collect(),
        ),
        SrcType::Sum(ts) => LinType::TypeCase(
            Box::new(subject.clone()),
            ts.iter()
                .map(|ti| ("_q".to_string(), chad_type_cotangent(ti, &TgtTerm::Var("_q".into()))))
                .collect(),
        ),
    }
}

fn collapse_biprod(parts: Vec<LinType>) -> LinType {
    match parts.len() {
        0 => LinType::LUnit,
        1 => parts.into_iter().next().unwrap(),
        _ => LinType::Biprod(parts),
    }
}

/// Context translation: the primal typing context and the biproduct of the
/// per-variable cotangent types (unary biproducts collapse to the
/// component; the empty context gives the zero type).
pub fn chad_context(ctx: &SrcContext) -> (CartCtx, LinType) {
    let cart: CartCtx =
        ctx.0.iter().map(|(n, t)| (n.clone(), chad_type_primal(t))).collect();
    let cot = collapse_biprod(
        ctx.0
            .iter()
            .map(|(n, t)| chad_type_cotangent(t, &TgtTerm::Var(n.clone())))
            .collect(),
    );
    (cart, cot)
}

fn retuple(parts: Vec<TgtTerm>) -> TgtTerm {
    match parts.len() {
        0 => TgtTerm::Zero,
        1 => parts.into_iter().next().unwrap(),
        _ => TgtTerm::LinTuple(parts),
    }
}

/// Zero-padded coprojection of `t` into an `m`-ary context cotangent,
/// position `idx` (1-based). Unary contexts collapse to the identity.
fn coproj(idx: usize, m: usize, t: TgtTerm) -> TgtTerm {
    if m == 1 {
        t
    } else {
        TgtTerm::LinTuple(
            (1..=m).map(|i| if i == idx { t.clone() } else { TgtTerm::Zero }).collect(),
        )
    }
}

/// Split a cotangent at the (m+k)-ary extended-context biproduct into the
/// first-m part and the last-k part, respecting the collapse conventions.
fn split_ctx_cot(m: usize, k: usize, v: TgtTerm) -> (TgtTerm, TgtTerm) {
    let total = m + k;
    if total == 0 {
        return (TgtTerm::Zero, TgtTerm::Zero);
    }
    if total == 1 {
        return if m == 1 { (v, TgtTerm::Zero) } else { (TgtTerm::Zero, v) };
    }
    let fst = retuple((1..=m).map(|i| TgtTerm::LinProj(i, Box::new(v.clone()))).collect());
    let snd =
        retuple((m + 1..=total).map(|i| TgtTerm::LinProj(i, Box::new(v.clone()))).collect());
    (fst, snd)
}

fn sum_terms(parts: Vec<TgtTerm>) -> TgtTerm {
    let mut it = parts.into_iter();
    match it.next() {
        None => TgtTerm::Zero,
        Some(first) => it.fold(first, |acc, t| TgtTerm::Plus(Box::new(acc), Box::new(t))),
    }
}

/// The index of an identifier in the context's identifier list; shadowed
/// names resolve to their latest binding.
fn idx_of(vgamma: &[String], name: &str) -> usize {
    vgamma.iter().rposition(|n| n == name).map(|i| i + 1).unwrap_or(0)
}

/// The dependent-pair type of a transformed term of source type `ty` in
/// context `ctx`.
fn sigma_ty(env: &mut TransformEnv, ctx: &SrcContext, ty: &SrcType) -> CartType {
    let p = env.fresh("_p");
    let (_, ctx_cot) = chad_context(ctx);
    CartType::Sigma(
        p.clone(),
        Box::new(chad_type_primal(ty)),
        Box::new(CartType::LinFun(
            Box::new(chad_type_cotangent(ty, &TgtTerm::Var(p))),
            Box::new(ctx_cot),
        )),
    )
}

/// An ascribed primal/cotangent pair: the ascription lets the dependent
/// pair synthesize its type when it is later matched on.
fn pair_at(env: &mut TransformEnv, ctx: &SrcContext, ty: &SrcType, primal: TgtTerm, cot: TgtTerm) -> TgtTerm {
    TgtTerm::Ascribe(
        Box::new(TgtTerm::Pair(Box::new(primal), Box::new(cot))),
        sigma_ty(env, ctx, ty),
    )
}

/// Recover the primal and cotangent components of a transformed term.
fn split_pair(t: &TgtTerm) -> (TgtTerm, TgtTerm) {
    crate::target::syntax::split_pair_opt(t)
        .expect("transform output always ends in a pair")
}

/// Transform a well-typed source term. `ctx` is the full typing context;
/// its identifier list is the context the cotangent map targets.
pub fn chad_term(
    env: &mut TransformEnv,
    ctx: &SrcContext,
    term: &SrcTerm,
) -> Result<TgtTerm, TypeError> {
    let vgamma = ctx.names();
    let m = vgamma.len();
    let term_ty = typecheck_source_shadowing(ctx, term)?;
    match term {
        SrcTerm::Var(x) => {
            let i = idx_of(&vgamma, x);
            if i == 0 {
                return Err(TypeError {
                    rule: "var",
                    path: String::new(),
                    detail: format!("unbound variable `{x}` in transform"),
                });
            }
            Ok(pair_at(
                env,
                ctx,
                &term_ty,
                TgtTerm::Var(x.clone()),
                TgtTerm::LinAbs(Box::new(coproj(i, m, TgtTerm::LinVar))),
            ))
        }
        SrcTerm::Op(op, args) => {
            let k = args.len();
            let mut binders = Vec::new();
            let mut transformed = Vec::new();
            for a in args {
                let x = env.fresh("_x");
                let xp = env.fresh(&format!("{x}'"));
                transformed.push(chad_term(env, ctx, a)?);
                binders.push((x, xp));
            }
            let arg_vars: Vec<TgtTerm> =
                binders.iter().map(|(x, _)| TgtTerm::Var(x.clone())).collect();
            let contributions = sum_terms(
                binders
                    .iter()
                    .enumerate()
                    .map(|(i, (_, xp))| {
                        let proj = if k == 1 {
                            TgtTerm::LinVar
                        } else {
                            TgtTerm::LinProj(i + 1, Box::new(TgtTerm::LinVar))
                        };
                        TgtTerm::LinApp(Box::new(TgtTerm::Var(xp.clone())), Box::new(proj))
                    })
                    .collect(),
            );
            let cot = TgtTerm::LinAbs(Box::new(TgtTerm::LinLet(
                Box::new(TgtTerm::LOp(op.clone(), arg_vars.clone(), Box::new(TgtTerm::LinVar))),
                Box::new(contributions),
            )));
            let mut out = pair_at(env, ctx, &term_ty, TgtTerm::Op(op.clone(), arg_vars), cot);
            for ((x, xp), d) in binders.into_iter().zip(transformed).rev() {
                out = TgtTerm::PairMatch(Box::new(d), x, xp, Box::new(out));
            }
            Ok(out)
        }
        SrcTerm::Let(x, bound, body) => {
            let tb = typecheck_source_shadowing(ctx, bound)?;
            let d1 = chad_term(env, ctx, bound)?;
            let mut ctx2 = ctx.clone();
            ctx2.0.push((x.clone(), tb));
            let d2 = chad_term(env, &ctx2, body)?;
            let xp = env.fresh(&format!("{x}'"));
            let y = env.fresh("_y");
            let yp = env.fresh("_y'");
            let (fst, snd) = split_ctx_cot(m, 1, TgtTerm::LinVar);
            let inner = pair_at(
                env,
                ctx,
                &term_ty,
                TgtTerm::Var(y.clone()),
                TgtTerm::LinAbs(Box::new(TgtTerm::LinLet(
                    Box::new(TgtTerm::LinApp(
                        Box::new(TgtTerm::Var(yp.clone())),
                        Box::new(TgtTerm::LinVar),
                    )),
                    Box::new(TgtTerm::Plus(
                        Box::new(fst),
                        Box::new(TgtTerm::LinApp(
                            Box::new(TgtTerm::Var(xp.clone())),
                            Box::new(snd),
                        )),
                    )),
                ))),
            );
            Ok(TgtTerm::PairMatch(
                Box::new(d1),
                x.clone(),
                xp,
                Box::new(TgtTerm::PairMatch(Box::new(d2), y, yp, Box::new(inner))),
            ))
        }
        SrcTerm::Inj(i, payload, ann) => {
            let d = chad_term(env, ctx, payload)?;
            let x = env.fresh("_x");
            let xp = env.fresh("_x'");
            let inner = pair_at(
                env,
                ctx,
                &term_ty,
                TgtTerm::Inj(*i, Box::new(TgtTerm::Var(x.clone())), chad_type_primal(ann)),
                TgtTerm::Var(xp.clone()),
            );
            Ok(TgtTerm::PairMatch(Box::new(d), x, xp, Box::new(inner)))
        }
        SrcTerm::SumMatch(scrut, branches) => {
            let ts = typecheck_source_shadowing(ctx, scrut)?;
            let SrcType::Sum(summands) = &ts else {
                return Err(TypeError {
                    rule: "case",
                    path: String::new(),
                    detail: "scrutinee of case is not a sum".into(),
                });
            };
            let sum_ann = chad_type_primal(&ts);
            let d_s = chad_term(env, ctx, scrut)?;
            let y = env.fresh("_y");
            let yp = env.fresh("_y'");
            let mut out_branches = Vec::new();
            for (i, ((xi, ti), summand)) in branches.iter().zip(summands).enumerate() {
                let mut ctx2 = ctx.clone();
                ctx2.0.push((xi.clone(), summand.clone()));
                let d_i = chad_term(env, &ctx2, ti)?;
                let z = env.fresh("_z");
                let zp = env.fresh("_z'");
                let (fst, snd) = split_ctx_cot(m, 1, TgtTerm::LinVar);
                // Rebinding the scrutinee variable to the branch injection
                // resolves the case type of the scrutinee's cotangent map.
                let rebind = TgtTerm::Let(
                    y.clone(),
                    Box::new(TgtTerm::Inj(
                        i + 1,
                        Box::new(TgtTerm::Var(xi.clone())),
                        sum_ann.clone(),
                    )),
                    Box::new(TgtTerm::Var(yp.clone())),
                );
                let inner = pair_at(
                    env,
                    ctx,
                    &term_ty,
                    TgtTerm::Var(z.clone()),
                    TgtTerm::LinAbs(Box::new(TgtTerm::LinLet(
                        Box::new(TgtTerm::LinApp(
                            Box::new(TgtTerm::Var(zp.clone())),
                            Box::new(TgtTerm::LinVar),
                        )),
                        Box::new(TgtTerm::Plus(
                            Box::new(fst),
                            Box::new(TgtTerm::LinApp(Box::new(rebind), Box::new(snd))),
                        )),
                    ))),
                );
                let body = TgtTerm::PairMatch(Box::new(d_i), z, zp, Box::new(inner));
                out_branches.push((xi.clone(), body));
            }
            Ok(TgtTerm::PairMatch(
                Box::new(d_s),
                y.clone(),
                yp,
                Box::new(TgtTerm::SumMatch(Box::new(TgtTerm::Var(y)), out_branches)),
            ))
        }
        SrcTerm::Tuple(ts) => {
            let mut binders = Vec::new();
            let mut transformed = Vec::new();
            for t in ts {
                let x = env.fresh("_x");
                let xp = env.fresh(&format!("{x}'"));
                transformed.push(chad_term(env, ctx, t)?);
                binders.push((x, xp));
            }
            let contributions = sum_terms(
                binders
                    .iter()
                    .enumerate()
                    .map(|(i, (_, xp))| {
                        TgtTerm::LinApp(
                            Box::new(TgtTerm::Var(xp.clone())),
                            Box::new(TgtTerm::LinProj(i + 1, Box::new(TgtTerm::LinVar))),
                        )
                    })
                    .collect(),
            );
            let mut out = pair_at(
                env,
                ctx,
                &term_ty,
                TgtTerm::Tuple(binders.iter().map(|(x, _)| TgtTerm::Var(x.clone())).collect()),
                TgtTerm::LinAbs(Box::new(contributions)),
            );
            for ((x, xp), d) in binders.into_iter().zip(transformed).rev() {
                out = TgtTerm::PairMatch(Box::new(d), x, xp, Box::new(out));
            }
            Ok(out)
        }
        SrcTerm::ProdMatch(scrut, names, body) => {
            let ts = typecheck_source_shadowing(ctx, scrut)?;
            let comps: Vec<SrcType> = match &ts {
                SrcType::Unit => vec![],
                SrcType::Prod(cs) => cs.clone(),
                other => {
                    return Err(TypeError {
                        rule: "match",
                        path: String::new(),
                        detail: format!("scrutinee of match is not a product: {other:?}"),
                    })
                }
            };
            let d_s = chad_term(env, ctx, scrut)?;
            let x = env.fresh("_x");
            let xp = env.fresh("_x'");
            let mut ctx2 = ctx.clone();
            for (n, c) in names.iter().zip(&comps) {
                ctx2.0.push((n.clone(), c.clone()));
            }
            let d_b = chad_term(env, &ctx2, body)?;
            let y = env.fresh("_y");
            let yp = env.fresh("_y'");
            let k = names.len();
            let (fst, snd) = split_ctx_cot(m, k, TgtTerm::LinVar);
            let inner = pair_at(
                env,
                ctx,
                &term_ty,
                TgtTerm::Var(y.clone()),
                TgtTerm::LinAbs(Box::new(TgtTerm::LinLet(
                    Box::new(TgtTerm::LinApp(
                        Box::new(TgtTerm::Var(yp.clone())),
                        Box::new(TgtTerm::LinVar),
                    )),
                    Box::new(TgtTerm::Plus(
                        Box::new(fst),
                        Box::new(TgtTerm::LinApp(
                            Box::new(TgtTerm::Var(xp.clone())),
                            Box::new(snd),
                        )),
                    )),
                ))),
            );
            Ok(TgtTerm::PairMatch(
                Box::new(d_s),
                x.clone(),
                xp,
                Box::new(TgtTerm::ProdMatch(
                    Box::new(TgtTerm::Var(x)),
                    names.clone(),
                    Box::new(TgtTerm::PairMatch(Box::new(d_b), y, yp, Box::new(inner))),
                )),
            ))
        }
        SrcTerm::Iterate(x, body) => {
            let Some(tx) = ctx.lookup(x).cloned() else {
                return Err(TypeError {
                    rule: "iterate",
                    path: String::new(),
                    detail: format!("unbound loop variable `{x}`"),
                });
            };
            let uses_context =
                body.free_vars().iter().any(|f| f != x);
            if uses_context {
                // Derived rule: expand to a loop over the tuple state and let
                // the standard clauses compose the derivative.
                let mut gamma = ctx.clone();
                if let Some(pos) = gamma.0.iter().rposition(|(n, _)| n == x) {
                    gamma.0.remove(pos);
                }
                let expanded = desugar_iterate_with_context(&gamma, x, &tx, body)?;
                return chad_term(env, ctx, &expanded);
            }
            let (_, fold) = loop_parts(env, x, &tx, body)?;
            let primal_body = fold.loop_body.clone();
            let fold = TgtTerm::Fold(Box::new(fold));
            let i = idx_of(&vgamma, x);
            Ok(pair_at(
                env,
                ctx,
                &term_ty,
                TgtTerm::Iterate(x.clone(), Box::new(primal_body)),
                TgtTerm::LinAbs(Box::new(coproj(i, m, fold))),
            ))
        }
    }
}

/// The transformed body and fold of a loop whose body uses only the loop
/// variable: the primal body is the first projection of the transformed
/// body, and the backward step matches the transformed body at the current
/// state and applies its cotangent map to the incoming slot.
fn loop_parts(
    env: &mut TransformEnv,
    x: &str,
    tx: &SrcType,
    body: &SrcTerm,
) -> Result<(TgtTerm, FoldData), TypeError> {
    let single = SrcContext(vec![(x.to_string(), tx.clone())]);
    let sigma = match typecheck_source_shadowing(&single, body)? {
        SrcType::Sum(summands) => summands[0].clone(),
        other => {
            return Err(TypeError {
                rule: "iterate",
                path: String::new(),
                detail: format!("loop body has non-sum type {other:?}"),
            })
        }
    };
    let ft = chad_term(env, &single, body)?;
    let (primal_body, _) = split_pair(&ft);
    let exit_name = env.fresh("_y");
    let g = env.fresh("_f");
    let gp = env.fresh("_f'");
    let algebra = TgtTerm::PairMatch(
        Box::new(ft.clone()),
        g,
        gp.clone(),
        Box::new(TgtTerm::LinApp(
            Box::new(TgtTerm::Var(gp)),
            Box::new(TgtTerm::LinVar),
        )),
    );
    Ok((
        ft,
        FoldData {
            loop_var: x.to_string(),
            loop_body: primal_body,
            exit_name: exit_name.clone(),
            exit_ty: chad_type_cotangent(&sigma, &TgtTerm::Var(exit_name)),
            state_ty: chad_type_cotangent(tx, &TgtTerm::Var(x.to_string())),
            seed: TgtTerm::LinVar,
            algebra,
        },
    ))
}

/// Transform a loop body into its paired form and fold data; the oracle
/// harness replays these independently of the full program transform.
pub fn transform_loop_parts(
    x: &str,
    tx: &SrcType,
    body: &SrcTerm,
) -> Result<(TgtTerm, FoldData), TypeError> {
    let mut env = TransformEnv {
        supply: {
            let mut s = NameSupply::for_term(body, &[x.to_string()]);
            s.reserve(x);
            s
        },
    };
    loop_parts(&mut env, x, tx, body)
}

/// A transformed top-level program: the primal typing context, the paired
/// term, and its declared dependent-pair type.
#[derive(Clone, Debug, PartialEq)]
pub struct ChadOutput {
    pub primal_ctx: CartCtx,
    pub term: TgtTerm,
    pub result_ty: CartType,
}

/// Transform a whole declaration.
pub fn chad_def(ctx: &SrcContext, ret: &SrcType, body: &SrcTerm) -> Result<ChadOutput, TypeError> {
    // The declared return type is checked against the body's type.
    let actual = crate::typecheck::typecheck_source(ctx, body)?;
    if &actual != ret {
        return Err(TypeError {
            rule: "def",
            path: String::new(),
            detail: format!("declared return type {ret:?} but the body has type {actual:?}"),
        });
    }
    let mut env = TransformEnv::for_def(ctx, body);
    let p = env.fresh("_p");
    let term = chad_term(&mut env, ctx, body)?;
    let (primal_ctx, ctx_cot) = chad_context(ctx);
    let result_ty = CartType::Sigma(
        p.clone(),
        Box::new(chad_type_primal(ret)),
        Box::new(CartType::LinFun(
            Box::new(chad_type_cotangent(ret, &TgtTerm::Var(p))),
            Box::new(ctx_cot),
        )),
    );
    Ok(ChadOutput { primal_ctx, term, result_ty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;
    use crate::syntax::{real, sum2, var, OpRef};
    use crate::target::typeck::{check_target, TgtType};

    fn check_transform(src: &str) {
        let d = parse_source(src).unwrap();
        let out = chad_def(&d.ctx, &d.ret, &d.body).unwrap();
        let r = check_target(&out.primal_ctx, None, &out.term, &TgtType::Cart(out.result_ty));
        assert!(r.is_ok(), "transform of {} does not typecheck: {:?}", d.name, r.err());
    }

    #[test]
    fn variable_clause_collapses_unary_context() {
        // D[x] in [x] is <x, \v. v>.
        let ctx = SrcContext(vec![("x".into(), real(1))]);
        let mut env = TransformEnv::for_def(&ctx, &var("x"));
        let t = chad_term(&mut env, &ctx, &var("x")).unwrap();
        let TgtTerm::Ascribe(inner, _) = t else { panic!("expected ascription") };
        assert_eq!(
            *inner,
            TgtTerm::Pair(
                Box::new(TgtTerm::Var("x".into())),
                Box::new(TgtTerm::LinAbs(Box::new(TgtTerm::LinVar)))
            )
        );
    }

    #[test]
    fn variable_clause_coprojects_in_wider_context() {
        let ctx = SrcContext(vec![("x".into(), real(1)), ("y".into(), real(2))]);
        let mut env = TransformEnv::for_def(&ctx, &var("y"));
        let t = chad_term(&mut env, &ctx, &var("y")).unwrap();
        let TgtTerm::Ascribe(inner, _) = t else { panic!("expected ascription") };
        assert_eq!(
            *inner,
            TgtTerm::Pair(
                Box::new(TgtTerm::Var("y".into())),
                Box::new(TgtTerm::LinAbs(Box::new(TgtTerm::LinTuple(vec![
                    TgtTerm::Zero,
                    TgtTerm::LinVar
                ]))))
            )
        );
    }

    #[test]
    fn op_clause_typechecks() {
        check_transform("def f (x: real 1, y: real 1) : real 1 = op add (x, y)");
        check_transform("def g (x: real 1) : real 1 = op mul (x, x)");
        check_transform("def h (x: real 2) : real 1 = op norm (x)");
    }

    #[test]
    fn constructs_typecheck() {
        check_transform("def f (x: real 1) : real 1 = let y = op mul (x, x) in op add (y, x)");
        check_transform("def f (x: real 1, y: real 2) : real 1 * real 2 = (x, y)");
        check_transform("def f (p: real 1 * real 2) : real 2 = prj2 p");
        check_transform(
            "def f (x: real 1) : real 1 + real 1 = inl (op mul (x, x)) : real 1 + real 1",
        );
        check_transform(
            "def f (x: real 1) : real 1 = case op sign (x) of in1 a => a | in2 b => op mul (b, b)",
        );
    }

    #[test]
    fn sign_types_and_transforms() {
        let ctx = SrcContext(vec![("x".into(), real(1))]);
        let t = SrcTerm::Op(OpRef::new("sign"), vec![var("x")]);
        assert_eq!(
            crate::typecheck::typecheck_source(&ctx, &t).unwrap(),
            sum2(real(1), real(1))
        );
        check_transform("def s (x: real 1) : real 1 + real 1 = op sign (x)");
    }

    #[test]
    fn halving_loop_transform_typechecks() {
        check_transform(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        );
    }

    #[test]
    fn context_loop_transform_typechecks() {
        check_transform(
            "def scaled (a: real 1, x: real 1) : real 1 = iterate y from x { \
               case op decider[0.01] (op mul (y, y)) of \
                 in1 t => in2 (op mul (y, op sigmoid (a))) : real 1 + real 1 \
               | in2 t => in1 y : real 1 + real 1 }",
        );
    }

    #[test]
    fn transform_is_deterministic() {
        let d = parse_source(
            "def scaled (a: real 1, x: real 1) : real 1 = iterate y from x { \
               case op decider[0.01] (op mul (y, y)) of \
                 in1 t => in2 (op mul (y, op sigmoid (a))) : real 1 + real 1 \
               | in2 t => in1 y : real 1 + real 1 }",
        )
        .unwrap();
        let a = chad_def(&d.ctx, &d.ret, &d.body).unwrap();
        let b = chad_def(&d.ctx, &d.ret, &d.body).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn primal_types_are_structural() {
        assert_eq!(chad_type_primal(&real(3)), CartType::Real(3));
        assert_eq!(
            chad_type_primal(&SrcType::Prod(vec![real(1), real(2)])),
            CartType::Prod(vec![CartType::Real(1), CartType::Real(2)])
        );
        assert_eq!(
            chad_type_primal(&sum2(real(1), real(1))),
            CartType::Sum(vec![CartType::Real(1), CartType::Real(1)])
        );
    }

    #[test]
    fn cotangent_type_of_product_projects() {
        let ty = SrcType::Prod(vec![real(1), real(1)]);
        let lt = chad_type_cotangent(&ty, &TgtTerm::Var("p".into()));
        match lt {
            LinType::Biprod(parts) => {
                assert_eq!(parts, vec![LinType::CReal(1), LinType::CReal(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cotangent_type_of_sum_cases() {
        let ty = sum2(real(1), real(2));
        let lt = chad_type_cotangent(&ty, &TgtTerm::Var("p".into()));
        match lt {
            LinType::TypeCase(s, bs) => {
                assert_eq!(*s, TgtTerm::Var("p".into()));
                assert_eq!(bs[0].1, LinType::CReal(1));
                assert_eq!(bs[1].1, LinType::CReal(2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn context_translation_examples() {
        let (cart, cot) = chad_context(&SrcContext::new());
        assert!(cart.is_empty());
        assert_eq!(cot, LinType::LUnit);

        let (_, cot) = chad_context(&SrcContext(vec![("x".into(), real(1))]));
        assert_eq!(cot, LinType::CReal(1));

        let (_, cot) =
            chad_context(&SrcContext(vec![("x".into(), real(1)), ("y".into(), real(2))]));
        assert_eq!(cot, LinType::Biprod(vec![LinType::CReal(1), LinType::CReal(2)]));
    }
}
