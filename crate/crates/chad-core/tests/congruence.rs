//! Congruence of the transform with the source equational theory: for each
//! beta rule, transforming both sides of a generated instance yields target
//! programs with equal primal values and equal pulled-back cotangents.

use chad_core::check::basis_cot;
use chad_core::eval::eval;
use chad_core::gen::*;
use chad_core::rng::Rng;
use chad_core::syntax::{subst, SrcContext, SrcTerm, SrcType};
use chad_core::teval::{run_transformed, Outcome};
use chad_core::transform::chad_def;
use chad_core::typecheck::typecheck_source_shadowing;
use chad_core::value::{cot_approx_eq, value_approx_eq, Cot, Env, EvalOutcome};

fn euclidean_ctx() -> SrcContext {
    SrcContext(vec![
        ("a".to_string(), SrcType::Real(1)),
        ("b".to_string(), SrcType::Real(1)),
        ("u".to_string(), SrcType::Real(2)),
    ])
}

/// Transform both sides and compare primal and gradient semantics at a
/// sampled environment.
fn congruent(ctx: &SrcContext, env: &Env, lhs: &SrcTerm, rhs: &SrcTerm) -> Result<(), String> {
    let ty = typecheck_source_shadowing(ctx, lhs).map_err(|e| format!("{e}"))?;
    let dl = chad_def(ctx, &ty, lhs).map_err(|e| format!("lhs transform: {e}"))?;
    let dr = chad_def(ctx, &ty, rhs).map_err(|e| format!("rhs transform: {e}"))?;

    // The source value fixes the realized branch for cotangent shapes.
    let src = eval(env, lhs, 4000).map_err(|e| format!("{e}"))?;
    let EvalOutcome::Defined(out_val) = src else {
        // Both transforms must agree on the bottom variant.
        let (pl, _) = run_transformed(env, &dl.term, &Cot::Zero, 4000).map_err(|e| format!("{e}"))?;
        let (pr, _) = run_transformed(env, &dr.term, &Cot::Zero, 4000).map_err(|e| format!("{e}"))?;
        return if core::mem::discriminant(&pl) == core::mem::discriminant(&pr) {
            Ok(())
        } else {
            Err(format!("bottom disagreement: {pl:?} vs {pr:?}"))
        };
    };

    let (_, flat) = chad_core::fd::flatten_output(&out_val).map_err(|e| e.0)?;
    for i in 0..flat.len().max(1) {
        let c = if flat.is_empty() {
            Cot::Zero
        } else {
            basis_cot(&out_val, i).map_err(|e| format!("{e:?}"))?
        };
        let (pl, gl) = run_transformed(env, &dl.term, &c, 4000).map_err(|e| format!("{e}"))?;
        let (pr, gr) = run_transformed(env, &dr.term, &c, 4000).map_err(|e| format!("{e}"))?;
        match (&pl, &pr) {
            (EvalOutcome::Defined(a), EvalOutcome::Defined(b)) => {
                if !value_approx_eq(a, b, 1e-12) {
                    return Err(format!("primal {a:?} vs {b:?}"));
                }
            }
            _ => return Err(format!("primal variants: {pl:?} vs {pr:?}")),
        }
        match (gl, gr) {
            (Some(Outcome::Defined(x)), Some(Outcome::Defined(y))) => {
                if !cot_approx_eq(&x, &y, 1e-10) {
                    return Err(format!("gradient {x:?} vs {y:?}"));
                }
            }
            (x, y) => return Err(format!("gradient variants: {x:?} vs {y:?}")),
        }
    }
    Ok(())
}

#[test]
fn beta_let_congruence() {
    let mut rng = Rng::new(21);
    let ctx = euclidean_ctx();
    for _ in 0..60 {
        let env = gen_env(&mut rng, &ctx);
        let tyv = gen_type_over(&mut rng, &[1, 2], 1);
        let v = gen_complex_value(&mut rng, &ctx, &tyv, 2);
        let mut ctx2 = ctx.clone();
        ctx2.0.push(("w".to_string(), tyv));
        let tres = gen_type_over(&mut rng, &[1, 2], 1);
        let t = gen_term(&mut rng, &ctx2, &tres, 2);
        let lhs = SrcTerm::Let("w".to_string(), Box::new(v.clone()), Box::new(t.clone()));
        let rhs = subst(&t, "w", &v);
        congruent(&ctx, &env, &lhs, &rhs)
            .unwrap_or_else(|e| panic!("beta-let congruence: {e}\nlhs {lhs:?}"));
    }
}

#[test]
fn beta_sum_match_congruence() {
    let mut rng = Rng::new(22);
    let ctx = euclidean_ctx();
    for _ in 0..60 {
        let env = gen_env(&mut rng, &ctx);
        let s1 = gen_type_over(&mut rng, &[1, 2], 1);
        let s2 = gen_type_over(&mut rng, &[1, 2], 1);
        let sum = SrcType::Sum(vec![s1.clone(), s2.clone()]);
        let i = 1 + rng.below(2);
        let payload = gen_complex_value(&mut rng, &ctx, if i == 1 { &s1 } else { &s2 }, 2);
        let tres = gen_type_over(&mut rng, &[1, 2], 1);
        let mut branches = Vec::new();
        for (k, s) in [&s1, &s2].into_iter().enumerate() {
            let xb = format!("x{k}");
            let mut ctx2 = ctx.clone();
            ctx2.0.push((xb.clone(), s.clone()));
            branches.push((xb, gen_term(&mut rng, &ctx2, &tres, 2)));
        }
        let lhs = SrcTerm::SumMatch(
            Box::new(SrcTerm::Inj(i, Box::new(payload.clone()), sum)),
            branches.clone(),
        );
        let (xi, ti) = &branches[i - 1];
        let rhs = subst(ti, xi, &payload);
        congruent(&ctx, &env, &lhs, &rhs)
            .unwrap_or_else(|e| panic!("beta-sum congruence: {e}\nlhs {lhs:?}"));
    }
}

#[test]
fn beta_prod_match_congruence() {
    let mut rng = Rng::new(23);
    let ctx = euclidean_ctx();
    for _ in 0..60 {
        let env = gen_env(&mut rng, &ctx);
        let comps = vec![
            gen_type_over(&mut rng, &[1, 2], 1),
            gen_type_over(&mut rng, &[1, 2], 1),
        ];
        let values: Vec<SrcTerm> =
            comps.iter().map(|c| gen_complex_value(&mut rng, &ctx, c, 2)).collect();
        let names = vec!["p0".to_string(), "p1".to_string()];
        let mut ctx2 = ctx.clone();
        for (n, c) in names.iter().zip(&comps) {
            ctx2.0.push((n.clone(), c.clone()));
        }
        let tres = gen_type_over(&mut rng, &[1, 2], 1);
        let t = gen_term(&mut rng, &ctx2, &tres, 2);
        let lhs = SrcTerm::ProdMatch(
            Box::new(SrcTerm::Tuple(values.clone())),
            names.clone(),
            Box::new(t.clone()),
        );
        let mut rhs = t;
        for (n, v) in names.iter().zip(&values) {
            rhs = subst(&rhs, n, v);
        }
        congruent(&ctx, &env, &lhs, &rhs)
            .unwrap_or_else(|e| panic!("beta-prod congruence: {e}\nlhs {lhs:?}"));
    }
}

/// The expanded context loop evaluates like the direct loop, and the
/// expansion introduces no variable capture, over random contexts
/// including ones that collide with the loop variable.
#[test]
fn desugared_context_loop_agrees_with_direct_evaluation() {
    use chad_core::typecheck::desugar_iterate_with_context;
    let mut rng = Rng::new(24);
    for case in 0..100 {
        // random context of real-1 variables, sometimes shadowing `y`
        let n = 1 + rng.below(3);
        let mut ctx = SrcContext::default();
        for k in 0..n {
            let name = if k == 0 && rng.chance(0.3) { "y".to_string() } else { format!("g{k}") };
            if ctx.lookup(&name).is_none() {
                ctx.0.push((name, SrcType::Real(1)));
            }
        }
        let env = gen_env(&mut rng, &ctx);
        // shrink the state by a sigmoid of a context variable until small
        let (ctx_var, _) = ctx.0[rng.below(ctx.0.len())].clone();
        let sum = SrcType::Sum(vec![SrcType::Real(1), SrcType::Real(1)]);
        let body = SrcTerm::SumMatch(
            Box::new(SrcTerm::Op(
                chad_core::syntax::OpRef::with_params("decider", vec![0.01]),
                vec![SrcTerm::Op(
                    chad_core::syntax::OpRef::new("mul"),
                    vec![SrcTerm::Var("y".into()), SrcTerm::Var("y".into())],
                )],
            )),
            vec![
                (
                    "t".to_string(),
                    SrcTerm::Inj(
                        2,
                        Box::new(SrcTerm::Op(
                            chad_core::syntax::OpRef::new("mul"),
                            vec![
                                SrcTerm::Var("y".into()),
                                SrcTerm::Op(
                                    chad_core::syntax::OpRef::new("sigmoid"),
                                    vec![SrcTerm::Var(ctx_var.clone())],
                                ),
                            ],
                        )),
                        sum.clone(),
                    ),
                ),
                ("t".to_string(), SrcTerm::Inj(1, Box::new(SrcTerm::Var("y".into())), sum)),
            ],
        );
        let expanded = desugar_iterate_with_context(&ctx, "y", &SrcType::Real(1), &body)
            .unwrap_or_else(|e| panic!("case {case}: {e}"));
        // no capture: the expansion's free variables are within ctx + y
        for fv in expanded.free_vars() {
            assert!(
                ctx.lookup(&fv).is_some() || fv == "y",
                "case {case}: expansion has stray free variable {fv}"
            );
        }
        // typed at the exit type in the extended context
        let mut full = ctx.clone();
        full.0.push(("y".to_string(), SrcType::Real(1)));
        assert_eq!(
            typecheck_source_shadowing(&full, &expanded).unwrap(),
            SrcType::Real(1),
            "case {case}"
        );
        // semantics agree with the direct loop under the same fuel
        let start = rng.in_range(-3.0, 3.0);
        let env_full = env.with("y", chad_core::value::Value::Rv(vec![start]));
        let direct = eval(&env_full, &SrcTerm::Iterate("y".into(), Box::new(body)), 10_000).unwrap();
        let via_expansion = eval(&env_full, &expanded, 10_000).unwrap();
        match (&direct, &via_expansion) {
            (EvalOutcome::Defined(a), EvalOutcome::Defined(b)) => {
                assert!(value_approx_eq(a, b, 1e-12), "case {case}: {a:?} vs {b:?}")
            }
            (x, y) => assert_eq!(
                core::mem::discriminant(x),
                core::mem::discriminant(y),
                "case {case}: {x:?} vs {y:?}"
            ),
        }
    }
}
