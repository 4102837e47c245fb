//! Executable equational theory: every beta/eta rule of the source
//! language, the linear-language equations (monoid structure, linearity,
//! biproducts, beta/eta for let and application), each run over freshly
//! generated well-typed instances. Both sides of a rule must evaluate to
//! the same outcome; for the source language values agree to 1e-12
//! relative, for linear laws to 1e-10.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::eval::eval;
use crate::gen::*;
use crate::rng::Rng;
use crate::syntax::{subst, OpRef, SrcContext, SrcTerm, SrcType};
use crate::target::syntax::{subst_lin_var, LinType, TgtTerm};
use crate::teval::{teval_lin, Outcome};
use crate::typecheck::typecheck_source_shadowing;
use crate::value::{cot_approx_eq, value_approx_eq, Cot, Env, EvalOutcome};

const FUEL: u64 = 4000;
const SRC_TOL: f64 = 1e-12;
const LIN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LawReport {
    pub name: &'static str,
    pub cases: u32,
    pub failures: u32,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub seed: u64,
    pub iterations: u32,
    pub laws: Vec<LawReport>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.laws.iter().all(|l| l.failures == 0)
    }
}

fn outcome_eq(a: &EvalOutcome, b: &EvalOutcome, tol: f64) -> bool {
    match (a, b) {
        (EvalOutcome::Defined(x), EvalOutcome::Defined(y)) => value_approx_eq(x, y, tol),
        (EvalOutcome::Undefined, EvalOutcome::Undefined) => true,
        (EvalOutcome::FuelExhausted(_), EvalOutcome::FuelExhausted(_)) => true,
        _ => false,
    }
}

fn lin_outcome_eq(a: &Outcome<Cot>, b: &Outcome<Cot>, tol: f64) -> bool {
    match (a, b) {
        (Outcome::Defined(x), Outcome::Defined(y)) => cot_approx_eq(x, y, tol),
        (Outcome::Undefined, Outcome::Undefined) => true,
        (Outcome::FuelExhausted(_), Outcome::FuelExhausted(_)) => true,
        _ => false,
    }
}

/// Check one source-law instance: subject reduction (both sides typecheck
/// at the same type), then evaluation agreement.
fn src_instance(
    ctx: &SrcContext,
    env: &Env,
    lhs: &SrcTerm,
    rhs: &SrcTerm,
) -> Result<(), String> {
    let tl = typecheck_source_shadowing(ctx, lhs).map_err(|e| format!("lhs ill-typed: {e}"))?;
    let tr = typecheck_source_shadowing(ctx, rhs).map_err(|e| format!("rhs ill-typed: {e}"))?;
    if tl != tr {
        return Err(format!("subject reduction violated: {tl:?} vs {tr:?}"));
    }
    let vl = eval(env, lhs, FUEL).map_err(|e| format!("lhs: {e}"))?;
    let vr = eval(env, rhs, FUEL).map_err(|e| format!("rhs: {e}"))?;
    if outcome_eq(&vl, &vr, SRC_TOL) {
        Ok(())
    } else {
        Err(format!("{vl:?} vs {vr:?}"))
    }
}

mod src_laws {
    use super::*;

    fn fresh(rng: &mut Rng, ctx: &SrcContext) -> String {
        loop {
            let n = format!("w{}", rng.below(10_000));
            if ctx.lookup(&n).is_none() {
                return n;
            }
        }
    }

    pub fn beta_let(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let tyv = gen_type_over(rng, &[1, 2], 1);
        let v = gen_complex_value(rng, &ctx, &tyv, 2);
        let x = fresh(rng, &ctx);
        let mut ctx2 = ctx.clone();
        ctx2.0.push((x.clone(), tyv));
        let tres = gen_type(rng, 1);
        let t = gen_term(rng, &ctx2, &tres, 2);
        let lhs = SrcTerm::Let(x.clone(), Box::new(v.clone()), Box::new(t.clone()));
        let rhs = subst(&t, &x, &v);
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn let_assoc(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let ta = gen_type(rng, 1);
        let t1 = gen_term(rng, &ctx, &ta, 2);
        let x = fresh(rng, &ctx);
        let mut ctx_x = ctx.clone();
        ctx_x.0.push((x.clone(), ta));
        let tb = gen_type(rng, 1);
        let t2 = gen_term(rng, &ctx_x, &tb, 2);
        let y = loop {
            let y = fresh(rng, &ctx);
            if y != x {
                break y;
            }
        };
        let mut ctx_y = ctx.clone();
        ctx_y.0.push((y.clone(), tb));
        let tc = gen_type(rng, 1);
        let t3 = gen_term(rng, &ctx_y, &tc, 2);
        let lhs = SrcTerm::Let(
            y.clone(),
            Box::new(SrcTerm::Let(x.clone(), Box::new(t1.clone()), Box::new(t2.clone()))),
            Box::new(t3.clone()),
        );
        let rhs = SrcTerm::Let(
            x,
            Box::new(t1),
            Box::new(SrcTerm::Let(y, Box::new(t2), Box::new(t3))),
        );
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn beta_sum_match(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let s1 = gen_type_over(rng, &[1, 2], 1);
        let s2 = gen_type_over(rng, &[1, 2], 1);
        let sum = SrcType::Sum(vec![s1.clone(), s2.clone()]);
        let i = 1 + rng.below(2);
        let payload =
            gen_complex_value(rng, &ctx, if i == 1 { &s1 } else { &s2 }, 2);
        let tres = gen_type(rng, 1);
        let mut branches = Vec::new();
        for s in [&s1, &s2] {
            let xb = fresh(rng, &ctx);
            let mut ctx2 = ctx.clone();
            ctx2.0.push((xb.clone(), s.clone()));
            branches.push((xb, gen_term(rng, &ctx2, &tres, 2)));
        }
        let lhs = SrcTerm::SumMatch(
            Box::new(SrcTerm::Inj(i, Box::new(payload.clone()), sum)),
            branches.clone(),
        );
        let (xi, ti) = &branches[i - 1];
        let rhs = subst(ti, xi, &payload);
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn eta_sum_comm(rng: &mut Rng) -> Result<(), String> {
        let mut ctx = gen_ctx(rng);
        let sum = SrcType::Sum(vec![
            gen_type_over(rng, &[1, 2], 0),
            gen_type_over(rng, &[1, 2], 0),
        ]);
        let s = fresh(rng, &ctx);
        ctx.0.push((s.clone(), sum.clone()));
        let env = gen_env(rng, &ctx);
        let z = fresh(rng, &ctx);
        let mut ctx_z = ctx.clone();
        ctx_z.0.push((z.clone(), sum.clone()));
        let tres = gen_type(rng, 1);
        let t = gen_term(rng, &ctx_z, &tres, 2);
        let lhs = subst(&t, &z, &SrcTerm::Var(s.clone()));
        let SrcType::Sum(summands) = &sum else { unreachable!() };
        let branches = summands
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let xk = format!("{z}_br{k}");
                let inj = SrcTerm::Inj(k + 1, Box::new(SrcTerm::Var(xk.clone())), sum.clone());
                (xk, subst(&t, &z, &inj))
            })
            .collect();
        let rhs = SrcTerm::SumMatch(Box::new(SrcTerm::Var(s)), branches);
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn beta_prod_match(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let comps = vec![gen_type_over(rng, &[1, 2], 1), gen_type_over(rng, &[1, 2], 1)];
        let values: Vec<SrcTerm> =
            comps.iter().map(|c| gen_complex_value(rng, &ctx, c, 2)).collect();
        let names: Vec<String> = (0..comps.len()).map(|k| format!("pm{k}")).collect();
        let mut ctx2 = ctx.clone();
        for (n, c) in names.iter().zip(&comps) {
            ctx2.0.push((n.clone(), c.clone()));
        }
        let tres = gen_type(rng, 1);
        let t = gen_term(rng, &ctx2, &tres, 2);
        let lhs = SrcTerm::ProdMatch(
            Box::new(SrcTerm::Tuple(values.clone())),
            names.clone(),
            Box::new(t.clone()),
        );
        let mut rhs = t;
        for (n, v) in names.iter().zip(&values) {
            rhs = subst(&rhs, n, v);
        }
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn eta_prod_comm(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let comps = vec![gen_type_over(rng, &[1, 2], 0), gen_type_over(rng, &[1, 2], 0)];
        let prod = SrcType::Prod(comps.clone());
        let v = gen_complex_value(rng, &ctx, &prod, 2);
        let z = fresh(rng, &ctx);
        let mut ctx_z = ctx.clone();
        ctx_z.0.push((z.clone(), prod));
        let tres = gen_type(rng, 1);
        let t = gen_term(rng, &ctx_z, &tres, 2);
        let names: Vec<String> = (0..comps.len()).map(|k| format!("{z}_c{k}")).collect();
        let lhs = subst(&t, &z, &v);
        let tuple = SrcTerm::Tuple(names.iter().map(|n| SrcTerm::Var(n.clone())).collect());
        let rhs = SrcTerm::ProdMatch(
            Box::new(v),
            names,
            Box::new(subst(&t, &z, &tuple)),
        );
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn eta_tuple_let(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let n = 2 + rng.below(2);
        let parts: Vec<(String, SrcType, SrcTerm)> = (0..n)
            .map(|k| {
                let ty = gen_type(rng, 1);
                let t = gen_term(rng, &ctx, &ty, 2);
                (format!("tl{k}"), ty, t)
            })
            .collect();
        let rhs = SrcTerm::Tuple(parts.iter().map(|(_, _, t)| t.clone()).collect());
        let tuple =
            SrcTerm::Tuple(parts.iter().map(|(n, _, _)| SrcTerm::Var(n.clone())).collect());
        let lhs = parts.iter().rev().fold(tuple, |acc, (n, _, t)| {
            SrcTerm::Let(n.clone(), Box::new(t.clone()), Box::new(acc))
        });
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn eta_let_match(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let comps = vec![gen_type_over(rng, &[1, 2], 0), gen_type_over(rng, &[1, 2], 0)];
        let prod = SrcType::Prod(comps.clone());
        let t1 = gen_term(rng, &ctx, &prod, 2);
        let names: Vec<String> = (0..comps.len()).map(|k| format!("lm{k}")).collect();
        let mut ctx2 = ctx.clone();
        for (n, c) in names.iter().zip(&comps) {
            ctx2.0.push((n.clone(), c.clone()));
        }
        let tres = gen_type(rng, 1);
        let t3 = gen_term(rng, &ctx2, &tres, 2);
        let x = fresh(rng, &ctx);
        let lhs = SrcTerm::Let(
            x.clone(),
            Box::new(t1.clone()),
            Box::new(SrcTerm::ProdMatch(
                Box::new(SrcTerm::Var(x)),
                names.clone(),
                Box::new(t3.clone()),
            )),
        );
        let rhs = SrcTerm::ProdMatch(Box::new(t1), names, Box::new(t3));
        src_instance(&ctx, &env, &lhs, &rhs)
    }

    pub fn eta_op_let(rng: &mut Rng) -> Result<(), String> {
        let ctx = gen_ctx(rng);
        let env = gen_env(rng, &ctx);
        let op = if rng.chance(0.5) { OpRef::new("add") } else { OpRef::new("mul") };
        let a1 = gen_term(rng, &ctx, &SrcType::Real(1), 2);
        let a2 = gen_term(rng, &ctx, &SrcType::Real(1), 2);
        let (x1, x2) = (fresh(rng, &ctx), format!("{}b", fresh(rng, &ctx)));
        let rhs = SrcTerm::Op(op.clone(), vec![a1.clone(), a2.clone()]);
        let lhs = SrcTerm::Let(
            x1.clone(),
            Box::new(a1),
            Box::new(SrcTerm::Let(
                x2.clone(),
                Box::new(a2),
                Box::new(SrcTerm::Op(op, vec![SrcTerm::Var(x1), SrcTerm::Var(x2)])),
            )),
        );
        src_instance(&ctx, &env, &lhs, &rhs)
    }
}

mod lin_laws {
    use super::*;

    struct Fixture {
        env: Env,
        in_ty: LinType,
        out_ty: LinType,
        cot: Cot,
    }

    fn fixture(rng: &mut Rng) -> Fixture {
        let (_, env) = lin_fixture(rng);
        let in_ty = gen_lin_type(rng, 1);
        let out_ty = gen_lin_type(rng, 1);
        let cot = gen_cot(rng, &in_ty);
        Fixture { env, in_ty, out_ty, cot }
    }

    fn agree(
        env: &Env,
        cot: &Cot,
        lhs: &TgtTerm,
        rhs: &TgtTerm,
        tol: f64,
    ) -> Result<(), String> {
        let vl = teval_lin(env, cot, lhs, FUEL).map_err(|e| format!("lhs: {e}"))?;
        let vr = teval_lin(env, cot, rhs, FUEL).map_err(|e| format!("rhs: {e}"))?;
        if lin_outcome_eq(&vl, &vr, tol) {
            Ok(())
        } else {
            Err(format!("{vl:?} vs {vr:?}"))
        }
    }

    pub fn beta_let(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let mid = gen_lin_type(rng, 1);
        let t1 = gen_lin_term(rng, &f.in_ty, &mid, 2);
        let t2 = gen_lin_term(rng, &mid, &f.out_ty, 2);
        let lhs = TgtTerm::LinLet(Box::new(t1.clone()), Box::new(t2.clone()));
        let rhs = subst_lin_var(&t2, &t1);
        agree(&f.env, &f.cot, &lhs, &rhs, LIN_TOL)
    }

    pub fn beta_app(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let mid = gen_lin_type(rng, 1);
        let body = gen_lin_term(rng, &mid, &f.out_ty, 2);
        let arg = gen_lin_term(rng, &f.in_ty, &mid, 2);
        let lhs = TgtTerm::LinApp(
            Box::new(TgtTerm::LinAbs(Box::new(body.clone()))),
            Box::new(arg.clone()),
        );
        let rhs = subst_lin_var(&body, &arg);
        agree(&f.env, &f.cot, &lhs, &rhs, LIN_TOL)
    }

    pub fn eta_abs(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let body = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let clos = TgtTerm::LinAbs(Box::new(body));
        let env2 = match crate::teval::teval_cart(&f.env, &clos, FUEL)
            .map_err(|e| format!("{e}"))?
        {
            EvalOutcome::Defined(v) => f.env.with("etaf", v),
            other => return Err(format!("closure evaluation: {other:?}")),
        };
        let lhs = TgtTerm::LinApp(
            Box::new(TgtTerm::Var("etaf".into())),
            Box::new(TgtTerm::LinVar),
        );
        let eta = TgtTerm::LinAbs(Box::new(TgtTerm::LinApp(
            Box::new(TgtTerm::Var("etaf".into())),
            Box::new(TgtTerm::LinVar),
        )));
        let rhs = TgtTerm::LinApp(Box::new(eta), Box::new(TgtTerm::LinVar));
        agree(&env2, &f.cot, &lhs, &rhs, 0.0)
    }

    pub fn plus_unit_right(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let lhs = TgtTerm::Plus(Box::new(t.clone()), Box::new(TgtTerm::Zero));
        agree(&f.env, &f.cot, &lhs, &t, 0.0)
    }

    pub fn plus_unit_left(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let lhs = TgtTerm::Plus(Box::new(TgtTerm::Zero), Box::new(t.clone()));
        agree(&f.env, &f.cot, &lhs, &t, 0.0)
    }

    pub fn plus_assoc(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t1 = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let t2 = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let t3 = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let lhs = TgtTerm::Plus(
            Box::new(TgtTerm::Plus(Box::new(t1.clone()), Box::new(t2.clone()))),
            Box::new(t3.clone()),
        );
        let rhs = TgtTerm::Plus(
            Box::new(t1),
            Box::new(TgtTerm::Plus(Box::new(t2), Box::new(t3))),
        );
        agree(&f.env, &f.cot, &lhs, &rhs, 1e-12)
    }

    pub fn plus_comm(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t1 = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let t2 = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let lhs = TgtTerm::Plus(Box::new(t1.clone()), Box::new(t2.clone()));
        let rhs = TgtTerm::Plus(Box::new(t2), Box::new(t1));
        agree(&f.env, &f.cot, &lhs, &rhs, 0.0)
    }

    pub fn hom_zero(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let substituted = subst_lin_var(&t, &TgtTerm::Zero);
        agree(&f.env, &f.cot, &substituted, &TgtTerm::Zero, LIN_TOL)?;
        // and evaluating with a zero input directly
        let vz = teval_lin(&f.env, &Cot::Zero, &t, FUEL).map_err(|e| format!("{e}"))?;
        match vz {
            Outcome::Defined(c) => {
                if cot_approx_eq(&c, &Cot::Zero, LIN_TOL) {
                    Ok(())
                } else {
                    Err(format!("zero input produced {c:?}"))
                }
            }
            other => Err(format!("zero input produced {other:?}")),
        }
    }

    pub fn hom_plus(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let s1 = gen_lin_term(rng, &f.in_ty, &f.in_ty, 2);
        let s2 = gen_lin_term(rng, &f.in_ty, &f.in_ty, 2);
        let lhs = subst_lin_var(&t, &TgtTerm::Plus(Box::new(s1.clone()), Box::new(s2.clone())));
        let rhs = TgtTerm::Plus(
            Box::new(subst_lin_var(&t, &s1)),
            Box::new(subst_lin_var(&t, &s2)),
        );
        agree(&f.env, &f.cot, &lhs, &rhs, LIN_TOL)
    }

    /// Additivity of the denotation itself: t(a + b) = t(a) + t(b).
    pub fn additivity(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let t = gen_lin_term(rng, &f.in_ty, &f.out_ty, 2);
        let a = gen_cot(rng, &f.in_ty);
        let b = gen_cot(rng, &f.in_ty);
        let ab = Cot::add(&a, &b).map_err(|e| format!("{e}"))?;
        let va = teval_lin(&f.env, &a, &t, FUEL).map_err(|e| format!("{e}"))?;
        let vb = teval_lin(&f.env, &b, &t, FUEL).map_err(|e| format!("{e}"))?;
        let vab = teval_lin(&f.env, &ab, &t, FUEL).map_err(|e| format!("{e}"))?;
        match (va, vb, vab) {
            (Outcome::Defined(x), Outcome::Defined(y), Outcome::Defined(xy)) => {
                let sum = Cot::add(&x, &y).map_err(|e| format!("{e}"))?;
                if cot_approx_eq(&sum, &xy, LIN_TOL) {
                    Ok(())
                } else {
                    Err(format!("{sum:?} vs {xy:?}"))
                }
            }
            (a, b, c) => {
                // all bottom together is fine
                let all_bottom = !matches!(a, Outcome::Defined(_))
                    && !matches!(b, Outcome::Defined(_))
                    && !matches!(c, Outcome::Defined(_));
                if all_bottom {
                    Ok(())
                } else {
                    Err("partiality disagreement under addition".to_string())
                }
            }
        }
    }

    pub fn biprod_beta(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let parts = [gen_lin_type(rng, 0), gen_lin_type(rng, 0)];
        let terms: Vec<TgtTerm> =
            parts.iter().map(|p| gen_lin_term(rng, &f.in_ty, p, 2)).collect();
        let i = rng.below(parts.len());
        let lhs = TgtTerm::LinProj(i + 1, Box::new(TgtTerm::LinTuple(terms.clone())));
        agree(&f.env, &f.cot, &lhs, &terms[i], 0.0)
    }

    pub fn biprod_eta(rng: &mut Rng) -> Result<(), String> {
        let f = fixture(rng);
        let parts = vec![gen_lin_type(rng, 0), gen_lin_type(rng, 0)];
        let bp = LinType::Biprod(parts.clone());
        let t = gen_lin_term(rng, &f.in_ty, &bp, 2);
        let rhs = TgtTerm::LinTuple(
            (1..=parts.len())
                .map(|i| TgtTerm::LinProj(i, Box::new(t.clone())))
                .collect(),
        );
        agree(&f.env, &f.cot, &t, &rhs, 0.0)
    }
}

/// Monoid laws over cotangent values, parameterized by the addition so that
/// a deliberately broken addition is caught (a mutation check for the suite
/// itself).
pub fn monoid_value_laws(
    plus: &dyn Fn(&Cot, &Cot) -> Cot,
    rng: &mut Rng,
    iterations: u32,
) -> LawReport {
    let mut failures = 0;
    let mut first = None;
    for _ in 0..iterations {
        let ty = gen_lin_type(rng, 1);
        let a = gen_cot(rng, &ty);
        let b = gen_cot(rng, &ty);
        let c = gen_cot(rng, &ty);
        let comm_ok = plus(&a, &b) == plus(&b, &a);
        let unit_ok = plus(&a, &Cot::Zero) == a && plus(&Cot::Zero, &a) == a;
        let assoc_ok = cot_approx_eq(&plus(&plus(&a, &b), &c), &plus(&a, &plus(&b, &c)), 1e-12);
        if !(comm_ok && unit_ok && assoc_ok) {
            failures += 1;
            if first.is_none() {
                first = Some(format!(
                    "comm={comm_ok} unit={unit_ok} assoc={assoc_ok} on {a:?}, {b:?}, {c:?}"
                ));
            }
        }
    }
    LawReport { name: "monoid_values", cases: iterations, failures, first_failure: first }
}

type LawFn = fn(&mut Rng) -> Result<(), String>;

pub const SOURCE_LAWS: &[(&str, LawFn)] = &[
    ("src_beta_let", src_laws::beta_let),
    ("src_let_assoc", src_laws::let_assoc),
    ("src_beta_sum_match", src_laws::beta_sum_match),
    ("src_eta_sum_comm", src_laws::eta_sum_comm),
    ("src_beta_prod_match", src_laws::beta_prod_match),
    ("src_eta_prod_comm", src_laws::eta_prod_comm),
    ("src_eta_tuple_let", src_laws::eta_tuple_let),
    ("src_eta_let_match", src_laws::eta_let_match),
    ("src_eta_op_let", src_laws::eta_op_let),
];

pub const LINEAR_LAWS: &[(&str, LawFn)] = &[
    ("lin_beta_let", lin_laws::beta_let),
    ("lin_beta_app", lin_laws::beta_app),
    ("lin_eta_abs", lin_laws::eta_abs),
    ("lin_plus_unit_right", lin_laws::plus_unit_right),
    ("lin_plus_unit_left", lin_laws::plus_unit_left),
    ("lin_plus_assoc", lin_laws::plus_assoc),
    ("lin_plus_comm", lin_laws::plus_comm),
    ("lin_hom_zero", lin_laws::hom_zero),
    ("lin_hom_plus", lin_laws::hom_plus),
    ("lin_additivity", lin_laws::additivity),
    ("lin_biprod_beta", lin_laws::biprod_beta),
    ("lin_biprod_eta", lin_laws::biprod_eta),
];

fn run_law(name: &'static str, f: LawFn, rng: &mut Rng, iterations: u32) -> LawReport {
    let mut failures = 0;
    let mut first = None;
    for _ in 0..iterations {
        if let Err(e) = f(rng) {
            failures += 1;
            if first.is_none() {
                first = Some(e);
            }
        }
    }
    LawReport { name, cases: iterations, failures, first_failure: first }
}

/// Execute every law over generated instances; deterministic given the seed.
pub fn run_property_suites(seed: u64, iterations_per_law: u32) -> SuiteReport {
    let mut rng = Rng::new(seed);
    let mut laws = Vec::new();
    for (name, f) in SOURCE_LAWS.iter().chain(LINEAR_LAWS) {
        laws.push(run_law(name, *f, &mut rng, iterations_per_law));
    }
    laws.push(monoid_value_laws(
        &|a, b| Cot::add(a, b).expect("shape mismatch in monoid law"),
        &mut rng,
        iterations_per_law,
    ));
    SuiteReport { seed, iterations: iterations_per_law, laws }
}
