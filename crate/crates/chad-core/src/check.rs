//! Correctness harness: finite-difference Jacobian comparison against the
//! transformed cotangent maps, bitwise primal-fidelity checks, domain
//! agreement, the fixed-point and fold-composition oracles, and the
//! structure-preservation probe.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::eval::{eval, eval_iterate, Evaluator, Flow};
use crate::fd::{self, FdConfig, FdResult};
use crate::rng::Rng;
use crate::syntax::{SrcContext, SrcDef, SrcTerm, SrcType};
use crate::target::syntax::TgtTerm;
use crate::teval::{self, apply_closure, Outcome};
use crate::transform::{chad_def, transform_loop_parts};
use crate::typecheck::{desugar_iterate_with_context, typecheck_source_shadowing};
use crate::value::{Cot, Env, EvalOutcome, Value};

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub samples: usize,
    pub h: f64,
    pub rel_tol: f64,
    pub fuel: u64,
    pub seed: u64,
    /// Uniform sampling box per flattened input coordinate.
    pub box_lo: f64,
    pub box_hi: f64,
    /// Optional per-coordinate boxes overriding the uniform box.
    pub boxes: Option<Vec<(f64, f64)>>,
    pub retries: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: 100,
            h: 1e-5,
            rel_tol: 1e-4,
            fuel: 1_000_000,
            seed: 0,
            box_lo: -3.0,
            box_hi: 3.0,
            boxes: None,
            retries: 1000,
        }
    }
}

impl CheckConfig {
    fn sample_point(&self, rng: &mut Rng, dim: usize) -> Result<Vec<f64>, CheckError> {
        match &self.boxes {
            None => Ok((0..dim).map(|_| rng.in_range(self.box_lo, self.box_hi)).collect()),
            Some(bs) => {
                if bs.len() != dim {
                    return Err(CheckError::Config(format!(
                        "{} boxes for a {dim}-dimensional input",
                        bs.len()
                    )));
                }
                Ok(bs.iter().map(|(lo, hi)| rng.in_range(*lo, *hi)).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub point: Vec<f64>,
    /// (output coordinate, input coordinate); the output coordinate is
    /// meaningless for primal failures.
    pub axis: (usize, usize),
    pub expected: f64,
    pub got: f64,
    pub kind: FailureKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FailureKind {
    Primal,
    Jacobian,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub program: String,
    pub samples: usize,
    pub tested: usize,
    pub skipped: usize,
    pub rejected: usize,
    pub fuel_exhausted: usize,
    pub max_primal_rel_err: f64,
    pub max_jacobian_rel_err: f64,
    pub failures: Vec<Failure>,
    pub undef_checked: usize,
    pub undef_agree: usize,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckError {
    /// The program's input does not flatten to a Euclidean space.
    Config(String),
    Internal(String),
}

impl core::fmt::Display for CheckError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CheckError::Config(m) => write!(f, "configuration error: {m}"),
            CheckError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    libm::fabs(a - b) / libm::fabs(a).max(libm::fabs(b)).max(1.0)
}

/// Basis cotangent along the realized branch of an output value, with a one
/// in flattened coordinate `i`.
pub fn basis_cot(v: &Value, i: usize) -> Result<Cot, CheckError> {
    fn go(v: &Value, at: &mut usize, i: usize) -> Result<Cot, CheckError> {
        match v {
            Value::Rv(xs) => {
                let mut w = vec![0.0; xs.len()];
                if i >= *at && i < *at + xs.len() {
                    w[i - *at] = 1.0;
                }
                *at += xs.len();
                Ok(Cot::Vec(w))
            }
            Value::Tup(ts) => {
                let mut parts = Vec::with_capacity(ts.len());
                for t in ts {
                    parts.push(go(t, at, i)?);
                }
                Ok(Cot::Tuple(parts))
            }
            Value::Inj(_, p) => go(p, at, i),
            other => Err(CheckError::Internal(format!("cannot shape a cotangent from {other:?}"))),
        }
    }
    go(v, &mut 0, i)
}

/// Flatten a context cotangent (as produced by a transformed program's
/// cotangent map) to raw coordinates, in context order. Unshaped zeros are
/// reified against the variable types.
pub fn flatten_ctx_cot(ctx: &SrcContext, cot: &Cot) -> Result<Vec<f64>, CheckError> {
    fn flat_ty(ty: &SrcType, c: &Cot, out: &mut Vec<f64>) -> Result<(), CheckError> {
        match (ty, c) {
            (_, Cot::Zero) => {
                out.extend(core::iter::repeat(0.0).take(ty.flat_dim().ok_or_else(|| {
                    CheckError::Config("sum-typed input in gradient".into())
                })?));
                Ok(())
            }
            (SrcType::Real(n), Cot::Vec(v)) if v.len() == *n => {
                out.extend_from_slice(v);
                Ok(())
            }
            (SrcType::Unit, Cot::Unit) | (SrcType::Unit, Cot::Tuple(_)) => Ok(()),
            (SrcType::Prod(ts), Cot::Tuple(cs)) if ts.len() == cs.len() => {
                for (t, c) in ts.iter().zip(cs) {
                    flat_ty(t, c, out)?;
                }
                Ok(())
            }
            other => Err(CheckError::Internal(format!("cotangent shape mismatch: {other:?}"))),
        }
    }
    let mut out = Vec::new();
    match ctx.0.len() {
        0 => Ok(out),
        1 => {
            flat_ty(&ctx.0[0].1, cot, &mut out)?;
            Ok(out)
        }
        m => {
            let parts: Vec<Cot> = match cot {
                Cot::Tuple(cs) if cs.len() == m => cs.clone(),
                Cot::Zero => vec![Cot::Zero; m],
                other => {
                    return Err(CheckError::Internal(format!(
                        "context cotangent is not an {m}-tuple: {other:?}"
                    )))
                }
            };
            for ((_, ty), c) in ctx.0.iter().zip(&parts) {
                flat_ty(ty, c, &mut out)?;
            }
            Ok(out)
        }
    }
}

/// Check one program: primal fidelity and derivative agreement against the
/// central-difference oracle over sampled in-domain points, plus
/// undefinedness agreement over raw samples.
pub fn check_program(def: &SrcDef, cfg: &CheckConfig) -> Result<CheckReport, CheckError> {
    let Some(dims) = fd::flat_input_dims(&def.ctx) else {
        return Err(CheckError::Config(format!(
            "program `{}` does not have a Euclidean input",
            def.name
        )));
    };
    let total_dim: usize = dims.iter().sum();
    let out = chad_def(&def.ctx, &def.ret, &def.body)
        .map_err(|e| CheckError::Internal(format!("transform: {e}")))?;

    let mut rng = Rng::new(cfg.seed);
    let mut report = CheckReport {
        program: def.name.clone(),
        samples: cfg.samples,
        tested: 0,
        skipped: 0,
        rejected: 0,
        fuel_exhausted: 0,
        max_primal_rel_err: 0.0,
        max_jacobian_rel_err: 0.0,
        failures: Vec::new(),
        undef_checked: 0,
        undef_agree: 0,
        verdict: true,
    };

    let fd_cfg = FdConfig { h: cfg.h, fuel: cfg.fuel };

    for _ in 0..cfg.samples {
        // Rejection-sample an in-domain point.
        let mut point = None;
        for _ in 0..cfg.retries {
            let p: Vec<f64> = cfg.sample_point(&mut rng, total_dim)?;
            let env = fd::env_from_flat(&def.ctx, &p)
                .ok_or_else(|| CheckError::Internal("bad point".into()))?;
            match eval(&env, &def.body, cfg.fuel)
                .map_err(|e| CheckError::Internal(format!("{e}")))?
            {
                EvalOutcome::Defined(v) => {
                    point = Some((p, env, v));
                    break;
                }
                EvalOutcome::Undefined => report.rejected += 1,
                EvalOutcome::FuelExhausted(_) => {
                    report.fuel_exhausted += 1;
                    report.rejected += 1;
                }
            }
        }
        let Some((p, env, src_val)) = point else {
            return Err(CheckError::Config(
                "sampler could not find an in-domain point".into(),
            ));
        };

        // Primal fidelity: identical outcome, bitwise-equal payloads.
        let (primal, clos) = eval_transformed(&env, &out.term, cfg.fuel)?;
        match &primal {
            EvalOutcome::Defined(tv) => {
                if *tv != src_val {
                    let (_, sf) =
                        fd::flatten_output(&src_val).map_err(|e| CheckError::Internal(e.0))?;
                    let (_, tf) =
                        fd::flatten_output(tv).map_err(|e| CheckError::Internal(e.0))?;
                    let err = sf
                        .iter()
                        .zip(&tf)
                        .map(|(a, b)| rel_err(*a, *b))
                        .fold(0.0, f64::max);
                    report.max_primal_rel_err = report.max_primal_rel_err.max(err);
                    report.failures.push(Failure {
                        point: p.clone(),
                        axis: (0, 0),
                        expected: sf.first().copied().unwrap_or(0.0),
                        got: tf.first().copied().unwrap_or(0.0),
                        kind: FailureKind::Primal,
                    });
                }
            }
            other => {
                report.failures.push(Failure {
                    point: p.clone(),
                    axis: (0, 0),
                    expected: 0.0,
                    got: f64::NAN,
                    kind: FailureKind::Primal,
                });
                let _ = other;
            }
        }

        // Derivative agreement against central differences.
        match fd::jacobian_fd(&def.ctx, &def.body, &p, &fd_cfg)
            .map_err(|e| CheckError::Internal(e.0))?
        {
            FdResult::Jacobian(jac) => {
                let Some(clos) = clos else {
                    report.skipped += 1;
                    continue;
                };
                let (_, out_flat) =
                    fd::flatten_output(&src_val).map_err(|e| CheckError::Internal(e.0))?;
                let mut tested_point = false;
                for i in 0..out_flat.len() {
                    let c = basis_cot(&src_val, i)?;
                    let g = apply_closure(&clos, &c, cfg.fuel)
                        .map_err(|e| CheckError::Internal(format!("{e}")))?;
                    let Outcome::Defined(g) = g else {
                        report.failures.push(Failure {
                            point: p.clone(),
                            axis: (i, 0),
                            expected: 0.0,
                            got: f64::NAN,
                            kind: FailureKind::Jacobian,
                        });
                        continue;
                    };
                    let row = flatten_ctx_cot(&def.ctx, &g)?;
                    tested_point = true;
                    for j in 0..row.len() {
                        let e = rel_err(row[j], jac[i][j]);
                        report.max_jacobian_rel_err = report.max_jacobian_rel_err.max(e);
                        if e > cfg.rel_tol {
                            report.failures.push(Failure {
                                point: p.clone(),
                                axis: (i, j),
                                expected: jac[i][j],
                                got: row[j],
                                kind: FailureKind::Jacobian,
                            });
                        }
                    }
                }
                if tested_point {
                    report.tested += 1;
                }
            }
            FdResult::Undefined | FdResult::BranchCrossed(_) => report.skipped += 1,
            FdResult::FuelExhausted => {
                report.skipped += 1;
                report.fuel_exhausted += 1;
            }
            FdResult::NotEuclidean => {
                return Err(CheckError::Config("input is not Euclidean".into()))
            }
        }
    }

    // Undefinedness agreement on raw samples (no rejection).
    for _ in 0..cfg.samples {
        let p: Vec<f64> = cfg.sample_point(&mut rng, total_dim)?;
        let env = fd::env_from_flat(&def.ctx, &p)
            .ok_or_else(|| CheckError::Internal("bad point".into()))?;
        let s = eval(&env, &def.body, cfg.fuel).map_err(|e| CheckError::Internal(format!("{e}")))?;
        let (t, _) = eval_transformed(&env, &out.term, cfg.fuel)?;
        report.undef_checked += 1;
        let agree = matches!(
            (&s, &t),
            (EvalOutcome::Defined(_), EvalOutcome::Defined(_))
                | (EvalOutcome::Undefined, EvalOutcome::Undefined)
                | (EvalOutcome::FuelExhausted(_), EvalOutcome::FuelExhausted(_))
        );
        if agree {
            report.undef_agree += 1;
        }
    }

    report.verdict = report.failures.is_empty() && report.undef_agree == report.undef_checked;
    Ok(report)
}

fn eval_transformed(
    env: &Env,
    term: &TgtTerm,
    fuel: u64,
) -> Result<(EvalOutcome, Option<alloc::sync::Arc<crate::value::LinClos>>), CheckError> {
    match teval::teval_cart(env, term, fuel).map_err(|e| CheckError::Internal(format!("{e}")))? {
        EvalOutcome::Defined(Value::Pair(primal, clos)) => {
            let Value::Clos(c) = *clos else {
                return Err(CheckError::Internal("non-closure cotangent".into()));
            };
            Ok((EvalOutcome::Defined(*primal), Some(c)))
        }
        EvalOutcome::Defined(other) => {
            Err(CheckError::Internal(format!("transformed program produced {other:?}")))
        }
        EvalOutcome::Undefined => Ok((EvalOutcome::Undefined, None)),
        EvalOutcome::FuelExhausted(n) => Ok((EvalOutcome::FuelExhausted(n), None)),
    }
}

// ---------------------------------------------------------------------------
// Oracles for the loop theory
// ---------------------------------------------------------------------------

/// A loop extracted from a program of the shape `let x = init in iterate x`
/// (possibly after expanding a context-using body to its tuple-state form).
pub struct LoopParts {
    pub loop_var: String,
    pub loop_var_ty: SrcType,
    pub init: SrcTerm,
    pub body: SrcTerm,
    pub exit_ty: SrcType,
}

/// Extract the outermost loop of a def, expanding context use so the body
/// mentions only the loop variable.
pub fn extract_loop(def: &SrcDef) -> Result<LoopParts, CheckError> {
    fn find(ctx: &SrcContext, t: &SrcTerm) -> Option<(SrcContext, String, SrcTerm, SrcTerm)> {
        match t {
            SrcTerm::Let(x, bound, rest) => {
                if let SrcTerm::Iterate(y, body) = &**rest {
                    if x == y {
                        return Some((ctx.clone(), x.clone(), (**bound).clone(), (**body).clone()));
                    }
                }
                let tb = typecheck_source_shadowing(ctx, bound).ok()?;
                let mut ctx2 = ctx.clone();
                ctx2.0.push((x.clone(), tb));
                find(&ctx2, rest)
            }
            _ => None,
        }
    }
    let Some((ctx, x, init, body)) = find(&def.ctx, &def.body) else {
        return Err(CheckError::Config(format!("program `{}` has no outermost loop", def.name)));
    };
    let tx = typecheck_source_shadowing(&ctx, &init)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
    let uses_ctx = body.free_vars().iter().any(|f| f != &x);
    if !uses_ctx {
        let sigma = loop_exit_ty(&x, &tx, &body)?;
        return Ok(LoopParts { loop_var: x, loop_var_ty: tx, init, body, exit_ty: sigma });
    }
    // Expand, then the inner loop is over the tuple state.
    let expanded = desugar_iterate_with_context(&ctx, &x, &tx, &body)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
    let SrcTerm::Let(w, bound, rest) = expanded else {
        return Err(CheckError::Internal("unexpected expansion shape".into()));
    };
    let SrcTerm::Iterate(_, wbody) = *rest else {
        return Err(CheckError::Internal("unexpected expansion shape".into()));
    };
    // The tuple initializer references x; inline the init expression.
    let init_w = crate::syntax::subst(&bound, &x, &init);
    let mut ctx2 = ctx.clone();
    ctx2.0.push((x.clone(), tx));
    let tw = typecheck_source_shadowing(&ctx2, &bound)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
    let sigma = loop_exit_ty(&w, &tw, &wbody)?;
    Ok(LoopParts { loop_var: w, loop_var_ty: tw, init: init_w, body: *wbody, exit_ty: sigma })
}

fn loop_exit_ty(x: &str, tx: &SrcType, body: &SrcTerm) -> Result<SrcType, CheckError> {
    let single = SrcContext(vec![(x.to_string(), tx.clone())]);
    match typecheck_source_shadowing(&single, body) {
        Ok(SrcType::Sum(summands)) if summands.len() == 2 => Ok(summands[0].clone()),
        other => Err(CheckError::Internal(format!("loop body type: {other:?}"))),
    }
}

/// Compare the fold evaluator against the explicit right-to-left
/// composition of per-step cotangent closures along an independently
/// recorded trace. Returns the trace length on success.
pub fn fold_composition_check(
    parts: &LoopParts,
    env: &Env,
    cot: &Cot,
    fuel: u64,
    rel_tol: f64,
) -> Result<Result<usize, String>, CheckError> {
    let start = match eval(env, &parts.init, fuel)
        .map_err(|e| CheckError::Internal(format!("{e}")))?
    {
        EvalOutcome::Defined(v) => v,
        other => return Ok(Err(format!("initializer did not evaluate: {other:?}"))),
    };
    let single_env = Env::new().with(&parts.loop_var, start.clone());
    let (outcome, trace) = eval_iterate(&single_env, &parts.loop_var, &parts.body, start.clone(), fuel)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
    if !matches!(outcome, EvalOutcome::Defined(_)) {
        return Ok(Err(format!("loop did not terminate: {outcome:?}")));
    }

    let (ft, fold) = transform_loop_parts(&parts.loop_var, &parts.loop_var_ty, &parts.body)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;

    // Oracle: evaluate the transformed body at each recorded state and chain
    // the closures backward.
    let mut r = cot.clone();
    for (i, state) in trace.states.iter().enumerate().rev() {
        let env_i = Env::new().with(&parts.loop_var, state.clone());
        let pair = teval::teval_cart(&env_i, &ft, fuel)
            .map_err(|e| CheckError::Internal(format!("{e}")))?;
        let EvalOutcome::Defined(Value::Pair(_, clos)) = pair else {
            return Ok(Err(format!("step {i} did not evaluate")));
        };
        let Value::Clos(clos) = *clos else {
            return Err(CheckError::Internal("non-closure cotangent".into()));
        };
        match apply_closure(&clos, &r, fuel).map_err(|e| CheckError::Internal(format!("{e}")))? {
            Outcome::Defined(next) => r = next,
            other => return Ok(Err(format!("closure at step {i}: {other:?}"))),
        }
    }

    // The fold evaluator on the same loop.
    let fold_env = Env::new().with(&parts.loop_var, start);
    let folded = match teval::teval_fold(&fold_env, &fold, cot, fuel)
        .map_err(|e| CheckError::Internal(format!("{e}")))?
    {
        Outcome::Defined(c) => c,
        other => return Ok(Err(format!("fold: {other:?}"))),
    };

    if crate::value::cot_approx_eq(&folded, &r, rel_tol) {
        Ok(Ok(trace.states.len()))
    } else {
        Ok(Err(format!("fold {folded:?} vs composition {r:?}")))
    }
}

/// The basic fixed point equation: one unrolling of the loop changes
/// nothing. Both sides share a budget of `fuel + 1` body evaluations, so
/// exhaustion agrees exactly.
pub fn basic_fixed_point_check(
    parts: &LoopParts,
    env: &Env,
    fuel: u64,
    rel_tol: f64,
) -> Result<Result<(), String>, CheckError> {
    let start = match eval(env, &parts.init, fuel + 1)
        .map_err(|e| CheckError::Internal(format!("{e}")))?
    {
        EvalOutcome::Defined(v) => v,
        other => return Ok(Err(format!("initializer did not evaluate: {other:?}"))),
    };
    let single_env = Env::new().with(&parts.loop_var, start.clone());

    // iterate f with fuel + 1
    let mut lhs_ev = Evaluator::new(fuel + 1);
    let lhs = flow_to_outcome(lhs_ev.run_loop(
        &single_env,
        &parts.loop_var,
        &parts.body,
        start.clone(),
        None,
    ));

    // [id, iterate f] . f with the same budget
    let mut rhs_ev = Evaluator::new(fuel + 1);
    let rhs = (|| -> Result<EvalOutcome, Flow> {
        rhs_ev.tick()?;
        let first = rhs_ev.eval(&single_env.with(&parts.loop_var, start.clone()), &parts.body)?;
        match first {
            Value::Inj(1, payload) => Ok(EvalOutcome::Defined(*payload)),
            Value::Inj(2, next) => {
                let v =
                    rhs_ev.run_loop(&single_env, &parts.loop_var, &parts.body, *next, None)?;
                Ok(EvalOutcome::Defined(v))
            }
            other => Err(Flow::Bug(crate::value::EvalError(format!(
                "loop body produced {other:?}"
            )))),
        }
    })();
    let rhs = match rhs {
        Ok(o) => o,
        Err(Flow::Undefined) => EvalOutcome::Undefined,
        Err(Flow::Fuel(n)) => EvalOutcome::FuelExhausted(n),
        Err(Flow::Bug(e)) => return Err(CheckError::Internal(format!("{e}"))),
    };

    let ok = match (&lhs, &rhs) {
        (EvalOutcome::Defined(a), EvalOutcome::Defined(b)) => {
            crate::value::value_approx_eq(a, b, rel_tol)
        }
        (EvalOutcome::Undefined, EvalOutcome::Undefined) => true,
        (EvalOutcome::FuelExhausted(_), EvalOutcome::FuelExhausted(_)) => true,
        _ => false,
    };
    Ok(if ok { Ok(()) } else { Err(format!("{lhs:?} vs {rhs:?}")) })
}

fn flow_to_outcome(r: Result<Value, Flow>) -> EvalOutcome {
    match r {
        Ok(v) => EvalOutcome::Defined(v),
        Err(Flow::Undefined) => EvalOutcome::Undefined,
        Err(Flow::Fuel(n)) => EvalOutcome::FuelExhausted(n),
        Err(Flow::Bug(e)) => panic!("{e}"),
    }
}

/// The container fixed point equation checked through the transformed
/// programs: unrolling the loop once and composing the cotangent maps
/// matches the fold-backed iteration.
pub fn container_fixed_point_check(
    parts: &LoopParts,
    env: &Env,
    cot: &Cot,
    fuel: u64,
    rel_tol: f64,
) -> Result<Result<(), String>, CheckError> {
    let start = match eval(env, &parts.init, fuel)
        .map_err(|e| CheckError::Internal(format!("{e}")))?
    {
        EvalOutcome::Defined(v) => v,
        other => return Ok(Err(format!("initializer did not evaluate: {other:?}"))),
    };
    let (ft, fold) = transform_loop_parts(&parts.loop_var, &parts.loop_var_ty, &parts.body)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;

    let run_iterate = |state: &Value, c: &Cot| -> Result<Option<(Value, Cot)>, CheckError> {
        let env_i = Env::new().with(&parts.loop_var, state.clone());
        let primal = teval::teval_cart(
            &env_i,
            &TgtTerm::Iterate(
                parts.loop_var.clone(),
                Box::new(fold.loop_body.clone()),
            ),
            fuel,
        )
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
        let EvalOutcome::Defined(b) = primal else { return Ok(None) };
        match teval::teval_fold(&env_i, &fold, c, fuel)
            .map_err(|e| CheckError::Internal(format!("{e}")))?
        {
            Outcome::Defined(g) => Ok(Some((b, g))),
            _ => Ok(None),
        }
    };

    // Right-hand side: the iteration itself.
    let Some((rhs_val, rhs_cot)) = run_iterate(&start, cot)? else {
        return Ok(Err("loop did not terminate".into()));
    };

    // Left-hand side: evaluate the body once, then case: exit keeps the
    // cotangent in the exit slot, continue feeds the iterated cotangent
    // through the body's map in the continue slot.
    let env0 = Env::new().with(&parts.loop_var, start.clone());
    let body_pair = teval::teval_cart(&env0, &ft, fuel)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
    let EvalOutcome::Defined(Value::Pair(bval, bclos)) = body_pair else {
        return Ok(Err("body did not evaluate".into()));
    };
    let Value::Clos(bclos) = *bclos else {
        return Err(CheckError::Internal("non-closure cotangent".into()));
    };
    let (lhs_val, lhs_cot) = match *bval {
        Value::Inj(1, exit) => {
            let g = match apply_closure(&bclos, cot, fuel)
                .map_err(|e| CheckError::Internal(format!("{e}")))?
            {
                Outcome::Defined(g) => g,
                other => return Ok(Err(format!("body closure: {other:?}"))),
            };
            (*exit, g)
        }
        Value::Inj(2, next) => {
            let Some((b, r)) = run_iterate(&next, cot)? else {
                return Ok(Err("loop did not terminate after unrolling".into()));
            };
            let g = match apply_closure(&bclos, &r, fuel)
                .map_err(|e| CheckError::Internal(format!("{e}")))?
            {
                Outcome::Defined(g) => g,
                other => return Ok(Err(format!("body closure: {other:?}"))),
            };
            (b, g)
        }
        other => return Err(CheckError::Internal(format!("loop body produced {other:?}"))),
    };

    let vals_ok = crate::value::value_approx_eq(&lhs_val, &rhs_val, rel_tol);
    let cots_ok = crate::value::cot_approx_eq(&lhs_cot, &rhs_cot, rel_tol);
    Ok(if vals_ok && cots_ok {
        Ok(())
    } else {
        Err(format!(
            "values {lhs_val:?} vs {rhs_val:?}; cotangents {lhs_cot:?} vs {rhs_cot:?}"
        ))
    })
}

/// Functoriality probe: transforming a composition agrees with composing
/// the transforms, on sampled points and cotangents.
pub fn structure_preservation_probe(
    f: &SrcDef,
    g: &SrcDef,
    samples: usize,
    seed: u64,
    fuel: u64,
    rel_tol: f64,
) -> Result<Result<(), String>, CheckError> {
    if f.ctx.0.len() != 1 || g.ctx.0.len() != 1 {
        return Err(CheckError::Config("probe wants single-parameter programs".into()));
    }
    let (xf, tf) = f.ctx.0[0].clone();
    let (xg, _) = g.ctx.0[0].clone();
    // let y = f-body in g-body[x := y]
    let composed_body = SrcTerm::Let(
        xg.clone(),
        Box::new(f.body.clone()),
        Box::new(g.body.clone()),
    );
    let ctx = SrcContext(vec![(xf.clone(), tf.clone())]);
    let composed = chad_def(&ctx, &g.ret, &composed_body)
        .map_err(|e| CheckError::Internal(format!("{e}")))?;
    let df = chad_def(&f.ctx, &f.ret, &f.body).map_err(|e| CheckError::Internal(format!("{e}")))?;
    let dg = chad_def(&g.ctx, &g.ret, &g.body).map_err(|e| CheckError::Internal(format!("{e}")))?;

    let Some(dims) = fd::flat_input_dims(&ctx) else {
        return Err(CheckError::Config("non-Euclidean input".into()));
    };
    let total: usize = dims.iter().sum();
    let mut rng = Rng::new(seed);

    let mut checked = 0;
    for _ in 0..samples * 10 {
        if checked >= samples {
            break;
        }
        let p: Vec<f64> = (0..total).map(|_| rng.in_range(-3.0, 3.0)).collect();
        let env = fd::env_from_flat(&ctx, &p)
            .ok_or_else(|| CheckError::Internal("bad point".into()))?;

        let (c_primal, c_clos) = eval_transformed(&env, &composed.term, fuel)?;
        let (f_primal, f_clos) = eval_transformed(&env, &df.term, fuel)?;
        // Pipeline: feed f's primal into g.
        let (p_primal, p_clos) = match &f_primal {
            EvalOutcome::Defined(v) => {
                let env_g = Env::new().with(&xg, v.clone());
                eval_transformed(&env_g, &dg.term, fuel)?
            }
            _ => (f_primal.clone(), None),
        };
        // Domain agreement between the two routes.
        match (&c_primal, &p_primal) {
            (EvalOutcome::Defined(a), EvalOutcome::Defined(b)) => {
                if !crate::value::value_approx_eq(a, b, rel_tol) {
                    return Ok(Err(format!("primal disagreement at {p:?}: {a:?} vs {b:?}")));
                }
            }
            (EvalOutcome::Defined(_), _) | (_, EvalOutcome::Defined(_)) => {
                return Ok(Err(format!("partiality disagreement at {p:?}")));
            }
            _ => continue,
        }
        let (Some(c_clos), Some(f_clos), Some(p_clos)) = (c_clos, f_clos, p_clos) else {
            continue;
        };
        let EvalOutcome::Defined(out_val) = &c_primal else { unreachable!() };
        let (_, out_flat) = fd::flatten_output(out_val).map_err(|e| CheckError::Internal(e.0))?;
        for i in 0..out_flat.len() {
            let c = basis_cot(out_val, i)?;
            let lhs = match apply_closure(&c_clos, &c, fuel)
                .map_err(|e| CheckError::Internal(format!("{e}")))?
            {
                Outcome::Defined(v) => v,
                other => return Ok(Err(format!("composed cotangent: {other:?}"))),
            };
            let mid = match apply_closure(&p_clos, &c, fuel)
                .map_err(|e| CheckError::Internal(format!("{e}")))?
            {
                Outcome::Defined(v) => v,
                other => return Ok(Err(format!("second-stage cotangent: {other:?}"))),
            };
            let rhs = match apply_closure(&f_clos, &mid, fuel)
                .map_err(|e| CheckError::Internal(format!("{e}")))?
            {
                Outcome::Defined(v) => v,
                other => return Ok(Err(format!("first-stage cotangent: {other:?}"))),
            };
            if !crate::value::cot_approx_eq(&lhs, &rhs, rel_tol) {
                return Ok(Err(format!("cotangent disagreement at {p:?}: {lhs:?} vs {rhs:?}")));
            }
        }
        checked += 1;
    }
    if checked == 0 {
        return Ok(Err("no in-domain points found".into()));
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    fn cfg(samples: usize, seed: u64) -> CheckConfig {
        CheckConfig { samples, seed, ..CheckConfig::default() }
    }

    #[test]
    fn identity_program_passes_with_zero_error() {
        let d = parse_source("def id (x: real 2) : real 2 = x").unwrap();
        let r = check_program(&d, &cfg(20, 1)).unwrap();
        assert!(r.verdict, "{r:?}");
        assert_eq!(r.max_jacobian_rel_err, 0.0);
        assert_eq!(r.max_primal_rel_err, 0.0);
    }

    #[test]
    fn sigmoid_of_square_passes() {
        let d = parse_source("def sq (x: real 1) : real 1 = op sigmoid (op mul (x, x))").unwrap();
        let r = check_program(&d, &cfg(100, 2)).unwrap();
        assert!(r.verdict, "{:?}", r.failures.first());
    }

    #[test]
    fn halving_loop_passes_and_skips_near_threshold() {
        let d = parse_source(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap();
        let r = check_program(&d, &cfg(100, 3)).unwrap();
        assert!(r.verdict, "{:?}", r.failures.first());
        assert!(r.tested > 90);
    }

    #[test]
    fn halving_skips_points_near_the_decider_threshold() {
        // Sampling in a narrow band around the threshold makes the
        // finite-difference probes straddle it; those points are skipped,
        // not failed.
        let d = parse_source(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap();
        let cfg = CheckConfig {
            samples: 40,
            seed: 5,
            box_lo: 1.0 - 2e-6,
            box_hi: 1.0 + 2e-6,
            ..CheckConfig::default()
        };
        let r = check_program(&d, &cfg).unwrap();
        assert!(r.skipped > 0, "{r:?}");
        assert!(r.failures.is_empty(), "{:?}", r.failures.first());
    }

    #[test]
    fn reports_are_deterministic_given_seed() {
        let d = parse_source("def sq (x: real 1) : real 1 = op sigmoid (op mul (x, x))").unwrap();
        let a = check_program(&d, &cfg(30, 9)).unwrap();
        let b = check_program(&d, &cfg(30, 9)).unwrap();
        assert_eq!(a.max_jacobian_rel_err, b.max_jacobian_rel_err);
        assert_eq!(a.tested, b.tested);
        assert_eq!(a.skipped, b.skipped);
        assert_eq!(a.undef_agree, b.undef_agree);
    }

    #[test]
    fn structure_preservation_examples() {
        // identity . identity
        let id = parse_source("def id (x: real 1) : real 1 = x").unwrap();
        let r = structure_preservation_probe(&id, &id, 10, 0, 10_000, 1e-12).unwrap();
        assert!(r.is_ok(), "{r:?}");
        // sigmoid . square
        let f = parse_source("def f (x: real 1) : real 1 = op mul (x, x)").unwrap();
        let g = parse_source("def g (y: real 1) : real 1 = op sigmoid (y)").unwrap();
        let r = structure_preservation_probe(&f, &g, 50, 1, 10_000, 1e-10).unwrap();
        assert!(r.is_ok(), "{r:?}");
        // loop then linear
        let h = parse_source(
            "def h (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap();
        let lin = parse_source("def k (y: real 1) : real 1 = op add (y, y)").unwrap();
        let r = structure_preservation_probe(&h, &lin, 30, 2, 100_000, 1e-10).unwrap();
        assert!(r.is_ok(), "{r:?}");
    }

    #[test]
    fn mutated_coprojection_fails_two_variable_program() {
        // Swap the coprojection lanes in the transform of `add` and confirm
        // the derivative check notices on a two-variable program where the
        // true rows differ.
        let d = parse_source("def two (x: real 1, y: real 1) : real 1 = op mul (x, op mul (y, y))").unwrap();
        let good = chad_def(&d.ctx, &d.ret, &d.body).unwrap();
        let mutated = swap_lintuple_lanes(&good.term);
        assert_ne!(mutated, good.term);
        let env = Env::new()
            .with("x", Value::Rv(vec![1.5]))
            .with("y", Value::Rv(vec![2.0]));
        let (_, clos) = eval_transformed(&env, &mutated, 10_000).unwrap();
        let g = apply_closure(&clos.unwrap(), &Cot::Vec(vec![1.0]), 10_000).unwrap();
        let Outcome::Defined(g) = g else { panic!() };
        let flat = flatten_ctx_cot(&d.ctx, &g).unwrap();
        // d/dx (x*y^2) = y^2 = 4, d/dy = 2xy = 6; swapped lanes give (6, 4).
        assert!((flat[0] - 4.0).abs() > 1.0, "mutation not visible: {flat:?}");
    }

    fn swap_lintuple_lanes(t: &TgtTerm) -> TgtTerm {
        use crate::target::syntax::TgtTerm as T;
        match t {
            T::LinTuple(ts) if ts.len() == 2 => {
                T::LinTuple(vec![swap_lintuple_lanes(&ts[1]), swap_lintuple_lanes(&ts[0])])
            }
            T::Pair(a, b) => T::Pair(
                Box::new(swap_lintuple_lanes(a)),
                Box::new(swap_lintuple_lanes(b)),
            ),
            T::LinAbs(a) => T::LinAbs(Box::new(swap_lintuple_lanes(a))),
            T::PairMatch(s, x, y, b) => T::PairMatch(
                Box::new(swap_lintuple_lanes(s)),
                x.clone(),
                y.clone(),
                Box::new(swap_lintuple_lanes(b)),
            ),
            T::Ascribe(a, ty) => T::Ascribe(Box::new(swap_lintuple_lanes(a)), ty.clone()),
            T::LinLet(a, b) => T::LinLet(
                Box::new(swap_lintuple_lanes(a)),
                Box::new(swap_lintuple_lanes(b)),
            ),
            T::Plus(a, b) => T::Plus(
                Box::new(swap_lintuple_lanes(a)),
                Box::new(swap_lintuple_lanes(b)),
            ),
            T::LinApp(a, b) => T::LinApp(
                Box::new(swap_lintuple_lanes(a)),
                Box::new(swap_lintuple_lanes(b)),
            ),
            other => other.clone(),
        }
    }

    #[test]
    fn fold_composition_on_halving_loop() {
        let d = parse_source(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap();
        let parts = extract_loop(&d).unwrap();
        let env = Env::new().with("x", Value::Rv(vec![8.3]));
        let r = fold_composition_check(&parts, &env, &Cot::Vec(vec![1.0]), 10_000, 1e-12).unwrap();
        assert_eq!(r, Ok(5));
    }

    #[test]
    fn basic_fixed_point_on_halving_loop() {
        let d = parse_source(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap();
        let parts = extract_loop(&d).unwrap();
        let env = Env::new().with("x", Value::Rv(vec![8.3]));
        assert_eq!(basic_fixed_point_check(&parts, &env, 1000, 1e-12).unwrap(), Ok(()));
        // and with fuel too small for the full loop, both sides exhaust
        assert_eq!(basic_fixed_point_check(&parts, &env, 2, 1e-12).unwrap(), Ok(()));
    }

    #[test]
    fn container_fixed_point_on_halving_loop() {
        let d = parse_source(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap();
        let parts = extract_loop(&d).unwrap();
        let env = Env::new().with("x", Value::Rv(vec![8.3]));
        let r = container_fixed_point_check(&parts, &env, &Cot::Vec(vec![1.0]), 10_000, 1e-12)
            .unwrap();
        assert_eq!(r, Ok(()));
    }
}
