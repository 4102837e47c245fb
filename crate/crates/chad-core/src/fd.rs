//! Central-difference Jacobians: the independent numerical oracle against
//! which transformed derivatives are checked. Probes that leave the domain
//! or land in a different sum branch are reported, not silently differenced.

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::eval;
use crate::syntax::{SrcContext, SrcTerm, SrcType};
use crate::value::{Env, EvalError, EvalOutcome, Value};

/// Flattened view of a context whose types are sum-free.
pub fn flat_input_dims(ctx: &SrcContext) -> Option<Vec<usize>> {
    ctx.0.iter().map(|(_, t)| t.flat_dim()).collect()
}

pub fn unflatten_value(ty: &SrcType, flat: &mut &[f64]) -> Option<Value> {
    match ty {
        SrcType::Real(n) => {
            let (head, rest) = flat.split_at(*n);
            *flat = rest;
            Some(Value::Rv(head.to_vec()))
        }
        SrcType::Unit => Some(Value::Tup(vec![])),
        SrcType::Prod(ts) => {
            let mut parts = Vec::with_capacity(ts.len());
            for t in ts {
                parts.push(unflatten_value(t, flat)?);
            }
            Some(Value::Tup(parts))
        }
        SrcType::Void | SrcType::Sum(_) => None,
    }
}

/// Environment for a flattened point; `None` if the context is not
/// Euclidean or the point has the wrong length.
pub fn env_from_flat(ctx: &SrcContext, point: &[f64]) -> Option<Env> {
    let mut env = Env::new();
    let mut rest = point;
    for (name, ty) in &ctx.0 {
        let v = unflatten_value(ty, &mut rest)?;
        env = env.with(name, v);
    }
    if rest.is_empty() {
        Some(env)
    } else {
        None
    }
}

/// Flatten an output value; the branch path records every injection tag
/// passed on the way down, so branch agreement between probes is exact.
pub fn flatten_output(v: &Value) -> Result<(Vec<usize>, Vec<f64>), EvalError> {
    let mut branch = Vec::new();
    let mut flat = Vec::new();
    flatten_go(v, &mut branch, &mut flat)?;
    Ok((branch, flat))
}

fn flatten_go(v: &Value, branch: &mut Vec<usize>, flat: &mut Vec<f64>) -> Result<(), EvalError> {
    match v {
        Value::Rv(xs) => {
            flat.extend_from_slice(xs);
            Ok(())
        }
        Value::Tup(ts) => {
            for t in ts {
                flatten_go(t, branch, flat)?;
            }
            Ok(())
        }
        Value::Inj(i, p) => {
            branch.push(*i);
            flatten_go(p, branch, flat)
        }
        other => Err(EvalError(format!("cannot flatten {other:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FdResult {
    /// Row-major Jacobian: entry `(i, j)` is d out_i / d in_j.
    Jacobian(Vec<Vec<f64>>),
    /// A probe left the domain.
    Undefined,
    /// The two probes along the given axis realized different branches.
    BranchCrossed(usize),
    FuelExhausted,
    /// Input context is not Euclidean.
    NotEuclidean,
}

pub struct FdConfig {
    pub h: f64,
    pub fuel: u64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { h: 1e-5, fuel: 1_000_000 }
    }
}

/// Central-difference Jacobian of a program at a flattened point. The step
/// along axis `j` is `h * max(1, |p_j|)`.
pub fn jacobian_fd(
    ctx: &SrcContext,
    term: &SrcTerm,
    point: &[f64],
    cfg: &FdConfig,
) -> Result<FdResult, EvalError> {
    let Some(dims) = flat_input_dims(ctx) else {
        return Ok(FdResult::NotEuclidean);
    };
    let total: usize = dims.iter().sum();
    if total != point.len() {
        return Err(EvalError(format!(
            "point has dimension {}, context flattens to {total}",
            point.len()
        )));
    }
    // A probe agrees with the base point when the output lands behind the
    // same injection tags and the evaluation took the same control path
    // (loop exits and case dispatch included); crossings invisible in the
    // output type are caught by the path signature.
    let eval_at = |p: &[f64]| -> Result<Option<(Vec<usize>, u64, Vec<f64>)>, EvalError> {
        let env = env_from_flat(ctx, p).ok_or_else(|| EvalError("bad point".into()))?;
        match eval::eval_with_path(&env, term, cfg.fuel)? {
            (EvalOutcome::Defined(v), sig) => {
                let (branch, flat) = flatten_output(&v)?;
                Ok(Some((branch, sig, flat)))
            }
            (EvalOutcome::Undefined, _) => Ok(None),
            (EvalOutcome::FuelExhausted(_), _) => Err(EvalError("fuel".into())),
        }
    };

    let base = match eval_at(point) {
        Ok(Some(b)) => b,
        Ok(None) => return Ok(FdResult::Undefined),
        Err(e) if e.0 == "fuel" => return Ok(FdResult::FuelExhausted),
        Err(e) => return Err(e),
    };
    let out_dim = base.2.len();
    let mut jac = vec![vec![0.0; point.len()]; out_dim];
    for j in 0..point.len() {
        let hj = cfg.h * libm::fabs(point[j]).max(1.0);
        let mut plus = point.to_vec();
        plus[j] += hj;
        let mut minus = point.to_vec();
        minus[j] -= hj;
        // Denominator from the realized probe gap: cancels the rounding of
        // point[j] +- hj, making linear functions exact.
        let gap = plus[j] - minus[j];
        let (bp, bm) = match (eval_at(&plus), eval_at(&minus)) {
            (Ok(Some(a)), Ok(Some(b))) => (a, b),
            (Ok(None), _) | (_, Ok(None)) => return Ok(FdResult::Undefined),
            (Err(e), _) | (_, Err(e)) => {
                if e.0 == "fuel" {
                    return Ok(FdResult::FuelExhausted);
                }
                return Err(e);
            }
        };
        if bp.0 != base.0 || bm.0 != base.0 || bp.1 != base.1 || bm.1 != base.1 {
            return Ok(FdResult::BranchCrossed(j));
        }
        for i in 0..out_dim {
            jac[i][j] = (bp.2[i] - bm.2[i]) / gap;
        }
    }
    Ok(FdResult::Jacobian(jac))
}
