//! Registry of primitive operations: arity signatures, partial primal
//! semantics, and transposed derivatives.
//!
//! Each operation implements a partially defined differentiable function
//! from a product of real arrays to a disjoint union of real arrays. The
//! domain of definition is an open subset of the input space, realized here
//! with strict floating-point comparisons (`x != 0.0` for `recpr`, and so
//! on). Derivatives are closed-form; the finite-difference fallback lives in
//! the test harness, never here.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::syntax::OpRef;

/// Instantiated operation descriptor with concrete dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimOp {
    pub op: OpRef,
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub total: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PrimError {
    UnknownOp(String),
    /// Parameter list malformed for the op family (wrong count, bad value).
    BadParams(String),
    /// Argument dimensions incompatible with the op's signature. This is a
    /// programming error, distinct from the op being undefined at a point.
    DimensionMismatch(String),
    /// A point/cotangent query outside the op's open domain.
    OutsideDomain(String),
}

impl core::fmt::Display for PrimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PrimError::UnknownOp(n) => write!(f, "unknown operation `{n}`"),
            PrimError::BadParams(m) => write!(f, "bad op parameters: {m}"),
            PrimError::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
            PrimError::OutsideDomain(m) => write!(f, "outside domain: {m}"),
        }
    }
}

/// Result of applying a primal: the realized branch (1-based) and payload,
/// or `Undefined` when the input lies outside the open domain.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimalResult {
    Defined(usize, Vec<f64>),
    Undefined,
}

/// Symbolic signature entry for registry listings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpSpec {
    pub base: &'static str,
    pub in_dims: &'static str,
    pub out_dims: &'static str,
    pub total: bool,
    pub params: &'static str,
}

pub const OP_SPECS: &[OpSpec] = &[
    OpSpec { base: "cnst", in_dims: "[]", out_dims: "[k]", total: true, params: "c1, ..., ck" },
    OpSpec { base: "add", in_dims: "[n, n]", out_dims: "[n]", total: true, params: "" },
    OpSpec { base: "mul", in_dims: "[n, n]", out_dims: "[n]", total: true, params: "" },
    OpSpec { base: "matvec", in_dims: "[n*m, m]", out_dims: "[n]", total: true, params: "" },
    OpSpec { base: "sum", in_dims: "[n]", out_dims: "[1]", total: true, params: "" },
    OpSpec { base: "sigmoid", in_dims: "[1]", out_dims: "[1]", total: true, params: "" },
    OpSpec { base: "norm", in_dims: "[n]", out_dims: "[1]", total: false, params: "" },
    OpSpec { base: "recpr", in_dims: "[1]", out_dims: "[1]", total: false, params: "" },
    OpSpec { base: "normalize", in_dims: "[n]", out_dims: "[n]", total: false, params: "" },
    OpSpec { base: "sign", in_dims: "[1]", out_dims: "[1, 1]", total: false, params: "" },
    OpSpec { base: "decider", in_dims: "[1]", out_dims: "[1, 1]", total: false, params: "a" },
];

/// Look up the symbolic descriptor for a base name.
pub fn lookup(base: &str) -> Result<&'static OpSpec, PrimError> {
    OP_SPECS
        .iter()
        .find(|s| s.base == base)
        .ok_or_else(|| PrimError::UnknownOp(base.to_string()))
}

/// Instantiate an op at concrete argument dimensions.
pub fn resolve(op: &OpRef, arg_dims: &[usize]) -> Result<PrimOp, PrimError> {
    let spec = lookup(&op.base)?;
    let mk = |in_dims: Vec<usize>, out_dims: Vec<usize>| PrimOp {
        op: op.clone(),
        in_dims,
        out_dims,
        total: spec.total,
    };
    let want_params = |n: usize| -> Result<(), PrimError> {
        if op.params.len() == n {
            Ok(())
        } else {
            Err(PrimError::BadParams(format!(
                "`{}` takes {n} parameter(s), got {}",
                op.base,
                op.params.len()
            )))
        }
    };
    let arity = |n: usize| -> Result<(), PrimError> {
        if arg_dims.len() == n {
            Ok(())
        } else {
            Err(PrimError::DimensionMismatch(format!(
                "`{}` takes {n} argument(s), got {}",
                op.base,
                arg_dims.len()
            )))
        }
    };
    match op.base.as_str() {
        "cnst" => {
            if op.params.is_empty() {
                return Err(PrimError::BadParams("`cnst` needs at least one parameter".into()));
            }
            arity(0)?;
            Ok(mk(vec![], vec![op.params.len()]))
        }
        "add" | "mul" => {
            want_params(0)?;
            arity(2)?;
            if arg_dims[0] != arg_dims[1] {
                return Err(PrimError::DimensionMismatch(format!(
                    "`{}` wants equal dimensions, got {} and {}",
                    op.base, arg_dims[0], arg_dims[1]
                )));
            }
            Ok(mk(arg_dims.to_vec(), vec![arg_dims[0]]))
        }
        "matvec" => {
            want_params(0)?;
            arity(2)?;
            let (p, m) = (arg_dims[0], arg_dims[1]);
            if m == 0 || p % m != 0 {
                return Err(PrimError::DimensionMismatch(format!(
                    "`matvec` wants a first argument of dimension n*m for second of dimension m, got {p} and {m}"
                )));
            }
            Ok(mk(vec![p, m], vec![p / m]))
        }
        "sum" => {
            want_params(0)?;
            arity(1)?;
            Ok(mk(vec![arg_dims[0]], vec![1]))
        }
        "sigmoid" | "recpr" => {
            want_params(0)?;
            arity(1)?;
            if arg_dims[0] != 1 {
                return Err(PrimError::DimensionMismatch(format!(
                    "`{}` wants a 1-dimensional argument",
                    op.base
                )));
            }
            Ok(mk(vec![1], vec![1]))
        }
        "norm" => {
            want_params(0)?;
            arity(1)?;
            Ok(mk(vec![arg_dims[0]], vec![1]))
        }
        "normalize" => {
            want_params(0)?;
            arity(1)?;
            Ok(mk(vec![arg_dims[0]], vec![arg_dims[0]]))
        }
        "sign" => {
            want_params(0)?;
            arity(1)?;
            if arg_dims[0] != 1 {
                return Err(PrimError::DimensionMismatch("`sign` wants a 1-dimensional argument".into()));
            }
            Ok(mk(vec![1], vec![1, 1]))
        }
        "decider" => {
            want_params(1)?;
            arity(1)?;
            if arg_dims[0] != 1 {
                return Err(PrimError::DimensionMismatch("`decider` wants a 1-dimensional argument".into()));
            }
            Ok(mk(vec![1], vec![1, 1]))
        }
        other => Err(PrimError::UnknownOp(other.to_string())),
    }
}

fn check_arg_dims(op: &PrimOp, args: &[Vec<f64>]) -> Result<(), PrimError> {
    if args.len() != op.in_dims.len()
        || args.iter().zip(&op.in_dims).any(|(a, d)| a.len() != *d)
    {
        return Err(PrimError::DimensionMismatch(format!(
            "`{}` applied to arguments of the wrong shape",
            op.op.base
        )));
    }
    Ok(())
}

fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Apply the primal function. `Undefined` exactly when the input lies
/// outside the op's open domain.
pub fn primal_apply(op: &PrimOp, args: &[Vec<f64>]) -> Result<PrimalResult, PrimError> {
    check_arg_dims(op, args)?;
    use PrimalResult::*;
    let r = match op.op.base.as_str() {
        "cnst" => Defined(1, op.op.params.clone()),
        "add" => Defined(1, args[0].iter().zip(&args[1]).map(|(a, b)| a + b).collect()),
        "mul" => Defined(1, args[0].iter().zip(&args[1]).map(|(a, b)| a * b).collect()),
        "matvec" => {
            let (m, n) = (op.in_dims[1], op.out_dims[0]);
            let mut out = vec![0.0; n];
            for i in 0..n {
                for j in 0..m {
                    out[i] += args[0][i * m + j] * args[1][j];
                }
            }
            Defined(1, out)
        }
        "sum" => Defined(1, vec![args[0].iter().sum()]),
        "sigmoid" => Defined(1, vec![sigmoid(args[0][0])]),
        "norm" => {
            if args[0].iter().all(|v| *v == 0.0) {
                Undefined
            } else {
                Defined(1, vec![norm2(&args[0])])
            }
        }
        "recpr" => {
            if args[0][0] == 0.0 {
                Undefined
            } else {
                Defined(1, vec![1.0 / args[0][0]])
            }
        }
        "normalize" => {
            if args[0].iter().all(|v| *v == 0.0) {
                Undefined
            } else {
                let n = norm2(&args[0]);
                Defined(1, args[0].iter().map(|v| v / n).collect())
            }
        }
        "sign" => {
            let x = args[0][0];
            if x > 0.0 {
                Defined(1, vec![x])
            } else if x < 0.0 {
                Defined(2, vec![x])
            } else {
                Undefined
            }
        }
        "decider" => {
            let (x, a) = (args[0][0], op.op.params[0]);
            if x > a {
                Defined(1, vec![x])
            } else if x < a {
                Defined(2, vec![x])
            } else {
                Undefined
            }
        }
        other => return Err(PrimError::UnknownOp(other.to_string())),
    };
    Ok(r)
}

/// Transposed derivative: given the input point, the realized branch, and a
/// cotangent `w` on the branch's output, return the pulled-back cotangents,
/// one per input argument. Linear in `w`.
pub fn transposed_derivative(
    op: &PrimOp,
    point: &[Vec<f64>],
    branch: usize,
    w: &[f64],
) -> Result<Vec<Vec<f64>>, PrimError> {
    check_arg_dims(op, point)?;
    if branch == 0 || branch > op.out_dims.len() || w.len() != op.out_dims[branch - 1] {
        return Err(PrimError::DimensionMismatch(format!(
            "cotangent for `{}` has the wrong branch or shape",
            op.op.base
        )));
    }
    match primal_apply(op, point)? {
        PrimalResult::Undefined => {
            return Err(PrimError::OutsideDomain(format!(
                "`{}` is not defined at the given point",
                op.op.base
            )))
        }
        PrimalResult::Defined(b, _) if b != branch => {
            return Err(PrimError::OutsideDomain(format!(
                "`{}` realizes branch {b} at the given point, not {branch}",
                op.op.base
            )))
        }
        PrimalResult::Defined(..) => {}
    }
    let r = match op.op.base.as_str() {
        "cnst" => vec![],
        "add" => vec![w.to_vec(), w.to_vec()],
        "mul" => vec![
            point[1].iter().zip(w).map(|(b, wi)| b * wi).collect(),
            point[0].iter().zip(w).map(|(a, wi)| a * wi).collect(),
        ],
        "matvec" => {
            let (m, n) = (op.in_dims[1], op.out_dims[0]);
            let mut da = vec![0.0; n * m];
            let mut dx = vec![0.0; m];
            for i in 0..n {
                for j in 0..m {
                    da[i * m + j] = w[i] * point[1][j];
                    dx[j] += point[0][i * m + j] * w[i];
                }
            }
            vec![da, dx]
        }
        "sum" => vec![vec![w[0]; op.in_dims[0]]],
        "sigmoid" => {
            let s = sigmoid(point[0][0]);
            vec![vec![s * (1.0 - s) * w[0]]]
        }
        "norm" => {
            let n = norm2(&point[0]);
            vec![point[0].iter().map(|v| v / n * w[0]).collect()]
        }
        "recpr" => {
            let x = point[0][0];
            vec![vec![-w[0] / (x * x)]]
        }
        "normalize" => {
            // J = (I - u u^T) / |x| with u = x/|x|; J is symmetric.
            let n = norm2(&point[0]);
            let u: Vec<f64> = point[0].iter().map(|v| v / n).collect();
            let uw: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
            vec![u.iter().zip(w).map(|(ui, wi)| (wi - ui * uw) / n).collect()]
        }
        // Branchwise identity: each branch carries the input through.
        "sign" | "decider" => vec![w.to_vec()],
        other => return Err(PrimError::UnknownOp(other.to_string())),
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op1(base: &str, dims: &[usize]) -> PrimOp {
        resolve(&OpRef::new(base), dims).unwrap()
    }

    #[test]
    fn lookup_examples() {
        let mul = lookup("mul").unwrap();
        assert_eq!((mul.in_dims, mul.out_dims), ("[n, n]", "[n]"));
        let sign = lookup("sign").unwrap();
        assert_eq!((sign.in_dims, sign.out_dims), ("[1]", "[1, 1]"));
        assert_eq!(lookup("frobnicate"), Err(PrimError::UnknownOp("frobnicate".into())));
    }

    #[test]
    fn primal_examples() {
        assert_eq!(
            primal_apply(&op1("recpr", &[1]), &[vec![0.0]]).unwrap(),
            PrimalResult::Undefined
        );
        let sign = op1("sign", &[1]);
        assert_eq!(
            primal_apply(&sign, &[vec![3.0]]).unwrap(),
            PrimalResult::Defined(1, vec![3.0])
        );
        assert_eq!(
            primal_apply(&sign, &[vec![-2.0]]).unwrap(),
            PrimalResult::Defined(2, vec![-2.0])
        );
        assert_eq!(primal_apply(&sign, &[vec![0.0]]).unwrap(), PrimalResult::Undefined);
        // norm of a 3-4-5 triangle; cross-checked against hypot.
        let norm = op1("norm", &[2]);
        match primal_apply(&norm, &[vec![3.0, 4.0]]).unwrap() {
            PrimalResult::Defined(1, v) => {
                assert!((v[0] - libm::hypot(3.0, 4.0)).abs() < 1e-15);
                assert_eq!(v[0], 5.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transposed_examples() {
        // Frozen from the central difference of 1/(1+e^-x) at 0 (h=1e-5):
        // sigma'(0) = 0.25 exactly.
        let sig = op1("sigmoid", &[1]);
        let d = transposed_derivative(&sig, &[vec![0.0]], 1, &[1.0]).unwrap();
        assert_eq!(d, vec![vec![0.25]]);

        let add = op1("add", &[2, 2]);
        let d = transposed_derivative(&add, &[vec![1.0, 2.0], vec![3.0, 4.0]], 1, &[5.0, 7.0]).unwrap();
        assert_eq!(d, vec![vec![5.0, 7.0], vec![5.0, 7.0]]);

        // Gradient of the norm is x/|x|; frozen from finite differences.
        let norm = op1("norm", &[2]);
        let d = transposed_derivative(&norm, &[vec![3.0, 4.0]], 1, &[1.0]).unwrap();
        assert_eq!(d, vec![vec![0.6, 0.8]]);
    }

    #[test]
    fn transposed_outside_domain() {
        let rec = op1("recpr", &[1]);
        assert!(matches!(
            transposed_derivative(&rec, &[vec![0.0]], 1, &[1.0]),
            Err(PrimError::OutsideDomain(_))
        ));
    }

    #[test]
    fn decider_branches() {
        let dec = resolve(&OpRef::with_params("decider", vec![1.0]), &[1]).unwrap();
        assert_eq!(primal_apply(&dec, &[vec![2.0]]).unwrap(), PrimalResult::Defined(1, vec![2.0]));
        assert_eq!(primal_apply(&dec, &[vec![0.5]]).unwrap(), PrimalResult::Defined(2, vec![0.5]));
        assert_eq!(primal_apply(&dec, &[vec![1.0]]).unwrap(), PrimalResult::Undefined);
    }

    #[test]
    fn matvec_shapes() {
        let mv = op1("matvec", &[6, 2]);
        assert_eq!(mv.out_dims, vec![3]);
        let a = vec![1.0, 0.0, 0.0, 1.0, 2.0, 3.0];
        let x = vec![5.0, 7.0];
        match primal_apply(&mv, &[a.clone(), x.clone()]).unwrap() {
            PrimalResult::Defined(1, y) => assert_eq!(y, vec![5.0, 7.0, 31.0]),
            other => panic!("unexpected {other:?}"),
        }
        let d = transposed_derivative(&mv, &[a, x], 1, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(d[0], vec![5.0, 7.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(d[1], vec![1.0, 0.0]);
    }
}
