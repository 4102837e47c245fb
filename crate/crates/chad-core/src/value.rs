//! Runtime representations: values as trees of real vectors, tuples and
//! tagged injections (plus dependent pairs and linear closures for the
//! target language), and cotangents as commutative-monoid values.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::syntax::SrcType;
use crate::target::syntax::TgtTerm;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Rv(Vec<f64>),
    Tup(Vec<Value>),
    /// 1-based injection tag.
    Inj(usize, Box<Value>),
    /// Dependent pair (target language only).
    Pair(Box<Value>, Box<Value>),
    /// Linear closure (target language only).
    Clos(Arc<LinClos>),
}

#[derive(Debug, PartialEq)]
pub struct LinClos {
    pub env: Env,
    pub body: TgtTerm,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Env(pub BTreeMap<String, Value>);

impl Env {
    pub fn new() -> Self {
        Env(BTreeMap::new())
    }

    pub fn with(&self, name: &str, v: Value) -> Env {
        let mut m = self.0.clone();
        m.insert(name.to_string(), v);
        Env(m)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }
}

/// Outcome of an evaluation: a value, a domain gap (semantic bottom), or a
/// truncation of the step budget. The latter two both read as bottom for
/// semantic equality, but the harness distinguishes them so it can raise
/// fuel instead of misreading divergence as a domain gap.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalOutcome {
    Defined(Value),
    Undefined,
    FuelExhausted(u64),
}

/// Internal errors: these indicate an ill-typed input, never a legitimate
/// runtime state.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalError(pub String);

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "internal evaluation error: {}", self.0)
    }
}

/// The loop states visited by an iteration, consumed by the fold
/// evaluator's backward pass.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trace {
    /// States `a0 .. ak`, pushed before each body evaluation.
    pub states: Vec<Value>,
    /// The `in1` payload, when the loop exited.
    pub exit: Option<Value>,
    pub exhausted: bool,
}

/// Cotangent values: commutative-monoid elements shaped by a linear type at
/// a concrete primal value. `Zero` is the polymorphic zero, reified on
/// first use against a shaped operand.
#[derive(Clone, Debug, PartialEq)]
pub enum Cot {
    Zero,
    Vec(Vec<f64>),
    /// The unique inhabitant of the zero type, reified.
    Unit,
    Tuple(Vec<Cot>),
}

impl Cot {
    pub fn add(a: &Cot, b: &Cot) -> Result<Cot, EvalError> {
        match (a, b) {
            (Cot::Zero, x) | (x, Cot::Zero) => Ok(x.clone()),
            (Cot::Unit, Cot::Unit) => Ok(Cot::Unit),
            (Cot::Vec(u), Cot::Vec(w)) => {
                if u.len() != w.len() {
                    return Err(EvalError(format!(
                        "cotangent dimension mismatch: {} vs {}",
                        u.len(),
                        w.len()
                    )));
                }
                Ok(Cot::Vec(u.iter().zip(w).map(|(x, y)| x + y).collect()))
            }
            (Cot::Tuple(u), Cot::Tuple(w)) => {
                if u.len() != w.len() {
                    return Err(EvalError("cotangent arity mismatch".into()));
                }
                let parts = u
                    .iter()
                    .zip(w)
                    .map(|(x, y)| Cot::add(x, y))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Cot::Tuple(parts))
            }
            _ => Err(EvalError("cotangent shape mismatch in addition".into())),
        }
    }

    /// Flatten to raw coordinates; `Zero` has no intrinsic shape and cannot
    /// be flattened without one.
    pub fn flatten_into(&self, out: &mut Vec<f64>) -> Result<(), EvalError> {
        match self {
            Cot::Zero => Err(EvalError("cannot flatten an unshaped zero cotangent".into())),
            Cot::Unit => Ok(()),
            Cot::Vec(v) => {
                out.extend_from_slice(v);
                Ok(())
            }
            Cot::Tuple(ts) => {
                for t in ts {
                    t.flatten_into(out)?;
                }
                Ok(())
            }
        }
    }

    /// Reify against a value-shape: a zero cotangent for the given primal
    /// source type.
    pub fn zero_of_type(ty: &SrcType) -> Cot {
        match ty {
            SrcType::Real(n) => Cot::Vec(vec![0.0; *n]),
            SrcType::Unit | SrcType::Void => Cot::Unit,
            SrcType::Prod(ts) => Cot::Tuple(ts.iter().map(Cot::zero_of_type).collect()),
            // The zero at a sum's cotangent is branch-shaped; without the
            // branch it stays polymorphic.
            SrcType::Sum(_) => Cot::Zero,
        }
    }
}

/// Structural equality with per-scalar relative tolerance.
pub fn value_approx_eq(a: &Value, b: &Value, rel_tol: f64) -> bool {
    match (a, b) {
        (Value::Rv(u), Value::Rv(w)) => {
            u.len() == w.len() && u.iter().zip(w).all(|(x, y)| scalar_close(*x, *y, rel_tol))
        }
        (Value::Tup(u), Value::Tup(w)) => {
            u.len() == w.len() && u.iter().zip(w).all(|(x, y)| value_approx_eq(x, y, rel_tol))
        }
        (Value::Inj(i, u), Value::Inj(j, w)) => i == j && value_approx_eq(u, w, rel_tol),
        (Value::Pair(a1, b1), Value::Pair(a2, b2)) => {
            value_approx_eq(a1, a2, rel_tol) && value_approx_eq(b1, b2, rel_tol)
        }
        _ => false,
    }
}

pub fn scalar_close(x: f64, y: f64, rel_tol: f64) -> bool {
    if x == y {
        return true;
    }
    let scale = libm::fabs(x).max(libm::fabs(y)).max(1.0);
    libm::fabs(x - y) <= rel_tol * scale
}

pub fn cot_approx_eq(a: &Cot, b: &Cot, rel_tol: f64) -> bool {
    match (a, b) {
        (Cot::Zero, Cot::Zero) => true,
        (Cot::Zero, other) | (other, Cot::Zero) => cot_is_zero(other, rel_tol),
        (Cot::Unit, Cot::Unit) => true,
        (Cot::Vec(u), Cot::Vec(w)) => {
            u.len() == w.len() && u.iter().zip(w).all(|(x, y)| scalar_close(*x, *y, rel_tol))
        }
        (Cot::Tuple(u), Cot::Tuple(w)) => {
            u.len() == w.len() && u.iter().zip(w).all(|(x, y)| cot_approx_eq(x, y, rel_tol))
        }
        _ => false,
    }
}

fn cot_is_zero(c: &Cot, rel_tol: f64) -> bool {
    match c {
        Cot::Zero | Cot::Unit => true,
        Cot::Vec(v) => v.iter().all(|x| scalar_close(*x, 0.0, rel_tol)),
        Cot::Tuple(ts) => ts.iter().all(|t| cot_is_zero(t, rel_tol)),
    }
}
