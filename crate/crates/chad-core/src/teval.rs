//! Evaluator for target programs: the cartesian fragment mirrors the source
//! evaluator, extended with dependent pairs and linear closures; the linear
//! fragment computes commutative-monoid values; the fold eliminator replays
//! the loop it annotates and accumulates the incoming cotangent backward
//! along the trace.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::eval::Flow;
use crate::prim::{self, PrimalResult};
use crate::target::syntax::{FoldData, TgtTerm};
use crate::value::{Cot, Env, EvalError, EvalOutcome, LinClos, Value};

pub struct TEval {
    fuel: u64,
    pub used: u64,
}

type EvalR<T> = Result<T, Flow>;

impl TEval {
    pub fn new(fuel: u64) -> Self {
        TEval { fuel, used: 0 }
    }

    fn tick(&mut self) -> EvalR<()> {
        if self.used >= self.fuel {
            return Err(Flow::Fuel(self.used));
        }
        self.used += 1;
        Ok(())
    }

    fn bug<T>(msg: &str) -> EvalR<T> {
        Err(Flow::Bug(EvalError(msg.into())))
    }

    pub fn eval_cart(&mut self, env: &Env, term: &TgtTerm) -> EvalR<Value> {
        match term {
            TgtTerm::Var(x) => env
                .get(x)
                .cloned()
                .ok_or_else(|| Flow::Bug(EvalError(format!("unbound variable `{x}`")))),
            TgtTerm::Op(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match self.eval_cart(env, a)? {
                        Value::Rv(v) => vals.push(v),
                        other => {
                            return Self::bug(&format!("op argument is not a real vector: {other:?}"))
                        }
                    }
                }
                crate::eval::apply_op(op, vals)
            }
            TgtTerm::Let(x, bound, body) => {
                let v = self.eval_cart(env, bound)?;
                self.eval_cart(&env.with(x, v), body)
            }
            TgtTerm::Inj(i, payload, _) => {
                Ok(Value::Inj(*i, Box::new(self.eval_cart(env, payload)?)))
            }
            TgtTerm::SumMatch(scrut, branches) => {
                let Value::Inj(i, payload) = self.eval_cart(env, scrut)? else {
                    return Self::bug("case scrutinee is not an injection");
                };
                let Some((x, body)) = branches.get(i - 1) else {
                    return Self::bug("branch index out of range");
                };
                self.eval_cart(&env.with(x, *payload), body)
            }
            TgtTerm::Tuple(ts) => {
                let mut vs = Vec::with_capacity(ts.len());
                for t in ts {
                    vs.push(self.eval_cart(env, t)?);
                }
                Ok(Value::Tup(vs))
            }
            TgtTerm::ProdMatch(scrut, names, body) => {
                let Value::Tup(vs) = self.eval_cart(env, scrut)? else {
                    return Self::bug("match scrutinee is not a tuple");
                };
                if vs.len() != names.len() {
                    return Self::bug("match arity mismatch");
                }
                let mut env2 = env.clone();
                for (n, v) in names.iter().zip(vs) {
                    env2 = env2.with(n, v);
                }
                self.eval_cart(&env2, body)
            }
            TgtTerm::Iterate(x, body) => {
                let Some(start) = env.get(x).cloned() else {
                    return Self::bug(&format!("unbound loop variable `{x}`"));
                };
                let mut state = start;
                loop {
                    self.tick()?;
                    match self.eval_cart(&env.with(x, state), body)? {
                        Value::Inj(1, payload) => return Ok(*payload),
                        Value::Inj(2, next) => state = *next,
                        other => {
                            return Self::bug(&format!("loop body produced a non-injection: {other:?}"))
                        }
                    }
                }
            }
            TgtTerm::Pair(a, b) => {
                let va = self.eval_cart(env, a)?;
                let vb = self.eval_cart(env, b)?;
                Ok(Value::Pair(Box::new(va), Box::new(vb)))
            }
            TgtTerm::PairMatch(scrut, x, y, body) => {
                let Value::Pair(a, b) = self.eval_cart(env, scrut)? else {
                    return Self::bug("pair match scrutinee is not a pair");
                };
                self.eval_cart(&env.with(x, *a).with(y, *b), body)
            }
            TgtTerm::LinAbs(body) => Ok(Value::Clos(Arc::new(LinClos {
                env: env.clone(),
                body: (**body).clone(),
            }))),
            // Types are computationally irrelevant.
            TgtTerm::Ascribe(inner, _) => self.eval_cart(env, inner),
            TgtTerm::LinVar
            | TgtTerm::LinLet(..)
            | TgtTerm::LOp(..)
            | TgtTerm::LinTuple(_)
            | TgtTerm::LinProj(..)
            | TgtTerm::LinApp(..)
            | TgtTerm::Zero
            | TgtTerm::Plus(..)
            | TgtTerm::Fold(_) => Self::bug("linear term in cartesian position"),
        }
    }

    pub fn eval_lin(&mut self, env: &Env, lin: &Cot, term: &TgtTerm) -> EvalR<Cot> {
        match term {
            TgtTerm::LinVar => Ok(lin.clone()),
            TgtTerm::LinLet(bound, body) => {
                let r = self.eval_lin(env, lin, bound)?;
                self.eval_lin(env, &r, body)
            }
            TgtTerm::LinTuple(ts) => {
                let mut parts = Vec::with_capacity(ts.len());
                for t in ts {
                    parts.push(self.eval_lin(env, lin, t)?);
                }
                Ok(Cot::Tuple(parts))
            }
            TgtTerm::LinProj(i, t) => match self.eval_lin(env, lin, t)? {
                Cot::Zero => Ok(Cot::Zero),
                Cot::Tuple(parts) => parts
                    .get(*i - 1)
                    .cloned()
                    .ok_or_else(|| Flow::Bug(EvalError("projection out of range".into()))),
                other => Self::bug(&format!("projection of non-tuple cotangent {other:?}")),
            },
            TgtTerm::LinApp(f, a) => {
                let Value::Clos(clos) = self.eval_cart(env, f)? else {
                    return Self::bug("applied a non-closure");
                };
                let va = self.eval_lin(env, lin, a)?;
                self.eval_lin(&clos.env.clone(), &va, &clos.body.clone())
            }
            TgtTerm::Zero => Ok(Cot::Zero),
            TgtTerm::Plus(a, b) => {
                let va = self.eval_lin(env, lin, a)?;
                let vb = self.eval_lin(env, lin, b)?;
                Cot::add(&va, &vb).map_err(Flow::Bug)
            }
            TgtTerm::LOp(op, args, lin_arg) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match self.eval_cart(env, a)? {
                        Value::Rv(v) => vals.push(v),
                        other => {
                            return Self::bug(&format!("lop argument is not a real vector: {other:?}"))
                        }
                    }
                }
                let dims: Vec<usize> = vals.iter().map(Vec::len).collect();
                let desc =
                    prim::resolve(op, &dims).map_err(|e| Flow::Bug(EvalError(format!("{e}"))))?;
                let branch = match prim::primal_apply(&desc, &vals)
                    .map_err(|e| Flow::Bug(EvalError(format!("{e}"))))?
                {
                    PrimalResult::Undefined => return Err(Flow::Undefined),
                    PrimalResult::Defined(b, _) => b,
                };
                let w = match self.eval_lin(env, lin, lin_arg)? {
                    Cot::Zero => vec![0.0; desc.out_dims[branch - 1]],
                    Cot::Vec(w) => w,
                    other => {
                        return Self::bug(&format!("lop cotangent is not a vector: {other:?}"))
                    }
                };
                let pulled = prim::transposed_derivative(&desc, &vals, branch, &w)
                    .map_err(|e| Flow::Bug(EvalError(format!("{e}"))))?;
                Ok(match pulled.len() {
                    0 => Cot::Unit,
                    1 => Cot::Vec(pulled.into_iter().next().unwrap()),
                    _ => Cot::Tuple(pulled.into_iter().map(Cot::Vec).collect()),
                })
            }
            TgtTerm::SumMatch(scrut, branches) => {
                let Value::Inj(i, payload) = self.eval_cart(env, scrut)? else {
                    return Self::bug("case scrutinee is not an injection");
                };
                let Some((x, body)) = branches.get(i - 1) else {
                    return Self::bug("branch index out of range");
                };
                self.eval_lin(&env.with(x, *payload), lin, body)
            }
            TgtTerm::Let(x, bound, body) => {
                let v = self.eval_cart(env, bound)?;
                self.eval_lin(&env.with(x, v), lin, body)
            }
            TgtTerm::ProdMatch(scrut, names, body) => {
                let Value::Tup(vs) = self.eval_cart(env, scrut)? else {
                    return Self::bug("match scrutinee is not a tuple");
                };
                let mut env2 = env.clone();
                for (n, v) in names.iter().zip(vs) {
                    env2 = env2.with(n, v);
                }
                self.eval_lin(&env2, lin, body)
            }
            TgtTerm::PairMatch(scrut, x, y, body) => {
                let Value::Pair(a, b) = self.eval_cart(env, scrut)? else {
                    return Self::bug("pair match scrutinee is not a pair");
                };
                self.eval_lin(&env.with(x, *a).with(y, *b), lin, body)
            }
            TgtTerm::Ascribe(inner, _) => self.eval_lin(env, lin, inner),
            TgtTerm::Fold(fd) => self.eval_fold(env, lin, fd),
            TgtTerm::Var(_)
            | TgtTerm::Op(..)
            | TgtTerm::Inj(..)
            | TgtTerm::Tuple(_)
            | TgtTerm::Iterate(..)
            | TgtTerm::Pair(..)
            | TgtTerm::LinAbs(_) => Self::bug("cartesian term in linear position"),
        }
    }

    /// Forward pass re-runs the annotated loop to record the trace; the
    /// backward pass seeds the exit slot with the incoming cotangent and
    /// walks the states in reverse through the algebra.
    fn eval_fold(&mut self, env: &Env, lin: &Cot, fd: &FoldData) -> EvalR<Cot> {
        let Some(start) = env.get(&fd.loop_var).cloned() else {
            return Self::bug(&format!("unbound loop variable `{}`", fd.loop_var));
        };
        let mut states = vec![start];
        loop {
            self.tick()?;
            let cur = states.last().unwrap().clone();
            match self.eval_cart(&env.with(&fd.loop_var, cur), &fd.loop_body)? {
                Value::Inj(1, _) => break,
                Value::Inj(2, next) => states.push(*next),
                other => {
                    return Self::bug(&format!("loop body produced a non-injection: {other:?}"))
                }
            }
        }
        let seed = self.eval_lin(env, lin, &fd.seed)?;
        let mut r = seed;
        for state in states.iter().rev() {
            let step_env = env.with(&fd.loop_var, state.clone());
            r = self.eval_lin(&step_env, &r, &fd.algebra)?;
        }
        Ok(r)
    }
}

fn wrap<T>(r: EvalR<T>) -> Result<Outcome<T>, EvalError> {
    match r {
        Ok(v) => Ok(Outcome::Defined(v)),
        Err(Flow::Undefined) => Ok(Outcome::Undefined),
        Err(Flow::Fuel(n)) => Ok(Outcome::FuelExhausted(n)),
        Err(Flow::Bug(e)) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<T> {
    Defined(T),
    Undefined,
    FuelExhausted(u64),
}

impl From<Outcome<Value>> for EvalOutcome {
    fn from(o: Outcome<Value>) -> EvalOutcome {
        match o {
            Outcome::Defined(v) => EvalOutcome::Defined(v),
            Outcome::Undefined => EvalOutcome::Undefined,
            Outcome::FuelExhausted(n) => EvalOutcome::FuelExhausted(n),
        }
    }
}

/// Evaluate a cartesian target term.
pub fn teval_cart(env: &Env, term: &TgtTerm, fuel: u64) -> Result<EvalOutcome, EvalError> {
    wrap(TEval::new(fuel).eval_cart(env, term)).map(EvalOutcome::from)
}

/// Evaluate a linear target term under a cotangent for the linear variable.
pub fn teval_lin(
    env: &Env,
    lin: &Cot,
    term: &TgtTerm,
    fuel: u64,
) -> Result<Outcome<Cot>, EvalError> {
    wrap(TEval::new(fuel).eval_lin(env, lin, term))
}

/// Evaluate a fold directly.
pub fn teval_fold(
    env: &Env,
    fd: &FoldData,
    lin: &Cot,
    fuel: u64,
) -> Result<Outcome<Cot>, EvalError> {
    wrap(TEval::new(fuel).eval_fold(env, lin, fd))
}

/// Apply a linear closure to a cotangent.
pub fn apply_closure(clos: &LinClos, c: &Cot, fuel: u64) -> Result<Outcome<Cot>, EvalError> {
    wrap(TEval::new(fuel).eval_lin(&clos.env, c, &clos.body))
}

/// Run a transformed program: evaluate the pair, then apply its cotangent
/// map to the given output cotangent.
pub fn run_transformed(
    env: &Env,
    term: &TgtTerm,
    cot: &Cot,
    fuel: u64,
) -> Result<(EvalOutcome, Option<Outcome<Cot>>), EvalError> {
    match wrap(TEval::new(fuel).eval_cart(env, term))? {
        Outcome::Defined(Value::Pair(primal, clos)) => {
            let Value::Clos(clos) = *clos else {
                return Err(EvalError("transformed pair has a non-closure cotangent".into()));
            };
            let g = apply_closure(&clos, cot, fuel)?;
            Ok((EvalOutcome::Defined(*primal), Some(g)))
        }
        Outcome::Defined(other) => {
            Err(EvalError(format!("transformed program produced a non-pair: {other:?}")))
        }
        Outcome::Undefined => Ok((EvalOutcome::Undefined, None)),
        Outcome::FuelExhausted(n) => Ok((EvalOutcome::FuelExhausted(n), None)),
    }
}
