//! Call-by-value evaluator for source terms, realizing the concrete
//! semantics into partially defined functions with fuel-bounded iteration.
//!
//! Fuel counts loop-body evaluations, summed across all (possibly nested)
//! iterate constructs: the least-fixed-point semantics is a colimit of
//! finite unrollings, and fuel is its computable truncation.

use alloc::string::ToString;
use alloc::vec::Vec;
use alloc::format;
#[cfg(test)]
use alloc::vec;

use crate::prim::{self, PrimalResult};
use crate::syntax::SrcTerm;
use crate::value::{Env, EvalError, EvalOutcome, Trace, Value};

/// Control flow during evaluation: semantic bottom variants plus internal
/// errors, threaded with `?`.
#[derive(Clone, Debug, PartialEq)]
pub enum Flow {
    Undefined,
    Fuel(u64),
    Bug(EvalError),
}

impl From<EvalError> for Flow {
    fn from(e: EvalError) -> Flow {
        Flow::Bug(e)
    }
}

pub type EvalR<T> = Result<T, Flow>;

pub struct Evaluator {
    fuel: u64,
    pub used: u64,
    /// Hash of every branch decision taken (partial-op branches, case
    /// dispatch, loop exit/continue): the realized control path. Probing
    /// evaluations compare signatures to detect crossings that are not
    /// visible in the output type.
    pub path_sig: u64,
}

impl Evaluator {
    pub fn new(fuel: u64) -> Self {
        Evaluator { fuel, used: 0, path_sig: 0xcbf29ce484222325 }
    }

    fn note_branch(&mut self, i: usize) {
        self.path_sig = (self.path_sig ^ (i as u64 + 1)).wrapping_mul(0x100000001b3);
    }

    /// Account one loop-body evaluation against the shared budget.
    pub fn tick(&mut self) -> EvalR<()> {
        if self.used >= self.fuel {
            return Err(Flow::Fuel(self.used));
        }
        self.used += 1;
        Ok(())
    }

    pub fn eval(&mut self, env: &Env, term: &SrcTerm) -> EvalR<Value> {
        match term {
            SrcTerm::Var(x) => env
                .get(x)
                .cloned()
                .ok_or_else(|| Flow::Bug(EvalError(format!("unbound variable `{x}`")))),
            SrcTerm::Op(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match self.eval(env, a)? {
                        Value::Rv(v) => vals.push(v),
                        other => {
                            return Err(Flow::Bug(EvalError(format!(
                                "op argument is not a real vector: {other:?}"
                            ))))
                        }
                    }
                }
                let r = apply_op(op, vals)?;
                if let Value::Inj(i, _) = &r {
                    self.note_branch(*i);
                }
                Ok(r)
            }
            SrcTerm::Let(x, bound, body) => {
                let v = self.eval(env, bound)?;
                self.eval(&env.with(x, v), body)
            }
            SrcTerm::Inj(i, payload, _) => {
                let v = self.eval(env, payload)?;
                Ok(Value::Inj(*i, alloc::boxed::Box::new(v)))
            }
            SrcTerm::SumMatch(scrut, branches) => {
                let v = self.eval(env, scrut)?;
                let Value::Inj(i, payload) = v else {
                    return Err(Flow::Bug(EvalError("case scrutinee is not an injection".into())));
                };
                self.note_branch(i);
                let Some((x, body)) = branches.get(i - 1) else {
                    return Err(Flow::Bug(EvalError(format!("branch {i} out of range"))));
                };
                self.eval(&env.with(x, *payload), body)
            }
            SrcTerm::Tuple(ts) => {
                let mut vs = Vec::with_capacity(ts.len());
                for t in ts {
                    vs.push(self.eval(env, t)?);
                }
                Ok(Value::Tup(vs))
            }
            SrcTerm::ProdMatch(scrut, names, body) => {
                let v = self.eval(env, scrut)?;
                let Value::Tup(vs) = v else {
                    return Err(Flow::Bug(EvalError("match scrutinee is not a tuple".into())));
                };
                if vs.len() != names.len() {
                    return Err(Flow::Bug(EvalError("match arity mismatch".into())));
                }
                let mut env2 = env.clone();
                for (n, v) in names.iter().zip(vs) {
                    env2 = env2.with(n, v);
                }
                self.eval(&env2, body)
            }
            SrcTerm::Iterate(x, body) => {
                let start = env
                    .get(x)
                    .cloned()
                    .ok_or_else(|| Flow::Bug(EvalError(format!("unbound loop variable `{x}`"))))?;
                self.run_loop(env, x, body, start, None)
            }
        }
    }

    /// Run a loop from `start`, optionally recording the visited states.
    pub fn run_loop(
        &mut self,
        env: &Env,
        x: &str,
        body: &SrcTerm,
        start: Value,
        mut trace: Option<&mut Trace>,
    ) -> EvalR<Value> {
        let mut state = start;
        loop {
            if let Some(t) = trace.as_deref_mut() {
                t.states.push(state.clone());
            }
            match self.tick() {
                Ok(()) => {}
                Err(f) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.states.pop();
                        t.exhausted = true;
                    }
                    return Err(f);
                }
            }
            let v = self.eval(&env.with(x, state), body)?;
            match v {
                Value::Inj(1, payload) => {
                    self.note_branch(1);
                    if let Some(t) = trace.as_deref_mut() {
                        t.exit = Some((*payload).clone());
                    }
                    return Ok(*payload);
                }
                Value::Inj(2, next) => {
                    self.note_branch(2);
                    state = *next;
                }
                other => {
                    return Err(Flow::Bug(EvalError(format!(
                        "loop body produced a non-injection: {other:?}"
                    ))))
                }
            }
        }
    }
}

pub fn apply_op(op: &crate::syntax::OpRef, vals: Vec<Vec<f64>>) -> EvalR<Value> {
    let dims: Vec<usize> = vals.iter().map(Vec::len).collect();
    let desc = prim::resolve(op, &dims).map_err(|e| Flow::Bug(EvalError(e.to_string())))?;
    match prim::primal_apply(&desc, &vals).map_err(|e| Flow::Bug(EvalError(e.to_string())))? {
        PrimalResult::Undefined => Err(Flow::Undefined),
        PrimalResult::Defined(branch, out) => {
            if desc.out_dims.len() == 1 {
                Ok(Value::Rv(out))
            } else {
                Ok(Value::Inj(branch, alloc::boxed::Box::new(Value::Rv(out))))
            }
        }
    }
}

fn wrap(r: EvalR<Value>) -> Result<EvalOutcome, EvalError> {
    match r {
        Ok(v) => Ok(EvalOutcome::Defined(v)),
        Err(Flow::Undefined) => Ok(EvalOutcome::Undefined),
        Err(Flow::Fuel(n)) => Ok(EvalOutcome::FuelExhausted(n)),
        Err(Flow::Bug(e)) => Err(e),
    }
}

/// Evaluate a term under an environment covering its free variables.
pub fn eval(env: &Env, term: &SrcTerm, fuel: u64) -> Result<EvalOutcome, EvalError> {
    wrap(Evaluator::new(fuel).eval(env, term))
}

/// Evaluate and also report the control-path signature of the run.
pub fn eval_with_path(
    env: &Env,
    term: &SrcTerm,
    fuel: u64,
) -> Result<(EvalOutcome, u64), EvalError> {
    let mut ev = Evaluator::new(fuel);
    let r = ev.eval(env, term);
    Ok((wrap(r)?, ev.path_sig))
}

/// Evaluate a loop directly, returning the outcome together with the trace
/// of visited states.
pub fn eval_iterate(
    env: &Env,
    loop_var: &str,
    body: &SrcTerm,
    start: Value,
    fuel: u64,
) -> Result<(EvalOutcome, Trace), EvalError> {
    let mut tr = Trace::default();
    let mut ev = Evaluator::new(fuel);
    let r = ev.run_loop(env, loop_var, body, start, Some(&mut tr));
    Ok((wrap(r)?, tr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;
    use crate::syntax::*;
    use alloc::boxed::Box;

    fn env1(name: &str, v: Vec<f64>) -> Env {
        Env::new().with(name, Value::Rv(v))
    }

    #[test]
    fn square_at_two() {
        let t = SrcTerm::Op(OpRef::new("mul"), vec![var("x"), var("x")]);
        assert_eq!(
            eval(&env1("x", vec![2.0]), &t, 1000).unwrap(),
            EvalOutcome::Defined(Value::Rv(vec![4.0]))
        );
    }

    #[test]
    fn recpr_at_zero_is_undefined() {
        let t = SrcTerm::Op(OpRef::new("recpr"), vec![var("x")]);
        assert_eq!(eval(&env1("x", vec![0.0]), &t, 1000).unwrap(), EvalOutcome::Undefined);
    }

    fn halving_def() -> SrcDef {
        parse_source(
            "def halve (x: real 1) : real 1 = iterate y from x { \
               case op decider[1] (y) of \
                 in1 z => in2 (op mul (z, op cnst[0.5] ())) : real 1 + real 1 \
               | in2 z => in1 z : real 1 + real 1 }",
        )
        .unwrap()
    }

    #[test]
    fn halving_loop_at_8_3() {
        // Brute-force unrolling: 8.3 -> 4.15 -> 2.075 -> 1.0375 -> 0.51875,
        // which exits since 0.51875 < 1. Halving is exact in binary floating
        // point, so the comparison is bitwise.
        let d = halving_def();
        assert_eq!(
            eval(&env1("x", vec![8.3]), &d.body, 1000).unwrap(),
            EvalOutcome::Defined(Value::Rv(vec![8.3 / 16.0]))
        );
        assert_eq!(8.3 / 16.0, 0.51875);
    }

    #[test]
    fn halving_loop_at_8_hits_decider_gap() {
        // 8 -> 4 -> 2 -> 1 lands exactly on the decider threshold.
        let d = halving_def();
        assert_eq!(eval(&env1("x", vec![8.0]), &d.body, 1000).unwrap(), EvalOutcome::Undefined);
    }

    #[test]
    fn zero_iteration_loop() {
        // body immediately exits with the state
        let body = SrcTerm::Inj(1, Box::new(var("y")), sum2(real(1), real(1)));
        let (out, tr) =
            eval_iterate(&env1("y", vec![7.0]), "y", &body, Value::Rv(vec![7.0]), 100).unwrap();
        assert_eq!(out, EvalOutcome::Defined(Value::Rv(vec![7.0])));
        assert_eq!(tr.states, vec![Value::Rv(vec![7.0])]);
        assert_eq!(tr.exit, Some(Value::Rv(vec![7.0])));
    }

    #[test]
    fn forever_loop_exhausts_fuel() {
        let body = SrcTerm::Inj(2, Box::new(var("y")), sum2(real(1), real(1)));
        let (out, tr) =
            eval_iterate(&env1("y", vec![0.0]), "y", &body, Value::Rv(vec![0.0]), 50).unwrap();
        assert_eq!(out, EvalOutcome::FuelExhausted(50));
        assert!(tr.exhausted);
    }

    #[test]
    fn undefined_mid_loop_keeps_trace() {
        // First step continues with x-1; second step hits recpr(0).
        // state 2.0 -> recpr(2-2)? Use decider to route: simpler, apply recpr(y-1)
        // at y=1 after one halving from 2. Build directly:
        // body = in2 (recpr (add (y, cnst[-1]))) when y=2 gives recpr(1)=1, then
        // at y=1 gives recpr(0) undefined.
        let body = SrcTerm::Inj(
            2,
            Box::new(SrcTerm::Op(
                OpRef::new("recpr"),
                vec![SrcTerm::Op(
                    OpRef::new("add"),
                    vec![var("y"), SrcTerm::Op(OpRef::with_params("cnst", vec![-1.0]), vec![])],
                )],
            )),
            sum2(real(1), real(1)),
        );
        let (out, tr) =
            eval_iterate(&env1("y", vec![2.0]), "y", &body, Value::Rv(vec![2.0]), 100).unwrap();
        assert_eq!(out, EvalOutcome::Undefined);
        assert_eq!(tr.states.len(), 2);
    }

    #[test]
    fn fuel_monotonicity_on_halving() {
        let d = halving_def();
        let lo = eval(&env1("x", vec![8.3]), &d.body, 5).unwrap();
        let hi = eval(&env1("x", vec![8.3]), &d.body, 50000).unwrap();
        assert_eq!(lo, hi);
        // With insufficient fuel the loop reports exhaustion instead.
        let starved = eval(&env1("x", vec![8.3]), &d.body, 3).unwrap();
        assert_eq!(starved, EvalOutcome::FuelExhausted(3));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let d = halving_def();
        let a = eval(&env1("x", vec![8.3]), &d.body, 1000).unwrap();
        let b = eval(&env1("x", vec![8.3]), &d.body, 1000).unwrap();
        assert_eq!(a, b);
    }
}
