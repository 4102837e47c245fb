//! Seeded generators of well-typed source terms, environments, and linear
//! target terms, used by the equational-law suites.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::rng::Rng;
use crate::syntax::{OpRef, SrcContext, SrcTerm, SrcType};
use crate::target::syntax::{LinType, TgtTerm};
use crate::value::{Env, Value};

pub fn gen_type(rng: &mut Rng, depth: usize) -> SrcType {
    gen_type_over(rng, &[1, 2, 3], depth)
}

/// Like `gen_type` but drawing real-array dimensions from the given set;
/// the complex-value generator needs types inhabited by context variables.
pub fn gen_type_over(rng: &mut Rng, dims: &[usize], depth: usize) -> SrcType {
    if depth == 0 {
        return SrcType::Real(dims[rng.below(dims.len())]);
    }
    match rng.below(6) {
        0 | 1 | 2 => SrcType::Real(dims[rng.below(dims.len())]),
        3 => SrcType::Unit,
        4 => {
            let n = 2 + rng.below(2);
            SrcType::Prod((0..n).map(|_| gen_type_over(rng, dims, depth - 1)).collect())
        }
        _ => SrcType::Sum(vec![
            gen_type_over(rng, dims, depth - 1),
            gen_type_over(rng, dims, depth - 1),
        ]),
    }
}

pub fn gen_value(rng: &mut Rng, ty: &SrcType) -> Value {
    match ty {
        SrcType::Real(n) => Value::Rv((0..*n).map(|_| rng.in_range(-3.0, 3.0)).collect()),
        SrcType::Unit => Value::Tup(vec![]),
        SrcType::Prod(ts) => Value::Tup(ts.iter().map(|t| gen_value(rng, t)).collect()),
        SrcType::Sum(ts) => {
            let i = rng.below(ts.len());
            Value::Inj(i + 1, Box::new(gen_value(rng, &ts[i])))
        }
        SrcType::Void => panic!("no values of the empty type"),
    }
}

pub fn gen_env(rng: &mut Rng, ctx: &SrcContext) -> Env {
    let mut env = Env::new();
    for (n, t) in &ctx.0 {
        env = env.with(n, gen_value(rng, t));
    }
    env
}

/// A context guaranteed to contain real variables of a few shapes, so the
/// term generator always has raw material.
pub fn gen_ctx(rng: &mut Rng) -> SrcContext {
    let mut ctx = SrcContext(vec![
        ("a".to_string(), SrcType::Real(1)),
        ("b".to_string(), SrcType::Real(1)),
        ("u".to_string(), SrcType::Real(2)),
    ]);
    let extra = rng.below(3);
    for i in 0..extra {
        ctx.0.push((format!("c{i}"), gen_type(rng, 1)));
    }
    ctx
}

fn vars_of(ctx: &SrcContext, ty: &SrcType) -> Vec<String> {
    ctx.0.iter().filter(|(_, t)| t == ty).map(|(n, _)| n.clone()).collect()
}

fn cnst(rng: &mut Rng, n: usize) -> SrcTerm {
    SrcTerm::Op(
        OpRef::with_params("cnst", (0..n).map(|_| rng.in_range(-2.0, 2.0)).collect()),
        vec![],
    )
}

/// A well-typed term of the given type. Partial primitives appear with
/// moderate probability, so generated programs may be undefined at some
/// inputs; loops come from a bounded halving template.
pub fn gen_term(rng: &mut Rng, ctx: &SrcContext, ty: &SrcType, depth: usize) -> SrcTerm {
    let vars = vars_of(ctx, ty);
    if depth == 0 {
        if !vars.is_empty() && rng.chance(0.7) {
            return SrcTerm::Var(vars[rng.below(vars.len())].clone());
        }
        return ground_term(rng, ctx, ty);
    }
    // General constructs available at any type.
    match rng.below(10) {
        0 => {
            let tb = gen_type(rng, 1);
            let bound = gen_term(rng, ctx, &tb, depth - 1);
            let x = fresh_name(rng, ctx);
            let mut ctx2 = ctx.clone();
            ctx2.0.push((x.clone(), tb));
            let body = gen_term(rng, &ctx2, ty, depth - 1);
            SrcTerm::Let(x, Box::new(bound), Box::new(body))
        }
        1 => {
            let ts = SrcType::Sum(vec![gen_type(rng, 1), gen_type(rng, 1)]);
            let scrut = gen_term(rng, ctx, &ts, depth - 1);
            let SrcType::Sum(summands) = &ts else { unreachable!() };
            let branches = summands
                .iter()
                .map(|s| {
                    let x = fresh_name(rng, ctx);
                    let mut ctx2 = ctx.clone();
                    ctx2.0.push((x.clone(), s.clone()));
                    (x, gen_term(rng, &ctx2, ty, depth - 1))
                })
                .collect();
            SrcTerm::SumMatch(Box::new(scrut), branches)
        }
        2 => {
            let tp = SrcType::Prod(vec![gen_type(rng, 1), gen_type(rng, 1)]);
            let scrut = gen_term(rng, ctx, &tp, depth - 1);
            let SrcType::Prod(comps) = &tp else { unreachable!() };
            let names: Vec<String> = comps.iter().map(|_| fresh_name(rng, ctx)).collect();
            let mut ctx2 = ctx.clone();
            for (n, c) in names.iter().zip(comps) {
                ctx2.0.push((n.clone(), c.clone()));
            }
            let body = gen_term(rng, &ctx2, ty, depth - 1);
            SrcTerm::ProdMatch(Box::new(scrut), names, Box::new(body))
        }
        3 if *ty == SrcType::Real(1) && rng.chance(0.5) => halving_loop(rng, ctx, depth),
        _ => typed_term(rng, ctx, ty, depth),
    }
}

fn fresh_name(rng: &mut Rng, ctx: &SrcContext) -> String {
    loop {
        let n = format!("v{}", rng.below(1000));
        if ctx.lookup(&n).is_none() {
            return n;
        }
    }
}

/// Leaf term of the requested type built without recursion.
fn ground_term(rng: &mut Rng, ctx: &SrcContext, ty: &SrcType) -> SrcTerm {
    match ty {
        SrcType::Real(n) => cnst(rng, *n),
        SrcType::Unit => SrcTerm::Tuple(vec![]),
        SrcType::Prod(ts) => {
            SrcTerm::Tuple(ts.iter().map(|t| ground_term(rng, ctx, t)).collect())
        }
        SrcType::Sum(ts) => {
            let i = rng.below(ts.len());
            SrcTerm::Inj(i + 1, Box::new(ground_term(rng, ctx, &ts[i])), ty.clone())
        }
        SrcType::Void => panic!("cannot build a term of the empty type"),
    }
}

fn typed_term(rng: &mut Rng, ctx: &SrcContext, ty: &SrcType, depth: usize) -> SrcTerm {
    match ty {
        SrcType::Real(n) => {
            let pick = rng.below(if *n == 1 { 8 } else { 6 });
            let sub = |rng: &mut Rng| gen_term(rng, ctx, &SrcType::Real(*n), depth - 1);
            match pick {
                0 => cnst(rng, *n),
                1 => SrcTerm::Op(OpRef::new("add"), vec![sub(rng), gen_term(rng, ctx, ty, depth - 1)]),
                2 => SrcTerm::Op(OpRef::new("mul"), vec![sub(rng), gen_term(rng, ctx, ty, depth - 1)]),
                3 => SrcTerm::Op(OpRef::new("normalize"), vec![sub(rng)]),
                4 if *n == 1 => {
                    let k = 1 + rng.below(3);
                    SrcTerm::Op(OpRef::new("sum"), vec![gen_term(rng, ctx, &SrcType::Real(k), depth - 1)])
                }
                4 => SrcTerm::Op(OpRef::new("add"), vec![sub(rng), gen_term(rng, ctx, ty, depth - 1)]),
                5 => {
                    let vars = vars_of(ctx, ty);
                    if vars.is_empty() {
                        cnst(rng, *n)
                    } else {
                        SrcTerm::Var(vars[rng.below(vars.len())].clone())
                    }
                }
                6 => SrcTerm::Op(OpRef::new("sigmoid"), vec![gen_term(rng, ctx, &SrcType::Real(1), depth - 1)]),
                _ => SrcTerm::Op(OpRef::new("recpr"), vec![gen_term(rng, ctx, &SrcType::Real(1), depth - 1)]),
            }
        }
        SrcType::Unit => SrcTerm::Tuple(vec![]),
        SrcType::Prod(ts) => {
            SrcTerm::Tuple(ts.iter().map(|t| gen_term(rng, ctx, t, depth - 1)).collect())
        }
        SrcType::Sum(ts) => {
            // sign/decider when the shape matches, otherwise an injection.
            if ts.len() == 2
                && ts[0] == SrcType::Real(1)
                && ts[1] == SrcType::Real(1)
                && rng.chance(0.4)
            {
                let arg = gen_term(rng, ctx, &SrcType::Real(1), depth - 1);
                if rng.chance(0.5) {
                    SrcTerm::Op(OpRef::new("sign"), vec![arg])
                } else {
                    let a = rng.in_range(-1.0, 1.0);
                    SrcTerm::Op(OpRef::with_params("decider", vec![a]), vec![arg])
                }
            } else {
                let i = rng.below(ts.len());
                SrcTerm::Inj(
                    i + 1,
                    Box::new(gen_term(rng, ctx, &ts[i], depth - 1)),
                    ty.clone(),
                )
            }
        }
        SrcType::Void => panic!("cannot build a term of the empty type"),
    }
}

/// A loop guaranteed to terminate everywhere but the decider threshold:
/// halve the state until it drops below 0.5.
fn halving_loop(rng: &mut Rng, ctx: &SrcContext, depth: usize) -> SrcTerm {
    let s = fresh_name(rng, ctx);
    let t = fresh_name(rng, ctx);
    let init = gen_term(rng, ctx, &SrcType::Real(1), depth - 1);
    let sum = SrcType::Sum(vec![SrcType::Real(1), SrcType::Real(1)]);
    let body = SrcTerm::SumMatch(
        Box::new(SrcTerm::Op(OpRef::with_params("decider", vec![0.5]), vec![SrcTerm::Var(s.clone())])),
        vec![
            (
                t.clone(),
                SrcTerm::Inj(
                    2,
                    Box::new(SrcTerm::Op(
                        OpRef::new("mul"),
                        vec![SrcTerm::Var(s.clone()), SrcTerm::Op(OpRef::with_params("cnst", vec![0.5]), vec![])],
                    )),
                    sum.clone(),
                ),
            ),
            (t, SrcTerm::Inj(1, Box::new(SrcTerm::Var(s.clone())), sum)),
        ],
    );
    SrcTerm::Let(
        s.clone(),
        Box::new(init),
        Box::new(SrcTerm::Iterate(s, Box::new(body))),
    )
}

/// A complex value: no primitive operations, no iteration.
pub fn gen_complex_value(rng: &mut Rng, ctx: &SrcContext, ty: &SrcType, depth: usize) -> SrcTerm {
    let vars = vars_of(ctx, ty);
    if !vars.is_empty() && (depth == 0 || rng.chance(0.5)) {
        return SrcTerm::Var(vars[rng.below(vars.len())].clone());
    }
    match ty {
        SrcType::Real(_) => {
            if vars.is_empty() {
                panic!("no real variable of the right shape in scope for a complex value")
            } else {
                SrcTerm::Var(vars[rng.below(vars.len())].clone())
            }
        }
        SrcType::Unit => SrcTerm::Tuple(vec![]),
        SrcType::Prod(ts) => SrcTerm::Tuple(
            ts.iter().map(|t| gen_complex_value(rng, ctx, t, depth.saturating_sub(1))).collect(),
        ),
        SrcType::Sum(ts) => {
            let i = rng.below(ts.len());
            SrcTerm::Inj(
                i + 1,
                Box::new(gen_complex_value(rng, ctx, &ts[i], depth.saturating_sub(1))),
                ty.clone(),
            )
        }
        SrcType::Void => panic!("cannot build a value of the empty type"),
    }
}

// ---------------------------------------------------------------------------
// Linear terms
// ---------------------------------------------------------------------------

/// Context and environment for the linear-term generator: real variables of
/// dimensions 1 and 2 sampled in-domain.
pub fn lin_fixture(rng: &mut Rng) -> (SrcContext, Env) {
    let ctx = SrcContext(vec![
        ("a".to_string(), SrcType::Real(1)),
        ("b".to_string(), SrcType::Real(1)),
        ("u".to_string(), SrcType::Real(2)),
    ]);
    let env = gen_env(rng, &ctx);
    (ctx, env)
}

pub fn gen_lin_type(rng: &mut Rng, depth: usize) -> LinType {
    if depth == 0 || rng.chance(0.6) {
        LinType::CReal(1 + rng.below(2))
    } else {
        let n = 2 + rng.below(2);
        LinType::Biprod((0..n).map(|_| gen_lin_type(rng, 0)).collect())
    }
}

/// Linear-op library entries compatible with the fixture context: the
/// linear input and output types of each transposed derivative.
fn lop_library() -> Vec<(OpRef, Vec<&'static str>, LinType, LinType)> {
    vec![
        (
            OpRef::new("mul"),
            vec!["a", "b"],
            LinType::CReal(1),
            LinType::Biprod(vec![LinType::CReal(1), LinType::CReal(1)]),
        ),
        (
            OpRef::new("add"),
            vec!["a", "b"],
            LinType::CReal(1),
            LinType::Biprod(vec![LinType::CReal(1), LinType::CReal(1)]),
        ),
        (OpRef::new("sigmoid"), vec!["a"], LinType::CReal(1), LinType::CReal(1)),
        (OpRef::new("recpr"), vec!["a"], LinType::CReal(1), LinType::CReal(1)),
        (OpRef::new("norm"), vec!["u"], LinType::CReal(1), LinType::CReal(2)),
        (OpRef::new("normalize"), vec!["u"], LinType::CReal(2), LinType::CReal(2)),
        (OpRef::new("sum"), vec!["u"], LinType::CReal(1), LinType::CReal(2)),
        (
            OpRef::new("mul"),
            vec!["u", "u"],
            LinType::CReal(2),
            LinType::Biprod(vec![LinType::CReal(2), LinType::CReal(2)]),
        ),
    ]
}

/// Shape-level test for whether the bidirectional checker can synthesize a
/// type for a linear term (checked forms like zero and abstraction cannot).
pub fn lin_synthable(t: &TgtTerm) -> bool {
    match t {
        TgtTerm::Zero | TgtTerm::LinAbs(_) | TgtTerm::Pair(..) => false,
        TgtTerm::LinVar | TgtTerm::LOp(..) | TgtTerm::Var(_) => true,
        TgtTerm::Plus(a, b) => lin_synthable(a) || lin_synthable(b),
        TgtTerm::LinTuple(ts) => ts.iter().all(lin_synthable),
        TgtTerm::LinLet(a, b) => lin_synthable(a) && lin_synthable(b),
        TgtTerm::LinProj(_, a) => lin_synthable(a),
        TgtTerm::LinApp(f, _) => matches!(**f, TgtTerm::Var(_)),
        _ => false,
    }
}

/// A linear term with linear variable of type `in_ty` and result `out_ty`.
pub fn gen_lin_term(rng: &mut Rng, in_ty: &LinType, out_ty: &LinType, depth: usize) -> TgtTerm {
    if depth == 0 {
        if in_ty == out_ty {
            return TgtTerm::LinVar;
        }
        return TgtTerm::Zero;
    }
    let lib: Vec<_> = lop_library().into_iter().filter(|(_, _, _, o)| o == out_ty).collect();
    let mut options: Vec<u8> = vec![0, 1, 2];
    if in_ty == out_ty {
        options.push(3);
        options.push(3);
    }
    if let LinType::Biprod(_) = out_ty {
        options.push(4);
    }
    if !lib.is_empty() {
        options.push(5);
        options.push(5);
    }
    if let LinType::Biprod(parts) = in_ty {
        if parts.contains(out_ty) {
            options.push(6);
        }
    }
    match options[rng.below(options.len())] {
        0 => {
            // route through an intermediate type; the bound term must be
            // synthesizable for the checker to type the body
            let mid = if rng.chance(0.5) { in_ty.clone() } else { gen_lin_type(rng, 1) };
            let mut first = gen_lin_term(rng, in_ty, &mid, depth - 1);
            if !lin_synthable(&first) {
                if &mid == in_ty {
                    first = TgtTerm::Plus(Box::new(TgtTerm::LinVar), Box::new(first));
                } else {
                    return gen_lin_term(rng, in_ty, out_ty, depth - 1);
                }
            }
            let second = gen_lin_term(rng, &mid, out_ty, depth - 1);
            TgtTerm::LinLet(Box::new(first), Box::new(second))
        }
        1 => TgtTerm::Plus(
            Box::new(gen_lin_term(rng, in_ty, out_ty, depth - 1)),
            Box::new(gen_lin_term(rng, in_ty, out_ty, depth - 1)),
        ),
        2 => {
            // abstraction applied to an argument; the checker types the
            // abstraction from the argument, so the argument must be
            // synthesizable
            let mid = if rng.chance(0.5) { in_ty.clone() } else { gen_lin_type(rng, 0) };
            let body = gen_lin_term(rng, &mid, out_ty, depth - 1);
            let mut arg = gen_lin_term(rng, in_ty, &mid, depth - 1);
            if !lin_synthable(&arg) {
                if &mid == in_ty {
                    arg = TgtTerm::Plus(Box::new(TgtTerm::LinVar), Box::new(arg));
                } else {
                    return gen_lin_term(rng, in_ty, out_ty, depth - 1);
                }
            }
            TgtTerm::LinApp(Box::new(TgtTerm::LinAbs(Box::new(body))), Box::new(arg))
        }
        3 => TgtTerm::LinVar,
        4 => {
            let LinType::Biprod(parts) = out_ty else { unreachable!() };
            TgtTerm::LinTuple(
                parts.iter().map(|p| gen_lin_term(rng, in_ty, p, depth - 1)).collect(),
            )
        }
        5 => {
            let (op, args, lin_in, _) = lib[rng.below(lib.len())].clone();
            let arg_terms = args.iter().map(|a| TgtTerm::Var(a.to_string())).collect();
            let lin_arg = gen_lin_term(rng, in_ty, &lin_in, depth - 1);
            TgtTerm::LOp(op, arg_terms, Box::new(lin_arg))
        }
        _ => {
            let LinType::Biprod(parts) = in_ty else { unreachable!() };
            let candidates: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|(_, p)| *p == out_ty)
                .map(|(i, _)| i)
                .collect();
            let i = candidates[rng.below(candidates.len())];
            TgtTerm::LinProj(i + 1, Box::new(TgtTerm::LinVar))
        }
    }
}

/// A cotangent value shaped by a linear type (type-case-free fragment).
pub fn gen_cot(rng: &mut Rng, ty: &LinType) -> crate::value::Cot {
    use crate::value::Cot;
    match ty {
        LinType::CReal(n) => Cot::Vec((0..*n).map(|_| rng.in_range(-2.0, 2.0)).collect()),
        LinType::LUnit => Cot::Unit,
        LinType::Biprod(ts) => Cot::Tuple(ts.iter().map(|t| gen_cot(rng, t)).collect()),
        LinType::TypeCase(..) => Cot::Zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typecheck::typecheck_source_shadowing;

    #[test]
    fn generated_terms_are_well_typed() {
        let mut rng = Rng::new(11);
        for _ in 0..200 {
            let ctx = gen_ctx(&mut rng);
            let ty = gen_type(&mut rng, 2);
            let t = gen_term(&mut rng, &ctx, &ty, 3);
            let got = typecheck_source_shadowing(&ctx, &t)
                .unwrap_or_else(|e| panic!("generated ill-typed term: {e}\n{t:?}"));
            assert_eq!(got, ty);
        }
    }

    #[test]
    fn generated_values_are_complex_values() {
        let mut rng = Rng::new(12);
        for _ in 0..100 {
            let ctx = gen_ctx(&mut rng);
            let ty = gen_type_over(&mut rng, &[1, 2], 2);
            let v = gen_complex_value(&mut rng, &ctx, &ty, 2);
            assert!(crate::syntax::is_complex_value(&v));
            assert_eq!(typecheck_source_shadowing(&ctx, &v).unwrap(), ty);
        }
    }

    #[test]
    fn generated_linear_terms_typecheck() {
        use crate::target::typeck::{check_target, TgtType};
        let mut rng = Rng::new(13);
        for _ in 0..200 {
            let (ctx, _) = lin_fixture(&mut rng);
            let cart: Vec<_> = ctx
                .0
                .iter()
                .map(|(n, t)| (n.clone(), crate::target::syntax::CartType::from(t)))
                .collect();
            let in_ty = gen_lin_type(&mut rng, 1);
            let out_ty = gen_lin_type(&mut rng, 1);
            let t = gen_lin_term(&mut rng, &in_ty, &out_ty, 3);
            let r = check_target(&cart, Some(&in_ty), &t, &TgtType::Lin(out_ty.clone()));
            assert!(r.is_ok(), "{r:?}\n{t:?}");
        }
    }
}
