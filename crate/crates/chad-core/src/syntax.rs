//! Abstract syntax for the source language: real-array ground types, n-ary
//! products and sums, let sequencing, primitive operations and iteration.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

/// Reference to a primitive operation, together with its real-literal
/// parameters (`cnst[2.5]`, `decider[0.0]`). Parameter-free ops have an
/// empty parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct OpRef {
    pub base: String,
    pub params: Vec<f64>,
}

impl OpRef {
    pub fn new(base: &str) -> Self {
        OpRef { base: base.to_string(), params: Vec::new() }
    }

    pub fn with_params(base: &str, params: Vec<f64>) -> Self {
        OpRef { base: base.to_string(), params }
    }
}

/// Types of the source language.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SrcType {
    /// Real array of static dimension `n >= 1`.
    Real(usize),
    /// Nullary product.
    Unit,
    /// n-ary product, `n >= 2`.
    Prod(Vec<SrcType>),
    /// Nullary sum.
    Void,
    /// n-ary sum, `n >= 2`.
    Sum(Vec<SrcType>),
}

impl SrcType {
    pub fn is_well_formed(&self) -> bool {
        match self {
            SrcType::Real(n) => *n >= 1,
            SrcType::Unit | SrcType::Void => true,
            SrcType::Prod(ts) | SrcType::Sum(ts) => {
                ts.len() >= 2 && ts.iter().all(SrcType::is_well_formed)
            }
        }
    }

    /// Dimension of the flattened Euclidean shadow, if the type is sum-free.
    pub fn flat_dim(&self) -> Option<usize> {
        match self {
            SrcType::Real(n) => Some(*n),
            SrcType::Unit => Some(0),
            SrcType::Prod(ts) => ts.iter().map(SrcType::flat_dim).sum(),
            SrcType::Void | SrcType::Sum(_) => None,
        }
    }
}

/// Terms of the source language.
///
/// `Iterate(x, body)` loops `body : sigma + tau` from the current value of
/// the (free) variable `x : tau`; `in1` exits with the result, `in2`
/// continues with the next state.
#[derive(Clone, Debug, PartialEq)]
pub enum SrcTerm {
    Var(String),
    Op(OpRef, Vec<SrcTerm>),
    Let(String, Box<SrcTerm>, Box<SrcTerm>),
    /// 1-based injection into the annotated sum type.
    Inj(usize, Box<SrcTerm>, SrcType),
    SumMatch(Box<SrcTerm>, Vec<(String, SrcTerm)>),
    Tuple(Vec<SrcTerm>),
    ProdMatch(Box<SrcTerm>, Vec<String>, Box<SrcTerm>),
    Iterate(String, Box<SrcTerm>),
}

/// Ordered typing context; names are distinct.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SrcContext(pub Vec<(String, SrcType)>);

impl SrcContext {
    pub fn new() -> Self {
        SrcContext(Vec::new())
    }

    pub fn lookup(&self, name: &str) -> Option<&SrcType> {
        self.0.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn is_well_formed(&self) -> bool {
        for (i, (n, t)) in self.0.iter().enumerate() {
            if !t.is_well_formed() || self.0[..i].iter().any(|(m, _)| m == n) {
                return false;
            }
        }
        true
    }
}

/// A parsed top-level declaration `def f (x1: T1, ...) : S = t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SrcDef {
    pub name: String,
    pub ctx: SrcContext,
    pub ret: SrcType,
    pub body: SrcTerm,
}

impl SrcTerm {
    pub fn free_vars(&self) -> Vec<String> {
        let mut acc = Vec::new();
        self.free_vars_into(&mut Vec::new(), &mut acc);
        acc
    }

    fn free_vars_into(&self, bound: &mut Vec<String>, acc: &mut Vec<String>) {
        match self {
            SrcTerm::Var(x) => {
                if !bound.iter().any(|b| b == x) && !acc.iter().any(|a| a == x) {
                    acc.push(x.clone());
                }
            }
            SrcTerm::Op(_, args) => {
                for a in args {
                    a.free_vars_into(bound, acc);
                }
            }
            SrcTerm::Let(x, t, s) => {
                t.free_vars_into(bound, acc);
                bound.push(x.clone());
                s.free_vars_into(bound, acc);
                bound.pop();
            }
            SrcTerm::Inj(_, t, _) => t.free_vars_into(bound, acc),
            SrcTerm::SumMatch(scrut, branches) => {
                scrut.free_vars_into(bound, acc);
                for (x, t) in branches {
                    bound.push(x.clone());
                    t.free_vars_into(bound, acc);
                    bound.pop();
                }
            }
            SrcTerm::Tuple(ts) => {
                for t in ts {
                    t.free_vars_into(bound, acc);
                }
            }
            SrcTerm::ProdMatch(scrut, names, body) => {
                scrut.free_vars_into(bound, acc);
                let n = names.len();
                bound.extend(names.iter().cloned());
                body.free_vars_into(bound, acc);
                bound.truncate(bound.len() - n);
            }
            SrcTerm::Iterate(x, body) => {
                // The loop variable is free: it supplies the initial state.
                if !bound.iter().any(|b| b == x) && !acc.iter().any(|a| a == x) {
                    acc.push(x.clone());
                }
                bound.push(x.clone());
                body.free_vars_into(bound, acc);
                bound.pop();
            }
        }
    }

    /// All names occurring anywhere (free or bound); used by fresh-name supplies.
    pub fn all_names(&self, acc: &mut Vec<String>) {
        let push = |n: &String, acc: &mut Vec<String>| {
            if !acc.iter().any(|a| a == n) {
                acc.push(n.clone());
            }
        };
        match self {
            SrcTerm::Var(x) => push(x, acc),
            SrcTerm::Op(_, args) => args.iter().for_each(|a| a.all_names(acc)),
            SrcTerm::Let(x, t, s) => {
                push(x, acc);
                t.all_names(acc);
                s.all_names(acc);
            }
            SrcTerm::Inj(_, t, _) => t.all_names(acc),
            SrcTerm::SumMatch(scrut, branches) => {
                scrut.all_names(acc);
                for (x, t) in branches {
                    push(x, acc);
                    t.all_names(acc);
                }
            }
            SrcTerm::Tuple(ts) => ts.iter().for_each(|t| t.all_names(acc)),
            SrcTerm::ProdMatch(scrut, names, body) => {
                scrut.all_names(acc);
                names.iter().for_each(|n| push(n, acc));
                body.all_names(acc);
            }
            SrcTerm::Iterate(x, body) => {
                push(x, acc);
                body.all_names(acc);
            }
        }
    }
}

/// Deterministic fresh-name supply that avoids a reserved set.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    taken: Vec<String>,
    counter: usize,
}

impl NameSupply {
    pub fn new(taken: Vec<String>) -> Self {
        NameSupply { taken, counter: 0 }
    }

    pub fn for_term(term: &SrcTerm, extra: &[String]) -> Self {
        let mut taken = Vec::new();
        term.all_names(&mut taken);
        for e in extra {
            if !taken.iter().any(|t| t == e) {
                taken.push(e.clone());
            }
        }
        NameSupply::new(taken)
    }

    pub fn fresh(&mut self, hint: &str) -> String {
        loop {
            let candidate = format!("{}{}", hint, self.counter);
            self.counter += 1;
            if !self.taken.iter().any(|t| t == &candidate) {
                self.taken.push(candidate.clone());
                return candidate;
            }
        }
    }

    pub fn reserve(&mut self, name: &str) {
        if !self.taken.iter().any(|t| t == name) {
            self.taken.push(name.to_string());
        }
    }
}

/// Capture-avoiding substitution `term[replacement / name]`. Bound variables
/// are freshened on demand when they would capture free variables of the
/// replacement.
pub fn subst(term: &SrcTerm, name: &str, replacement: &SrcTerm) -> SrcTerm {
    let repl_free = replacement.free_vars();
    let mut supply = NameSupply::for_term(term, &repl_free);
    supply.reserve(name);
    subst_go(term, name, replacement, &repl_free, &mut supply)
}

fn subst_go(
    term: &SrcTerm,
    name: &str,
    repl: &SrcTerm,
    repl_free: &[String],
    supply: &mut NameSupply,
) -> SrcTerm {
    match term {
        SrcTerm::Var(x) => {
            if x == name {
                repl.clone()
            } else {
                term.clone()
            }
        }
        SrcTerm::Op(op, args) => SrcTerm::Op(
            op.clone(),
            args.iter().map(|a| subst_go(a, name, repl, repl_free, supply)).collect(),
        ),
        SrcTerm::Let(x, t, s) => {
            let t2 = subst_go(t, name, repl, repl_free, supply);
            if x == name {
                SrcTerm::Let(x.clone(), Box::new(t2), s.clone())
            } else if repl_free.iter().any(|f| f == x) {
                let x2 = supply.fresh(x);
                let s_renamed = subst(s, x, &SrcTerm::Var(x2.clone()));
                let s2 = subst_go(&s_renamed, name, repl, repl_free, supply);
                SrcTerm::Let(x2, Box::new(t2), Box::new(s2))
            } else {
                SrcTerm::Let(x.clone(), Box::new(t2), Box::new(subst_go(s, name, repl, repl_free, supply)))
            }
        }
        SrcTerm::Inj(i, t, ty) => {
            SrcTerm::Inj(*i, Box::new(subst_go(t, name, repl, repl_free, supply)), ty.clone())
        }
        SrcTerm::SumMatch(scrut, branches) => {
            let scrut2 = subst_go(scrut, name, repl, repl_free, supply);
            let branches2 = branches
                .iter()
                .map(|(x, t)| {
                    if x == name {
                        (x.clone(), t.clone())
                    } else if repl_free.iter().any(|f| f == x) {
                        let x2 = supply.fresh(x);
                        let t_renamed = subst(t, x, &SrcTerm::Var(x2.clone()));
                        (x2, subst_go(&t_renamed, name, repl, repl_free, supply))
                    } else {
                        (x.clone(), subst_go(t, name, repl, repl_free, supply))
                    }
                })
                .collect();
            SrcTerm::SumMatch(Box::new(scrut2), branches2)
        }
        SrcTerm::Tuple(ts) => SrcTerm::Tuple(
            ts.iter().map(|t| subst_go(t, name, repl, repl_free, supply)).collect(),
        ),
        SrcTerm::ProdMatch(scrut, names, body) => {
            let scrut2 = subst_go(scrut, name, repl, repl_free, supply);
            if names.iter().any(|x| x == name) {
                SrcTerm::ProdMatch(Box::new(scrut2), names.clone(), body.clone())
            } else {
                let mut names2 = names.clone();
                let mut body2 = (**body).clone();
                for idx in 0..names2.len() {
                    if repl_free.iter().any(|f| f == &names2[idx]) {
                        let fresh = supply.fresh(&names2[idx]);
                        body2 = subst(&body2, &names2[idx], &SrcTerm::Var(fresh.clone()));
                        names2[idx] = fresh;
                    }
                }
                let body3 = subst_go(&body2, name, repl, repl_free, supply);
                SrcTerm::ProdMatch(Box::new(scrut2), names2, Box::new(body3))
            }
        }
        SrcTerm::Iterate(x, body) => {
            // The free occurrence of the loop variable is substitutable only
            // when the replacement is itself a variable (renaming); the loop
            // header has no expression slot to receive a general term.
            if x == name {
                match repl {
                    SrcTerm::Var(y) => {
                        let body2 = subst(body, x, &SrcTerm::Var(y.clone()));
                        SrcTerm::Iterate(y.clone(), Box::new(body2))
                    }
                    _ => term.clone(),
                }
            } else if repl_free.iter().any(|f| f == x) {
                let x2 = supply.fresh(x);
                let body_renamed = subst(body, x, &SrcTerm::Var(x2.clone()));
                // Renaming the binder also renames the free header occurrence,
                // so the header variable must be rebound outside.
                SrcTerm::Let(
                    x2.clone(),
                    Box::new(SrcTerm::Var(name.to_string())),
                    Box::new(SrcTerm::Iterate(x2.clone(), Box::new(subst_go(&body_renamed, name, repl, repl_free, supply)))),
                )
            } else {
                SrcTerm::Iterate(x.clone(), Box::new(subst_go(body, name, repl, repl_free, supply)))
            }
        }
    }
}

/// Alpha-equivalence of source terms.
pub fn alpha_eq(a: &SrcTerm, b: &SrcTerm) -> bool {
    alpha_eq_go(a, b, &mut Vec::new())
}

fn lookup_pair(env: &[(String, String)], x: &str) -> Option<usize> {
    env.iter().rposition(|(l, _)| l == x)
}

fn vars_match(env: &[(String, String)], x: &str, y: &str) -> bool {
    match (lookup_pair(env, x), env.iter().rposition(|(_, r)| r == y)) {
        (Some(i), Some(j)) => i == j && env[i].1 == y,
        (None, None) => x == y,
        _ => false,
    }
}

fn alpha_eq_go(a: &SrcTerm, b: &SrcTerm, env: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (SrcTerm::Var(x), SrcTerm::Var(y)) => vars_match(env, x, y),
        (SrcTerm::Op(o1, a1), SrcTerm::Op(o2, a2)) => {
            o1 == o2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(s, t)| alpha_eq_go(s, t, env))
        }
        (SrcTerm::Let(x, t1, s1), SrcTerm::Let(y, t2, s2)) => {
            if !alpha_eq_go(t1, t2, env) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let r = alpha_eq_go(s1, s2, env);
            env.pop();
            r
        }
        (SrcTerm::Inj(i, t1, ty1), SrcTerm::Inj(j, t2, ty2)) => {
            i == j && ty1 == ty2 && alpha_eq_go(t1, t2, env)
        }
        (SrcTerm::SumMatch(s1, b1), SrcTerm::SumMatch(s2, b2)) => {
            if b1.len() != b2.len() || !alpha_eq_go(s1, s2, env) {
                return false;
            }
            b1.iter().zip(b2).all(|((x, t1), (y, t2))| {
                env.push((x.clone(), y.clone()));
                let r = alpha_eq_go(t1, t2, env);
                env.pop();
                r
            })
        }
        (SrcTerm::Tuple(t1), SrcTerm::Tuple(t2)) => {
            t1.len() == t2.len() && t1.iter().zip(t2).all(|(s, t)| alpha_eq_go(s, t, env))
        }
        (SrcTerm::ProdMatch(s1, n1, t1), SrcTerm::ProdMatch(s2, n2, t2)) => {
            if n1.len() != n2.len() || !alpha_eq_go(s1, s2, env) {
                return false;
            }
            for (x, y) in n1.iter().zip(n2) {
                env.push((x.clone(), y.clone()));
            }
            let r = alpha_eq_go(t1, t2, env);
            env.truncate(env.len() - n1.len());
            r
        }
        (SrcTerm::Iterate(x, t1), SrcTerm::Iterate(y, t2)) => {
            if !vars_match(env, x, y) {
                return false;
            }
            env.push((x.clone(), y.clone()));
            let r = alpha_eq_go(t1, t2, env);
            env.pop();
            r
        }
        _ => false,
    }
}

/// Complex values: computations free of primitive operations and iteration.
/// These are the terms the beta-rules may substitute.
pub fn is_complex_value(term: &SrcTerm) -> bool {
    match term {
        SrcTerm::Var(_) => true,
        SrcTerm::Op(_, _) | SrcTerm::Iterate(_, _) => false,
        SrcTerm::Let(_, t, s) => is_complex_value(t) && is_complex_value(s),
        SrcTerm::Inj(_, t, _) => is_complex_value(t),
        SrcTerm::SumMatch(s, bs) => {
            is_complex_value(s) && bs.iter().all(|(_, t)| is_complex_value(t))
        }
        SrcTerm::Tuple(ts) => ts.iter().all(is_complex_value),
        SrcTerm::ProdMatch(s, _, t) => is_complex_value(s) && is_complex_value(t),
    }
}

/// Convenience constructors used across the crate and its tests.
pub fn var(x: &str) -> SrcTerm {
    SrcTerm::Var(x.to_string())
}

pub fn real(n: usize) -> SrcType {
    SrcType::Real(n)
}

pub fn sum2(a: SrcType, b: SrcType) -> SrcType {
    SrcType::Sum(vec![a, b])
}

pub fn prod(ts: Vec<SrcType>) -> SrcType {
    SrcType::Prod(ts)
}

/// The i-th projection, expanded to a product match per its definition as
/// sugar. Binder names are distinctive so the pretty-printer can fold the
/// expansion back into `prj_i`.
pub fn prj(i: usize, arity: usize, t: SrcTerm) -> SrcTerm {
    let names: Vec<String> = (0..arity).map(|k| format!("_prj{k}")).collect();
    let body = SrcTerm::Var(names[i - 1].clone());
    SrcTerm::ProdMatch(Box::new(t), names, Box::new(body))
}
