//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Run with `cargo test --test acceptance -- --nocapture` to see the
//! summary lines.

use std::path::PathBuf;

use chad_core::check::{
    basic_fixed_point_check, check_program, container_fixed_point_check, extract_loop,
    fold_composition_check, CheckConfig,
};
use chad_core::eval::eval;
use chad_core::fd;
use chad_core::laws::run_property_suites;
use chad_core::parser::parse_source;
use chad_core::rng::Rng;
use chad_core::syntax::SrcDef;
use chad_core::target::typeck::{check_target, TgtType};
use chad_core::teval;
use chad_core::transform::chad_def;
use chad_core::value::{Cot, Env, EvalOutcome, Value};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<SrcDef> {
    let mut defs = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map_or(false, |x| x == "chad"))
        .collect();
    entries.sort();
    for path in entries {
        let text = std::fs::read_to_string(&path).unwrap();
        let def = parse_source(&text)
            .unwrap_or_else(|e| panic!("{} does not parse: {e}", path.display()));
        defs.push(def);
    }
    assert!(defs.len() >= 20, "corpus has {} programs", defs.len());
    defs
}

fn is_divergent(name: &str) -> bool {
    name == "forever" || name == "grow"
}

fn loop_programs() -> Vec<&'static str> {
    vec!["halve", "newton_sqrt2", "scaled", "nested"]
}

fn sample_env(rng: &mut Rng, def: &SrcDef) -> (Vec<f64>, Env) {
    let dims = fd::flat_input_dims(&def.ctx).expect("Euclidean input");
    let total: usize = dims.iter().sum();
    let p: Vec<f64> = (0..total).map(|_| rng.in_range(-3.0, 3.0)).collect();
    let env = fd::env_from_flat(&def.ctx, &p).unwrap();
    (p, env)
}

fn transformed_primal(env: &Env, term: &chad_core::target::syntax::TgtTerm, fuel: u64) -> EvalOutcome {
    match teval::teval_cart(env, term, fuel).expect("evaluation") {
        EvalOutcome::Defined(Value::Pair(p, _)) => EvalOutcome::Defined(*p),
        EvalOutcome::Defined(other) => panic!("non-pair transform output: {other:?}"),
        other => other,
    }
}

struct Criterion(&'static str, bool);

impl Criterion {
    fn report(name: &'static str, ok: bool) -> Self {
        println!("acceptance {name}: {}", if ok { "PASS" } else { "FAIL" });
        Criterion(name, ok)
    }

    fn assert(self) {
        assert!(self.1, "acceptance criterion {} failed", self.0);
    }
}

/// Primal fidelity: the first component of the transformed program agrees
/// with the source semantics pointwise, with identical outcome variants and
/// bitwise-equal reals.
#[test]
fn primal_fidelity() {
    let fuel = 500;
    let mut ok = true;
    for def in corpus() {
        let out = chad_def(&def.ctx, &def.ret, &def.body).unwrap();
        let mut rng = Rng::new(101);
        for _ in 0..100 {
            let (p, env) = sample_env(&mut rng, &def);
            let src = eval(&env, &def.body, fuel).unwrap();
            let tgt = transformed_primal(&env, &out.term, fuel);
            let agree = match (&src, &tgt) {
                (EvalOutcome::Defined(a), EvalOutcome::Defined(b)) => a == b,
                (EvalOutcome::Undefined, EvalOutcome::Undefined) => true,
                (EvalOutcome::FuelExhausted(_), EvalOutcome::FuelExhausted(_)) => true,
                _ => false,
            };
            if !agree {
                eprintln!("{}: primal mismatch at {p:?}: {src:?} vs {tgt:?}", def.name);
                ok = false;
            }
        }
    }
    Criterion::report("primal_fidelity", ok).assert();
}

/// Derivative correctness: the transformed cotangent map applied to basis
/// covectors matches the central-difference Jacobian transpose within 1e-4
/// relative on at least 95% of sampled points; the remainder is skipped for
/// branch-crossing or domain reasons, never failed.
#[test]
fn derivative_correctness() {
    let mut ok = true;
    for def in corpus() {
        if is_divergent(&def.name) {
            continue;
        }
        let cfg = CheckConfig { samples: 100, seed: 202, fuel: 100_000, ..CheckConfig::default() };
        let report = check_program(&def, &cfg).unwrap();
        let tested_enough = report.tested * 100 >= report.samples * 95;
        if !report.failures.is_empty() || !tested_enough {
            eprintln!(
                "{}: {} failures, {}/{} tested (max err {:e}) first {:?}",
                def.name,
                report.failures.len(),
                report.tested,
                report.samples,
                report.max_jacobian_rel_err,
                report.failures.first()
            );
            ok = false;
        }
    }
    Criterion::report("derivative_correctness", ok).assert();
}

/// The fold evaluator equals the explicit right-to-left composition of
/// per-step cotangent closures along an independently recorded trace.
#[test]
fn fold_composition_oracle() {
    let defs = corpus();
    let mut ok = true;
    for name in loop_programs() {
        let def = defs.iter().find(|d| d.name == name).unwrap();
        let parts = extract_loop(def).unwrap();
        let mut rng = Rng::new(303);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < 50 && attempts < 5000 {
            attempts += 1;
            let (_, env) = sample_env(&mut rng, def);
            let cot = Cot::Vec(vec![rng.in_range(-2.0, 2.0)]);
            match fold_composition_check(&parts, &env, &cot, 100_000, 1e-12).unwrap() {
                Ok(len) if len <= 20 => checked += 1,
                Ok(_) => {}
                Err(e) if e.contains("did not terminate") || e.contains("did not evaluate") => {}
                Err(e) => {
                    eprintln!("{name}: fold/composition mismatch: {e}");
                    ok = false;
                    checked += 1;
                }
            }
        }
        if checked < 50 {
            eprintln!("{name}: only {checked} fold-composition points found");
            ok = false;
        }
    }
    Criterion::report("fold_composition_oracle", ok).assert();
}

/// The basic fixed point equation: unrolling the loop once changes nothing,
/// with exact outcome agreement under a shared budget. The container form
/// extends this through the transformed cotangent maps.
#[test]
fn basic_fixed_point() {
    let defs = corpus();
    let mut ok = true;
    for def in defs.iter().filter(|d| {
        loop_programs().contains(&d.name.as_str()) || is_divergent(&d.name)
    }) {
        let parts = extract_loop(def).unwrap();
        let mut rng = Rng::new(404);
        let fuel = if is_divergent(&def.name) { 200 } else { 20_000 };
        for _ in 0..50 {
            let (p, env) = sample_env(&mut rng, def);
            match basic_fixed_point_check(&parts, &env, fuel, 1e-12).unwrap() {
                Ok(()) => {}
                Err(e) if e.contains("initializer") => {}
                Err(e) => {
                    eprintln!("{}: fixed point violated at {p:?}: {e}", def.name);
                    ok = false;
                }
            }
        }
        if !is_divergent(&def.name) {
            let mut rng = Rng::new(405);
            for _ in 0..25 {
                let (p, env) = sample_env(&mut rng, def);
                let cot = Cot::Vec(vec![1.0]);
                match container_fixed_point_check(&parts, &env, &cot, 100_000, 1e-12).unwrap() {
                    Ok(()) => {}
                    Err(e) if e.contains("did not terminate") || e.contains("did not evaluate") => {}
                    Err(e) => {
                        eprintln!("{}: container fixed point violated at {p:?}: {e}", def.name);
                        ok = false;
                    }
                }
            }
        }
    }
    Criterion::report("basic_fixed_point", ok).assert();
}

/// Equational soundness: 200 generated instances per rule of the source
/// beta/eta theory and the linear-language equations evaluate equally on
/// both sides; the linear-homomorphism laws pass 200 generated instances.
#[test]
fn equational_soundness() {
    let report = run_property_suites(0, 200);
    for law in &report.laws {
        if law.failures > 0 {
            eprintln!(
                "law {} failed {} of {} cases; first: {:?}",
                law.name, law.failures, law.cases, law.first_failure
            );
        }
    }
    Criterion::report("equational_soundness", report.pass()).assert();
}

/// Macro well-typedness: every corpus transform typechecks in the target at
/// its declared pair type; undecided type-equality verdicts are failures,
/// so success means zero of them.
#[test]
fn macro_well_typedness() {
    let mut ok = true;
    for def in corpus() {
        let out = chad_def(&def.ctx, &def.ret, &def.body).unwrap();
        match check_target(&out.primal_ctx, None, &out.term, &TgtType::Cart(out.result_ty.clone())) {
            Ok(()) => {}
            Err(e) => {
                eprintln!("{}: transform does not typecheck: {e}", def.name);
                ok = false;
            }
        }
    }
    Criterion::report("macro_well_typedness", ok).assert();
}

/// Partiality agreement: the sampled points where the source is undefined
/// are exactly the points where the transformed primal is undefined.
#[test]
fn partiality_agreement() {
    let defs = corpus();
    let partial_programs =
        ["reciprocal", "split_sign", "length", "unit_vector", "threshold", "magnitude"];
    let fuel = 10_000;
    let mut ok = true;
    for name in partial_programs {
        let def = defs.iter().find(|d| d.name == name).unwrap();
        let out = chad_def(&def.ctx, &def.ret, &def.body).unwrap();
        let mut rng = Rng::new(505);
        for _ in 0..1000 {
            let (p, env) = sample_env(&mut rng, def);
            let src_undef = matches!(eval(&env, &def.body, fuel).unwrap(), EvalOutcome::Undefined);
            let tgt_undef =
                matches!(transformed_primal(&env, &out.term, fuel), EvalOutcome::Undefined);
            if src_undef != tgt_undef {
                eprintln!("{name}: partiality disagreement at {p:?}");
                ok = false;
            }
        }
    }
    Criterion::report("partiality_agreement", ok).assert();
}

/// Divergence handling: the two non-terminating loops exhaust any fuel in
/// {10^3, 10^4, 10^5}, on both the source and the transformed primal.
#[test]
fn divergence_handling() {
    let defs = corpus();
    let mut ok = true;
    for name in ["forever", "grow"] {
        let def = defs.iter().find(|d| d.name == name).unwrap();
        let out = chad_def(&def.ctx, &def.ret, &def.body).unwrap();
        let mut rng = Rng::new(606);
        for fuel in [1_000u64, 10_000, 100_000] {
            let (p, env) = sample_env(&mut rng, def);
            let src = eval(&env, &def.body, fuel).unwrap();
            let tgt = transformed_primal(&env, &out.term, fuel);
            if !matches!(src, EvalOutcome::FuelExhausted(_)) {
                eprintln!("{name}: source at fuel {fuel} gave {src:?} at {p:?}");
                ok = false;
            }
            if !matches!(tgt, EvalOutcome::FuelExhausted(_)) {
                eprintln!("{name}: transformed at fuel {fuel} gave {tgt:?} at {p:?}");
                ok = false;
            }
        }
    }
    Criterion::report("divergence_handling", ok).assert();
}
