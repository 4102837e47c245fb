//! `chad`: parse, typecheck, transform, evaluate, and check programs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use chad_core::check::{check_program, CheckConfig, CheckError, CheckReport};
use chad_core::eval;
use chad_core::laws::run_property_suites;
use chad_core::parser::parse_source;
use chad_core::pretty::{pretty_def, pretty_type};
use chad_core::prim;
use chad_core::syntax::{SrcContext, SrcDef, SrcType};
use chad_core::target::pretty::{pretty_cart_type, pretty_tgt_term};
use chad_core::teval;
use chad_core::transform::chad_def;
use chad_core::typecheck::typecheck_source;
use chad_core::value::{Cot, Env, EvalOutcome, Value};

const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "chad", about = "A first-order language with iteration and its reverse-mode AD transform", version)]
struct Cli {
    /// Emit errors as single-line JSON on standard error.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and print its canonical form.
    Parse { file: PathBuf },
    /// Typecheck a program and print its type.
    Typecheck { file: PathBuf },
    /// Apply the reverse-mode transform and print the target program.
    Transform {
        file: PathBuf,
        /// Output format: `target` (concrete syntax) or `json-ast`.
        #[arg(long, default_value = "target")]
        emit: String,
    },
    /// Evaluate a program on a JSON input.
    Eval {
        file: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long)]
        fuel: Option<u64>,
    },
    /// Evaluate the transformed program: primal value and the gradient for
    /// a given output cotangent.
    EvalTarget {
        file: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long)]
        cotangent: String,
        #[arg(long)]
        fuel: Option<u64>,
    },
    /// Check derivatives against the finite-difference oracle.
    Check(CheckArgs),
    /// Run the equational-law property suites.
    Laws {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        iterations: u32,
    },
    /// Registry subcommands.
    Ops {
        #[command(subcommand)]
        cmd: OpsCmd,
    },
}

#[derive(Subcommand)]
enum OpsCmd {
    /// List the registered primitive operations.
    List,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    fuel: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report to this file (`-` for standard output).
    #[arg(long)]
    json_out: Option<String>,
    #[arg(long, default_value_t = -3.0)]
    box_lo: f64,
    #[arg(long, default_value_t = 3.0)]
    box_hi: f64,
    /// Per-coordinate sampling boxes, `lo:hi,lo:hi,...` (one per flattened
    /// input coordinate), overriding the uniform box.
    #[arg(long)]
    boxes: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            if cli.json {
                eprintln!("{}", json!({"schema": 1, "error": e.message, "kind": e.kind}));
            } else {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.exit)
        }
    }
}

struct CmdError {
    message: String,
    kind: &'static str,
    exit: u8,
}

fn fail(kind: &'static str, exit: u8, message: impl Into<String>) -> CmdError {
    CmdError { message: message.into(), kind, exit }
}

fn fuel_setting(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("CHAD_FUEL").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_FUEL)
}

fn load(file: &PathBuf) -> Result<SrcDef, CmdError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| fail("io", 2, format!("cannot read {}: {e}", file.display())))?;
    parse_source(&text).map_err(|e| fail("parse", 1, format!("{e}")))
}

fn run(cli: &Cli) -> Result<ExitCode, CmdError> {
    match &cli.cmd {
        Cmd::Parse { file } => {
            let def = load(file)?;
            print!("{}", pretty_def(&def));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Typecheck { file } => {
            let def = load(file)?;
            let ty = typecheck_source(&def.ctx, &def.body)
                .map_err(|e| fail("type", 1, format!("{e}")))?;
            if ty != def.ret {
                return Err(fail(
                    "type",
                    1,
                    format!(
                        "declared return type {} but the body has type {}",
                        pretty_type(&def.ret),
                        pretty_type(&ty)
                    ),
                ));
            }
            println!("{}", pretty_type(&ty));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Transform { file, emit } => {
            let def = load(file)?;
            let out = chad_def(&def.ctx, &def.ret, &def.body)
                .map_err(|e| fail("type", 1, format!("{e}")))?;
            match emit.as_str() {
                "target" => {
                    println!("-- transformed from `{}`", def.name);
                    for (n, t) in &out.primal_ctx {
                        println!("-- context {n} : {}", pretty_cart_type(t));
                    }
                    println!("-- type {}", pretty_cart_type(&out.result_ty));
                    println!("{}", pretty_tgt_term(&out.term));
                }
                "json-ast" => {
                    let j = json!({
                        "schema": 1,
                        "name": def.name,
                        "context": out.primal_ctx.iter().map(|(n, t)| json!({
                            "name": n, "type": pretty_cart_type(t),
                        })).collect::<Vec<_>>(),
                        "type": pretty_cart_type(&out.result_ty),
                        "term": tgt_term_to_json(&out.term),
                    });
                    println!("{}", serde_json::to_string_pretty(&j).unwrap());
                }
                other => return Err(fail("usage", 2, format!("unknown emit format `{other}`"))),
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval { file, input, fuel } => {
            let def = load(file)?;
            let env = env_from_json(&def.ctx, input)?;
            let fuel = fuel_setting(*fuel);
            let out = eval::eval(&env, &def.body, fuel)
                .map_err(|e| fail("eval", 1, format!("{e}")))?;
            println!("{}", serde_json::to_string(&outcome_to_json(&out)).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::EvalTarget { file, input, cotangent, fuel } => {
            let def = load(file)?;
            let out = chad_def(&def.ctx, &def.ret, &def.body)
                .map_err(|e| fail("type", 1, format!("{e}")))?;
            let env = env_from_json(&def.ctx, input)?;
            let cot_json: Json = serde_json::from_str(cotangent)
                .map_err(|e| fail("usage", 2, format!("bad cotangent JSON: {e}")))?;
            let cot = json_to_cot(&cot_json).ok_or_else(|| fail("usage", 2, "bad cotangent shape"))?;
            let fuel = fuel_setting(*fuel);
            let (primal, grad) = teval::run_transformed(&env, &out.term, &cot, fuel)
                .map_err(|e| fail("eval", 1, format!("{e}")))?;
            let grad_json = match grad {
                Some(teval::Outcome::Defined(g)) => ctx_cot_to_json(&def.ctx, &g)
                    .ok_or_else(|| fail("eval", 1, "gradient shape mismatch"))?,
                Some(teval::Outcome::Undefined) => json!({"undefined": true}),
                Some(teval::Outcome::FuelExhausted(n)) => json!({"fuel_exhausted": n}),
                None => json!(null),
            };
            println!(
                "{}",
                json!({
                    "schema": 1,
                    "primal": outcome_to_json(&primal),
                    "gradient": grad_json,
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check(args) => {
            let def = load(&args.file)?;
            if args.samples == 0 || args.h <= 0.0 || args.tol <= 0.0 {
                return Err(fail("config", 2, "samples, h, and tol must be positive"));
            }
            let boxes = match &args.boxes {
                None => None,
                Some(text) => Some(parse_boxes(text).ok_or_else(|| {
                    fail("usage", 2, "boxes must look like `-1:1,-2:2`")
                })?),
            };
            let cfg = CheckConfig {
                samples: args.samples,
                h: args.h,
                rel_tol: args.tol,
                fuel: fuel_setting(args.fuel),
                seed: args.seed,
                box_lo: args.box_lo,
                box_hi: args.box_hi,
                boxes,
                retries: 1000,
            };
            let report = check_program(&def, &cfg).map_err(|e| match e {
                CheckError::Config(m) => fail("config", 2, m),
                CheckError::Internal(m) => fail("internal", 1, m),
            })?;
            let j = report_to_json(&report);
            match &args.json_out {
                Some(path) if path == "-" => {
                    println!("{}", serde_json::to_string_pretty(&j).unwrap())
                }
                Some(path) => std::fs::write(path, serde_json::to_string_pretty(&j).unwrap())
                    .map_err(|e| fail("io", 2, format!("{e}")))?,
                None => print_report(&report),
            }
            Ok(if report.verdict { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Laws { seed, iterations } => {
            let report = run_property_suites(*seed, *iterations);
            for law in &report.laws {
                // tolerate a closed pipe (e.g. piping through `head`)
                let line = format!(
                    "{:22} {:>4} cases  {:>3} failures{}",
                    law.name,
                    law.cases,
                    law.failures,
                    law.first_failure
                        .as_deref()
                        .map(|f| format!("  first: {f}"))
                        .unwrap_or_default()
                );
                if writeln_ignoring_pipe(&line).is_err() {
                    break;
                }
            }
            Ok(if report.pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Ops { cmd: OpsCmd::List } => {
            for spec in prim::OP_SPECS {
                let name = if spec.params.is_empty() {
                    spec.base.to_string()
                } else {
                    format!("{}[{}]", spec.base, spec.params)
                };
                let line = format!(
                    "{:18} in {:10} out {:8} {}",
                    name,
                    spec.in_dims,
                    spec.out_dims,
                    if spec.total { "total" } else { "partial" }
                );
                if writeln_ignoring_pipe(&line).is_err() {
                    break;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_boxes(text: &str) -> Option<Vec<(f64, f64)>> {
    text.split(',')
        .map(|pair| {
            let (lo, hi) = pair.split_once(':')?;
            let (lo, hi) = (lo.trim().parse().ok()?, hi.trim().parse().ok()?);
            if lo < hi {
                Some((lo, hi))
            } else {
                None
            }
        })
        .collect()
}

fn writeln_ignoring_pipe(line: &str) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}")
}

fn print_report(r: &CheckReport) {
    println!("program            {}", r.program);
    println!("samples            {}", r.samples);
    println!("jacobian tested    {}", r.tested);
    println!("skipped            {}", r.skipped);
    println!("rejected           {}", r.rejected);
    println!("fuel exhausted     {}", r.fuel_exhausted);
    println!("max primal err     {:e}", r.max_primal_rel_err);
    println!("max jacobian err   {:e}", r.max_jacobian_rel_err);
    println!("undefined agree    {}/{}", r.undef_agree, r.undef_checked);
    for f in r.failures.iter().take(10) {
        println!(
            "  failure at {:?} axis {:?}: expected {} got {} ({:?})",
            f.point, f.axis, f.expected, f.got, f.kind
        );
    }
    println!("verdict            {}", if r.verdict { "pass" } else { "FAIL" });
}

fn report_to_json(r: &CheckReport) -> Json {
    json!({
        "schema": 1,
        "program": r.program,
        "samples": r.samples,
        "tested": r.tested,
        "skipped": r.skipped,
        "rejected": r.rejected,
        "fuel_exhausted": r.fuel_exhausted,
        "max_primal_rel_err": r.max_primal_rel_err,
        "max_jacobian_rel_err": r.max_jacobian_rel_err,
        "failures": r.failures.iter().map(|f| json!({
            "point": f.point,
            "axis": [f.axis.0, f.axis.1],
            "expected": f.expected,
            "got": f.got,
            "kind": format!("{:?}", f.kind),
        })).collect::<Vec<_>>(),
        "undef_checked": r.undef_checked,
        "undef_agree": r.undef_agree,
        "verdict": r.verdict,
    })
}

// ---------------------------------------------------------------------------
// JSON value coercion
// ---------------------------------------------------------------------------

fn env_from_json(ctx: &SrcContext, input: &str) -> Result<Env, CmdError> {
    let j: Json = serde_json::from_str(input)
        .map_err(|e| fail("usage", 2, format!("bad input JSON: {e}")))?;
    let items: Vec<Json> = if ctx.0.len() == 1 {
        match j {
            Json::Array(ref a) if a.len() == 1 => a.clone(),
            other => vec![other],
        }
    } else {
        match j {
            Json::Array(a) => a,
            other => vec![other],
        }
    };
    if items.len() != ctx.0.len() {
        return Err(fail(
            "usage",
            2,
            format!("program takes {} inputs, got {}", ctx.0.len(), items.len()),
        ));
    }
    let mut env = Env::new();
    for ((name, ty), item) in ctx.0.iter().zip(&items) {
        let v = json_to_value(ty, item).ok_or_else(|| {
            fail("usage", 2, format!("input for `{name}` does not match type {}", pretty_type(ty)))
        })?;
        env = env.with(name, v);
    }
    Ok(env)
}

fn json_to_value(ty: &SrcType, j: &Json) -> Option<Value> {
    match ty {
        SrcType::Real(n) => {
            if *n == 1 {
                if let Some(x) = j.as_f64() {
                    return Some(Value::Rv(vec![x]));
                }
            }
            let a = j.as_array()?;
            if a.len() != *n {
                return None;
            }
            Some(Value::Rv(a.iter().map(|x| x.as_f64()).collect::<Option<_>>()?))
        }
        SrcType::Unit => match j {
            Json::Array(a) if a.is_empty() => Some(Value::Tup(vec![])),
            Json::Null => Some(Value::Tup(vec![])),
            _ => None,
        },
        SrcType::Prod(ts) => {
            let a = j.as_array()?;
            if a.len() != ts.len() {
                return None;
            }
            Some(Value::Tup(
                ts.iter().zip(a).map(|(t, x)| json_to_value(t, x)).collect::<Option<_>>()?,
            ))
        }
        SrcType::Sum(ts) => {
            let o = j.as_object()?;
            let i = o.get("in")?.as_u64()? as usize;
            if i == 0 || i > ts.len() {
                return None;
            }
            let payload = json_to_value(&ts[i - 1], o.get("val")?)?;
            Some(Value::Inj(i, Box::new(payload)))
        }
        SrcType::Void => None,
    }
}

fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Rv(xs) => json!(xs),
        Value::Tup(ts) => Json::Array(ts.iter().map(value_to_json).collect()),
        Value::Inj(i, p) => json!({"in": i, "val": value_to_json(p)}),
        other => json!({"opaque": format!("{other:?}")}),
    }
}

fn outcome_to_json(o: &EvalOutcome) -> Json {
    match o {
        EvalOutcome::Defined(v) => value_to_json(v),
        EvalOutcome::Undefined => json!({"undefined": true}),
        EvalOutcome::FuelExhausted(n) => json!({"fuel_exhausted": n}),
    }
}

fn json_to_cot(j: &Json) -> Option<Cot> {
    match j {
        Json::Number(_) => Some(Cot::Vec(vec![j.as_f64()?])),
        Json::Array(a) => {
            if a.iter().all(|x| x.is_number()) {
                Some(Cot::Vec(a.iter().map(|x| x.as_f64()).collect::<Option<_>>()?))
            } else {
                Some(Cot::Tuple(a.iter().map(json_to_cot).collect::<Option<_>>()?))
            }
        }
        _ => None,
    }
}

fn cot_to_json(ty: &SrcType, c: &Cot) -> Option<Json> {
    match (ty, c) {
        (_, Cot::Zero) => cot_to_json(ty, &Cot::zero_of_type(ty)),
        (SrcType::Real(n), Cot::Vec(v)) if v.len() == *n => Some(json!(v)),
        (SrcType::Unit, _) => Some(json!([])),
        (SrcType::Prod(ts), Cot::Tuple(cs)) if ts.len() == cs.len() => Some(Json::Array(
            ts.iter().zip(cs).map(|(t, c)| cot_to_json(t, c)).collect::<Option<_>>()?,
        )),
        _ => None,
    }
}

fn ctx_cot_to_json(ctx: &SrcContext, c: &Cot) -> Option<Json> {
    match ctx.0.len() {
        0 => Some(json!([])),
        1 => cot_to_json(&ctx.0[0].1, c),
        m => {
            let parts: Vec<Cot> = match c {
                Cot::Tuple(cs) if cs.len() == m => cs.clone(),
                Cot::Zero => vec![Cot::Zero; m],
                _ => return None,
            };
            Some(Json::Array(
                ctx.0
                    .iter()
                    .zip(&parts)
                    .map(|((_, t), c)| cot_to_json(t, c))
                    .collect::<Option<_>>()?,
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Target AST to JSON (see docs/target-ast.md)
// ---------------------------------------------------------------------------

fn tgt_term_to_json(t: &chad_core::target::syntax::TgtTerm) -> Json {
    use chad_core::target::pretty::pretty_lin_type;
    use chad_core::target::syntax::TgtTerm as T;
    match t {
        T::Var(x) => json!({"var": x}),
        T::LinVar => json!({"linvar": true}),
        T::Zero => json!({"zero": true}),
        T::Op(op, args) => json!({
            "op": chad_core::pretty::pretty_opref(op),
            "args": args.iter().map(tgt_term_to_json).collect::<Vec<_>>(),
        }),
        T::LOp(op, args, lin) => json!({
            "lop": chad_core::pretty::pretty_opref(op),
            "args": args.iter().map(tgt_term_to_json).collect::<Vec<_>>(),
            "lin": tgt_term_to_json(lin),
        }),
        T::Let(x, a, b) => {
            json!({"let": x, "bound": tgt_term_to_json(a), "body": tgt_term_to_json(b)})
        }
        T::LinLet(a, b) => json!({"linlet": tgt_term_to_json(a), "body": tgt_term_to_json(b)}),
        T::Inj(i, p, ty) => json!({
            "inj": i, "payload": tgt_term_to_json(p), "annotation": pretty_cart_type(ty),
        }),
        T::SumMatch(s, bs) => json!({
            "case": tgt_term_to_json(s),
            "branches": bs.iter().map(|(x, b)| json!({
                "bind": x, "body": tgt_term_to_json(b),
            })).collect::<Vec<_>>(),
        }),
        T::Tuple(ts) => json!({"tuple": ts.iter().map(tgt_term_to_json).collect::<Vec<_>>()}),
        T::LinTuple(ts) => {
            json!({"lintuple": ts.iter().map(tgt_term_to_json).collect::<Vec<_>>()})
        }
        T::ProdMatch(s, names, b) => json!({
            "match": tgt_term_to_json(s), "binds": names, "body": tgt_term_to_json(b),
        }),
        T::Iterate(x, b) => json!({"iterate": x, "body": tgt_term_to_json(b)}),
        T::LinProj(i, a) => json!({"lprj": i, "of": tgt_term_to_json(a)}),
        T::LinAbs(b) => json!({"linabs": tgt_term_to_json(b)}),
        T::LinApp(f, a) => json!({"linapp": tgt_term_to_json(f), "arg": tgt_term_to_json(a)}),
        T::Plus(a, b) => json!({"plus": [tgt_term_to_json(a), tgt_term_to_json(b)]}),
        T::Pair(a, b) => json!({"pair": [tgt_term_to_json(a), tgt_term_to_json(b)]}),
        T::PairMatch(s, x, y, b) => json!({
            "pairmatch": tgt_term_to_json(s), "binds": [x, y], "body": tgt_term_to_json(b),
        }),
        T::Fold(fd) => json!({
            "fold": {
                "loop_var": fd.loop_var,
                "loop_body": tgt_term_to_json(&fd.loop_body),
                "exit_name": fd.exit_name,
                "exit_ty": pretty_lin_type(&fd.exit_ty),
                "state_ty": pretty_lin_type(&fd.state_ty),
                "seed": tgt_term_to_json(&fd.seed),
                "algebra": tgt_term_to_json(&fd.algebra),
            }
        }),
        T::Ascribe(a, ty) => json!({"ascribe": tgt_term_to_json(a), "type": pretty_cart_type(ty)}),
    }
}
