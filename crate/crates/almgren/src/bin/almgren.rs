use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use almgren::extension::{build_kernel, ode_residual, psi_pair};
use almgren::fractional_op::apply_fractional_laplacian;
use almgren::report::{emit, from_json, parse_formats};
use almgren::scenario::{audit_stage, blowup_stage, frequency_stage, prepare, run, Scenario};
use almgren::sphere_eig::SphereBasis;
use almgren::{Error, Result};

#[derive(Parser)]
#[command(name = "almgren", version, about = "Boundary vanishing orders for (-Δ)^s u = h u")]
struct Cli {
    /// Worker threads (defaults to ALMGREN_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Target {
    /// Shipped scenario name or path to a TOML file.
    scenario: String,
}

#[derive(Args)]
struct Output {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Comma-separated list of csv, json, svg.
    #[arg(long, default_value = "csv,json,svg")]
    format: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dirichlet modes of u, its weak residual and the spherical eigenspaces.
    Eig {
        #[command(flatten)]
        target: Target,
        /// Largest spherical degree.
        #[arg(long, default_value_t = 5)]
        max_degree: usize,
    },
    /// κ_s and the ODE checks of the extension kernel.
    Kernel {
        #[arg(long)]
        s: f64,
    },
    /// Neumann trace of the extension against (-Δ)^s u on a grid.
    Extend {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Height, energy and frequency on the radius grid.
    Frequency {
        #[command(flatten)]
        target: Target,
    },
    /// Blow-up coefficients and β at the classified order.
    Blowup {
        #[command(flatten)]
        target: Target,
    },
    /// Coefficient, identity and inequality audits.
    Audit {
        #[command(flatten)]
        target: Target,
    },
    /// The full pipeline; writes the report files.
    Run {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: Output,
    },
    /// Re-renders a saved JSON report.
    Report {
        json: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Lists the shipped scenarios.
    List,
}

fn print<T: Serialize>(v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Numeric(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn threads(cli: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = cli {
        return Ok(Some(n));
    }
    match std::env::var("ALMGREN_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Usage(format!("ALMGREN_THREADS = `{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::List => {
            for n in almgren::scenario::builtin_names() {
                println!("{n}");
            }
        }
        Cmd::Kernel { s } => {
            let k = build_kernel(s)?;
            let xs = [0.01, 0.1, 1.0, 5.0, 10.0];
            let checks: Vec<_> = xs
                .iter()
                .map(|&x| {
                    let (psi, dpsi) = psi_pair(s, x);
                    let (res, scale) = ode_residual(s, x);
                    json!({"xi": x, "psi": psi, "dpsi": dpsi, "ode_residual": res, "relative": scale})
                })
                .collect();
            print(&json!({
                "s": s,
                "kappa": k.kappa,
                "kappa_error": k.kappa_error,
                "kappa_gamma_formula": k.kappa_oracle,
                "max_ode_residual": k.max_ode_residual,
                "samples": checks,
            }))?;
        }
        Cmd::Eig { target, max_degree } => {
            let sc = Scenario::load(&target.scenario)?;
            let p = prepare(&sc)?;
            let basis = SphereBasis::new(sc.dim(), sc.s, max_degree).map_err(|e| e.context("sphere_eig", &sc.name))?;
            let spaces: Vec<_> = basis
                .spaces
                .iter()
                .map(|e| {
                    let worst = e.functions.iter().map(|f| (f.rayleigh - e.eigenvalue).abs()).fold(0.0, f64::max);
                    let res = e.functions.iter().map(|f| f.residual).fold(0.0, f64::max);
                    json!({"degree": e.degree, "eigenvalue": e.eigenvalue, "dimension": e.nullity, "rayleigh_gap": worst, "residual": res})
                })
                .collect();
            let modes: Vec<_> = p
                .extension
                .as_ref()
                .map(|x| {
                    x.u.modes
                        .iter()
                        .zip(&x.u.coeffs)
                        .filter(|(_, c)| **c != 0.0)
                        .map(|(m, c)| json!({"index": m.index, "eigenvalue": m.eigenvalue, "coefficient": c}))
                        .collect()
                })
                .unwrap_or_default();
            print(&json!({
                "scenario": sc.name,
                "modes": modes,
                "solution_residual": p.solution_residual,
                "sphere": spaces,
            }))?;
        }
        Cmd::Extend { target, points } => {
            let sc = Scenario::load(&target.scenario)?;
            let p = prepare(&sc)?;
            let Some(ext) = p.extension.as_ref() else {
                return Err(Error::Usage(format!("`{}` has no spectral extension to sample", sc.name)));
            };
            let lap = apply_fractional_laplacian(&ext.u, sc.s)?;
            let lo = ext.u.domain.lower();
            let len = ext.u.domain.lengths();
            let rows: Vec<_> = (1..=points)
                .map(|i| {
                    let f = i as f64 / (points + 1) as f64;
                    let x: Vec<f64> = lo.iter().zip(&len).map(|(a, l)| a + f * l).collect();
                    let tr = ext.neumann_trace(&x, 1e-3);
                    let exact = p.kappa * lap.eval(&x);
                    json!({"x": x, "trace": tr.value, "expected": exact, "error": tr.error, "flagged": tr.flagged})
                })
                .collect();
            print(&json!({"scenario": sc.name, "kappa": p.kappa, "points": rows}))?;
        }
        Cmd::Frequency { target } => {
            let sc = Scenario::load(&target.scenario)?;
            let p = prepare(&sc)?;
            let f = frequency_stage(&p, sc.audit.sobolev_constant.unwrap_or(1.0))?;
            print(&f)?;
        }
        Cmd::Blowup { target } => {
            let sc = Scenario::load(&target.scenario)?;
            let p = prepare(&sc)?;
            let f = frequency_stage(&p, sc.audit.sobolev_constant.unwrap_or(1.0))?;
            let b = blowup_stage(&p, f.profile.m0)?;
            let code = if f.profile.classified && b.classified { 0 } else { 5 };
            print(&b)?;
            return Ok(code);
        }
        Cmd::Audit { target } => {
            let sc = Scenario::load(&target.scenario)?;
            let p = prepare(&sc)?;
            let a = audit_stage(&p)?;
            print(&a)?;
            return Ok(if a.pass { 0 } else { 4 });
        }
        Cmd::Run { target, output } => {
            let formats = parse_formats(&output.format)?;
            let sc = Scenario::load(&target.scenario)?;
            let t = Instant::now();
            let r = run(&sc)?;
            let paths = emit(&r, &output.out_dir, &formats)?;
            for p in paths {
                println!("{}", p.display());
            }
            eprintln!(
                "{}: m0 = {}, gamma = {:.6}, outcome {:?}, {:.2}s",
                sc.name,
                r.verdict.m0,
                r.verdict.gamma_hat,
                r.verdict.outcome,
                t.elapsed().as_secs_f64()
            );
            for d in &r.verdict.diagnostics {
                eprintln!("  {d}");
            }
            return Ok(r.verdict.outcome.exit_code());
        }
        Cmd::Report { json, output } => {
            let formats = parse_formats(&output.format)?;
            let text = std::fs::read_to_string(&json).map_err(|e| Error::Io {
                path: json.display().to_string(),
                source: e,
            })?;
            let r = from_json(&text)?;
            for p in emit(&r, &output.out_dir, &formats)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = threads(cli.threads).and_then(|n| {
        if let Some(n) = n {
            if n == 0 {
                return Err(Error::Usage("thread count must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Usage(e.to_string()))?;
        }
        execute(cli.cmd)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
