use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use shear_core::elliptic::solve_elliptic;
use shear_core::irregularity::{
    alpha_irregularity, lambda, lambda_brute_force, lambda_local, LambdaParams, MIN_SAMPLES,
};
use shear_core::norms::{besov_blocks, besov_seminorm, campanato_seminorm, sobolev_norm, BesovParams, CampanatoParams};
use shear_core::parabolic::appendix_b_check;
use shear_core::semigroup::{
    auto_dt, decay_rate, operator_norm, wei_bound, NormOptions, Propagator, PropagatorConfig, RateOptions, RatePoint,
};
use shear_core::stochastic::{simulate_variance, FKConfig};
use shear_core::{generate, FieldRecipe, Grid, GridField, RecipeKind};
use shear_lab::field_io::{read_field, write_grid, write_spectral};
use shear_lab::{init_workers, parse_depths, parse_grid, parse_tuple, report, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "shear-lab", version, about = "Enhanced dissipation experiments for rough shear flows")]
#[command(after_help = "Parallel commands use SHEAR_WORKERS threads when that variable is set.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "random_fourier", alias = "random-fourier")]
    RandomFourier,
    Fbm,
    Weierstrass,
    #[value(name = "single_mode", alias = "single-mode")]
    SingleMode,
    Constant,
    Zero,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a field and write it to disk (`.bin` selects the binary layout).
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 2)]
        b: u32,
        #[arg(long, default_value_t = 20)]
        terms: u32,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        /// Store Fourier coefficients instead of grid samples.
        #[arg(long)]
        spectral: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Besov, Sobolev and Campanato seminorms as a JSON record.
    Norms {
        #[arg(long = "in")]
        input: PathBuf,
        /// `s,p`; use `inf` for the sup norm.
        #[arg(long, allow_hyphen_values = true)]
        besov: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        sobolev: Option<f64>,
        /// `p,alpha,k`.
        #[arg(long)]
        campanato: Option<String>,
        /// Use averaged interval norms in the Campanato seminorm.
        #[arg(long)]
        normalized: bool,
    },
    /// Dyadic irregularity index of a field.
    Lambda {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// `a..b` inclusive.
        #[arg(long)]
        depths: String,
        /// Also scan every interval (slow beyond a few hundred points).
        #[arg(long)]
        brute_force: bool,
    },
    /// Irregularity of a velocity through its elliptic regularization.
    Irregular {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Defaults to the finest depth with eight samples per cell.
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Zero-mean periodic solution of `-U'' = u - mean(u)`.
    Elliptic {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write `dU/dy` here.
        #[arg(long)]
        du_out: Option<PathBuf>,
    },
    /// Evolve one `x`-mode and report the energy balance.
    Solve {
        #[arg(long)]
        u: PathBuf,
        /// Initial datum; the constant 1 when omitted.
        #[arg(long)]
        f0: Option<PathBuf>,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        k: f64,
        #[arg(long)]
        t: f64,
        /// Defaults to `min(0.05, phase limit)`.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operator norm of the semigroup at horizon `T`.
    Opnorm {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        nu: f64,
        #[arg(long = "T", alias = "horizon")]
        horizon: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        k: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        truncation: Option<usize>,
    },
    /// Dissipation rates over a viscosity grid.
    Rate {
        #[arg(long)]
        u: PathBuf,
        /// `a:b:n` log-spaced or a comma list.
        #[arg(long)]
        nu_grid: String,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        k: i64,
        /// Fixed step; otherwise the step is refined automatically.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        truncation: Option<usize>,
        /// CSV with columns nu, r, T1, T2, sigma1, sigma2.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Explicit semigroup bound from `omega_1`.
    Weibound {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        nu: f64,
        /// Defaults to `nu^{1/3}`.
        #[arg(long)]
        delta: Option<f64>,
        /// One time, a comma list or `a:b:n`.
        #[arg(long)]
        t: String,
    },
    /// Monte Carlo variance integral against the spectral energy deficit.
    Fk {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        f0: PathBuf,
        #[arg(long)]
        nu: f64,
        #[arg(long, allow_hyphen_values = true)]
        xi: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        truncation: Option<usize>,
        /// Drop the per-point variance profile from the output.
        #[arg(long)]
        brief: bool,
    },
    /// Forced heat equation gradient integral against `t nu^{-2} ||u||_{H^{-1}}^2` (CSV).
    Parabolic {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        nu_grid: String,
        #[arg(long)]
        t_grid: String,
        /// Also write the summary as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a sweep file and write CSV tables, JSON verdicts and SVG plots.
    Report {
        #[arg(long = "spec")]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Added to every seed in the file.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn load_grid(path: &Path) -> Result<GridField> {
    Ok(read_field(path)?.into_grid())
}

fn recipe(kind: Kind, cmd: &Command) -> FieldRecipe {
    let Command::Gen { alpha, amplitude, hurst, a, b, terms, m, c, seed, .. } = *cmd else { unreachable!() };
    let kind = match kind {
        Kind::RandomFourier => RecipeKind::RandomFourier { alpha, amplitude },
        Kind::Fbm => RecipeKind::Fbm { hurst },
        Kind::Weierstrass => RecipeKind::Weierstrass { a, b, terms },
        Kind::SingleMode => RecipeKind::SingleMode { m, amplitude: Complex64::new(amplitude, 0.0) },
        Kind::Constant => RecipeKind::Constant { c },
        Kind::Zero => RecipeKind::Zero,
    };
    FieldRecipe::new(kind, seed)
}

fn solver_dt(dt: Option<f64>, k: f64, u: &GridField) -> f64 {
    dt.unwrap_or_else(|| 0.05_f64.min(PropagatorConfig::max_dt(k, u.max_abs())))
}

#[derive(Serialize)]
struct RateRow {
    nu: f64,
    point: Option<RatePoint>,
    error: Option<String>,
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        cmd @ Command::Gen { kind, n, spectral, out, .. } => {
            let f = generate(&recipe(*kind, cmd), Grid::new(*n)?)?;
            if *spectral {
                write_spectral(out, &f.to_spectral())?;
            } else {
                write_grid(out, &f)?;
            }
        }
        Command::Norms { input, besov, sobolev, campanato, normalized } => {
            let stored = read_field(input)?;
            let g = stored.clone().into_grid();
            let s = stored.into_spectral();
            let mut rec = serde_json::Map::new();
            rec.insert("l2".into(), json!(g.l2_norm()));
            if let Some(b) = besov {
                let [sv, p] = parse_tuple::<2>(b)?;
                let params = BesovParams { s: sv, p };
                rec.insert(
                    "besov".into(),
                    json!({"s": sv, "p": p, "value": besov_seminorm(&s, params)?, "blocks": besov_blocks(&s, params)}),
                );
            }
            if let Some(sv) = sobolev {
                rec.insert("sobolev".into(), json!({"s": sv, "value": sobolev_norm(&s, *sv)}));
            }
            if let Some(c) = campanato {
                let [p, alpha, k] = parse_tuple::<3>(c)?;
                if k < 0.0 || k.fract() != 0.0 {
                    bail!("Campanato degree must be a nonnegative integer, got {k}");
                }
                let params = CampanatoParams { p, alpha, k: k as usize, normalized: *normalized };
                let value = campanato_seminorm(&g, params)?;
                rec.insert(
                    "campanato".into(),
                    json!({"p": p, "alpha": alpha, "k": k as usize, "normalized": normalized,
                           "value": if value.is_finite() { json!(value) } else { json!("inf") }}),
                );
            }
            print_json(&rec)?;
        }
        Command::Lambda { input, alpha, k, p, depths, brute_force } => {
            let f = load_grid(input)?;
            let (lo, hi) = parse_depths(depths)?;
            let params = LambdaParams { min_depth: lo, ..LambdaParams::new(*alpha, *k, *p, hi) };
            let dyadic = lambda(&f, &params)?;
            let local = lambda_local(&f, &params)?;
            let brute = brute_force.then(|| lambda_brute_force(&f, *alpha, *k, *p)).transpose()?;
            let ratio = brute.as_ref().map(|b| dyadic.value / b.value);
            print_json(&json!({"params": params, "dyadic": dyadic, "local": local, "brute_force": brute, "ratio": ratio}))?;
        }
        Command::Irregular { input, alpha, max_depth } => {
            let u = load_grid(input)?;
            let depth = max_depth.unwrap_or_else(|| u.grid().max_depth(MIN_SAMPLES));
            let rep = alpha_irregularity(&u, *alpha, depth)?;
            let tails = rep.tails();
            print_json(&json!({"alpha": alpha, "max_depth": depth, "report": rep, "tails": tails}))?;
        }
        Command::Elliptic { input, out, du_out } => {
            let u = read_field(input)?.into_spectral();
            let sol = solve_elliptic(&u);
            write_spectral(out, &sol.potential)?;
            if let Some(p) = du_out {
                write_spectral(p, &sol.du)?;
            }
            print_json(&json!({"residual": sol.residual(&u), "mean_u": [sol.mean_u.re, sol.mean_u.im]}))?;
        }
        Command::Solve { u, f0, nu, k, t, dt, truncation, out } => {
            let u = load_grid(u)?;
            let f0 = match f0 {
                Some(p) => read_field(p)?.into_spectral(),
                None => GridField::from_fn(u.grid(), |_| 1.0).to_spectral(),
            };
            let dt = solver_dt(*dt, *k, &u);
            let cfg = PropagatorConfig { u_truncation: *truncation, ..PropagatorConfig::new(*nu, *k, dt) };
            let mut prop = Propagator::new(&u, cfg)?;
            let energy = prop.energy(&f0, *t)?;
            if let Some(p) = out {
                write_spectral(p, &prop.evolve(&f0, *t)?)?;
            }
            print_json(&json!({
                "config": cfg, "t": t, "l2_initial": energy.initial.sqrt(), "l2_final": energy.final_energy.sqrt(),
                "energy": energy, "energy_holds": energy.holds(0.02),
            }))?;
        }
        Command::Opnorm { u, nu, horizon, k, dt, tol, truncation } => {
            let u = load_grid(u)?;
            let dt = solver_dt(*dt, *k, &u);
            let cfg = PropagatorConfig { u_truncation: *truncation, ..PropagatorConfig::new(*nu, *k, dt) };
            let est = operator_norm(&u, cfg, *horizon, &NormOptions { tol: *tol, ..Default::default() })?;
            print_json(&json!({"config": cfg, "T": horizon, "estimate": est}))?;
        }
        Command::Rate { u, nu_grid, k, dt, truncation, csv } => {
            let u = load_grid(u)?;
            let opts = RateOptions { dt: *dt, u_truncation: *truncation, ..Default::default() };
            let start_dt = auto_dt(&u, *k, &opts)?;
            let rows: Vec<RateRow> = parse_grid(nu_grid)?
                .into_par_iter()
                .map(|nu| match decay_rate(&u, nu, *k, &opts) {
                    Ok(p) => RateRow { nu, point: Some(p), error: None },
                    Err(e) => RateRow { nu, point: None, error: Some(e.to_string()) },
                })
                .collect();
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["nu", "r", "T1", "T2", "sigma1", "sigma2"])?;
                for row in &rows {
                    if let Some(p) = row.point {
                        w.serialize((row.nu, p.r, p.t1, p.t2, p.sigma1, p.sigma2))?;
                    }
                }
                w.flush()?;
            }
            print_json(&json!({"k": k, "initial_dt": start_dt, "rows": rows}))?;
        }
        Command::Weibound { u, nu, delta, t } => {
            let u = load_grid(u)?;
            let delta = delta.unwrap_or_else(|| nu.powf(1.0 / 3.0));
            let rows = parse_grid(t)?
                .into_iter()
                .map(|t| Ok(json!({"t": t, "bound": wei_bound(&u, *nu, t, delta)?})))
                .collect::<Result<Vec<_>>>()?;
            print_json(&json!({"nu": nu, "delta": delta, "rows": rows}))?;
        }
        Command::Fk { u, f0, nu, xi, t, paths, seed, steps, truncation, brief } => {
            let u = load_grid(u)?;
            let f0 = load_grid(f0)?;
            let mut cfg = FKConfig::new(*nu, *xi, *t, *paths, *seed);
            if let Some(s) = steps {
                cfg.n_steps = *s;
            }
            cfg.u_truncation = *truncation;
            let mut rep = simulate_variance(&f0, &u, &cfg)?;
            let min_sigmas = rep.min_profile_sigmas();
            if *brief {
                rep.variance_profile.clear();
                rep.profile_stderr.clear();
            }
            print_json(&json!({"config": cfg, "report": rep, "min_profile_sigmas": min_sigmas}))?;
        }
        Command::Parabolic { u, nu_grid, t_grid, json } => {
            let u = read_field(u)?.into_spectral();
            let table = appendix_b_check(&u, &parse_grid(nu_grid)?, &parse_grid(t_grid)?)?;
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(["nu", "t", "lhs", "scale", "ratio"])?;
            for r in &table.rows {
                w.serialize((r.nu, r.t, r.lhs, r.scale, r.ratio))?;
            }
            w.flush()?;
            if let Some(p) = json {
                std::fs::write(p, serde_json::to_string_pretty(&table)?)?;
            }
        }
        Command::Report { plan, out, seed_offset } => {
            let text = std::fs::read_to_string(plan).with_context(|| format!("reading {}", plan.display()))?;
            let plan: report::ReportPlan =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", plan.display()))?;
            let plan = plan.with_seed_offset(*seed_offset);
            let rep = report::run(&plan)?;
            report::write(&plan, &rep, out)?;
            let h = &rep.verdicts.headline;
            print_json(&json!({
                "out": out, "pass": h.pass, "fraction_increasing": h.fraction_increasing,
                "median_exponent": h.median_exponent, "band": h.band, "control_exponent": h.control_exponent,
                "failed_cells": rep.verdicts.failed_cells,
                "prevalence": rep.verdicts.prevalence.iter().map(|p| p.fraction).collect::<Vec<_>>(),
            }))?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e:#} (from {WORKERS_ENV})");
        std::process::exit(2);
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
