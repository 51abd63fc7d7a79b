//! Sweep reports: CSV tables, JSON verdicts and log-log plots.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use shear_core::experiments::{
    headline_verdict, prevalence_study, rate_exponents, rate_sweep, HeadlineVerdict, PrevalenceSpec,
    PrevalenceSummary, RateTable, SweepSpec,
};

use crate::svg::{LogLogPlot, PALETTE};

/// Input of the `report` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPlan {
    pub sweep: SweepSpec,
    /// Smooth shear whose rate should vanish like `nu^{1/2}`.
    #[serde(default)]
    pub control: Option<SweepSpec>,
    /// Exponent tolerance for the bound band.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Resolution judged by the headline verdict; defaults to the first one.
    #[serde(default)]
    pub headline_n: Option<usize>,
    #[serde(default)]
    pub prevalence: Vec<PrevalenceSpec>,
}

fn default_tol() -> f64 {
    0.1
}

impl ReportPlan {
    /// Shifts every seed by `offset` on top of the offsets in the file.
    pub fn with_seed_offset(mut self, offset: u64) -> Self {
        self.sweep.seed_offset += offset;
        if let Some(c) = self.control.as_mut() {
            c.seed_offset += offset;
        }
        for p in &mut self.prevalence {
            p.seed_offset += offset;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub headline: HeadlineVerdict,
    pub failed_cells: usize,
    pub prevalence: Vec<PrevalenceSummary>,
}

pub struct Report {
    pub rough: RateTable,
    pub control: Option<RateTable>,
    pub verdicts: Verdicts,
}

pub fn run(plan: &ReportPlan) -> Result<Report> {
    let rough = rate_sweep(&plan.sweep).context("rough sweep")?;
    let control = plan.control.as_ref().map(rate_sweep).transpose().context("control sweep")?;
    let n = plan.headline_n.unwrap_or(plan.sweep.resolutions[0]);
    let headline = headline_verdict(&rough, &plan.sweep, n, control.as_ref(), plan.tol);
    let prevalence = plan.prevalence.iter().map(prevalence_study).collect::<shear_core::Result<Vec<_>>>()?;
    let failed_cells = rough.failures() + control.as_ref().map_or(0, |c| c.failures());
    Ok(Report { rough, control, verdicts: Verdicts { headline, failed_cells, prevalence } })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rates_csv(table: &RateTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "seed", "n_points", "truncation", "nu", "r", "T1", "T2", "sigma1", "sigma2", "dt", "dt_change", "evaluations",
        "constant_shear", "t1_clamped", "dt_unresolved", "error",
    ])?;
    for c in &table.cells {
        let p = c.point;
        w.write_record([
            c.seed.to_string(),
            c.n_points.to_string(),
            opt(c.truncation),
            c.nu.to_string(),
            opt(p.map(|p| p.r)),
            opt(p.map(|p| p.t1)),
            opt(p.map(|p| p.t2)),
            opt(p.map(|p| p.sigma1)),
            opt(p.map(|p| p.sigma2)),
            opt(p.map(|p| p.dt)),
            opt(p.map(|p| p.dt_change)),
            opt(p.map(|p| p.evaluations)),
            opt(p.map(|p| p.flags.constant_shear)),
            opt(p.map(|p| p.flags.t1_clamped)),
            opt(p.map(|p| p.flags.dt_unresolved)),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fits_csv(h: &HeadlineVerdict, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "n_points", "truncation", "increasing", "exponent", "robust_exponent", "intercept", "r_squared"])?;
    for s in &h.series {
        let f = s.fit.as_ref();
        w.write_record([
            s.seed.to_string(),
            s.n_points.to_string(),
            opt(s.truncation),
            s.increasing.to_string(),
            opt(f.map(|f| f.exponent)),
            opt(f.map(|f| f.robust_exponent)),
            opt(f.map(|f| f.intercept)),
            opt(f.map(|f| f.r_squared)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_prevalence_csv(p: &PrevalenceSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "depth", "value", "irregular"])?;
    for s in &p.per_seed {
        for (d, v) in &s.values {
            w.write_record([s.seed.to_string(), d.to_string(), v.to_string(), s.irregular.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rates at resolution `n` with both bound exponents drawn through the
/// median rate at the largest viscosity.
pub fn rate_plot(plan: &ReportPlan, rough: &RateTable, control: Option<&RateTable>, n: usize) -> LogLogPlot {
    let mut plot = LogLogPlot::new(&format!("dissipation rate, N = {n}"), "nu", "r(nu)");
    let mut first_rates = Vec::new();
    let mut colour = 0;
    for (seed, n_points, m) in rough.keys() {
        if n_points != n {
            continue;
        }
        let pts = rough.series(seed, n_points, m);
        if let Some(p) = pts.first() {
            first_rates.push(*p);
        }
        let label = match m {
            Some(m) => format!("seed {seed}, M = {m}"),
            None => format!("seed {seed}"),
        };
        plot.push(label, pts, PALETTE[colour % PALETTE.len()], false, true);
        colour += 1;
    }
    if let Some(ctrl) = control {
        for (seed, n_points, m) in ctrl.keys() {
            if n_points == n {
                plot.push(format!("control {seed}"), ctrl.series(seed, n_points, m), "#000000", false, true);
            }
        }
    }
    if !first_rates.is_empty() {
        let nu_hi = first_rates.iter().map(|p| p.0).fold(0.0, f64::max);
        let mut r: Vec<f64> = first_rates.iter().map(|p| p.1).collect();
        r.sort_by(f64::total_cmp);
        let r0 = r[r.len() / 2];
        let nu_lo = plan.sweep.nu_values.iter().copied().fold(f64::INFINITY, f64::min);
        let (floor, ceiling) = rate_exponents(plan.sweep.alpha);
        let line = |e: f64| vec![(nu_hi, r0), (nu_lo, r0 * (nu_lo / nu_hi).powf(e))];
        plot.push(format!("nu^{floor:.4} (lower)"), line(floor), "#555555", true, false);
        plot.push(format!("nu^{ceiling:.4} (upper)"), line(ceiling), "#aaaaaa", true, false);
    }
    plot
}

/// Writes `rates.csv`, `fits.csv`, `verdicts.json`, one `rates_N<n>.svg`
/// per resolution and, when present, `control_rates.csv` and
/// `prevalence_<i>.csv`.
pub fn write(plan: &ReportPlan, report: &Report, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_rates_csv(&report.rough, &out.join("rates.csv"))?;
    if let Some(c) = &report.control {
        write_rates_csv(c, &out.join("control_rates.csv"))?;
    }
    write_fits_csv(&report.verdicts.headline, &out.join("fits.csv"))?;
    for (i, p) in report.verdicts.prevalence.iter().enumerate() {
        write_prevalence_csv(p, &out.join(format!("prevalence_{i}.csv")))?;
    }
    fs::write(out.join("verdicts.json"), serde_json::to_string_pretty(&report.verdicts)?)?;
    for &n in &plan.sweep.resolutions {
        let plot = rate_plot(plan, &report.rough, report.control.as_ref(), n);
        fs::write(out.join(format!("rates_N{n}.svg")), plot.render())?;
    }
    Ok(())
}
