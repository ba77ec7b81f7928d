//! λ sweeps, figure data and CSV serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactdiag::{self, EdOptions, Source};
use crate::meanfield::{self, BulkSolution, GapPolicy};
use crate::model::{DensityProfile, ModelSpec};
use crate::observables::{self, EntanglementReport, Threshold};
use crate::richardson::{BetheSolver, BetheState};

/// `start:stop:count[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        let mut pts: Vec<f64> = (0..self.count)
            .map(|i| {
                let t = i as f64 / n;
                if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect();
        // Pin the endpoints exactly.
        pts[0] = self.start;
        pts[self.count - 1] = self.stop;
        pts
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("grid '{s}' is not start:stop:count[:log]"));
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => false,
            Some("log") => true,
            Some(_) => return Err(bad()),
        };
        if count == 0 || !(stop >= start) || start < 0.0 || (log && start <= 0.0) {
            return Err(bad());
        }
        Ok(Self { start, stop, count, log })
    }
}

/// Default grid for the figure sweeps: 120 log-spaced points on [0.02, 3].
pub const FIGURE_GRID: GridSpec = GridSpec {
    start: 0.02,
    stop: 3.0,
    count: 120,
    log: true,
};

/// Level counts of the finite-size curves.
pub const FIGURE_SIZES: [usize; 3] = [24, 40, 68];

/// One row of a sweep table. `levels == None` marks the thermodynamic limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub levels: Option<usize>,
    pub pairs: Option<usize>,
    pub coupling: f64,
    pub backend: Source,
    pub energy: Option<f64>,
    pub cond_energy: f64,
    pub alc: f64,
    pub ratio: Option<f64>,
    pub concurrences: Option<Vec<f64>>,
}

impl SweepRow {
    pub fn from_report(report: &EntanglementReport, keep_concurrences: bool) -> Self {
        Self {
            levels: Some(report.levels),
            pairs: Some(report.pairs),
            coupling: report.coupling,
            backend: report.source,
            energy: Some(report.energy),
            cond_energy: report.cond_energy,
            alc: report.alc,
            ratio: report.ratio,
            concurrences: keep_concurrences.then(|| report.local_concurrences.clone()),
        }
    }
}

/// Rows sorted by (L, λ) plus a metadata block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: BTreeMap<String, String>,
}

/// Locale-independent, 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0.0000000000000000e0".
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

impl SweepResult {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            let ka = a.levels.unwrap_or(usize::MAX);
            let kb = b.levels.unwrap_or(usize::MAX);
            ka.cmp(&kb).then(a.coupling.total_cmp(&b.coupling))
        });
    }

    pub fn series(&self, levels: Option<usize>) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.levels == levels)
    }

    fn metadata_block(&self) -> String {
        self.metadata
            .iter()
            .map(|(k, v)| format!("# {k}={v}\n"))
            .collect()
    }

    /// Header `L,M,lambda,ln_lambda,backend,energy,cond_energy,alc,ratio[,concurrences]`.
    pub fn to_csv(&self) -> String {
        let with_c = self.rows.iter().any(|r| r.concurrences.is_some());
        let mut out = self.metadata_block();
        out.push_str("L,M,lambda,ln_lambda,backend,energy,cond_energy,alc,ratio");
        if with_c {
            out.push_str(",concurrences");
        }
        out.push('\n');
        for r in &self.rows {
            let l = r.levels.map(|l| l.to_string()).unwrap_or_else(|| "inf".into());
            let m = r.pairs.map(|m| m.to_string()).unwrap_or_default();
            let ln = (r.coupling > 0.0).then(|| r.coupling.ln());
            let _ = write!(
                out,
                "{l},{m},{},{},{},{},{},{},{}",
                fmt_num(r.coupling),
                fmt_opt(ln),
                r.backend.name(),
                fmt_opt(r.energy),
                fmt_num(r.cond_energy),
                fmt_num(r.alc),
                fmt_opt(r.ratio)
            );
            if with_c {
                let cs = r
                    .concurrences
                    .as_ref()
                    .map(|c| c.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default();
                let _ = write!(out, ",{cs}");
            }
            out.push('\n');
        }
        out
    }
}

fn report_for(state: &BetheState) -> Result<EntanglementReport> {
    EntanglementReport::from_ground(&state.spec, &state.ground_solution()?)
}

/// Bethe continuation sweep; returns rows and the converged states.
pub fn bethe_sweep(
    levels: usize,
    pairs: usize,
    grid: &[f64],
    solver: &BetheSolver,
    keep_concurrences: bool,
) -> Result<(Vec<SweepRow>, Vec<BetheState>)> {
    let base = ModelSpec::new(crate::model::LevelSet::uniform(levels, 1.0)?, pairs, 0.0)?;
    // λ = 0 is the Fermi sea; the continuation starts at the first positive point.
    let positive: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0).collect();
    let mut rows = Vec::with_capacity(grid.len());
    if positive.len() < grid.len() {
        let fs = crate::richardson::solve(&base, solver)?;
        rows.push(SweepRow::from_report(
            &EntanglementReport::from_ground(&base, &fs)?,
            keep_concurrences,
        ));
    }
    let states = solver.continuation_sweep(&base, &positive)?;
    for st in &states {
        rows.push(SweepRow::from_report(&report_for(st)?, keep_concurrences));
    }
    Ok((rows, states))
}

/// Exact-diagonalization sweep (each point solved independently).
pub fn ed_sweep(
    levels: usize,
    pairs: usize,
    grid: &[f64],
    opts: &EdOptions,
    keep_concurrences: bool,
) -> Result<Vec<SweepRow>> {
    let base = ModelSpec::new(crate::model::LevelSet::uniform(levels, 1.0)?, pairs, 0.0)?;
    grid.par_iter()
        .map(|&lam| {
            let spec = base.with_coupling(lam);
            let ground = exactdiag::solve(&spec, opts)?;
            Ok(SweepRow::from_report(
                &EntanglementReport::from_ground(&spec, &ground)?,
                keep_concurrences,
            ))
        })
        .collect()
}

/// Thermodynamic-limit rows from the uniform-density closed forms.
pub fn thermodynamic_rows(grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&lam| {
            let b = BulkSolution::uniform(lam, 1.0)?;
            Ok(SweepRow {
                levels: None,
                pairs: None,
                coupling: lam,
                backend: Source::MeanField,
                energy: None,
                cond_energy: b.cond_energy,
                alc: b.alc,
                ratio: observables::ratio(b.alc, b.cond_energy),
                concurrences: None,
            })
        })
        .collect()
}

/// Two levels, one pair: E = −√(1+λ²) (ω_D = 1), C̄ = λ/√(1+λ²).
pub fn two_level_rows(grid: &[f64]) -> Vec<SweepRow> {
    grid.iter()
        .map(|&lam| {
            let root = lam.hypot(1.0);
            let alc = lam / root;
            // (√(1+λ²) − 1)/2 written to avoid cancellation at small λ.
            let cond = 0.5 * lam * lam / (root + 1.0);
            SweepRow {
                levels: Some(2),
                pairs: Some(1),
                coupling: lam,
                backend: Source::Analytic,
                energy: Some(-root),
                cond_energy: cond,
                alc,
                ratio: observables::ratio(alc, cond),
                concurrences: Some(vec![alc, alc]),
            }
        })
        .collect()
}

/// Threshold of a Bethe sweep, refining with re-solves started from the
/// nearest converged state.
pub fn bethe_threshold(states: &[BetheState], solver: &BetheSolver, rel_tol: f64) -> Result<Threshold> {
    let couplings: Vec<f64> = states.iter().map(BetheState::coupling).collect();
    let ratios = states
        .iter()
        .map(|s| {
            report_for(s)?
                .ratio
                .ok_or_else(|| Error::Threshold("ratio undefined at zero condensation energy".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let evaluate = |lam: f64| -> Result<f64> {
        let nearest = states
            .iter()
            .min_by(|a, b| {
                (a.coupling().ln() - lam.ln())
                    .abs()
                    .total_cmp(&(b.coupling().ln() - lam.ln()).abs())
            })
            .ok_or_else(|| Error::Threshold("empty sweep".into()))?;
        let st = solver.advance(nearest, lam)?;
        report_for(&st)?
            .ratio
            .ok_or_else(|| Error::Threshold("ratio undefined".into()))
    };
    observables::locate_threshold(&couplings, &ratios, evaluate, rel_tol)
}

/// Threshold of an analytic ratio curve sampled on `grid`.
pub fn analytic_threshold<F: Fn(f64) -> Option<f64>>(grid: &[f64], ratio: F) -> Result<Threshold> {
    let ratios = grid
        .iter()
        .map(|&l| ratio(l).ok_or_else(|| Error::Threshold(format!("ratio undefined at lambda={l}"))))
        .collect::<Result<Vec<_>>>()?;
    observables::locate_threshold(grid, &ratios, |l| ratio(l).ok_or_else(|| Error::Threshold("ratio undefined".into())), 1e-3)
}

/// Mean-field table: one row per (profile, λ).
pub fn meanfield_csv(grid: &[f64], profiles: &[DensityProfile], policy: GapPolicy) -> Result<String> {
    let rows = profiles
        .iter()
        .flat_map(|&p| grid.iter().map(move |&l| (p, l)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(p, lam)| Ok((p, BulkSolution::for_profile(lam, p, 1.0, policy)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::new();
    let _ = writeln!(out, "# omega_d=1");
    let _ = writeln!(out, "# gap_policy={policy}");
    let _ = writeln!(out, "# quadrature=adaptive Gauss-Kronrod 7/15, abs_tol=1e-12");
    out.push_str("profile,lambda,gap,alc,cond_energy,order_param\n");
    for (p, b) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.name(),
            fmt_num(b.coupling),
            fmt_num(b.gap),
            fmt_num(b.alc),
            fmt_num(b.cond_energy),
            fmt_num(b.order_param)
        );
    }
    Ok(out)
}

/// Data for the ALC and ratio figures: L=2 analytic, the Bethe sizes and the
/// thermodynamic limit on a common grid, plus one threshold per series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureData {
    pub sweep: SweepResult,
    pub thresholds: Vec<(String, Threshold)>,
}

pub fn figure_data(grid: &GridSpec, sizes: &[usize], solver: &BetheSolver) -> Result<FigureData> {
    let points = grid.points();
    let per_size = sizes
        .par_iter()
        .map(|&l| -> Result<(usize, Vec<SweepRow>, Threshold)> {
            let (rows, states) = bethe_sweep(l, l / 2, &points, solver, false)?;
            let positive: Vec<BetheState> = states;
            let t = bethe_threshold(&positive, solver, 1e-3)?;
            Ok((l, rows, t))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sweep = SweepResult::default();
    sweep.rows.extend(two_level_rows(&points));
    let mut thresholds = vec![(
        "2".to_string(),
        analytic_threshold(&points, |l| {
            let r = l.hypot(1.0);
            observables::ratio(l / r, 0.5 * l * l / (r + 1.0))
        })?,
    )];
    for (l, rows, t) in per_size {
        sweep.rows.extend(rows);
        thresholds.push((l.to_string(), t));
    }
    sweep.rows.extend(thermodynamic_rows(&points)?);
    thresholds.push((
        "inf".to_string(),
        analytic_threshold(&points, |l| {
            observables::ratio(meanfield::alc_uniform_closed_form(l), meanfield::cond_energy_thermo(l))
        })?,
    ));
    sweep.sort();
    sweep.metadata = figure_metadata(grid, solver);
    Ok(FigureData { sweep, thresholds })
}

pub fn figure_metadata(grid: &GridSpec, solver: &BetheSolver) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("omega_d".into(), "1".into());
    m.insert("level_grid".into(), "midpoint e_j=-1+(2j-1)/L, d=2/L".into());
    m.insert("filling".into(), "M=L/2".into());
    m.insert(
        "grid".into(),
        format!("{}:{}:{}:{}", grid.start, grid.stop, grid.count, if grid.log { "log" } else { "lin" }),
    );
    m.insert("tol_newton".into(), format!("{:e}", solver.tol));
    m.insert("lambda_start".into(), format!("{}", solver.lambda_start));
    m.insert("threshold_rel_tol".into(), "1e-3".into());
    m
}

/// ALC-vs-λ table.
pub fn figure2_csv(data: &FigureData) -> String {
    let mut s = data.sweep.clone();
    s.metadata.insert("figure".into(), "alc_vs_lambda".into());
    s.to_csv()
}

/// Ratio-vs-ln λ table (same columns; `ratio` and `ln_lambda` are the axes).
pub fn figure3_csv(data: &FigureData) -> String {
    let mut s = data.sweep.clone();
    s.metadata.insert("figure".into(), "ratio_vs_ln_lambda".into());
    s.to_csv()
}

pub fn thresholds_csv(data: &FigureData) -> String {
    let mut out = String::from("L,kind,lambda_star,ln_lambda_star,ratio_max\n");
    for (l, t) in &data.thresholds {
        let (kind, lam, r) = match *t {
            Threshold::Interior { coupling, ratio } => ("interior", coupling, ratio),
            Threshold::LowerBoundary { coupling, ratio } => ("lower_boundary", coupling, ratio),
            Threshold::UpperBoundary { coupling, ratio } => ("upper_boundary", coupling, ratio),
        };
        let _ = writeln!(out, "{l},{kind},{},{},{}", fmt_num(lam), fmt_num(lam.ln()), fmt_num(r));
    }
    out
}
