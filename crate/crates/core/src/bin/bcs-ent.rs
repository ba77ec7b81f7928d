//! Command-line front end: single solves, λ sweeps, figure data and the
//! acceptance checks.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bcs_entanglement::exactdiag::{self, EdOptions};
use bcs_entanglement::meanfield::GapPolicy;
use bcs_entanglement::model::{parse_key_values, DensityProfile, LevelSet, ModelSpec};
use bcs_entanglement::observables::EntanglementReport;
use bcs_entanglement::richardson::BetheSolver;
use bcs_entanglement::sweep::{self, GridSpec, SweepResult};
use bcs_entanglement::verify::{self, VerifyConfig};
use bcs_entanglement::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "bcs-ent", version, about = "Ground-state entanglement of the reduced BCS model")]
struct Cli {
    /// key=value file; keys mirror the long flags (L, M, lambda, grid, ...).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Thermodynamic-limit gap, ALC, condensation energy and order parameter.
    Meanfield(MeanfieldArgs),
    /// Solve one (L, M, λ) and print an entanglement report as JSON.
    Solve(SolveArgs),
    /// λ sweep for one system size, written as CSV.
    Sweep(SweepArgs),
    /// Write the data behind the ALC-vs-density, ALC-vs-λ and ratio plots.
    Figure(FigureArgs),
    /// Run the acceptance checks; exits non-zero if any fails.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct SolverFlags {
    /// Newton tolerance on max |R_i|.
    #[arg(long = "tol-newton")]
    tol_newton: Option<f64>,
    /// Largest paired-basis dimension exact diagonalization may build.
    #[arg(long = "dim-budget")]
    dim_budget: Option<usize>,
}

#[derive(Args, Debug)]
struct MeanfieldArgs {
    /// start:stop:count[:log]
    #[arg(long)]
    grid: Option<String>,
    /// uniform|abs|square|parabolic|tent|all
    #[arg(long)]
    profile: Option<String>,
    /// A (self-consistent) or B (uniform gap)
    #[arg(long = "gap-policy")]
    gap_policy: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Backend {
    Ed,
    Bethe,
    Both,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long = "L")]
    levels: Option<usize>,
    /// Defaults to L/2.
    #[arg(long = "M")]
    pairs: Option<usize>,
    #[arg(long = "lambda")]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long = "L")]
    levels: Option<usize>,
    #[arg(long = "M")]
    pairs: Option<usize>,
    #[arg(long)]
    grid: Option<String>,
    /// ed or bethe
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Add the per-level concurrences column.
    #[arg(long)]
    concurrences: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
    All,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(value_enum)]
    which: Figure,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "gap-policy")]
    gap_policy: Option<String>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    solver: SolverFlags,
    /// Run only these checks (1-8).
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

/// Flag values with config-file fallback.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => parse_key_values(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.file
            .get(key)
            .or_else(|| self.file.get(&key.replace('-', "_")))
            .map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidArgument(format!("config: bad value for {key}: '{v}'"))),
            None => Ok(None),
        }
    }

    fn require<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?
            .ok_or_else(|| Error::InvalidArgument(format!("missing --{key}")))
    }

    fn solver(&self, flags: &SolverFlags) -> Result<(BetheSolver, EdOptions)> {
        let mut solver = BetheSolver::default();
        if let Some(t) = self.get(flags.tol_newton, "tol-newton")? {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument("tol-newton must be positive".into()));
            }
            solver.tol = t;
        }
        let mut ed = EdOptions::default();
        if let Some(b) = self.get(flags.dim_budget, "dim-budget")? {
            ed.dim_budget = b;
        }
        Ok((solver, ed))
    }

    fn omega_d(&self) -> Result<f64> {
        Ok(self.get(None, "omega_d")?.unwrap_or(1.0))
    }

    fn backend(&self, flag: Option<Backend>, default: Backend) -> Result<Backend> {
        if let Some(b) = flag {
            return Ok(b);
        }
        match self.raw("backend") {
            None => Ok(default),
            Some(v) => Backend::from_str(v, true)
                .map_err(|_| Error::InvalidArgument(format!("config: bad backend '{v}'"))),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_meanfield(args: MeanfieldArgs, s: &Settings) -> Result<()> {
    let grid: GridSpec = s
        .get(args.grid, "grid")?
        .map(|g: String| g.parse())
        .transpose()?
        .unwrap_or(GridSpec { start: 0.0, stop: 3.0, count: 61, log: false });
    let profile: String = s.get(args.profile, "profile")?.unwrap_or_else(|| "all".into());
    let profiles = if profile == "all" {
        DensityProfile::ALL.to_vec()
    } else {
        vec![profile.parse()?]
    };
    let policy: GapPolicy = s
        .get(args.gap_policy, "gap-policy")?
        .map(|p: String| p.parse())
        .transpose()?
        .unwrap_or_default();
    let csv = sweep::meanfield_csv(&grid.points(), &profiles, policy)?;
    emit(s.get(args.out, "out")?.as_deref(), &csv)
}

fn model_spec(levels: usize, pairs: Option<usize>, lambda: f64, omega_d: f64) -> Result<ModelSpec> {
    match pairs {
        Some(m) => ModelSpec::new(LevelSet::uniform(levels, omega_d)?, m, lambda),
        None => ModelSpec::half_filled(levels, lambda, omega_d),
    }
}

fn cmd_solve(args: SolveArgs, s: &Settings) -> Result<()> {
    let levels = s.require(args.levels, "L")?;
    let pairs = s.get(args.pairs, "M")?;
    let lambda = s.require(args.lambda, "lambda")?;
    let spec = model_spec(levels, pairs, lambda, s.omega_d()?)?;
    let backend = s.backend(args.backend, Backend::Bethe)?;
    let (solver, ed) = s.solver(&args.solver)?;

    let mut reports = Vec::new();
    let mut extra = serde_json::Map::new();
    if matches!(backend, Backend::Ed | Backend::Both) {
        let g = exactdiag::solve(&spec, &ed)?;
        reports.push(EntanglementReport::from_ground(&spec, &g)?);
    }
    if matches!(backend, Backend::Bethe | Backend::Both) {
        if spec.coupling > 0.0 {
            let st = solver.solve(&spec)?;
            extra.insert("bae_residual".into(), json!(st.residual));
            extra.insert("constraint_error".into(), json!(st.constraint_error()));
            reports.push(EntanglementReport::from_ground(&spec, &st.ground_solution()?)?);
        } else {
            let g = bcs_entanglement::richardson::solve(&spec, &solver)?;
            reports.push(EntanglementReport::from_ground(&spec, &g)?);
        }
    }
    if let [a, b] = reports.as_slice() {
        let occ = a
            .local_concurrences
            .iter()
            .zip(&b.local_concurrences)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        extra.insert(
            "max_deviation".into(),
            json!({
                "energy": (a.energy - b.energy).abs(),
                "alc": (a.alc - b.alc).abs(),
                "local_concurrence": occ,
            }),
        );
    }
    let doc = json!({
        "L": spec.num_levels(),
        "M": spec.m_pairs,
        "lambda": spec.coupling,
        "omega_d": spec.level_set.omega_d(),
        "level_grid": "midpoint",
        "tol_newton": solver.tol,
        "reports": reports,
        "diagnostics": extra,
    });
    emit(s.get(args.out, "out")?.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))
}

fn cmd_sweep(args: SweepArgs, s: &Settings) -> Result<()> {
    let levels = s.require(args.levels, "L")?;
    let pairs = match s.get(args.pairs, "M")? {
        Some(m) => m,
        None if levels % 2 == 0 => levels / 2,
        None => return Err(Error::InvalidArgument("odd L needs an explicit --M".into())),
    };
    let grid: GridSpec = s
        .get(args.grid, "grid")?
        .map(|g: String| g.parse())
        .transpose()?
        .unwrap_or(sweep::FIGURE_GRID);
    let backend = s.backend(args.backend, Backend::Bethe)?;
    let (solver, ed) = s.solver(&args.solver)?;
    let start = Instant::now();
    let rows = match backend {
        Backend::Ed => sweep::ed_sweep(levels, pairs, &grid.points(), &ed, args.concurrences)?,
        Backend::Bethe => sweep::bethe_sweep(levels, pairs, &grid.points(), &solver, args.concurrences)?.0,
        Backend::Both => {
            return Err(Error::InvalidArgument("sweep takes --backend ed or bethe".into()))
        }
    };
    let mut result = SweepResult {
        rows,
        metadata: sweep::figure_metadata(&grid, &solver),
    };
    result.metadata.insert("filling".into(), format!("M={pairs}"));
    result.sort();
    eprintln!("sweep finished in {:.2} s", start.elapsed().as_secs_f64());
    emit(s.get(args.out, "out")?.as_deref(), &result.to_csv())
}

fn cmd_figure(args: FigureArgs, s: &Settings) -> Result<()> {
    let dir: PathBuf = s.get(args.out, "out")?.unwrap_or_else(|| PathBuf::from("figures"));
    fs::create_dir_all(&dir)?;
    let grid: GridSpec = s
        .get(args.grid, "grid")?
        .map(|g: String| g.parse())
        .transpose()?
        .unwrap_or(sweep::FIGURE_GRID);
    let policy: GapPolicy = s
        .get(args.gap_policy, "gap-policy")?
        .map(|p: String| p.parse())
        .transpose()?
        .unwrap_or_default();
    let (solver, _) = s.solver(&args.solver)?;
    let start = Instant::now();
    let mut written = Vec::new();
    if matches!(args.which, Figure::Fig1 | Figure::All) {
        let csv = sweep::meanfield_csv(&grid.points(), &DensityProfile::ALL, policy)?;
        fs::write(dir.join("fig1_meanfield_alc.csv"), csv)?;
        written.push("fig1_meanfield_alc.csv");
    }
    if matches!(args.which, Figure::Fig2 | Figure::Fig3 | Figure::All) {
        let data = sweep::figure_data(&grid, &sweep::FIGURE_SIZES, &solver)?;
        if matches!(args.which, Figure::Fig2 | Figure::All) {
            fs::write(dir.join("fig2_alc.csv"), sweep::figure2_csv(&data))?;
            written.push("fig2_alc.csv");
        }
        if matches!(args.which, Figure::Fig3 | Figure::All) {
            fs::write(dir.join("fig3_ratio.csv"), sweep::figure3_csv(&data))?;
            fs::write(dir.join("fig3_thresholds.csv"), sweep::thresholds_csv(&data))?;
            written.push("fig3_ratio.csv");
            written.push("fig3_thresholds.csv");
        }
    }
    let meta = json!({
        "files": written,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "grid": format!("{}:{}:{}:{}", grid.start, grid.stop, grid.count, if grid.log { "log" } else { "lin" }),
        "gap_policy": policy.to_string(),
        "tol_newton": solver.tol,
        "omega_d": 1.0,
    });
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    for f in written {
        println!("{}", dir.join(f).display());
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs, s: &Settings) -> Result<bool> {
    let (solver, ed) = s.solver(&args.solver)?;
    let cfg = VerifyConfig { solver, ed };
    let ids: Vec<usize> = if args.only.is_empty() {
        (1..=verify::CHECK_COUNT).collect()
    } else {
        args.only
    };
    let mut all = true;
    for id in ids {
        let outcome = verify::run_check(id, &cfg);
        println!("{outcome}");
        all &= outcome.passed;
    }
    println!("{}", if all { "all checks passed" } else { "some checks FAILED" });
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Meanfield(a) => cmd_meanfield(a, &settings).map(|_| true),
        Command::Solve(a) => cmd_solve(a, &settings).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a, &settings).map(|_| true),
        Command::Figure(a) => cmd_figure(a, &settings).map(|_| true),
        Command::Verify(a) => cmd_verify(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
