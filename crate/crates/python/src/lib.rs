//! Python bindings: model specs, mean-field closed forms, exact and Bethe
//! ground states, entanglement reports and the ratio threshold.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bcs::exactdiag::{self, EdOptions};
use bcs::meanfield::{self, GapPolicy};
use bcs::model::{self, DensityProfile, LevelSet};
use bcs::observables::{self, Threshold};
use bcs::richardson::{self, BetheSolver};
use bcs::sweep;
use bcs::Error;

create_exception!(bcs_entanglement, NumericalError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => NumericalError::new_err(e.to_string()),
    }
}

fn solver_with(tol: Option<f64>) -> BetheSolver {
    let mut s = BetheSolver::default();
    if let Some(t) = tol {
        s.tol = t;
    }
    s
}

/// Reduced BCS model on L equally spaced levels in [−ω_D, ω_D] with M pairs.
#[pyclass(name = "ModelSpec", frozen)]
struct PyModelSpec {
    inner: model::ModelSpec,
}

#[pymethods]
impl PyModelSpec {
    #[new]
    #[pyo3(signature = (levels, coupling, pairs=None, omega_d=1.0))]
    fn new(levels: usize, coupling: f64, pairs: Option<usize>, omega_d: f64) -> PyResult<Self> {
        let inner = match pairs {
            Some(m) => LevelSet::uniform(levels, omega_d)
                .and_then(|ls| model::ModelSpec::new(ls, m, coupling)),
            None => model::ModelSpec::half_filled(levels, coupling, omega_d),
        }
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.num_levels()
    }

    #[getter]
    fn pairs(&self) -> usize {
        self.inner.m_pairs
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling
    }

    /// g = dλ
    #[getter]
    fn pairing_strength(&self) -> f64 {
        self.inner.pairing_strength()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.levels().to_vec()
    }

    fn fermi_sea_energy(&self) -> f64 {
        self.inner.fermi_sea_energy()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelSpec(levels={}, pairs={}, coupling={})",
            self.inner.num_levels(),
            self.inner.m_pairs,
            self.inner.coupling
        )
    }
}

/// Per-level concurrences, ALC, condensation energy and C̄²/Ẽ.
#[pyclass(name = "EntanglementReport", frozen, get_all)]
struct PyReport {
    levels: usize,
    pairs: usize,
    coupling: f64,
    energy: f64,
    occupations: Vec<f64>,
    local_concurrences: Vec<f64>,
    site_entropies: Vec<f64>,
    alc: f64,
    cond_energy: f64,
    ratio: Option<f64>,
    source: String,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "EntanglementReport(levels={}, coupling={}, alc={}, cond_energy={}, source='{}')",
            self.levels, self.coupling, self.alc, self.cond_energy, self.source
        )
    }
}

fn report(
    spec: &model::ModelSpec,
    ground: &exactdiag::GroundSolution,
) -> PyResult<PyReport> {
    let r = observables::EntanglementReport::from_ground(spec, ground).map_err(py_err)?;
    Ok(PyReport {
        levels: r.levels,
        pairs: r.pairs,
        coupling: r.coupling,
        energy: r.energy,
        occupations: ground.occupations.clone(),
        local_concurrences: r.local_concurrences,
        site_entropies: r.site_entropies,
        alc: r.alc,
        cond_energy: r.cond_energy,
        ratio: r.ratio,
        source: r.source.name().to_string(),
    })
}

/// Ground state by exact diagonalization in the paired sector.
#[pyfunction]
#[pyo3(signature = (spec, dim_budget=None))]
fn solve_ed(spec: &PyModelSpec, dim_budget: Option<usize>) -> PyResult<PyReport> {
    let mut opts = EdOptions::default();
    if let Some(b) = dim_budget {
        opts.dim_budget = b;
    }
    let g = exactdiag::solve(&spec.inner, &opts).map_err(py_err)?;
    report(&spec.inner, &g)
}

/// Ground state from the Richardson equations by continuation in λ.
#[pyfunction]
#[pyo3(signature = (spec, tol=None))]
fn solve_bethe(spec: &PyModelSpec, tol: Option<f64>) -> PyResult<PyReport> {
    let g = richardson::solve(&spec.inner, &solver_with(tol)).map_err(py_err)?;
    report(&spec.inner, &g)
}

/// One report per coupling, following a single continuation path.
#[pyfunction]
#[pyo3(signature = (levels, couplings, pairs=None, tol=None))]
fn bethe_sweep(
    levels: usize,
    couplings: Vec<f64>,
    pairs: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Vec<PyReport>> {
    let pairs = pairs.unwrap_or(levels / 2);
    let solver = solver_with(tol);
    let mut grid = couplings;
    grid.sort_by(f64::total_cmp);
    let base = model::ModelSpec::new(LevelSet::uniform(levels, 1.0).map_err(py_err)?, pairs, 0.0)
        .map_err(py_err)?;
    let mut out = Vec::with_capacity(grid.len());
    let positive: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0).collect();
    if positive.len() < grid.len() {
        let g = richardson::solve(&base, &solver).map_err(py_err)?;
        out.push(report(&base, &g)?);
    }
    for st in solver.continuation_sweep(&base, &positive).map_err(py_err)? {
        let g = st.ground_solution().map_err(py_err)?;
        out.push(report(&st.spec, &g)?);
    }
    Ok(out)
}

/// Location of the maximum of C̄²/Ẽ over a log grid, refined by
/// golden-section search. Returns (kind, λ*, ratio at λ*).
#[pyfunction]
#[pyo3(signature = (levels, start=0.02, stop=3.0, count=120, rel_tol=1e-3))]
fn ratio_threshold(
    levels: usize,
    start: f64,
    stop: f64,
    count: usize,
    rel_tol: f64,
) -> PyResult<(String, f64, f64)> {
    let grid = sweep::GridSpec { start, stop, count, log: true };
    let solver = BetheSolver::default();
    let (_, states) =
        sweep::bethe_sweep(levels, levels / 2, &grid.points(), &solver, false).map_err(py_err)?;
    let t = sweep::bethe_threshold(&states, &solver, rel_tol).map_err(py_err)?;
    Ok(match t {
        Threshold::Interior { coupling, ratio } => ("interior".into(), coupling, ratio),
        Threshold::LowerBoundary { coupling, ratio } => ("lower_boundary".into(), coupling, ratio),
        Threshold::UpperBoundary { coupling, ratio } => ("upper_boundary".into(), coupling, ratio),
    })
}

/// Δ̃ = 1/sinh(1/λ) in units of ω_D.
#[pyfunction]
#[pyo3(signature = (coupling, omega_d=1.0))]
fn bulk_gap(coupling: f64, omega_d: f64) -> PyResult<f64> {
    meanfield::bulk_gap(coupling, omega_d).map_err(py_err)
}

#[pyfunction]
fn alc_uniform(coupling: f64) -> f64 {
    meanfield::alc_uniform_closed_form(coupling)
}

#[pyfunction]
fn cond_energy_thermo(coupling: f64) -> f64 {
    meanfield::cond_energy_thermo(coupling)
}

/// Thermodynamic ALC for a density profile; policy "A" solves the gap
/// equation for that profile, "B" keeps the uniform-density gap.
#[pyfunction]
#[pyo3(signature = (coupling, profile="uniform", policy="A", omega_d=1.0))]
fn alc_thermo(coupling: f64, profile: &str, policy: &str, omega_d: f64) -> PyResult<f64> {
    let profile: DensityProfile = profile.parse().map_err(py_err)?;
    let policy: GapPolicy = policy.parse().map_err(py_err)?;
    meanfield::alc_thermo(coupling, profile, omega_d, policy).map_err(py_err)
}

/// √(n(2−n)) for a level with mean pair-occupation number n.
#[pyfunction]
fn local_concurrence(occupation: f64) -> PyResult<f64> {
    observables::local_concurrence(occupation).map_err(py_err)
}

/// Weak-coupling limit of C̄²/Ẽ.
#[pyfunction]
fn weak_coupling_ratio() -> f64 {
    observables::weak_coupling_ratio()
}

#[pymodule]
pub fn bcs_entanglement(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelSpec>()?;
    m.add_class::<PyReport>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(solve_ed, m)?)?;
    m.add_function(wrap_pyfunction!(solve_bethe, m)?)?;
    m.add_function(wrap_pyfunction!(bethe_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(bulk_gap, m)?)?;
    m.add_function(wrap_pyfunction!(alc_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(cond_energy_thermo, m)?)?;
    m.add_function(wrap_pyfunction!(alc_thermo, m)?)?;
    m.add_function(wrap_pyfunction!(local_concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(weak_coupling_ratio, m)?)?;
    Ok(())
}
