//! Exact ground state from the Richardson–Gaudin (Bethe ansatz) equations.
//!
//! The pair energies v_α are never tracked directly: they collide and turn
//! complex as λ grows. Instead we solve for the real variables
//! Λ_i = Σ_α 1/(ε_i − v_α), which satisfy the quadratic system
//!
//! ```text
//! R_i = Λ_i² − (2/g) Λ_i − Σ_{k≠i} (Λ_i − Λ_k)/(ε_i − ε_k) = 0,   g = dλ.
//! ```
//!
//! The ground-state branch is selected by continuation from λ → 0⁺, where
//! the occupied levels carry Λ_i ≈ 2/g. Energy and occupations follow from
//! Λ without reconstructing the roots.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactdiag::{GroundSolution, Source};
use crate::model::ModelSpec;

/// Converged Λ variables for one (levels, M, λ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetheState {
    pub lambda_vars: Vec<f64>,
    pub spec: ModelSpec,
    /// max_i |R_i| at the solution.
    pub residual: f64,
    pub iterations: usize,
}

impl BetheState {
    pub fn coupling(&self) -> f64 {
        self.spec.coupling
    }

    /// Relative violation of Σ_i Λ_i = 2M/g.
    pub fn constraint_error(&self) -> f64 {
        let target = 2.0 * self.spec.m_pairs as f64 / self.spec.pairing_strength();
        let sum: f64 = self.lambda_vars.iter().sum();
        (sum - target).abs() / target.abs().max(f64::MIN_POSITIVE)
    }

    pub fn energy(&self) -> f64 {
        energy_from_state(self)
    }

    pub fn ground_solution(&self) -> Result<GroundSolution> {
        Ok(GroundSolution {
            energy: self.energy(),
            occupations: occupations_from_state(self)?,
            source: Source::Bethe,
        })
    }
}

/// R_i for all i, with the leading term factored as Λ_i(Λ_i − 2/g) to limit
/// cancellation when Λ_i ≈ 2/g.
pub fn quadratic_bae_residual(lambda_vars: &[f64], spec: &ModelSpec) -> Vec<f64> {
    let eps = spec.levels();
    let two_over_g = 2.0 / spec.pairing_strength();
    (0..eps.len())
        .map(|i| {
            let li = lambda_vars[i];
            let coupling_sum: f64 = (0..eps.len())
                .filter(|&k| k != i)
                .map(|k| (li - lambda_vars[k]) / (eps[i] - eps[k]))
                .sum();
            li * (li - two_over_g) - coupling_sum
        })
        .collect()
}

/// J_ik = ∂R_i/∂Λ_k.
pub fn jacobian(lambda_vars: &[f64], spec: &ModelSpec) -> DMatrix<f64> {
    let eps = spec.levels();
    let n = eps.len();
    let two_over_g = 2.0 / spec.pairing_strength();
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            let inv_sum: f64 = (0..n).filter(|&m| m != i).map(|m| 1.0 / (eps[i] - eps[m])).sum();
            2.0 * lambda_vars[i] - two_over_g - inv_sum
        } else {
            1.0 / (eps[i] - eps[k])
        }
    })
}

/// Weak-coupling start: v_α ≈ ε_α − g/2 for the lowest M levels.
pub fn initial_guess(spec: &ModelSpec) -> Vec<f64> {
    let eps = spec.levels();
    let m = spec.m_pairs;
    let g = spec.pairing_strength();
    (0..eps.len())
        .map(|i| {
            let spectators: f64 = (0..m).filter(|&k| k != i).map(|k| 1.0 / (eps[i] - eps[k])).sum();
            if i < m {
                2.0 / g + spectators
            } else {
                spectators
            }
        })
        .collect()
}

/// E = 2Σ_α v_α + gM with Σ_α v_α = (g/2)[Σ_i ε_i Λ_i − LM + M(M−1)],
/// i.e. E = g[Σ_i ε_i Λ_i − LM + M²].
pub fn energy_from_state(state: &BetheState) -> f64 {
    let spec = &state.spec;
    let l = spec.num_levels() as f64;
    let m = spec.m_pairs as f64;
    let g = spec.pairing_strength();
    let dot: f64 = spec
        .levels()
        .iter()
        .zip(&state.lambda_vars)
        .map(|(e, x)| e * x)
        .sum();
    g * (dot - l * m + m * m)
}

/// Σ_α v_α from the same identity.
pub fn root_sum(state: &BetheState) -> f64 {
    let spec = &state.spec;
    let l = spec.num_levels() as f64;
    let m = spec.m_pairs as f64;
    let dot: f64 = spec
        .levels()
        .iter()
        .zip(&state.lambda_vars)
        .map(|(e, x)| e * x)
        .sum();
    0.5 * spec.pairing_strength() * (dot - l * m + m * (m - 1.0))
}

/// ⟨n_j⟩ = ∂E/∂ε_j by implicit differentiation of R(Λ, ε) = 0.
///
/// Uses the adjoint form: with Jᵀw + μ1 = ε (the extra unknown μ pairs
/// with the fixed-M constraint, which does not depend on ε),
/// ⟨n_j⟩ = g[Λ_j − Σ_{k≠j} (w_j + w_k)(Λ_j − Λ_k)/(ε_j − ε_k)²],
/// so a single linear solve yields every occupation.
pub fn occupations_from_state(state: &BetheState) -> Result<Vec<f64>> {
    let spec = &state.spec;
    let eps = spec.levels();
    let lam = &state.lambda_vars;
    let g = spec.pairing_strength();
    let w = match solve_bordered_adjoint(&jacobian(lam, spec), eps) {
        Some(w) => w,
        None => return occupations_finite_difference(state, 1e-6, &BetheSolver::default()),
    };
    Ok((0..eps.len())
        .map(|j| {
            let s: f64 = (0..eps.len())
                .filter(|&k| k != j)
                .map(|k| (w[j] + w[k]) * (lam[j] - lam[k]) / (eps[j] - eps[k]).powi(2))
                .sum();
            g * (lam[j] - s)
        })
        .collect())
}

/// ⟨n_j⟩ by central differences, re-solving at ε_j ± h from the converged Λ.
pub fn occupations_finite_difference(
    state: &BetheState,
    h: f64,
    solver: &BetheSolver,
) -> Result<Vec<f64>> {
    let spec = &state.spec;
    (0..spec.num_levels())
        .map(|j| {
            let shifted = |delta: f64| -> Result<f64> {
                let ls = spec.level_set.with_shifted_level(j, delta);
                let s = ModelSpec { level_set: ls, ..spec.clone() };
                Ok(solver.newton_solve(&state.lambda_vars, &s)?.energy())
            };
            Ok((shifted(h)? - shifted(-h)?) / (2.0 * h))
        })
        .collect()
}

/// Newton and continuation settings. Tolerances are in units where ω_D = 1.
#[derive(Debug, Clone)]
pub struct BetheSolver {
    /// Target for max_i |R_i|.
    pub tol: f64,
    pub max_iter: usize,
    /// Coupling at which continuation starts from the weak-coupling guess.
    pub lambda_start: f64,
    /// Smallest continuation step before giving up.
    pub min_step: f64,
    /// Largest ratio λ_next/λ_prev attempted in one continuation step.
    pub max_ratio: f64,
}

impl Default for BetheSolver {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 50,
            lambda_start: 0.01,
            min_step: 1e-6,
            max_ratio: 1.2,
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least-squares solve of [J; 1ᵀ] x = [rhs; total].
///
/// The row of ones enforces Σ_i Λ_i = 2M/g. Near half filling J alone
/// becomes nearly singular along the uniform direction as λ grows, while
/// the bordered system stays well conditioned.
fn solve_bordered(jac: &DMatrix<f64>, rhs: &[f64], total: f64) -> Option<DVector<f64>> {
    let n = jac.nrows();
    let mut a = DMatrix::zeros(n + 1, n);
    a.view_mut((0, 0), (n, n)).copy_from(jac);
    a.row_mut(n).fill(1.0);
    let mut b = DVector::zeros(n + 1);
    b.rows_mut(0, n).copy_from_slice(rhs);
    b[n] = total;
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > 1e-13 * smax) {
        return None;
    }
    svd.solve(&b, 0.0).ok().filter(|x| x.iter().all(|v| v.is_finite()))
}

/// Minimum-norm solution of the transposed bordered system [Jᵀ | 1] y = rhs.
fn solve_bordered_adjoint(jac: &DMatrix<f64>, rhs: &[f64]) -> Option<DVector<f64>> {
    let n = jac.nrows();
    let mut a = DMatrix::zeros(n, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&jac.transpose());
    a.column_mut(n).fill(1.0);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > 1e-13 * smax) {
        return None;
    }
    svd.solve(&DVector::from_column_slice(rhs), 0.0)
        .ok()
        .filter(|x| x.iter().all(|v| v.is_finite()))
}

fn constraint_gap(lambda_vars: &[f64], spec: &ModelSpec) -> f64 {
    lambda_vars.iter().sum::<f64>() - 2.0 * spec.m_pairs as f64 / spec.pairing_strength()
}

impl BetheSolver {
    /// Damped Newton on R(Λ) = 0.
    ///
    /// Succeeds once max|R_i| < tol. When Λ is large (small g) rounding puts
    /// a floor near ulp(Λ²) under the residual; in that case the iteration
    /// also stops once the residual is below tol·max(1, max Λ_i²) and a
    /// further step no longer reduces it.
    pub fn newton_solve(&self, init: &[f64], spec: &ModelSpec) -> Result<BetheState> {
        if init.len() != spec.num_levels() {
            return Err(Error::InvalidArgument(format!(
                "initial guess has {} entries for L={}",
                init.len(),
                spec.num_levels()
            )));
        }
        if init.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("initial guess is not finite".into()));
        }
        if !(spec.pairing_strength() > 0.0) {
            return Err(Error::Domain(
                "Bethe equations need a positive coupling; use the Fermi sea at lambda = 0".into(),
            ));
        }
        let mut lam = init.to_vec();
        let mut res = quadratic_bae_residual(&lam, spec);
        let mut rmax = max_abs(&res);
        let mut polish = 0;
        for it in 0..self.max_iter {
            let scale = 1.0f64.max(lam.iter().fold(0.0f64, |m, x| m.max(x * x)));
            if rmax < self.tol || (rmax < self.tol * scale && polish >= 2) {
                return Ok(BetheState {
                    lambda_vars: lam,
                    spec: spec.clone(),
                    residual: rmax,
                    iterations: it,
                });
            }
            let jac = jacobian(&lam, spec);
            let step = solve_bordered(&jac, &res, constraint_gap(&lam, spec))
                .ok_or(Error::SingularJacobian { lambda: spec.coupling })?;
            let merit = |r: &[f64], x: &[f64]| norm2(r).hypot(constraint_gap(x, spec));
            let r0 = merit(&res, &lam);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1.0 / 1024.0 {
                let trial: Vec<f64> = lam.iter().zip(step.iter()).map(|(x, s)| x - t * s).collect();
                let tres = quadratic_bae_residual(&trial, spec);
                if merit(&tres, &trial) < r0 {
                    lam = trial;
                    res = tres;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            let new_max = max_abs(&res);
            if rmax < self.tol * scale {
                if !accepted || new_max >= 0.5 * rmax {
                    polish += 1;
                }
            } else if !accepted {
                break;
            }
            rmax = new_max;
        }
        let scale = 1.0f64.max(lam.iter().fold(0.0f64, |m, x| m.max(x * x)));
        if rmax < self.tol * scale {
            return Ok(BetheState {
                lambda_vars: lam,
                spec: spec.clone(),
                residual: rmax,
                iterations: self.max_iter,
            });
        }
        Err(Error::NoConvergence {
            solver: "Bethe Newton",
            iterations: self.max_iter,
            residual: rmax,
        })
    }

    /// Tangent predictor for moving `state` to coupling `target`, extrapolated
    /// in x_i = gΛ_i/2, which stays O(1) as g → 0.
    fn predict(&self, state: &BetheState, target: f64) -> Vec<f64> {
        let spec = &state.spec;
        let g0 = spec.pairing_strength();
        let g1 = spec.level_set.spacing() * target;
        let lam = &state.lambda_vars;
        // J dΛ/dg = −∂R/∂g = −(2/g²)Λ, with d(ΣΛ)/dg = −2M/g²
        let rhs: Vec<f64> = lam.iter().map(|x| -2.0 * x / (g0 * g0)).collect();
        let total = -2.0 * spec.m_pairs as f64 / (g0 * g0);
        match solve_bordered(&jacobian(lam, spec), &rhs, total) {
            Some(dlam) => lam
                .iter()
                .zip(dlam.iter())
                .map(|(x, dx)| {
                    let xs = 0.5 * g0 * x;
                    let dxs = 0.5 * x + 0.5 * g0 * dx;
                    2.0 * (xs + (g1 - g0) * dxs) / g1
                })
                .collect(),
            _ => lam.iter().map(|x| x * g0 / g1).collect(),
        }
    }

    /// Follows the branch of `state` to coupling `target` (either direction),
    /// halving failed steps down to `min_step`.
    pub fn advance(&self, state: &BetheState, target: f64) -> Result<BetheState> {
        if !(target > 0.0) {
            return Err(Error::Domain(format!("continuation target {target} must be positive")));
        }
        let mut current = state.clone();
        while current.coupling() != target {
            let here = current.coupling();
            let ratio = self.max_ratio;
            let mut next = if target > here {
                target.min(here * ratio)
            } else {
                target.max(here / ratio)
            };
            loop {
                let spec = current.spec.with_coupling(next);
                let guess = self.predict(&current, next);
                match self.newton_solve(&guess, &spec) {
                    Ok(s) if s.constraint_error() < 1e-9 => {
                        current = s;
                        break;
                    }
                    _ => {
                        let half = 0.5 * (next - here);
                        if half.abs() < self.min_step {
                            return Err(Error::ContinuationFailed {
                                last_good: here,
                                target,
                                min_step: self.min_step,
                            });
                        }
                        next = here + half;
                    }
                }
            }
        }
        Ok(current)
    }

    /// Ground state at `spec.coupling`, by continuation from `lambda_start`.
    pub fn solve(&self, spec: &ModelSpec) -> Result<BetheState> {
        let start = self.lambda_start.min(spec.coupling);
        let s0 = self.start_state(&spec.with_coupling(start))?;
        self.advance(&s0, spec.coupling)
    }

    fn start_state(&self, spec: &ModelSpec) -> Result<BetheState> {
        self.newton_solve(&initial_guess(spec), spec)
    }

    /// Solves along an ascending λ grid, warm-starting each point from the last.
    pub fn continuation_sweep(&self, base: &ModelSpec, grid: &[f64]) -> Result<Vec<BetheState>> {
        if grid.is_empty() {
            return Ok(Vec::new());
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) || !(grid[0] > 0.0) {
            return Err(Error::InvalidArgument(
                "continuation grid must be positive and strictly ascending".into(),
            ));
        }
        let first = self.solve(&base.with_coupling(grid[0]))?;
        let mut out = vec![first];
        for &lam in &grid[1..] {
            let prev = out.last().expect("non-empty");
            out.push(self.advance(prev, lam)?);
        }
        Ok(out)
    }
}

/// Ground energy and occupations, including the λ = 0 Fermi sea.
pub fn solve(spec: &ModelSpec, solver: &BetheSolver) -> Result<GroundSolution> {
    if spec.coupling == 0.0 {
        let occupations = (0..spec.num_levels())
            .map(|j| if j < spec.m_pairs { 2.0 } else { 0.0 })
            .collect();
        return Ok(GroundSolution {
            energy: spec.fermi_sea_energy(),
            occupations,
            source: Source::Bethe,
        });
    }
    solver.solve(spec)?.ground_solution()
}

/// Rebuilds the pair energies v_α as zeros of the monic polynomial P with
/// P'(ε_i) = Λ_i P(ε_i). Diagnostic only; ill-conditioned beyond small L.
pub fn reconstruct_roots(state: &BetheState) -> Result<Vec<Complex<f64>>> {
    let spec = &state.spec;
    let eps = spec.levels();
    let m = spec.m_pairs;
    if spec.num_levels() > 16 {
        return Err(Error::InvalidArgument(
            "root reconstruction is limited to L <= 16".into(),
        ));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    // P(z) = z^M + Σ_{k<M} c_k z^k; each level gives one linear equation in c.
    let l = eps.len();
    let mut a = DMatrix::zeros(l, m);
    let mut b = DVector::zeros(l);
    for (i, (&e, &x)) in eps.iter().zip(&state.lambda_vars).enumerate() {
        for k in 0..m {
            let dp = if k == 0 { 0.0 } else { k as f64 * e.powi(k as i32 - 1) };
            a[(i, k)] = dp - x * e.powi(k as i32);
        }
        b[i] = -(m as f64 * e.powi(m as i32 - 1) - x * e.powi(m as i32));
    }
    let coeffs = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut companion = DMatrix::zeros(m, m);
    for k in 0..m {
        companion[(k, m - 1)] = -coeffs[k];
        if k + 1 < m {
            companion[(k + 1, k)] = 1.0;
        }
    }
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelSet;
    use approx::assert_relative_eq;

    fn spec(l: usize, lam: f64) -> ModelSpec {
        ModelSpec::half_filled(l, lam, 1.0).unwrap()
    }

    #[test]
    fn single_level() {
        let ls = LevelSet::new(vec![0.3], 1.0, 1.0).unwrap();
        let s = ModelSpec::new(ls, 1, 0.7).unwrap();
        let g = s.pairing_strength();
        let r = quadratic_bae_residual(&[2.0 / g], &s);
        assert!(r[0].abs() < 1e-14);
        let st = BetheSolver::default().newton_solve(&initial_guess(&s), &s).unwrap();
        // 1×1 Hamiltonian: ⟨H⟩ = 2ε.
        assert_relative_eq!(st.energy(), 0.6, max_relative = 1e-13);
        assert_relative_eq!(root_sum(&st), 0.3 - g / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn two_level_analytic_root() {
        let s = spec(2, 1.0);
        let (e1, e2) = (-0.5, 0.5);
        let g = s.pairing_strength();
        let v = (-g - (g * g + (e2 - e1) * (e2 - e1)).sqrt() + e1 + e2) / 2.0;
        let lam = [1.0 / (e1 - v), 1.0 / (e2 - v)];
        let r = quadratic_bae_residual(&lam, &s);
        assert!(max_abs(&r) < 1e-12);
        assert!(max_abs(&quadratic_bae_residual(&[0.3, -1.7], &s)) > 1e-3);
    }

    #[test]
    fn initial_guess_limits() {
        let s = spec(2, 1e-6);
        let g = s.pairing_strength();
        let guess = initial_guess(&s);
        assert_relative_eq!(guess[0], 2.0 / g);
        assert_relative_eq!(guess[1], 1.0);
    }

    #[test]
    fn newton_from_guess_converges_quickly() {
        let s = spec(4, 0.01);
        let st = BetheSolver::default().newton_solve(&initial_guess(&s), &s).unwrap();
        assert!(st.iterations <= 6, "{} iterations", st.iterations);
    }

    #[test]
    fn two_level_energy_and_occupations() {
        let st = BetheSolver::default().solve(&spec(2, 1.0)).unwrap();
        assert_relative_eq!(st.energy(), -2f64.sqrt(), max_relative = 1e-12);
        assert!(st.residual < 1e-11);
        let occ = occupations_from_state(&st).unwrap();
        assert_relative_eq!(occ[0], 1.0 + 0.5f64.sqrt(), max_relative = 1e-11);
        assert_relative_eq!(occ[1], 1.0 - 0.5f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn implicit_matches_finite_difference() {
        let solver = BetheSolver::default();
        for (l, lam) in [(6, 0.4), (10, 1.3)] {
            let st = solver.solve(&spec(l, lam)).unwrap();
            let a = occupations_from_state(&st).unwrap();
            let b = occupations_finite_difference(&st, 1e-6, &solver).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6, "L={l}: {x} vs {y}");
            }
            assert!((a.iter().sum::<f64>() - l as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn reconstructed_roots_reproduce_energy() {
        let solver = BetheSolver::default();
        for lam in [0.2, 1.0, 3.0] {
            let st = solver.solve(&spec(6, lam)).unwrap();
            let roots = reconstruct_roots(&st).unwrap();
            let sum: Complex<f64> = roots.iter().sum();
            assert!(sum.im.abs() < 1e-8);
            assert!((sum.re - root_sum(&st)).abs() < 1e-8, "lambda={lam}");
            let g = st.spec.pairing_strength();
            assert!((2.0 * sum.re + g * 3.0 - st.energy()).abs() < 1e-8);
        }
    }

    #[test]
    fn sweep_is_monotone_and_tight() {
        let solver = BetheSolver::default();
        let grid: Vec<f64> = (0..100).map(|i| 0.01 * (300f64).powf(i as f64 / 99.0)).collect();
        let states = solver.continuation_sweep(&spec(24, 0.0), &grid).unwrap();
        let mut last = f64::INFINITY;
        for st in &states {
            assert!(st.residual < 1e-10 * 1f64.max(st.lambda_vars.iter().fold(0.0, |m, x| m.max(x * x))));
            assert!(st.constraint_error() < 1e-9);
            assert!(st.lambda_vars.iter().all(|x| x.is_finite()));
            let e = st.energy();
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn bad_inputs() {
        let solver = BetheSolver::default();
        assert!(solver.newton_solve(&[1.0], &spec(2, 1.0)).is_err());
        assert!(solver.newton_solve(&[f64::NAN, 1.0], &spec(2, 1.0)).is_err());
        assert!(solver.newton_solve(&[1.0, 1.0], &spec(2, 0.0)).is_err());
        assert!(solver.continuation_sweep(&spec(4, 0.0), &[0.5, 0.3]).is_err());
        let fs = solve(&spec(4, 0.0), &solver).unwrap();
        assert_eq!(fs.energy, -2.0);
        assert_eq!(fs.occupations, vec![2.0, 2.0, 0.0, 0.0]);
    }
}
