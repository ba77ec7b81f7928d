//! Entanglement quantities built from ground-state energies and occupations.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactdiag::{GroundSolution, Source};
use crate::model::ModelSpec;

/// 2 ln²(3+√8)/ln 2, the weak-coupling limit of C̄²/Ẽ.
pub fn weak_coupling_ratio() -> f64 {
    let a = (3.0 + 8f64.sqrt()).ln();
    2.0 * a * a / std::f64::consts::LN_2
}

/// C = √(⟨n⟩(2−⟨n⟩)), the pair-occupation fluctuation of one level.
pub fn local_concurrence(occupation: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=2.0 + SLACK).contains(&occupation) {
        return Err(Error::Domain(format!(
            "occupation {occupation} outside [0, 2]"
        )));
    }
    let n = occupation.clamp(0.0, 2.0);
    Ok((n * (2.0 - n)).sqrt())
}

/// C = √(1 − Σ_α ⟨σ^α⟩²) from a real single-qubit density matrix.
pub fn local_concurrence_from_density(rho: &Matrix2<f64>) -> f64 {
    let sx = rho[(0, 1)] + rho[(1, 0)];
    let sz = rho[(0, 0)] - rho[(1, 1)];
    (1.0 - sx * sx - sz * sz).max(0.0).sqrt()
}

/// von Neumann entropy (bits) of a qubit with local concurrence C.
pub fn site_entropy(concurrence: f64) -> f64 {
    let r = (1.0 - concurrence * concurrence).max(0.0).sqrt();
    [(1.0 + r) / 2.0, (1.0 - r) / 2.0]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Average local concurrence.
pub fn alc(concurrences: &[f64]) -> f64 {
    if concurrences.is_empty() {
        return 0.0;
    }
    concurrences.iter().sum::<f64>() / concurrences.len() as f64
}

/// Ẽ = (E_FS − E0)/(ω_D L).
pub fn cond_energy(ground_energy: f64, spec: &ModelSpec) -> Result<f64> {
    let ec = spec.fermi_sea_energy() - ground_energy;
    let scale = spec.level_set.omega_d() * spec.num_levels() as f64;
    let e = ec / scale;
    if e < -1e-12 {
        return Err(Error::Domain(format!(
            "ground energy {ground_energy} lies above the Fermi sea {}",
            spec.fermi_sea_energy()
        )));
    }
    Ok(e.max(0.0))
}

/// Per-level concurrences, ALC, condensation energy and C̄²/Ẽ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub levels: usize,
    pub pairs: usize,
    pub coupling: f64,
    pub energy: f64,
    pub local_concurrences: Vec<f64>,
    pub site_entropies: Vec<f64>,
    pub alc: f64,
    pub cond_energy: f64,
    /// C̄²/Ẽ; `None` when Ẽ = 0.
    pub ratio: Option<f64>,
    pub source: Source,
}

impl EntanglementReport {
    pub fn from_ground(spec: &ModelSpec, ground: &GroundSolution) -> Result<Self> {
        let local_concurrences = ground
            .occupations
            .iter()
            .map(|&n| local_concurrence(n))
            .collect::<Result<Vec<_>>>()?;
        let site_entropies = local_concurrences.iter().map(|&c| site_entropy(c)).collect();
        let alc = alc(&local_concurrences);
        let cond_energy = cond_energy(ground.energy, spec)?;
        Ok(Self {
            levels: spec.num_levels(),
            pairs: spec.m_pairs,
            coupling: spec.coupling,
            energy: ground.energy,
            local_concurrences,
            site_entropies,
            alc,
            cond_energy,
            ratio: ratio(alc, cond_energy),
            source: ground.source,
        })
    }
}

/// C̄²/Ẽ, undefined when Ẽ vanishes.
pub fn ratio(alc: f64, cond_energy: f64) -> Option<f64> {
    (cond_energy > 0.0).then(|| alc * alc / cond_energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Weak,
    Strong,
}

/// Leading-order (Ẽ, C̄) in the weak or strong coupling limit.
pub fn asymptotic_values(coupling: f64, levels: usize, regime: Regime) -> (f64, f64) {
    let lam = coupling;
    match regime {
        Regime::Strong => (lam / 2.0, 1.0 - 1.0 / (6.0 * lam * lam)),
        Regime::Weak => {
            let l = levels as f64;
            (
                lam * lam * std::f64::consts::LN_2 / l,
                lam * (2.0 / l).sqrt() * (3.0 + 8f64.sqrt()).ln(),
            )
        }
    }
}

/// Location of the maximum of C̄²/Ẽ along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// Interior maximum, refined to the requested tolerance.
    Interior { coupling: f64, ratio: f64 },
    /// Curve is maximal at the smallest coupling sampled (λ → 0).
    LowerBoundary { coupling: f64, ratio: f64 },
    /// Curve is maximal at the largest coupling sampled.
    UpperBoundary { coupling: f64, ratio: f64 },
}

impl Threshold {
    pub fn coupling(&self) -> f64 {
        match *self {
            Threshold::Interior { coupling, .. }
            | Threshold::LowerBoundary { coupling, .. }
            | Threshold::UpperBoundary { coupling, .. } => coupling,
        }
    }

    pub fn is_interior(&self) -> bool {
        matches!(self, Threshold::Interior { .. })
    }
}

/// Minimum number of samples for a threshold search.
pub const MIN_THRESHOLD_SAMPLES: usize = 30;

/// Finds the argmax of the sampled ratio curve and, if it is interior,
/// refines it by golden-section search in ln λ on `evaluate` (which
/// re-solves the model) to relative tolerance `rel_tol`.
pub fn locate_threshold<F>(
    couplings: &[f64],
    ratios: &[f64],
    mut evaluate: F,
    rel_tol: f64,
) -> Result<Threshold>
where
    F: FnMut(f64) -> Result<f64>,
{
    if couplings.len() != ratios.len() {
        return Err(Error::InvalidArgument("coupling and ratio lengths differ".into()));
    }
    if couplings.len() < MIN_THRESHOLD_SAMPLES {
        return Err(Error::Threshold(format!(
            "sweep too sparse: {} points, need at least {MIN_THRESHOLD_SAMPLES}",
            couplings.len()
        )));
    }
    let (imax, &rmax) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if imax == 0 {
        return Ok(Threshold::LowerBoundary { coupling: couplings[0], ratio: rmax });
    }
    if imax == couplings.len() - 1 {
        return Ok(Threshold::UpperBoundary { coupling: couplings[imax], ratio: rmax });
    }
    let (mut a, mut b) = (couplings[imax - 1].ln(), couplings[imax + 1].ln());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = evaluate(c.exp())?;
    let mut fd = evaluate(d.exp())?;
    // ln-width below rel_tol means relative accuracy rel_tol in λ.
    while b - a > rel_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = evaluate(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = evaluate(d.exp())?;
        }
    }
    let (x, fx) = if fc > fd { (c, fc) } else { (d, fd) };
    let (x, fx) = if rmax > fx { (couplings[imax].ln(), rmax) } else { (x, fx) };
    Ok(Threshold::Interior { coupling: x.exp(), ratio: fx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn concurrence_values() {
        assert_eq!(local_concurrence(1.0).unwrap(), 1.0);
        assert_eq!(local_concurrence(0.0).unwrap(), 0.0);
        assert_eq!(local_concurrence(2.0).unwrap(), 0.0);
        assert_relative_eq!(
            local_concurrence(1.0 + 0.5f64.sqrt()).unwrap(),
            0.5f64.sqrt(),
            max_relative = 1e-14
        );
        // λ/√(1+λ²) at λ = 1
        assert_relative_eq!(local_concurrence(1.0 + 0.5f64.sqrt()).unwrap(), 1.0 / 2f64.sqrt(), max_relative = 1e-14);
        assert_eq!(local_concurrence(2.0 + 1e-13).unwrap(), 0.0);
        assert!(local_concurrence(2.1).is_err());
        assert!(local_concurrence(-1e-9).is_err());
    }

    #[test]
    fn bloch_form_matches_fluctuation() {
        for n in [0.0, 0.3, 1.0, 1.7, 2.0] {
            // ρ = diag((2−n)/2, n/2) in the {empty, pair} basis
            let rho = Matrix2::new((2.0 - n) / 2.0, 0.0, 0.0, n / 2.0);
            assert_relative_eq!(
                local_concurrence_from_density(&rho),
                local_concurrence(n).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn entropy_values() {
        assert_relative_eq!(site_entropy(1.0), 1.0, max_relative = 1e-15);
        assert_eq!(site_entropy(0.0), 0.0);
        let r = 0.5f64.sqrt();
        let (p, q) = ((1.0 + r) / 2.0, (1.0 - r) / 2.0);
        let expected = -p * p.log2() - q * q.log2();
        assert_relative_eq!(site_entropy(r), expected, max_relative = 1e-14);
        assert!((site_entropy(r) - 0.600_876_8).abs() < 1e-6);
    }

    #[test]
    fn alc_and_cond_energy() {
        let spec = ModelSpec::half_filled(2, 1.0, 1.0).unwrap();
        let c = 0.5f64.sqrt();
        assert_relative_eq!(alc(&[c, c]), c);
        assert_eq!(alc(&[0.0, 0.0, 0.0]), 0.0);
        let e = cond_energy(-2f64.sqrt(), &spec).unwrap();
        assert_relative_eq!(e, (2f64.sqrt() - 1.0) / 2.0, max_relative = 1e-14);
        assert_eq!(cond_energy(-1.0, &spec).unwrap(), 0.0);
        assert!(cond_energy(-0.9, &spec).is_err());
    }

    #[test]
    fn asymptotics() {
        let (_, c) = asymptotic_values(10.0, 68, Regime::Strong);
        assert_relative_eq!(c, 1.0 - 1.0 / 600.0);
        let (e, c) = asymptotic_values(0.05, 68, Regime::Weak);
        assert!((c - 0.015_12).abs() < 5e-5);
        assert_relative_eq!(c * c / e, weak_coupling_ratio(), max_relative = 1e-12);
        assert!((weak_coupling_ratio() - 8.97).abs() < 5e-3);
    }

    #[test]
    fn threshold_on_synthetic_curves() {
        let xs: Vec<f64> = (0..40).map(|i| 0.02 * 1.15f64.powi(i)).collect();
        let peak = |x: f64| -(x.ln() - 0.5f64.ln()).powi(2);
        let ys: Vec<f64> = xs.iter().map(|&x| peak(x)).collect();
        let t = locate_threshold(&xs, &ys, |x| Ok(peak(x)), 1e-3).unwrap();
        assert!(t.is_interior());
        assert!((t.coupling() / 0.5 - 1.0).abs() < 1e-3);

        let dec: Vec<f64> = xs.iter().map(|&x| 1.0 / x).collect();
        let t = locate_threshold(&xs, &dec, |x| Ok(1.0 / x), 1e-3).unwrap();
        assert!(matches!(t, Threshold::LowerBoundary { .. }));

        assert!(locate_threshold(&xs[..10], &ys[..10], |x| Ok(peak(x)), 1e-3).is_err());
    }
}
