//! Grand-canonical (thermodynamic-limit) BCS quantities.
//!
//! With a continuum of levels of density μ(ε) in [−ω_D, ω_D] the variational
//! product state has 2|u v| = Δ̃/√(ε²+Δ̃²) at energy ε. For uniform μ the gap
//! is Δ̃ = ω_D/sinh(1/λ); the other profiles solve the gap equation by
//! bisection, or reuse the uniform gap (see [`GapPolicy`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DensityProfile;
use crate::quadrature::Quadrature;

/// How the gap is chosen when μ is not uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GapPolicy {
    /// Solve the gap equation with the profile's own density ("A").
    #[default]
    SelfConsistent,
    /// Reuse the uniform-density gap ω_D/sinh(1/λ) ("B").
    UniformGap,
}

impl FromStr for GapPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" | "self-consistent" => Ok(GapPolicy::SelfConsistent),
            "B" | "b" | "uniform-gap" => Ok(GapPolicy::UniformGap),
            other => Err(Error::InvalidArgument(format!(
                "unknown gap policy '{other}' (expected A or B)"
            ))),
        }
    }
}

impl fmt::Display for GapPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapPolicy::SelfConsistent => "A",
            GapPolicy::UniformGap => "B",
        })
    }
}

/// Thermodynamic-limit solution at one coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkSolution {
    pub coupling: f64,
    pub gap: f64,
    pub alc: f64,
    pub cond_energy: f64,
    pub order_param: f64,
}

impl BulkSolution {
    /// Closed forms for the uniform density.
    pub fn uniform(coupling: f64, omega_d: f64) -> Result<Self> {
        let gap = bulk_gap(coupling, omega_d)?;
        let alc = alc_uniform_closed_form(coupling);
        Ok(Self {
            coupling,
            gap,
            alc,
            cond_energy: cond_energy_thermo(coupling),
            order_param: order_parameter(coupling, omega_d, alc),
        })
    }

    /// General profile: gap from `policy`, ALC and condensation energy by quadrature.
    /// A profile whose gap equation has only the trivial solution yields the
    /// normal state (all zeros) here; [`gap_general`] reports it as an error.
    pub fn for_profile(
        coupling: f64,
        profile: DensityProfile,
        omega_d: f64,
        policy: GapPolicy,
    ) -> Result<Self> {
        if coupling < 0.0 {
            return Err(Error::Domain(format!("negative coupling {coupling}")));
        }
        let gap = match policy_gap(coupling, profile, omega_d, policy) {
            Ok(g) => g,
            Err(Error::NoBracket(_)) => 0.0,
            Err(e) => return Err(e),
        };
        let alc = alc_with_gap(gap, profile, omega_d)?;
        Ok(Self {
            coupling,
            gap,
            alc,
            cond_energy: cond_energy_with_gap(coupling, gap, profile, omega_d)?,
            order_param: order_parameter(coupling, omega_d, alc),
        })
    }
}

/// Δ̃ = ω_D / sinh(1/λ). λ = 0 gives 0 (continuous extension).
pub fn bulk_gap(coupling: f64, omega_d: f64) -> Result<f64> {
    if coupling < 0.0 || !coupling.is_finite() {
        return Err(Error::Domain(format!(
            "bulk gap undefined for coupling {coupling}"
        )));
    }
    if coupling == 0.0 {
        return Ok(0.0);
    }
    Ok(omega_d / (1.0 / coupling).sinh())
}

/// f(ε) = Δ̃/√(ε²+Δ̃²) = 2|u v|, the concurrence of the level at ε.
pub fn concurrence_profile(energy: f64, gap: f64) -> f64 {
    if gap == 0.0 {
        return 0.0;
    }
    gap / energy.hypot(gap)
}

/// C̄ = 1/(λ sinh(1/λ)) for uniform μ.
pub fn alc_uniform_closed_form(coupling: f64) -> f64 {
    if coupling <= 0.0 {
        return 0.0;
    }
    1.0 / (coupling * (1.0 / coupling).sinh())
}

/// Ẽ = (coth(1/λ) − 1)/2, written as 1/(e^{2/λ} − 1) to survive small λ.
pub fn cond_energy_thermo(coupling: f64) -> f64 {
    if coupling <= 0.0 {
        return 0.0;
    }
    1.0 / (2.0 / coupling).exp_m1()
}

/// |Δ| = λ ω_D C̄.
pub fn order_parameter(coupling: f64, omega_d: f64, alc: f64) -> f64 {
    coupling * omega_d * alc
}

/// 2∫_0^{ω_D} μ(ε)/√(ε²+Δ²) dε in closed form.
fn gap_integral(gap: f64, profile: DensityProfile, omega_d: f64) -> f64 {
    let w = omega_d;
    let root = w.hypot(gap);
    let asinh = (w / gap).asinh();
    let abs = root - gap;
    let square = 0.5 * (w * root - gap * gap * asinh);
    2.0 * match profile {
        DensityProfile::Uniform => asinh,
        DensityProfile::Abs => abs,
        DensityProfile::Square => square,
        DensityProfile::Parabolic => w * w * asinh - square,
        DensityProfile::Tent => w * asinh - abs,
    }
}

/// Solves 1 = λ ω_D ∫μ/√(ε²+Δ̃²) / ∫μ for Δ̃ by bisection in ln Δ̃.
pub fn gap_general(coupling: f64, profile: DensityProfile, omega_d: f64) -> Result<f64> {
    if !(coupling > 0.0) {
        return Err(Error::Domain(format!(
            "gap equation needs a positive coupling, got {coupling}"
        )));
    }
    let weight = profile.total_weight(omega_d);
    let excess = |gap: f64| coupling * omega_d * gap_integral(gap, profile, omega_d) / weight - 1.0;

    let mut lo = omega_d * 1e-300;
    if excess(lo) <= 0.0 {
        return Err(Error::NoBracket(format!(
            "{profile} density at lambda={coupling}: the gap equation has no positive root \
             (integrated pairing strength {:.6} <= 1)",
            excess(lo) + 1.0
        )));
    }
    let mut hi = omega_d;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoBracket(format!(
                "{profile} density at lambda={coupling}: no upper bracket"
            )));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

fn policy_gap(
    coupling: f64,
    profile: DensityProfile,
    omega_d: f64,
    policy: GapPolicy,
) -> Result<f64> {
    if coupling == 0.0 {
        return Ok(0.0);
    }
    match (policy, profile) {
        (GapPolicy::UniformGap, _) | (_, DensityProfile::Uniform) => bulk_gap(coupling, omega_d),
        (GapPolicy::SelfConsistent, p) => gap_general(coupling, p, omega_d),
    }
}

fn quadrature_breaks(gap: f64, omega_d: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut x = gap;
    while x < omega_d {
        if x > 0.0 {
            breaks.push(x);
        }
        x *= 8.0;
        if x == 0.0 {
            break;
        }
    }
    breaks.push(omega_d);
    breaks
}

fn alc_with_gap(gap: f64, profile: DensityProfile, omega_d: f64) -> Result<f64> {
    if gap == 0.0 {
        return Ok(0.0);
    }
    let num = Quadrature::default().integrate_with_breaks(
        |e| profile.eval_unchecked(e, omega_d) * concurrence_profile(e, gap),
        &quadrature_breaks(gap, omega_d),
    )?;
    Ok(2.0 * num / profile.total_weight(omega_d))
}

/// C̄ = ∫μ f / ∫μ over [−ω_D, ω_D], integrated adaptively over [0, ω_D]
/// and doubled.
pub fn alc_thermo(
    coupling: f64,
    profile: DensityProfile,
    omega_d: f64,
    policy: GapPolicy,
) -> Result<f64> {
    if coupling < 0.0 {
        return Err(Error::Domain(format!("negative coupling {coupling}")));
    }
    let gap = policy_gap(coupling, profile, omega_d, policy)?;
    alc_with_gap(gap, profile, omega_d)
}

/// Condensation energy per level of the product state with gap Δ̃ and
/// density μ:
/// Ẽ = −∫μ |ε|Δ̃²/(E(E+|ε|)) / (ω_D ∫μ) + 2λ (∫μ Δ̃/(2E))² / (∫μ)²,
/// with E = √(ε²+Δ̃²). Reduces to (coth(1/λ)−1)/2 for uniform μ.
fn cond_energy_with_gap(
    coupling: f64,
    gap: f64,
    profile: DensityProfile,
    omega_d: f64,
) -> Result<f64> {
    if gap == 0.0 {
        return Ok(0.0);
    }
    let quad = Quadrature {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        ..Quadrature::default()
    };
    let breaks = quadrature_breaks(gap, omega_d);
    let mu = |e: f64| profile.eval_unchecked(e, omega_d);
    let kinetic = quad.integrate_with_breaks(
        |e| {
            let qp = e.hypot(gap);
            mu(e) * e * gap * gap / (qp * (qp + e))
        },
        &breaks,
    )?;
    let pairing = quad.integrate_with_breaks(|e| mu(e) * gap / e.hypot(gap), &breaks)?;
    let weight = profile.total_weight(omega_d);
    // Both integrals cover [0, ω_D]; the full-window integrals are twice that.
    Ok(-2.0 * kinetic / (omega_d * weight) + 2.0 * coupling * (pairing / weight).powi(2))
}
