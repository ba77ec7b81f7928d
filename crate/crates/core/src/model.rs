//! Level grids, fillings, couplings and level-density profiles shared by
//! every solver backend. Energies are in units of the cutoff ω_D unless a
//! different `omega_d` is passed explicitly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-particle levels ε_1 < … < ε_L inside the cutoff [−ω_D, ω_D].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    levels: Vec<f64>,
    spacing: f64,
    omega_d: f64,
}

impl LevelSet {
    /// Midpoint grid ε_j = −ω_D + (2j−1)ω_D/L with spacing d = 2ω_D/L.
    pub fn uniform(count: usize, omega_d: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 levels, got {count}"
            )));
        }
        if !(omega_d > 0.0 && omega_d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cutoff omega_d must be positive, got {omega_d}"
            )));
        }
        let l = count as f64;
        // Fill from both ends so that ε_j = −ε_{L+1−j} holds bit for bit.
        let mut levels = vec![0.0; count];
        for j in 0..count.div_ceil(2) {
            let e = -omega_d + (2 * j + 1) as f64 * omega_d / l;
            levels[j] = e;
            levels[count - 1 - j] = -e;
        }
        if count % 2 == 1 {
            levels[count / 2] = 0.0;
        }
        Ok(Self {
            levels,
            spacing: 2.0 * omega_d / l,
            omega_d,
        })
    }

    /// Arbitrary strictly increasing levels inside the cutoff.
    pub fn new(levels: Vec<f64>, spacing: f64, omega_d: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("empty level set".into()));
        }
        if !(omega_d > 0.0) || !(spacing > 0.0) {
            return Err(Error::InvalidArgument(
                "spacing and cutoff must be positive".into(),
            ));
        }
        if levels.iter().any(|e| !e.is_finite() || e.abs() > omega_d) {
            return Err(Error::InvalidArgument(format!(
                "levels must lie within [-{omega_d}, {omega_d}]"
            )));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "levels must be strictly increasing (degenerate levels are not supported)".into(),
            ));
        }
        Ok(Self {
            levels,
            spacing,
            omega_d,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Mean level spacing d.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    /// Copy with level `j` shifted by `delta`; used by finite-difference checks.
    pub fn with_shifted_level(&self, j: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.levels[j] += delta;
        out
    }
}

/// Level set, pair number M and dimensionless coupling λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub level_set: LevelSet,
    pub m_pairs: usize,
    pub coupling: f64,
}

impl ModelSpec {
    pub fn new(level_set: LevelSet, m_pairs: usize, coupling: f64) -> Result<Self> {
        if m_pairs > level_set.len() {
            return Err(Error::InvalidArgument(format!(
                "M={m_pairs} pairs do not fit in L={} levels",
                level_set.len()
            )));
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be finite and non-negative, got {coupling}"
            )));
        }
        Ok(Self {
            level_set,
            m_pairs,
            coupling,
        })
    }

    /// Uniform grid of `count` levels at half filling M = L/2.
    pub fn half_filled(count: usize, coupling: f64, omega_d: f64) -> Result<Self> {
        if !count.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "half filling needs an even number of levels, got L={count}"
            )));
        }
        Self::new(LevelSet::uniform(count, omega_d)?, count / 2, coupling)
    }

    pub fn levels(&self) -> &[f64] {
        self.level_set.levels()
    }

    pub fn num_levels(&self) -> usize {
        self.level_set.len()
    }

    /// Pairing strength g = d·λ in energy units.
    pub fn pairing_strength(&self) -> f64 {
        self.level_set.spacing() * self.coupling
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self {
            coupling,
            ..self.clone()
        }
    }

    /// Energy of the uncorrelated Fermi sea, 2·Σ_{j≤M} ε_j.
    pub fn fermi_sea_energy(&self) -> f64 {
        2.0 * self.levels()[..self.m_pairs].iter().sum::<f64>()
    }
}

/// Continuum level densities μ(ε) on [−ω_D, ω_D].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityProfile {
    /// μ = 1
    Uniform,
    /// μ = |ε|
    Abs,
    /// μ = ε²
    Square,
    /// μ = ω_D² − ε²
    Parabolic,
    /// μ = ω_D − |ε|
    Tent,
}

impl DensityProfile {
    /// Ordered by increasing weight near the Fermi level.
    pub const ALL: [DensityProfile; 5] = [
        DensityProfile::Square,
        DensityProfile::Abs,
        DensityProfile::Uniform,
        DensityProfile::Parabolic,
        DensityProfile::Tent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DensityProfile::Uniform => "uniform",
            DensityProfile::Abs => "abs",
            DensityProfile::Square => "square",
            DensityProfile::Parabolic => "parabolic",
            DensityProfile::Tent => "tent",
        }
    }

    /// μ(ε); rejects |ε| > ω_D.
    pub fn eval(self, energy: f64, omega_d: f64) -> Result<f64> {
        if !(energy.abs() <= omega_d) {
            return Err(Error::Domain(format!(
                "energy {energy} outside the cutoff window [-{omega_d}, {omega_d}]"
            )));
        }
        Ok(self.eval_unchecked(energy, omega_d))
    }

    pub(crate) fn eval_unchecked(self, energy: f64, omega_d: f64) -> f64 {
        match self {
            DensityProfile::Uniform => 1.0,
            DensityProfile::Abs => energy.abs(),
            DensityProfile::Square => energy * energy,
            DensityProfile::Parabolic => omega_d * omega_d - energy * energy,
            DensityProfile::Tent => omega_d - energy.abs(),
        }
    }

    /// ∫_{−ω_D}^{ω_D} μ(ε) dε.
    pub fn total_weight(self, omega_d: f64) -> f64 {
        let w = omega_d;
        match self {
            DensityProfile::Uniform => 2.0 * w,
            DensityProfile::Abs => w * w,
            DensityProfile::Square => 2.0 * w.powi(3) / 3.0,
            DensityProfile::Parabolic => 4.0 * w.powi(3) / 3.0,
            DensityProfile::Tent => w * w,
        }
    }
}

impl fmt::Display for DensityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "1" => Ok(DensityProfile::Uniform),
            "abs" => Ok(DensityProfile::Abs),
            "square" => Ok(DensityProfile::Square),
            "parabolic" => Ok(DensityProfile::Parabolic),
            "tent" => Ok(DensityProfile::Tent),
            other => Err(Error::InvalidArgument(format!(
                "unknown density profile '{other}' (expected uniform|abs|square|parabolic|tent)"
            ))),
        }
    }
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped;
/// keys are case-sensitive (`L` and `M` are distinct from `l`, `m`).
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("config line {}: expected key=value", lineno + 1))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Plain-text model description with keys `L`, `M`, `lambda`, `omega_d`, `profile`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub levels: usize,
    pub pairs: Option<usize>,
    pub lambda: f64,
    pub omega_d: f64,
    pub profile: DensityProfile,
}

impl ModelConfig {
    pub fn from_spec(spec: &ModelSpec, profile: DensityProfile) -> Self {
        Self {
            levels: spec.num_levels(),
            pairs: Some(spec.m_pairs),
            lambda: spec.coupling,
            omega_d: spec.level_set.omega_d(),
            profile,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);
        let bad = |k: &str, v: &str| Error::InvalidArgument(format!("bad value for {k}: '{v}'"));
        let levels = match get("L") {
            Some(v) => v.parse().map_err(|_| bad("L", v))?,
            None => return Err(Error::InvalidArgument("config is missing L".into())),
        };
        let pairs = match get("M") {
            Some(v) => Some(v.parse().map_err(|_| bad("M", v))?),
            None => None,
        };
        let lambda = match get("lambda") {
            Some(v) => v.parse().map_err(|_| bad("lambda", v))?,
            None => return Err(Error::InvalidArgument("config is missing lambda".into())),
        };
        let omega_d = match get("omega_d") {
            Some(v) => v.parse().map_err(|_| bad("omega_d", v))?,
            None => 1.0,
        };
        let profile = match get("profile") {
            Some(v) => v.parse()?,
            None => DensityProfile::Uniform,
        };
        Ok(Self {
            levels,
            pairs,
            lambda,
            omega_d,
            profile,
        })
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        match self.pairs {
            Some(m) => ModelSpec::new(LevelSet::uniform(self.levels, self.omega_d)?, m, self.lambda),
            None => ModelSpec::half_filled(self.levels, self.lambda, self.omega_d),
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "L = {}", self.levels)?;
        if let Some(m) = self.pairs {
            writeln!(f, "M = {m}")?;
        }
        writeln!(f, "lambda = {:?}", self.lambda)?;
        writeln!(f, "omega_d = {:?}", self.omega_d)?;
        writeln!(f, "profile = {}", self.profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_level_grid() {
        let ls = LevelSet::uniform(2, 1.0).unwrap();
        assert_eq!(ls.levels(), &[-0.5, 0.5]);
        assert_eq!(ls.spacing(), 1.0);
    }

    #[test]
    fn four_level_grid() {
        let ls = LevelSet::uniform(4, 1.0).unwrap();
        assert_eq!(ls.levels(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(ls.spacing(), 0.5);
    }

    #[test]
    fn sixty_eight_levels() {
        let ls = LevelSet::uniform(68, 1.0).unwrap();
        assert_eq!(ls.len(), 68);
        assert_eq!(ls.spacing(), 1.0 / 34.0);
        let sum: f64 = ls.levels().iter().sum();
        assert!(sum.abs() < 1e-14 * 68.0);
        for w in ls.levels().windows(2) {
            assert!((w[1] - w[0] - 1.0 / 34.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_short_or_degenerate() {
        assert!(LevelSet::uniform(1, 1.0).is_err());
        assert!(LevelSet::uniform(4, 0.0).is_err());
        assert!(LevelSet::new(vec![-0.5, -0.5, 0.5], 0.5, 1.0).is_err());
        assert!(LevelSet::new(vec![-2.0, 0.5], 0.5, 1.0).is_err());
        assert!(ModelSpec::half_filled(5, 1.0, 1.0).is_err());
        assert!(ModelSpec::new(LevelSet::uniform(4, 1.0).unwrap(), 5, 1.0).is_err());
        assert!(ModelSpec::half_filled(4, -0.1, 1.0).is_err());
    }

    #[test]
    fn fermi_sea() {
        assert_eq!(ModelSpec::half_filled(2, 1.0, 1.0).unwrap().fermi_sea_energy(), -1.0);
        assert_eq!(ModelSpec::half_filled(4, 1.0, 1.0).unwrap().fermi_sea_energy(), -2.0);
        let spec = ModelSpec::half_filled(24, 1.0, 1.0).unwrap();
        let direct: f64 = (1..=12).map(|j| 2.0 * (-1.0 + (2 * j - 1) as f64 / 24.0)).sum();
        assert!((spec.fermi_sea_energy() - direct).abs() < 1e-13);
        assert!((spec.fermi_sea_energy() + 12.0).abs() < 1e-13);
    }

    #[test]
    fn density_values() {
        assert_eq!(DensityProfile::Uniform.eval(0.3, 1.0).unwrap(), 1.0);
        assert_eq!(DensityProfile::Tent.eval(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(DensityProfile::Square.eval(-0.5, 1.0).unwrap(), 0.25);
        assert!(DensityProfile::Abs.eval(1.5, 1.0).is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = "# test\nL = 24\nlambda = 0.75\nprofile = tent\n";
        let cfg = ModelConfig::parse(text).unwrap();
        assert_eq!(cfg.levels, 24);
        assert_eq!(cfg.pairs, None);
        assert_eq!(cfg.omega_d, 1.0);
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.m_pairs, 12);
        let back = ModelConfig::parse(&ModelConfig::from_spec(&spec, cfg.profile).to_string()).unwrap();
        assert_eq!(back.to_spec().unwrap(), spec);
        assert_eq!(back.profile, DensityProfile::Tent);
        assert!(ModelConfig::parse("L = x\nlambda=1").is_err());
        assert!(ModelConfig::parse("lambda=1").is_err());
    }

    proptest! {
        #[test]
        fn grid_is_particle_hole_symmetric(half in 1usize..60, w in 0.1f64..10.0) {
            let count = 2 * half;
            let ls = LevelSet::uniform(count, w).unwrap();
            let e = ls.levels();
            for j in 0..count {
                prop_assert_eq!(e[j], -e[count - 1 - j]);
                let expected = -w + (2 * j + 1) as f64 * w / count as f64;
                prop_assert!((e[j] - expected).abs() <= 4.0 * f64::EPSILON * w);
                prop_assert!(e[j].abs() <= w);
            }
            prop_assert!(e.iter().sum::<f64>().abs() < 1e-14 * w * count as f64);
        }

        #[test]
        fn profiles_are_even(x in 0.0f64..1.0, w in 0.5f64..3.0) {
            for p in DensityProfile::ALL {
                let e = x * w;
                prop_assert_eq!(p.eval(e, w).unwrap(), p.eval(-e, w).unwrap());
                prop_assert!(p.eval(e, w).unwrap() >= 0.0);
            }
        }
    }
}
