//! Exact diagonalization of the paired (seniority-zero) sector.
//!
//! Each level is an effective qubit: empty, or holding one Cooper pair. A
//! basis state is an L-bit mask with M bits set; the Hamiltonian is
//! 2Σ_j ε_j N_j − g Σ_{j≠k} b†_j b_k with g = dλ, applied matrix-free.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Default cap on binomial(L, M).
pub const DEFAULT_DIM_BUDGET: usize = 5_000_000;

/// Which backend produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    MeanField,
    ExactDiag,
    Bethe,
    Analytic,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::MeanField => "meanfield",
            Source::ExactDiag => "exactdiag",
            Source::Bethe => "bethe",
            Source::Analytic => "analytic",
        }
    }
}

/// Ground-state energy and pair occupations ⟨n_j⟩ ∈ [0, 2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSolution {
    pub energy: f64,
    pub occupations: Vec<f64>,
    pub source: Source,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All L-bit masks with M bits set, in increasing numeric order.
#[derive(Debug, Clone)]
pub struct PairedBasis {
    levels: usize,
    pairs: usize,
    states: Vec<u64>,
    // choose[p][i] = binomial(p, i) for the combinadic rank.
    choose: Vec<Vec<usize>>,
}

impl PairedBasis {
    pub fn new(levels: usize, pairs: usize, budget: usize) -> Result<Self> {
        if pairs > levels {
            return Err(Error::InvalidArgument(format!(
                "M={pairs} exceeds L={levels}"
            )));
        }
        if levels > 63 {
            return Err(Error::Capacity {
                levels,
                pairs,
                dim: binomial(levels, pairs),
                budget,
            });
        }
        let dim = binomial(levels, pairs);
        if dim > budget as u128 {
            return Err(Error::Capacity {
                levels,
                pairs,
                dim,
                budget,
            });
        }
        let mut states = Vec::with_capacity(dim as usize);
        if pairs == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks masks of fixed popcount in increasing order.
            let mut mask: u64 = (1u64 << pairs) - 1;
            let limit = 1u64 << levels;
            while mask < limit {
                states.push(mask);
                let low = mask & mask.wrapping_neg();
                let ripple = mask + low;
                mask = (((ripple ^ mask) >> 2) / low) | ripple;
            }
        }
        let choose = (0..=levels)
            .map(|p| (0..=pairs).map(|i| binomial(p, i) as usize).collect())
            .collect();
        Ok(Self {
            levels,
            pairs,
            states,
            choose,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Position of `mask` in the enumeration (colexicographic rank).
    pub fn lookup(&self, mask: u64) -> Option<usize> {
        if mask.count_ones() as usize != self.pairs || (self.levels < 64 && mask >> self.levels != 0) {
            return None;
        }
        Some(self.rank(mask))
    }

    fn rank(&self, mut mask: u64) -> usize {
        let mut r = 0;
        let mut i = 1;
        while mask != 0 {
            let p = mask.trailing_zeros() as usize;
            r += self.choose[p][i];
            i += 1;
            mask &= mask - 1;
        }
        r
    }
}

fn diagonal(spec: &ModelSpec, basis: &PairedBasis) -> Vec<f64> {
    let eps = spec.levels();
    basis
        .states
        .par_iter()
        .map(|&mask| {
            let mut m = mask;
            let mut e = 0.0;
            while m != 0 {
                e += 2.0 * eps[m.trailing_zeros() as usize];
                m &= m - 1;
            }
            e
        })
        .collect()
}

fn check_basis(spec: &ModelSpec, basis: &PairedBasis) -> Result<()> {
    if basis.levels != spec.num_levels() || basis.pairs != spec.m_pairs {
        return Err(Error::InvalidArgument(format!(
            "basis (L={}, M={}) does not match model (L={}, M={})",
            basis.levels,
            basis.pairs,
            spec.num_levels(),
            spec.m_pairs
        )));
    }
    Ok(())
}

fn apply_with_diag(g: f64, basis: &PairedBasis, diag: &[f64], vec: &[f64], out: &mut [f64]) {
    let full: u64 = if basis.levels == 64 { u64::MAX } else { (1u64 << basis.levels) - 1 };
    out.par_iter_mut().enumerate().for_each(|(s, o)| {
        let mask = basis.states[s];
        let mut hop = 0.0;
        let mut occ = mask;
        while occ != 0 {
            let j = occ & occ.wrapping_neg();
            occ &= occ - 1;
            let mut empty = !mask & full;
            while empty != 0 {
                let k = empty & empty.wrapping_neg();
                empty &= empty - 1;
                hop += vec[basis.rank(mask ^ j ^ k)];
            }
        }
        *o = diag[s] * vec[s] - g * hop;
    });
}

/// H·vec without storing H.
pub fn apply_hamiltonian(spec: &ModelSpec, basis: &PairedBasis, vec: &[f64]) -> Result<Vec<f64>> {
    check_basis(spec, basis)?;
    if vec.len() != basis.dim() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match basis dimension {}",
            vec.len(),
            basis.dim()
        )));
    }
    let diag = diagonal(spec, basis);
    let mut out = vec![0.0; vec.len()];
    apply_with_diag(spec.pairing_strength(), basis, &diag, vec, &mut out);
    Ok(out)
}

/// Dense matrix of the paired-sector Hamiltonian.
pub fn dense_hamiltonian(spec: &ModelSpec, basis: &PairedBasis) -> Result<DMatrix<f64>> {
    check_basis(spec, basis)?;
    let n = basis.dim();
    let diag = diagonal(spec, basis);
    let g = spec.pairing_strength();
    let mut h = DMatrix::zeros(n, n);
    let full = (1u64 << basis.levels) - 1;
    for (s, &mask) in basis.states.iter().enumerate() {
        h[(s, s)] = diag[s];
        let mut occ = mask;
        while occ != 0 {
            let j = occ & occ.wrapping_neg();
            occ &= occ - 1;
            let mut empty = !mask & full;
            while empty != 0 {
                let k = empty & empty.wrapping_neg();
                empty &= empty - 1;
                h[(s, basis.rank(mask ^ j ^ k))] = -g;
            }
        }
    }
    Ok(h)
}

/// Solver knobs for [`ground_state`].
#[derive(Debug, Clone)]
pub struct EdOptions {
    pub dim_budget: usize,
    /// Largest dimension handled by the dense symmetric eigensolver.
    pub dense_max: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual target relative to the Gershgorin bound on ‖H‖.
    pub residual_tol: f64,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self {
            dim_budget: DEFAULT_DIM_BUDGET,
            dense_max: 4096,
            krylov_dim: 60,
            max_restarts: 200,
            residual_tol: 1e-10,
        }
    }
}

/// Lowest eigenpair of the paired sector.
#[derive(Debug, Clone)]
pub struct EdGround {
    pub energy: f64,
    /// Normalized, with all components non-negative.
    pub vector: Vec<f64>,
    pub basis: PairedBasis,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn fix_sign(v: &mut [f64]) {
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn ground_state(spec: &ModelSpec, opts: &EdOptions) -> Result<EdGround> {
    let basis = PairedBasis::new(spec.num_levels(), spec.m_pairs, opts.dim_budget)?;
    let n = basis.dim();
    let diag = diagonal(spec, &basis);
    let g = spec.pairing_strength();
    let h_norm = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()))
        + g * (spec.m_pairs * (spec.num_levels() - spec.m_pairs)) as f64;
    let tol = opts.residual_tol * h_norm.max(f64::MIN_POSITIVE);

    let (energy, mut vector) = if n <= opts.dense_max {
        let h = dense_hamiltonian(spec, &basis)?;
        let eig = SymmetricEigen::new(h);
        let (idx, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty basis");
        (e, eig.eigenvectors.column(idx).iter().copied().collect::<Vec<_>>())
    } else {
        lanczos(g, &basis, &diag, opts, tol)?
    };
    fix_sign(&mut vector);
    let nv = norm(&vector);
    vector.iter_mut().for_each(|x| *x /= nv);

    let mut hv = vec![0.0; n];
    apply_with_diag(g, &basis, &diag, &vector, &mut hv);
    let residual = hv
        .iter()
        .zip(&vector)
        .map(|(h, v)| (h - energy * v).powi(2))
        .sum::<f64>()
        .sqrt();
    if residual > tol {
        return Err(Error::NoConvergence {
            solver: "exact diagonalization",
            iterations: opts.max_restarts,
            residual,
        });
    }
    Ok(EdGround {
        energy,
        vector,
        basis,
        residual,
    })
}

/// Restarted Lanczos with full reorthogonalization, started from the uniform
/// positive vector so runs are reproducible.
fn lanczos(
    g: f64,
    basis: &PairedBasis,
    diag: &[f64],
    opts: &EdOptions,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = basis.dim();
    // Keep the Krylov block under ~256 MB.
    let m_max = opts.krylov_dim.min(n).min((32_000_000 / n).max(8));
    let mut start = vec![1.0 / (n as f64).sqrt(); n];
    let mut w = vec![0.0; n];
    let mut best_residual = f64::INFINITY;

    for _restart in 0..opts.max_restarts {
        let mut basis_vecs: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        basis_vecs.push(start.clone());
        for k in 0..m_max {
            apply_with_diag(g, basis, diag, &basis_vecs[k], &mut w);
            let a = dot(&w, &basis_vecs[k]);
            alpha.push(a);
            // Two passes of classical Gram-Schmidt against the whole block.
            for _ in 0..2 {
                for q in &basis_vecs {
                    let c = dot(&w, q);
                    w.par_iter_mut().zip(q.par_iter()).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            if k + 1 == m_max || b < 1e-14 * (a.abs() + 1.0) {
                break;
            }
            beta.push(b);
            basis_vecs.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty tridiagonal");
        let y = eig.eigenvectors.column(idx);
        let mut ritz = vec![0.0; n];
        for (q, &c) in basis_vecs.iter().zip(y.iter()) {
            ritz.par_iter_mut().zip(q.par_iter()).for_each(|(x, v)| *x += c * v);
        }
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nr);
        apply_with_diag(g, basis, diag, &ritz, &mut w);
        let residual = w
            .iter()
            .zip(&ritz)
            .map(|(h, v)| (h - theta * v).powi(2))
            .sum::<f64>()
            .sqrt();
        best_residual = best_residual.min(residual);
        if residual <= tol {
            return Ok((theta, ritz));
        }
        start = ritz;
    }
    Err(Error::NoConvergence {
        solver: "Lanczos",
        iterations: opts.max_restarts,
        residual: best_residual,
    })
}

/// ⟨n_j⟩ = 2 Σ_{masks ∋ j} |ψ|².
pub fn occupations(vector: &[f64], basis: &PairedBasis) -> Vec<f64> {
    let mut occ = vec![0.0; basis.levels];
    for (&mask, &a) in basis.states.iter().zip(vector) {
        let p = a * a;
        let mut m = mask;
        while m != 0 {
            occ[m.trailing_zeros() as usize] += 2.0 * p;
            m &= m - 1;
        }
    }
    occ
}

/// ⟨n_j²⟩ evaluated on the vector (equals 2⟨n_j⟩ in the paired sector).
pub fn occupation_squares(vector: &[f64], basis: &PairedBasis) -> Vec<f64> {
    let mut occ = vec![0.0; basis.levels];
    for (&mask, &a) in basis.states.iter().zip(vector) {
        for (j, o) in occ.iter_mut().enumerate() {
            let n = if mask >> j & 1 == 1 { 2.0 } else { 0.0 };
            *o += n * n * a * a;
        }
    }
    occ
}

/// Ground energy and occupations from exact diagonalization.
pub fn solve(spec: &ModelSpec, opts: &EdOptions) -> Result<GroundSolution> {
    let gs = ground_state(spec, opts)?;
    Ok(GroundSolution {
        energy: gs.energy,
        occupations: occupations(&gs.vector, &gs.basis),
        source: Source::ExactDiag,
    })
}

/// Embeds a paired-sector vector into the 2L-qubit space. Level j maps to
/// qubits 2j (the + state) and 2j+1 (the − state); a pair sets both.
pub fn qubit_embedding(vector: &[f64], basis: &PairedBasis) -> Result<Vec<f64>> {
    if basis.levels > 12 {
        return Err(Error::InvalidArgument(format!(
            "qubit embedding needs 4^L amplitudes; L={} is too large",
            basis.levels
        )));
    }
    let mut full = vec![0.0; 1usize << (2 * basis.levels)];
    for (&mask, &a) in basis.states.iter().zip(vector) {
        let mut idx = 0usize;
        for j in 0..basis.levels {
            if mask >> j & 1 == 1 {
                idx |= 0b11 << (2 * j);
            }
        }
        full[idx] = a;
    }
    Ok(full)
}

/// Reduced density matrix of the qubits listed in `keep` (row index bit i
/// is qubit `keep[i]`), tracing out everything else.
pub fn partial_trace(state: &[f64], num_qubits: usize, keep: &[usize]) -> Result<DMatrix<f64>> {
    if state.len() != 1usize << num_qubits || keep.iter().any(|&q| q >= num_qubits) {
        return Err(Error::InvalidArgument("partial trace: inconsistent qubit layout".into()));
    }
    let keep_mask: usize = keep.iter().map(|&q| 1usize << q).sum();
    let sub = |i: usize| -> usize {
        keep.iter()
            .enumerate()
            .map(|(b, &q)| ((i >> q) & 1) << b)
            .sum()
    };
    let k = keep.len();
    let mut rho = DMatrix::zeros(1 << k, 1 << k);
    for i in 0..state.len() {
        if state[i] == 0.0 {
            continue;
        }
        let rest = i & !keep_mask;
        for a in 0..(1usize << k) {
            let mut j = rest;
            for (b, &q) in keep.iter().enumerate() {
                j |= ((a >> b) & 1) << q;
            }
            rho[(sub(i), a)] += state[i] * state[j];
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(l: usize, lam: f64) -> ModelSpec {
        ModelSpec::half_filled(l, lam, 1.0).unwrap()
    }

    #[test]
    fn basis_sizes() {
        let b = PairedBasis::new(2, 1, 100).unwrap();
        assert_eq!(b.states(), &[0b01, 0b10]);
        assert_eq!(PairedBasis::new(4, 2, 100).unwrap().dim(), 6);
        let b = PairedBasis::new(16, 8, DEFAULT_DIM_BUDGET).unwrap();
        assert_eq!(b.dim(), 12870);
        // C(16,8) = C(15,7) + C(15,8)
        assert_eq!(binomial(15, 7) + binomial(15, 8), 12870);
        for (i, &m) in b.states().iter().enumerate() {
            assert_eq!(b.lookup(m), Some(i));
        }
        assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.lookup(0b111), None);
    }

    #[test]
    fn capacity_error_names_dimension() {
        match PairedBasis::new(40, 20, DEFAULT_DIM_BUDGET) {
            Err(Error::Capacity { dim, .. }) => assert_eq!(dim, 137_846_528_820),
            other => panic!("unexpected {other:?}"),
        }
        let err = PairedBasis::new(68, 34, DEFAULT_DIM_BUDGET).unwrap_err();
        assert!(err.to_string().contains("binomial(68,34)"));
    }

    #[test]
    fn two_level_matrix() {
        let s = spec(2, 1.0);
        let b = PairedBasis::new(2, 1, 10).unwrap();
        let h = dense_hamiltonian(&s, &b).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, -1.0, 1.0]));
        let gs = ground_state(&s, &EdOptions::default()).unwrap();
        assert_relative_eq!(gs.energy, -2f64.sqrt(), max_relative = 1e-14);
        let occ = occupations(&gs.vector, &gs.basis);
        assert_relative_eq!(occ[0], 1.0 + 0.5f64.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(occ[1], 1.0 - 0.5f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn zero_coupling_is_fermi_sea() {
        for l in [2, 4, 6] {
            let s = spec(l, 0.0);
            let gs = ground_state(&s, &EdOptions::default()).unwrap();
            assert_relative_eq!(gs.energy, s.fermi_sea_energy(), max_relative = 1e-14);
            let occ = occupations(&gs.vector, &gs.basis);
            for (j, n) in occ.iter().enumerate() {
                let expected = if j < l / 2 { 2.0 } else { 0.0 };
                assert!((n - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = spec(4, 1.0);
        let b = PairedBasis::new(4, 2, 100).unwrap();
        assert!(apply_hamiltonian(&s, &b, &[1.0; 5]).is_err());
        let wrong = PairedBasis::new(4, 1, 100).unwrap();
        assert!(apply_hamiltonian(&s, &wrong, &[1.0; 4]).is_err());
    }

    #[test]
    fn lanczos_matches_dense() {
        let s = spec(12, 0.7);
        let dense = ground_state(&s, &EdOptions::default()).unwrap();
        let opts = EdOptions {
            dense_max: 0,
            krylov_dim: 30,
            ..EdOptions::default()
        };
        let krylov = ground_state(&s, &opts).unwrap();
        assert_relative_eq!(dense.energy, krylov.energy, max_relative = 1e-12);
        let d = dense
            .vector
            .iter()
            .zip(&krylov.vector)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-8);
    }

    #[test]
    fn ground_state_properties() {
        let s = spec(10, 0.6);
        let gs = ground_state(&s, &EdOptions::default()).unwrap();
        assert!(gs.vector.iter().all(|&x| x > 0.0));
        let occ = occupations(&gs.vector, &gs.basis);
        assert!((occ.iter().sum::<f64>() - 10.0).abs() < 1e-10);
        for j in 0..10 {
            assert!((occ[j] + occ[9 - j] - 2.0).abs() < 1e-10);
        }
        let sq = occupation_squares(&gs.vector, &gs.basis);
        for (a, b) in sq.iter().zip(&occ) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
        assert!(gs.energy < s.fermi_sea_energy());
    }

    #[test]
    fn energy_decreases_with_coupling() {
        let mut last = f64::INFINITY;
        for lam in [0.0, 0.1, 0.3, 0.6, 1.0, 2.0] {
            let e = ground_state(&spec(8, lam), &EdOptions::default()).unwrap().energy;
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn partial_trace_of_bell_pair() {
        // (|00> + |11>)/√2 on two qubits
        let s = [0.5f64.sqrt(), 0.0, 0.0, 0.5f64.sqrt()];
        let r = partial_trace(&s, 2, &[1]).unwrap();
        assert_relative_eq!(r[(0, 0)], 0.5);
        assert_relative_eq!(r[(1, 1)], 0.5);
        assert_eq!(r[(0, 1)], 0.0);
        let full = partial_trace(&s, 2, &[0, 1]).unwrap();
        assert_relative_eq!(full[(0, 3)], 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hamiltonian_is_symmetric(seed in proptest::collection::vec(-1.0f64..1.0, 20 * 2), lam in 0.0f64..3.0) {
            let s = spec(6, lam);
            let b = PairedBasis::new(6, 3, 100).unwrap();
            let u = &seed[..20];
            let v = &seed[20..];
            let hu = apply_hamiltonian(&s, &b, u).unwrap();
            let hv = apply_hamiltonian(&s, &b, v).unwrap();
            let lhs: f64 = u.iter().zip(&hv).map(|(a, b)| a * b).sum();
            let rhs: f64 = hu.iter().zip(v).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
