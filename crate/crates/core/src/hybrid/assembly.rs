//! Finite-basis realization of hybrid states and the eigen-diagnostics built
//! on it.
//!
//! The assembled basis is `|ψ_i⟩ ⊗ |bin k_q⟩ ⊗ |bin k_p⟩` with flat index
//! `(i · n_q + k_q) · n_p + k_p`. A point state maps onto the unit vector of
//! the bin holding it, so all eigenvalue magnitudes are relative to that
//! convention. Storage is sparse; the spectrum is computed on the support of
//! the operator, split into its connected components, with each component
//! solved densely. Zero rows outside the support contribute eigenvalue 0.

use super::state::HybridState;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::phase_space::{ClassicalEntry, PhaseSpaceGrid};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};

/// Largest assembled dimension accepted by the dense eigensolver path.
pub const ASSEMBLY_CAP: usize = 4096;

const ZERO_EIGEN_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledOperator {
    n_quantum: usize,
    bins: PhaseSpaceGrid,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl AssembledOperator {
    pub fn dim(&self) -> usize {
        self.n_quantum * self.bins.len()
    }

    pub fn bins(&self) -> &PhaseSpaceGrid {
        &self.bins
    }

    pub fn flat_index(&self, i: usize, k_q: usize, k_p: usize) -> usize {
        (i * self.bins.n_q() + k_q) * self.bins.n_p() + k_p
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries.get(&(row, col)).copied().unwrap_or_default()
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn trace(&self) -> f64 {
        let d: Vec<f64> = self.entries.iter().filter(|((r, c), _)| r == c).map(|(_, v)| v.re).collect();
        pairwise_sum(&d)
    }

    pub fn frobenius(&self) -> f64 {
        let sq: Vec<f64> = self.entries.values().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&sq).sqrt()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(|(&(r, c), v)| (self.get(c, r) - v.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Dense copy; subject to the assembly cap.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.check_cap()?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        Ok(m)
    }

    fn check_cap(&self) -> Result<()> {
        if self.dim() > ASSEMBLY_CAP {
            Err(Error::AssemblyTooLarge { dim: self.dim(), cap: ASSEMBLY_CAP })
        } else {
            Ok(())
        }
    }

    fn add(&mut self, row: usize, col: usize, v: Complex64) {
        *self.entries.entry((row, col)).or_default() += v;
    }

    fn normalized(&self) -> Result<AssembledOperator> {
        let tr = self.trace();
        if tr.abs() <= 1e-12 {
            return Err(Error::ZeroTrace(tr));
        }
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v /= tr;
        }
        Ok(out)
    }

    /// Sparse product `self · other`.
    fn matmul(&self, other: &AssembledOperator) -> AssembledOperator {
        let mut rows: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (&(r, c), &v) in &other.entries {
            rows.entry(r).or_default().push((c, v));
        }
        let mut out = AssembledOperator { n_quantum: self.n_quantum, bins: self.bins, entries: BTreeMap::new() };
        for (&(r, k), &a) in &self.entries {
            if let Some(row) = rows.get(&k) {
                for &(c, b) in row {
                    out.add(r, c, a * b);
                }
            }
        }
        out
    }

    /// Connected components of the nonzero pattern, each as a sorted index list.
    fn components(&self) -> Vec<Vec<usize>> {
        let support: BTreeSet<usize> = self.entries.keys().flat_map(|&(r, c)| [r, c]).collect();
        let index: BTreeMap<usize, usize> = support.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let mut parent: Vec<usize> = (0..support.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(r, c) in self.entries.keys() {
            let (a, b) = (find(&mut parent, index[&r]), find(&mut parent, index[&c]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &s) in support.iter().enumerate() {
            let root = find(&mut parent, k);
            groups.entry(root).or_default().push(s);
        }
        groups.into_values().collect()
    }

    /// Full spectrum in ascending order (including the zeros of empty rows).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_cap()?;
        let mut ev = Vec::with_capacity(self.dim());
        let mut covered = 0;
        for comp in self.components() {
            let m = comp.len();
            covered += m;
            let dense = DMatrix::from_fn(m, m, |a, b| self.get(comp[a], comp[b]));
            ev.extend(dense.symmetric_eigenvalues().iter().copied());
        }
        ev.extend(std::iter::repeat_n(0.0, self.dim() - covered));
        let cutoff = ZERO_EIGEN_REL * self.frobenius();
        for x in ev.iter_mut() {
            if x.abs() < cutoff {
                *x = 0.0;
            }
        }
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

/// Realizes `s` as a sparse matrix over the bins of `bins`.
pub fn assemble(s: &HybridState, bins: &PhaseSpaceGrid) -> Result<AssembledOperator> {
    let n = s.dim();
    let mut a = AssembledOperator { n_quantum: n, bins: *bins, entries: BTreeMap::new() };
    if let Some(kernels) = s.kernels() {
        if s.grid() != Some(bins) {
            return Err(Error::GridMismatch);
        }
        let area = bins.cell_area();
        for i in 0..n {
            for j in 0..n {
                let k = &kernels[i * n + j];
                for kq in 0..bins.n_q() {
                    for kp in 0..bins.n_p() {
                        let v = k.at(kq, kp) * area;
                        if v != Complex64::new(0.0, 0.0) {
                            a.add(a.flat_index(i, kq, kp), a.flat_index(j, kq, kp), v);
                        }
                    }
                }
            }
        }
    } else if let Some(blocks) = s.entry_blocks() {
        for i in 0..n {
            for j in 0..n {
                for e in &blocks[i * n + j] {
                    let (ket, bra) = (e.ket(), e.bra());
                    let (kq, kp) = bins.bin_of(ket.q, ket.p)?;
                    let (bq, bp) = bins.bin_of(bra.q, bra.p)?;
                    a.add(a.flat_index(i, kq, kp), a.flat_index(j, bq, bp), e.amplitude());
                }
            }
        }
    }
    a.entries.retain(|_, v| *v != Complex64::new(0.0, 0.0));
    Ok(a)
}

pub fn min_eigenvalue(a: &AssembledOperator) -> Result<f64> {
    Ok(a.eigenvalues()?.first().copied().unwrap_or(0.0))
}

/// `tr(ρ²)` of the trace-normalized operator.
pub fn purity(a: &AssembledOperator) -> Result<f64> {
    let tr = a.trace();
    if tr.abs() <= 1e-12 {
        return Err(Error::ZeroTrace(tr));
    }
    let f = a.frobenius();
    Ok(f * f / (tr * tr))
}

/// `‖ρ² − ρ‖_F` of the trace-normalized operator.
pub fn idempotency_residual(a: &AssembledOperator) -> Result<f64> {
    let rho = a.normalized()?;
    let sq = rho.matmul(&rho);
    let keys: BTreeSet<(usize, usize)> = rho.entries.keys().chain(sq.entries.keys()).copied().collect();
    let d: Vec<f64> = keys.iter().map(|&(r, c)| (sq.get(r, c) - rho.get(r, c)).norm_sqr()).collect();
    Ok(pairwise_sum(&d).sqrt())
}

/// `S_L = 1 − tr(ρ²)`.
pub fn linear_entropy(a: &AssembledOperator) -> Result<f64> {
    Ok(1.0 - purity(a)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VonNeumann {
    Defined(f64),
    /// The operator has a negative eigenvalue, so `−Σ λ ln λ` is meaningless.
    Undefined { min_eigenvalue: f64 },
}

impl VonNeumann {
    pub fn value(&self) -> Option<f64> {
        match self {
            VonNeumann::Defined(s) => Some(*s),
            VonNeumann::Undefined { .. } => None,
        }
    }
}

pub fn von_neumann_entropy(a: &AssembledOperator) -> Result<VonNeumann> {
    let tr = a.trace();
    if tr.abs() <= 1e-12 {
        return Err(Error::ZeroTrace(tr));
    }
    let ev = a.eigenvalues()?;
    let lo = ev.first().copied().unwrap_or(0.0) / tr;
    if lo < -1e-10 {
        return Ok(VonNeumann::Undefined { min_eigenvalue: lo });
    }
    let terms: Vec<f64> = ev
        .iter()
        .map(|&x| x / tr)
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.ln())
        .collect();
    Ok(VonNeumann::Defined(pairwise_sum(&terms)))
}

/// Quantum readout of a hybrid state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMarginal {
    /// `m[i][j]`: block mass on the diagonal; off the diagonal, coherence
    /// that sits on pointer bins shared by branches `i` and `j`.
    pub matrix: DMatrix<Complex64>,
    /// Magnitude of off-diagonal amplitude that is not on shared pointer
    /// support (coherence in flight).
    pub in_flight: DMatrix<f64>,
}

impl QuantumMarginal {
    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn coherence(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)].norm()
    }
}

/// Grid states: `m[i][j] = ∫∫ ρ^ij`. Point states need `bins` to decide
/// which amplitudes share pointer support: an off-diagonal entry counts when
/// its ket and bra fall into one bin that also carries weight in both
/// diagonal blocks `i` and `j`.
pub fn quantum_marginal(s: &HybridState, bins: Option<&PhaseSpaceGrid>) -> Result<QuantumMarginal> {
    let n = s.dim();
    let mut matrix = DMatrix::zeros(n, n);
    let mut in_flight = DMatrix::zeros(n, n);
    if let Some(kernels) = s.kernels() {
        for i in 0..n {
            for j in 0..n {
                matrix[(i, j)] = kernels[i * n + j].integral();
            }
        }
        return Ok(QuantumMarginal { matrix, in_flight });
    }
    let bins = bins.ok_or_else(|| Error::InvalidGrid("point states need assembly bins for a marginal".into()))?;
    let blocks = s.entry_blocks().expect("point representation");
    let mut pointer: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); n];
    for (i, ptr) in pointer.iter_mut().enumerate() {
        for e in &blocks[i * n + i] {
            if let ClassicalEntry::Point(p) = e {
                if p.amplitude != Complex64::new(0.0, 0.0) {
                    ptr.insert(bins.bin_of(p.q, p.p)?);
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut lost = 0.0;
            for e in &blocks[i * n + j] {
                let kb = bins.bin_of(e.ket().q, e.ket().p)?;
                let bb = bins.bin_of(e.bra().q, e.bra().p)?;
                let counted = if i == j {
                    kb == bb
                } else {
                    kb == bb && pointer[i].contains(&kb) && pointer[j].contains(&kb)
                };
                if counted {
                    acc += e.amplitude();
                } else if i != j {
                    lost += e.amplitude().norm();
                }
            }
            matrix[(i, j)] = acc;
            in_flight[(i, j)] = lost;
        }
    }
    Ok(QuantumMarginal { matrix, in_flight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{smooth_delta, ClassicalKernel, CrossDyad, KernelKind, PhasePoint, PointState};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bins() -> PhaseSpaceGrid {
        PhaseSpaceGrid::symmetric(2.0, 8).unwrap()
    }

    fn point(q: f64, p: f64, w: Complex64) -> ClassicalEntry {
        ClassicalEntry::Point(PointState::new(q, p, w))
    }

    #[test]
    fn single_point_is_a_rank_one_projector() {
        let s = HybridState::from_entries(1, vec![vec![point(0.1, -0.3, c(1.0, 0.0))]]).unwrap();
        let a = assemble(&s, &bins()).unwrap();
        assert_eq!(a.trace(), 1.0);
        assert_eq!(a.nonzeros().count(), 1);
        let ev = a.eigenvalues().unwrap();
        assert_eq!(ev.len(), 64);
        assert_eq!(ev[63], 1.0);
        assert!(ev[..63].iter().all(|&x| x == 0.0));
        assert!((purity(&a).unwrap() - 1.0).abs() < 1e-15);
        assert!(idempotency_residual(&a).unwrap() < 1e-15);
        assert_eq!(von_neumann_entropy(&a).unwrap(), VonNeumann::Defined(0.0));
    }

    #[test]
    fn out_of_domain_points_are_rejected() {
        let s = HybridState::from_entries(1, vec![vec![point(3.0, 0.0, c(1.0, 0.0))]]).unwrap();
        assert!(matches!(assemble(&s, &bins()), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn grid_assembly_requires_the_same_grid() {
        let g = PhaseSpaceGrid::symmetric(6.0, 16).unwrap();
        let k = smooth_delta(0.0, 0.0, 0.9, 0.9, &g).unwrap();
        let s = HybridState::from_kernels(1, vec![k]).unwrap();
        assert!(matches!(assemble(&s, &bins()), Err(Error::GridMismatch)));
        let a = assemble(&s, &g).unwrap();
        assert!((a.trace() - 1.0).abs() < 1e-12);
        assert!(min_eigenvalue(&a).unwrap() >= 0.0);
    }

    #[test]
    fn cap_is_enforced_for_eigensolves_only() {
        let g = PhaseSpaceGrid::symmetric(6.0, 48).unwrap();
        let k = smooth_delta(0.0, 0.0, 0.9, 0.9, &g).unwrap();
        let z = ClassicalKernel::zeros(g, KernelKind::Coherence);
        let s = HybridState::from_kernels(2, vec![k.scale(c(0.5, 0.)), z.clone(), z, k.scale(c(0.5, 0.))]).unwrap();
        let a = assemble(&s, &g).unwrap();
        assert!(purity(&a).is_ok());
        assert!(matches!(min_eigenvalue(&a), Err(Error::AssemblyTooLarge { .. })));
    }

    #[test]
    fn coherence_pair_on_a_separate_bin_has_negative_eigenvalue() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c12 = c(0.5 * h, 0.5 * h);
        let blocks = vec![
            vec![point(-1.5, 0.0, c(0.5, 0.))],
            vec![point(0.1, 0.1, c12)],
            vec![point(0.1, 0.1, c12.conj())],
            vec![point(1.5, 0.0, c(0.5, 0.))],
        ];
        let s = HybridState::from_entries(2, blocks).unwrap();
        let a = assemble(&s, &bins()).unwrap();
        assert!((min_eigenvalue(&a).unwrap() + 0.5).abs() < 1e-12);
        assert!(matches!(von_neumann_entropy(&a).unwrap(), VonNeumann::Undefined { .. }));
        assert!((purity(&a).unwrap() - 1.0).abs() < 1e-12);
        assert!(idempotency_residual(&a).unwrap() > 0.1);
        let m = quantum_marginal(&s, Some(&bins())).unwrap();
        assert_eq!(m.coherence(0, 1), 0.0);
        assert!((m.in_flight[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sparse_spectrum_matches_dense_oracle() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let blocks = vec![
            vec![point(-1.5, 0.0, c(0.3, 0.)), point(0.7, 0.2, c(0.1, 0.))],
            vec![CrossDyad::new(PhasePoint::new(-1.5, 0.0), PhasePoint::new(1.5, 0.0), c(0.2 * h, 0.1))],
            vec![CrossDyad::new(PhasePoint::new(1.5, 0.0), PhasePoint::new(-1.5, 0.0), c(0.2 * h, -0.1))],
            vec![point(1.5, 0.0, c(0.6, 0.))],
        ];
        let s = HybridState::from_entries(2, blocks).unwrap();
        let a = assemble(&s, &bins()).unwrap();
        let dense = a.to_dense().unwrap();
        let mut oracle: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let ev = a.eigenvalues().unwrap();
        for (x, y) in ev.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        let sq = &dense * &dense;
        let idem = (&sq - &dense).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((idempotency_residual(&a).unwrap() - idem).abs() < 1e-12);
    }

    #[test]
    fn zero_trace_is_an_error() {
        let s = HybridState::from_entries(1, vec![vec![]]).unwrap();
        let a = assemble(&s, &bins()).unwrap();
        assert!(matches!(purity(&a), Err(Error::ZeroTrace(_))));
        assert!(matches!(linear_entropy(&a), Err(Error::ZeroTrace(_))));
    }
}
