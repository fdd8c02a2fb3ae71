use crate::error::{Error, Result};
use crate::numeric::pairwise_sum_by;
use crate::phase_space::{ClassicalEntry, ClassicalKernel, KernelKind, PhaseSpaceGrid};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Grid,
    Points,
}

impl Representation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::Grid => "grid",
            Representation::Points => "points",
        }
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Representation::Grid),
            "points" => Ok(Representation::Points),
            other => Err(Error::Config(format!("unknown representation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Blocks {
    Grid { grid: PhaseSpaceGrid, kernels: Vec<ClassicalKernel> },
    Points { entries: Vec<Vec<ClassicalEntry>> },
}

/// Hybrid density operator `Σ_ij |ψ_i⟩⟨ψ_j| ⊗ ρ_cm^ij` stored as an `N×N`
/// array of classical blocks in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    dim: usize,
    blocks: Blocks,
}

impl HybridState {
    pub fn from_kernels(dim: usize, kernels: Vec<ClassicalKernel>) -> Result<Self> {
        if dim == 0 || kernels.len() != dim * dim {
            return Err(Error::DimMismatch(format!("{} kernels for a {dim}x{dim} block array", kernels.len())));
        }
        let grid = *kernels[0].grid();
        if kernels.iter().any(|k| *k.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { dim, blocks: Blocks::Grid { grid, kernels } })
    }

    pub fn from_entries(dim: usize, entries: Vec<Vec<ClassicalEntry>>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimMismatch(format!("{} blocks for a {dim}x{dim} block array", entries.len())));
        }
        Ok(Self { dim, blocks: Blocks::Points { entries } })
    }

    /// `ρ_qm ⊗ ρ_cm` with `ρ_qm = c c†` and a density kernel `ρ_cm`.
    pub fn product_grid(c: &[Complex64], density: &ClassicalKernel) -> Result<Self> {
        let n = c.len();
        let mut kernels = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let kind = if i == j { KernelKind::State } else { KernelKind::Coherence };
                kernels.push(density.scale(c[i] * c[j].conj()).with_kind(kind));
            }
        }
        Self::from_kernels(n, kernels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn representation(&self) -> Representation {
        match self.blocks {
            Blocks::Grid { .. } => Representation::Grid,
            Blocks::Points { .. } => Representation::Points,
        }
    }

    pub fn grid(&self) -> Option<&PhaseSpaceGrid> {
        match &self.blocks {
            Blocks::Grid { grid, .. } => Some(grid),
            Blocks::Points { .. } => None,
        }
    }

    pub fn kernels(&self) -> Option<&[ClassicalKernel]> {
        match &self.blocks {
            Blocks::Grid { kernels, .. } => Some(kernels),
            Blocks::Points { .. } => None,
        }
    }

    pub fn kernel(&self, i: usize, j: usize) -> Option<&ClassicalKernel> {
        self.kernels().map(|k| &k[i * self.dim + j])
    }

    pub fn entry_blocks(&self) -> Option<&[Vec<ClassicalEntry>]> {
        match &self.blocks {
            Blocks::Points { entries } => Some(entries),
            Blocks::Grid { .. } => None,
        }
    }

    pub fn entries(&self, i: usize, j: usize) -> Option<&[ClassicalEntry]> {
        self.entry_blocks().map(|e| e[i * self.dim + j].as_slice())
    }

    /// Largest violation of `ρ^ji = (ρ^ij)†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        match &self.blocks {
            Blocks::Grid { kernels, .. } => {
                for i in 0..n {
                    for j in i..n {
                        let a = &kernels[i * n + j];
                        let b = &kernels[j * n + i];
                        for (x, y) in a.values().iter().zip(b.values()) {
                            r = r.max((x.conj() - y).norm());
                        }
                    }
                }
            }
            Blocks::Points { entries } => {
                for i in 0..n {
                    for j in i..n {
                        let a = &entries[i * n + j];
                        let b = &entries[j * n + i];
                        if a.len() != b.len() {
                            return f64::INFINITY;
                        }
                        for (x, y) in a.iter().zip(b) {
                            let x = x.adjoint();
                            r = r
                                .max((x.amplitude() - y.amplitude()).norm())
                                .max((x.ket().q - y.ket().q).abs())
                                .max((x.ket().p - y.ket().p).abs())
                                .max((x.bra().q - y.bra().q).abs())
                                .max((x.bra().p - y.bra().p).abs());
                        }
                    }
                }
            }
        }
        r
    }

    /// Mass carried by diagonal block `i`.
    pub fn population(&self, i: usize) -> f64 {
        match &self.blocks {
            Blocks::Grid { kernels, .. } => kernels[i * self.dim + i].integral().re,
            Blocks::Points { entries } => {
                let e = &entries[i * self.dim + i];
                pairwise_sum_by(e.len(), |k| match e[k] {
                    ClassicalEntry::Point(s) => s.amplitude.re,
                    ClassicalEntry::Cross(_) => 0.0,
                })
            }
        }
    }

    /// Frobenius-type norm: binned kernel norm for grids, `sqrt Σ|w|²` for points.
    pub fn norm(&self) -> f64 {
        match &self.blocks {
            Blocks::Grid { kernels, .. } => kernels.iter().map(|k| k.binned_norm_sqr()).sum::<f64>().sqrt(),
            Blocks::Points { entries } => entries.iter().flatten().map(|e| e.amplitude().norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Linear combination `self + s · other` for grid states (time stepping).
    pub fn axpy(&mut self, s: Complex64, other: &HybridState) -> Result<()> {
        match (&mut self.blocks, &other.blocks) {
            (Blocks::Grid { grid, kernels }, Blocks::Grid { grid: g2, kernels: k2 }) => {
                if grid != g2 || kernels.len() != k2.len() {
                    return Err(Error::GridMismatch);
                }
                for (a, b) in kernels.iter_mut().zip(k2) {
                    a.axpy(s, b);
                }
                Ok(())
            }
            _ => Err(Error::DimMismatch("axpy is defined for grid states only".into())),
        }
    }
}

/// Total diagonal mass `Σ_i Tr ρ^ii`.
pub fn hybrid_trace(s: &HybridState) -> f64 {
    (0..s.dim()).map(|i| s.population(i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{smooth_delta, CrossDyad, PhasePoint, PointState};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_point_trace() {
        let mut blocks = vec![Vec::new(); 4];
        blocks[0].push(ClassicalEntry::Point(PointState::new(0.0, 0.0, c(0.25))));
        let s = HybridState::from_entries(2, blocks).unwrap();
        assert_eq!(hybrid_trace(&s), 0.25);
    }

    #[test]
    fn grid_trace_with_unequal_weights() {
        let g = PhaseSpaceGrid::symmetric(6.0, 32).unwrap();
        let a = smooth_delta(1.0, 0.0, 0.8, 0.8, &g).unwrap();
        let b = smooth_delta(-1.0, 0.5, 0.8, 0.8, &g).unwrap();
        let z = ClassicalKernel::zeros(g, KernelKind::Coherence);
        let s = HybridState::from_kernels(2, vec![a.scale(c(0.3)), z.clone(), z, b.scale(c(0.7))]).unwrap();
        assert!((hybrid_trace(&s) - 1.0).abs() < 1e-9);
        assert_eq!(s.hermiticity_residual(), 0.0);
    }

    #[test]
    fn product_state_is_hermitian() {
        let g = PhaseSpaceGrid::symmetric(6.0, 32).unwrap();
        let k = smooth_delta(1.0, 0.0, 0.8, 0.8, &g).unwrap();
        let cs = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let s = HybridState::product_grid(&cs, &k).unwrap();
        assert_eq!(s.hermiticity_residual(), 0.0);
        assert!((hybrid_trace(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_points_are_detected() {
        let d = CrossDyad::new(PhasePoint::new(0.0, 0.0), PhasePoint::new(1.0, 0.0), Complex64::new(0.0, 0.5));
        let blocks = vec![vec![], vec![d], vec![d], vec![]];
        let s = HybridState::from_entries(2, blocks).unwrap();
        assert!(s.hermiticity_residual() > 0.1);
        let blocks = vec![vec![], vec![d], vec![d.adjoint()], vec![]];
        assert_eq!(HybridState::from_entries(2, blocks).unwrap().hermiticity_residual(), 0.0);
    }

    #[test]
    fn block_count_is_checked() {
        assert!(HybridState::from_entries(2, vec![vec![]; 3]).is_err());
    }
}
