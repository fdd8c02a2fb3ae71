use super::grid::PhaseSpaceGrid;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum_by;
use num_complex::Complex64;

/// Width, in cells, of the frame along the domain edge watched by the
/// compact-support guard.
pub const GUARD_FRAME_CELLS: usize = 6;

/// Largest fraction of a guarded kernel's mass allowed inside the frame.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-4;

/// What a kernel stands for, which decides the invariants it must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Diagonal block of a density: real and nonnegative.
    State,
    /// Classical observable such as a Hamiltonian: real, unrestricted support.
    Observable,
    /// Off-diagonal block or derived field: complex, compactly supported.
    Coherence,
}

impl KernelKind {
    pub fn is_guarded(self) -> bool {
        !matches!(self, KernelKind::Observable)
    }
}

/// A function of the commuting operators `q̂ ⊗ Î` and `Î ⊗ p̂`, stored through
/// its diagonal kernel sampled at the cell centers of a [`PhaseSpaceGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalKernel {
    grid: PhaseSpaceGrid,
    kind: KernelKind,
    values: Vec<Complex64>,
}

impl ClassicalKernel {
    pub fn from_values(grid: PhaseSpaceGrid, kind: KernelKind, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimMismatch(format!(
                "kernel has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, kind, values })
    }

    pub fn from_fn(grid: PhaseSpaceGrid, kind: KernelKind, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for kq in 0..grid.n_q() {
            let q = grid.q_at(kq);
            for kp in 0..grid.n_p() {
                values.push(f(q, grid.p_at(kp)));
            }
        }
        Self { grid, kind, values }
    }

    pub fn from_real_fn(grid: PhaseSpaceGrid, kind: KernelKind, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, kind, |q, p| Complex64::new(f(q, p), 0.0))
    }

    pub fn observable(grid: PhaseSpaceGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_real_fn(grid, KernelKind::Observable, f)
    }

    pub fn zeros(grid: PhaseSpaceGrid, kind: KernelKind) -> Self {
        Self { grid, kind, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: KernelKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn at(&self, k_q: usize, k_p: usize) -> Complex64 {
        self.values[self.grid.index(k_q, k_p)]
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `Σ values · Δq Δp`.
    pub fn integral(&self) -> Complex64 {
        pairwise_sum_by(self.values.len(), |k| self.values[k]) * self.grid.cell_area()
    }

    /// `Σ |values| · Δq Δp`.
    pub fn mass(&self) -> f64 {
        pairwise_sum_by(self.values.len(), |k| self.values[k].norm()) * self.grid.cell_area()
    }

    /// `Σ |values|² · (Δq Δp)²`, the squared Frobenius norm of the kernel as
    /// a diagonal operator over bins.
    pub fn binned_norm_sqr(&self) -> f64 {
        let a = self.grid.cell_area();
        pairwise_sum_by(self.values.len(), |k| self.values[k].norm_sqr()) * a * a
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn map(&self, kind: KernelKind, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, kind, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(self.kind, |v| v * s)
    }

    pub fn conj(&self) -> Self {
        self.map(self.kind, |v| v.conj())
    }

    pub fn zip_with(&self, other: &Self, kind: KernelKind, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            kind,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, self.kind, |a, b| a + b)
    }

    /// Pointwise product; for diagonal kernels this is the operator product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let kind = if self.kind == KernelKind::Observable { other.kind } else { self.kind };
        self.zip_with(other, kind, |a, b| a * b)
    }

    /// `self += s * other`, used by the time steppers.
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// Fraction of the kernel's mass inside the guard frame.
    pub fn boundary_fraction(&self) -> f64 {
        let total = pairwise_sum_by(self.values.len(), |k| self.values[k].norm());
        if total == 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let edge = pairwise_sum_by(self.values.len(), |k| {
            let (kq, kp) = g.coords(k);
            if g.in_frame(kq, kp, GUARD_FRAME_CELLS) {
                self.values[k].norm()
            } else {
                0.0
            }
        });
        edge / total
    }

    /// Compact-support guard; observables are exempt.
    pub fn check_boundary(&self) -> Result<()> {
        if !self.kind.is_guarded() {
            return Ok(());
        }
        let fraction = self.boundary_fraction();
        if fraction < BOUNDARY_MASS_LIMIT {
            Ok(())
        } else {
            Err(Error::BoundaryMass { fraction, limit: BOUNDARY_MASS_LIMIT })
        }
    }

    /// Checks the invariants of a normalized `state` kernel.
    pub fn is_normalized_state(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im == 0.0 && v.re >= 0.0) && (self.integral().re - 1.0).abs() <= tol
    }
}

/// Gaussian regularization of the point state `δ(q̂ − q0) ⊗ δ(p̂ − p0)`,
/// normalized so the discrete integral is one.
pub fn smooth_delta(q0: f64, p0: f64, sigma_q: f64, sigma_p: f64, grid: &PhaseSpaceGrid) -> Result<ClassicalKernel> {
    if !(sigma_q > 0.0 && sigma_p > 0.0) {
        return Err(Error::NonPositiveWidth { sigma_q, sigma_p });
    }
    let box_inside = q0 - 6.0 * sigma_q >= grid.q_min()
        && q0 + 6.0 * sigma_q <= grid.q_max()
        && p0 - 6.0 * sigma_p >= grid.p_min()
        && p0 + 6.0 * sigma_p <= grid.p_max();
    if !box_inside {
        return Err(Error::OutOfDomain { q: q0, p: p0, what: "6-sigma box of smooth delta".into() });
    }
    let mut k = ClassicalKernel::from_real_fn(*grid, KernelKind::State, |q, p| {
        let x = (q - q0) / sigma_q;
        let y = (p - p0) / sigma_p;
        (-0.5 * (x * x + y * y)).exp()
    });
    let norm = k.integral().re;
    for v in k.values_mut() {
        *v = Complex64::new(v.re / norm, 0.0);
    }
    Ok(k)
}

/// First derivative along one axis with a five-point, fourth-order central
/// stencil. Guarded kernels are compactly supported and are extended by zero
/// past the edge, which makes the discrete operator skew-symmetric. Observables
/// use one-sided stencils on the two outermost cells instead, so they are
/// differentiated exactly up to degree four everywhere.
fn differentiate(k: &ClassicalKernel, along_q: bool) -> Result<ClassicalKernel> {
    k.check_boundary()?;
    Ok(differentiate_unchecked(k, along_q))
}

fn differentiate_unchecked(k: &ClassicalKernel, along_q: bool) -> ClassicalKernel {
    let guarded = k.kind().is_guarded();
    let g = *k.grid();
    let (n, stride, h, lanes) = if along_q {
        (g.n_q(), g.n_p(), g.dq(), g.n_p())
    } else {
        (g.n_p(), 1, g.dp(), g.n_q())
    };
    let f = k.values();
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    let inv = 1.0 / (12.0 * h);
    let zero = Complex64::new(0.0, 0.0);
    for lane in 0..lanes {
        let base = if along_q { lane } else { lane * g.n_p() };
        let at = |i: usize| f[base + i * stride];
        let ext = |i: usize, off: isize| {
            let j = i as isize + off;
            if j < 0 || j >= n as isize {
                zero
            } else {
                at(j as usize)
            }
        };
        for i in 0..n {
            let d = if i >= 2 && i + 2 < n {
                (at(i - 2) - at(i + 2)) + (at(i + 1) - at(i - 1)) * 8.0
            } else if guarded {
                (ext(i, -2) - ext(i, 2)) + (ext(i, 1) - ext(i, -1)) * 8.0
            } else if i == 0 {
                at(0) * -25.0 + at(1) * 48.0 - at(2) * 36.0 + at(3) * 16.0 - at(4) * 3.0
            } else if i == 1 {
                at(0) * -3.0 - at(1) * 10.0 + at(2) * 18.0 - at(3) * 6.0 + at(4)
            } else if i == n - 1 {
                at(n - 1) * 25.0 - at(n - 2) * 48.0 + at(n - 3) * 36.0 - at(n - 4) * 16.0 + at(n - 5) * 3.0
            } else {
                at(n - 1) * 3.0 + at(n - 2) * 10.0 - at(n - 3) * 18.0 + at(n - 4) * 6.0 - at(n - 5)
            };
            out[base + i * stride] = d * inv;
        }
    }
    let kind = if k.kind() == KernelKind::Observable { KernelKind::Observable } else { KernelKind::Coherence };
    ClassicalKernel { grid: g, kind, values: out }
}

/// `∂/∂q̂` of a diagonal kernel.
pub fn partial_q(k: &ClassicalKernel) -> Result<ClassicalKernel> {
    differentiate(k, true)
}

/// `∂/∂p̂` of a diagonal kernel.
pub fn partial_p(k: &ClassicalKernel) -> Result<ClassicalKernel> {
    differentiate(k, false)
}

/// Both partial derivatives of a kernel, computed once and reused across
/// brackets.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub dq: ClassicalKernel,
    pub dp: ClassicalKernel,
}

impl Gradient {
    pub fn of(k: &ClassicalKernel) -> Result<Self> {
        Ok(Self { dq: partial_q(k)?, dp: partial_p(k)? })
    }

    pub fn bracket(&self, other: &Gradient) -> Result<ClassicalKernel> {
        self.dq.same_grid(&other.dq)?;
        let kind = if self.dq.kind() == KernelKind::Observable && other.dq.kind() == KernelKind::Observable {
            KernelKind::Observable
        } else {
            KernelKind::Coherence
        };
        let values = (0..self.dq.values().len())
            .map(|k| self.dq.values()[k] * other.dp.values()[k] - self.dp.values()[k] * other.dq.values()[k])
            .collect();
        ClassicalKernel::from_values(*self.dq.grid(), kind, values)
    }
}

/// `{A, B} = ∂_q A ∂_p B − ∂_p A ∂_q B`.
pub fn poisson_bracket(a: &ClassicalKernel, b: &ClassicalKernel) -> Result<ClassicalKernel> {
    a.same_grid(b)?;
    Gradient::of(a)?.bracket(&Gradient::of(b)?)
}

/// Right-hand side of the operator Liouville equation, `∂ρ/∂t = {H, ρ}`.
pub fn liouville_rhs(h: &ClassicalKernel, rho: &ClassicalKernel) -> Result<ClassicalKernel> {
    poisson_bracket(h, rho)
}

/// `Tr f ρ / Tr ρ` for diagonal kernels.
pub fn classical_mean(f: &ClassicalKernel, rho: &ClassicalKernel) -> Result<f64> {
    f.same_grid(rho)?;
    let mass = rho.integral().re;
    if mass <= 1e-12 {
        return Err(Error::ZeroMass(mass));
    }
    let n = rho.values().len();
    let num = pairwise_sum_by(n, |k| f.values()[k] * rho.values()[k]) * rho.grid().cell_area();
    Ok(num.re / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden() -> PhaseSpaceGrid {
        PhaseSpaceGrid::symmetric(6.0, 64).unwrap()
    }

    #[test]
    fn smooth_delta_rejects_bad_widths_and_boxes() {
        let g = golden();
        assert!(matches!(smooth_delta(0.0, 0.0, 0.0, 0.1, &g), Err(Error::NonPositiveWidth { .. })));
        assert!(matches!(smooth_delta(5.5, 0.0, 0.2, 0.2, &g), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn smooth_delta_is_a_normalized_state_peaked_at_its_center() {
        let g = golden();
        let k = smooth_delta(1.0, -0.5, 0.5, 0.5, &g).unwrap();
        assert!(k.is_normalized_state(1e-9));
        let (bq, bp) = g.bin_of(1.0, -0.5).unwrap();
        let peak = (0..g.len()).max_by(|&a, &b| k.values()[a].re.total_cmp(&k.values()[b].re)).unwrap();
        assert_eq!(g.coords(peak), (bq, bp));
    }

    #[test]
    fn symmetric_delta_has_zero_means() {
        let g = PhaseSpaceGrid::symmetric(2.0, 64).unwrap();
        let k = smooth_delta(0.0, 0.0, 0.1, 0.1, &g).unwrap();
        let q = ClassicalKernel::observable(g, |q, _| q);
        let p = ClassicalKernel::observable(g, |_, p| p);
        assert_abs_diff_eq!(classical_mean(&q, &k).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(classical_mean(&p, &k).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn derivative_of_linear_and_quadratic_fields() {
        let g = golden();
        let q = ClassicalKernel::observable(g, |q, _| q);
        let dq = partial_q(&q).unwrap();
        assert!(dq.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12 && v.im == 0.0));
        let q2 = ClassicalKernel::observable(g, |q, _| q * q);
        let d = partial_q(&q2).unwrap();
        for kq in 0..g.n_q() {
            for kp in 0..g.n_p() {
                assert!((d.at(kq, kp).re - 2.0 * g.q_at(kq)).abs() <= 1e-12 * 6.0);
            }
        }
        // p-derivative of a q-only field vanishes
        assert!(partial_p(&q2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn derivative_is_exact_for_quartics_including_the_edges() {
        let g = golden();
        let f = ClassicalKernel::observable(g, |q, p| q.powi(4) - 2.0 * q * q * p + p.powi(3));
        let dq = partial_q(&f).unwrap();
        let dp = partial_p(&f).unwrap();
        for kq in 0..g.n_q() {
            for kp in 0..g.n_p() {
                let (q, p) = (g.q_at(kq), g.p_at(kp));
                assert!((dq.at(kq, kp).re - (4.0 * q.powi(3) - 4.0 * q * p)).abs() < 1e-10);
                assert!((dp.at(kq, kp).re - (-2.0 * q * q + 3.0 * p * p)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn derivative_of_a_gaussian_integrates_to_zero() {
        let g = golden();
        let k = smooth_delta(0.0, 0.0, 0.2, 0.2, &g).unwrap();
        let d = partial_q(&k).unwrap();
        assert!(d.integral().norm() < 1e-9);
        // antisymmetric under q -> -q
        let n = g.n_q();
        for kq in 0..n {
            for kp in 0..g.n_p() {
                assert!((d.at(kq, kp) + d.at(n - 1 - kq, kp)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn density_derivative_is_skew() {
        // Fields that reach the edge; the guard would refuse them, so the
        // stencil is called directly.
        let g = PhaseSpaceGrid::symmetric(3.0, 16).unwrap();
        let a = ClassicalKernel::from_real_fn(g, KernelKind::Coherence, |q, p| (q * 1.3 + p).sin());
        let b = ClassicalKernel::from_real_fn(g, KernelKind::Coherence, |q, p| (q - 0.4 * p * p).cos());
        let dot = |x: &ClassicalKernel, y: &ClassicalKernel| -> f64 { x.values().iter().zip(y.values()).map(|(u, v)| (u * v).re).sum() };
        for along_q in [true, false] {
            let da = differentiate_unchecked(&a, along_q);
            let db = differentiate_unchecked(&b, along_q);
            assert!((dot(&a, &db) + dot(&b, &da)).abs() < 1e-12);
        }
    }

    #[test]
    fn guard_rejects_states_touching_the_edge() {
        let g = golden();
        let k = smooth_delta(4.5, 0.0, 0.25, 0.25, &g).unwrap();
        assert!(matches!(partial_q(&k), Err(Error::BoundaryMass { .. })));
        assert!(matches!(poisson_bracket(&k, &k), Err(Error::BoundaryMass { .. })));
    }

    #[test]
    fn canonical_brackets() {
        let g = golden();
        let q = ClassicalKernel::observable(g, |q, _| q);
        let p = ClassicalKernel::observable(g, |_, p| p);
        let qp = poisson_bracket(&q, &p).unwrap();
        assert!(qp.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12));
        assert!(poisson_bracket(&q, &q).unwrap().max_abs() < 1e-12);
        assert!(poisson_bracket(&p, &p).unwrap().max_abs() < 1e-12);
        let q2 = ClassicalKernel::observable(g, |q, _| q * q);
        let b = poisson_bracket(&q2, &p).unwrap();
        for kq in 0..g.n_q() {
            assert!((b.at(kq, 3).re - 2.0 * g.q_at(kq)).abs() < 1e-11);
        }
    }

    #[test]
    fn self_bracket_vanishes() {
        let g = golden();
        let h = ClassicalKernel::observable(g, |q, p| 0.5 * (q * q + p * p) + 0.1 * q.powi(3) * p);
        assert!(poisson_bracket(&h, &h).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn liouville_of_uniform_density_is_zero() {
        // a constant field is exempt from the guard only as an observable
        let g = golden();
        let h = ClassicalKernel::observable(g, |q, p| 0.5 * (q * q + p * p));
        let rho = ClassicalKernel::observable(g, |_, _| 1.0 / 144.0);
        assert!(liouville_rhs(&h, &rho).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn zero_mass_mean_is_an_error() {
        let g = golden();
        let f = ClassicalKernel::observable(g, |q, _| q);
        let rho = ClassicalKernel::zeros(g, KernelKind::State);
        assert!(matches!(classical_mean(&f, &rho), Err(Error::ZeroMass(_))));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = ClassicalKernel::observable(golden(), |q, _| q);
        let b = ClassicalKernel::observable(PhaseSpaceGrid::symmetric(5.0, 64).unwrap(), |q, _| q);
        assert!(matches!(poisson_bracket(&a, &b), Err(Error::GridMismatch)));
    }
}
