//! Finite-dimensional quantum sector: operators, commutators, symmetrized
//! products and the measured-basis model.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperator {
    m: DMatrix<Complex64>,
}

impl QuantumOperator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimMismatch(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(Self { m })
    }

    pub fn from_row_slice(n: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimMismatch(format!("{} entries for a {n}x{n} operator", entries.len())));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { m: DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(d[i], 0.0) } else { Complex64::new(0.0, 0.0) }) }
    }

    /// `|ψ_i⟩⟨ψ_j|`.
    pub fn dyad(n: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        Self { m }
    }

    /// `c c†`.
    pub fn projector(c: &[Complex64]) -> Self {
        let n = c.len();
        Self { m: DMatrix::from_fn(n, n, |i, j| c[i] * c[j].conj()) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A_ji − conj(A_ij)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self.m[(j, i)] - self.m[(i, j)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITIAN_TOL
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimMismatch(format!("{} vs {}", self.dim(), other.dim())))
        }
    }

    /// Eigenvalues in ascending order; requires a Hermitian operator.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl std::ops::Add for &QuantumOperator {
    type Output = QuantumOperator;
    fn add(self, rhs: &QuantumOperator) -> QuantumOperator {
        QuantumOperator { m: &self.m + &rhs.m }
    }
}

impl std::ops::Sub for &QuantumOperator {
    type Output = QuantumOperator;
    fn sub(self, rhs: &QuantumOperator) -> QuantumOperator {
        QuantumOperator { m: &self.m - &rhs.m }
    }
}

impl std::ops::Mul for &QuantumOperator {
    type Output = QuantumOperator;
    fn mul(self, rhs: &QuantumOperator) -> QuantumOperator {
        QuantumOperator { m: &self.m * &rhs.m }
    }
}

/// A density operator: Hermitian, unit trace, nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState(QuantumOperator);

impl QuantumState {
    pub fn new(op: QuantumOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::InvalidModel("density operator is not Hermitian".into()));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("density operator trace is {tr}")));
        }
        if let Some(&lo) = op.eigenvalues().first() {
            if lo < -1e-10 {
                return Err(Error::InvalidModel(format!("density operator has eigenvalue {lo}")));
            }
        }
        Ok(Self(op))
    }

    pub fn pure(c: &[Complex64]) -> Result<Self> {
        Self::new(QuantumOperator::projector(c))
    }

    pub fn operator(&self) -> &QuantumOperator {
        &self.0
    }
}

impl std::ops::Deref for QuantumState {
    type Target = QuantumOperator;
    fn deref(&self) -> &QuantumOperator {
        &self.0
    }
}

/// `AB − BA`.
pub fn commutator(a: &QuantumOperator, b: &QuantumOperator) -> Result<QuantumOperator> {
    a.check_dims(b)?;
    Ok(&(a * b) - &(b * a))
}

/// `(AB + BA) / 2`.
pub fn symmetrized(a: &QuantumOperator, b: &QuantumOperator) -> Result<QuantumOperator> {
    a.check_dims(b)?;
    Ok((&(a * b) + &(b * a)).scale(Complex64::new(0.5, 0.0)))
}

/// `1/(iħ)`.
pub fn inv_i_hbar(hbar: f64) -> Complex64 {
    Complex64::new(0.0, -1.0 / hbar)
}

/// `(1/iħ)[H, ρ]`.
pub fn schrodinger_rhs(h: &QuantumOperator, rho: &QuantumOperator, hbar: f64) -> Result<QuantumOperator> {
    Ok(commutator(h, rho)?.scale(inv_i_hbar(hbar)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    /// Frobenius norm of LHS − RHS.
    pub absolute: f64,
    /// `‖H1‖ ‖H2‖ ‖ρ1‖ ‖ρ2‖ / ħ`.
    pub scale: f64,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        if self.absolute == 0.0 {
            0.0
        } else {
            self.absolute / self.scale
        }
    }
}

/// Residual of the product-commutator factorization
/// `(1/iħ)[H1⊗H2, ρ1⊗ρ2] = (1/iħ)[H1,ρ1] ⊗ H2ρ2 + ρ1H1 ⊗ (1/iħ)[H2,ρ2]`.
pub fn product_identity_residual(
    h1: &QuantumOperator,
    h2: &QuantumOperator,
    rho1: &QuantumOperator,
    rho2: &QuantumOperator,
    hbar: f64,
) -> Result<IdentityResidual> {
    h1.check_dims(rho1)?;
    h2.check_dims(rho2)?;
    let lhs = schrodinger_rhs(&h1.kron(h2), &rho1.kron(rho2), hbar)?;
    let rhs = &schrodinger_rhs(h1, rho1, hbar)?.kron(&(h2 * rho2)) + &(rho1 * h1).kron(&schrodinger_rhs(h2, rho2, hbar)?);
    Ok(IdentityResidual {
        absolute: (&lhs - &rhs).frobenius(),
        scale: h1.frobenius() * h2.frobenius() * rho1.frobenius() * rho2.frobenius() / hbar,
    })
}

/// Random operator with entries uniform in the unit square, optionally
/// projected onto its Hermitian part.
pub fn random_operator<R: Rng>(rng: &mut R, n: usize, hermitian: bool) -> QuantumOperator {
    let m = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    if hermitian {
        QuantumOperator { m: (&m + m.adjoint()) * Complex64::new(0.5, 0.0) }
    } else {
        QuantumOperator { m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheckReport {
    pub trials: usize,
    pub max_relative: f64,
}

impl IdentityCheckReport {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn passed(&self) -> bool {
        self.max_relative <= Self::TOLERANCE
    }
}

/// Evaluates the factorization identity on `trials` seeded random Hermitian
/// quadruples of dimension `dim`.
pub fn identity_check(dim: usize, trials: usize, seed: u64) -> Result<IdentityCheckReport> {
    if dim == 0 {
        return Err(Error::DimMismatch("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_relative: f64 = 0.0;
    for _ in 0..trials {
        let h1 = random_operator(&mut rng, dim, true);
        let h2 = random_operator(&mut rng, dim, true);
        let r1 = random_operator(&mut rng, dim, true);
        let r2 = random_operator(&mut rng, dim, true);
        let hbar = rng.random_range(0.5..2.0);
        max_relative = max_relative.max(product_identity_residual(&h1, &h2, &r1, &r2, hbar)?.relative());
    }
    Ok(IdentityCheckReport { trials, max_relative })
}

/// The measured system: `Ĥ_qm = Σ h_i |ψ_i⟩⟨ψ_i|`, `V̂_qm = Σ v_i |ψ_i⟩⟨ψ_i|`,
/// initial pure state `Σ c_i |ψ_i⟩`. Sharing one eigenbasis is what makes the
/// two operators commute.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredBasisModel {
    h: Vec<f64>,
    v: Vec<f64>,
    c0: Vec<Complex64>,
}

impl MeasuredBasisModel {
    pub fn new(h: Vec<f64>, v: Vec<f64>, c0: Vec<Complex64>) -> Result<Self> {
        let n = h.len();
        if n == 0 || v.len() != n || c0.len() != n {
            return Err(Error::InvalidModel(format!(
                "h, v and c0 must share one positive length, got {}, {}, {}",
                h.len(),
                v.len(),
                c0.len()
            )));
        }
        let norm: f64 = c0.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("sum |c0_i|^2 = {norm}, expected 1")));
        }
        if h.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("eigenvalues must be finite".into()));
        }
        Ok(Self { h, v, c0 })
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn c0(&self) -> &[Complex64] {
        &self.c0
    }

    pub fn hamiltonian(&self) -> QuantumOperator {
        QuantumOperator::diagonal(&self.h)
    }

    pub fn coupling(&self) -> QuantumOperator {
        QuantumOperator::diagonal(&self.v)
    }

    pub fn initial_state(&self) -> QuantumState {
        QuantumState(QuantumOperator::projector(&self.c0))
    }

    /// Pairs `i < j` with `v_i = v_j`; their pointer branches never separate.
    pub fn degenerate_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.v[i] == self.v[j] {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sx() -> QuantumOperator {
        QuantumOperator::from_row_slice(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }
    fn sy() -> QuantumOperator {
        QuantumOperator::from_row_slice(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap()
    }
    fn sz() -> QuantumOperator {
        QuantumOperator::diagonal(&[1.0, -1.0])
    }

    #[test]
    fn pauli_commutator() {
        let r = commutator(&sz(), &sx()).unwrap();
        assert!((&r - &sy().scale(c(0., 2.))).max_abs() < 1e-15);
        assert_eq!(commutator(&sx(), &sx()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn commuting_diagonals() {
        let a = QuantumOperator::diagonal(&[1.0, 2.0, 3.0]);
        let b = QuantumOperator::diagonal(&[-1.0, 0.5, 4.0]);
        assert_eq!(commutator(&a, &b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(commutator(&sx(), &QuantumOperator::identity(3)), Err(Error::DimMismatch(_))));
        assert!(matches!(symmetrized(&sx(), &QuantumOperator::identity(3)), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn symmetrized_examples() {
        let b = random_operator(&mut ChaCha8Rng::seed_from_u64(1), 2, false);
        assert!((&symmetrized(&QuantumOperator::identity(2), &b).unwrap() - &b).max_abs() < 1e-15);
        assert!((&symmetrized(&sx(), &sx()).unwrap() - &QuantumOperator::identity(2)).max_abs() < 1e-15);
        let h = QuantumOperator::diagonal(&[0.3, 1.1]);
        let s = symmetrized(&h, &QuantumOperator::dyad(2, 0, 1)).unwrap();
        assert!((&s - &QuantumOperator::dyad(2, 0, 1).scale(c(0.7, 0.0))).max_abs() < 1e-15);
    }

    #[test]
    fn schrodinger_examples() {
        let h = QuantumOperator::diagonal(&[0.7, -0.2]);
        assert_eq!(schrodinger_rhs(&h, &QuantumOperator::dyad(2, 0, 0), 1.0).unwrap().max_abs(), 0.0);

        let hbar = 0.5;
        let rho = QuantumOperator::from_row_slice(2, &[c(0.5, 0.), c(0.2, 0.1), c(0.2, -0.1), c(0.5, 0.)]).unwrap();
        let r = schrodinger_rhs(&h, &rho, hbar).unwrap();
        let expected = inv_i_hbar(hbar) * (0.7 - -0.2) * rho.get(0, 1);
        assert!((r.get(0, 1) - expected).norm() < 1e-15);

        // H = σ_z, ρ = (I + σ_x)/2, ħ = 1: -i[σ_z, σ_x]/2 = -i·2iσ_y/2 = σ_y
        let rho = (&QuantumOperator::identity(2) + &sx()).scale(c(0.5, 0.));
        let r = schrodinger_rhs(&sz(), &rho, 1.0).unwrap();
        assert!((&r - &sy()).max_abs() < 1e-15);
    }

    #[test]
    fn hermiticity_of_brackets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            let a = random_operator(&mut rng, n, true);
            let b = random_operator(&mut rng, n, true);
            assert!(symmetrized(&a, &b).unwrap().is_hermitian());
            let cm = commutator(&a, &b).unwrap();
            assert!((&cm + &cm.adjoint()).max_abs() < 1e-14, "commutator must be anti-Hermitian");
            let r = schrodinger_rhs(&a, &b, 1.3).unwrap();
            assert!(r.is_hermitian());
            assert!(r.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn unsymmetrized_product_breaks_hermiticity() {
        // (1/iħ)[H, ρ] ⊗ (Hc ρc) with non-commuting Hermitian Hc, ρc
        let rho = (&QuantumOperator::identity(2) + &sx()).scale(c(0.5, 0.));
        let q = schrodinger_rhs(&sz(), &rho, 1.0).unwrap();
        let bare = q.kron(&(&sx() * &sz()));
        assert!(!bare.is_hermitian());
        let sym = q.kron(&symmetrized(&sx(), &sz()).unwrap());
        assert!(sym.is_hermitian());
    }

    #[test]
    fn identity_residual_trivial_cases() {
        let r1 = QuantumState::pure(&[c(0.6, 0.), c(0., 0.8)]).unwrap();
        let r2 = QuantumState::pure(&[c(1.0, 0.), c(0., 0.)]).unwrap();
        let i2 = QuantumOperator::identity(2);
        let res = product_identity_residual(&i2, &i2, &r1, &r2, 1.0).unwrap();
        assert_eq!(res.absolute, 0.0);
        let one = QuantumOperator::diagonal(&[1.7]);
        let res = product_identity_residual(&one, &one.scale(c(0.3, 0.)), &one, &one, 1.0).unwrap();
        assert_eq!(res.absolute, 0.0);
    }

    #[test]
    fn identity_holds_without_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ops: Vec<_> = (0..4).map(|_| random_operator(&mut rng, 3, false)).collect();
            let res = product_identity_residual(&ops[0], &ops[1], &ops[2], &ops[3], 1.0).unwrap();
            assert!(res.relative() <= 1e-12, "{res:?}");
        }
    }

    #[test]
    fn quantum_state_validation() {
        assert!(QuantumState::new(QuantumOperator::diagonal(&[0.5, 0.6])).is_err());
        assert!(QuantumState::new(QuantumOperator::diagonal(&[1.5, -0.5])).is_err());
        assert!(QuantumState::new(sx()).is_err());
        assert!(QuantumState::pure(&[c(0.6, 0.), c(0.8, 0.)]).is_ok());
    }

    #[test]
    fn measured_basis_model_validation() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(MeasuredBasisModel::new(vec![1.0], vec![0.0, 1.0], vec![c(1.0, 0.)]).is_err());
        assert!(MeasuredBasisModel::new(vec![1.0, 1.0], vec![1.0, -1.0], vec![c(0.5, 0.), c(0.5, 0.)]).is_err());
        let m = MeasuredBasisModel::new(vec![1.0, 1.0], vec![1.0, -1.0], vec![c(s, 0.), c(s, 0.)]).unwrap();
        assert_eq!(commutator(&m.hamiltonian(), &m.coupling()).unwrap().max_abs(), 0.0);
        assert!(m.degenerate_pairs().is_empty());
        let d = MeasuredBasisModel::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 0.0], vec![c(1.0, 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert_eq!(d.degenerate_pairs(), vec![(0, 1)]);
    }
}
