use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;
use crate::quantum::MeasuredBasisModel;
use num_complex::Complex64;

/// Ideal nonselective measurement: `Ĥ_qm⊗Î + Î⊗Ĥ_cm + V̂_qm⊗V̂_cm` with
/// `Ĥ_qm`, `V̂_qm` diagonal in the measured basis and the pointer starting at
/// the phase-space point `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    basis: MeasuredBasisModel,
    h_cm: Polynomial,
    v_cm: Polynomial,
    hbar: f64,
    t0: f64,
    start: PhasePoint,
}

impl MeasurementModel {
    pub fn new(
        basis: MeasuredBasisModel,
        h_cm: Polynomial,
        v_cm: Polynomial,
        hbar: f64,
        t0: f64,
        start: PhasePoint,
    ) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidModel(format!("hbar must be positive, got {hbar}")));
        }
        if !t0.is_finite() || !start.q.is_finite() || !start.p.is_finite() {
            return Err(Error::InvalidModel("t0 and the initial pointer position must be finite".into()));
        }
        Ok(Self { basis, h_cm, v_cm, hbar, t0, start })
    }

    /// The reference measurement: two outcomes, harmonic pointer, `V_cm = q`,
    /// `v = (+1, −1)`, equal superposition, pointer released from `(1, 0)`.
    pub fn golden() -> Self {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let basis = MeasuredBasisModel::new(vec![1.0, 1.0], vec![1.0, -1.0], vec![a, a]).expect("valid basis");
        let h_cm = Polynomial::from_graded(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.5]).expect("harmonic");
        let v_cm = Polynomial::from_graded(&[0.0, 1.0]).expect("linear");
        Self::new(basis, h_cm, v_cm, 1.0, 0.0, PhasePoint::new(1.0, 0.0)).expect("valid model")
    }

    pub fn basis(&self) -> &MeasuredBasisModel {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn h_cm(&self) -> &Polynomial {
        &self.h_cm
    }

    pub fn v_cm(&self) -> &Polynomial {
        &self.v_cm
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn start(&self) -> PhasePoint {
        self.start
    }

    pub fn with_start(mut self, start: PhasePoint) -> Self {
        self.start = start;
        self
    }

    /// Coupling seen by block `(i, j)`: `(v_i + v_j)/2`.
    pub fn coupling_value(&self, i: usize, j: usize) -> f64 {
        let v = self.basis.v();
        0.5 * (v[i] + v[j])
    }

    /// `H_cm + u V_cm`.
    pub fn effective_hamiltonian(&self, u: f64) -> Polynomial {
        self.h_cm.add_scaled(u, &self.v_cm)
    }

    /// Distinct couplings over all blocks, diagonal ones first.
    pub fn branch_couplings(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out: Vec<f64> = Vec::new();
        for i in 0..n {
            for j in i..n {
                let u = self.coupling_value(i, j);
                if !out.contains(&u) {
                    out.push(u);
                }
            }
        }
        out
    }

    /// Angular rate `ω` of block `(i, j)` with `dc/dt = −i ω c`, the pointer
    /// coupling evaluated at `v_cm`.
    pub fn phase_rate(&self, i: usize, j: usize, v_cm: f64) -> f64 {
        let (h, v) = (self.basis.h(), self.basis.v());
        ((h[i] - h[j]) + (v[i] - v[j]) * v_cm) / self.hbar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_shape() {
        let m = MeasurementModel::golden();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.coupling_value(0, 1), 0.0);
        assert_eq!(m.branch_couplings(), vec![1.0, 0.0, -1.0]);
        assert_eq!(m.effective_hamiltonian(1.0).eval(1.0, 1.0), 2.0);
        assert_eq!(m.phase_rate(0, 1, 0.5), 1.0);
        assert_eq!(m.phase_rate(1, 0, 0.5), -1.0);
    }

    #[test]
    fn rejects_bad_hbar() {
        let m = MeasurementModel::golden();
        let r = MeasurementModel::new(m.basis().clone(), Polynomial::zero(), Polynomial::zero(), 0.0, 0.0, m.start());
        assert!(r.is_err());
    }
}
