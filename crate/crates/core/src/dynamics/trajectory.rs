use super::model::MeasurementModel;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;

const IMPLICIT_TOL: f64 = 1e-15;
const IMPLICIT_MAX_ITER: usize = 50;
const BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchLabel {
    Unlabeled,
    Branch(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: f64,
    pub p: f64,
}

impl TrajectorySample {
    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.q, self.p)
    }
}

/// Pointer trajectory under `H_cm + u V_cm`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrajectory {
    label: BranchLabel,
    u: f64,
    samples: Vec<TrajectorySample>,
}

impl BranchTrajectory {
    pub fn label(&self) -> BranchLabel {
        self.label
    }

    pub fn with_label(mut self, label: BranchLabel) -> Self {
        self.label = label;
        self
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn last(&self) -> TrajectorySample {
        *self.samples.last().expect("trajectory has at least one sample")
    }

    /// Uniform sample spacing (zero for a single sample).
    pub fn step(&self) -> f64 {
        if self.samples.len() < 2 {
            0.0
        } else {
            (self.last().t - self.samples[0].t) / (self.samples.len() - 1) as f64
        }
    }

    /// Largest deviation of `H_cm + u V_cm` from its initial value.
    pub fn energy_drift(&self, m: &MeasurementModel) -> f64 {
        let h = m.effective_hamiltonian(self.u);
        let e0 = h.eval(self.samples[0].q, self.samples[0].p);
        self.samples.iter().map(|s| (h.eval(s.q, s.p) - e0).abs()).fold(0.0, f64::max)
    }
}

/// Number of uniform steps covering `span` with steps no longer than `dt`.
pub fn step_count(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        0
    } else {
        ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Hamiltonian vector field `(∂H/∂p, −∂H/∂q)` of a polynomial Hamiltonian.
#[derive(Debug, Clone)]
pub(crate) struct VectorField {
    h_q: Polynomial,
    h_p: Polynomial,
}

impl VectorField {
    pub(crate) fn new(h: &Polynomial) -> Self {
        Self { h_q: h.d_dq(), h_p: h.d_dp() }
    }

    pub(crate) fn velocity(&self, q: f64, p: f64) -> [f64; 2] {
        [self.h_p.eval(q, p), -self.h_q.eval(q, p)]
    }

    /// One Störmer–Verlet step. The implicit stages collapse to the explicit
    /// leapfrog when `H` is separable.
    pub(crate) fn step(&self, q: f64, p: f64, h: f64) -> Result<(f64, f64)> {
        let half = 0.5 * h;
        let p_half = fixed_point(p, |x| p - half * self.h_q.eval(q, x))?;
        let dq0 = self.h_p.eval(q, p_half);
        let q_new = fixed_point(q + h * dq0, |y| q + half * (dq0 + self.h_p.eval(y, p_half)))?;
        let p_new = p_half - half * self.h_q.eval(q_new, p_half);
        if !(q_new.abs() < BLOWUP && p_new.abs() < BLOWUP) {
            return Err(Error::NumericalBlowup(format!("trajectory left the finite range at ({q_new}, {p_new})")));
        }
        Ok((q_new, p_new))
    }
}

fn fixed_point(start: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut x = start;
    for _ in 0..IMPLICIT_MAX_ITER {
        let next = f(x);
        if !next.is_finite() {
            break;
        }
        if (next - x).abs() <= IMPLICIT_TOL * (1.0 + next.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NumericalBlowup("implicit trajectory stage did not converge; reduce the step".into()))
}

/// Integrates `dq/dt = ∂H_eff/∂p`, `dp/dt = −∂H_eff/∂q` from `(q0, p0)` at
/// `m.t0()` over `T` with `ceil(T/dt)` equal steps.
pub fn hamilton_trajectory(m: &MeasurementModel, u: f64, q0: f64, p0: f64, dt: f64, t_span: f64) -> Result<BranchTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_span >= 0.0 && t_span.is_finite()) {
        return Err(Error::InvalidModel(format!("need dt > 0 and T >= 0, got dt={dt}, T={t_span}")));
    }
    let field = VectorField::new(&m.effective_hamiltonian(u));
    let n = step_count(t_span, dt);
    let h = if n == 0 { 0.0 } else { t_span / n as f64 };
    let mut samples = Vec::with_capacity(n + 1);
    let (mut q, mut p) = (q0, p0);
    samples.push(TrajectorySample { t: m.t0(), q, p });
    for k in 1..=n {
        (q, p) = field.step(q, p, h)?;
        samples.push(TrajectorySample { t: m.t0() + k as f64 * h, q, p });
    }
    Ok(BranchTrajectory { label: BranchLabel::Unlabeled, u, samples })
}

/// Trajectory of the block `(i, j)` pointer from the model's start point,
/// sampled at `2n + 1` points so that it can drive the phase integrator.
pub(crate) fn block_trajectory(m: &MeasurementModel, i: usize, j: usize, t: f64, traj_dt: f64) -> Result<BranchTrajectory> {
    let span = t - m.t0();
    let n = step_count(span, traj_dt);
    let dt = if n == 0 { traj_dt } else { span / (2 * n) as f64 };
    let s = m.start();
    let label = if i == j { BranchLabel::Branch(i) } else { BranchLabel::Pair(i, j) };
    let traj = if n == 0 {
        hamilton_trajectory(m, m.coupling_value(i, j), s.q, s.p, dt, 0.0)?
    } else {
        hamilton_trajectory(m, m.coupling_value(i, j), s.q, s.p, dt, span)?
    };
    Ok(traj.with_label(label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::MeasuredBasisModel;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn model(h: &[f64], v: &[f64]) -> MeasurementModel {
        let b = MeasuredBasisModel::new(vec![0.0], vec![0.0], vec![Complex64::new(1.0, 0.0)]).unwrap();
        MeasurementModel::new(b, Polynomial::from_graded(h).unwrap(), Polynomial::from_graded(v).unwrap(), 1.0, 0.0, PhasePoint::new(0.0, 0.0))
            .unwrap()
    }

    #[test]
    fn harmonic_quarter_period() {
        let m = model(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.5], &[]);
        let tr = hamilton_trajectory(&m, 0.0, 1.0, 0.0, 1e-3, PI / 2.0).unwrap();
        let end = tr.last();
        assert!(end.q.abs() < 1e-6, "{}", end.q);
        assert!((end.p + 1.0).abs() < 1e-6, "{}", end.p);
        assert!((end.t - PI / 2.0).abs() < 1e-15);
        assert!(tr.energy_drift(&m) < 1e-6);
    }

    #[test]
    fn constant_force() {
        let m = model(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.5], &[0.0, 1.0]);
        let end = hamilton_trajectory(&m, 1.0, 0.0, 0.0, 1e-3, 1.0).unwrap().last();
        assert!((end.q + 0.5).abs() < 1e-9);
        assert!((end.p + 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_particle_at_rest_stays() {
        let m = model(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.5], &[]);
        let tr = hamilton_trajectory(&m, 0.0, 0.0, 0.0, 1e-2, 3.0).unwrap();
        assert!(tr.samples().iter().all(|s| s.q == 0.0 && s.p == 0.0));
        assert!(tr.samples().windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn non_separable_converges() {
        // H = (q² + p²)/2 + q p / 4 is a rotated oscillator; energy must stay put.
        let m = model(&[0.0, 0.0, 0.0, 0.5, 0.25, 0.5], &[]);
        let tr = hamilton_trajectory(&m, 0.0, 1.0, 0.3, 1e-3, 5.0).unwrap();
        assert!(tr.energy_drift(&m) < 1e-6);
    }

    #[test]
    fn quartic_blowup_is_reported() {
        // dp/dt = 4q³ with a huge step runs away.
        let m = model(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, -1.0], &[]);
        assert!(matches!(hamilton_trajectory(&m, 0.0, 3.0, 0.0, 0.5, 50.0), Err(Error::NumericalBlowup(_))));
    }

    #[test]
    fn step_count_rounds_up() {
        assert_eq!(step_count(1.0, 2e-3), 500);
        assert_eq!(step_count(1.0, 3e-3), 334);
        assert_eq!(step_count(0.0, 1e-3), 0);
        assert_eq!(step_count(1e-9, 1e-3), 1);
    }
}
