use super::model::MeasurementModel;
use super::trajectory::BranchTrajectory;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Time series of a block amplitude `c_ij(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherencePhase {
    pub pair: (usize, usize),
    pub samples: Vec<(f64, Complex64)>,
}

impl CoherencePhase {
    pub fn last(&self) -> Complex64 {
        self.samples.last().expect("at least one sample").1
    }

    /// Largest relative drift of `|c_ij|` from its initial value.
    pub fn modulus_drift(&self) -> f64 {
        let a0 = self.samples[0].1.norm();
        self.samples.iter().map(|s| (s.1.norm() - a0).abs()).fold(0.0, f64::max)
    }
}

/// RK4 for `dc/dt = −i ω c` where `omega(k)` is the rate at half-step sample
/// `k`; step `m` uses samples `2m`, `2m+1`, `2m+2`. Returns `c` at the even
/// samples.
pub(crate) fn integrate_phase(c0: Complex64, h: f64, steps: usize, omega: impl Fn(usize) -> f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut c = c0;
    out.push(c);
    let rate = |k: usize, x: Complex64| Complex64::new(0.0, -omega(k)) * x;
    for s in 0..steps {
        let k1 = rate(2 * s, c);
        let k2 = rate(2 * s + 1, c + k1 * (0.5 * h));
        let k3 = rate(2 * s + 1, c + k2 * (0.5 * h));
        let k4 = rate(2 * s + 2, c + k3 * h);
        c += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        out.push(c);
    }
    out
}

/// Integrates `dc_ij/dt = (1/iħ)[(h_i − h_j) + (v_i − v_j) V_cm(q_ij(t), p_ij(t))] c_ij`
/// along a block trajectory. The RK4 step spans two trajectory samples, so
/// the trajectory needs an even number of intervals.
pub fn phase_ode(m: &MeasurementModel, pair: (usize, usize), traj: &BranchTrajectory, c0: Complex64) -> Result<CoherencePhase> {
    let (i, j) = pair;
    if i >= m.dim() || j >= m.dim() {
        return Err(Error::DimMismatch(format!("pair ({i}, {j}) outside a {}-level system", m.dim())));
    }
    let u = m.coupling_value(i, j);
    if traj.u() != u {
        return Err(Error::InvalidModel(format!("trajectory coupling {} does not match (v_i+v_j)/2 = {u}", traj.u())));
    }
    let s = traj.samples();
    if !(s.len() - 1).is_multiple_of(2) {
        return Err(Error::InvalidModel("phase integration needs an even number of trajectory intervals".into()));
    }
    let steps = (s.len() - 1) / 2;
    let h = 2.0 * traj.step();
    let v = m.v_cm();
    let c = integrate_phase(c0, h, steps, |k| m.phase_rate(i, j, v.eval(s[k].q, s[k].p)));
    let samples = c.into_iter().enumerate().map(|(k, c)| (s[2 * k].t, c)).collect();
    Ok(CoherencePhase { pair, samples })
}
