use super::generator::GridGenerator;
use super::model::MeasurementModel;
use super::phase::integrate_phase;
use super::trajectory::{step_count, VectorField};
use crate::error::{Error, Result};
use crate::hybrid::HybridState;
use crate::phase_space::{ClassicalEntry, ClassicalKernel, CrossDyad, PhasePoint, PhaseSpaceGrid};
use num_complex::Complex64;

/// Largest per-step change of a diagonal block's mass.
pub const MASS_DRIFT_PER_STEP: f64 = 1e-7;
/// Largest tolerated Hermiticity violation after a step.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Growth of the state norm treated as a blowup.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Largest stable step for the grid evolver:
/// `0.25 · min(Δq / max|∂_p H_eff|, Δp / max|∂_q H_eff|)` over every block
/// coupling, maxima taken over cell centres.
pub fn cfl_limit(m: &MeasurementModel, grid: &PhaseSpaceGrid) -> f64 {
    let mut limit = f64::INFINITY;
    for u in m.branch_couplings() {
        let h = m.effective_hamiltonian(u);
        let (hq, hp) = (h.d_dq(), h.d_dp());
        let (mut max_q, mut max_p) = (0.0f64, 0.0f64);
        for kq in 0..grid.n_q() {
            for kp in 0..grid.n_p() {
                let (q, p) = (grid.q_at(kq), grid.p_at(kp));
                max_q = max_q.max(hq.eval(q, p).abs());
                max_p = max_p.max(hp.eval(q, p).abs());
            }
        }
        if max_p > 0.0 {
            limit = limit.min(grid.dq() / max_p);
        }
        if max_q > 0.0 {
            limit = limit.min(grid.dp() / max_q);
        }
    }
    0.25 * limit
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRunOptions {
    /// Requested step; the actual step is `T / ceil(T / dt)`.
    pub dt: f64,
    /// Length of the run `T`.
    pub span: f64,
    /// Observer called every `cadence` steps and after the last step.
    pub cadence: usize,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRunStats {
    pub steps: usize,
    pub step: f64,
    pub max_mass_drift: f64,
    pub max_hermiticity: f64,
}

fn shifted(s: &HybridState, a: f64, k: &[ClassicalKernel]) -> Result<HybridState> {
    let mut kernels = s.kernels().expect("grid state").to_vec();
    let a = Complex64::new(a, 0.0);
    for (x, d) in kernels.iter_mut().zip(k) {
        x.axpy(a, d);
    }
    HybridState::from_kernels(s.dim(), kernels)
}

fn rk4(gen: &GridGenerator, s: &HybridState, h: f64) -> Result<HybridState> {
    let k1 = gen.derivative(s)?;
    let k2 = gen.derivative(&shifted(s, 0.5 * h, &k1)?)?;
    let k3 = gen.derivative(&shifted(s, 0.5 * h, &k2)?)?;
    let k4 = gen.derivative(&shifted(s, h, &k3)?)?;
    let mut kernels = s.kernels().expect("grid state").to_vec();
    for (b, x) in kernels.iter_mut().enumerate() {
        let mut inc = k1[b].clone();
        inc.axpy(Complex64::new(2.0, 0.0), &k2[b]);
        inc.axpy(Complex64::new(2.0, 0.0), &k3[b]);
        inc.axpy(Complex64::new(1.0, 0.0), &k4[b]);
        x.axpy(Complex64::new(h / 6.0, 0.0), &inc);
    }
    HybridState::from_kernels(s.dim(), kernels)
}

/// RK4 integration of the grid form of the generator. `observe(t, state)`
/// receives the initial state, every `cadence`-th state and the final one.
pub fn evolve_grid_observed(
    m: &MeasurementModel,
    s0: &HybridState,
    opts: &GridRunOptions,
    mut observe: impl FnMut(f64, &HybridState) -> Result<()>,
) -> Result<GridRunStats> {
    let grid = *s0.grid().ok_or_else(|| Error::DimMismatch("grid evolution needs a grid state".into()))?;
    if !(opts.dt > 0.0) || !(opts.span >= 0.0) || opts.cadence == 0 {
        return Err(Error::Config(format!("need dt > 0, T >= 0, cadence >= 1; got {}, {}, {}", opts.dt, opts.span, opts.cadence)));
    }
    let limit = cfl_limit(m, &grid);
    if opts.dt > limit {
        return Err(Error::CflViolation { dt: opts.dt, limit });
    }
    let gen = GridGenerator::new(m, &grid).with_threads(opts.threads)?;
    let n = step_count(opts.span, opts.dt);
    let h = if n == 0 { 0.0 } else { opts.span / n as f64 };
    let norm0 = s0.norm();
    let mut stats = GridRunStats { steps: n, step: h, max_mass_drift: 0.0, max_hermiticity: s0.hermiticity_residual() };
    let mut s = s0.clone();
    observe(m.t0(), &s)?;
    for step in 1..=n {
        let next = rk4(&gen, &s, h)?;
        let t = m.t0() + step as f64 * h;
        let norm = next.norm();
        if !norm.is_finite() || norm > BLOWUP_FACTOR * norm0 {
            return Err(Error::NumericalBlowup(format!("state norm {norm:e} at t = {t}")));
        }
        let herm = next.hermiticity_residual();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvariantViolation(format!("hermiticity residual {herm:e} at t = {t}")));
        }
        for i in 0..s.dim() {
            let drift = (next.population(i) - s.population(i)).abs();
            if drift > MASS_DRIFT_PER_STEP {
                return Err(Error::InvariantViolation(format!("block {i} mass changed by {drift:e} at t = {t}")));
            }
            stats.max_mass_drift = stats.max_mass_drift.max(drift);
        }
        stats.max_hermiticity = stats.max_hermiticity.max(herm);
        s = next;
        if step % opts.cadence == 0 || step == n {
            observe(t, &s)?;
        }
    }
    Ok(stats)
}

/// Grid evolution collecting every `cadence`-th state, first and last included.
pub fn evolve_grid(m: &MeasurementModel, s0: &HybridState, dt: f64, span: f64, cadence: usize) -> Result<Vec<(f64, HybridState)>> {
    let mut out = Vec::new();
    let opts = GridRunOptions { dt, span, cadence, threads: 1 };
    evolve_grid_observed(m, s0, &opts, |t, s| {
        out.push((t, s.clone()));
        Ok(())
    })?;
    Ok(out)
}

/// Characteristics evolution of a point state: every point entry of block
/// `(i, j)` rides the flow of `H_cm + (v_i+v_j)/2 · V_cm` and picks up the
/// phase of that block; cross dyads stay put and only rotate their phase.
/// Trajectories use half the requested step so that RK4 sees the midpoint.
pub fn evolve_points(m: &MeasurementModel, s0: &HybridState, dt: f64, span: f64, cadence: usize) -> Result<Vec<(f64, HybridState)>> {
    let blocks = s0.entry_blocks().ok_or_else(|| Error::DimMismatch("characteristics evolution needs a point state".into()))?;
    if s0.dim() != m.dim() {
        return Err(Error::DimMismatch(format!("state has {} levels, model has {}", s0.dim(), m.dim())));
    }
    if !(dt > 0.0) || !(span >= 0.0) || cadence == 0 {
        return Err(Error::Config(format!("need dt > 0, T >= 0, cadence >= 1; got {dt}, {span}, {cadence}")));
    }
    let n = step_count(span, dt);
    let h = if n == 0 { 0.0 } else { span / n as f64 };
    let keep: Vec<usize> = (0..=n).filter(|k| k % cadence == 0 || *k == n).collect();
    let dim = m.dim();
    let v_cm = m.v_cm();
    // histories[block][entry][kept index]
    let mut histories: Vec<Vec<Vec<ClassicalEntry>>> = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let field = VectorField::new(&m.effective_hamiltonian(m.coupling_value(i, j)));
            let mut hist = Vec::with_capacity(blocks[i * dim + j].len());
            for e in &blocks[i * dim + j] {
                let (ket, bra) = (e.ket(), e.bra());
                let path: Vec<PhasePoint> = if e.is_cross() {
                    vec![ket]
                } else {
                    let mut path = Vec::with_capacity(2 * n + 1);
                    let (mut q, mut p) = (ket.q, ket.p);
                    path.push(ket);
                    for _ in 0..2 * n {
                        (q, p) = field.step(q, p, 0.5 * h)?;
                        path.push(PhasePoint::new(q, p));
                    }
                    path
                };
                let c = if e.is_cross() {
                    let v_bar = 0.5 * (v_cm.eval(ket.q, ket.p) + v_cm.eval(bra.q, bra.p));
                    let w = m.phase_rate(i, j, v_bar);
                    integrate_phase(e.amplitude(), h, n, |_| w)
                } else {
                    integrate_phase(e.amplitude(), h, n, |k| m.phase_rate(i, j, v_cm.eval(path[k].q, path[k].p)))
                };
                let entries = keep
                    .iter()
                    .map(|&k| {
                        if e.is_cross() {
                            CrossDyad::new(ket, bra, c[k])
                        } else {
                            let x = path[2 * k];
                            CrossDyad::new(x, x, c[k])
                        }
                    })
                    .collect();
                hist.push(entries);
            }
            histories.push(hist);
        }
    }
    keep.iter()
        .enumerate()
        .map(|(slot, &k)| {
            let blocks = histories.iter().map(|b| b.iter().map(|e| e[slot]).collect()).collect();
            Ok((m.t0() + k as f64 * h, HybridState::from_entries(dim, blocks)?))
        })
        .collect()
}
