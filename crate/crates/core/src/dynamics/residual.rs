use super::candidates::{candidate_blocks, state_from_blocks, Candidate, CandidateOptions, RawBlocks};
use super::generator::{point_rates, TermRates};
use super::model::MeasurementModel;
use super::trajectory::VectorField;
use crate::error::{Error, Result};
use crate::phase_space::{PhasePoint, PhaseSpaceGrid};

pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Absolute floor of the step-halving guard; below it the comparison is
/// dominated by rounding in the difference quotient.
pub const FD_GUARD_FLOOR: f64 = 1e-8;
/// Relative change allowed when the difference step is halved.
pub const FD_GUARD_RELATIVE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    pub dt_fd: f64,
    /// Bins used to decide whether branch points are resolved.
    pub bins: PhaseSpaceGrid,
    pub candidate: CandidateOptions,
    /// Spacing of the scan for the earliest separated time.
    pub scan_step: f64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            dt_fd: DEFAULT_FD_STEP,
            bins: PhaseSpaceGrid::symmetric(6.0, 32).expect("valid bins"),
            candidate: CandidateOptions::default(),
            scan_step: 1e-3,
        }
    }
}

/// Residual of one block. All norms are divided by the state norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockResidual {
    pub i: usize,
    pub j: usize,
    pub residual: f64,
    pub block_norm: f64,
    /// Finite-difference time derivative.
    pub lhs: f64,
    pub phase_h: f64,
    pub bracket_h: f64,
    pub phase_v: f64,
    pub bracket_v: f64,
}

impl BlockResidual {
    /// Residual per unit block norm, in inverse time units.
    pub fn relative(&self) -> f64 {
        if self.block_norm == 0.0 {
            0.0
        } else {
            self.residual / self.block_norm
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub candidate: Candidate,
    pub t: f64,
    pub dt_fd: f64,
    pub total: f64,
    /// Total with the difference step halved.
    pub total_refined: f64,
    pub state_norm: f64,
    pub blocks: Vec<BlockResidual>,
}

impl ResidualReport {
    pub fn block(&self, i: usize, j: usize) -> &BlockResidual {
        self.blocks.iter().find(|b| b.i == i && b.j == j).expect("block exists")
    }
}

/// Branch points `X_i(t)` followed by midpoints `X_ij(t)`, `i < j`.
pub fn branch_points(m: &MeasurementModel, t: f64, traj_dt: f64) -> Result<Vec<PhasePoint>> {
    let n = m.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let b = super::trajectory::block_trajectory(m, i, j, t, traj_dt)?;
            out.push((i == j, b.last().point()));
        }
    }
    out.sort_by_key(|(diag, _)| !*diag);
    Ok(out.into_iter().map(|(_, p)| p).collect())
}

fn distinct_bins(points: &[PhasePoint], bins: &PhaseSpaceGrid) -> Result<bool> {
    let mut seen = Vec::with_capacity(points.len());
    for p in points {
        let b = bins.bin_of(p.q, p.p)?;
        if seen.contains(&b) {
            return Ok(false);
        }
        seen.push(b);
    }
    Ok(true)
}

/// Earliest scanned time at which every branch point and midpoint occupies
/// its own bin, searched up to `t0 + horizon`.
pub fn earliest_separation(m: &MeasurementModel, bins: &PhaseSpaceGrid, horizon: f64, step: f64) -> Result<Option<f64>> {
    let n = m.dim();
    let mut fields = Vec::new();
    for i in 0..n {
        for j in i..n {
            fields.push(VectorField::new(&m.effective_hamiltonian(m.coupling_value(i, j))));
        }
    }
    let s = m.start();
    let mut pts = vec![s; fields.len()];
    let steps = super::trajectory::step_count(horizon, step);
    let h = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    for k in 1..=steps {
        for (p, f) in pts.iter_mut().zip(&fields) {
            let (q, pp) = f.step(p.q, p.p, h)?;
            *p = PhasePoint::new(q, pp);
        }
        if !pts.iter().all(|p| bins.contains(p.q, p.p)) {
            return Ok(None);
        }
        if distinct_bins(&pts, bins)? {
            return Ok(Some(m.t0() + k as f64 * h));
        }
    }
    Ok(None)
}

struct Evaluation {
    total: f64,
    state_norm: f64,
    blocks: Vec<BlockResidual>,
}

fn evaluate(m: &MeasurementModel, before: &RawBlocks, now: &RawBlocks, after: &RawBlocks, rates: &[Vec<TermRates>], dt_fd: f64) -> Result<Evaluation> {
    let n = m.dim();
    let state_norm = now.iter().flatten().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt();
    if state_norm == 0.0 {
        return Err(Error::ZeroTrace(0.0));
    }
    let inv = 1.0 / (2.0 * dt_fd);
    let diff = |a: PhasePoint, b: PhasePoint| [(b.q - a.q) * inv, (b.p - a.p) * inv];
    let sq = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    let sub = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];
    let mut blocks = Vec::with_capacity(n * n);
    let mut total_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let b = i * n + j;
            if before[b].len() != now[b].len() || after[b].len() != now[b].len() {
                return Err(Error::InvariantViolation(format!("candidate block ({i}, {j}) changed shape in time")));
            }
            let mut acc = [0.0f64; 7];
            for k in 0..now[b].len() {
                let (k0, b0, w0) = before[b][k];
                let (_, _, w) = now[b][k];
                let (k1, b1, w1) = after[b][k];
                let g = rates[b][k];
                let a_dot = (w1 - w0) * inv;
                let (v_ket, v_bra) = (diff(k0, k1), diff(b0, b1));
                let gv = g.velocity();
                let w2 = w.norm_sqr();
                acc[0] += (a_dot - g.amplitude_rate()).norm_sqr() + w2 * 0.5 * (sq(sub(v_ket, gv)) + sq(sub(v_bra, gv)));
                acc[1] += w2;
                acc[2] += a_dot.norm_sqr() + w2 * 0.5 * (sq(v_ket) + sq(v_bra));
                acc[3] += g.phase_h.norm_sqr();
                acc[4] += g.bracket_h.map_or(0.0, |v| w2 * sq(v));
                acc[5] += g.phase_v.norm_sqr();
                acc[6] += g.bracket_v.map_or(0.0, |v| w2 * sq(v));
            }
            total_sq += acc[0];
            let r = |x: f64| x.sqrt() / state_norm;
            blocks.push(BlockResidual {
                i,
                j,
                residual: r(acc[0]),
                block_norm: r(acc[1]),
                lhs: r(acc[2]),
                phase_h: r(acc[3]),
                bracket_h: r(acc[4]),
                phase_v: r(acc[5]),
                bracket_v: r(acc[6]),
            });
        }
    }
    Ok(Evaluation { total: total_sq.sqrt() / state_norm, state_norm, blocks })
}

/// How far a candidate is from solving the dynamics at `t`: the central
/// difference in time of the candidate's amplitudes and supports, minus the
/// generator applied to the candidate at `t`. Support velocities enter
/// weighted by the entry's squared amplitude.
pub fn residual_norm_with(m: &MeasurementModel, which: Candidate, t: f64, opts: &ResidualOptions) -> Result<ResidualReport> {
    let dt = opts.dt_fd;
    if !(dt > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {dt}")));
    }
    let separated = t - dt > m.t0() && distinct_bins(&branch_points(m, t, opts.candidate.traj_dt)?, &opts.bins)?;
    if !separated {
        let horizon = (t - m.t0()).max(0.0) + 10.0;
        let suggestion = match earliest_separation(m, &opts.bins, horizon, opts.scan_step)? {
            Some(ts) => format!("earliest separated time is t = {ts}"),
            None => format!("branches do not separate before t = {}", m.t0() + horizon),
        };
        return Err(Error::SeparationFailure { t, suggestion });
    }
    let now = candidate_blocks(m, which, t, &opts.candidate)?;
    let state = state_from_blocks(m.dim(), &now)?;
    let rates = point_rates(m, &state)?;
    let at = |h: f64| -> Result<Evaluation> {
        let before = candidate_blocks(m, which, t - h, &opts.candidate)?;
        let after = candidate_blocks(m, which, t + h, &opts.candidate)?;
        evaluate(m, &before, &now, &after, &rates, h)
    };
    let coarse = at(dt)?;
    let fine = at(0.5 * dt)?;
    if (coarse.total - fine.total).abs() > (FD_GUARD_RELATIVE * coarse.total).max(FD_GUARD_FLOOR) {
        return Err(Error::FdGuard { coarse: coarse.total, fine: fine.total });
    }
    Ok(ResidualReport {
        candidate: which,
        t,
        dt_fd: dt,
        total: coarse.total,
        total_refined: fine.total,
        state_norm: coarse.state_norm,
        blocks: coarse.blocks,
    })
}

pub fn residual_norm(m: &MeasurementModel, which: Candidate, t: f64, dt_fd: f64) -> Result<ResidualReport> {
    residual_norm_with(m, which, t, &ResidualOptions { dt_fd, ..Default::default() })
}
