use super::model::MeasurementModel;
use super::phase::integrate_phase;
use super::trajectory::{block_trajectory, step_count, BranchTrajectory};
use crate::error::{Error, Result};
use crate::hybrid::HybridState;
use crate::phase_space::{CrossDyad, PhasePoint};
use num_complex::Complex64;

/// Candidate solutions of the measurement dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Candidate {
    /// Coherent superposition of pointer branches, off-diagonal blocks are
    /// cross dyads between branch points. Pure.
    Pure,
    /// Branch populations only, coherences discarded.
    Decohered,
    /// Off-diagonal blocks ride the midpoint trajectory.
    Midpoint,
}

impl Candidate {
    pub const ALL: [Candidate; 3] = [Candidate::Pure, Candidate::Decohered, Candidate::Midpoint];

    /// Equation-style label used on the command line: 7, 9 or 10.
    pub fn number(self) -> u32 {
        match self {
            Candidate::Pure => 7,
            Candidate::Decohered => 9,
            Candidate::Midpoint => 10,
        }
    }

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            7 => Ok(Candidate::Pure),
            9 => Ok(Candidate::Decohered),
            10 => Ok(Candidate::Midpoint),
            other => Err(Error::Config(format!("unknown candidate {other}; expected 7, 9 or 10"))),
        }
    }
}

/// How the pure candidate's block amplitudes evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefactorConvention {
    /// `dc_ij/dt = (1/iħ)[(h_i − h_j) + (v_i − v_j)(V(X_i) + V(X_j))/2] c_ij`.
    #[default]
    PairPhase,
    /// `c_ij = c_i c_j*` with `dc_i/dt = (1/iħ)(h_i + v_i V(X_i)) c_i`.
    Factorized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateOptions {
    /// Phase step; trajectories are sampled at half of it.
    pub traj_dt: f64,
    pub convention: PrefactorConvention,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        Self { traj_dt: 1e-4, convention: PrefactorConvention::PairPhase }
    }
}

/// Candidate entries before coincident dyads are demoted; one list per block.
pub(crate) type RawBlocks = Vec<Vec<(PhasePoint, PhasePoint, Complex64)>>;

pub(crate) fn candidate_blocks(m: &MeasurementModel, which: Candidate, t: f64, opts: &CandidateOptions) -> Result<RawBlocks> {
    if !(t >= m.t0()) {
        return Err(Error::InvalidModel(format!("candidate time {t} precedes t0 = {}", m.t0())));
    }
    if !(opts.traj_dt > 0.0) {
        return Err(Error::Config(format!("trajectory step must be positive, got {}", opts.traj_dt)));
    }
    let n = m.dim();
    let c0 = m.basis().c0();
    let steps = step_count(t - m.t0(), opts.traj_dt);
    let h = if steps == 0 { 0.0 } else { (t - m.t0()) / steps as f64 };
    let branches: Vec<BranchTrajectory> = (0..n).map(|i| block_trajectory(m, i, i, t, opts.traj_dt)).collect::<Result<_>>()?;
    let x: Vec<PhasePoint> = branches.iter().map(|b| b.last().point()).collect();
    let v_cm = m.v_cm();
    let v_at = |b: &BranchTrajectory, k: usize| {
        let s = b.samples()[k];
        v_cm.eval(s.q, s.p)
    };

    let mut blocks: RawBlocks = vec![Vec::new(); n * n];
    for i in 0..n {
        blocks[i * n + i].push((x[i], x[i], Complex64::new(c0[i].norm_sqr(), 0.0)));
    }
    match which {
        Candidate::Decohered => {}
        Candidate::Midpoint => {
            for i in 0..n {
                for j in i + 1..n {
                    let traj = block_trajectory(m, i, j, t, opts.traj_dt)?;
                    let c = integrate_phase(c0[i] * c0[j].conj(), h, steps, |k| m.phase_rate(i, j, v_at(&traj, k)));
                    let c = *c.last().expect("at least one sample");
                    let xij = traj.last().point();
                    blocks[i * n + j].push((xij, xij, c));
                    blocks[j * n + i].push((xij, xij, c.conj()));
                }
            }
        }
        Candidate::Pure => match opts.convention {
            PrefactorConvention::PairPhase => {
                for i in 0..n {
                    for j in i + 1..n {
                        let (bi, bj) = (&branches[i], &branches[j]);
                        let c = integrate_phase(c0[i] * c0[j].conj(), h, steps, |k| m.phase_rate(i, j, 0.5 * (v_at(bi, k) + v_at(bj, k))));
                        let c = *c.last().expect("at least one sample");
                        blocks[i * n + j].push((x[i], x[j], c));
                        blocks[j * n + i].push((x[j], x[i], c.conj()));
                    }
                }
            }
            PrefactorConvention::Factorized => {
                let (hq, vq) = (m.basis().h(), m.basis().v());
                let ci: Vec<Complex64> = (0..n)
                    .map(|i| {
                        let b = &branches[i];
                        *integrate_phase(c0[i], h, steps, |k| (hq[i] + vq[i] * v_at(b, k)) / m.hbar()).last().expect("sample")
                    })
                    .collect();
                for i in 0..n {
                    blocks[i * n + i][0].2 = Complex64::new(ci[i].norm_sqr(), 0.0);
                    for j in i + 1..n {
                        let c = ci[i] * ci[j].conj();
                        blocks[i * n + j].push((x[i], x[j], c));
                        blocks[j * n + i].push((x[j], x[i], c.conj()));
                    }
                }
            }
        },
    }
    Ok(blocks)
}

pub(crate) fn state_from_blocks(n: usize, blocks: &RawBlocks) -> Result<HybridState> {
    let entries = blocks.iter().map(|b| b.iter().map(|&(k, b, w)| CrossDyad::new(k, b, w)).collect()).collect();
    HybridState::from_entries(n, entries)
}

/// Candidate state at time `t` as a point state.
pub fn build_candidate_with(m: &MeasurementModel, which: Candidate, t: f64, opts: &CandidateOptions) -> Result<HybridState> {
    state_from_blocks(m.dim(), &candidate_blocks(m, which, t, opts)?)
}

pub fn build_candidate(m: &MeasurementModel, which: Candidate, t: f64) -> Result<HybridState> {
    build_candidate_with(m, which, t, &CandidateOptions::default())
}
