use super::config::{RunRepresentation, Scenario};
use crate::dynamics::{
    decoherence_report, evolve_grid_observed, evolve_points, hamilton_trajectory, phase_ode, residual_norm_with, step_count,
    build_candidate_with, Candidate, CandidateOptions, DiagnosticsRow, GridRunOptions, ResidualOptions, ResidualReport,
};
use crate::error::{Error, Result};
use crate::hybrid::{assemble, fmt_real, idempotency_residual, min_eigenvalue, purity, HybridState, Snapshot, ASSEMBLY_CAP};
use crate::quantum::{identity_check, IdentityCheckReport};
use std::fs::File;
use std::path::{Path, PathBuf};

/// Residual below which a candidate counts as a solution.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Residual above which a candidate counts as violating the dynamics.
pub const RESIDUAL_FAIL: f64 = 100.0 * RESIDUAL_TOL;
/// Eigenvalues above `-POSITIVITY_TOL` count as nonnegative.
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const MAX_IDENTITY_DIM: usize = 6;

type Writer = csv::Writer<File>;

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn create_writer(dir: &Path, name: &str) -> Result<(Writer, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let w = csv::Writer::from_path(&path).map_err(io)?;
    Ok((w, path))
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Header of the diagnostics table for an `n`-level system.
pub fn diagnostics_header(n: usize, with_min_eig: bool) -> Vec<String> {
    let mut h: Vec<String> = ["t", "trace", "hermiticity_residual", "purity", "S_L"].iter().map(|s| s.to_string()).collect();
    if with_min_eig {
        h.push("min_eig".into());
    }
    h.extend((1..=n).map(|i| format!("population_{i}")));
    h.extend(pairs(n).map(|(i, j)| format!("coherence_{}_{}_abs", i + 1, j + 1)));
    h
}

pub fn diagnostics_record(row: &DiagnosticsRow) -> Vec<String> {
    let mut r = vec![fmt_real(row.t), fmt_real(row.trace), fmt_real(row.hermiticity_residual), fmt_real(row.purity), fmt_real(row.linear_entropy)];
    if let Some(e) = row.min_eig {
        r.push(fmt_real(e));
    }
    r.extend(row.populations.iter().map(|&x| fmt_real(x)));
    r.extend(row.coherences.iter().map(|&x| fmt_real(x)));
    r
}

/// Evolves the initial product state and writes `diagnostics.csv` (plus
/// `snapshot_<k>.txt` files when enabled). Returns the rows written.
pub fn cmd_run(s: &Scenario, out: &Path) -> Result<Vec<DiagnosticsRow>> {
    let cfg = &s.config;
    let with_min_eig = cfg.assembly.min_eig;
    let (mut w, _) = create_writer(out, "diagnostics.csv")?;
    w.write_record(diagnostics_header(s.model.dim(), with_min_eig)).map_err(io)?;
    let mut rows = Vec::new();
    let mut emit = |t: f64, state: &HybridState, bins: &crate::phase_space::PhaseSpaceGrid| -> Result<()> {
        let row = decoherence_report(&[(t, state.clone())], Some(bins), with_min_eig)?.remove(0);
        w.write_record(diagnostics_record(&row)).map_err(io)?;
        if cfg.output.snapshots {
            let snap = Snapshot { state: state.clone(), grid: *bins, hbar: s.model.hbar(), t };
            snap.write(&out.join(format!("snapshot_{:05}.txt", rows.len())))?;
        }
        rows.push(row);
        Ok(())
    };
    match cfg.output.representation {
        RunRepresentation::Grid => {
            let s0 = s.initial_grid_state()?;
            let opts = GridRunOptions { dt: cfg.time.dt, span: cfg.time.span, cadence: cfg.time.cadence, threads: s.threads() };
            evolve_grid_observed(&s.model, &s0, &opts, |t, state| emit(t, state, &s.grid))?;
        }
        RunRepresentation::Points => {
            let s0 = s.initial_point_state()?;
            for (t, state) in evolve_points(&s.model, &s0, cfg.time.dt, cfg.time.span, cfg.time.cadence)? {
                emit(t, &state, &s.bins)?;
            }
        }
    }
    w.flush()?;
    Ok(rows)
}

/// One row of `branches.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub t: f64,
    /// `(q_i, p_i)` per branch.
    pub branches: Vec<(f64, f64)>,
    /// `(q_ij, p_ij, c_ij)` per pair `i < j`.
    pub pairs: Vec<(f64, f64, num_complex::Complex64)>,
}

/// Branch and midpoint trajectories with the block amplitudes, written to
/// `branches.csv` at the output cadence.
pub fn cmd_characteristics(s: &Scenario, out: &Path) -> Result<Vec<BranchRow>> {
    let m = &s.model;
    let t = &s.config.time;
    let n = m.dim();
    let start = m.start();
    let n_out = step_count(t.span, t.dt);
    let sub = if n_out == 0 { 1 } else { step_count(t.span / n_out as f64, t.traj_dt).max(1) };
    let intervals = 2 * sub * n_out;
    let traj_dt = if n_out == 0 { t.traj_dt } else { t.span / intervals as f64 };
    let traj = |u: f64| hamilton_trajectory(m, u, start.q, start.p, traj_dt, t.span);

    let branches = (0..n).map(|i| traj(m.coupling_value(i, i))).collect::<Result<Vec<_>>>()?;
    let c0 = m.basis().c0();
    let mut mids = Vec::new();
    for (i, j) in pairs(n) {
        let tr = traj(m.coupling_value(i, j))?;
        let phase = phase_ode(m, (i, j), &tr, c0[i] * c0[j].conj())?;
        mids.push((tr, phase));
    }

    let (mut w, _) = create_writer(out, "branches.csv")?;
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        header.push(format!("q_{i}"));
        header.push(format!("p_{i}"));
    }
    for (i, j) in pairs(n) {
        let (a, b) = (i + 1, j + 1);
        header.extend([format!("q_{a}_{b}"), format!("p_{a}_{b}"), format!("c_{a}_{b}_abs"), format!("c_{a}_{b}_arg")]);
    }
    w.write_record(&header).map_err(io)?;

    let mut rows = Vec::new();
    for k in (0..=n_out).filter(|k| k % t.cadence == 0 || *k == n_out) {
        let idx = 2 * sub * k;
        let row = BranchRow {
            t: branches.first().map_or(m.t0(), |b| b.samples()[idx].t),
            branches: branches.iter().map(|b| (b.samples()[idx].q, b.samples()[idx].p)).collect(),
            pairs: mids.iter().map(|(tr, ph)| (tr.samples()[idx].q, tr.samples()[idx].p, ph.samples[sub * k].1)).collect(),
        };
        let mut rec = vec![fmt_real(row.t)];
        for &(q, p) in &row.branches {
            rec.extend([fmt_real(q), fmt_real(p)]);
        }
        for &(q, p, c) in &row.pairs {
            rec.extend([fmt_real(q), fmt_real(p), fmt_real(c.norm()), fmt_real(c.arg())]);
        }
        w.write_record(&rec).map_err(io)?;
        rows.push(row);
    }
    w.flush()?;
    Ok(rows)
}

/// Outcome of adjudicating one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub candidate: Candidate,
    pub residual: ResidualReport,
    pub min_eig: f64,
    pub purity: f64,
    pub idempotency: f64,
    pub linear_entropy: f64,
}

impl Verdict {
    /// The pure candidate must violate the dynamics; the other two must solve
    /// it, the decohered one staying nonnegative and the midpoint one not.
    pub fn holds(&self) -> bool {
        let r = self.residual.total;
        match self.candidate {
            Candidate::Pure => r >= RESIDUAL_FAIL,
            Candidate::Decohered => r <= RESIDUAL_TOL && self.min_eig >= -POSITIVITY_TOL,
            Candidate::Midpoint => r <= RESIDUAL_TOL && self.min_eig < -POSITIVITY_TOL,
        }
    }
}

pub fn adjudicate(s: &Scenario, which: Candidate, t: f64) -> Result<Verdict> {
    let candidate = CandidateOptions { traj_dt: s.config.time.traj_dt, ..Default::default() };
    let opts = ResidualOptions { dt_fd: s.config.time.fd_step, bins: s.bins, candidate, ..Default::default() };
    let residual = residual_norm_with(&s.model, which, t, &opts)?;
    let state = build_candidate_with(&s.model, which, t, &candidate)?;
    let a = assemble(&state, &s.bins)?;
    let p = purity(&a)?;
    Ok(Verdict { candidate: which, residual, min_eig: min_eigenvalue(&a)?, purity: p, idempotency: idempotency_residual(&a)?, linear_entropy: 1.0 - p })
}

/// Writes `verdict.csv` and `residual_terms.csv` for one candidate.
pub fn cmd_validate(s: &Scenario, which: Candidate, t: f64, out: &Path) -> Result<Verdict> {
    let v = adjudicate(s, which, t)?;
    let n = s.model.dim();
    let (mut w, _) = create_writer(out, "verdict.csv")?;
    let mut header: Vec<String> = ["candidate", "t", "residual_total", "residual_total_refined"].iter().map(|s| s.to_string()).collect();
    header.extend(v.residual.blocks.iter().map(|b| format!("residual_{}_{}", b.i + 1, b.j + 1)));
    header.extend(["min_eig", "purity", "idempotency_residual", "S_L", "verdict_holds"].iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(io)?;
    let mut rec = vec![which.number().to_string(), fmt_real(t), fmt_real(v.residual.total), fmt_real(v.residual.total_refined)];
    rec.extend(v.residual.blocks.iter().map(|b| fmt_real(b.residual)));
    rec.extend([fmt_real(v.min_eig), fmt_real(v.purity), fmt_real(v.idempotency), fmt_real(v.linear_entropy), v.holds().to_string()]);
    w.write_record(&rec).map_err(io)?;
    w.flush()?;

    let (mut w, _) = create_writer(out, "residual_terms.csv")?;
    w.write_record(["i", "j", "residual", "block_norm", "lhs", "phase_h", "bracket_h", "phase_v", "bracket_v"]).map_err(io)?;
    for b in &v.residual.blocks {
        let mut rec = vec![(b.i + 1).to_string(), (b.j + 1).to_string()];
        rec.extend([b.residual, b.block_norm, b.lhs, b.phase_h, b.bracket_h, b.phase_v, b.bracket_v].map(fmt_real));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    debug_assert_eq!(v.residual.blocks.len(), n * n);
    Ok(v)
}

pub fn cmd_identity_check(dim: usize, trials: usize, seed: u64) -> Result<IdentityCheckReport> {
    if dim == 0 || dim > MAX_IDENTITY_DIM {
        return Err(Error::Rejected { guard: "identity-dim", reason: format!("dimension must be in 1..={MAX_IDENTITY_DIM}, got {dim}") });
    }
    if trials == 0 {
        return Err(Error::Rejected { guard: "identity-trials", reason: "need at least one trial".into() });
    }
    identity_check(dim, trials, seed)
}

/// Diagnostics row of a snapshot, on its own grid. The eigenvalue column is
/// present when the assembled dimension is within the cap.
pub fn cmd_diagnose(path: &Path) -> Result<DiagnosticsRow> {
    let snap = Snapshot::read(path)?;
    let with_min_eig = snap.state.dim() * snap.grid.len() <= ASSEMBLY_CAP;
    Ok(decoherence_report(&[(snap.t, snap.state)], Some(&snap.grid), with_min_eig)?.remove(0))
}

/// Renders diagnostics rows as CSV text.
pub fn diagnostics_csv(n: usize, rows: &[DiagnosticsRow]) -> Result<String> {
    let with_min_eig = rows.first().is_some_and(|r| r.min_eig.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(diagnostics_header(n, with_min_eig)).map_err(io)?;
    for r in rows {
        w.write_record(diagnostics_record(r)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::ScenarioConfig;

    fn golden() -> Scenario {
        ScenarioConfig::default().validate().unwrap()
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            diagnostics_header(2, true),
            ["t", "trace", "hermiticity_residual", "purity", "S_L", "min_eig", "population_1", "population_2", "coherence_1_2_abs"]
        );
        assert_eq!(diagnostics_header(3, false).len(), 5 + 3 + 3);
    }

    #[test]
    fn characteristics_match_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let rows = cmd_characteristics(&golden(), dir.path()).unwrap();
        assert_eq!(rows.len(), 51);
        for r in &rows {
            assert!((r.branches[0].0 - (2.0 * r.t.cos() - 1.0)).abs() < 1e-6);
            assert!((r.branches[0].1 + 2.0 * r.t.sin()).abs() < 1e-6);
            assert!((r.branches[1].0 - 1.0).abs() < 1e-12 && r.branches[1].1.abs() < 1e-12);
            assert!((r.pairs[0].0 - r.t.cos()).abs() < 1e-6);
            assert!((r.pairs[0].2.norm() - 0.5).abs() < 1e-8);
        }
        assert!((rows.last().unwrap().t - 1.0).abs() < 1e-12);
        let text = std::fs::read_to_string(dir.path().join("branches.csv")).unwrap();
        assert!(text.starts_with("t,q_1,p_1,q_2,p_2,q_1_2,p_1_2,c_1_2_abs,c_1_2_arg\n"));
    }

    #[test]
    fn point_run_follows_the_midpoint_candidate() {
        let mut c = ScenarioConfig::default();
        c.output.representation = RunRepresentation::Points;
        c.assembly.min_eig = true;
        c.time.cadence = 100;
        let dir = tempfile::tempdir().unwrap();
        let rows = cmd_run(&c.validate().unwrap(), dir.path()).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!((r.trace - 1.0).abs() < 1e-12);
            assert!((r.purity - 1.0).abs() < 1e-10);
        }
        assert!(rows[0].min_eig.unwrap().abs() < 1e-12);
        assert!((rows[5].min_eig.unwrap() + 0.5).abs() < 1e-10);
    }

    #[test]
    fn verdicts_on_the_reference_model() {
        let s = golden();
        for which in Candidate::ALL {
            let v = adjudicate(&s, which, 1.0).unwrap();
            assert!(v.holds(), "{which:?}: {v:?}");
        }
    }

    #[test]
    fn identity_guards() {
        assert_eq!(cmd_identity_check(7, 1, 0).unwrap_err().guard_name(), "identity-dim");
        assert_eq!(cmd_identity_check(2, 0, 0).unwrap_err().guard_name(), "identity-trials");
        assert_eq!(cmd_identity_check(1, 10, 3).unwrap().max_relative, 0.0);
    }

    #[test]
    fn diagnose_reads_snapshots() {
        let s = golden();
        let dir = tempfile::tempdir().unwrap();
        let state = crate::dynamics::build_candidate(&s.model, Candidate::Midpoint, 1.0).unwrap();
        let path = dir.path().join("snap.txt");
        Snapshot { state, grid: s.bins, hbar: 1.0, t: 1.0 }.write(&path).unwrap();
        let row = cmd_diagnose(&path).unwrap();
        assert!((row.min_eig.unwrap() + 0.5).abs() < 1e-10);
        assert!(diagnostics_csv(2, &[row]).unwrap().lines().count() == 2);
    }
}
