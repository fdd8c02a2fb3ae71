use crate::dynamics::{cfl_limit, MeasurementModel, Polynomial};
use crate::error::{Error, Result};
use crate::hybrid::{HybridState, ASSEMBLY_CAP};
use crate::phase_space::{smooth_delta, PhasePoint, PhaseSpaceGrid};
use crate::quantum::MeasuredBasisModel;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Scenario configuration, read from TOML. Every field has a default, and
/// the defaults reproduce the reference measurement.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub assembly: AssemblySection,
    pub output: OutputSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Optional cross-check of the lengths of `h`, `v` and `c0`.
    pub dim: Option<usize>,
    pub hbar: f64,
    pub t0: f64,
    pub h: Vec<f64>,
    pub v: Vec<f64>,
    /// Initial amplitudes as `[re, im]` pairs.
    pub c0: Vec<[f64; 2]>,
    /// Coefficients of `q^a p^b` in graded order: 1, q, p, q², qp, p², q³, ...
    pub h_cm: Vec<f64>,
    pub v_cm: Vec<f64>,
    pub q0: f64,
    pub p0: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            dim: Some(2),
            hbar: 1.0,
            t0: 0.0,
            h: vec![1.0, 1.0],
            v: vec![1.0, -1.0],
            c0: vec![[a, 0.0], [a, 0.0]],
            h_cm: vec![0.0, 0.0, 0.0, 0.5, 0.0, 0.5],
            v_cm: vec![0.0, 1.0],
            q0: 1.0,
            p0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    /// Width of the initial pointer kernel; defaults to three cells.
    pub sigma_q: Option<f64>,
    pub sigma_p: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { q_min: -6.0, q_max: 6.0, p_min: -6.0, p_max: 6.0, n_q: 64, n_p: 64, sigma_q: None, sigma_p: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    /// Length of the run, measured from `t0`.
    pub span: f64,
    /// Output every `cadence` steps.
    pub cadence: usize,
    pub traj_dt: f64,
    pub fd_step: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 2e-3, span: 1.0, cadence: 10, traj_dt: 1e-4, fd_step: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblySection {
    /// Bins used for point states.
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    /// Report the smallest eigenvalue of the assembled operator.
    pub min_eig: bool,
}

impl Default for AssemblySection {
    fn default() -> Self {
        Self { q_min: -6.0, q_max: 6.0, p_min: -6.0, p_max: 6.0, n_q: 32, n_p: 32, min_eig: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunRepresentation {
    #[default]
    Grid,
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub representation: RunRepresentation,
    /// Write a snapshot at every output time.
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), representation: RunRepresentation::Grid, snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads for the generator; capped by `HYBRIDYN_THREADS`.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, threads: 1 }
    }
}

/// A configuration that passed every guard.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: MeasurementModel,
    pub grid: PhaseSpaceGrid,
    pub bins: PhaseSpaceGrid,
    pub sigma: (f64, f64),
    pub warnings: Vec<String>,
}

fn rejected(guard: &'static str, reason: impl Into<String>) -> Error {
    Error::Rejected { guard, reason: reason.into() }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model(&self) -> Result<MeasurementModel> {
        let m = &self.model;
        if let Some(n) = m.dim {
            if n != m.h.len() {
                return Err(Error::InvalidModel(format!("dim = {n} but h has {} entries", m.h.len())));
            }
        }
        let c0 = m.c0.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let basis = MeasuredBasisModel::new(m.h.clone(), m.v.clone(), c0)?;
        let h_cm = Polynomial::from_graded(&m.h_cm)?;
        let v_cm = Polynomial::from_graded(&m.v_cm)?;
        MeasurementModel::new(basis, h_cm, v_cm, m.hbar, m.t0, PhasePoint::new(m.q0, m.p0))
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid> {
        let g = &self.grid;
        PhaseSpaceGrid::new(g.q_min, g.q_max, g.p_min, g.p_max, g.n_q, g.n_p)
    }

    pub fn bins(&self) -> Result<PhaseSpaceGrid> {
        let a = &self.assembly;
        PhaseSpaceGrid::new(a.q_min, a.q_max, a.p_min, a.p_max, a.n_q, a.n_p)
    }

    /// Checks every precondition of the commands; the error names the guard
    /// that failed.
    pub fn validate(&self) -> Result<Scenario> {
        let model = self.model()?;
        let grid = self.grid()?;
        let bins = self.bins()?;
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) || !(t.traj_dt > 0.0 && t.traj_dt.is_finite()) || !(t.fd_step > 0.0) {
            return Err(rejected("time", "dt, traj_dt and fd_step must be positive"));
        }
        if !(t.span >= 0.0 && t.span.is_finite()) || t.cadence == 0 {
            return Err(rejected("time", "span must be nonnegative and cadence at least 1"));
        }
        let sigma_q = self.grid.sigma_q.unwrap_or(3.0 * grid.dq());
        let sigma_p = self.grid.sigma_p.unwrap_or(3.0 * grid.dp());
        let start = model.start();
        if !(sigma_q > 0.0 && sigma_p > 0.0) {
            return Err(rejected("6sigma-box", format!("widths must be positive, got ({sigma_q}, {sigma_p})")));
        }
        if !grid.contains(start.q - 6.0 * sigma_q, start.p - 6.0 * sigma_p) || !grid.contains(start.q + 6.0 * sigma_q, start.p + 6.0 * sigma_p) {
            return Err(rejected(
                "6sigma-box",
                format!("the 6 sigma box around ({}, {}) leaves the grid", start.q, start.p),
            ));
        }
        let limit = cfl_limit(&model, &grid);
        if self.output.representation == RunRepresentation::Grid && t.dt > limit {
            return Err(Error::CflViolation { dt: t.dt, limit });
        }
        if self.assembly.min_eig {
            let cells = match self.output.representation {
                RunRepresentation::Grid => grid.len(),
                RunRepresentation::Points => bins.len(),
            };
            let dim = model.dim() * cells;
            if dim > ASSEMBLY_CAP {
                return Err(Error::AssemblyTooLarge { dim, cap: ASSEMBLY_CAP });
            }
        }
        if self.run.threads == 0 {
            return Err(rejected("threads", "threads must be at least 1"));
        }
        let warnings = model
            .basis()
            .degenerate_pairs()
            .into_iter()
            .map(|(i, j)| format!("v_{} = v_{}: branches {} and {} never separate", i + 1, j + 1, i + 1, j + 1))
            .collect();
        Ok(Scenario { config: self.clone(), model, grid, bins, sigma: (sigma_q, sigma_p), warnings })
    }
}

impl Scenario {
    /// Grid product state `Σ c_i c_j* |ψ_i⟩⟨ψ_j| ⊗ δ_σ(q − q0, p − p0)`.
    pub fn initial_grid_state(&self) -> Result<HybridState> {
        let x = self.model.start();
        let k = smooth_delta(x.q, x.p, self.sigma.0, self.sigma.1, &self.grid)?;
        k.check_boundary()?;
        HybridState::product_grid(self.model.basis().c0(), &k)
    }

    /// Point product state at the initial pointer position.
    pub fn initial_point_state(&self) -> Result<HybridState> {
        use crate::phase_space::{ClassicalEntry, PointState};
        let c = self.model.basis().c0();
        let x = self.model.start();
        let n = self.model.dim();
        let blocks = (0..n * n)
            .map(|b| vec![ClassicalEntry::Point(PointState::new(x.q, x.p, c[b / n] * c[b % n].conj()))])
            .collect();
        HybridState::from_entries(n, blocks)
    }

    /// Worker threads after applying the `HYBRIDYN_THREADS` cap.
    pub fn threads(&self) -> usize {
        let cap = std::env::var("HYBRIDYN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
        match cap {
            Some(c) => self.config.run.threads.min(c),
            None => self.config.run.threads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_model() {
        let s = ScenarioConfig::default().validate().unwrap();
        assert_eq!(s.model, MeasurementModel::golden());
        assert!((s.sigma.0 - 3.0 * 12.0 / 64.0).abs() < 1e-15);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = ScenarioConfig::from_toml("[model]\nv = [0.0, 0.0]\n[time]\ncadence = 5\n").unwrap();
        assert_eq!(c.time.cadence, 5);
        assert_eq!(c.grid.n_q, 64);
        let s = c.validate().unwrap();
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = ScenarioConfig::from_toml("[model]\nhbarr = 1.0\n").unwrap_err();
        assert_eq!(e.guard_name(), "config");
    }

    #[test]
    fn guards_are_named() {
        let mut c = ScenarioConfig::default();
        c.time.dt = 0.05;
        assert_eq!(c.validate().unwrap_err().guard_name(), "cfl");

        let mut c = ScenarioConfig::default();
        c.model.q0 = 5.0;
        assert_eq!(c.validate().unwrap_err().guard_name(), "6sigma-box");

        let mut c = ScenarioConfig::default();
        c.assembly.min_eig = true;
        assert_eq!(c.validate().unwrap_err().guard_name(), "assembly-cap");
        c.output.representation = RunRepresentation::Points;
        assert!(c.validate().is_ok());

        let mut c = ScenarioConfig::default();
        c.model.c0 = vec![[1.0, 0.0], [1.0, 0.0]];
        assert_eq!(c.validate().unwrap_err().guard_name(), "model");

        let mut c = ScenarioConfig::default();
        c.grid.n_q = 2;
        assert_eq!(c.validate().unwrap_err().guard_name(), "grid");
    }

    #[test]
    fn initial_states_carry_unit_trace() {
        let s = ScenarioConfig::default().validate().unwrap();
        let g = s.initial_grid_state().unwrap();
        assert!((crate::hybrid::hybrid_trace(&g) - 1.0).abs() < 1e-12);
        let p = s.initial_point_state().unwrap();
        assert!((crate::hybrid::hybrid_trace(&p) - 1.0).abs() < 1e-12);
    }
}
