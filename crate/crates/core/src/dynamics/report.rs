use crate::error::{Error, Result};
use crate::hybrid::{assemble, min_eigenvalue, purity, quantum_marginal, HybridState};
use crate::phase_space::PhaseSpaceGrid;

/// One row of the decoherence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub trace: f64,
    pub hermiticity_residual: f64,
    pub purity: f64,
    pub linear_entropy: f64,
    pub min_eig: Option<f64>,
    pub populations: Vec<f64>,
    /// `|ρ_qm^ij|` for `i < j` in row-major order.
    pub coherences: Vec<f64>,
}

/// Diagnostics of a time series. Grid states are assembled on their own
/// grid; point states need `bins`.
pub fn decoherence_report(series: &[(f64, HybridState)], bins: Option<&PhaseSpaceGrid>, with_min_eig: bool) -> Result<Vec<DiagnosticsRow>> {
    let Some((_, first)) = series.first() else {
        return Ok(Vec::new());
    };
    let n = first.dim();
    series
        .iter()
        .map(|(t, s)| {
            if s.dim() != n || s.grid() != first.grid() {
                return Err(Error::DimMismatch("report series must share dimension and grid".into()));
            }
            let bins = match (s.grid(), bins) {
                (Some(g), _) => g,
                (None, Some(b)) => b,
                (None, None) => return Err(Error::Config("point states need assembly bins".into())),
            };
            let a = assemble(s, bins)?;
            let marginal = quantum_marginal(s, Some(bins))?;
            let p = purity(&a)?;
            let coherences = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| marginal.coherence(i, j)).collect();
            Ok(DiagnosticsRow {
                t: *t,
                trace: a.trace(),
                hermiticity_residual: s.hermiticity_residual(),
                purity: p,
                linear_entropy: 1.0 - p,
                min_eig: if with_min_eig { Some(min_eigenvalue(&a)?) } else { None },
                populations: (0..n).map(|i| marginal.population(i)).collect(),
                coherences,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_candidate, Candidate, MeasurementModel};

    #[test]
    fn decohered_series_is_flat() {
        let m = MeasurementModel::golden();
        let series: Vec<_> = [0.0, 0.5, 1.0].iter().map(|&t| (t, build_candidate(&m, Candidate::Decohered, t).unwrap())).collect();
        let bins = PhaseSpaceGrid::symmetric(6.0, 32).unwrap();
        let rows = decoherence_report(&series, Some(&bins), true).unwrap();
        for r in rows {
            assert!((r.populations[0] - 0.5).abs() < 1e-12 && (r.populations[1] - 0.5).abs() < 1e-12);
            assert_eq!(r.coherences, vec![0.0]);
            assert!((r.linear_entropy - 0.5).abs() < 1e-12);
            assert!(r.min_eig.unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_series_turns_negative() {
        let m = MeasurementModel::golden();
        let series: Vec<_> = [0.0, 1.0].iter().map(|&t| (t, build_candidate(&m, Candidate::Midpoint, t).unwrap())).collect();
        let bins = PhaseSpaceGrid::symmetric(6.0, 32).unwrap();
        let rows = decoherence_report(&series, Some(&bins), true).unwrap();
        assert!(rows[0].min_eig.unwrap().abs() < 1e-12);
        assert!((rows[1].min_eig.unwrap() + 0.5).abs() < 1e-10);
    }
}
