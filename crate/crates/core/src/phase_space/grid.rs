use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smallest resolution accepted along either axis.
pub const MIN_CELLS: usize = 8;

/// Uniform cell-centered discretization of a rectangular phase-space domain.
///
/// Cell `k` along the position axis covers `[q_min + k Δq, q_min + (k+1) Δq)`
/// and is represented by its center `q_min + (k + ½) Δq`. The same holds for
/// momentum. Flat indices are row-major with position as the slow axis:
/// `flat = k_q * n_p + k_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    q_min: f64,
    q_max: f64,
    p_min: f64,
    p_max: f64,
    n_q: usize,
    n_p: usize,
}

impl PhaseSpaceGrid {
    pub fn new(q_min: f64, q_max: f64, p_min: f64, p_max: f64, n_q: usize, n_p: usize) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite() && p_min.is_finite() && p_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if q_max <= q_min || p_max <= p_min {
            return Err(Error::InvalidGrid(format!(
                "empty domain [{q_min}, {q_max}] x [{p_min}, {p_max}]"
            )));
        }
        if n_q < MIN_CELLS || n_p < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells per axis, got {n_q} x {n_p}"
            )));
        }
        Ok(Self { q_min, q_max, p_min, p_max, n_q, n_p })
    }

    /// Square grid `[-half, half]²` with `n` cells per axis.
    pub fn symmetric(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, -half, half, n, n)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }
    pub fn q_max(&self) -> f64 {
        self.q_max
    }
    pub fn p_min(&self) -> f64 {
        self.p_min
    }
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
    pub fn n_q(&self) -> usize {
        self.n_q
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn q_at(&self, k: usize) -> f64 {
        self.q_min + (k as f64 + 0.5) * self.dq()
    }

    pub fn p_at(&self, k: usize) -> f64 {
        self.p_min + (k as f64 + 0.5) * self.dp()
    }

    #[inline]
    pub fn index(&self, k_q: usize, k_p: usize) -> usize {
        k_q * self.n_p + k_p
    }

    #[inline]
    pub fn coords(&self, flat: usize) -> (usize, usize) {
        (flat / self.n_p, flat % self.n_p)
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        q >= self.q_min && q <= self.q_max && p >= self.p_min && p <= self.p_max
    }

    /// Bin containing `(q, p)`, i.e. the cell with the nearest center.
    /// The upper domain edge belongs to the last cell.
    pub fn bin_of(&self, q: f64, p: f64) -> Result<(usize, usize)> {
        if !self.contains(q, p) {
            return Err(Error::OutOfDomain { q, p, what: "bin lookup".into() });
        }
        let kq = (((q - self.q_min) / self.dq()).floor() as usize).min(self.n_q - 1);
        let kp = (((p - self.p_min) / self.dp()).floor() as usize).min(self.n_p - 1);
        Ok((kq, kp))
    }

    /// True when `k_q` or `k_p` lies within `frame` cells of the domain edge.
    pub fn in_frame(&self, k_q: usize, k_p: usize, frame: usize) -> bool {
        k_q < frame || k_p < frame || k_q + frame >= self.n_q || k_p + frame >= self.n_p
    }
}
