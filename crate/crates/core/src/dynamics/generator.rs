use super::model::MeasurementModel;
use super::trajectory::VectorField;
use crate::error::{Error, Result};
use crate::hybrid::HybridState;
use crate::phase_space::{operator_derivative, Axis, ClassicalEntry, ClassicalKernel, Gradient, KernelKind, OperatorDerivative, PhaseSpaceGrid};
use num_complex::Complex64;
use rayon::prelude::*;

/// The four contributions to the rate of one point entry. Bracket terms are
/// transport velocities of the entry's support, `None` when the operator
/// derivative annihilates the entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermRates {
    pub phase_h: Complex64,
    pub bracket_h: Option<[f64; 2]>,
    pub phase_v: Complex64,
    pub bracket_v: Option<[f64; 2]>,
}

impl TermRates {
    pub fn amplitude_rate(&self) -> Complex64 {
        self.phase_h + self.phase_v
    }

    /// Total velocity of the support, zero for annihilated entries.
    pub fn velocity(&self) -> [f64; 2] {
        let a = self.bracket_h.unwrap_or([0.0; 2]);
        let b = self.bracket_v.unwrap_or([0.0; 2]);
        [a[0] + b[0], a[1] + b[1]]
    }
}

/// The four contributions to the rate of one grid block.
#[derive(Debug, Clone)]
pub struct GridTerms {
    pub phase_h: ClassicalKernel,
    pub bracket_h: ClassicalKernel,
    pub phase_v: ClassicalKernel,
    pub bracket_v: ClassicalKernel,
}

impl GridTerms {
    pub fn total(&self) -> ClassicalKernel {
        let mut out = self.phase_h.clone();
        out.axpy(Complex64::new(1.0, 0.0), &self.bracket_h);
        out.axpy(Complex64::new(1.0, 0.0), &self.phase_v);
        out.axpy(Complex64::new(1.0, 0.0), &self.bracket_v);
        out.with_kind(KernelKind::Coherence)
    }
}

/// Time derivative of a hybrid state, block by block in row-major order.
#[derive(Debug, Clone)]
pub enum HybridDerivative {
    Grid(Vec<ClassicalKernel>),
    Points(Vec<Vec<TermRates>>),
}

fn inv_i_hbar(scale: f64, hbar: f64) -> Complex64 {
    Complex64::new(0.0, -scale / hbar)
}

/// Grid form of the generator with the model's kernels sampled once.
pub struct GridGenerator {
    model: MeasurementModel,
    grid: PhaseSpaceGrid,
    v: ClassicalKernel,
    h_grad: Gradient,
    v_grad: Gradient,
    pool: Option<rayon::ThreadPool>,
}

impl GridGenerator {
    pub fn new(m: &MeasurementModel, grid: &PhaseSpaceGrid) -> Self {
        let gradient = |p: &crate::dynamics::Polynomial| Gradient { dq: p.d_dq().sample(grid), dp: p.d_dp().sample(grid) };
        Self {
            model: m.clone(),
            grid: *grid,
            v: m.v_cm().sample(grid),
            h_grad: gradient(m.h_cm()),
            v_grad: gradient(m.v_cm()),
            pool: None,
        }
    }

    /// Evaluates blocks on up to `threads` worker threads; results do not
    /// depend on the thread count.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        self.pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(self)
    }

    fn check<'a>(&self, s: &'a HybridState) -> Result<&'a [ClassicalKernel]> {
        if s.dim() != self.model.dim() {
            return Err(Error::DimMismatch(format!("state has {} levels, model has {}", s.dim(), self.model.dim())));
        }
        match (s.grid(), s.kernels()) {
            (Some(g), Some(k)) if *g == self.grid => Ok(k),
            (Some(_), _) => Err(Error::GridMismatch),
            _ => Err(Error::DimMismatch("grid generator needs a grid state".into())),
        }
    }

    fn factors(&self, i: usize, j: usize) -> (Complex64, Complex64, f64) {
        let m = &self.model;
        let (h, v) = (m.basis().h(), m.basis().v());
        (inv_i_hbar(h[i] - h[j], m.hbar()), inv_i_hbar(v[i] - v[j], m.hbar()), m.coupling_value(i, j))
    }

    /// The four terms of block `(i, j)` evaluated separately.
    pub fn block_terms(&self, s: &HybridState, i: usize, j: usize) -> Result<GridTerms> {
        let kernels = self.check(s)?;
        let rho = &kernels[i * s.dim() + j];
        let (a_h, a_v, u) = self.factors(i, j);
        let grad = Gradient::of(rho)?;
        Ok(GridTerms {
            phase_h: rho.scale(a_h).with_kind(KernelKind::Coherence),
            bracket_h: self.h_grad.bracket(&grad)?,
            phase_v: self.v.mul(rho)?.scale(a_v).with_kind(KernelKind::Coherence),
            bracket_v: self.v_grad.bracket(&grad)?.scale(Complex64::new(u, 0.0)),
        })
    }

    fn block(&self, kernels: &[ClassicalKernel], n: usize, i: usize, j: usize) -> Result<ClassicalKernel> {
        let rho = &kernels[i * n + j];
        let (a_h, a_v, u) = self.factors(i, j);
        let grad = Gradient::of(rho)?;
        let r = rho.values();
        let (rq, rp) = (grad.dq.values(), grad.dp.values());
        let (hq, hp) = (self.h_grad.dq.values(), self.h_grad.dp.values());
        let (vq, vp) = (self.v_grad.dq.values(), self.v_grad.dp.values());
        let v = self.v.values();
        let values = (0..r.len())
            .map(|k| {
                let bh = hq[k] * rp[k] - hp[k] * rq[k];
                let bv = vq[k] * rp[k] - vp[k] * rq[k];
                a_h * r[k] + bh + a_v * (v[k] * r[k]) + bv * u
            })
            .collect();
        ClassicalKernel::from_values(self.grid, KernelKind::Coherence, values)
    }

    /// Full derivative. Only blocks `i <= j` are evaluated; the rest are
    /// their adjoints, which keeps the result exactly Hermitian.
    pub fn derivative(&self, s: &HybridState) -> Result<Vec<ClassicalKernel>> {
        let kernels = self.check(s)?;
        let n = s.dim();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let eval = |&(i, j): &(usize, usize)| self.block(kernels, n, i, j);
        let upper: Vec<Result<ClassicalKernel>> = match &self.pool {
            Some(pool) => pool.install(|| pairs.par_iter().map(eval).collect()),
            None => pairs.iter().map(eval).collect(),
        };
        let mut out: Vec<Option<ClassicalKernel>> = vec![None; n * n];
        for (&(i, j), k) in pairs.iter().zip(upper) {
            let k = k?;
            if i != j {
                out[j * n + i] = Some(k.conj());
            }
            out[i * n + j] = Some(k);
        }
        Ok(out.into_iter().map(|k| k.expect("every block evaluated")).collect())
    }
}

/// Per-entry term rates of a point state.
pub fn point_rates(m: &MeasurementModel, s: &HybridState) -> Result<Vec<Vec<TermRates>>> {
    let n = m.dim();
    if s.dim() != n {
        return Err(Error::DimMismatch(format!("state has {} levels, model has {n}", s.dim())));
    }
    let blocks = s.entry_blocks().ok_or_else(|| Error::DimMismatch("point rates need a point state".into()))?;
    let fh = VectorField::new(m.h_cm());
    let fv = VectorField::new(m.v_cm());
    let (h, v) = (m.basis().h(), m.basis().v());
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (a_h, a_v, u) = (inv_i_hbar(h[i] - h[j], m.hbar()), inv_i_hbar(v[i] - v[j], m.hbar()), m.coupling_value(i, j));
            let rates = blocks[i * n + j]
                .iter()
                .map(|e| rates_of(e, a_h, a_v, u, m, &fh, &fv))
                .collect();
            out.push(rates);
        }
    }
    Ok(out)
}

fn rates_of(e: &ClassicalEntry, a_h: Complex64, a_v: Complex64, u: f64, m: &MeasurementModel, fh: &VectorField, fv: &VectorField) -> TermRates {
    let w = e.amplitude();
    let (ket, bra) = (e.ket(), e.bra());
    let v_bar = 0.5 * (m.v_cm().eval(ket.q, ket.p) + m.v_cm().eval(bra.q, bra.p));
    let (bracket_h, bracket_v) = match operator_derivative(e, Axis::Q) {
        OperatorDerivative::Representable { at, .. } => {
            let vh = fh.velocity(at.q, at.p);
            let vv = fv.velocity(at.q, at.p);
            (Some(vh), Some([u * vv[0], u * vv[1]]))
        }
        OperatorDerivative::Annihilated => (None, None),
    };
    TermRates { phase_h: a_h * w, bracket_h, phase_v: a_v * v_bar * w, bracket_v }
}

/// `∂ρ/∂t` for the measurement Hamiltonian, in the state's representation.
pub fn hybrid_generator(m: &MeasurementModel, s: &HybridState) -> Result<HybridDerivative> {
    match s.grid() {
        Some(g) => Ok(HybridDerivative::Grid(GridGenerator::new(m, g).derivative(s)?)),
        None => Ok(HybridDerivative::Points(point_rates(m, s)?)),
    }
}
