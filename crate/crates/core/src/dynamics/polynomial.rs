use crate::error::{Error, Result};
use crate::phase_space::{ClassicalKernel, PhaseSpaceGrid};

/// Highest total degree accepted for classical Hamiltonians and couplings.
pub const MAX_DEGREE: u32 = 4;

/// Exponent pairs `(a, b)` of `q^a p^b` in graded lexicographic order:
/// `1, q, p, q², qp, p², q³, q²p, qp², p³, q⁴, q³p, q²p², qp³, p⁴`.
pub fn monomial_order() -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for d in 0..=MAX_DEGREE {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Real polynomial in `(q, p)` stored as `(a, b, coefficient)` triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// From coefficients listed in [`monomial_order`]; missing trailing
    /// coefficients are zero.
    pub fn from_graded(coeffs: &[f64]) -> Result<Self> {
        let order = monomial_order();
        if coeffs.len() > order.len() {
            return Err(Error::InvalidModel(format!(
                "{} coefficients given, at most {} allowed (degree <= {MAX_DEGREE})",
                coeffs.len(),
                order.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("polynomial coefficients must be finite".into()));
        }
        let terms = order
            .into_iter()
            .zip(coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|((a, b), &c)| (a, b, c))
            .collect();
        Ok(Self { terms })
    }

    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Result<Self> {
        if terms.iter().any(|&(a, b, _)| a + b > MAX_DEGREE) {
            return Err(Error::InvalidModel(format!("polynomial degree exceeds {MAX_DEGREE}")));
        }
        Ok(Self { terms: terms.iter().copied().filter(|t| t.2 != 0.0).collect() })
    }

    /// Coefficients in [`monomial_order`], trailing zeros trimmed.
    pub fn graded_coefficients(&self) -> Vec<f64> {
        let mut out: Vec<f64> = monomial_order()
            .into_iter()
            .map(|(a, b)| self.terms.iter().filter(|t| t.0 == a && t.1 == b).map(|t| t.2).sum())
            .collect();
        while out.last() == Some(&0.0) {
            out.pop();
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms.iter().map(|&(a, b, c)| c * q.powi(a as i32) * p.powi(b as i32)).sum()
    }

    pub fn d_dq(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().filter(|t| t.0 > 0).map(|&(a, b, c)| (a - 1, b, c * a as f64)).collect(),
        }
    }

    pub fn d_dp(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().filter(|t| t.1 > 0).map(|&(a, b, c)| (a, b - 1, c * b as f64)).collect(),
        }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: f64, other: &Polynomial) -> Polynomial {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|&(a, b, c)| (a, b, s * c)));
        Polynomial { terms: terms.into_iter().filter(|t| t.2 != 0.0).collect() }
    }

    pub fn sample(&self, grid: &PhaseSpaceGrid) -> ClassicalKernel {
        ClassicalKernel::observable(*grid, |q, p| self.eval(q, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_order_is_documented_order() {
        let o = monomial_order();
        assert_eq!(o.len(), 15);
        assert_eq!(&o[..6], &[(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(o[14], (0, 4));
    }

    #[test]
    fn harmonic_from_coefficients() {
        let h = Polynomial::from_graded(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.5]).unwrap();
        assert_eq!(h.eval(1.0, 2.0), 2.5);
        assert_eq!(h.d_dq().eval(3.0, 7.0), 3.0);
        assert_eq!(h.d_dp().eval(3.0, 7.0), 7.0);
        assert_eq!(h.degree(), 2);
        assert_eq!(h.graded_coefficients(), vec![0.0, 0.0, 0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn degree_is_capped() {
        assert!(Polynomial::from_graded(&[0.0; 16]).is_err());
        assert!(Polynomial::from_terms(&[(3, 2, 1.0)]).is_err());
    }

    #[test]
    fn mixed_derivatives_commute() {
        let f = Polynomial::from_graded(&[1.0, -2.0, 0.5, 0.3, 1.1, -0.7, 0.2, 0.4, -0.1, 0.9, 0.05, 0.01, -0.3, 0.6, 0.2]).unwrap();
        let (q, p) = (0.37, -1.2);
        assert!((f.d_dq().d_dp().eval(q, p) - f.d_dp().d_dq().eval(q, p)).abs() < 1e-12);
    }
}
