use num_complex::Complex64;

/// Ket/bra points closer than this are treated as the same point.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn coincides(&self, other: &PhasePoint) -> bool {
        (self.q - other.q).abs() <= COINCIDENCE_TOL && (self.p - other.p).abs() <= COINCIDENCE_TOL
    }
}

/// Weighted point state `w |q⟩⟨q| ⊗ |p⟩⟨p|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub q: f64,
    pub p: f64,
    pub amplitude: Complex64,
}

impl PointState {
    pub fn new(q: f64, p: f64, amplitude: Complex64) -> Self {
        Self { q, p, amplitude }
    }

    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.q, self.p)
    }

    /// Diagonal-block admissibility: real, nonnegative weight.
    pub fn is_population(&self) -> bool {
        self.amplitude.im == 0.0 && self.amplitude.re >= 0.0
    }
}

/// `w |q_ket⟩⟨q_bra| ⊗ |p_ket⟩⟨p_bra|` with distinct ket and bra points.
/// Such an operator does not commute with `q̂` or `p̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossDyad {
    ket: PhasePoint,
    bra: PhasePoint,
    pub amplitude: Complex64,
}

impl CrossDyad {
    /// Builds the dyad, demoting it to a [`PointState`] when ket and bra
    /// coincide.
    #[allow(clippy::new_ret_no_self)]
    pub fn new(ket: PhasePoint, bra: PhasePoint, amplitude: Complex64) -> ClassicalEntry {
        if ket.coincides(&bra) {
            ClassicalEntry::Point(PointState::new(ket.q, ket.p, amplitude))
        } else {
            ClassicalEntry::Cross(CrossDyad { ket, bra, amplitude })
        }
    }

    pub fn ket(&self) -> PhasePoint {
        self.ket
    }

    pub fn bra(&self) -> PhasePoint {
        self.bra
    }
}

/// One term of a classical block in the point representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalEntry {
    Point(PointState),
    Cross(CrossDyad),
}

impl ClassicalEntry {
    pub fn ket(&self) -> PhasePoint {
        match self {
            ClassicalEntry::Point(s) => s.point(),
            ClassicalEntry::Cross(d) => d.ket,
        }
    }

    pub fn bra(&self) -> PhasePoint {
        match self {
            ClassicalEntry::Point(s) => s.point(),
            ClassicalEntry::Cross(d) => d.bra,
        }
    }

    pub fn amplitude(&self) -> Complex64 {
        match self {
            ClassicalEntry::Point(s) => s.amplitude,
            ClassicalEntry::Cross(d) => d.amplitude,
        }
    }

    pub fn is_cross(&self) -> bool {
        matches!(self, ClassicalEntry::Cross(_))
    }

    /// Hermitian adjoint: conjugate amplitude with ket and bra swapped.
    pub fn adjoint(&self) -> ClassicalEntry {
        match *self {
            ClassicalEntry::Point(s) => ClassicalEntry::Point(PointState::new(s.q, s.p, s.amplitude.conj())),
            ClassicalEntry::Cross(d) => ClassicalEntry::Cross(CrossDyad { ket: d.bra, bra: d.ket, amplitude: d.amplitude.conj() }),
        }
    }

    pub fn with_amplitude(&self, amplitude: Complex64) -> ClassicalEntry {
        match *self {
            ClassicalEntry::Point(s) => ClassicalEntry::Point(PointState { amplitude, ..s }),
            ClassicalEntry::Cross(d) => ClassicalEntry::Cross(CrossDyad { amplitude, ..d }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Q,
    P,
}

/// Outcome of differentiating a point-representation entry with respect to
/// `q̂` or `p̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorDerivative {
    /// Derivative of a delta state: `w ∂_axis δ(q̂ − q) δ(p̂ − p)`. It survives
    /// in the dynamics as a transport of the point.
    Representable { at: PhasePoint, axis: Axis, amplitude: Complex64 },
    /// The entry is not a function of `q̂, p̂`; the derivative carries a
    /// vanishing `δ_{i,j}` factor.
    Annihilated,
}

pub fn operator_derivative(entry: &ClassicalEntry, axis: Axis) -> OperatorDerivative {
    match entry {
        ClassicalEntry::Point(s) => OperatorDerivative::Representable { at: s.point(), axis, amplitude: s.amplitude },
        ClassicalEntry::Cross(_) => OperatorDerivative::Annihilated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn point_state_derivative_survives() {
        let s = ClassicalEntry::Point(PointState::new(1.0, 0.0, one()));
        assert!(matches!(operator_derivative(&s, Axis::Q), OperatorDerivative::Representable { axis: Axis::Q, .. }));
    }

    #[test]
    fn cross_dyad_derivative_is_annihilated() {
        let d = CrossDyad::new(PhasePoint::new(1.0, 0.0), PhasePoint::new(2.0, 0.0), one());
        assert!(d.is_cross());
        assert_eq!(operator_derivative(&d, Axis::Q), OperatorDerivative::Annihilated);
        assert_eq!(operator_derivative(&d, Axis::P), OperatorDerivative::Annihilated);
    }

    #[test]
    fn coincident_dyad_is_demoted() {
        let d = CrossDyad::new(PhasePoint::new(1.0, 0.5), PhasePoint::new(1.0, 0.5), one());
        assert!(!d.is_cross());
        assert!(matches!(operator_derivative(&d, Axis::Q), OperatorDerivative::Representable { .. }));
    }

    #[test]
    fn adjoint_swaps_ket_and_bra() {
        let d = CrossDyad::new(PhasePoint::new(1.0, 0.0), PhasePoint::new(2.0, 3.0), Complex64::new(0.1, 0.2));
        let a = d.adjoint();
        assert_eq!(a.ket(), d.bra());
        assert_eq!(a.bra(), d.ket());
        assert_eq!(a.amplitude(), Complex64::new(0.1, -0.2));
    }

    proptest! {
        #[test]
        fn distinct_dyads_are_always_annihilated(
            qk in -5.0..5.0f64, pk in -5.0..5.0f64,
            dq in 1e-9..2.0f64, dp in -2.0..2.0f64,
            re in -1.0..1.0f64, im in -1.0..1.0f64,
        ) {
            let d = CrossDyad::new(PhasePoint::new(qk, pk), PhasePoint::new(qk + dq, pk + dp), Complex64::new(re, im));
            prop_assert!(d.is_cross());
            prop_assert_eq!(operator_derivative(&d, Axis::Q), OperatorDerivative::Annihilated);
            prop_assert_eq!(operator_derivative(&d, Axis::P), OperatorDerivative::Annihilated);
        }
    }
}
