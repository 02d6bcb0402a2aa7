use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{QsimError, Result};

const UNITARY_TOL: f64 = 1e-12;

/// Name of a gate as written in circuit files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateName {
    H,
    X,
    Y,
    Z,
    /// Y-basis change, `RX(pi/2)`.
    Yb,
    /// Inverse Y-basis change, `RX(-pi/2)`.
    YbDg,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// `diag(1, e^{i angle})`.
    Phase(f64),
    /// Rotation by `angle` about the Hadamard axis `(X + Z)/sqrt(2)`, scaled so
    /// that `angle = pi` reproduces `H` exactly.
    HadamardAxis(f64),
    Custom,
}

/// A 2x2 single-qubit gate matrix `[[q11, q12], [q21, q22]]`.
#[derive(Clone, Copy, Debug)]
pub struct Gate1Q {
    m: [[Complex64; 2]; 2],
    name: GateName,
    unitary: bool,
}

impl PartialEq for Gate1Q {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Gate1Q {
    /// Builds a gate from its four entries, rejecting matrices that are not unitary.
    pub fn new(q11: Complex64, q12: Complex64, q21: Complex64, q22: Complex64) -> Result<Self> {
        let g = Self::raw([[q11, q12], [q21, q22]], GateName::Custom);
        if !g.unitarity_holds(UNITARY_TOL) {
            return Err(QsimError::InvalidGate(format!(
                "matrix [[{q11}, {q12}], [{q21}, {q22}]] is not unitary"
            )));
        }
        Ok(g)
    }

    /// Builds an error gate that is exempt from the unitarity check.
    ///
    /// Circuits holding such gates skip norm checks and report observables
    /// normalized by `<psi|psi>`.
    pub fn new_nonunitary(q11: Complex64, q12: Complex64, q21: Complex64, q22: Complex64) -> Self {
        let mut g = Self::raw([[q11, q12], [q21, q22]], GateName::Custom);
        g.unitary = false;
        g
    }

    fn raw(m: [[Complex64; 2]; 2], name: GateName) -> Self {
        Self {
            m,
            name,
            unitary: true,
        }
    }

    pub fn identity() -> Self {
        Self::raw([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]], GateName::Custom)
    }

    pub fn h() -> Self {
        let s = FRAC_1_SQRT_2;
        Self::raw([[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]], GateName::H)
    }

    pub fn x() -> Self {
        Self::raw([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]], GateName::X)
    }

    pub fn y() -> Self {
        Self::raw([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]], GateName::Y)
    }

    pub fn z() -> Self {
        Self::raw([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]], GateName::Z)
    }

    /// `RX(angle) = exp(-i angle X / 2)`.
    pub fn rx(angle: f64) -> Self {
        let (s, co) = (angle / 2.0).sin_cos();
        Self::raw([[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]], GateName::Rx(angle))
    }

    /// `RY(angle) = exp(-i angle Y / 2)`.
    pub fn ry(angle: f64) -> Self {
        let (s, co) = (angle / 2.0).sin_cos();
        Self::raw([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]], GateName::Ry(angle))
    }

    /// `RZ(angle) = diag(e^{-i angle/2}, e^{+i angle/2})`.
    pub fn rz(angle: f64) -> Self {
        let (s, co) = (angle / 2.0).sin_cos();
        Self::raw([[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]], GateName::Rz(angle))
    }

    pub fn phase(angle: f64) -> Self {
        let (s, co) = angle.sin_cos();
        Self::raw([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]], GateName::Phase(angle))
    }

    pub fn yb() -> Self {
        Self {
            name: GateName::Yb,
            ..Self::rx(PI / 2.0)
        }
    }

    pub fn ybdg() -> Self {
        Self {
            name: GateName::YbDg,
            ..Self::rx(-PI / 2.0)
        }
    }

    /// `i * exp(-i angle/2 (X+Z)/sqrt 2)`; equals `H` at `angle = pi`.
    pub fn hadamard_axis(angle: f64) -> Self {
        let (s, co) = (angle / 2.0).sin_cos();
        let a = s * FRAC_1_SQRT_2;
        // i * (cos I - i sin n.sigma) = i cos I + sin n.sigma
        let m = [[c(a, co), c(a, 0.0)], [c(a, 0.0), c(-a, co)]];
        Self::raw(m, GateName::HadamardAxis(angle))
    }

    /// Builds a gate from a unitary matrix computed elsewhere, skipping the check.
    pub(crate) fn from_matrix_unchecked(m: [[Complex64; 2]; 2]) -> Self {
        Self::raw(m, GateName::Custom)
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn name(&self) -> GateName {
        self.name
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
            name: GateName::Custom,
            unitary: self.unitary,
        }
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &Gate1Q) -> Self {
        let (a, b) = (self.m, rhs.m);
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self {
            m,
            name: GateName::Custom,
            unitary: self.unitary && rhs.unitary,
        }
    }

    /// Largest entry of `|G^dagger G - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().mul(self).m;
        let mut worst: f64 = 0.0;
        for (i, row) in p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    fn unitarity_holds(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// The 2x2 update on one amplitude pair.
    #[inline(always)]
    pub(crate) fn apply_pair(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        let m = &self.m;
        (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b)
    }
}
