//! One- and two-qubit density matrices and entanglement measures.
//!
//! Two-qubit matrices use the ordered basis (HH, HV, VH, VV) with H the
//! first basis vector of each photon; photon 1 is the left tensor factor.

use core::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, kron_vec, sqrt_psd, Mat2, Mat4, Matrix, Vector, I, ONE, ZERO};

/// Single-qubit Pauli operator label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::I => Mat2::identity(),
            Pauli::X => Matrix([[ZERO, ONE], [ONE, ZERO]]),
            Pauli::Y => Matrix([[ZERO, -I], [I, ZERO]]),
            Pauli::Z => Matrix([[ONE, ZERO], [ZERO, -ONE]]),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Which photon of a pair an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Photon 1, the left tensor factor.
    First,
    /// Photon 2, the right tensor factor.
    Second,
}

pub const KET_H: Vector<2> = [ONE, ZERO];
pub const KET_V: Vector<2> = [ZERO, ONE];

/// Tolerances checked by [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<const N: usize> {
    m: Matrix<N>,
}

pub type QubitState = DensityMatrix<2>;
pub type TwoQubitState = DensityMatrix<4>;

impl<const N: usize> DensityMatrix<N> {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: Matrix<N>) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Trace(tr.re));
        }
        let min = eigh(&m).min();
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { m: m.hermitian_part() })
    }

    /// Wraps a matrix produced by a trusted computation, symmetrising away
    /// rounding noise. Debug builds still check the invariants.
    pub(crate) fn from_trusted(m: Matrix<N>) -> Self {
        let m = m.hermitian_part();
        debug_assert!((m.trace().re - 1.0).abs() < 1e-8, "trace {}", m.trace().re);
        Self { m }
    }

    /// Normalises a positive matrix to unit trace.
    pub(crate) fn normalized(m: Matrix<N>) -> Self {
        let tr = m.trace().re;
        Self::from_trusted(m.scale_re(1.0 / tr))
    }

    /// Projector onto `v`, normalised.
    pub fn pure(v: &Vector<N>) -> Self {
        Self::normalized(Matrix::projector(v))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_trusted(Matrix::identity().scale_re(1.0 / N as f64))
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        Self::from_trusted(self.m.scale_re(w) + other.m.scale_re(1.0 - w))
    }

    pub fn matrix(&self) -> &Matrix<N> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn eigenvalues(&self) -> [f64; N] {
        eigh(&self.m).values
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.m.to_row_major().map(|z| z.norm_sqr()).sum()
    }

    /// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let f = self.root_fidelity(other);
        (f * f).min(1.0)
    }

    /// Unsquared fidelity `Tr sqrt(sqrt(a) b sqrt(a))`.
    pub fn root_fidelity(&self, other: &Self) -> f64 {
        let sa = sqrt_psd(&self.m);
        let inner = sa * other.m * sa;
        eigh(&inner)
            .values
            .iter()
            .map(|&x| if x > 0.0 { libm::sqrt(x) } else { 0.0 })
            .sum()
    }

    /// `Tr |a - b| / 2`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        0.5 * eigh(&(self.m - other.m)).values.iter().map(|x| x.abs()).sum::<f64>()
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, u: &Matrix<N>) -> Self {
        Self::from_trusted(u.sandwich(&self.m))
    }

    /// Born-rule probability `<v|rho|v>` for a unit vector `v`.
    pub fn probability(&self, v: &Vector<N>) -> f64 {
        self.m.expectation(v).re
    }
}

impl QubitState {
    pub fn bloch_vector(&self) -> [f64; 3] {
        [Pauli::X, Pauli::Y, Pauli::Z].map(|p| (p.matrix() * self.m).trace().re)
    }

    /// `(I + r.sigma) / 2`; `r` must lie in the unit ball.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let m = Mat2::identity()
            + Pauli::X.matrix().scale_re(r[0])
            + Pauli::Y.matrix().scale_re(r[1])
            + Pauli::Z.matrix().scale_re(r[2]);
        Self::from_trusted(m.scale_re(0.5))
    }
}

/// `|Psi^-> = (|HV> - |VH>) / sqrt(2)`.
pub fn psi_minus_ket() -> Vector<4> {
    [ZERO, c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0), ZERO]
}

/// `|Phi^+> = (|HH> + |VV>) / sqrt(2)`.
pub fn phi_plus_ket() -> Vector<4> {
    [c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(FRAC_1_SQRT_2, 0.0)]
}

/// Projector onto the singlet Bell state `|Psi^->`.
pub fn bell_psi_minus() -> TwoQubitState {
    TwoQubitState::pure(&psi_minus_ket())
}

pub fn bell_phi_plus() -> TwoQubitState {
    TwoQubitState::pure(&phi_plus_ket())
}

/// Product basis state, e.g. `basis_state(KET_H, KET_H)` for `|HH>`.
pub fn product_ket(a: &Vector<2>, b: &Vector<2>) -> Vector<4> {
    kron_vec(a, b)
}

/// `v |Psi^-><Psi^-| + (1 - v) I / 4`.
pub fn werner(v: f64) -> Result<TwoQubitState> {
    crate::error::ensure((-1.0 / 3.0..=1.0).contains(&v), "Werner visibility", "in [-1/3, 1]", v)?;
    Ok(bell_psi_minus().mix(&TwoQubitState::maximally_mixed(), v))
}

impl TwoQubitState {
    pub fn product(a: &QubitState, b: &QubitState) -> Self {
        Self::from_trusted(a.m.kron(&b.m))
    }

    /// Reduced state of the photon named by `keep`.
    pub fn partial_trace(&self, keep: Side) -> QubitState {
        let m = &self.m;
        let reduced = Mat2::from_fn(|i, j| match keep {
            Side::First => m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)],
            Side::Second => m[(i, j)] + m[(2 + i, 2 + j)],
        });
        QubitState::from_trusted(reduced)
    }

    /// Applies a single-photon channel in Kraus form to one photon.
    pub fn apply_channel_one_side(&self, kraus: &[Mat2], side: Side) -> Result<Self> {
        let defect = crate::channels::completeness_defect(kraus);
        if defect > crate::channels::COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus(defect));
        }
        Ok(self.apply_local_unchecked(kraus, side))
    }

    pub(crate) fn apply_local_unchecked(&self, kraus: &[Mat2], side: Side) -> Self {
        let out = kraus
            .iter()
            .map(|k| local_operator(k, side).sandwich(&self.m))
            .fold(Mat4::zeros(), |acc, x| acc + x);
        Self::from_trusted(out)
    }

    /// Correlation matrix `T_ab = Tr(rho sigma_a (x) sigma_b)` for a, b in {X, Y, Z}.
    pub fn correlation_matrix(&self) -> [[f64; 3]; 3] {
        let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
        let mut t = [[0.0; 3]; 3];
        for (a, pa) in paulis.iter().enumerate() {
            for (b, pb) in paulis.iter().enumerate() {
                t[a][b] = (pa.matrix().kron(&pb.matrix()) * self.m).trace().re;
            }
        }
        t
    }

    /// Maximal CHSH value over all local projective measurements:
    /// `2 sqrt(m1 + m2)` with `m1, m2` the two largest eigenvalues of `T^T T`.
    pub fn chsh_max(&self) -> f64 {
        let t = self.correlation_matrix();
        let ttt = Matrix::<3>::from_fn(|i, j| c((0..3).map(|k| t[k][i] * t[k][j]).sum(), 0.0));
        let ev = eigh(&ttt).values;
        let top = (ev[1] + ev[2]).max(0.0);
        2.0 * libm::sqrt(top)
    }

    /// Wootters concurrence.
    ///
    /// The `lambda_i` are square roots of the eigenvalues of
    /// `rho (Y(x)Y) rho* (Y(x)Y)`, obtained here from the Hermitian matrix
    /// `sqrt(rho) rho~ sqrt(rho)` which has the same spectrum.
    pub fn concurrence(&self) -> f64 {
        let yy = Pauli::Y.matrix().kron(&Pauli::Y.matrix());
        let flipped = yy * self.m.conj() * yy;
        let root = sqrt_psd(&self.m);
        let ev = eigh(&(root * flipped * root)).values;
        // ascending order from eigh; lambda_1 is the largest
        let lam = ev.map(|x| if x > 0.0 { libm::sqrt(x) } else { 0.0 });
        (lam[3] - lam[2] - lam[1] - lam[0]).max(0.0)
    }
}

/// `I (x) K` for photon 2, `K (x) I` for photon 1.
pub fn local_operator(k: &Mat2, side: Side) -> Mat4 {
    match side {
        Side::First => k.kron(&Mat2::identity()),
        Side::Second => Mat2::identity().kron(k),
    }
}
