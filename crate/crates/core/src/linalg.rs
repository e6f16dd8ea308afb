//! Fixed-size dense complex matrices and a Hermitian eigensolver.
//!
//! Everything here works on `N x N` arrays on the stack, so the state
//! types built on top never allocate. The eigensolver is a cyclic complex
//! Jacobi method, which is accurate to a few ulps for the 2x2, 3x3, 4x4 and
//! 16x16 Hermitian matrices this crate needs.

use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

/// Complex column vector.
pub type Vector<const N: usize> = [C64; N];

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Matrix<N> {
    pub const fn zeros() -> Self {
        Matrix([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(|i, j| c(rows[i][j], 0.0))
    }

    pub fn diagonal(d: [f64; N]) -> Self {
        Self::from_fn(|i, j| if i == j { c(d[i], 0.0) } else { ZERO })
    }

    /// `|v><w|`
    pub fn outer(v: &Vector<N>, w: &Vector<N>) -> Self {
        Self::from_fn(|i, j| v[i] * w[j].conj())
    }

    /// `|v><v|`
    pub fn projector(v: &Vector<N>) -> Self {
        Self::outer(v, v)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn apply(&self, v: &Vector<N>) -> Vector<N> {
        let mut out = [ZERO; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// `<v|A|v>`
    pub fn expectation(&self, v: &Vector<N>) -> C64 {
        let av = self.apply(v);
        (0..N).map(|i| v[i].conj() * av[i]).sum()
    }

    /// `A B A^dagger`
    pub fn sandwich(&self, inner: &Self) -> Self {
        *self * *inner * self.adjoint()
    }

    /// `(A + A^dagger) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(|i, j| (self.0[i][j] + self.0[j][i].conj()) * 0.5)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..N {
            for j in i..N {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Frobenius inner product `Tr(A^dagger B)`.
    pub fn inner(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..N {
            for j in 0..N {
                acc += self.0[i][j].conj() * other.0[i][j];
            }
        }
        acc
    }

    /// Row-major flattening.
    pub fn to_row_major(&self) -> impl Iterator<Item = C64> + '_ {
        self.0.iter().flat_map(|r| r.iter().copied())
    }
}

impl Mat2 {
    /// Kronecker product `self ⊗ rhs`; row index of the result is `2 * i_self + i_rhs`.
    pub fn kron(&self, rhs: &Mat2) -> Mat4 {
        Mat4::from_fn(|i, j| self.0[i / 2][j / 2] * rhs.0[i % 2][j % 2])
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

pub fn kron_vec(a: &Vector<2>, b: &Vector<2>) -> Vector<4> {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

pub fn norm<const N: usize>(v: &Vector<N>) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Copy, Debug)]
pub struct HermitianEigen<const N: usize> {
    /// Eigenvalues in ascending order.
    pub values: [f64; N],
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix<N>,
}

impl<const N: usize> HermitianEigen<N> {
    pub fn vector(&self, k: usize) -> Vector<N> {
        core::array::from_fn(|i| self.vectors.0[i][k])
    }

    /// Rebuild `V f(D) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix<N> {
        let mut out = Matrix::zeros();
        for k in 0..N {
            let w = f(self.values[k]);
            if w == 0.0 {
                continue;
            }
            for i in 0..N {
                let vik = self.vectors.0[i][k] * w;
                for j in 0..N {
                    out.0[i][j] += vik * self.vectors.0[j][k].conj();
                }
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[N - 1]
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Only the Hermitian part of `a` is used.
pub fn eigh<const N: usize>(a: &Matrix<N>) -> HermitianEigen<N> {
    let mut m = a.hermitian_part();
    let mut v = Matrix::<N>::identity();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..N {
            for q in p + 1..N {
                off += m.0[p][q].norm_sqr();
            }
        }
        if libm::sqrt(off) <= 1e-17 * scale {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: [usize; N] = core::array::from_fn(|k| k);
    let diag: [f64; N] = core::array::from_fn(|k| m.0[k][k].re);
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    HermitianEigen {
        values: core::array::from_fn(|k| diag[order[k]]),
        vectors: Matrix::from_fn(|i, k| v.0[i][order[k]]),
    }
}

// Zeroes m[p][q] with the unitary G = diag(1, e^{-i phi}) * R(theta) acting on (p, q).
fn rotate<const N: usize>(m: &mut Matrix<N>, v: &mut Matrix<N>, p: usize, q: usize) {
    let apq = m.0[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag; // e^{i phi}
    let app = m.0[p][p].re;
    let aqq = m.0[q][q].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
    };
    let cs = 1.0 / libm::sqrt(1.0 + t * t);
    let sn = t * cs;

    // G columns: g_p = cs e_p - sn e^{-i phi} e_q ; g_q = sn e_p + cs e^{-i phi} e_q
    let gpp = c(cs, 0.0);
    let gqp = -phase.conj() * sn;
    let gpq = c(sn, 0.0);
    let gqq = phase.conj() * cs;

    // m <- m G
    for i in 0..N {
        let mip = m.0[i][p];
        let miq = m.0[i][q];
        m.0[i][p] = mip * gpp + miq * gqp;
        m.0[i][q] = mip * gpq + miq * gqq;
    }
    // m <- G^dagger m
    for j in 0..N {
        let mpj = m.0[p][j];
        let mqj = m.0[q][j];
        m.0[p][j] = gpp.conj() * mpj + gqp.conj() * mqj;
        m.0[q][j] = gpq.conj() * mpj + gqq.conj() * mqj;
    }
    m.0[p][q] = ZERO;
    m.0[q][p] = ZERO;
    m.0[p][p] = c(m.0[p][p].re, 0.0);
    m.0[q][q] = c(m.0[q][q].re, 0.0);
    // v <- v G
    for i in 0..N {
        let vip = v.0[i][p];
        let viq = v.0[i][q];
        v.0[i][p] = vip * gpp + viq * gqp;
        v.0[i][q] = vip * gpq + viq * gqq;
    }
}

/// Eigenvalues at or above this are treated as zero when they are negative.
pub const PSD_CLAMP: f64 = -1e-10;

/// Principal square root of a PSD matrix. Negative eigenvalues are clamped to zero.
pub fn sqrt_psd<const N: usize>(a: &Matrix<N>) -> Matrix<N> {
    eigh(a).map(|x| if x > 0.0 { libm::sqrt(x) } else { 0.0 })
}

/// Nearest PSD matrix with unit trace: clip negative eigenvalues, renormalise.
///
/// Returns `None` if nothing positive is left.
pub fn project_unit_trace_psd<const N: usize>(a: &Matrix<N>) -> Option<Matrix<N>> {
    let eig = eigh(a);
    let total: f64 = eig.values.iter().filter(|&&x| x > 0.0).sum();
    if total <= 0.0 {
        return None;
    }
    Some(eig.map(|x| if x > 0.0 { x / total } else { 0.0 }))
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `pivot_tol` times the largest entry.
pub fn solve<const N: usize>(a: &Matrix<N>, b: &Vector<N>, pivot_tol: f64) -> Option<Vector<N>> {
    let mut m = *a;
    let mut rhs = *b;
    let scale = m.max_abs();
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let (piv, mag) = (col..N)
            .map(|r| (r, m.0[r][col].norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= pivot_tol * scale {
            return None;
        }
        m.0.swap(col, piv);
        rhs.swap(col, piv);
        let inv = ONE / m.0[col][col];
        for r in col + 1..N {
            let f = m.0[r][col] * inv;
            if f == ZERO {
                continue;
            }
            for k in col..N {
                let t = m.0[col][k];
                m.0[r][k] -= f * t;
            }
            let t = rhs[col];
            rhs[r] -= f * t;
        }
    }
    let mut x = [ZERO; N];
    for r in (0..N).rev() {
        let mut acc = rhs[r];
        for (a, xk) in m.0[r][r + 1..].iter().zip(&x[r + 1..]) {
            acc -= *a * *xk;
        }
        x[r] = acc / m.0[r][r];
    }
    Some(x)
}
