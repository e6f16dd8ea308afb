//! Single-qubit channels: process (chi) matrices in the Pauli basis, Choi
//! matrices and Kraus sets.
//!
//! The chi matrix is normalised to unit trace, so for trace-preserving
//! channels `chi_II` is the weight of the identity process. The Choi matrix
//! puts the channel on the *second* half of `|Phi+>`:
//! `Choi = (I (x) E)(|Phi+><Phi+|) = sum_mn chi_mn (I (x) s_m)|Phi+><Phi+|(I (x) s_n)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::linalg::{c, eigh, Mat2, Mat4, Matrix, Vector, ZERO};
use crate::state::{local_operator, phi_plus_ket, Pauli, QubitState, Side, TwoQubitState};

/// Tolerance on `|| sum K^dagger K - I ||_max`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Max-norm distance of `sum K^dagger K` from the identity.
pub fn completeness_defect(kraus: &[Mat2]) -> f64 {
    let sum = kraus.iter().fold(Mat2::zeros(), |acc, k| acc + k.adjoint() * *k);
    sum.max_abs_diff(&Mat2::identity())
}

/// A trace-preserving set of single-qubit Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<Mat2>,
}

impl KrausSet {
    pub fn new(ops: Vec<Mat2>) -> Result<Self> {
        let defect = completeness_defect(&ops);
        if ops.is_empty() || defect > COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus(defect));
        }
        Ok(Self { ops })
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn apply(&self, rho: &QubitState) -> QubitState {
        let out = self
            .ops
            .iter()
            .fold(Mat2::zeros(), |acc, k| acc + k.sandwich(rho.matrix()));
        QubitState::from_trusted(out)
    }

    /// Applies the channel to one photon of a pair.
    pub fn apply_one_side(&self, rho: &TwoQubitState, side: Side) -> TwoQubitState {
        rho.apply_local_unchecked(&self.ops, side)
    }

    /// Sequential composition: `self` first, then `after`.
    pub fn then(&self, after: &KrausSet) -> KrausSet {
        let ops = after
            .ops
            .iter()
            .flat_map(|b| self.ops.iter().map(move |a| *b * *a))
            .collect();
        KrausSet { ops }
    }
}

/// `(I (x) s_m)|Phi+>`, an orthonormal Bell basis indexed by Pauli label.
fn choi_basis() -> [Vector<4>; 4] {
    Pauli::ALL.map(|p| local_operator(&p.matrix(), Side::Second).apply(&phi_plus_ket()))
}

/// Process matrix of a single-qubit channel in the (I, X, Y, Z) basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiMatrix {
    m: Mat4,
}

impl ChiMatrix {
    /// Validates Hermiticity, unit trace and complete positivity.
    pub fn new(m: Mat4) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > crate::state::HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > crate::state::TRACE_TOL || tr.im.abs() > crate::state::TRACE_TOL {
            return Err(Error::Trace(tr.re));
        }
        let chi = Self { m: m.hermitian_part() };
        let min = eigh(&chi.choi_matrix()).min();
        if min < -crate::state::PSD_TOL {
            return Err(Error::NotCompletelyPositive(min));
        }
        Ok(chi)
    }

    pub fn identity() -> Self {
        Self {
            m: Mat4::diagonal([1.0, 0.0, 0.0, 0.0]),
        }
    }

    /// `p rho + (1 - p)/3 (X rho X + Y rho Y + Z rho Z)`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&p), "depolarizing p", "in [0, 1]", p)?;
        let q = (1.0 - p) / 3.0;
        Ok(Self {
            m: Mat4::diagonal([p, q, q, q]),
        })
    }

    /// Amplitude damping toward |H> with strength `gamma`, followed by
    /// depolarizing with identity weight `p`. A non-unital channel whose
    /// output purity depends on the input polarization.
    pub fn damped_depolarizing(p: f64, gamma: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&gamma), "damping gamma", "in [0, 1]", gamma)?;
        let depol = Self::depolarizing(p)?.to_kraus()?;
        let keep = libm::sqrt(1.0 - gamma);
        let damping = KrausSet::new(alloc::vec![
            Matrix([[c(1.0, 0.0), ZERO], [ZERO, c(keep, 0.0)]]),
            Matrix([[ZERO, c(libm::sqrt(gamma), 0.0)], [ZERO, ZERO]]),
        ])?;
        Ok(Self::from_kraus(&damping.then(&depol)))
    }

    /// Damped depolarizing channel tuned so that `Re chi_IZ` equals `iz`.
    ///
    /// For this family `chi_IZ = gamma (p - q) / 4` with `q = (1 - p)/3`.
    pub fn preferred_axis(p: f64, iz: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&p), "depolarizing p", "in [0, 1]", p)?;
        let q = (1.0 - p) / 3.0;
        let gamma = if iz == 0.0 { 0.0 } else { 4.0 * iz / (p - q) };
        ensure(
            (0.0..=1.0).contains(&gamma),
            "I-Z coherence",
            "reachable by amplitude damping (0 <= 4 iz / (p - q) <= 1)",
            iz,
        )?;
        Self::damped_depolarizing(p, gamma)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn entry(&self, a: Pauli, b: Pauli) -> crate::linalg::C64 {
        self.m[(a.index(), b.index())]
    }

    /// `chi_II`, the identity-process weight.
    pub fn identity_weight(&self) -> f64 {
        self.m[(0, 0)].re
    }

    /// Kraus form from the eigen-decomposition of chi.
    pub fn to_kraus(&self) -> Result<KrausSet> {
        let eig = eigh(&self.m);
        if eig.min() < -crate::state::PSD_TOL {
            return Err(Error::NotCompletelyPositive(eig.min()));
        }
        let paulis = Pauli::ALL.map(Pauli::matrix);
        let ops: Vec<Mat2> = (0..4)
            .rev()
            .filter(|&k| eig.values[k] > 1e-15)
            .map(|k| {
                let u = eig.vector(k);
                let w = libm::sqrt(eig.values[k]);
                (0..4).fold(Mat2::zeros(), |acc, m| acc + paulis[m].scale(u[m] * w))
            })
            .collect();
        KrausSet::new(ops)
    }

    /// Inverse of [`ChiMatrix::to_kraus`]: expand each operator in the Pauli basis.
    pub fn from_kraus(kraus: &KrausSet) -> Self {
        let paulis = Pauli::ALL.map(Pauli::matrix);
        let mut m = Mat4::zeros();
        for k in kraus.operators() {
            let coeff: [crate::linalg::C64; 4] = core::array::from_fn(|a| (paulis[a] * *k).trace() * 0.5);
            m = m + Mat4::outer(&coeff, &coeff);
        }
        Self { m: m.hermitian_part() }
    }

    fn choi_matrix(&self) -> Mat4 {
        Self::choi_of(&self.m)
    }

    pub(crate) fn choi_of(chi: &Mat4) -> Mat4 {
        let basis = choi_basis();
        let mut out = Mat4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let w = chi[(a, b)];
                if w != ZERO {
                    out = out + Mat4::outer(&basis[a], &basis[b]).scale(w);
                }
            }
        }
        out
    }

    /// Choi state of the channel (channel on the second subsystem of `|Phi+>`).
    pub fn to_choi(&self) -> TwoQubitState {
        TwoQubitState::from_trusted(self.choi_matrix())
    }

    /// Inverse of [`ChiMatrix::to_choi`].
    pub fn from_choi(choi: &TwoQubitState) -> Result<Self> {
        Self::new(Self::chi_from_choi_matrix(choi.matrix()))
    }

    pub(crate) fn chi_from_choi_matrix(choi: &Mat4) -> Mat4 {
        let basis = choi_basis();
        Mat4::from_fn(|a, b| {
            let cb = choi.apply(&basis[b]);
            (0..4).map(|i| basis[a][i].conj() * cb[i]).sum()
        })
    }

    /// The chi matrix as a two-qubit state, for state-style metrics.
    pub fn as_state(&self) -> TwoQubitState {
        TwoQubitState::from_trusted(self.m)
    }

    /// Uhlmann fidelity (squared convention) between the normalised chi matrices.
    pub fn process_fidelity(&self, other: &ChiMatrix) -> f64 {
        self.as_state().fidelity(&other.as_state())
    }

    /// Unsquared variant of [`ChiMatrix::process_fidelity`].
    pub fn process_root_fidelity(&self, other: &ChiMatrix) -> f64 {
        self.as_state().root_fidelity(&other.as_state())
    }

    /// `E(rho) = sum_mn chi_mn s_m rho s_n`, renormalised because an
    /// estimated chi is trace preserving only up to shot noise.
    pub fn apply(&self, rho: &QubitState) -> QubitState {
        let paulis = Pauli::ALL.map(Pauli::matrix);
        let mut out = Mat2::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let w = self.m[(a, b)];
                if w != ZERO {
                    out = out + (paulis[a] * *rho.matrix() * paulis[b]).scale(w);
                }
            }
        }
        QubitState::normalized(out)
    }

    /// Output purity for the pure input with Bloch vector `r` (unit length).
    pub fn output_purity(&self, r: [f64; 3]) -> f64 {
        self.apply(&QubitState::from_bloch(r)).purity()
    }

    /// Best- and worst-case output purity over pure inputs.
    ///
    /// Scans a Fibonacci lattice of `samples` Bloch vectors, then polishes the
    /// two extremes with a 50-step compass search on the sphere.
    pub fn extremal_output_purity(&self, samples: usize) -> Result<ExtremalPurity> {
        ensure(samples >= 1, "samples", "at least 1", samples as f64)?;
        let lattice = (0..samples).map(|k| fibonacci_point(k, samples));
        let mut lo = (f64::INFINITY, [0.0, 0.0, 1.0]);
        let mut hi = (f64::NEG_INFINITY, [0.0, 0.0, 1.0]);
        for r in lattice {
            let v = self.output_purity(r);
            if v < lo.0 {
                lo = (v, r);
            }
            if v > hi.0 {
                hi = (v, r);
            }
        }
        let step = libm::sqrt(4.0 * PI / samples as f64).min(0.5);
        let lo = compass_search(|r| -self.output_purity(r), lo.1, step);
        let hi = compass_search(|r| self.output_purity(r), hi.1, step);
        Ok(ExtremalPurity {
            min: -lo.0,
            max: hi.0,
            argmin: lo.1,
            argmax: hi.1,
        })
    }
}

/// Extremal channel-output purities and the Bloch vectors achieving them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremalPurity {
    pub min: f64,
    pub max: f64,
    pub argmin: [f64; 3],
    pub argmax: [f64; 3],
}

pub(crate) fn fibonacci_point(k: usize, n: usize) -> [f64; 3] {
    let golden = PI * (3.0 - libm::sqrt(5.0));
    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
    let r = libm::sqrt((1.0 - z * z).max(0.0));
    let phi = golden * k as f64;
    [r * libm::cos(phi), r * libm::sin(phi), z]
}

const REFINE_STEPS: usize = 50;

// Maximises `f` on the unit sphere starting from `start`.
fn compass_search(f: impl Fn([f64; 3]) -> f64, start: [f64; 3], step: f64) -> (f64, [f64; 3]) {
    let mut best = (f(start), start);
    let mut h = step;
    for _ in 0..REFINE_STEPS {
        let (e1, e2) = tangent_frame(best.1);
        let mut improved = false;
        for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let trial = normalize3(core::array::from_fn(|i| best.1[i] + h * (a * e1[i] + b * e2[i])));
            let v = f(trial);
            if v > best.0 {
                best = (v, trial);
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = libm::sqrt(v.iter().map(|x| x * x).sum());
    v.map(|x| x / n)
}

fn tangent_frame(r: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if r[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = normalize3(cross(helper, r));
    (e1, cross(r, e1))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::state::{bell_psi_minus, werner, KET_H, KET_V};
    use approx::assert_abs_diff_eq;

    fn cardinal_states() -> [QubitState; 6] {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        [
            QubitState::pure(&KET_H),
            QubitState::pure(&KET_V),
            QubitState::pure(&[c(h, 0.0), c(h, 0.0)]),
            QubitState::pure(&[c(h, 0.0), c(-h, 0.0)]),
            QubitState::pure(&[c(h, 0.0), c(0.0, h)]),
            QubitState::pure(&[c(h, 0.0), c(0.0, -h)]),
        ]
    }

    #[test]
    fn depolarizing_examples() {
        assert_eq!(ChiMatrix::depolarizing(1.0).unwrap(), ChiMatrix::identity());
        let chi = ChiMatrix::depolarizing(0.94).unwrap();
        let d = [0.94, 0.02, 0.02, 0.02];
        for (i, di) in d.iter().enumerate() {
            for j in 0..4 {
                let want = if i == j { *di } else { 0.0 };
                assert_abs_diff_eq!(chi.matrix()[(i, j)].re, want, epsilon = 1e-15);
            }
        }
        assert!(ChiMatrix::depolarizing(1.1).is_err());
        assert!(ChiMatrix::depolarizing(-0.1).is_err());

        let full = ChiMatrix::depolarizing(0.25).unwrap().to_kraus().unwrap();
        for rho in cardinal_states() {
            let out = full.apply(&rho);
            assert!(out.matrix().max_abs_diff(QubitState::maximally_mixed().matrix()) < 1e-15);
        }
    }

    #[test]
    fn kraus_examples() {
        let k = ChiMatrix::identity().to_kraus().unwrap();
        assert_eq!(k.len(), 1);
        let phase = k.operators()[0][(0, 0)];
        assert!(k.operators()[0].max_abs_diff(&Mat2::identity().scale(phase)) < 1e-15);
        assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-15);

        let k = ChiMatrix::depolarizing(0.94).unwrap().to_kraus().unwrap();
        let mut weights: std::vec::Vec<f64> = k.operators().iter().map(|op| op.inner(op).re / 2.0).collect();
        weights.sort_by(|a, b| b.total_cmp(a));
        for (w, want) in weights.iter().zip([0.94, 0.02, 0.02, 0.02]) {
            assert_abs_diff_eq!(*w, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn non_cp_chi_is_rejected() {
        let mut m = Mat4::diagonal([0.5, 0.5, 0.0, 0.0]);
        m[(0, 1)] = c(0.6, 0.0);
        m[(1, 0)] = c(0.6, 0.0);
        assert!(matches!(ChiMatrix::new(m), Err(Error::NotCompletelyPositive(_))));
        assert!(matches!(
            ChiMatrix::new(Mat4::diagonal([1.0, 1.0, 0.0, 0.0])),
            Err(Error::Trace(_))
        ));
    }

    #[test]
    fn choi_examples() {
        let id = ChiMatrix::identity().to_choi();
        assert!(id.matrix().max_abs_diff(crate::state::bell_phi_plus().matrix()) < 1e-15);

        let full = ChiMatrix::depolarizing(0.25).unwrap().to_choi();
        assert!(full.matrix().max_abs_diff(&Mat4::identity().scale_re(0.25)) < 1e-15);

        // direct summation: 0.92 |Phi+><Phi+| + 0.08 I/4
        let choi = ChiMatrix::depolarizing(0.94).unwrap().to_choi();
        let expected = crate::state::bell_phi_plus().mix(&crate::state::TwoQubitState::maximally_mixed(), 0.92);
        assert!(choi.matrix().max_abs_diff(expected.matrix()) < 1e-15);
        let ev = choi.eigenvalues();
        for (e, want) in ev.iter().zip([0.02, 0.02, 0.02, 0.94]) {
            assert_abs_diff_eq!(*e, want, epsilon = 1e-14);
        }
        let back = ChiMatrix::from_choi(&choi).unwrap();
        assert!(
            back.matrix()
                .max_abs_diff(ChiMatrix::depolarizing(0.94).unwrap().matrix())
                < 1e-15
        );
    }

    /// Choi matrix computed independently by pushing |Phi+> through Kraus operators.
    #[test]
    fn choi_matches_channel_action_on_phi_plus() {
        let chi = ChiMatrix::preferred_axis(0.9, 0.03).unwrap();
        let kraus = chi.to_kraus().unwrap();
        let via_kraus = kraus.apply_one_side(&crate::state::bell_phi_plus(), Side::Second);
        assert!(via_kraus.matrix().max_abs_diff(chi.to_choi().matrix()) < 1e-14);
    }

    #[test]
    fn process_fidelity_examples() {
        let a = ChiMatrix::depolarizing(0.94).unwrap();
        assert_abs_diff_eq!(a.process_fidelity(&a), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ChiMatrix::identity().process_fidelity(&a), 0.94, epsilon = 1e-9);
        assert_abs_diff_eq!(a.process_fidelity(&ChiMatrix::identity()), 0.94, epsilon = 1e-9);
    }

    #[test]
    fn werner_mapping_on_grid() {
        for p in [0.0, 0.25, 0.5, 0.75, 0.94, 1.0] {
            let k = ChiMatrix::depolarizing(p).unwrap().to_kraus().unwrap();
            let out = k.apply_one_side(&bell_psi_minus(), Side::Second);
            let v: f64 = (4.0 * p - 1.0) / 3.0;
            assert!((out.concurrence() - ((3.0 * v - 1.0) / 2.0).max(0.0)).abs() < 1e-9);
            assert!((out.purity() - (1.0 + 3.0 * v * v) / 4.0).abs() < 1e-9);
            assert!(out.matrix().max_abs_diff(werner(v).unwrap().matrix()) < 1e-14);
        }
    }

    #[test]
    fn extremal_purity_identity_and_depolarizing() {
        let id = ChiMatrix::identity().extremal_output_purity(2000).unwrap();
        assert_abs_diff_eq!(id.min, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.max, 1.0, epsilon = 1e-12);

        let dep = ChiMatrix::depolarizing(0.94).unwrap();
        let e = dep.extremal_output_purity(2000).unwrap();
        let v = 0.92f64;
        let want = (1.0 + v * v) / 2.0;
        assert_abs_diff_eq!(want, 0.9232, epsilon = 1e-12);
        assert_abs_diff_eq!(e.min, want, epsilon = 1e-6);
        assert_abs_diff_eq!(e.max, want, epsilon = 1e-6);

        // brute force over 10^4 Bloch points
        let (lo, hi) = (0..10_000)
            .map(|k| dep.output_purity(fibonacci_point(k, 10_000)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        assert_abs_diff_eq!(lo, want, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, want, epsilon = 1e-6);
    }

    #[test]
    fn preferred_axis_channel() {
        let chi = ChiMatrix::preferred_axis(0.94, 0.02).unwrap();
        assert_abs_diff_eq!(chi.entry(Pauli::I, Pauli::Z).re, 0.02, epsilon = 1e-14);
        ChiMatrix::new(*chi.matrix()).unwrap();

        let e = chi.extremal_output_purity(2000).unwrap();
        assert!(e.max - e.min > 0.01);
        // damping pulls toward |H>, the +z pole
        assert!(e.argmax[2] > 0.99, "{:?}", e.argmax);
        assert!(e.argmin[2] < -0.99, "{:?}", e.argmin);

        // Bloch map r -> lam (sqrt(1-g) x, sqrt(1-g) y, (1-g) z + g); |r'| peaks at
        // the H pole and bottoms out at the V pole.
        let lam = 0.94 - 0.02;
        let g = 4.0 * 0.02 / lam;
        let want_min = (1.0 + lam * lam * (1.0 - 2.0 * g) * (1.0 - 2.0 * g)) / 2.0;
        let want_max = (1.0 + lam * lam) / 2.0;
        assert_abs_diff_eq!(e.min, want_min, epsilon = 1e-10);
        assert_abs_diff_eq!(e.max, want_max, epsilon = 1e-10);

        // a dense scan never beats the search
        let (lo, hi) = (0..10_000)
            .map(|k| chi.output_purity(fibonacci_point(k, 10_000)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        assert!(e.min <= lo + 1e-12 && lo - e.min < 1e-4);
        assert!(e.max >= hi - 1e-12 && e.max - hi < 1e-4);

        assert!(ChiMatrix::preferred_axis(0.94, 0.5).is_err());
    }

    #[test]
    fn kraus_completeness_enforced() {
        assert!(KrausSet::new(alloc::vec![Mat2::identity().scale_re(0.9)]).is_err());
        assert!(KrausSet::new(alloc::vec![]).is_err());
    }
}
