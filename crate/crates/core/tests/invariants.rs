use entdist_core::channels::{ChiMatrix, KrausSet};
use entdist_core::linalg::{c, eigh, Mat2, Mat4};
use entdist_core::state::werner;
use entdist_core::timebin::{effective_state, TimeBinConfig};
use entdist_core::{Side, TwoQubitState};
use proptest::prelude::*;

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

/// `A A^dagger / Tr` from 32 real numbers; full rank almost surely.
fn random_state() -> impl Strategy<Value = TwoQubitState> {
    entries(32).prop_map(|v| {
        let a = Mat4::from_fn(|i, j| c(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1]));
        let m = a * a.adjoint();
        TwoQubitState::new(m.scale_re(1.0 / m.trace().re)).unwrap()
    })
}

fn random_kraus() -> impl Strategy<Value = KrausSet> {
    (1usize..=4, entries(32)).prop_map(|(rank, v)| {
        let raw: Vec<Mat2> = (0..rank)
            .map(|k| Mat2::from_fn(|i, j| c(v[8 * k + 2 * (2 * i + j)], v[8 * k + 2 * (2 * i + j) + 1] + 0.1)))
            .collect();
        let gram = raw.iter().fold(Mat2::zeros(), |acc, k| acc + k.adjoint() * *k);
        let inv_sqrt = eigh(&gram).map(|x| 1.0 / x.sqrt());
        KrausSet::new(raw.iter().map(|k| *k * inv_sqrt).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metric_ranges(rho in random_state()) {
        let conc = rho.concurrence();
        let pur = rho.purity();
        let s = rho.chsh_max();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&conc));
        prop_assert!((0.25 - 1e-12..=1.0 + 1e-12).contains(&pur));
        prop_assert!((0.0..=2.0 * 2f64.sqrt() + 1e-9).contains(&s));
        // a Bell violation needs entanglement
        if s > 2.0 + 1e-9 {
            prop_assert!(conc > 0.0);
        }
    }

    #[test]
    fn fidelity_and_trace_distance(a in random_state(), b in random_state()) {
        let f = a.fidelity(&b);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - b.fidelity(&a)).abs() < 1e-9);
        prop_assert!((a.fidelity(&a) - 1.0).abs() < 1e-9);
        // Fuchs-van de Graaf
        let td = a.trace_distance(&b);
        prop_assert!(1.0 - f.sqrt() <= td + 1e-9);
        prop_assert!(td <= (1.0 - f).sqrt() + 1e-9);
    }

    #[test]
    fn channels_preserve_states(k in random_kraus(), rho in random_state()) {
        for side in [Side::First, Side::Second] {
            let out = k.apply_one_side(&rho, side);
            prop_assert!(TwoQubitState::new(*out.matrix()).is_ok());
            // local channels cannot create entanglement
            prop_assert!(out.concurrence() <= rho.concurrence() + 1e-9);
        }
    }

    #[test]
    fn chi_kraus_round_trip(k in random_kraus(), rho in random_state()) {
        let chi = ChiMatrix::from_kraus(&k);
        prop_assert!(ChiMatrix::new(*chi.matrix()).is_ok());
        let back = ChiMatrix::from_kraus(&chi.to_kraus().unwrap());
        prop_assert!(back.matrix().max_abs_diff(chi.matrix()) < 1e-10);
        let via_kraus = k.apply_one_side(&rho, Side::Second);
        let via_chi = chi.to_kraus().unwrap().apply_one_side(&rho, Side::Second);
        prop_assert!(via_kraus.matrix().max_abs_diff(via_chi.matrix()) < 1e-10);
        let choi = chi.to_choi();
        let again = ChiMatrix::from_choi(&choi).unwrap();
        prop_assert!(again.matrix().max_abs_diff(chi.matrix()) < 1e-12);
    }

    #[test]
    fn local_unitaries_keep_entanglement(
        rho in random_state(),
        t in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let u = Mat2::from_fn(|i, j| match (i, j) {
            (0, 0) => c(t[0].cos(), 0.0) * c(0.0, t[1]).exp(),
            (0, 1) => -c(t[0].sin(), 0.0) * c(0.0, t[2]).exp(),
            (1, 0) => c(t[0].sin(), 0.0) * c(0.0, -t[2]).exp(),
            _ => c(t[0].cos(), 0.0) * c(0.0, -t[1]).exp(),
        });
        let rotated = rho.conjugate_by(&u.kron(&u.adjoint()));
        prop_assert!((rotated.concurrence() - rho.concurrence()).abs() < 1e-8);
        prop_assert!((rotated.chsh_max() - rho.chsh_max()).abs() < 1e-8);
        prop_assert!((rotated.purity() - rho.purity()).abs() < 1e-10);
    }

    #[test]
    fn timebin_output_is_a_state(dt in 0.0f64..1000.0, sigma in 1.0f64..200.0, v in 0.0f64..1.0) {
        let src = werner(v).unwrap();
        let cfg = TimeBinConfig::with_default_window(dt, sigma).unwrap();
        let out = effective_state(&src, &cfg);
        prop_assert!(TwoQubitState::new(*out.matrix()).is_ok());
        prop_assert!(out.concurrence() <= src.concurrence() + 1e-9);
        // separated peaks recover the source
        if dt > 8.0 * sigma {
            prop_assert!(out.trace_distance(&src) < 1e-6);
        }
    }
}
