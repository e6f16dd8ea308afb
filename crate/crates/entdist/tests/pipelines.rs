use entdist::config::Scenario;
use entdist::error::{ConfigError, RunError};
use entdist::formats::TableFormat;
use entdist::runner::{run_distribution, run_latency, run_process_tomo, run_sweep, RunOptions};

const SOURCE_WERNER_FIT: &str = r#"
[source]
state = "werner-fit"
[source.wavepacket]
center_wavelength_nm = 1550.0
spectral_fwhm_nm = 0.859
source_sigma_ps = 21.1
"#;

fn scenario(fiber: &str, source: &str, rest: &str) -> Scenario {
    Scenario::from_toml_str(&format!("fiber = {fiber:?}\n{source}\n{rest}")).unwrap()
}

fn with_state(state: &str) -> String {
    SOURCE_WERNER_FIT.replace("\"werner-fit\"", &format!("{state:?}"))
}

fn opts() -> RunOptions {
    RunOptions::default()
}

const TOMO_1E6: &str = r#"
[timebin]
delta_t_ps = 520.0
[tomography]
pairs_per_setting = 1000000
seed = 31
"#;

#[test]
fn distribution_smf28_ideal_source() {
    let s = scenario("SMF28-7.8", &with_state("psi-minus"), TOMO_1E6);
    let out = run_distribution(&s, &opts()).unwrap();
    assert!(out.report.estimate.concurrence > 0.99, "{:?}", out.report.estimate);
    assert!(out.report.estimate.purity > 0.99);
    assert!(out.report.estimate.converged);
}

#[test]
fn distribution_smf28_werner_fit_source() {
    let s = scenario("SMF28-7.8", SOURCE_WERNER_FIT, TOMO_1E6);
    let out = run_distribution(&s, &opts()).unwrap();
    assert!(
        (out.report.estimate.concurrence - 0.946).abs() < 0.01,
        "{:?}",
        out.report.estimate
    );
    assert!((out.report.model.purity - 0.949).abs() < 1e-6);
}

#[test]
fn distribution_nanf_werner_fit_source() {
    // Werner(v) through depolarizing(p) stays Werner with v' = v (4p - 1) / 3,
    // so C = (3 v' - 1) / 2 once the time bins no longer overlap
    let v = ((4.0 * 0.949 - 1.0) / 3.0f64).sqrt();
    let expected = (3.0 * v * (4.0 * 0.94 - 1.0) / 3.0 - 1.0) / 2.0;
    let s = scenario("NANF-7.72", SOURCE_WERNER_FIT, TOMO_1E6);
    let out = run_distribution(&s, &opts()).unwrap();
    assert!((out.report.model.concurrence - expected).abs() < 1e-9);
    assert!((out.report.estimate.concurrence - expected).abs() < 0.005);
    assert!(out.report.estimate.fidelity_to_truth > 0.999);
}

#[test]
fn distribution_error_bars() {
    let rest = TOMO_1E6.replace(
        "pairs_per_setting = 1000000",
        "pairs_per_setting = 20000\nmc_replicates = 20",
    );
    let s = scenario("NANF-7.72", SOURCE_WERNER_FIT, &rest);
    let out = run_distribution(&s, &opts()).unwrap();
    let e = &out.report.estimate;
    assert_eq!((e.mc_samples, e.mc_failures), (20, 0));
    assert!(e.std_concurrence > 0.0 && e.std_concurrence < 0.05, "{e:?}");
    assert!((e.concurrence - out.report.model.concurrence).abs() < 5.0 * e.std_concurrence + 1e-3);
}

#[test]
fn distribution_without_seed_is_config_error() {
    let s = scenario("NANF-7.72", SOURCE_WERNER_FIT, &TOMO_1E6.replace("seed = 31", ""));
    assert!(matches!(
        run_distribution(&s, &opts()),
        Err(RunError::Config(ConfigError::Missing("seed")))
    ));
    // the command-line seed fills the gap
    let with = RunOptions {
        seed: Some(5),
        format: TableFormat::Csv,
    };
    let rest = TOMO_1E6.replace("seed = 31", "").replace("1000000", "1000");
    let s = scenario("NANF-7.72", SOURCE_WERNER_FIT, &rest);
    assert!(run_distribution(&s, &with).is_ok());
}

#[test]
fn blind_detectors_are_a_numerical_failure() {
    let rest = format!("{TOMO_1E6}\n[detector]\nefficiency = 0.0\n");
    let s = scenario("NANF-7.72", SOURCE_WERNER_FIT, &rest);
    let err = run_distribution(&s, &opts()).err().unwrap();
    assert_eq!(err.exit_code(), 3, "{err}");
}

const SWEEP: &str = r#"
[timebin.sweep]
start_ps = 0.0
stop_ps = 520.0
step_ps = 20.0
"#;

#[test]
fn sweep_reports() {
    for (fiber, six_sigma, onset) in [("NANF-7.72", 131.0, 120.0), ("SMF28-7.8", 332.4, 300.0)] {
        let s = scenario(fiber, &with_state("psi-minus"), SWEEP);
        let out = run_sweep(&s, &opts()).unwrap();
        let r = &out.report;
        assert!((r.drop_onset_6sigma - six_sigma).abs() < 0.5, "{r:?}");
        assert_eq!(r.drop_onset_ps, Some(onset));
        // continuous crossing at 3.969 sigma, within one grid step
        let half = r.half_plateau_crossing_ps.unwrap();
        assert!((half - 3.969 * r.sigma_ps).abs() < 20.0, "{half}");
        let first = &out.rows[0];
        assert_eq!(first.delta_t_ps, 0.0);
        assert!(first.concurrence.abs() < 1e-12 && first.chsh_s < 2.0);
        assert_eq!(r.model_points, 27);
        assert_eq!(r.tomography_points, 0);
        assert!(out.rows.iter().all(|row| row.path == "model"));
    }
}

#[test]
fn model_sweep_ignores_seed() {
    let s = scenario("NANF-7.72", SOURCE_WERNER_FIT, SWEEP);
    let a = run_sweep(
        &s,
        &RunOptions {
            seed: Some(1),
            ..opts()
        },
    )
    .unwrap();
    let b = run_sweep(
        &s,
        &RunOptions {
            seed: Some(2),
            ..opts()
        },
    )
    .unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.report, b.report);
}

#[test]
fn sweep_with_tomography_path() {
    let rest = format!(
        "{}\n[tomography]\npairs_per_setting = 200000\nseed = 3\n",
        SWEEP.replace("step_ps = 20.0", "step_ps = 104.0\ntomography = true")
    );
    let s = scenario("SMF28-7.8", SOURCE_WERNER_FIT, &rest);
    let out = run_sweep(&s, &opts()).unwrap();
    assert_eq!(out.report.tomography_points, 6);
    let (model, tomo): (Vec<_>, Vec<_>) = out.rows.iter().partition(|r| r.path == "model");
    for (m, t) in model.iter().zip(&tomo) {
        assert_eq!(m.delta_t_ps, t.delta_t_ps);
        assert!((m.concurrence - t.concurrence).abs() < 0.02, "{m:?} {t:?}");
        if t.concurrence == 0.0 {
            assert!(t.chsh_s <= 2.0);
        }
    }
}

const PROCESS: &str = r#"
[tomography]
pairs_per_setting = 1000000
seed = 17
"#;

#[test]
fn process_tomography_recovers_depolarizing_p() {
    let s = scenario("NANF-7.72", &with_state("psi-minus"), PROCESS);
    let r = run_process_tomo(&s, &opts()).unwrap().report;
    assert!((r.recovered_p - 0.94).abs() < 0.01, "{r:?}");
    assert!(r.process_fidelity_to_configured_depolarizing > 0.999);
    assert!(r.process_fidelity_to_recovered_depolarizing > 0.999);
}

#[test]
fn process_tomography_identity_channel() {
    let s = scenario("SMF28-7.8", &with_state("psi-minus"), PROCESS);
    let out = run_process_tomo(&s, &opts()).unwrap();
    let identity = entdist_core::ChiMatrix::identity();
    assert!(out.chi.process_fidelity(&identity) > 0.999);
    // a mixed reference still identifies the channel
    let s = scenario("SMF28-7.8", SOURCE_WERNER_FIT, PROCESS);
    let out = run_process_tomo(&s, &opts()).unwrap();
    assert!(out.chi.process_fidelity(&identity) > 0.995, "{:?}", out.report);
}

#[test]
fn process_tomography_noise_free_is_exact() {
    let rest = PROCESS.replace("seed = 17", "noise_free = true");
    let s = Scenario::from_toml_str(&format!(
        "{}\n{rest}\n[fiber]\npreset = \"NANF-7.72\"\nchi_iz = 0.02\n",
        with_state("psi-minus")
    ))
    .unwrap();
    let out = run_process_tomo(&s, &opts()).unwrap();
    let truth = entdist_core::ChiMatrix::preferred_axis(0.94, 0.02).unwrap();
    assert!(out.chi.matrix().max_abs_diff(truth.matrix()) < 1e-9);
    assert!(out.report.output_purity.max - out.report.output_purity.min > 0.01);
    assert!(out.report.output_purity.argmax_bloch[2] > 0.99);
}

#[test]
fn process_tomography_asymmetric_channel() {
    let s = Scenario::from_toml_str(&format!(
        "{}\n{PROCESS}\n[fiber]\npreset = \"NANF-7.72\"\nchi_iz = 0.02\n",
        with_state("psi-minus")
    ))
    .unwrap();
    let r = run_process_tomo(&s, &opts()).unwrap().report;
    assert!(r.output_purity.max - r.output_purity.min > 0.01, "{r:?}");
    assert!(r.process_fidelity_to_true_channel > 0.999);
}

const LATENCY: &str = r#"
[timebin]
delta_t_ps = 520.0
[latency]
seed = 9
duration_s = 20.0
measured_difference_us = 13.11
[[latency.links]]
fiber = "NANF-7.72"
coincidence_rate_hz = 29.4
[[latency.links]]
fiber = "SMF28-7.8"
coincidence_rate_hz = 233.2
"#;

fn latency_scenario(body: &str) -> Scenario {
    Scenario::from_toml_str(&format!("{SOURCE_WERNER_FIT}\n{body}")).unwrap()
}

#[test]
fn latency_preset_pair() {
    let out = run_latency(&latency_scenario(LATENCY), &opts()).unwrap();
    let s = &out.summary;
    // (7800 * 1.47 - 7720 * 1.0003) m / c
    assert!((s.delay_difference_us - 12.4876).abs() < 1e-3, "{s:?}");
    assert!((s.relative_reduction - 0.33).abs() < 0.03);
    assert!((s.deviation_us.unwrap() - (s.delay_difference_us - 13.11)).abs() < 1e-12);
    for link in &s.links {
        let rows: Vec<_> = out.histogram.iter().filter(|r| r.link == link.name).collect();
        let total: u64 = rows.iter().map(|r| r.counts).sum();
        assert!(total <= link.events && total + 5 >= link.events);
        let expected: f64 = rows.iter().map(|r| r.expected_counts).sum();
        let mean = link.coincidence_rate_hz * 20.0;
        assert!((expected - mean).abs() < 1e-3 * mean, "{expected} vs {mean}");
        // histogram is centred on the group delay
        let peak = rows
            .iter()
            .max_by(|a, b| a.expected_counts.total_cmp(&b.expected_counts))
            .unwrap();
        assert!(peak.offset_ps.abs() < 4.0);
        assert!((peak.arrival_time_us - link.delay_us).abs() < 1e-5);
    }
}

#[test]
fn latency_identical_links() {
    let body = LATENCY.replace("SMF28-7.8", "NANF-7.72").replace("233.2", "29.4");
    let out = run_latency(&latency_scenario(&body), &opts()).unwrap();
    assert_eq!(out.summary.delay_difference_us, 0.0);
    let half = out.histogram.len() / 2;
    let counts = |rows: &[entdist::formats::HistogramRow]| rows.iter().map(|r| r.counts).collect::<Vec<_>>();
    assert_eq!(counts(&out.histogram[..half]), counts(&out.histogram[half..]));
    let again = run_latency(&latency_scenario(&body), &opts()).unwrap();
    assert_eq!(out.histogram, again.histogram);
}

#[test]
fn latency_errors() {
    let unknown = LATENCY.replace("\"SMF28-7.8\"", "\"SMF-28e\"");
    assert!(matches!(
        Scenario::from_toml_str(&format!("{SOURCE_WERNER_FIT}\n{unknown}")),
        Err(ConfigError::UnknownPreset { .. })
    ));
    let no_seed = latency_scenario(&LATENCY.replace("seed = 9", ""));
    assert!(matches!(
        run_latency(&no_seed, &opts()),
        Err(RunError::Config(ConfigError::Missing("seed")))
    ));
    let one_link = LATENCY
        .split("[[latency.links]]")
        .take(2)
        .collect::<Vec<_>>()
        .join("[[latency.links]]");
    assert!(matches!(
        run_latency(&latency_scenario(&one_link), &opts()),
        Err(RunError::Config(ConfigError::Invalid(_)))
    ));
}
