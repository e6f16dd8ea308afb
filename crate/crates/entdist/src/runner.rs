//! The four experiment pipelines. Each returns in-memory artifacts; writing
//! them and the manifest happens in [`execute`].

use std::path::Path;
use std::time::SystemTime;

use chrono::{DateTime, Utc};
use entdist_core::photonics::DetectorSpec;
use entdist_core::state::Side;
use entdist_core::timebin::{
    drop_onset, effective_state, spacing_grid, sweep_concurrence_purity, three_peak_profile, threshold_crossing,
    SweepRow, TimeBinConfig,
};
use entdist_core::tomography::{
    mle_reconstruct, monte_carlo_replicate, noise_free_records, simulate_counts, standard_settings,
    summarize_replicates, task_rng, Acquisition, McErrors, MeasurementRecord, Metrics, MleOptions,
};
use entdist_core::{ChiMatrix, TwoQubitState};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Link, Scenario, TomographyConfig};
use crate::error::{ConfigError, RunError};
use crate::formats::{
    chi_to_json, density_to_json, records_to_bytes, to_json, write_table, HistogramRow, SweepCsvRow, TableFormat,
};
use crate::manifest::{sha256_hex, timestamp, write_artifacts, Artifact, RunManifest};
use crate::svg::{line_chart, Series};

pub const ALL_ARTIFACTS: &[&str] = &[
    "histogram",
    "latency_summary",
    "result",
    "density_matrix",
    "records",
    "sweep",
    "sweep_report",
    "sweep_svg",
    "chi",
    "process_report",
];

/// Fraction of the plateau concurrence that marks the drop onset.
pub const DROP_ONSET_FRACTION: f64 = 0.95;
/// Spacing, in peak widths, below which bins overlap.
pub const SIX_SIGMA: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Latency,
    Distribute,
    Sweep,
    ProcessTomo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Latency => "latency",
            Command::Distribute => "distribute",
            Command::Sweep => "sweep",
            Command::ProcessTomo => "process-tomo",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Overrides any seed in the scenario.
    pub seed: Option<u64>,
    pub format: TableFormat,
}

/// Independent seed for a named stage of a run.
fn stage_seed(seed: u64, stage: u64) -> u64 {
    task_rng(seed, (1 << 32) + stage).next_u64()
}

// each stage owns 16 consecutive sub-streams
const COUNTS: u64 = 1;
const MONTE_CARLO: u64 = 2;
const STAGE_DISTRIBUTION: u64 = 0;
const STAGE_REFERENCE: u64 = 3;
const STAGE_OUTPUT: u64 = 4;
const STAGE_SWEEP: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsJson {
    pub concurrence: f64,
    pub purity: f64,
    pub chsh_s: f64,
}

impl From<Metrics> for MetricsJson {
    fn from(m: Metrics) -> Self {
        Self {
            concurrence: m.concurrence,
            purity: m.purity,
            chsh_s: m.chsh_s,
        }
    }
}

/// Parallel Monte-Carlo error bars; identical to the sequential version
/// because each replicate owns its RNG stream.
pub fn mc_errors(
    records: &[MeasurementRecord],
    replicates: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<McErrors, RunError> {
    let outcomes: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|r| monte_carlo_replicate(records, seed, r as u64, opts))
        .collect();
    Ok(summarize_replicates(&outcomes)?)
}

/// Tomography estimate with optional Monte-Carlo error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub concurrence: f64,
    pub purity: f64,
    pub chsh_s: f64,
    pub std_concurrence: f64,
    pub std_purity: f64,
    pub std_chsh: f64,
    pub mc_samples: usize,
    pub mc_failures: usize,
    pub fidelity_to_truth: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct TomographyRun {
    pub rho_hat: TwoQubitState,
    pub records: Vec<MeasurementRecord>,
    pub estimate: Estimate,
}

fn seed_for(scenario_seed: Option<u64>, opts: &RunOptions) -> Result<u64, ConfigError> {
    opts.seed.or(scenario_seed).ok_or(ConfigError::Missing("seed"))
}

/// Simulated counts, reconstruction and error bars for `truth`.
pub fn tomograph(
    truth: &TwoQubitState,
    cfg: &TomographyConfig,
    det: &DetectorSpec,
    window_ps: f64,
    seed: Option<u64>,
    stage: u64,
) -> Result<TomographyRun, RunError> {
    let acq = Acquisition {
        pairs_per_setting: cfg.pairs_per_setting,
        duration_s: cfg.duration_s,
        coincidence_window_ps: cfg.coincidence_window_ps.unwrap_or(window_ps),
    };
    let settings = standard_settings();
    let records = if cfg.noise_free {
        noise_free_records(truth, &settings, &acq, det)?
    } else {
        let seed = seed.ok_or(ConfigError::Missing("seed"))?;
        simulate_counts(truth, &settings, &acq, det, stage_seed(seed, stage * 16 + COUNTS))?
    };
    let opts = MleOptions::default();
    let fit = mle_reconstruct(&records, &opts)?;
    let metrics = Metrics::of(&fit.rho);
    let errors = match (cfg.mc_replicates, seed) {
        (0, _) => None,
        (n, Some(seed)) => Some(mc_errors(
            &records,
            n,
            stage_seed(seed, stage * 16 + MONTE_CARLO),
            &opts,
        )?),
        (_, None) => return Err(ConfigError::Missing("seed").into()),
    };
    let estimate = Estimate {
        concurrence: metrics.concurrence,
        purity: metrics.purity,
        chsh_s: metrics.chsh_s,
        std_concurrence: errors.map_or(0.0, |e| e.std_concurrence),
        std_purity: errors.map_or(0.0, |e| e.std_purity),
        std_chsh: errors.map_or(0.0, |e| e.std_chsh),
        mc_samples: errors.map_or(0, |e| e.replicates),
        mc_failures: errors.map_or(0, |e| e.failures),
        fidelity_to_truth: fit.rho.fidelity(truth),
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
        converged: fit.converged,
    };
    Ok(TomographyRun {
        rho_hat: fit.rho,
        records,
        estimate,
    })
}

struct Chain {
    link: Link,
    sigma_ps: f64,
    after_fiber: TwoQubitState,
}

/// Source state sent through the fiber channel on photon 2.
fn fiber_chain(scenario: &Scenario) -> Result<Chain, RunError> {
    let link = scenario.require_fiber()?;
    let wavepacket = scenario.source.wavepacket.resolve()?;
    let source = scenario.source.state.resolve()?;
    let kraus = link.channel()?.to_kraus()?;
    Ok(Chain {
        sigma_ps: link.spec.output_sigma_ps(&wavepacket),
        after_fiber: kraus.apply_one_side(&source, Side::Second),
        link,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub fiber: String,
    pub depolarizing_p: f64,
    pub delta_t_ps: f64,
    pub sigma_ps: f64,
    pub window_ps: f64,
    pub pairs_per_setting: u64,
    pub noise_free: bool,
    pub seed: Option<u64>,
    pub model: MetricsJson,
    pub estimate: Estimate,
}

pub struct DistributionOutcome {
    pub report: DistributionReport,
    pub truth: TwoQubitState,
    pub rho_hat: TwoQubitState,
    pub records: Vec<MeasurementRecord>,
}

/// Source, fiber channel, time-bin overlap, then simulated tomography.
pub fn run_distribution(scenario: &Scenario, opts: &RunOptions) -> Result<DistributionOutcome, RunError> {
    let chain = fiber_chain(scenario)?;
    let tb = scenario.require_timebin()?;
    let dt = tb.delta_t_ps.ok_or(ConfigError::Missing("timebin.delta_t_ps"))?;
    let cfg = TimeBinConfig::new(dt, chain.sigma_ps, tb.window_factor)?;
    let truth = effective_state(&chain.after_fiber, &cfg);
    let tomo = scenario.require_tomography()?;
    let seed = if tomo.noise_free && tomo.mc_replicates == 0 {
        opts.seed.or(tomo.seed)
    } else {
        Some(seed_for(tomo.seed, opts)?)
    };
    let det = scenario.detector.resolve()?;
    let run = tomograph(&truth, tomo, &det, cfg.window_ps(), seed, STAGE_DISTRIBUTION)?;
    Ok(DistributionOutcome {
        report: DistributionReport {
            fiber: chain.link.spec.name.clone(),
            depolarizing_p: chain.link.spec.depolarizing_p,
            delta_t_ps: dt,
            sigma_ps: chain.sigma_ps,
            window_ps: cfg.window_ps(),
            pairs_per_setting: tomo.pairs_per_setting,
            noise_free: tomo.noise_free,
            seed,
            model: Metrics::of(&truth).into(),
            estimate: run.estimate,
        },
        truth,
        rho_hat: run.rho_hat,
        records: run.records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub fiber: String,
    pub sigma_ps: f64,
    pub window_factor: f64,
    pub plateau_concurrence: f64,
    pub drop_onset_fraction: f64,
    /// Smallest grid spacing from which C stays above the onset fraction of the plateau.
    pub drop_onset_ps: Option<f64>,
    /// The six-sigma rule of thumb for the same peak width.
    pub drop_onset_6sigma: f64,
    pub half_plateau_crossing_ps: Option<f64>,
    pub model_points: usize,
    pub tomography_points: usize,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepCsvRow>,
    pub report: SweepReport,
}

/// Concurrence, purity and CHSH value against time-bin spacing.
pub fn run_sweep(scenario: &Scenario, opts: &RunOptions) -> Result<SweepOutcome, RunError> {
    let chain = fiber_chain(scenario)?;
    let tb = scenario.require_timebin()?;
    let spec = tb.sweep.ok_or(ConfigError::Missing("timebin.sweep"))?;
    let grid = spacing_grid(spec.start_ps, spec.stop_ps, spec.step_ps)
        .map_err(|e| ConfigError::Invalid(format!("timebin.sweep: {e}")))?;
    let model = sweep_concurrence_purity(&chain.after_fiber, chain.sigma_ps, tb.window_factor, &grid)?;
    let as_row = |r: &SweepRow, path: &str| SweepCsvRow {
        delta_t_ps: r.delta_t_ps,
        concurrence: r.concurrence,
        purity: r.purity,
        chsh_s: r.chsh_s,
        path: path.to_owned(),
    };
    let mut rows: Vec<SweepCsvRow> = model.iter().map(|r| as_row(r, "model")).collect();

    let mut tomography_points = 0;
    if spec.tomography {
        let tomo = scenario.require_tomography()?;
        let seed = seed_for(tomo.seed, opts)?;
        let det = scenario.detector.resolve()?;
        let measured: Vec<SweepRow> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &dt)| {
                let cfg = TimeBinConfig::new(dt, chain.sigma_ps, tb.window_factor)?;
                let truth = effective_state(&chain.after_fiber, &cfg);
                let run = tomograph(&truth, tomo, &det, cfg.window_ps(), Some(seed), STAGE_SWEEP + i as u64)?;
                Ok(SweepRow::from_state(dt, &run.rho_hat))
            })
            .collect::<Result<_, RunError>>()?;
        tomography_points = measured.len();
        rows.extend(measured.iter().map(|r| as_row(r, "tomography")));
    }

    let report = SweepReport {
        fiber: chain.link.spec.name.clone(),
        sigma_ps: chain.sigma_ps,
        window_factor: tb.window_factor,
        plateau_concurrence: model.last().map_or(0.0, |r| r.concurrence),
        drop_onset_fraction: DROP_ONSET_FRACTION,
        drop_onset_ps: drop_onset(&model, DROP_ONSET_FRACTION),
        drop_onset_6sigma: SIX_SIGMA * chain.sigma_ps,
        half_plateau_crossing_ps: threshold_crossing(&model, 0.5),
        model_points: model.len(),
        tomography_points,
    };
    Ok(SweepOutcome { rows, report })
}

fn sweep_svg(rows: &[SweepCsvRow], report: &SweepReport) -> String {
    let pick = |path: &str, f: fn(&SweepCsvRow) -> f64| {
        rows.iter()
            .filter(|r| r.path == path)
            .map(|r| (r.delta_t_ps, f(r)))
            .collect::<Vec<_>>()
    };
    let mut series = vec![
        Series {
            label: "concurrence (model)",
            color: "#1f77b4",
            points: pick("model", |r| r.concurrence),
            markers: false,
        },
        Series {
            label: "purity (model)",
            color: "#ff7f0e",
            points: pick("model", |r| r.purity),
            markers: false,
        },
    ];
    if report.tomography_points > 0 {
        series.push(Series {
            label: "concurrence (tomography)",
            color: "#1f77b4",
            points: pick("tomography", |r| r.concurrence),
            markers: true,
        });
        series.push(Series {
            label: "purity (tomography)",
            color: "#ff7f0e",
            points: pick("tomography", |r| r.purity),
            markers: true,
        });
    }
    line_chart(
        &format!("{} (sigma = {:.1} ps)", report.fiber, report.sigma_ps),
        "time-bin spacing (ps)",
        "C, purity",
        &series,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityExtremes {
    pub min: f64,
    pub max: f64,
    pub argmin_bloch: [f64; 3],
    pub argmax_bloch: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub fiber: String,
    pub configured_p: f64,
    pub configured_chi_iz: f64,
    /// Identity weight of the reconstructed process matrix.
    pub recovered_p: f64,
    pub process_fidelity_to_recovered_depolarizing: f64,
    pub process_fidelity_to_configured_depolarizing: f64,
    pub process_fidelity_to_true_channel: f64,
    pub output_purity: PurityExtremes,
    pub noise_free: bool,
    pub pairs_per_setting: u64,
    pub seed: Option<u64>,
    pub reference_fidelity: f64,
    pub output_fidelity: f64,
}

pub struct ProcessOutcome {
    pub chi: ChiMatrix,
    pub report: ProcessReport,
}

const PURITY_SAMPLES: usize = 2000;

/// Ancilla-assisted process tomography of the fiber channel on photon 2,
/// without a time-bin stage.
pub fn run_process_tomo(scenario: &Scenario, opts: &RunOptions) -> Result<ProcessOutcome, RunError> {
    let link = scenario.require_fiber()?;
    let reference = scenario.source.state.resolve()?;
    let truth_chi = link.channel()?;
    let output = truth_chi.to_kraus()?.apply_one_side(&reference, Side::Second);
    let tomo = scenario.require_tomography()?;
    let det = scenario.detector.resolve()?;
    let window = tomo.coincidence_window_ps.unwrap_or(100.0);

    let (chi, seed, ref_fid, out_fid) = if tomo.noise_free {
        let chi = entdist_core::tomography::ancilla_process_tomography(&output, &reference)?;
        (chi, opts.seed.or(tomo.seed), 1.0, 1.0)
    } else {
        let seed = seed_for(tomo.seed, opts)?;
        let no_mc = TomographyConfig {
            mc_replicates: 0,
            ..*tomo
        };
        let r = tomograph(&reference, &no_mc, &det, window, Some(seed), STAGE_REFERENCE)?;
        let o = tomograph(&output, &no_mc, &det, window, Some(seed), STAGE_OUTPUT)?;
        let chi = entdist_core::tomography::ancilla_process_tomography(&o.rho_hat, &r.rho_hat)?;
        (
            chi,
            Some(seed),
            r.estimate.fidelity_to_truth,
            o.estimate.fidelity_to_truth,
        )
    };

    let recovered_p = chi.identity_weight().clamp(0.0, 1.0);
    let ext = chi.extremal_output_purity(PURITY_SAMPLES)?;
    Ok(ProcessOutcome {
        report: ProcessReport {
            fiber: link.spec.name.clone(),
            configured_p: link.spec.depolarizing_p,
            configured_chi_iz: link.chi_iz,
            recovered_p,
            process_fidelity_to_recovered_depolarizing: chi.process_fidelity(&ChiMatrix::depolarizing(recovered_p)?),
            process_fidelity_to_configured_depolarizing: chi
                .process_fidelity(&ChiMatrix::depolarizing(link.spec.depolarizing_p)?),
            process_fidelity_to_true_channel: chi.process_fidelity(&truth_chi),
            output_purity: PurityExtremes {
                min: ext.min,
                max: ext.max,
                argmin_bloch: ext.argmin,
                argmax_bloch: ext.argmax,
            },
            noise_free: tomo.noise_free,
            pairs_per_setting: tomo.pairs_per_setting,
            seed,
            reference_fidelity: ref_fid,
            output_fidelity: out_fid,
        },
        chi,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub name: String,
    pub length_km: f64,
    pub group_index: f64,
    pub delay_us: f64,
    pub sigma_ps: f64,
    pub link_loss_db: f64,
    pub coincidence_rate_hz: f64,
    pub events: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub links: Vec<LinkSummary>,
    pub delta_t_ps: f64,
    /// Slower minus faster link.
    pub delay_difference_us: f64,
    /// Delay difference over the slower link's delay.
    pub relative_reduction: f64,
    pub measured_difference_us: Option<f64>,
    pub deviation_us: Option<f64>,
    pub deviation_relative: Option<f64>,
    pub seed: u64,
}

pub struct LatencyOutcome {
    pub summary: LatencySummary,
    pub histogram: Vec<HistogramRow>,
}

/// Stream for a link, derived from its resolved parameters so identical
/// links draw identical events.
fn link_stream(summary: &LinkSummary, weights: [f64; 3], dt: f64) -> u64 {
    let key = serde_json::to_vec(&(summary, weights, dt)).expect("link key serializes");
    let digest = sha256_hex(&key);
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

/// Arrival-time histograms for two fibers and their latency comparison.
pub fn run_latency(scenario: &Scenario, opts: &RunOptions) -> Result<LatencyOutcome, RunError> {
    let lat = scenario.latency.as_ref().ok_or(ConfigError::Missing("latency"))?;
    if lat.links.len() != 2 {
        return Err(ConfigError::Invalid(format!(
            "latency needs exactly two links to compare, got {}",
            lat.links.len()
        ))
        .into());
    }
    let seed = seed_for(lat.seed, opts)?;
    let wp = scenario.source.wavepacket.resolve()?;
    let tb = scenario.require_timebin()?;
    let dt = tb.delta_t_ps.ok_or(ConfigError::Missing("timebin.delta_t_ps"))?;
    let weights = tb.weights()?;
    let wsum = weights.early + weights.central + weights.late;
    let peaks = [
        (-dt, weights.early / wsum),
        (0.0, weights.central / wsum),
        (dt, weights.late / wsum),
    ];

    let mut links = Vec::new();
    let mut histogram = Vec::new();
    for lc in &lat.links {
        let link = lc.fiber.resolve()?;
        let sigma = link.spec.output_sigma_ps(&wp);
        let mut summary = LinkSummary {
            name: link.spec.name.clone(),
            length_km: link.spec.length_km,
            group_index: link.spec.group_index,
            delay_us: link.spec.propagation_delay_us(),
            sigma_ps: sigma,
            link_loss_db: link.spec.link_loss_db(),
            coincidence_rate_hz: lc.coincidence_rate_hz,
            events: 0,
        };
        let mut rng = task_rng(
            seed,
            link_stream(&summary, [weights.early, weights.central, weights.late], dt),
        );
        let mean_events = lc.coincidence_rate_hz * lat.duration_s;
        let events = if mean_events > 0.0 {
            Poisson::new(mean_events)
                .map_err(|e| ConfigError::Invalid(format!("coincidence rate: {e}")))?
                .sample(&mut rng) as u64
        } else {
            0
        };
        summary.events = events;

        let half = dt + SIX_SIGMA * sigma;
        let nbins = (2.0 * half / lat.bin_width_ps).ceil().max(1.0) as usize;
        let lo = -0.5 * nbins as f64 * lat.bin_width_ps;
        let mut counts = vec![0u64; nbins];
        for _ in 0..events {
            let u: f64 = rng.random();
            let centre = if u < peaks[0].1 {
                peaks[0].0
            } else if u < peaks[0].1 + peaks[1].1 {
                peaks[1].0
            } else {
                peaks[2].0
            };
            let z: f64 = rng.sample(StandardNormal);
            let t = centre + sigma * z;
            let k = ((t - lo) / lat.bin_width_ps).floor();
            if k >= 0.0 && (k as usize) < nbins {
                counts[k as usize] += 1;
            }
        }
        let centres: Vec<f64> = (0..nbins).map(|k| lo + (k as f64 + 0.5) * lat.bin_width_ps).collect();
        let cfg = TimeBinConfig::new(dt, sigma, tb.window_factor)?;
        let density = three_peak_profile(&cfg, &weights, &centres);
        for ((offset, n), d) in centres.iter().zip(counts).zip(density) {
            histogram.push(HistogramRow {
                link: summary.name.clone(),
                arrival_time_us: summary.delay_us + offset * 1e-6,
                offset_ps: *offset,
                counts: n,
                expected_counts: mean_events * d / wsum * lat.bin_width_ps,
            });
        }
        links.push(summary);
    }

    let (a, b) = (links[0].delay_us, links[1].delay_us);
    let slower = a.max(b);
    let diff = (a - b).abs();
    let measured = lat.measured_difference_us;
    Ok(LatencyOutcome {
        summary: LatencySummary {
            delta_t_ps: dt,
            delay_difference_us: diff,
            relative_reduction: if slower > 0.0 { diff / slower } else { 0.0 },
            measured_difference_us: measured,
            deviation_us: measured.map(|m| diff - m),
            deviation_relative: measured.filter(|m| *m != 0.0).map(|m| (diff - m) / m),
            seed,
            links,
        },
        histogram,
    })
}

fn artifact(name: &'static str, file_name: String, contents: Vec<u8>) -> Artifact {
    Artifact {
        name,
        file_name,
        contents,
    }
}

/// Runs `command` and returns the artifacts selected by the scenario.
pub fn run(command: Command, scenario: &Scenario, opts: &RunOptions) -> Result<(Vec<Artifact>, Option<u64>), RunError> {
    let ext = opts.format.extension();
    let (all, seed) = match command {
        Command::Latency => {
            let out = run_latency(scenario, opts)?;
            (
                vec![
                    artifact(
                        "histogram",
                        format!("histogram.{ext}"),
                        write_table(&out.histogram, opts.format),
                    ),
                    artifact("latency_summary", "latency_summary.json".into(), to_json(&out.summary)),
                ],
                Some(out.summary.seed),
            )
        }
        Command::Distribute => {
            let out = run_distribution(scenario, opts)?;
            (
                vec![
                    artifact("result", "tomography_result.json".into(), to_json(&out.report)),
                    artifact(
                        "density_matrix",
                        "density_matrix.json".into(),
                        density_to_json(&out.rho_hat),
                    ),
                    artifact(
                        "records",
                        format!("records.{ext}"),
                        records_to_bytes(&out.records, opts.format),
                    ),
                ],
                out.report.seed,
            )
        }
        Command::Sweep => {
            let out = run_sweep(scenario, opts)?;
            let seed = if out.report.tomography_points > 0 {
                opts.seed.or(scenario.tomography.and_then(|t| t.seed))
            } else {
                None
            };
            (
                vec![
                    artifact("sweep", format!("sweep.{ext}"), write_table(&out.rows, opts.format)),
                    artifact("sweep_report", "sweep_report.json".into(), to_json(&out.report)),
                    artifact(
                        "sweep_svg",
                        "sweep.svg".into(),
                        sweep_svg(&out.rows, &out.report).into_bytes(),
                    ),
                ],
                seed,
            )
        }
        Command::ProcessTomo => {
            let out = run_process_tomo(scenario, opts)?;
            (
                vec![
                    artifact("chi", "chi.json".into(), chi_to_json(&out.chi)),
                    artifact("process_report", "process_report.json".into(), to_json(&out.report)),
                ],
                out.report.seed,
            )
        }
    };
    let selected: Vec<Artifact> = match &scenario.outputs {
        None => all,
        Some(wanted) => all.into_iter().filter(|a| wanted.iter().any(|w| w == a.name)).collect(),
    };
    if selected.is_empty() {
        return Err(ConfigError::Invalid(format!(
            "none of the requested outputs are produced by `{}`",
            command.name()
        ))
        .into());
    }
    Ok((selected, seed))
}

/// Runs `command`, writes its artifacts to `out_dir` and records them in a manifest.
pub fn execute(
    command: Command,
    scenario: &Scenario,
    opts: &RunOptions,
    out_dir: &Path,
) -> Result<RunManifest, RunError> {
    let started: DateTime<Utc> = SystemTime::now().into();
    let (artifacts, seed) = run(command, scenario, opts)?;
    let files = write_artifacts(out_dir, &artifacts)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: command.name().to_owned(),
        scenario_sha256: scenario.sha256(),
        seed,
        started_at: timestamp(started),
        finished_at: timestamp(SystemTime::now().into()),
        files,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}
