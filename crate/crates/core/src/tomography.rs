//! Two-photon polarization tomography: forward simulation of analyzer
//! counts, diluted RρR maximum-likelihood reconstruction, Monte-Carlo
//! error bars and ancilla-assisted process tomography.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::channels::ChiMatrix;
use crate::error::{ensure, Error, Result};
use crate::linalg::{c, eigh, kron_vec, project_unit_trace_psd, solve, Mat4, Matrix, Vector, ONE, ZERO};
use crate::photonics::DetectorSpec;
use crate::state::{local_operator, Pauli, Side, TwoQubitState};

/// Single-photon analyzer setting: the polarization transmitted to the
/// "0" port of the PBS. The "1" port receives the orthogonal state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Analyzer {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Analyzer {
    pub const ALL: [Analyzer; 6] = [
        Analyzer::H,
        Analyzer::V,
        Analyzer::D,
        Analyzer::A,
        Analyzer::R,
        Analyzer::L,
    ];

    pub fn ket(self) -> Vector<2> {
        let h = FRAC_1_SQRT_2;
        match self {
            Analyzer::H => [ONE, ZERO],
            Analyzer::V => [ZERO, ONE],
            Analyzer::D => [c(h, 0.0), c(h, 0.0)],
            Analyzer::A => [c(h, 0.0), c(-h, 0.0)],
            Analyzer::R => [c(h, 0.0), c(0.0, h)],
            Analyzer::L => [c(h, 0.0), c(0.0, -h)],
        }
    }

    /// State sent to the "1" port.
    pub fn orthogonal(self) -> Analyzer {
        match self {
            Analyzer::H => Analyzer::V,
            Analyzer::V => Analyzer::H,
            Analyzer::D => Analyzer::A,
            Analyzer::A => Analyzer::D,
            Analyzer::R => Analyzer::L,
            Analyzer::L => Analyzer::R,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Analyzer::H => "H",
            Analyzer::V => "V",
            Analyzer::D => "D",
            Analyzer::A => "A",
            Analyzer::R => "R",
            Analyzer::L => "L",
        }
    }

    pub fn from_label(s: &str) -> Option<Analyzer> {
        Analyzer::ALL.into_iter().find(|a| a.label() == s)
    }
}

/// Analyzer settings for photon 1 and photon 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProjectorSetting {
    pub qubit1: Analyzer,
    pub qubit2: Analyzer,
}

impl ProjectorSetting {
    pub fn new(qubit1: Analyzer, qubit2: Analyzer) -> Self {
        Self { qubit1, qubit2 }
    }

    /// Ket for outcome index `2 * a + b`, where `a` (`b`) is 0 when photon 1
    /// (photon 2) exits the analyzer's "0" port.
    pub fn outcome_ket(&self, outcome: usize) -> Vector<4> {
        let pick = |an: Analyzer, bit: usize| if bit == 0 { an.ket() } else { an.orthogonal().ket() };
        kron_vec(&pick(self.qubit1, outcome >> 1), &pick(self.qubit2, outcome & 1))
    }

    pub fn outcome_kets(&self) -> [Vector<4>; 4] {
        core::array::from_fn(|k| self.outcome_ket(k))
    }
}

/// All 36 pairs of the six cardinal polarizations.
pub fn standard_settings() -> Vec<ProjectorSetting> {
    Analyzer::ALL
        .iter()
        .flat_map(|&a| Analyzer::ALL.iter().map(move |&b| ProjectorSetting::new(a, b)))
        .collect()
}

/// Counts recorded for one analyzer setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub setting: ProjectorSetting,
    /// `[n_00, n_01, n_10, n_11]`.
    pub counts: [u64; 4],
    pub duration_s: f64,
}

impl MeasurementRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Acquisition parameters shared by all settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Acquisition {
    /// Pairs reaching the analyzers per setting, before detector efficiency.
    pub pairs_per_setting: u64,
    pub duration_s: f64,
    pub coincidence_window_ps: f64,
}

impl Acquisition {
    pub fn new(pairs_per_setting: u64) -> Self {
        Self {
            pairs_per_setting,
            duration_s: 1.0,
            coincidence_window_ps: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.pairs_per_setting > 0,
            "pairs_per_setting",
            "positive",
            self.pairs_per_setting as f64,
        )?;
        ensure(self.duration_s > 0.0, "duration_s", "positive", self.duration_s)?;
        ensure(
            self.coincidence_window_ps >= 0.0,
            "coincidence_window_ps",
            "non-negative",
            self.coincidence_window_ps,
        )
    }

    /// Accidental coincidences per setting, split evenly over the four outcomes.
    pub fn accidentals(&self, det: &DetectorSpec) -> f64 {
        det.dark_rate_hz * det.dark_rate_hz * self.coincidence_window_ps * 1e-12 * self.duration_s
    }
}

/// Mean counts per outcome: Born probability times `eta^2` times pairs, plus
/// the uniform accidental floor.
pub fn expected_counts(
    rho: &TwoQubitState,
    settings: &[ProjectorSetting],
    acq: &Acquisition,
    det: &DetectorSpec,
) -> Vec<[f64; 4]> {
    let scale = acq.pairs_per_setting as f64 * det.efficiency * det.efficiency;
    let floor = acq.accidentals(det) / 4.0;
    settings
        .iter()
        .map(|s| s.outcome_kets().map(|k| scale * rho.probability(&k).max(0.0) + floor))
        .collect()
}

/// RNG for task `index` of a seeded computation; independent of scheduling.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        // only for absurdly large means
        Err(_) => libm::round(mean) as u64,
    }
}

/// Poisson-distributed analyzer counts; deterministic for a fixed seed.
pub fn simulate_counts(
    rho: &TwoQubitState,
    settings: &[ProjectorSetting],
    acq: &Acquisition,
    det: &DetectorSpec,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    acq.validate()?;
    det.validate()?;
    Ok(expected_counts(rho, settings, acq, det)
        .iter()
        .zip(settings)
        .enumerate()
        .map(|(k, (mean, &setting))| {
            let mut rng = task_rng(seed, k as u64);
            MeasurementRecord {
                setting,
                counts: mean.map(|m| poisson(m, &mut rng)),
                duration_s: acq.duration_s,
            }
        })
        .collect())
}

/// Expected counts rounded to integers, for noise-free reconstruction checks.
pub fn noise_free_records(
    rho: &TwoQubitState,
    settings: &[ProjectorSetting],
    acq: &Acquisition,
    det: &DetectorSpec,
) -> Result<Vec<MeasurementRecord>> {
    acq.validate()?;
    det.validate()?;
    Ok(expected_counts(rho, settings, acq, det)
        .iter()
        .zip(settings)
        .map(|(mean, &setting)| MeasurementRecord {
            setting,
            counts: mean.map(|m| libm::round(m) as u64),
            duration_s: acq.duration_s,
        })
        .collect())
}

/// Stopping rule for the RρR iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    /// Converged when no density-matrix entry moves by more than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep the log-likelihood of every accepted iterate.
    pub record_trace: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            record_trace: false,
        }
    }
}

/// Output of [`mle_reconstruct`].
#[derive(Clone, Debug, PartialEq)]
pub struct MleOutcome {
    pub rho: TwoQubitState,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `rho` is then the best iterate.
    pub converged: bool,
    pub likelihood_trace: Vec<f64>,
}

/// Distinct rank-one projectors with their pooled counts.
struct Likelihood {
    kets: Vec<Vector<4>>,
    counts: Vec<f64>,
    total: f64,
}

impl Likelihood {
    fn from_records(records: &[MeasurementRecord]) -> Result<Self> {
        let mut kets: Vec<Vector<4>> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for rec in records.iter().filter(|r| r.total() > 0) {
            for (outcome, &n) in rec.counts.iter().enumerate() {
                let ket = rec.setting.outcome_ket(outcome);
                let proj = Mat4::projector(&ket);
                match kets.iter().position(|k| Mat4::projector(k).max_abs_diff(&proj) < 1e-12) {
                    Some(i) => counts[i] += n as f64,
                    None => {
                        kets.push(ket);
                        counts.push(n as f64);
                    }
                }
            }
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 || !informationally_complete(&kets) {
            return Err(Error::NotInformationallyComplete);
        }
        Ok(Self { kets, counts, total })
    }

    fn log_likelihood(&self, rho: &Mat4) -> f64 {
        self.kets
            .iter()
            .zip(&self.counts)
            .filter(|(_, &n)| n > 0.0)
            .map(|(k, &n)| n * libm::log(rho.expectation(k).re.max(1e-300)))
            .sum()
    }

    /// `R = (1/N) sum_j n_j / p_j |psi_j><psi_j|`; equals I at an interior optimum.
    fn r_operator(&self, rho: &Mat4) -> Mat4 {
        let mut r = Mat4::zeros();
        for (k, &n) in self.kets.iter().zip(&self.counts) {
            if n == 0.0 {
                continue;
            }
            let p = rho.expectation(k).re.max(1e-300);
            r = r + Mat4::projector(k).scale_re(n / p);
        }
        r.scale_re(1.0 / self.total)
    }
}

/// The projectors span all 16 two-qubit Pauli directions.
fn informationally_complete(kets: &[Vector<4>]) -> bool {
    let paulis: Vec<Mat4> = Pauli::ALL
        .iter()
        .flat_map(|a| Pauli::ALL.iter().map(move |b| a.matrix().kron(&b.matrix())))
        .collect();
    let mut gram = Matrix::<16>::zeros();
    for k in kets {
        let f: [f64; 16] = core::array::from_fn(|i| paulis[i].expectation(k).re);
        for i in 0..16 {
            for j in 0..16 {
                gram.0[i][j] += c(f[i] * f[j], 0.0);
            }
        }
    }
    let ev = eigh(&gram).values;
    ev[0] > 1e-9 * ev[15]
}

const DILUTION_FLOOR: f64 = 1e-12;

/// Maximum-likelihood state from analyzer counts via the diluted RρR iteration.
///
/// Each step tries the plain update `R rho R`. If that lowers the
/// likelihood the step is retried with the diluted map
/// `(I + eps R) rho (I + eps R)`, halving `eps` (starting at 1) until the
/// likelihood no longer drops; the dilution then stays in force.
pub fn mle_reconstruct(records: &[MeasurementRecord], opts: &MleOptions) -> Result<MleOutcome> {
    let lik = Likelihood::from_records(records)?;
    let mut rho = Mat4::identity().scale_re(0.25);
    let mut ll = lik.log_likelihood(&rho);
    let mut eps: Option<f64> = None;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(ll);
    }
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let r = lik.r_operator(&rho);
        let (next, next_ll) = loop {
            let step = match eps {
                None => r,
                Some(e) => Mat4::identity() + r.scale_re(e),
            };
            let cand = step.sandwich(&rho).hermitian_part();
            let cand = cand.scale_re(1.0 / cand.trace().re);
            let cand_ll = lik.log_likelihood(&cand);
            if cand_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                break (Some(cand), cand_ll);
            }
            let e = eps.map_or(1.0, |e| e * 0.5);
            if e < DILUTION_FLOOR {
                break (None, ll);
            }
            eps = Some(e);
        };
        let Some(next) = next else {
            // no ascent direction left at double precision
            converged = true;
            break;
        };
        let change = next.max_abs_diff(&rho);
        rho = next;
        ll = next_ll;
        if opts.record_trace {
            trace.push(ll);
        }
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }

    let rho = project_unit_trace_psd(&rho).unwrap_or_else(|| Mat4::identity().scale_re(0.25));
    Ok(MleOutcome {
        rho: TwoQubitState::from_trusted(rho),
        log_likelihood: ll,
        iterations,
        converged,
        likelihood_trace: trace,
    })
}

/// Concurrence, purity and CHSH value of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub concurrence: f64,
    pub purity: f64,
    pub chsh_s: f64,
}

impl Metrics {
    pub fn of(rho: &TwoQubitState) -> Self {
        Self {
            concurrence: rho.concurrence(),
            purity: rho.purity(),
            chsh_s: rho.chsh_max(),
        }
    }
}

/// Monte-Carlo standard deviations of the derived metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McErrors {
    pub std_concurrence: f64,
    pub std_purity: f64,
    pub std_chsh: f64,
    pub replicates: usize,
    pub failures: usize,
}

/// Poisson resample of every count, using the replicate's own stream.
pub fn resample_records(records: &[MeasurementRecord], seed: u64, replicate: u64) -> Vec<MeasurementRecord> {
    let mut rng = task_rng(seed, replicate);
    records
        .iter()
        .map(|r| MeasurementRecord {
            counts: r.counts.map(|n| poisson(n as f64, &mut rng)),
            ..*r
        })
        .collect()
}

/// Metrics of one Monte-Carlo replicate.
pub fn monte_carlo_replicate(
    records: &[MeasurementRecord],
    seed: u64,
    replicate: u64,
    opts: &MleOptions,
) -> Result<Metrics> {
    let resampled = resample_records(records, seed, replicate);
    Ok(Metrics::of(&mle_reconstruct(&resampled, opts)?.rho))
}

/// Sample standard deviation (n - 1 denominator), shifted by the first
/// sample so identical inputs give exactly zero.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let shift = xs[0];
    let (s1, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - shift;
        (a + d, b + d * d)
    });
    libm::sqrt(((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0))
}

/// Error bars from re-running the reconstruction on Poisson-resampled counts.
///
/// Fails if more than 10% of the replicates cannot be reconstructed.
pub fn monte_carlo_errors(
    records: &[MeasurementRecord],
    replicates: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<McErrors> {
    ensure(replicates >= 2, "replicates", "at least 2", replicates as f64)?;
    let outcomes: Vec<Result<Metrics>> = (0..replicates)
        .map(|r| monte_carlo_replicate(records, seed, r as u64, opts))
        .collect();
    summarize_replicates(&outcomes)
}

/// Reduces per-replicate outcomes (in replicate order) to standard deviations.
pub fn summarize_replicates(outcomes: &[Result<Metrics>]) -> Result<McErrors> {
    let ok: Vec<Metrics> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
    let failures = outcomes.len() - ok.len();
    if failures * 10 > outcomes.len() || ok.len() < 2 {
        return Err(Error::MonteCarloFailures {
            failed: failures,
            total: outcomes.len(),
        });
    }
    let col = |f: fn(&Metrics) -> f64| ok.iter().map(f).collect::<Vec<f64>>();
    Ok(McErrors {
        std_concurrence: sample_std(&col(|m| m.concurrence)),
        std_purity: sample_std(&col(|m| m.purity)),
        std_chsh: sample_std(&col(|m| m.chsh_s)),
        replicates: outcomes.len(),
        failures,
    })
}

/// Full state-tomography summary.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyResult {
    pub rho_hat: TwoQubitState,
    pub concurrence: f64,
    pub purity: f64,
    pub chsh_s: f64,
    pub std_concurrence: f64,
    pub std_purity: f64,
    pub std_chsh: f64,
    pub mc_samples: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Reconstruction plus Monte-Carlo error bars. `mc_replicates = 0` skips the
/// error analysis and reports zero standard deviations.
pub fn reconstruct(
    records: &[MeasurementRecord],
    mc_replicates: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<TomographyResult> {
    let fit = mle_reconstruct(records, opts)?;
    let metrics = Metrics::of(&fit.rho);
    let errors = if mc_replicates == 0 {
        None
    } else {
        Some(monte_carlo_errors(records, mc_replicates, seed, opts)?)
    };
    Ok(TomographyResult {
        rho_hat: fit.rho,
        concurrence: metrics.concurrence,
        purity: metrics.purity,
        chsh_s: metrics.chsh_s,
        std_concurrence: errors.map_or(0.0, |e| e.std_concurrence),
        std_purity: errors.map_or(0.0, |e| e.std_purity),
        std_chsh: errors.map_or(0.0, |e| e.std_chsh),
        mc_samples: mc_replicates,
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

/// Smallest eigenvalue the photon-2 marginal of a reference state may have.
pub const REFERENCE_MARGINAL_TOL: f64 = 1e-9;

/// Recovers the single-photon channel acting on photon 2 from the joint
/// state before (`reference_input`) and after (`rho_joint`) the channel.
///
/// Solves the linear relation
/// `rho_joint = sum_mn chi_mn (I (x) s_m) reference (I (x) s_n)` for chi,
/// then projects the Choi matrix onto the PSD cone and renormalises.
pub fn ancilla_process_tomography(rho_joint: &TwoQubitState, reference_input: &TwoQubitState) -> Result<ChiMatrix> {
    let marginal = reference_input.partial_trace(Side::Second);
    if eigh(marginal.matrix()).min() <= REFERENCE_MARGINAL_TOL {
        return Err(Error::SingularReference);
    }
    let paulis: [Mat4; 4] = Pauli::ALL.map(|p| local_operator(&p.matrix(), Side::Second));
    let mut system = Matrix::<16>::zeros();
    for m in 0..4 {
        for n in 0..4 {
            let image = paulis[m] * *reference_input.matrix() * paulis[n];
            for (row, z) in image.to_row_major().enumerate() {
                system.0[row][4 * m + n] = z;
            }
        }
    }
    let mut rhs = [ZERO; 16];
    for (slot, z) in rhs.iter_mut().zip(rho_joint.matrix().to_row_major()) {
        *slot = z;
    }
    let x = solve(&system, &rhs, 1e-12).ok_or(Error::SingularReference)?;
    let chi = Mat4::from_fn(|m, n| x[4 * m + n]).hermitian_part();
    let choi = ChiMatrix::choi_of(&chi);
    let projected = project_unit_trace_psd(&choi).ok_or(Error::NotCompletelyPositive(f64::NEG_INFINITY))?;
    ChiMatrix::new(ChiMatrix::chi_from_choi_matrix(&projected))
}
