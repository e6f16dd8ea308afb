//! Overlapping time-bin model for passive time-bin to polarization
//! conversion.
//!
//! After recombination the photon-2 arrival histogram has three peaks at
//! `-dt`, `0`, `+dt`. Coincidences are taken in a window `[-w, w]` around
//! the central peak. Side-peak events falling inside the window register as
//! `|HH>` or `|VV>` errors, so the post-selected state is
//!
//! `rho' = N[eps0 |HH><HH| + eps1 |VV><VV| + eps' rho_in]`
//!
//! with each `eps` the Gaussian mass of the corresponding peak inside the
//! window. The Gaussians are normalised, and the mixture is renormalised to
//! unit trace.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{ensure, Result};
use crate::linalg::Mat4;
use crate::state::{product_ket, TwoQubitState, KET_H, KET_V};

pub const DEFAULT_WINDOW_FACTOR: f64 = 3.0;

/// Time-bin spacing, peak width and coincidence window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBinConfig {
    pub delta_t_ps: f64,
    /// Standard deviation of each arrival peak after fiber and detection.
    pub sigma_ps: f64,
    /// Half-width of the coincidence window in units of `sigma_ps`.
    pub window_factor: f64,
}

impl TimeBinConfig {
    pub fn new(delta_t_ps: f64, sigma_ps: f64, window_factor: f64) -> Result<Self> {
        let cfg = Self {
            delta_t_ps,
            sigma_ps,
            window_factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_default_window(delta_t_ps: f64, sigma_ps: f64) -> Result<Self> {
        Self::new(delta_t_ps, sigma_ps, DEFAULT_WINDOW_FACTOR)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.delta_t_ps >= 0.0, "delta_t_ps", "non-negative", self.delta_t_ps)?;
        ensure(self.sigma_ps > 0.0, "sigma_ps", "positive", self.sigma_ps)?;
        ensure(
            self.window_factor > 0.0,
            "window_factor",
            "positive",
            self.window_factor,
        )
    }

    pub fn window_ps(&self) -> f64 {
        self.window_factor * self.sigma_ps
    }
}

/// Relative intensities of the early, central and late recombination peaks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakWeights {
    pub early: f64,
    pub central: f64,
    pub late: f64,
}

impl Default for PeakWeights {
    /// Balanced passive recombination: 1/4, 1/2, 1/4.
    fn default() -> Self {
        Self {
            early: 0.25,
            central: 0.5,
            late: 0.25,
        }
    }
}

impl PeakWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("early", self.early), ("central", self.central), ("late", self.late)] {
            ensure(w >= 0.0, name, "non-negative", w)?;
        }
        let sum = self.early + self.central + self.late;
        ensure(sum > 0.0, "peak weight sum", "positive", sum)
    }
}

/// Probabilities that the early, late and central peaks land in the window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowProbabilities {
    /// `eps0`, peak at `-dt` (registers as |HH>).
    pub early: f64,
    /// `eps1`, peak at `+dt` (registers as |VV>).
    pub late: f64,
    /// `eps'`, the coherent central peak.
    pub central: f64,
}

/// Mass of `N(offset, sigma)` inside `[-w, w]`, written with `erfc` of
/// non-negative arguments so tails far below 1e-16 keep full relative precision.
fn window_mass(offset: f64, sigma: f64, w: f64) -> f64 {
    let d = offset.abs();
    let s = sigma * SQRT_2;
    if d <= w {
        // the window contains the peak centre
        1.0 - 0.5 * libm::erfc((w - d) / s) - 0.5 * libm::erfc((w + d) / s)
    } else {
        0.5 * (libm::erfc((d - w) / s) - libm::erfc((d + w) / s))
    }
}

pub fn window_probabilities(cfg: &TimeBinConfig) -> WindowProbabilities {
    let w = cfg.window_ps();
    let side = window_mass(cfg.delta_t_ps, cfg.sigma_ps, w);
    WindowProbabilities {
        early: side,
        late: side,
        central: window_mass(0.0, cfg.sigma_ps, w),
    }
}

/// Post-selected two-qubit state including side-peak error counts.
pub fn effective_state(rho_in: &TwoQubitState, cfg: &TimeBinConfig) -> TwoQubitState {
    let eps = window_probabilities(cfg);
    let hh = Mat4::projector(&product_ket(&KET_H, &KET_H));
    let vv = Mat4::projector(&product_ket(&KET_V, &KET_V));
    let m = hh.scale_re(eps.early) + vv.scale_re(eps.late) + rho_in.matrix().scale_re(eps.central);
    TwoQubitState::normalized(m)
}

/// One row of a time-bin spacing sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub delta_t_ps: f64,
    pub concurrence: f64,
    pub purity: f64,
    pub chsh_s: f64,
}

impl SweepRow {
    pub fn from_state(delta_t_ps: f64, rho: &TwoQubitState) -> Self {
        Self {
            delta_t_ps,
            concurrence: rho.concurrence(),
            purity: rho.purity(),
            chsh_s: rho.chsh_max(),
        }
    }
}

/// Concurrence, purity and CHSH value of the effective state for each spacing.
pub fn sweep_concurrence_purity(
    rho_in: &TwoQubitState,
    sigma_ps: f64,
    window_factor: f64,
    dt_list: &[f64],
) -> Result<Vec<SweepRow>> {
    dt_list
        .iter()
        .map(|&dt| {
            let cfg = TimeBinConfig::new(dt, sigma_ps, window_factor)?;
            Ok(SweepRow::from_state(dt, &effective_state(rho_in, &cfg)))
        })
        .collect()
}

/// `start, start + step, ...` up to and including `stop` (within half a step).
pub fn spacing_grid(start_ps: f64, stop_ps: f64, step_ps: f64) -> Result<Vec<f64>> {
    ensure(step_ps > 0.0, "sweep step", "positive", step_ps)?;
    ensure(stop_ps >= start_ps, "sweep stop", "at least start", stop_ps)?;
    let n = libm::floor((stop_ps - start_ps) / step_ps + 1e-9) as usize;
    Ok((0..=n).map(|k| start_ps + k as f64 * step_ps).collect())
}

/// Smallest spacing from which every larger spacing keeps
/// `C >= fraction * C_plateau`, with the plateau taken at the largest spacing.
pub fn drop_onset(rows: &[SweepRow], fraction: f64) -> Option<f64> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.delta_t_ps.total_cmp(&b.delta_t_ps));
    let plateau = sorted.last()?.concurrence;
    let threshold = fraction * plateau;
    let mut onset = None;
    for row in sorted.iter().rev() {
        if row.concurrence >= threshold {
            onset = Some(row.delta_t_ps);
        } else {
            break;
        }
    }
    onset
}

/// First spacing at which `C` reaches `fraction * C_plateau`, linearly
/// interpolated between grid points; plateau at the largest spacing.
pub fn threshold_crossing(rows: &[SweepRow], fraction: f64) -> Option<f64> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.delta_t_ps.total_cmp(&b.delta_t_ps));
    let threshold = fraction * sorted.last()?.concurrence;
    if sorted[0].concurrence >= threshold {
        return Some(sorted[0].delta_t_ps);
    }
    sorted.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.concurrence < threshold && b.concurrence >= threshold).then(|| {
            let t = (threshold - a.concurrence) / (b.concurrence - a.concurrence);
            a.delta_t_ps + t * (b.delta_t_ps - a.delta_t_ps)
        })
    })
}

fn gaussian_pdf(t: f64, mu: f64, sigma: f64) -> f64 {
    let z = (t - mu) / sigma;
    libm::exp(-0.5 * z * z) / (libm::sqrt(2.0 * PI) * sigma)
}

/// Weighted sum of the three arrival peaks evaluated on `t_grid` (ps).
pub fn three_peak_profile(cfg: &TimeBinConfig, weights: &PeakWeights, t_grid: &[f64]) -> Vec<f64> {
    t_grid
        .iter()
        .map(|&t| {
            weights.early * gaussian_pdf(t, -cfg.delta_t_ps, cfg.sigma_ps)
                + weights.central * gaussian_pdf(t, 0.0, cfg.sigma_ps)
                + weights.late * gaussian_pdf(t, cfg.delta_t_ps, cfg.sigma_ps)
        })
        .collect()
}

/// Number of strict interior local maxima.
pub fn count_local_maxima(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2]).count()
}
