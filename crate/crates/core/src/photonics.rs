//! Pulse-propagation arithmetic for a fiber link: spectral and temporal
//! widths, chromatic-dispersion broadening, latency and loss.
//!
//! Units are carried in names: `_nm`, `_ps`, `_km`, `_us`, `_db`.

use alloc::string::String;

use crate::error::{ensure, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Time-bandwidth product of a transform-limited Gaussian (FWHM quantities).
pub const GAUSSIAN_TIME_BANDWIDTH: f64 = 0.441;

/// `2 sqrt(2 ln 2)`, the Gaussian FWHM / standard-deviation ratio.
pub fn fwhm_per_sigma() -> f64 {
    2.0 * libm::sqrt(2.0 * core::f64::consts::LN_2)
}

pub fn fwhm_to_sigma(fwhm: f64) -> Result<f64> {
    ensure(fwhm > 0.0, "FWHM", "positive", fwhm)?;
    Ok(fwhm / fwhm_per_sigma())
}

pub fn sigma_to_fwhm(sigma: f64) -> Result<f64> {
    ensure(sigma > 0.0, "sigma", "positive", sigma)?;
    Ok(sigma * fwhm_per_sigma())
}

/// Photon wave packet emitted by the source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavePacket {
    pub center_wavelength_nm: f64,
    pub spectral_fwhm_nm: f64,
    /// Standard deviation of the arrival-time peak measured straight from the
    /// source; includes the detection-system jitter.
    pub source_sigma_ps: f64,
}

impl WavePacket {
    pub fn new(center_wavelength_nm: f64, spectral_fwhm_nm: f64, source_sigma_ps: f64) -> Result<Self> {
        let wp = Self {
            center_wavelength_nm,
            spectral_fwhm_nm,
            source_sigma_ps,
        };
        wp.validate()?;
        Ok(wp)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.center_wavelength_nm > 0.0,
            "center_wavelength_nm",
            "positive",
            self.center_wavelength_nm,
        )?;
        ensure(
            self.spectral_fwhm_nm > 0.0,
            "spectral_fwhm_nm",
            "positive",
            self.spectral_fwhm_nm,
        )?;
        ensure(
            self.source_sigma_ps > 0.0,
            "source_sigma_ps",
            "positive",
            self.source_sigma_ps,
        )
    }

    pub fn spectral_sigma_nm(&self) -> f64 {
        self.spectral_fwhm_nm / fwhm_per_sigma()
    }

    /// FWHM coherence time of a transform-limited Gaussian, in ps.
    pub fn coherence_time_ps(&self) -> f64 {
        let lambda_m = self.center_wavelength_nm * 1e-9;
        let bandwidth_hz = SPEED_OF_LIGHT * self.spectral_fwhm_nm * 1e-9 / (lambda_m * lambda_m);
        GAUSSIAN_TIME_BANDWIDTH / bandwidth_hz * 1e12
    }
}

/// Scalar description of a fiber link at its operating wavelength.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSpec {
    pub name: String,
    pub length_km: f64,
    pub group_index: f64,
    /// Chromatic dispersion `D`, ps/(nm km).
    pub dispersion_ps_nm_km: f64,
    pub attenuation_db_km: f64,
    /// Splice and coupling losses.
    pub excess_loss_db: f64,
    /// Identity weight of the fiber's polarization channel (1 = no depolarization).
    pub depolarizing_p: f64,
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.length_km >= 0.0, "length_km", "non-negative", self.length_km)?;
        ensure(self.group_index >= 1.0, "group_index", "at least 1", self.group_index)?;
        ensure(
            self.dispersion_ps_nm_km >= 0.0,
            "dispersion_ps_nm_km",
            "non-negative",
            self.dispersion_ps_nm_km,
        )?;
        ensure(
            self.attenuation_db_km >= 0.0,
            "attenuation_db_km",
            "non-negative",
            self.attenuation_db_km,
        )?;
        ensure(
            self.excess_loss_db >= 0.0,
            "excess_loss_db",
            "non-negative",
            self.excess_loss_db,
        )?;
        ensure(
            (0.0..=1.0).contains(&self.depolarizing_p),
            "depolarizing_p",
            "in [0, 1]",
            self.depolarizing_p,
        )
    }

    /// Group delay `z n_g / c` in microseconds.
    pub fn propagation_delay_us(&self) -> f64 {
        self.length_km * 1e3 * self.group_index / SPEED_OF_LIGHT * 1e6
    }

    /// Dispersive broadening `D dlambda z` (standard deviation, ps) for a
    /// spectral standard deviation in nm.
    pub fn dispersion_broadening_ps(&self, spectral_sigma_nm: f64) -> f64 {
        dispersion_broadening_ps(self.dispersion_ps_nm_km, spectral_sigma_nm, self.length_km)
    }

    pub fn link_loss_db(&self) -> f64 {
        self.attenuation_db_km * self.length_km + self.excess_loss_db
    }

    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.link_loss_db())
    }

    /// Arrival-peak width after the fiber: dispersion combined with the source width.
    pub fn output_sigma_ps(&self, wp: &WavePacket) -> f64 {
        combined_sigma_ps(
            self.dispersion_broadening_ps(wp.spectral_sigma_nm()),
            wp.source_sigma_ps,
        )
    }
}

pub fn dispersion_broadening_ps(dispersion_ps_nm_km: f64, spectral_sigma_nm: f64, length_km: f64) -> f64 {
    dispersion_ps_nm_km * spectral_sigma_nm * length_km
}

/// Root-sum-square of two independent timing spreads.
pub fn combined_sigma_ps(broadening_ps: f64, source_sigma_ps: f64) -> f64 {
    libm::hypot(broadening_ps, source_sigma_ps)
}

pub fn db_to_transmittance(loss_db: f64) -> f64 {
    libm::pow(10.0, -loss_db / 10.0)
}

pub fn transmittance_to_db(t: f64) -> f64 {
    -10.0 * libm::log10(t)
}

/// Detector characteristics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorSpec {
    pub jitter_sigma_ps: f64,
    pub efficiency: f64,
    pub dark_rate_hz: f64,
}

impl DetectorSpec {
    pub fn ideal() -> Self {
        Self {
            jitter_sigma_ps: 0.0,
            efficiency: 1.0,
            dark_rate_hz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.jitter_sigma_ps >= 0.0,
            "jitter_sigma_ps",
            "non-negative",
            self.jitter_sigma_ps,
        )?;
        ensure(
            (0.0..=1.0).contains(&self.efficiency),
            "efficiency",
            "in [0, 1]",
            self.efficiency,
        )?;
        ensure(
            self.dark_rate_hz >= 0.0,
            "dark_rate_hz",
            "non-negative",
            self.dark_rate_hz,
        )
    }
}
