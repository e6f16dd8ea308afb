//! Scenario files: TOML with unit-suffixed keys and named presets.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use entdist_core::photonics::{DetectorSpec, FiberSpec, WavePacket};
use entdist_core::state::werner;
use entdist_core::timebin::{PeakWeights, DEFAULT_WINDOW_FACTOR};
use entdist_core::{ChiMatrix, TwoQubitState};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

const PRESETS_TOML: &str = include_str!("../presets/presets.toml");

/// Machine-readable description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberRef>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timebin: Option<TimebinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyConfig>,
    /// Artifact names to emit; all artifacts of the command when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub state: StateRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_rate_hz: Option<f64>,
    pub wavepacket: WavePacketConfig,
}

/// A source-state preset name or an inline Werner specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRef {
    Preset(String),
    Inline(StateSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub werner_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub werner_purity: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavePacketConfig {
    pub center_wavelength_nm: f64,
    pub spectral_fwhm_nm: f64,
    pub source_sigma_ps: f64,
}

/// A fiber preset name, or an inline table optionally based on a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FiberRef {
    Preset(String),
    Inline(FiberTable),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_index: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion_ps_nm_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation_db_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depolarizing_p: Option<f64>,
    /// Real I-Z off-diagonal of the fiber's process matrix (0 = pure depolarizing).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_iz: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default)]
    pub jitter_sigma_ps: f64,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub dark_rate_hz: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            jitter_sigma_ps: 0.0,
            efficiency: 1.0,
            dark_rate_hz: 0.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_window_factor() -> f64 {
    DEFAULT_WINDOW_FACTOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimebinConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t_ps: Option<f64>,
    #[serde(default = "default_window_factor")]
    pub window_factor: f64,
    /// Early, central and late peak weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_weights: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start_ps: f64,
    pub stop_ps: f64,
    pub step_ps: f64,
    /// Also run simulated tomography at every spacing.
    #[serde(default)]
    pub tomography: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    pub pairs_per_setting: u64,
    #[serde(default)]
    pub mc_replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub duration_s: f64,
    /// Defaults to the time-bin window, or 100 ps without a time-bin stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincidence_window_ps: Option<f64>,
    /// Reconstruct from exact states instead of sampled counts.
    #[serde(default)]
    pub noise_free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub duration_s: f64,
    #[serde(default = "default_bin_width")]
    pub bin_width_ps: f64,
    /// Measured arrival-time offset to report the model against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_difference_us: Option<f64>,
    pub links: Vec<LinkConfig>,
}

fn default_bin_width() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub fiber: FiberRef,
    pub coincidence_rate_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Presets {
    fiber: BTreeMap<String, FiberTable>,
    source: BTreeMap<String, StateSpec>,
}

fn presets() -> &'static Presets {
    static PRESETS: OnceLock<Presets> = OnceLock::new();
    PRESETS.get_or_init(|| toml::from_str(PRESETS_TOML).expect("embedded presets parse"))
}

pub fn fiber_preset_names() -> Vec<&'static str> {
    presets().fiber.keys().map(String::as_str).collect()
}

pub fn source_preset_names() -> Vec<&'static str> {
    presets().source.keys().map(String::as_str).collect()
}

/// A fiber together with its polarization channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub spec: FiberSpec,
    pub chi_iz: f64,
}

impl Link {
    pub fn channel(&self) -> Result<ChiMatrix, ConfigError> {
        let p = self.spec.depolarizing_p;
        let chi = if self.chi_iz == 0.0 {
            ChiMatrix::depolarizing(p)
        } else {
            ChiMatrix::preferred_axis(p, self.chi_iz)
        };
        chi.map_err(|e| ConfigError::Invalid(format!("fiber {}: {e}", self.spec.name)))
    }
}

impl FiberRef {
    pub fn resolve(&self) -> Result<Link, ConfigError> {
        let table = match self {
            FiberRef::Preset(name) => FiberTable {
                preset: Some(name.clone()),
                ..FiberTable::default()
            },
            FiberRef::Inline(t) => t.clone(),
        };
        let base = match &table.preset {
            Some(name) => Some(presets().fiber.get(name).ok_or_else(|| ConfigError::UnknownPreset {
                kind: "fiber",
                name: name.clone(),
                known: fiber_preset_names().join(", "),
            })?),
            None => None,
        };
        let pick = |own: Option<f64>, from_base: fn(&FiberTable) -> Option<f64>, key: &'static str| {
            own.or_else(|| base.and_then(from_base))
                .ok_or(ConfigError::Missing(key))
        };
        let spec = FiberSpec {
            name: table
                .name
                .clone()
                .or_else(|| table.preset.clone())
                .unwrap_or_else(|| "fiber".to_owned()),
            length_km: pick(table.length_km, |b| b.length_km, "fiber.length_km")?,
            group_index: pick(table.group_index, |b| b.group_index, "fiber.group_index")?,
            dispersion_ps_nm_km: pick(
                table.dispersion_ps_nm_km,
                |b| b.dispersion_ps_nm_km,
                "fiber.dispersion_ps_nm_km",
            )?,
            attenuation_db_km: table
                .attenuation_db_km
                .or(base.and_then(|b| b.attenuation_db_km))
                .unwrap_or(0.0),
            excess_loss_db: table
                .excess_loss_db
                .or(base.and_then(|b| b.excess_loss_db))
                .unwrap_or(0.0),
            depolarizing_p: table
                .depolarizing_p
                .or(base.and_then(|b| b.depolarizing_p))
                .unwrap_or(1.0),
        };
        spec.validate()
            .map_err(|e| ConfigError::Invalid(format!("fiber {}: {e}", spec.name)))?;
        let link = Link {
            chi_iz: table.chi_iz.or(base.and_then(|b| b.chi_iz)).unwrap_or(0.0),
            spec,
        };
        link.channel()?;
        Ok(link)
    }
}

impl StateRef {
    pub fn resolve(&self) -> Result<TwoQubitState, ConfigError> {
        let spec = match self {
            StateRef::Preset(name) => StateSpec {
                preset: Some(name.clone()),
                ..StateSpec::default()
            },
            StateRef::Inline(s) => s.clone(),
        };
        let base = match &spec.preset {
            Some(name) => Some(presets().source.get(name).ok_or_else(|| ConfigError::UnknownPreset {
                kind: "source",
                name: name.clone(),
                known: source_preset_names().join(", "),
            })?),
            None => None,
        };
        let v = match (spec.werner_v, spec.werner_purity) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "source.state: give werner_v or werner_purity, not both".into(),
                ))
            }
            (Some(v), None) => v,
            (None, Some(g)) => werner_v_for_purity(g)?,
            (None, None) => match base {
                Some(b) => match (b.werner_v, b.werner_purity) {
                    (Some(v), _) => v,
                    (None, Some(g)) => werner_v_for_purity(g)?,
                    (None, None) => return Err(ConfigError::Missing("source.state.werner_v")),
                },
                None => return Err(ConfigError::Missing("source.state")),
            },
        };
        werner(v).map_err(|e| ConfigError::Invalid(format!("source.state: {e}")))
    }
}

/// Non-negative `v` with `(1 + 3 v^2) / 4 = purity`.
pub fn werner_v_for_purity(purity: f64) -> Result<f64, ConfigError> {
    if !(0.25..=1.0).contains(&purity) {
        return Err(ConfigError::Invalid(format!(
            "werner_purity must lie in [0.25, 1], got {purity}"
        )));
    }
    Ok(((4.0 * purity - 1.0) / 3.0).sqrt())
}

impl WavePacketConfig {
    pub fn resolve(&self) -> Result<WavePacket, ConfigError> {
        WavePacket::new(self.center_wavelength_nm, self.spectral_fwhm_nm, self.source_sigma_ps)
            .map_err(|e| ConfigError::Invalid(format!("source.wavepacket: {e}")))
    }
}

impl DetectorConfig {
    pub fn resolve(&self) -> Result<DetectorSpec, ConfigError> {
        let d = DetectorSpec {
            jitter_sigma_ps: self.jitter_sigma_ps,
            efficiency: self.efficiency,
            dark_rate_hz: self.dark_rate_hz,
        };
        d.validate()
            .map_err(|e| ConfigError::Invalid(format!("detector: {e}")))?;
        Ok(d)
    }
}

impl TimebinConfig {
    pub fn weights(&self) -> Result<PeakWeights, ConfigError> {
        let w = match self.peak_weights {
            Some([early, central, late]) => PeakWeights { early, central, late },
            None => PeakWeights::default(),
        };
        w.validate()
            .map_err(|e| ConfigError::Invalid(format!("timebin.peak_weights: {e}")))?;
        Ok(w)
    }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let scenario: Scenario = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical JSON form; unchanged by TOML re-serialization.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Checks that everything present resolves; stage-specific requirements
    /// are checked when a stage runs.
    // negated comparisons so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.source.state.resolve()?;
        self.source.wavepacket.resolve()?;
        self.detector.resolve()?;
        if let Some(f) = &self.fiber {
            f.resolve()?;
        }
        if let Some(rate) = self.source.pair_rate_hz {
            if !(rate >= 0.0) {
                return Err(ConfigError::Invalid("source.pair_rate_hz must be non-negative".into()));
            }
        }
        if let Some(tb) = &self.timebin {
            tb.weights()?;
            if !(tb.window_factor > 0.0) {
                return Err(ConfigError::Invalid("timebin.window_factor must be positive".into()));
            }
            if let Some(dt) = tb.delta_t_ps {
                if !(dt >= 0.0) {
                    return Err(ConfigError::Invalid("timebin.delta_t_ps must be non-negative".into()));
                }
            }
            if let Some(sw) = &tb.sweep {
                if !(sw.step_ps > 0.0) {
                    return Err(ConfigError::Invalid("timebin.sweep.step_ps must be positive".into()));
                }
                if !(sw.start_ps >= 0.0 && sw.stop_ps >= sw.start_ps) {
                    return Err(ConfigError::Invalid(
                        "timebin.sweep needs 0 <= start_ps <= stop_ps".into(),
                    ));
                }
            }
        }
        if let Some(t) = &self.tomography {
            if t.pairs_per_setting == 0 {
                return Err(ConfigError::Invalid(
                    "tomography.pairs_per_setting must be positive".into(),
                ));
            }
            if t.mc_replicates == 1 {
                return Err(ConfigError::Invalid(
                    "tomography.mc_replicates must be 0 or at least 2".into(),
                ));
            }
            if !(t.duration_s > 0.0) {
                return Err(ConfigError::Invalid("tomography.duration_s must be positive".into()));
            }
            if let Some(w) = t.coincidence_window_ps {
                if !(w >= 0.0) {
                    return Err(ConfigError::Invalid(
                        "tomography.coincidence_window_ps must be non-negative".into(),
                    ));
                }
            }
        }
        if let Some(l) = &self.latency {
            for link in &l.links {
                link.fiber.resolve()?;
                if !(link.coincidence_rate_hz >= 0.0) {
                    return Err(ConfigError::Invalid(
                        "latency coincidence_rate_hz must be non-negative".into(),
                    ));
                }
            }
            if !(l.duration_s > 0.0 && l.bin_width_ps > 0.0) {
                return Err(ConfigError::Invalid(
                    "latency.duration_s and latency.bin_width_ps must be positive".into(),
                ));
            }
        }
        if let Some(outputs) = &self.outputs {
            for name in outputs {
                if !crate::runner::ALL_ARTIFACTS.contains(&name.as_str()) {
                    return Err(ConfigError::Invalid(format!(
                        "unknown output {name:?}; known: {}",
                        crate::runner::ALL_ARTIFACTS.join(", ")
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn require_fiber(&self) -> Result<Link, ConfigError> {
        self.fiber.as_ref().ok_or(ConfigError::Missing("fiber"))?.resolve()
    }

    pub fn require_tomography(&self) -> Result<&TomographyConfig, ConfigError> {
        self.tomography.as_ref().ok_or(ConfigError::Missing("tomography"))
    }

    pub fn require_timebin(&self) -> Result<&TimebinConfig, ConfigError> {
        self.timebin.as_ref().ok_or(ConfigError::Missing("timebin"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NANF: &str = r#"
        [source]
        state = "werner-fit"
        [source.wavepacket]
        center_wavelength_nm = 1550.0
        spectral_fwhm_nm = 0.859
        source_sigma_ps = 21.1
        [fiber]
        preset = "NANF-7.72"
        chi_iz = 0.02
    "#;

    #[test]
    fn presets_parse() {
        assert_eq!(fiber_preset_names(), ["NANF-7.72", "SMF28-7.8"]);
        let nanf = FiberRef::Preset("NANF-7.72".into()).resolve().unwrap();
        assert_eq!(nanf.spec.length_km, 7.72);
        assert!((nanf.spec.link_loss_db() - 8.2).abs() < 1e-3);
        let smf = FiberRef::Preset("SMF28-7.8".into()).resolve().unwrap();
        assert_eq!(smf.spec.depolarizing_p, 1.0);
    }

    #[test]
    fn inline_overrides_preset() {
        let s = Scenario::from_toml_str(NANF).unwrap();
        let link = s.require_fiber().unwrap();
        assert_eq!(link.spec.name, "NANF-7.72");
        assert_eq!(link.chi_iz, 0.02);
        assert_eq!(link.spec.depolarizing_p, 0.94);
    }

    #[test]
    fn werner_fit_purity() {
        let rho = StateRef::Preset("werner-fit".into()).resolve().unwrap();
        assert!((rho.purity() - 0.949).abs() < 1e-12);
        let v = werner_v_for_purity(0.949).unwrap();
        assert!((v - 0.9654).abs() < 1e-4);
    }

    #[test]
    fn errors_are_config_errors() {
        let bad = NANF.replace("NANF-7.72", "HCF-1");
        assert!(matches!(
            Scenario::from_toml_str(&bad),
            Err(ConfigError::UnknownPreset { kind: "fiber", .. })
        ));
        let bad = NANF.replace("source_sigma_ps", "source_sigma");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ConfigError::Parse(_))));
        let sweep = format!("{NANF}\n[timebin.sweep]\nstart_ps = 0.0\nstop_ps = 520.0\nstep_ps = 0.0\n");
        assert!(matches!(Scenario::from_toml_str(&sweep), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn hash_survives_reserialization() {
        let s = Scenario::from_toml_str(NANF).unwrap();
        let again = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.sha256(), again.sha256());
        let mut other = s.clone();
        other.name = Some("x".into());
        assert_ne!(s.sha256(), other.sha256());
    }
}
