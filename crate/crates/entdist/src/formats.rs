//! On-disk schemas. JSON floats are written as `{:.16e}` (17 significant
//! digits, exact round trip); CSV floats use the shortest exact form.

use std::io;

use entdist_core::linalg::{c, Mat4};
use entdist_core::tomography::{Analyzer, MeasurementRecord, ProjectorSetting};
use entdist_core::{ChiMatrix, TwoQubitState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::RunError;

/// Pretty JSON with fixed-width scientific floats; non-finite values become `null`.
pub struct Sig17<'a>(PrettyFormatter<'a>);

impl Default for Sig17<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17::default());
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

pub fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, RunError> {
    serde_json::from_slice(bytes).map_err(|e| RunError::Format(e.to_string()))
}

/// `{"dim": N, "entries": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_mat4(m: &Mat4) -> Self {
        Self {
            dim: 4,
            entries: m.to_row_major().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_mat4(&self) -> Result<Mat4, RunError> {
        if self.dim != 4 || self.entries.len() != 16 {
            return Err(RunError::Format(format!(
                "expected a 4x4 matrix, got dim {} with {} entries",
                self.dim,
                self.entries.len()
            )));
        }
        Ok(Mat4::from_fn(|i, j| {
            let [re, im] = self.entries[4 * i + j];
            c(re, im)
        }))
    }
}

pub fn density_to_json(rho: &TwoQubitState) -> Vec<u8> {
    to_json(&MatrixJson::from_mat4(rho.matrix()))
}

pub fn density_from_json(bytes: &[u8]) -> Result<TwoQubitState, RunError> {
    let m: MatrixJson = from_json(bytes)?;
    Ok(TwoQubitState::new(m.to_mat4()?)?)
}

pub const PAULI_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

/// Process matrix with its operator basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiJson {
    pub basis: Vec<String>,
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

pub fn chi_to_json(chi: &ChiMatrix) -> Vec<u8> {
    let m = MatrixJson::from_mat4(chi.matrix());
    to_json(&ChiJson {
        basis: PAULI_LABELS.iter().map(|s| s.to_string()).collect(),
        dim: m.dim,
        entries: m.entries,
    })
}

pub fn chi_from_json(bytes: &[u8]) -> Result<ChiMatrix, RunError> {
    let j: ChiJson = from_json(bytes)?;
    if j.basis != PAULI_LABELS {
        return Err(RunError::Format(format!("unsupported chi basis {:?}", j.basis)));
    }
    let m = MatrixJson {
        dim: j.dim,
        entries: j.entries,
    }
    .to_mat4()?;
    Ok(ChiMatrix::new(m)?)
}

/// Tabular outputs can be written as CSV or as a JSON array of rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

pub fn write_table<T: Serialize>(rows: &[T], format: TableFormat) -> Vec<u8> {
    match format {
        TableFormat::Json => to_json(rows),
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).expect("in-memory CSV serialization");
            }
            w.into_inner().expect("in-memory CSV flush")
        }
    }
}

pub fn read_table<T: DeserializeOwned>(bytes: &[u8], format: TableFormat) -> Result<Vec<T>, RunError> {
    match format {
        TableFormat::Json => from_json(bytes),
        TableFormat::Csv => csv::Reader::from_reader(bytes)
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| RunError::Format(e.to_string())),
    }
}

/// Counts for one analyzer setting; outcome bit 0 is the analyzer's own state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub setting_q1: String,
    pub setting_q2: String,
    pub n_00: u64,
    pub n_01: u64,
    pub n_10: u64,
    pub n_11: u64,
    pub duration_s: f64,
}

impl From<&MeasurementRecord> for RecordRow {
    fn from(r: &MeasurementRecord) -> Self {
        let [n_00, n_01, n_10, n_11] = r.counts;
        Self {
            setting_q1: r.setting.qubit1.label().to_owned(),
            setting_q2: r.setting.qubit2.label().to_owned(),
            n_00,
            n_01,
            n_10,
            n_11,
            duration_s: r.duration_s,
        }
    }
}

impl TryFrom<&RecordRow> for MeasurementRecord {
    type Error = RunError;

    fn try_from(r: &RecordRow) -> Result<Self, RunError> {
        let analyzer = |s: &str| {
            Analyzer::from_label(s).ok_or_else(|| RunError::Format(format!("unknown analyzer setting {s:?}")))
        };
        Ok(MeasurementRecord {
            setting: ProjectorSetting::new(analyzer(&r.setting_q1)?, analyzer(&r.setting_q2)?),
            counts: [r.n_00, r.n_01, r.n_10, r.n_11],
            duration_s: r.duration_s,
        })
    }
}

pub fn records_to_bytes(records: &[MeasurementRecord], format: TableFormat) -> Vec<u8> {
    let rows: Vec<RecordRow> = records.iter().map(RecordRow::from).collect();
    write_table(&rows, format)
}

pub fn records_from_bytes(bytes: &[u8], format: TableFormat) -> Result<Vec<MeasurementRecord>, RunError> {
    read_table::<RecordRow>(bytes, format)?
        .iter()
        .map(MeasurementRecord::try_from)
        .collect()
}

/// One sweep point; `path` is `model` or `tomography`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub delta_t_ps: f64,
    pub concurrence: f64,
    pub purity: f64,
    pub chsh_s: f64,
    pub path: String,
}

/// One arrival-time histogram bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub link: String,
    /// Bin centre, microseconds after emission.
    pub arrival_time_us: f64,
    /// Bin centre relative to the link's group delay, ps.
    pub offset_ps: f64,
    pub counts: u64,
    /// Mean counts predicted by the three-peak model.
    pub expected_counts: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use entdist_core::state::{bell_psi_minus, werner};
    use proptest::prelude::*;

    #[test]
    fn float_format() {
        let bytes = to_json(&[1.0, 0.1, -2.5e-300, f64::NAN]);
        let s = String::from_utf8(bytes).unwrap();
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.contains("null"));
    }

    #[test]
    fn density_round_trip() {
        for rho in [bell_psi_minus(), werner(0.9654).unwrap()] {
            let bytes = density_to_json(&rho);
            let back = density_from_json(&bytes).unwrap();
            assert_eq!(back.matrix(), rho.matrix());
            let parsed: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            assert_eq!(parsed["dim"], 4);
            assert_eq!(parsed["entries"].as_array().unwrap().len(), 16);
        }
        assert!(density_from_json(br#"{"dim":2,"entries":[]}"#).is_err());
    }

    #[test]
    fn chi_round_trip() {
        let chi = ChiMatrix::preferred_axis(0.94, 0.02).unwrap();
        let bytes = chi_to_json(&chi);
        assert_eq!(chi_from_json(&bytes).unwrap(), chi);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["basis"], serde_json::json!(["I", "X", "Y", "Z"]));
    }

    #[test]
    fn records_csv_header() {
        let rec = MeasurementRecord {
            setting: ProjectorSetting::new(Analyzer::D, Analyzer::R),
            counts: [1, 2, 3, 4],
            duration_s: 0.5,
        };
        let bytes = records_to_bytes(&[rec], TableFormat::Csv);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("setting_q1,setting_q2,n_00,n_01,n_10,n_11,duration_s\nD,R,1,2,3,4,0.5\n"));
        assert_eq!(records_from_bytes(&bytes, TableFormat::Csv).unwrap(), [rec]);
        let json = records_to_bytes(&[rec], TableFormat::Json);
        assert_eq!(records_from_bytes(&json, TableFormat::Json).unwrap(), [rec]);
        let bad = text.replace("D,R", "Q,R");
        assert!(records_from_bytes(bad.as_bytes(), TableFormat::Csv).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: Vec<f64> = from_json(&to_json(&[x])).unwrap();
            prop_assert_eq!(back[0].to_bits(), x.to_bits());
            let rows = vec![SweepCsvRow { delta_t_ps: x, concurrence: x, purity: x, chsh_s: x, path: "model".into() }];
            for f in [TableFormat::Csv, TableFormat::Json] {
                let back: Vec<SweepCsvRow> = read_table(&write_table(&rows, f), f).unwrap();
                prop_assert_eq!(back[0].concurrence.to_bits(), x.to_bits());
            }
        }
    }
}
