//! Result rows and their CSV/JSON encodings.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "trial,step,m,n,error_l2,error_linf,cond,kappa,wall_time_ms";
const CONFIG_PREFIX: &str = "# config=";
const FAILURE_PREFIX: &str = "# failure=";

/// One solve: a step of an adaptive trace or one entry of a CS schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub trial: usize,
    pub step: usize,
    pub m: usize,
    pub n: usize,
    #[serde(with = "lenient_f64")]
    pub error_l2: f64,
    #[serde(with = "lenient_f64")]
    pub error_linf: f64,
    #[serde(with = "lenient_f64")]
    pub cond: f64,
    #[serde(with = "lenient_f64")]
    pub kappa: f64,
    pub wall_time_ms: f64,
}

/// The error that stopped a trial, or one CS solve, at `step`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub step: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Sorted by `(trial, step)`.
    pub rows: Vec<RecordRow>,
    pub failures: Vec<TrialFailure>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format `{s}`"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl ExperimentOutput {
    /// True when every trial recorded at least one failure.
    pub fn all_trials_failed(&self) -> bool {
        (0..self.config.trials).all(|t| self.failures.iter().any(|f| f.trial == t))
    }

    pub fn trial_rows(&self, trial: usize) -> impl Iterator<Item = &RecordRow> + '_ {
        self.rows.iter().filter(move |r| r.trial == trial)
    }

    /// A `# config=` line, the header, one line per row, then one
    /// `# failure=` line per failure.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CONFIG_PREFIX}{}", self.config.to_json()?)?;
        let mut body = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        body.write_record(CSV_HEADER.split(','))
            .map_err(csv_error)?;
        for row in &self.rows {
            body.serialize(row).map_err(csv_error)?;
        }
        let bytes = body.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(&bytes)?;
        for f in &self.failures {
            writeln!(w, "{FAILURE_PREFIX}{}", serde_json::to_string(f)?)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut config = None;
        let mut failures = Vec::new();
        let mut body = String::new();
        for line in BufReader::new(r).lines() {
            let line = line?;
            if let Some(json) = line.strip_prefix(CONFIG_PREFIX) {
                config = Some(ExperimentConfig::from_json(json)?);
            } else if let Some(json) = line.strip_prefix(FAILURE_PREFIX) {
                failures.push(serde_json::from_str(json)?);
            } else if !line.starts_with('#') {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let config = config.ok_or_else(|| Error::Format("missing config line".into()))?;
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let header = reader.headers().map_err(csv_error)?;
        if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(Error::Format(format!("unexpected CSV header `{}`", header.iter().collect::<Vec<_>>().join(","))));
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<RecordRow>, _>>()
            .map_err(csv_error)?;
        Ok(Self { config, rows, failures })
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    pub fn write<W: Write>(&self, w: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => self.write_json(w),
        }
    }

    pub fn to_bytes(&self, format: OutputFormat) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write(&mut out, format)?;
        Ok(out)
    }

    pub fn save(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w, format)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, format: OutputFormat) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        match format {
            OutputFormat::Csv => Self::read_csv(file),
            OutputFormat::Json => Self::read_json(file),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Floats that may be infinite or NaN. Non-finite values are written as the
/// strings `inf`, `-inf` and `NaN`, so JSON stays valid.
mod lenient_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or one of inf, -inf, NaN")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                v.parse().map_err(|_| E::custom(format!("not a float: `{v}`")))
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighted_ls::AlsSampling;

    fn sample_output() -> ExperimentOutput {
        let mut config = ExperimentConfig::als("f1", 3, AlsSampling::NearOptimal, 300);
        config.seed = 12345;
        let rows = vec![
            RecordRow {
                trial: 0,
                step: 0,
                m: 2,
                n: 1,
                error_l2: 0.25,
                error_linf: 0.5,
                cond: 1.0,
                kappa: 1.0,
                wall_time_ms: 0.0,
            },
            RecordRow {
                trial: 0,
                step: 1,
                m: 5,
                n: 3,
                error_l2: 1.0 / 3.0,
                error_linf: 1e-300,
                cond: f64::INFINITY,
                kappa: 7.0,
                wall_time_ms: 12.5,
            },
        ];
        let failures = vec![TrialFailure {
            trial: 1,
            step: 0,
            message: "degenerate, with \"quotes\"".into(),
        }];
        ExperimentOutput { config, rows, failures }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut out = sample_output();
        out.rows.clear();
        out.failures.clear();
        let text = String::from_utf8(out.to_bytes(OutputFormat::Csv).unwrap()).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec![CSV_HEADER]);
        assert!(text.starts_with("# config={"));
        assert!(text.contains("\"seed\":12345"));
        assert_eq!(ExperimentOutput::read_csv(text.as_bytes()).unwrap(), out);
    }

    #[test]
    fn round_trips() {
        let out = sample_output();
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let bytes = out.to_bytes(format).unwrap();
            let back = match format {
                OutputFormat::Csv => ExperimentOutput::read_csv(&bytes[..]).unwrap(),
                OutputFormat::Json => ExperimentOutput::read_json(&bytes[..]).unwrap(),
            };
            assert_eq!(back, out, "{format}");
            assert_eq!(back.rows[1].error_l2.to_bits(), (1.0f64 / 3.0).to_bits());
        }
    }

    #[test]
    fn json_echoes_config() {
        let text = String::from_utf8(sample_output().to_bytes(OutputFormat::Json).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["config"]["seed"], 12345);
        assert_eq!(v["rows"][1]["cond"], "inf");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentOutput::read_csv(&b"trial,step\n"[..]).is_err());
        let out = sample_output();
        let text = String::from_utf8(out.to_bytes(OutputFormat::Csv).unwrap()).unwrap();
        let broken = text.replace(CSV_HEADER, "trial,step,m");
        assert!(ExperimentOutput::read_csv(broken.as_bytes()).is_err());
    }

    #[test]
    fn failure_accounting() {
        let mut out = sample_output();
        out.config.trials = 2;
        assert!(!out.all_trials_failed());
        out.failures.push(TrialFailure {
            trial: 0,
            step: 2,
            message: "x".into(),
        });
        assert!(out.all_trials_failed());
    }
}
