//! Self-describing model file.
//!
//! ```text
//! evolving-sdf model
//! header_bytes=<N>
//! <N bytes of `key=value` lines>
//! <parameter_count little-endian f64 values>
//! ```
//!
//! The header records the format version, the architecture and training
//! configuration (same keys as the config file), the normalization transform
//! and an optional loss summary. Every float is written in its shortest exact
//! decimal form, so a saved model evaluates bit-identically after loading.

use super::config::{split_pair, FitConfig, CONFIG_KEYS};
use crate::geometry::NormalizationTransform;
use crate::nn::ParameterSet;
use crate::training::{ComponentSummary, HistorySummary, TrainingConfig};
use crate::{Error, Result, TemporalSdfModel, Vec3};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const MAGIC: &str = "evolving-sdf model";
pub const FORMAT_VERSION: u32 = 1;

const LOSS_COMPONENTS: [&str; 6] = ["data_abs", "eikonal_data", "temporal_data", "eikonal_reg", "temporal_reg", "total"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub patient_id: String,
    pub model: TemporalSdfModel,
    /// Training configuration used; its `rng_seed` is the fit's seed.
    pub training: TrainingConfig,
    pub loss_summary: Option<HistorySummary>,
}

fn summary_parts(s: &HistorySummary) -> [&ComponentSummary; 6] {
    [&s.data_abs, &s.eikonal_data, &s.temporal_data, &s.eikonal_reg, &s.temporal_reg, &s.total]
}

impl ModelArtifact {
    pub fn new(patient_id: impl Into<String>, model: TemporalSdfModel, training: TrainingConfig, loss_summary: Option<HistorySummary>) -> Self {
        Self { format_version: FORMAT_VERSION, patient_id: patient_id.into(), model, training, loss_summary }
    }

    fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "format_version={}", self.format_version);
        let _ = writeln!(h, "patient_id={}", escape(&self.patient_id));
        let cfg = FitConfig { mlp: self.model.config().clone(), training: self.training.clone() };
        for key in CONFIG_KEYS {
            let _ = writeln!(h, "{key}={}", cfg.get(key).expect("known key"));
        }
        let tr = self.model.transform();
        let _ = writeln!(h, "center_mm_x={}", tr.center_mm.x);
        let _ = writeln!(h, "center_mm_y={}", tr.center_mm.y);
        let _ = writeln!(h, "center_mm_z={}", tr.center_mm.z);
        let _ = writeln!(h, "scale_mm={}", tr.scale_mm);
        let _ = writeln!(h, "t0_days={}", tr.t0_days);
        let _ = writeln!(h, "time_scale_days={}", tr.time_scale_days);
        if let Some(s) = &self.loss_summary {
            let _ = writeln!(h, "loss_epochs={}", s.epochs);
            for (name, c) in LOSS_COMPONENTS.iter().zip(summary_parts(s)) {
                let _ = writeln!(h, "loss_{name}_min={}", c.min);
                let _ = writeln!(h, "loss_{name}_final={}", c.final_value);
                let _ = writeln!(h, "loss_{name}_epoch_of_min={}", c.epoch_of_min);
            }
        }
        let _ = writeln!(h, "parameter_count={}", self.model.params().len());
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header();
        let flat = self.model.params().to_flat();
        let mut out = format!("{MAGIC}\nheader_bytes={}\n{header}", header.len()).into_bytes();
        out.reserve(flat.len() * 8);
        for v in flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Artifact(m);
        let (magic, rest) = split_line(bytes).ok_or_else(|| bad("missing magic line".into()))?;
        if magic != MAGIC.as_bytes() {
            return Err(bad("not a model file".into()));
        }
        let (len_line, rest) = split_line(rest).ok_or_else(|| bad("missing header length".into()))?;
        let header_len: usize = std::str::from_utf8(len_line)
            .ok()
            .and_then(|l| l.strip_prefix("header_bytes="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("malformed header length line".into()))?;
        if header_len > rest.len() {
            return Err(bad(format!("header declares {header_len} bytes but only {} remain", rest.len())));
        }
        let (header, payload) = rest.split_at(header_len);
        let header = std::str::from_utf8(header).map_err(|_| bad("header is not UTF-8".into()))?;

        let mut fields = BTreeMap::new();
        for line in header.lines() {
            let Some(pair) = split_pair(line) else { continue };
            let (k, v) = pair.map_err(bad)?;
            if fields.insert(k.to_string(), v.to_string()).is_some() {
                return Err(bad(format!("duplicate header key {k:?}")));
            }
        }
        let mut take = |key: &str| fields.remove(key).ok_or_else(|| bad(format!("header lacks {key:?}")));
        let format_version: u32 = parse_field("format_version", &take("format_version")?)?;
        if format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {format_version}")));
        }
        let patient_id = unescape(&take("patient_id")?).ok_or_else(|| bad("malformed patient_id escape".into()))?;
        let mut cfg = FitConfig::default();
        for key in CONFIG_KEYS {
            let value = take(key)?;
            cfg.set(key, &value).map_err(bad)?;
        }
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        let transform = NormalizationTransform {
            center_mm: Vec3::new(
                parse_field("center_mm_x", &take("center_mm_x")?)?,
                parse_field("center_mm_y", &take("center_mm_y")?)?,
                parse_field("center_mm_z", &take("center_mm_z")?)?,
            ),
            scale_mm: parse_field("scale_mm", &take("scale_mm")?)?,
            t0_days: parse_field("t0_days", &take("t0_days")?)?,
            time_scale_days: parse_field("time_scale_days", &take("time_scale_days")?)?,
        };
        let loss_summary = match take("loss_epochs") {
            Err(_) => None,
            Ok(epochs) => {
                let mut parts = Vec::with_capacity(6);
                for name in LOSS_COMPONENTS {
                    let min_key = format!("loss_{name}_min");
                    let final_key = format!("loss_{name}_final");
                    let epoch_key = format!("loss_{name}_epoch_of_min");
                    parts.push(ComponentSummary {
                        min: parse_field(&min_key, &take(&min_key)?)?,
                        final_value: parse_field(&final_key, &take(&final_key)?)?,
                        epoch_of_min: parse_field(&epoch_key, &take(&epoch_key)?)?,
                    });
                }
                Some(HistorySummary {
                    epochs: parse_field("loss_epochs", &epochs)?,
                    data_abs: parts[0],
                    eikonal_data: parts[1],
                    temporal_data: parts[2],
                    eikonal_reg: parts[3],
                    temporal_reg: parts[4],
                    total: parts[5],
                })
            }
        };
        let count: usize = parse_field("parameter_count", &take("parameter_count")?)?;
        if let Some(extra) = fields.keys().next() {
            return Err(bad(format!("unknown header key {extra:?}")));
        }
        if count != cfg.mlp.parameter_count() {
            return Err(bad(format!(
                "header declares {count} parameters but the architecture has {}",
                cfg.mlp.parameter_count()
            )));
        }
        if payload.len() != count * 8 {
            return Err(bad(format!("expected {} parameter bytes, found {}", count * 8, payload.len())));
        }
        let flat: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let params = ParameterSet::from_flat(&cfg.mlp, &flat)?;
        let model = TemporalSdfModel::new(cfg.mlp, params, transform).map_err(|e| bad(e.to_string()))?;
        Ok(Self { format_version, patient_id, model, training: cfg.training, loss_summary })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Artifact(m) => Error::Artifact(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Percent-escapes the characters the header syntax cannot carry verbatim.
fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' | '#' | '\n' | '\r' | ' ' | '\t' => out.push_str(&format!("%{:02X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = Vec::with_capacity(s.len());
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

fn split_line(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = bytes.iter().position(|&b| b == b'\n')?;
    Some((&bytes[..i], &bytes[i + 1..]))
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Artifact(format!("{key}: cannot parse {value:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, MlpConfig};
    use crate::training::loss_history_summary;
    use crate::nn::LossBreakdown;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn artifact() -> ModelArtifact {
        let mlp = MlpConfig::new(3, 16, 2).unwrap();
        let params = init_params(&mlp, 9).unwrap();
        let tr = NormalizationTransform {
            center_mm: Vec3::new(1.25, -3.0, 0.1),
            scale_mm: 55.5,
            t0_days: 51.5,
            time_scale_days: 51.5,
        };
        let model = TemporalSdfModel::new(mlp, params, tr).unwrap();
        let history = vec![
            LossBreakdown { data_abs: 0.3, eikonal_data: 0.2, temporal_data: 0.1, eikonal_reg: 0.1, temporal_reg: 0.0, total: 0.35 },
            LossBreakdown { data_abs: 0.1, eikonal_data: 0.1, temporal_data: 0.1, eikonal_reg: 0.1, temporal_reg: 0.01, total: 0.14 },
        ];
        let training = TrainingConfig { rng_seed: 77, learning_rate: 1e-3, ..Default::default() };
        ModelArtifact::new(" patient #1%\n", model, training, Some(loss_history_summary(&history).unwrap()))
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let a = artifact();
        let b = ModelArtifact::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts: Vec<[f64; 4]> = (0..10_000).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let va = a.model.values(&pts);
        let vb = b.model.values(&pts);
        assert!(va.iter().zip(&vb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn header_is_readable_text() {
        let bytes = artifact().to_bytes();
        let text = String::from_utf8_lossy(&bytes[..200]);
        assert!(text.starts_with("evolving-sdf model\nheader_bytes="));
        assert!(text.contains("format_version=1"));
    }

    #[test]
    fn without_loss_summary() {
        let mut a = artifact();
        a.loss_summary = None;
        assert_eq!(ModelArtifact::from_bytes(&a.to_bytes()).unwrap(), a);
    }

    #[test]
    fn corruption_detected() {
        let bytes = artifact().to_bytes();
        // truncated parameters
        assert!(ModelArtifact::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        // wrong magic
        let mut wrong = bytes.clone();
        wrong[0] = b'E';
        assert!(ModelArtifact::from_bytes(&wrong).is_err());
        // header length beyond the file
        let text = format!("{MAGIC}\nheader_bytes=999999\nformat_version=1\n");
        assert!(ModelArtifact::from_bytes(text.as_bytes()).is_err());
        assert!(ModelArtifact::from_bytes(b"").is_err());
    }

    #[test]
    fn width_change_is_caught_by_count() {
        let bytes = artifact().to_bytes();
        let s = String::from_utf8_lossy(&bytes).replacen("width=16", "width=15", 1);
        // header length shrinks by one byte: rebuild it consistently
        let header_start = s.find("format_version").unwrap();
        let header_end = s.find("parameter_count=").unwrap() + s[s.find("parameter_count=").unwrap()..].find('\n').unwrap() + 1;
        let header = &s[header_start..header_end];
        let mut forged = format!("{MAGIC}\nheader_bytes={}\n{header}", header.len()).into_bytes();
        forged.extend_from_slice(&bytes[bytes.len() - artifact().model.params().len() * 8..]);
        let err = ModelArtifact::from_bytes(&forged).unwrap_err();
        assert!(err.to_string().contains("parameters"), "{err}");
    }
}
