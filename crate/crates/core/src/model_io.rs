//! Trained-model files.
//!
//! A model file is a UTF-8 header of `key: value` lines and
//! `matrix <name> <rows> <cols>` declarations, terminated by an empty line,
//! followed by the declared matrices as little-endian `f64` in row-major
//! order, in declaration order. See `docs/model-format.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::{FeatureKind, Window};
use crate::dwpt_nmf::{BandModel, SubbandBasisModel};
use crate::error::{Error, Result};
use crate::framing::FrameSpec;
use crate::matrix::NonnegMatrix;
use crate::stft_nmf::StftBasisModel;

pub const FORMAT_MAGIC: &str = "subband-nmf-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Stft(StftBasisModel),
    Dwpt(SubbandBasisModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Stft(_) => "stft",
            Model::Dwpt(_) => "dwpt",
        }
    }

    pub fn sample_rate(&self) -> u32 {
        match self {
            Model::Stft(m) => m.sample_rate,
            Model::Dwpt(m) => m.sample_rate,
        }
    }
}

impl From<StftBasisModel> for Model {
    fn from(m: StftBasisModel) -> Self {
        Model::Stft(m)
    }
}

impl From<SubbandBasisModel> for Model {
    fn from(m: SubbandBasisModel) -> Self {
        Model::Dwpt(m)
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

struct Writer {
    header: String,
    matrices: Vec<(String, usize, usize, Vec<f64>)>,
}

impl Writer {
    fn new(kind: &str) -> Self {
        let mut w = Self {
            header: String::new(),
            matrices: Vec::new(),
        };
        w.key("format", FORMAT_MAGIC);
        w.key("format_version", FORMAT_VERSION);
        w.key("model_kind", kind);
        w
    }

    fn key(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.header, "{key}: {value}").expect("writing to a String");
    }

    fn matrix(&mut self, name: String, m: &NonnegMatrix) {
        self.matrices
            .push((name, m.rows(), m.cols(), m.to_row_major()));
    }

    fn into_bytes(mut self) -> Vec<u8> {
        for (name, rows, cols, _) in &self.matrices {
            writeln!(self.header, "matrix {name} {rows} {cols}").expect("writing to a String");
        }
        self.header.push('\n');
        let mut bytes = self.header.into_bytes();
        for (_, _, _, data) in &self.matrices {
            for v in data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }
}

fn frame_keys(w: &mut Writer, spec: FrameSpec, sample_rate: u32) {
    w.key("sample_rate", sample_rate);
    w.key("frame_size", spec.frame_size());
    w.key("frame_shift", spec.frame_shift());
}

/// Serializes a model to bytes.
pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let mut w;
    match model {
        Model::Stft(m) => {
            m.validate()?;
            w = Writer::new("stft");
            frame_keys(&mut w, m.frame_spec, m.sample_rate);
            w.key("window_name", m.window.name());
            w.key("feature_kind", m.feature_kind.name());
            w.matrix("w_speech".into(), &m.w_speech);
            w.matrix("w_noise".into(), &m.w_noise);
        }
        Model::Dwpt(m) => {
            m.validate()?;
            w = Writer::new("dwpt");
            frame_keys(&mut w, m.frame_spec, m.sample_rate);
            w.key("level", m.level);
            w.key("filter_name", &m.filter_name);
            let sigmas: Vec<f64> = m.bands.iter().map(|b| b.sigma_clean).collect();
            let sigma = NonnegMatrix::from_shape_vec(1, sigmas.len(), sigmas)?;
            w.matrix("sigma_clean".into(), &sigma);
            for (b, band) in m.bands.iter().enumerate() {
                w.matrix(format!("band{}.w_speech", b + 1), &band.w_speech);
                w.matrix(format!("band{}.w_noise", b + 1), &band.w_noise);
            }
        }
    }
    Ok(w.into_bytes())
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    decode_model(&std::fs::read(path)?)
}

struct Parsed {
    keys: BTreeMap<String, String>,
    matrices: BTreeMap<String, NonnegMatrix>,
    order: Vec<String>,
}

impl Parsed {
    fn take(&mut self, key: &str) -> Result<String> {
        self.keys
            .remove(key)
            .ok_or_else(|| bad(format!("missing header key '{key}'")))
    }

    fn take_num<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.take(key)?;
        raw.parse()
            .map_err(|_| bad(format!("header key '{key}' has invalid value '{raw}'")))
    }

    fn take_matrix(&mut self, name: &str) -> Result<NonnegMatrix> {
        self.matrices
            .remove(name)
            .ok_or_else(|| bad(format!("missing matrix '{name}'")))
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.keys.keys().next() {
            return Err(bad(format!("unexpected header key '{k}'")));
        }
        if let Some(m) = self.matrices.keys().next() {
            return Err(bad(format!("unexpected matrix '{m}'")));
        }
        Ok(())
    }
}

fn parse(bytes: &[u8]) -> Result<Parsed> {
    let end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| bad("header is not terminated by an empty line (truncated file?)"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let mut payload = &bytes[end + 2..];

    let mut keys = BTreeMap::new();
    let mut decls = Vec::new();
    for (n, line) in header.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("matrix ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [name, rows, cols] = parts[..] else {
                return Err(bad(format!("line {}: malformed matrix declaration", n + 1)));
            };
            let dim = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| bad(format!("line {}: bad matrix dimension '{s}'", n + 1)))
            };
            decls.push((name.to_string(), dim(rows)?, dim(cols)?));
        } else if let Some((k, v)) = line.split_once(':') {
            if keys
                .insert(k.trim().to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(bad(format!("duplicate header key '{}'", k.trim())));
            }
        } else {
            return Err(bad(format!("line {}: expected 'key: value'", n + 1)));
        }
    }

    let mut matrices = BTreeMap::new();
    let mut order = Vec::new();
    for (name, rows, cols) in decls {
        let count = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| bad(format!("matrix '{name}' is too large")))?;
        if payload.len() < count {
            return Err(bad(format!("truncated data for matrix '{name}'")));
        }
        let (chunk, rest) = payload.split_at(count);
        payload = rest;
        let data: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let m = NonnegMatrix::from_shape_vec(rows, cols, data)
            .map_err(|e| bad(format!("matrix '{name}': {e}")))?;
        if matrices.insert(name.clone(), m).is_some() {
            return Err(bad(format!("duplicate matrix '{name}'")));
        }
        order.push(name);
    }
    if !payload.is_empty() {
        return Err(bad(format!(
            "{} trailing bytes after the last matrix",
            payload.len()
        )));
    }
    Ok(Parsed {
        keys,
        matrices,
        order,
    })
}

/// Parses and validates a model.
pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    let mut p = parse(bytes)?;
    let magic = p.take("format")?;
    if magic != FORMAT_MAGIC {
        return Err(bad(format!("not a model file (format '{magic}')")));
    }
    let version: u32 = p.take_num("format_version")?;
    if version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format_version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let kind = p.take("model_kind")?;
    let sample_rate: u32 = p.take_num("sample_rate")?;
    if sample_rate == 0 {
        return Err(bad("sample_rate must be positive"));
    }
    let frame_spec = FrameSpec::new(p.take_num("frame_size")?, p.take_num("frame_shift")?)?;

    let model = match kind.as_str() {
        "stft" => {
            let window: Window = p.take("window_name")?.parse()?;
            let feature_kind: FeatureKind = p.take("feature_kind")?.parse()?;
            let m = StftBasisModel {
                sample_rate,
                frame_spec,
                window,
                feature_kind,
                w_speech: p.take_matrix("w_speech")?,
                w_noise: p.take_matrix("w_noise")?,
            };
            m.validate()?;
            Model::Stft(m)
        }
        "dwpt" => {
            let level: usize = p.take_num("level")?;
            if level == 0 || level > 24 {
                return Err(bad(format!("level {level} out of range")));
            }
            let filter_name = p.take("filter_name")?;
            let expected = 1usize << level;
            let blocks = p
                .order
                .iter()
                .filter_map(|n| {
                    n.strip_prefix("band")
                        .and_then(|r| r.split_once('.'))
                        .map(|(b, _)| b.to_string())
                })
                .collect::<std::collections::BTreeSet<_>>()
                .len();
            if blocks != expected {
                return Err(bad(format!(
                    "expected {expected} subband blocks, found {blocks}"
                )));
            }
            let sigma = p.take_matrix("sigma_clean")?;
            if sigma.rows() != 1 || sigma.cols() != expected {
                return Err(bad(format!("sigma_clean must be 1 x {expected}")));
            }
            let bands = (0..expected)
                .map(|b| {
                    Ok(BandModel {
                        w_speech: p.take_matrix(&format!("band{}.w_speech", b + 1))?,
                        w_noise: p.take_matrix(&format!("band{}.w_noise", b + 1))?,
                        sigma_clean: sigma.get(0, b),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let m = SubbandBasisModel {
                sample_rate,
                level,
                filter_name,
                frame_spec,
                bands,
            };
            m.validate()?;
            Model::Dwpt(m)
        }
        other => return Err(bad(format!("unknown model_kind '{other}'"))),
    };
    p.finish()?;
    Ok(model)
}
