//! JSON file formats: sequences, solution sets and custom targets.
//!
//! All areas and phases are in units of pi.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chain::{
    dicke_target, noon_target, FidelityMode, Pulse, PulseSequence, SystemConfig, TargetKind, TargetSpec, C64,
};
use crate::error::{Error, Result};
use crate::optim::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub n_ions: usize,
    #[serde(default)]
    pub lamb_dicke: f64,
}

impl SystemRecord {
    pub fn from_config(config: &SystemConfig) -> Self {
        Self {
            n_ions: config.n_ions(),
            lamb_dicke: config.lamb_dicke(),
        }
    }

    pub fn to_config(self) -> Result<SystemConfig> {
        SystemConfig::new(self.n_ions, self.lamb_dicke)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub area: f64,
    pub phase: f64,
}

fn pulses_to_records(seq: &PulseSequence) -> Vec<PulseRecord> {
    seq.pulses()
        .iter()
        .map(|p| PulseRecord {
            area: p.area(),
            phase: p.phase(),
        })
        .collect()
}

fn records_to_sequence(source: &str, prefix: &str, records: &[PulseRecord]) -> Result<PulseSequence> {
    if records.is_empty() {
        return Err(Error::parse(source, format!("{prefix}pulses: at least one pulse is required")));
    }
    let pulses = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Pulse::new(r.area, r.phase).map_err(|e| Error::parse(source, format!("{prefix}pulses[{i}]: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    PulseSequence::new(pulses)
}

/// `{"system": {"n_ions", "lamb_dicke"}, "pulses": [{"area", "phase"}, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub system: SystemRecord,
    pub pulses: Vec<PulseRecord>,
}

impl SequenceFile {
    pub fn new(config: &SystemConfig, seq: &PulseSequence) -> Self {
        Self {
            system: SystemRecord::from_config(config),
            pulses: pulses_to_records(seq),
        }
    }

    pub fn sequence(&self, source: &str) -> Result<PulseSequence> {
        records_to_sequence(source, "", &self.pulses)
    }
}

/// Target as stored in a solutions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetRecord {
    Dicke {
        n: usize,
        #[serde(default)]
        mode: FidelityMode,
    },
    Noon {
        #[serde(default)]
        mode: FidelityMode,
    },
    Custom {
        amplitudes: Vec<[f64; 2]>,
        #[serde(default)]
        mode: FidelityMode,
    },
}

impl TargetRecord {
    pub fn from_target(target: &TargetSpec) -> Self {
        let mode = target.mode();
        match target.kind() {
            TargetKind::Dicke(n) => TargetRecord::Dicke { n, mode },
            TargetKind::Noon => TargetRecord::Noon { mode },
            TargetKind::Custom => TargetRecord::Custom {
                amplitudes: target.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
                mode,
            },
        }
    }

    pub fn to_target(&self, n_ions: usize) -> Result<TargetSpec> {
        Ok(match self {
            TargetRecord::Dicke { n, mode } => dicke_target(n_ions, *n)?.with_mode(*mode),
            TargetRecord::Noon { mode } => noon_target(n_ions)?.with_mode(*mode),
            TargetRecord::Custom { amplitudes, mode } => {
                let v: Vec<C64> = amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                normalize_amplitudes("solutions file", n_ions, v)?.0.with_mode(*mode)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub pulses: Vec<PulseRecord>,
    pub fidelity: f64,
    pub total_area: f64,
    pub restart_index: usize,
    pub iterations: usize,
    pub qualified: bool,
}

impl SolutionRecord {
    pub fn from_solution(s: &Solution) -> Self {
        Self {
            pulses: pulses_to_records(&s.sequence),
            fidelity: s.fidelity,
            total_area: s.total_area,
            restart_index: s.restart_index,
            iterations: s.iterations,
            qualified: s.qualified,
        }
    }
}

/// Output of `synthesize`, best solution first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionsFile {
    pub system: SystemRecord,
    pub target: TargetRecord,
    pub fidelity_goal: f64,
    pub target_achieved: bool,
    pub solutions: Vec<SolutionRecord>,
}

impl SolutionsFile {
    pub fn new(config: &SystemConfig, target: &TargetSpec, goal: f64, solutions: &[Solution]) -> Self {
        Self {
            system: SystemRecord::from_config(config),
            target: TargetRecord::from_target(target),
            fidelity_goal: goal,
            target_achieved: solutions.first().is_some_and(|s| s.qualified),
            solutions: solutions.iter().map(SolutionRecord::from_solution).collect(),
        }
    }
}

/// Sequence loaded from either file kind.
#[derive(Debug, Clone)]
pub struct LoadedSequence {
    pub config: SystemConfig,
    pub sequence: PulseSequence,
    /// Present when loaded from a solutions file.
    pub target: Option<TargetSpec>,
    pub stored_fidelity: Option<f64>,
}

fn json_error(source: &str, e: &serde_json::Error) -> Error {
    Error::parse(source, format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Parses a sequence file, or a solutions file (taking entry `index`).
pub fn parse_sequence_source(source: &str, text: &str, index: usize) -> Result<LoadedSequence> {
    let value: Value = serde_json::from_str(text).map_err(|e| json_error(source, &e))?;
    if value.get("solutions").is_some() {
        let file: SolutionsFile = serde_json::from_str(text).map_err(|e| json_error(source, &e))?;
        let config = file.system.to_config().map_err(|e| Error::parse(source, format!("system: {e}")))?;
        let record = file.solutions.get(index).ok_or_else(|| {
            Error::parse(source, format!("solutions[{index}]: file holds {} solutions", file.solutions.len()))
        })?;
        let sequence = records_to_sequence(source, &format!("solutions[{index}]."), &record.pulses)?;
        let target = file
            .target
            .to_target(config.n_ions())
            .map_err(|e| Error::parse(source, format!("target: {e}")))?;
        Ok(LoadedSequence {
            config,
            sequence,
            target: Some(target),
            stored_fidelity: Some(record.fidelity),
        })
    } else {
        let file: SequenceFile = serde_json::from_str(text).map_err(|e| json_error(source, &e))?;
        let config = file.system.to_config().map_err(|e| Error::parse(source, format!("system: {e}")))?;
        Ok(LoadedSequence {
            config,
            sequence: file.sequence(source)?,
            target: None,
            stored_fidelity: None,
        })
    }
}

pub fn load_sequence_source(path: &Path, index: usize) -> Result<LoadedSequence> {
    let text = fs::read_to_string(path)?;
    parse_sequence_source(&path.display().to_string(), &text, index)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Normalization outcome for user-supplied amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Within `1e-9` of unit norm.
    Accepted,
    /// Off by more than `1e-9` but at most `1e-3`; rescaled.
    Renormalized { norm_sqr: f64 },
}

/// Silently accepts `| |t|^2 - 1 | <= 1e-9`, rescales up to `1e-3`, rejects beyond.
pub fn normalize_amplitudes(source: &str, n_ions: usize, amps: Vec<C64>) -> Result<(TargetSpec, Normalization)> {
    if amps.len() != n_ions + 1 {
        return Err(Error::parse(
            source,
            format!("expected {} amplitudes for N = {n_ions}, got {}", n_ions + 1, amps.len()),
        ));
    }
    if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::parse(source, "amplitudes must be finite"));
    }
    let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let deviation = (norm_sqr - 1.0).abs();
    if deviation > 1e-3 {
        return Err(Error::parse(
            source,
            format!("amplitudes are not normalized (sum |t_n|^2 = {norm_sqr})"),
        ));
    }
    let status = if deviation > 1e-9 {
        Normalization::Renormalized { norm_sqr }
    } else {
        Normalization::Accepted
    };
    let scale = 1.0 / norm_sqr.sqrt();
    let v = DVector::from_iterator(amps.len(), amps.into_iter().map(|a| a * scale));
    Ok((TargetSpec::custom(v)?, status))
}

/// Reads a custom target: a JSON array whose entries are real numbers or
/// `[re, im]` pairs, optionally wrapped as `{"amplitudes": [...]}`.
pub fn parse_custom_target(source: &str, text: &str, n_ions: usize) -> Result<(TargetSpec, Normalization)> {
    let value: Value = serde_json::from_str(text).map_err(|e| json_error(source, &e))?;
    let list = match &value {
        Value::Array(a) => a,
        Value::Object(o) => match o.get("amplitudes") {
            Some(Value::Array(a)) => a,
            _ => return Err(Error::parse(source, "expected an `amplitudes` array")),
        },
        _ => return Err(Error::parse(source, "expected an array of amplitudes")),
    };
    let amps = list
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Number(x) => Ok(C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
            Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err(Error::parse(source, format!("amplitudes[{i}]: expected [re, im] numbers"))),
            },
            _ => Err(Error::parse(source, format!("amplitudes[{i}]: expected a number or [re, im]"))),
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_amplitudes(source, n_ions, amps)
}

pub fn load_custom_target(path: &Path, n_ions: usize) -> Result<(TargetSpec, Normalization)> {
    let text = fs::read_to_string(path)?;
    parse_custom_target(&path.display().to_string(), &text, n_ions)
}
