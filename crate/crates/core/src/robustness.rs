//! Monte-Carlo fidelity under Gaussian jitter of the pulse parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainModel, Pulse, PulseSequence, SystemConfig, TargetSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `A -> A (1 + e)`, `phi -> phi + pi d` with `e, d ~ N(0, sigma)`.
    #[default]
    RelativeAreaAbsolutePhase,
    /// `A -> A (1 + e)`, `phi -> phi (1 + e')`.
    RelativeBoth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub trials: usize,
    pub rng_seed: u64,
    pub mode: NoiseMode,
}

impl NoiseModel {
    pub fn new(sigma: f64, trials: usize, rng_seed: u64) -> Result<Self> {
        let model = Self {
            sigma,
            trials,
            rng_seed,
            mode: NoiseMode::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        Ok(())
    }
}

/// Standard-normal draws for one trial: `(area, phase)` per pulse.
///
/// The draws depend only on `(seed, trial_index, k)`, so every sigma on a
/// grid sees the same underlying noise realisation.
fn trial_draws(seed: u64, trial_index: usize, pulses: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index as u64);
    (0..pulses)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let p: f64 = StandardNormal.sample(&mut rng);
            (a, p)
        })
        .collect()
}

/// One jittered copy of `seq`. Negative areas are clamped to zero.
pub fn perturb(seq: &PulseSequence, model: &NoiseModel, trial_index: usize) -> Result<PulseSequence> {
    model.validate()?;
    if model.sigma == 0.0 {
        return Ok(seq.clone());
    }
    let draws = trial_draws(model.rng_seed, trial_index, seq.len());
    let sigma = model.sigma;
    let pulses = seq
        .pulses()
        .iter()
        .zip(draws)
        .map(|(p, (za, zp))| {
            let area = (p.area() * (1.0 + sigma * za)).max(0.0);
            let phase = match model.mode {
                NoiseMode::RelativeAreaAbsolutePhase => p.phase() + sigma * zp,
                NoiseMode::RelativeBoth => p.phase() * (1.0 + sigma * zp),
            };
            Pulse::new(area, phase)
        })
        .collect::<Result<Vec<_>>>()?;
    PulseSequence::new(pulses)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub min_fidelity: f64,
}

impl CurvePoint {
    pub fn standard_error(&self, trials: usize) -> f64 {
        self.std_fidelity / (trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCurve {
    pub sequence_id: String,
    pub target_id: String,
    pub trials: usize,
    pub points: Vec<CurvePoint>,
}

impl RobustnessCurve {
    pub const CSV_HEADER: [&'static str; 4] = ["sigma", "mean_fidelity", "std_fidelity", "min_fidelity"];

    pub fn with_ids(mut self, sequence_id: impl Into<String>, target_id: impl Into<String>) -> Self {
        self.sequence_id = sequence_id.into();
        self.target_id = target_id.into();
        self
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(Self::CSV_HEADER).map_err(csv_err)?;
        for p in &self.points {
            w.write_record([
                p.sigma.to_string(),
                p.mean_fidelity.to_string(),
                p.std_fidelity.to_string(),
                p.min_fidelity.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<CurvePoint>> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(|e| Error::parse("csv", e.to_string()))?;
        if header.iter().ne(Self::CSV_HEADER) {
            return Err(Error::parse("csv", format!("unexpected header {header:?}")));
        }
        r.records()
            .map(|rec| {
                let rec = rec.map_err(|e| Error::parse("csv", e.to_string()))?;
                let field = |i: usize| -> Result<f64> {
                    rec.get(i)
                        .ok_or_else(|| Error::parse("csv", format!("missing column {i}")))?
                        .parse()
                        .map_err(|e| Error::parse("csv", format!("column {i}: {e}")))
                };
                Ok(CurvePoint {
                    sigma: field(0)?,
                    mean_fidelity: field(1)?,
                    std_fidelity: field(2)?,
                    min_fidelity: field(3)?,
                })
            })
            .collect()
    }
}

/// Mean, standard deviation and minimum fidelity over `model.trials`
/// jittered copies of `seq`, for each sigma in `sigmas` (sorted ascending).
/// `model.sigma` is ignored.
pub fn fidelity_vs_sigma(
    config: &SystemConfig,
    seq: &PulseSequence,
    target: &TargetSpec,
    sigmas: &[f64],
    model: &NoiseModel,
) -> Result<RobustnessCurve> {
    model.validate()?;
    let chain = ChainModel::new(config)?;
    let base = chain.fidelity(seq, target)?;
    let mut grid = sigmas.to_vec();
    if grid.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::invalid("sigma grid values must be nonnegative"));
    }
    grid.sort_by(f64::total_cmp);

    let points = grid
        .into_iter()
        .map(|sigma| {
            if sigma == 0.0 {
                return Ok(CurvePoint {
                    sigma,
                    mean_fidelity: base,
                    std_fidelity: 0.0,
                    min_fidelity: base,
                });
            }
            let m = model.with_sigma(sigma);
            let fids: Vec<f64> = (0..m.trials)
                .into_par_iter()
                .map(|i| chain.fidelity(&perturb(seq, &m, i)?, target))
                .collect::<Result<_>>()?;
            Ok(summarize(sigma, &fids))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RobustnessCurve {
        sequence_id: String::new(),
        target_id: String::new(),
        trials: model.trials,
        points,
    })
}

fn summarize(sigma: f64, fids: &[f64]) -> CurvePoint {
    let n = fids.len() as f64;
    let mean = fids.iter().sum::<f64>() / n;
    let var = if fids.len() > 1 {
        fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    CurvePoint {
        sigma,
        mean_fidelity: mean.clamp(0.0, 1.0),
        std_fidelity: var.sqrt(),
        min_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min),
    }
}
