//! Command-line front end: `synthesize`, `replay`, `verify`, `robustness`
//! and `timing`.
//!
//! [`run`] parses arguments, dispatches, and maps the outcome onto the exit
//! codes of [`ExitStatus`]. Output goes to caller-supplied writers.

mod commands;
pub mod files;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chain::{dicke_target, noon_target, FidelityMode, SystemConfig, TargetKind, TargetSpec};
use crate::error::{Error, Result};
use crate::optim::SearchConfig;
use crate::robustness::NoiseMode;

pub use commands::{
    cmd_replay, cmd_robustness, cmd_synthesize, cmd_timing, cmd_verify, format_pulse_row, ReplayReport,
    TimingOutput, VerifyReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    TargetNotAchieved,
    InputError,
    NumericalError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::TargetNotAchieved => 1,
            ExitStatus::InputError => 2,
            ExitStatus::NumericalError => 3,
        }
    }

    pub fn from_error(err: &Error) -> Self {
        match err {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) => ExitStatus::InputError,
            Error::Numerical(_) | Error::Cutoff { .. } => ExitStatus::NumericalError,
        }
    }
}

/// `--target` value.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetChoice {
    /// `dicke` or `dicke:<n>`; `None` means `floor(N/2)`.
    Dicke(Option<usize>),
    Noon,
    /// `custom:<file>`.
    Custom(PathBuf),
}

impl FromStr for TargetChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "dicke" => Ok(TargetChoice::Dicke(None)),
            None if s == "noon" => Ok(TargetChoice::Noon),
            Some(("dicke", n)) => n
                .parse()
                .map(|n| TargetChoice::Dicke(Some(n)))
                .map_err(|_| Error::invalid(format!("`{n}` is not an excitation number"))),
            Some(("custom", path)) if !path.is_empty() => Ok(TargetChoice::Custom(PathBuf::from(path))),
            _ => Err(Error::invalid(format!(
                "unknown target `{s}` (expected dicke:<n>, noon or custom:<file>)"
            ))),
        }
    }
}

impl TargetChoice {
    /// Builds the target for `n_ions`, reporting renormalized custom files to `warn`.
    pub fn resolve(&self, n_ions: usize, mode: FidelityMode, warn: &mut dyn Write) -> Result<TargetSpec> {
        let target = match self {
            TargetChoice::Dicke(n) => dicke_target(n_ions, n.unwrap_or(n_ions / 2))?,
            TargetChoice::Noon => noon_target(n_ions)?,
            TargetChoice::Custom(path) => {
                let (target, status) = files::load_custom_target(path, n_ions)?;
                if let files::Normalization::Renormalized { norm_sqr } = status {
                    writeln!(
                        warn,
                        "warning: {}: amplitudes renormalized (sum |t_n|^2 was {norm_sqr:.12})",
                        path.display()
                    )?;
                }
                target
            }
        };
        Ok(target.with_mode(mode))
    }
}

/// Short label such as `dicke:2`, `noon (phase-maximized)` or `custom`.
pub fn target_label(target: &TargetSpec) -> String {
    let base = match target.kind() {
        TargetKind::Dicke(n) => format!("dicke:{n}"),
        TargetKind::Noon => "noon".to_string(),
        TargetKind::Custom => "custom".to_string(),
    };
    match target.mode() {
        FidelityMode::Fixed => base,
        FidelityMode::PhaseMaximized => format!("{base} (phase-maximized)"),
    }
}

/// Everything `synthesize` needs.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub system: SystemConfig,
    pub target: TargetChoice,
    pub mode: FidelityMode,
    pub search: Option<SearchConfig>,
    pub out: Option<PathBuf>,
}

impl JobSpec {
    pub fn search_or_default(&self) -> SearchConfig {
        self.search.clone().unwrap_or_else(|| SearchConfig::for_ions(self.system.n_ions()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "ionchain", version, about = "Composite pulse sequences for Dicke and NOON states of trapped ions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for minimal-area sequences that reach a target state.
    Synthesize(SynthesizeArgs),
    /// Evaluate a stored sequence against a target.
    Replay(ReplayArgs),
    /// Check the chain model against the full ion-phonon space.
    Verify(VerifyArgs),
    /// Monte-Carlo fidelity under area and phase noise.
    Robustness(RobustnessArgs),
    /// Convert a total area into a duration.
    Timing(TimingArgs),
}

/// Where a sequence comes from.
#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Sequence or solutions JSON file.
    #[arg(long, conflicts_with = "paper_row")]
    pub sequence: Option<PathBuf>,
    /// Built-in table row: `dicke:<N>` or `noon:<N>`.
    #[arg(long)]
    pub paper_row: Option<String>,
    /// Entry to take from a solutions file (0 is the best).
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    /// Number of ions.
    #[arg(long)]
    pub ions: usize,
    /// Lamb-Dicke parameter.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Target: dicke:<n>, noon or custom:<file>.
    #[arg(long, default_value = "dicke")]
    pub target: TargetChoice,
    /// Score the target up to the relative phases of its components.
    #[arg(long)]
    pub phase_free: bool,
    /// Monte-Carlo restarts (default 500 for N <= 6, 2000 above).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.999)]
    pub fidelity_goal: f64,
    /// Iteration budget per restart.
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Upper bound on each pulse area, units of pi.
    #[arg(long, default_value_t = 2.0)]
    pub area_max: f64,
    /// Solutions shown in the table.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    /// Solutions JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SynthesizeArgs {
    pub fn job(&self) -> Result<JobSpec> {
        let system = SystemConfig::new(self.ions, self.eta)?;
        let mut search = SearchConfig::for_ions(self.ions);
        if let Some(r) = self.restarts {
            search.n_restarts = r;
        }
        search.rng_seed = self.seed;
        search.fidelity_goal = self.fidelity_goal;
        search.max_iterations = self.max_iterations;
        search.area_bounds = crate::optim::AreaBounds::new(0.0, self.area_max)?;
        search.validate()?;
        Ok(JobSpec {
            system,
            target: self.target.clone(),
            mode: if self.phase_free {
                FidelityMode::PhaseMaximized
            } else {
                FidelityMode::Fixed
            },
            search: Some(search),
            out: self.out.clone(),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Override the stored target.
    #[arg(long)]
    pub target: Option<TargetChoice>,
    /// Score the target up to the relative phases of its components.
    #[arg(long)]
    pub phase_free: bool,
    /// Expected ion count; must match the source.
    #[arg(long)]
    pub ions: Option<usize>,
    /// Override the Lamb-Dicke parameter.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Exit with status 1 when the fidelity is below this value.
    #[arg(long)]
    pub fidelity_goal: Option<f64>,
    /// Report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Use a random sequence of `--ions` pulses instead of a source.
    #[arg(long, conflicts_with_all = ["sequence", "paper_row"])]
    pub random: bool,
    #[arg(long)]
    pub ions: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Highest retained phonon number (default N + 4).
    #[arg(long)]
    pub phonon_cutoff: Option<usize>,
    /// Seed for `--random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModeArg {
    /// Relative area error, absolute phase error.
    AreaPhase,
    /// Relative error on both.
    Relative,
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(m: NoiseModeArg) -> Self {
        match m {
            NoiseModeArg::AreaPhase => NoiseMode::RelativeAreaAbsolutePhase,
            NoiseModeArg::Relative => NoiseMode::RelativeBoth,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub target: Option<TargetChoice>,
    #[arg(long)]
    pub phase_free: bool,
    #[arg(long)]
    pub ions: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.02")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseModeArg::AreaPhase)]
    pub noise_mode: NoiseModeArg,
    /// CSV output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TimingArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Total area in units of pi, instead of a sequence.
    #[arg(long, conflicts_with_all = ["sequence", "paper_row"])]
    pub total_area: Option<f64>,
    /// Trap angular frequency, rad/s.
    #[arg(long, default_value_t = crate::chain::DEFAULT_TRAP_FREQUENCY)]
    pub trap_frequency: f64,
    /// Ion count for the asymptotic bounds.
    #[arg(long)]
    pub ions: Option<usize>,
    /// Report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    match command {
        Command::Synthesize(a) => cmd_synthesize(&a.job()?, a.top, out, err),
        Command::Replay(a) => cmd_replay(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Robustness(a) => cmd_robustness(a, out, err),
        Command::Timing(a) => cmd_timing(a, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::from_error(&e).code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_choices_parse() {
        assert_eq!("dicke".parse::<TargetChoice>().unwrap(), TargetChoice::Dicke(None));
        assert_eq!("dicke:3".parse::<TargetChoice>().unwrap(), TargetChoice::Dicke(Some(3)));
        assert_eq!("noon".parse::<TargetChoice>().unwrap(), TargetChoice::Noon);
        assert_eq!(
            "custom:a/b.json".parse::<TargetChoice>().unwrap(),
            TargetChoice::Custom(PathBuf::from("a/b.json"))
        );
        for bad in ["ghz", "dicke:x", "custom:", "noon:3"] {
            assert!(bad.parse::<TargetChoice>().is_err(), "{bad}");
        }
    }

    #[test]
    fn default_dicke_is_half_filling() {
        let t = TargetChoice::Dicke(None)
            .resolve(5, FidelityMode::Fixed, &mut Vec::new())
            .unwrap();
        assert_eq!(t.kind(), TargetKind::Dicke(2));
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(ExitStatus::from_error(&Error::invalid("x")).code(), 2);
        assert_eq!(ExitStatus::from_error(&Error::parse("f", "x")).code(), 2);
        assert_eq!(ExitStatus::from_error(&Error::Numerical("x".into())).code(), 3);
        assert_eq!(
            ExitStatus::from_error(&Error::Cutoff {
                cutoff: 2,
                leakage: 1e-3
            })
            .code(),
            3
        );
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["ionchain", "synthesize"], &mut o, &mut e), 2);
        assert_eq!(run(["ionchain", "bogus"], &mut o, &mut e), 2);
        assert_eq!(run(["ionchain", "--help"], &mut o, &mut e), 0);
    }
}
