use std::fs::File;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::files::{self, SolutionsFile, SystemRecord, TargetRecord};
use super::{
    target_label, ExitStatus, JobSpec, ReplayArgs, RobustnessArgs, SourceArgs, TargetChoice, TimingArgs, VerifyArgs,
};
use crate::chain::{ChainModel, FidelityMode, PulseSequence, SystemConfig, TargetKind, TargetSpec};
use crate::error::{Error, Result};
use crate::optim::{params_to_sequence, random_start, synthesize, AreaBounds};
use crate::oracle::{default_cutoff, symmetry_spectrum_check, verify_factorization, FactorizationReport, SpectrumReport};
use crate::oracle::MAX_SPECTRUM_IONS;
use crate::robustness::{fidelity_vs_sigma, NoiseModel};
use crate::tables::parse_row_key;
use crate::timing::TimingReport;

const VERIFY_DISCREPANCY_TOL: f64 = 1e-8;
const VERIFY_LEAKAGE_TOL: f64 = 1e-9;
const SPECTRUM_TOL: f64 = 1e-10;

/// `(A_1, phi_1; A_2, phi_2; ...)` with three decimals, units of pi.
pub fn format_pulse_row(seq: &PulseSequence) -> String {
    let body: Vec<String> = seq
        .pulses()
        .iter()
        .map(|p| format!("{:.3}, {:.3}", p.area(), p.phase()))
        .collect();
    format!("({})", body.join("; "))
}

struct Resolved {
    config: SystemConfig,
    sequence: PulseSequence,
    target: Option<TargetSpec>,
    stored_fidelity: Option<f64>,
    label: String,
}

fn resolve_source(src: &SourceArgs, ions: Option<usize>, eta: Option<f64>) -> Result<Resolved> {
    let resolved = if let Some(key) = &src.paper_row {
        let row = parse_row_key(key)?;
        Resolved {
            config: SystemConfig::new(row.n_ions, eta.unwrap_or(0.0))?,
            sequence: row.sequence(),
            target: Some(row.target()),
            stored_fidelity: None,
            label: row.label(),
        }
    } else if let Some(path) = &src.sequence {
        let loaded = files::load_sequence_source(path, src.index)?;
        let config = match eta {
            Some(eta) => SystemConfig::new(loaded.config.n_ions(), eta)?,
            None => loaded.config,
        };
        Resolved {
            config,
            sequence: loaded.sequence,
            target: loaded.target,
            stored_fidelity: loaded.stored_fidelity,
            label: path.display().to_string(),
        }
    } else {
        return Err(Error::invalid("a sequence source is required (--sequence <file> or --paper-row <key>)"));
    };
    if let Some(n) = ions {
        if n != resolved.config.n_ions() {
            return Err(Error::invalid(format!(
                "--ions {n} does not match the source ({} ions)",
                resolved.config.n_ions()
            )));
        }
    }
    Ok(resolved)
}

fn resolve_target(
    choice: Option<&TargetChoice>,
    phase_free: bool,
    stored: Option<&TargetSpec>,
    n_ions: usize,
    warn: &mut dyn Write,
) -> Result<TargetSpec> {
    let forced = phase_free.then_some(FidelityMode::PhaseMaximized);
    match (choice, stored) {
        (Some(c), _) => c.resolve(n_ions, forced.unwrap_or_default(), warn),
        (None, Some(t)) => Ok(t.clone().with_mode(forced.unwrap_or(t.mode()))),
        (None, None) => TargetChoice::Dicke(None).resolve(n_ions, forced.unwrap_or_default(), warn),
    }
}

fn print_system(out: &mut dyn Write, config: &SystemConfig) -> Result<()> {
    writeln!(out, "system: N = {}, eta = {:.3}", config.n_ions(), config.lamb_dicke())?;
    Ok(())
}

/// Runs the multistart search, prints the leading solutions and writes the
/// full solution set. Returns [`ExitStatus::TargetNotAchieved`] when only the
/// flagged fallback exists.
pub fn cmd_synthesize(job: &JobSpec, top: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    let n = job.system.n_ions();
    let target = job.target.resolve(n, job.mode, err)?;
    let search = job.search_or_default();
    let solutions = synthesize(&job.system, &target, &search)?;
    let best = &solutions[0];

    print_system(out, &job.system)?;
    writeln!(
        out,
        "target: {}, restarts: {}, seed: {}",
        target_label(&target),
        search.n_restarts,
        search.rng_seed
    )?;
    writeln!(out, "{:>4}  {:>6}  {:>9}  (A_k, phi_k) in units of pi", "rank", "A_tot", "fidelity")?;
    for (rank, s) in solutions.iter().take(top.max(1)).enumerate() {
        writeln!(
            out,
            "{:>4}  {:>6.3}  {:>9.6}  {}",
            rank + 1,
            s.total_area,
            s.fidelity,
            format_pulse_row(&s.sequence)
        )?;
    }
    writeln!(out, "best A_tot = {:.3} pi, fidelity = {:.6}", best.total_area, best.fidelity)?;

    if let Some(path) = &job.out {
        files::write_json(path, &SolutionsFile::new(&job.system, &target, search.fidelity_goal, &solutions))?;
    }
    if best.qualified {
        Ok(ExitStatus::Success)
    } else {
        writeln!(
            err,
            "no restart reached fidelity {}; best fallback has fidelity {:.6}",
            search.fidelity_goal, best.fidelity
        )?;
        Ok(ExitStatus::TargetNotAchieved)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub system: SystemRecord,
    pub target: TargetRecord,
    pub total_area: f64,
    pub fidelity: f64,
    /// Present for NOON targets.
    pub phase_maximized_fidelity: Option<f64>,
    pub populations: Vec<f64>,
    /// Fidelity recorded in the solutions file, if any.
    pub stored_fidelity: Option<f64>,
}

pub fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    let src = resolve_source(&args.source, args.ions, args.eta)?;
    let n = src.config.n_ions();
    let target = resolve_target(args.target.as_ref(), args.phase_free, src.target.as_ref(), n, err)?;
    let model = ChainModel::new(&src.config)?;
    let state = model.evolve(&src.sequence);
    let amps = state.amplitudes().as_slice();
    let fidelity = model.fidelity(&src.sequence, &target)?;
    let phase_maximized = (target.kind() == TargetKind::Noon).then(|| target.clone().phase_maximized().score(amps));

    print_system(out, &src.config)?;
    writeln!(out, "sequence: {} {}", src.label, format_pulse_row(&src.sequence))?;
    writeln!(out, "A_tot = {:.3} pi", src.sequence.total_area())?;
    writeln!(out, "target: {}", target_label(&target))?;
    writeln!(out, "fidelity: {fidelity:.6}")?;
    if let Some(f) = phase_maximized {
        writeln!(out, "phase-maximized fidelity: {f:.6}")?;
    }
    writeln!(out, "{:>3}  {:>6}", "n", "P_n")?;
    let populations = state.populations();
    for (k, p) in populations.iter().enumerate() {
        writeln!(out, "{k:>3}  {p:>6.3}")?;
    }

    if let Some(path) = &args.out {
        let report = ReplayReport {
            system: SystemRecord::from_config(&src.config),
            target: TargetRecord::from_target(&target),
            total_area: src.sequence.total_area(),
            fidelity,
            phase_maximized_fidelity: phase_maximized,
            populations,
            stored_fidelity: src.stored_fidelity,
        };
        files::write_json(path, &report)?;
    }
    match args.fidelity_goal {
        Some(goal) if fidelity < goal => Ok(ExitStatus::TargetNotAchieved),
        _ => Ok(ExitStatus::Success),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub system: SystemRecord,
    pub phonon_cutoff: usize,
    pub pulses: Vec<(f64, f64)>,
    pub factorization: FactorizationReport,
    /// Absent above the internal-space size limit.
    pub spectrum: Option<SpectrumReport>,
    pub passed: bool,
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let (config, sequence) = if args.random {
        let n = args
            .ions
            .ok_or_else(|| Error::invalid("--random needs --ions"))?;
        let config = SystemConfig::new(n, args.eta.unwrap_or(0.0))?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let params = random_start(n, AreaBounds::default(), &mut rng);
        (config, params_to_sequence(n, &params)?)
    } else {
        let src = resolve_source(&args.source, args.ions, args.eta)?;
        (src.config, src.sequence)
    };
    let n = config.n_ions();
    let nu_max = args.phonon_cutoff.unwrap_or_else(|| default_cutoff(n));
    let factorization = verify_factorization(&config, &sequence, nu_max)?;
    let spectrum = if n <= MAX_SPECTRUM_IONS {
        Some(symmetry_spectrum_check(n)?)
    } else {
        None
    };
    let passed = factorization.passes(VERIFY_DISCREPANCY_TOL, VERIFY_LEAKAGE_TOL);

    print_system(out, &config)?;
    writeln!(out, "sequence: {}", format_pulse_row(&sequence))?;
    writeln!(
        out,
        "full space: 2^{n} x {} = {} states",
        nu_max + 1,
        (1usize << n) * (nu_max + 1)
    )?;
    writeln!(out, "max amplitude discrepancy: {:.3e}", factorization.max_amplitude_discrepancy)?;
    writeln!(out, "max population outside chain: {:.3e}", factorization.max_leakage)?;
    writeln!(out, "max population on top phonon level: {:.3e}", factorization.max_edge_population)?;
    writeln!(out, "max norm error: {:.3e}", factorization.max_norm_error)?;
    if let Some(s) = &spectrum {
        writeln!(
            out,
            "J^2 = {:.3} on all {} Dicke states: max residual {:.3e} ({})",
            s.expected_eigenvalue,
            s.entries.len(),
            s.max_residual(),
            if s.passes(SPECTRUM_TOL) { "ok" } else { "FAIL" }
        )?;
    }
    writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;

    if let Some(path) = &args.out {
        let report = VerifyReport {
            system: SystemRecord::from_config(&config),
            phonon_cutoff: nu_max,
            pulses: sequence.pairs(),
            factorization,
            spectrum,
            passed,
        };
        files::write_json(path, &report)?;
    }
    Ok(if passed {
        ExitStatus::Success
    } else {
        ExitStatus::NumericalError
    })
}

pub fn cmd_robustness(args: &RobustnessArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    if args.sigma.is_empty() {
        return Err(Error::invalid("--sigma needs at least one value"));
    }
    let src = resolve_source(&args.source, args.ions, args.eta)?;
    let n = src.config.n_ions();
    let target = resolve_target(args.target.as_ref(), args.phase_free, src.target.as_ref(), n, err)?;
    let model = NoiseModel::new(0.0, args.trials, args.seed)?.with_mode(args.noise_mode.into());
    let curve = fidelity_vs_sigma(&src.config, &src.sequence, &target, &args.sigma, &model)?
        .with_ids(src.label.clone(), target_label(&target));

    match &args.out {
        Some(path) => {
            curve.write_csv(File::create(path)?)?;
            print_system(out, &src.config)?;
            writeln!(out, "sequence: {}, target: {}, trials: {}", src.label, target_label(&target), args.trials)?;
            writeln!(out, "{:>6}  {:>6}  {:>6}  {:>6}", "sigma", "mean", "std", "min")?;
            for p in &curve.points {
                writeln!(
                    out,
                    "{:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}",
                    p.sigma, p.mean_fidelity, p.std_fidelity, p.min_fidelity
                )?;
            }
        }
        None => curve.write_csv(&mut *out)?,
    }
    Ok(ExitStatus::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingOutput {
    #[serde(flatten)]
    pub report: TimingReport,
    pub n_ions: Option<usize>,
    pub dicke_bound_us: Option<f64>,
    pub noon_bound_us: Option<f64>,
}

pub fn cmd_timing(args: &TimingArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let (total_area, n_ions) = match args.total_area {
        Some(a) => (a, args.ions),
        None => {
            let src = resolve_source(&args.source, args.ions, None)?;
            (src.sequence.total_area(), Some(src.config.n_ions()))
        }
    };
    let report = TimingReport::new(total_area, args.trap_frequency)?;
    let output = TimingOutput {
        report,
        n_ions,
        dicke_bound_us: n_ions.map(|n| report.dicke_bound_us(n)),
        noon_bound_us: n_ions.map(|n| report.noon_bound_us(n)),
    };

    writeln!(out, "A_tot = {:.3} pi", report.total_area)?;
    writeln!(out, "g = {:.3e} rad/s (trap frequency / 10)", report.coupling_g)?;
    writeln!(out, "T_pi = {:.3} us", report.pi_pulse_us)?;
    writeln!(out, "T_tot = {:.3} us", report.duration_us)?;
    if let (Some(n), Some(d), Some(m)) = (n_ions, output.dicke_bound_us, output.noon_bound_us) {
        writeln!(out, "N = {n}: (N/2) T_pi = {d:.3} us, (N/3) T_pi = {m:.3} us")?;
    }

    if let Some(path) = &args.out {
        files::write_json(path, &output)?;
    }
    Ok(ExitStatus::Success)
}
