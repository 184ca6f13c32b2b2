//! The symmetric Dicke chain `|W^N_n>|n>`, `n = 0..=N`.
//!
//! A uniform blue-sideband drive starting from `|00..0>|0>` never leaves the
//! `j = N/2` chain, so every propagator here is an `(N+1) x (N+1)` matrix.
//! Chain index `n` counts both the internal excitations and the phonons.
//!
//! Areas and phases are carried in units of pi throughout the public API;
//! conversion to radians happens only where generators are assembled.
//!
//! The resonance frequencies of the carrier and the laser never appear: the
//! model lives in the interaction picture where the drive is exactly resonant
//! with the first blue sideband of the center-of-mass mode.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Trap frequency used when none is given, in rad/s.
pub const DEFAULT_TRAP_FREQUENCY: f64 = 4.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    /// `omega_L = omega_0 + omega_trap`; conserves `n - nu`.
    #[default]
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    n_ions: usize,
    lamb_dicke: f64,
    trap_frequency: f64,
    sideband: Sideband,
}

impl SystemConfig {
    /// Ion count `N` and Lamb-Dicke parameter `eta`; `eta = 0` is the
    /// Lamb-Dicke limit.
    pub fn new(n_ions: usize, lamb_dicke: f64) -> Result<Self> {
        if n_ions == 0 {
            return Err(Error::invalid("n_ions must be at least 1"));
        }
        if !(lamb_dicke.is_finite() && lamb_dicke >= 0.0) {
            return Err(Error::invalid(format!(
                "lamb_dicke must be finite and nonnegative, got {lamb_dicke}"
            )));
        }
        Ok(Self {
            n_ions,
            lamb_dicke,
            trap_frequency: DEFAULT_TRAP_FREQUENCY,
            sideband: Sideband::Blue,
        })
    }

    /// Lamb-Dicke limit.
    pub fn ideal(n_ions: usize) -> Result<Self> {
        Self::new(n_ions, 0.0)
    }

    pub fn with_trap_frequency(mut self, trap_frequency: f64) -> Result<Self> {
        if !(trap_frequency.is_finite() && trap_frequency > 0.0) {
            return Err(Error::invalid(format!(
                "trap_frequency must be positive, got {trap_frequency}"
            )));
        }
        self.trap_frequency = trap_frequency;
        Ok(self)
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn lamb_dicke(&self) -> f64 {
        self.lamb_dicke
    }

    pub fn trap_frequency(&self) -> f64 {
        self.trap_frequency
    }

    pub fn sideband(&self) -> Sideband {
        self.sideband
    }

    /// Number of chain states, `N + 1`.
    pub fn chain_dim(&self) -> usize {
        self.n_ions + 1
    }
}

/// One resonant pulse: area and phase, both in units of pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    area: f64,
    phase: f64,
}

/// Wraps a phase (units of pi) into `[0, 2)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let wrapped = phase.rem_euclid(2.0);
    if wrapped >= 2.0 {
        0.0
    } else {
        wrapped
    }
}

impl Pulse {
    pub fn new(area: f64, phase: f64) -> Result<Self> {
        if !(area.is_finite() && area >= 0.0) {
            return Err(Error::invalid(format!(
                "pulse area must be finite and nonnegative, got {area}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::invalid(format!("pulse phase must be finite, got {phase}")));
        }
        Ok(Self {
            area,
            phase: wrap_phase(phase),
        })
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// Pulses in application order: `pulses[0]` acts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Pulse>", into = "Vec<Pulse>")]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
}

impl TryFrom<Vec<Pulse>> for PulseSequence {
    type Error = Error;

    fn try_from(pulses: Vec<Pulse>) -> Result<Self> {
        Self::new(pulses)
    }
}

impl From<PulseSequence> for Vec<Pulse> {
    fn from(seq: PulseSequence) -> Self {
        seq.pulses
    }
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::invalid("a pulse sequence needs at least one pulse"));
        }
        Ok(Self { pulses })
    }

    /// Builds a sequence from `(area, phase)` pairs in units of pi.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let pulses = pairs
            .iter()
            .map(|&(a, p)| Pulse::new(a, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pulses)
    }

    /// `count` pulses of zero area.
    pub fn zero(count: usize) -> Result<Self> {
        Self::new(vec![Pulse { area: 0.0, phase: 0.0 }; count])
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Sum of all areas, units of pi.
    pub fn total_area(&self) -> f64 {
        self.pulses.iter().map(Pulse::area).sum()
    }

    /// `self` followed by `later`.
    pub fn concat(&self, later: &PulseSequence) -> PulseSequence {
        let mut pulses = self.pulses.clone();
        pulses.extend_from_slice(&later.pulses);
        PulseSequence { pulses }
    }

    /// Adds `delta` (units of pi) to every phase.
    pub fn shift_phases(&self, delta: f64) -> PulseSequence {
        let pulses = self
            .pulses
            .iter()
            .map(|p| Pulse {
                area: p.area,
                phase: wrap_phase(p.phase + delta),
            })
            .collect();
        PulseSequence { pulses }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.pulses.iter().map(|p| (p.area, p.phase)).collect()
    }
}

/// Amplitudes over the chain; index `n` is `|W^N_n>|n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    amplitudes: DVector<C64>,
}

impl ChainState {
    /// `|00..0>|0>`.
    pub fn ground(config: &SystemConfig) -> Self {
        let mut amplitudes = DVector::zeros(config.chain_dim());
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "lowercase")]
pub enum TargetKind {
    Dicke(usize),
    Noon,
    Custom,
}

/// How the overlap with a target is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMode {
    /// `|<t|psi>|^2` with the target exactly as given.
    #[default]
    Fixed,
    /// Maximum over the relative phases of the target components,
    /// `(sum_n |t_n| |psi_n|)^2`. For a NOON target this is
    /// `(|a_0| + |a_N|)^2 / 2`.
    PhaseMaximized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    amplitudes: DVector<C64>,
    kind: TargetKind,
    mode: FidelityMode,
}

impl TargetSpec {
    /// Arbitrary superposition on the chain. The vector must already be
    /// normalized to within `1e-12`.
    pub fn custom(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("target needs at least one amplitude"));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::invalid("target amplitudes must be finite"));
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "target is not normalized: sum |t_n|^2 = {norm}"
            )));
        }
        Ok(Self {
            amplitudes,
            kind: TargetKind::Custom,
            mode: FidelityMode::Fixed,
        })
    }

    pub fn with_mode(mut self, mode: FidelityMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn phase_maximized(self) -> Self {
        self.with_mode(FidelityMode::PhaseMaximized)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn mode(&self) -> FidelityMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Score for a chain state under this target's mode, clamped to `[0, 1]`.
    pub fn score(&self, state: &[C64]) -> f64 {
        let f = match self.mode {
            FidelityMode::Fixed => self
                .amplitudes
                .iter()
                .zip(state)
                .map(|(t, a)| t.conj() * a)
                .sum::<C64>()
                .norm_sqr(),
            FidelityMode::PhaseMaximized => {
                let s: f64 = self
                    .amplitudes
                    .iter()
                    .zip(state)
                    .map(|(t, a)| t.norm() * a.norm())
                    .sum();
                s * s
            }
        };
        f.clamp(0.0, 1.0)
    }
}

/// Unit vector on chain index `n`: the state `|W^N_n>|n>`.
pub fn dicke_target(n_ions: usize, n: usize) -> Result<TargetSpec> {
    if n > n_ions {
        return Err(Error::invalid(format!(
            "Dicke excitation {n} out of range 0..={n_ions}"
        )));
    }
    let mut amplitudes = DVector::zeros(n_ions + 1);
    amplitudes[n] = C64::new(1.0, 0.0);
    Ok(TargetSpec {
        amplitudes,
        kind: TargetKind::Dicke(n),
        mode: FidelityMode::Fixed,
    })
}

/// `(e_0 + e_N) / sqrt 2` with relative phase zero.
pub fn noon_target(n_ions: usize) -> Result<TargetSpec> {
    if n_ions == 0 {
        return Err(Error::invalid("NOON target needs at least one ion"));
    }
    let mut amplitudes = DVector::zeros(n_ions + 1);
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amplitudes[0] = h;
    amplitudes[n_ions] = h;
    Ok(TargetSpec {
        amplitudes,
        kind: TargetKind::Noon,
        mode: FidelityMode::Fixed,
    })
}

/// Generalized Laguerre polynomial `L^1_n(x)` by upward recurrence.
pub fn laguerre_assoc(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 2.0 - x) * cur - (kf + 1.0) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `lambda_{nu-1,nu} / g = L^1_{nu-1}(eta^2) sqrt(N - nu + 1)` for `nu = 1..=N`.
pub fn chain_couplings(config: &SystemConfig) -> Vec<f64> {
    let n = config.n_ions();
    let x = config.lamb_dicke() * config.lamb_dicke();
    (1..=n)
        .map(|nu| laguerre_assoc(nu - 1, x) * ((n - nu + 1) as f64).sqrt())
        .collect()
}

/// Integrated Hamiltonian `(1/hbar) int H dt` of one pulse on the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    entries: DMatrix<C64>,
}

impl GeneratorMatrix {
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.entries
    }
}

/// `G(n-1, n) = (A pi / 2) (lambda/g) e^{-i phi pi}`, `G(n, n-1)` its conjugate.
pub fn build_generator(config: &SystemConfig, pulse: Pulse) -> GeneratorMatrix {
    let dim = config.chain_dim();
    let theta = pulse.area() * PI / 2.0;
    let lowering = C64::from_polar(1.0, -pulse.phase() * PI);
    let mut entries = DMatrix::zeros(dim, dim);
    for (i, c) in chain_couplings(config).into_iter().enumerate() {
        let v = lowering * (theta * c);
        entries[(i, i + 1)] = v;
        entries[(i + 1, i)] = v.conj();
    }
    GeneratorMatrix { entries }
}

/// Exact propagator for one chain configuration.
///
/// Every pulse generator is `theta * P K P^dagger` with `K` the real
/// symmetric coupling matrix, `theta = A pi / 2` and
/// `P = diag(e^{i n phi pi})`. `K` is diagonalized once, so each pulse costs
/// a phase rotation and a known real spectrum.
#[derive(Debug, Clone)]
pub struct ChainModel {
    config: SystemConfig,
    couplings: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector for `eigenvalues[j]`.
    eigenvectors: DMatrix<f64>,
}

impl ChainModel {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        let dim = config.chain_dim();
        let couplings = chain_couplings(config);
        if couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite chain coupling".into()));
        }
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        for (i, &c) in couplings.iter().enumerate() {
            k[(i, i + 1)] = c;
            k[(i + 1, i)] = c;
        }
        let eig = SymmetricEigen::try_new(k, 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("coupling matrix eigendecomposition failed".into()))?;
        Ok(Self {
            config: *config,
            couplings,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.chain_dim()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Eigenvalues of the dimensionless coupling matrix `K`.
    pub fn coupling_spectrum(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(-i G)` for a pulse of the given area and phase (units of pi).
    /// The area is not range-checked; negative areas reverse the rotation.
    pub fn propagator_raw(&self, area: f64, phase: f64) -> DMatrix<C64> {
        let dim = self.dim();
        if area == 0.0 {
            return DMatrix::identity(dim, dim);
        }
        let theta = area * PI / 2.0;
        let phasors: Vec<C64> = (0..dim)
            .map(|n| C64::from_polar(1.0, n as f64 * phase * PI))
            .collect();
        let spectral: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&l| C64::from_polar(1.0, -theta * l))
            .collect();
        let v = &self.eigenvectors;
        DMatrix::from_fn(dim, dim, |a, b| {
            let s: C64 = (0..dim).map(|j| spectral[j] * (v[(a, j)] * v[(b, j)])).sum();
            phasors[a] * phasors[b].conj() * s
        })
    }

    pub fn pulse_propagator(&self, pulse: Pulse) -> DMatrix<C64> {
        self.propagator_raw(pulse.area(), pulse.phase())
    }

    /// `U_M ... U_2 U_1`.
    pub fn sequence_propagator(&self, seq: &PulseSequence) -> DMatrix<C64> {
        let dim = self.dim();
        seq.pulses()
            .iter()
            .fold(DMatrix::identity(dim, dim), |acc, &p| self.pulse_propagator(p) * acc)
    }

    /// Applies one pulse to `state` in place in `O(dim^2)`.
    pub fn apply_raw(&self, area: f64, phase: f64, state: &mut [C64], scratch: &mut Vec<C64>) {
        let dim = self.dim();
        debug_assert_eq!(state.len(), dim);
        if area == 0.0 {
            return;
        }
        let theta = area * PI / 2.0;
        let v = &self.eigenvectors;
        // w = P^dagger state
        for (n, a) in state.iter_mut().enumerate() {
            *a *= C64::from_polar(1.0, -(n as f64) * phase * PI);
        }
        // scratch = diag(e^{-i theta lambda}) V^T w
        scratch.clear();
        scratch.extend((0..dim).map(|j| {
            let proj: C64 = (0..dim).map(|n| state[n] * v[(n, j)]).sum();
            proj * C64::from_polar(1.0, -theta * self.eigenvalues[j])
        }));
        // state = P V scratch
        for (n, a) in state.iter_mut().enumerate() {
            let s: C64 = (0..dim).map(|j| scratch[j] * v[(n, j)]).sum();
            *a = s * C64::from_polar(1.0, n as f64 * phase * PI);
        }
    }

    /// Final chain state after `seq`, starting from the ground state.
    pub fn evolve(&self, seq: &PulseSequence) -> ChainState {
        let mut state = vec![C64::new(0.0, 0.0); self.dim()];
        state[0] = C64::new(1.0, 0.0);
        let mut scratch = Vec::with_capacity(self.dim());
        for p in seq.pulses() {
            self.apply_raw(p.area(), p.phase(), &mut state, &mut scratch);
        }
        ChainState::from_amplitudes(DVector::from_vec(state))
    }

    /// Chain state after each pulse, the initial ground state first.
    pub fn trajectory(&self, seq: &PulseSequence) -> Vec<ChainState> {
        let mut state = vec![C64::new(0.0, 0.0); self.dim()];
        state[0] = C64::new(1.0, 0.0);
        let mut scratch = Vec::with_capacity(self.dim());
        let mut out = vec![ChainState::from_amplitudes(DVector::from_column_slice(&state))];
        for p in seq.pulses() {
            self.apply_raw(p.area(), p.phase(), &mut state, &mut scratch);
            out.push(ChainState::from_amplitudes(DVector::from_column_slice(&state)));
        }
        out
    }

    pub fn fidelity(&self, seq: &PulseSequence, target: &TargetSpec) -> Result<f64> {
        check_target_dim(&self.config, target)?;
        Ok(target.score(self.evolve(seq).amplitudes().as_slice()))
    }
}

fn check_target_dim(config: &SystemConfig, target: &TargetSpec) -> Result<()> {
    if target.dim() != config.chain_dim() {
        return Err(Error::invalid(format!(
            "target has {} amplitudes, chain for N = {} has {}",
            target.dim(),
            config.n_ions(),
            config.chain_dim()
        )));
    }
    Ok(())
}

pub fn pulse_propagator(config: &SystemConfig, pulse: Pulse) -> Result<DMatrix<C64>> {
    Ok(ChainModel::new(config)?.pulse_propagator(pulse))
}

pub fn sequence_propagator(config: &SystemConfig, seq: &PulseSequence) -> Result<DMatrix<C64>> {
    Ok(ChainModel::new(config)?.sequence_propagator(seq))
}

/// `|<t| U_tot |00..0>|0>|^2`, scored by the target's [`FidelityMode`].
pub fn fidelity(config: &SystemConfig, seq: &PulseSequence, target: &TargetSpec) -> Result<f64> {
    ChainModel::new(config)?.fidelity(seq, target)
}

/// Largest entry of `|U^dagger U - I|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - C64::new(expect, 0.0)).norm());
        }
    }
    worst
}
