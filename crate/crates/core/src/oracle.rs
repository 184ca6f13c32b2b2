//! Brute-force reference on the full `2^N (x) {0..nu_max}` space.
//!
//! Nothing here uses the chain reduction: the generator is assembled from the
//! single-ion raising operators and the deformed phonon ladder, and states are
//! propagated with a Taylor series on the sparse matrix. Basis index of
//! `(b, nu)` is `b * (nu_max + 1) + nu`, where bit `k` of `b` is ion `k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chain::{laguerre_assoc, ChainModel, ChainState, Pulse, PulseSequence, SystemConfig, C64};
use crate::error::{Error, Result};

/// Largest ion count the full-space oracle accepts.
pub const MAX_ORACLE_IONS: usize = 12;

/// Largest ion count for the internal-space symmetry check.
pub const MAX_SPECTRUM_IONS: usize = 10;

/// Population on the top phonon level above which truncation is an error.
pub const CUTOFF_LEAKAGE_LIMIT: f64 = 1e-12;

/// Default phonon cutoff for `n_ions` ions.
pub fn default_cutoff(n_ions: usize) -> usize {
    n_ions + 4
}

fn check_oracle_size(config: &SystemConfig, nu_max: usize) -> Result<()> {
    let n = config.n_ions();
    if n > MAX_ORACLE_IONS {
        return Err(Error::invalid(format!(
            "full-space oracle supports at most {MAX_ORACLE_IONS} ions, got {n}"
        )));
    }
    if nu_max < n {
        return Err(Error::invalid(format!(
            "phonon cutoff {nu_max} cannot hold the {n}-phonon chain end"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    n_ions: usize,
    phonon_cutoff: usize,
    amplitudes: Vec<C64>,
}

impl FullState {
    /// `|00..0>|0>`.
    pub fn ground(n_ions: usize, phonon_cutoff: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); (1 << n_ions) * (phonon_cutoff + 1)];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self {
            n_ions,
            phonon_cutoff,
            amplitudes,
        }
    }

    pub fn from_amplitudes(n_ions: usize, phonon_cutoff: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != (1 << n_ions) * (phonon_cutoff + 1) {
            return Err(Error::invalid("full-state amplitude count does not match dimensions"));
        }
        Ok(Self {
            n_ions,
            phonon_cutoff,
            amplitudes,
        })
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn phonon_cutoff(&self) -> usize {
        self.phonon_cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn index(&self, bits: usize, phonons: usize) -> usize {
        bits * (self.phonon_cutoff + 1) + phonons
    }

    pub fn amplitude(&self, bits: usize, phonons: usize) -> C64 {
        self.amplitudes[self.index(bits, phonons)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population sitting on `nu = nu_max`.
    pub fn edge_population(&self) -> f64 {
        (0..1usize << self.n_ions)
            .map(|b| self.amplitude(b, self.phonon_cutoff).norm_sqr())
            .sum()
    }

    /// Population with internal excitation count different from the phonon number.
    pub fn off_sector_population(&self) -> f64 {
        let stride = self.phonon_cutoff + 1;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / stride).count_ones() as usize != i % stride)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Sparse Hermitian generator `(1/hbar) int H dt` on the truncated space.
#[derive(Debug, Clone)]
pub struct FullGenerator {
    dim: usize,
    /// Row-wise `(column, value)` lists.
    rows: Vec<Vec<(usize, C64)>>,
}

impl FullGenerator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.rows[row]
            .iter()
            .find(|(c, _)| *c == col)
            .map(|(_, v)| *v)
            .unwrap_or_default()
    }

    pub fn rows(&self) -> &[Vec<(usize, C64)>] {
        &self.rows
    }

    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(c, v)| v * x[c]).sum();
        }
    }

    /// Max absolute row sum; bounds the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `psi <- exp(-i G) psi` by Taylor steps of spectral radius at most 4.
    pub fn exp_apply(&self, psi: &mut [C64]) {
        let norm = self.norm_bound();
        if norm == 0.0 {
            return;
        }
        let steps = (norm / 4.0).ceil().max(1.0) as usize;
        let tau = C64::new(0.0, -1.0 / steps as f64);
        let mut term = vec![C64::default(); self.dim];
        let mut next = vec![C64::default(); self.dim];
        for _ in 0..steps {
            term.copy_from_slice(psi);
            for k in 1..100 {
                self.apply(&term, &mut next);
                let scale = tau / k as f64;
                let mut size = 0.0f64;
                for (t, n) in term.iter_mut().zip(&next) {
                    *t = n * scale;
                    size = size.max(t.norm());
                }
                for (p, t) in psi.iter_mut().zip(&term) {
                    *p += t;
                }
                if size < 1e-18 {
                    break;
                }
            }
        }
    }
}

/// `(A pi / 2) sum_k [e^{i phi pi} a^dagger(eta) sigma+_k + h.c.]`, with
/// `<nu+1| a^dagger(eta) |nu> = L^1_nu(eta^2) / sqrt(nu + 1)`.
pub fn build_full_generator(config: &SystemConfig, pulse: Pulse, nu_max: usize) -> Result<FullGenerator> {
    check_oracle_size(config, nu_max)?;
    let n = config.n_ions();
    let stride = nu_max + 1;
    let dim = (1usize << n) * stride;
    let theta = pulse.area() * PI / 2.0;
    let raise_phase = C64::from_polar(1.0, pulse.phase() * PI);
    let x = config.lamb_dicke() * config.lamb_dicke();
    let ladder: Vec<f64> = (0..nu_max)
        .map(|nu| laguerre_assoc(nu, x) / ((nu + 1) as f64).sqrt())
        .collect();

    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
    if theta != 0.0 {
        for b in 0..1usize << n {
            for (nu, &l) in ladder.iter().enumerate() {
                let from = b * stride + nu;
                for k in 0..n {
                    if b & (1 << k) != 0 {
                        continue;
                    }
                    let to = (b | (1 << k)) * stride + nu + 1;
                    let v = raise_phase * (theta * l);
                    rows[to].push((from, v));
                    rows[from].push((to, v.conj()));
                }
            }
        }
    }
    for r in &mut rows {
        r.sort_by_key(|(c, _)| *c);
    }
    Ok(FullGenerator { dim, rows })
}

/// Full-space evolution of `|00..0>|0>` under `seq`.
///
/// Fails with [`Error::Cutoff`] if the top phonon level ever holds
/// [`CUTOFF_LEAKAGE_LIMIT`] or more population at a pulse boundary.
pub fn evolve_full(config: &SystemConfig, seq: &PulseSequence, nu_max: usize) -> Result<FullState> {
    Ok(evolve_full_trajectory(config, seq, nu_max)?
        .pop()
        .expect("trajectory holds the initial state"))
}

fn evolve_full_trajectory(config: &SystemConfig, seq: &PulseSequence, nu_max: usize) -> Result<Vec<FullState>> {
    check_oracle_size(config, nu_max)?;
    let mut state = FullState::ground(config.n_ions(), nu_max);
    let mut out = vec![state.clone()];
    for &p in seq.pulses() {
        let g = build_full_generator(config, p, nu_max)?;
        g.exp_apply(&mut state.amplitudes);
        let leakage = state.edge_population();
        if leakage >= CUTOFF_LEAKAGE_LIMIT {
            return Err(Error::Cutoff { cutoff: nu_max, leakage });
        }
        out.push(state.clone());
    }
    Ok(out)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Overlaps with `|W^N_n>|n>` and the population outside the chain.
pub fn project_to_chain(full: &FullState) -> (ChainState, f64) {
    let n = full.n_ions();
    let mut chain = vec![C64::default(); n + 1];
    for b in 0..1usize << n {
        let exc = b.count_ones() as usize;
        if exc <= full.phonon_cutoff() {
            chain[exc] += full.amplitude(b, exc);
        }
    }
    for (k, a) in chain.iter_mut().enumerate() {
        *a /= binomial(n, k).sqrt();
    }
    let captured: f64 = chain.iter().map(|a| a.norm_sqr()).sum();
    let leakage = (full.norm_sqr() - captured).max(0.0);
    (
        ChainState::from_amplitudes(nalgebra::DVector::from_vec(chain)),
        leakage,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub max_amplitude_discrepancy: f64,
    /// Largest population outside the symmetric chain.
    pub max_leakage: f64,
    /// Largest population on the top phonon level.
    pub max_edge_population: f64,
    /// Largest population with `n != nu`.
    pub max_off_sector_population: f64,
    /// Largest `|1 - <psi|psi>|` on the full space.
    pub max_norm_error: f64,
}

impl FactorizationReport {
    pub fn passes(&self, discrepancy_tol: f64, leakage_tol: f64) -> bool {
        self.max_amplitude_discrepancy < discrepancy_tol && self.max_leakage < leakage_tol
    }
}

/// Compares the full-space evolution, projected onto the chain, with the
/// chain model after every pulse.
pub fn verify_factorization(config: &SystemConfig, seq: &PulseSequence, nu_max: usize) -> Result<FactorizationReport> {
    let full = evolve_full_trajectory(config, seq, nu_max)?;
    let chain = ChainModel::new(config)?.trajectory(seq);
    let mut report = FactorizationReport {
        max_amplitude_discrepancy: 0.0,
        max_leakage: 0.0,
        max_edge_population: 0.0,
        max_off_sector_population: 0.0,
        max_norm_error: 0.0,
    };
    for (f, c) in full.iter().zip(&chain) {
        let (projected, leakage) = project_to_chain(f);
        let disc = projected
            .amplitudes()
            .iter()
            .zip(c.amplitudes().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        report.max_amplitude_discrepancy = report.max_amplitude_discrepancy.max(disc);
        report.max_leakage = report.max_leakage.max(leakage);
        report.max_edge_population = report.max_edge_population.max(f.edge_population());
        report.max_off_sector_population = report.max_off_sector_population.max(f.off_sector_population());
        report.max_norm_error = report.max_norm_error.max((1.0 - f.norm_sqr()).abs());
    }
    Ok(report)
}

/// Collective spin operators on the `2^N` internal space.
mod spin {
    use super::C64;

    /// `J+ = sum_k sigma+_k`.
    pub fn raise(n: usize, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); v.len()];
        for (b, &a) in v.iter().enumerate() {
            for k in 0..n {
                if b & (1 << k) == 0 {
                    out[b | (1 << k)] += a;
                }
            }
        }
        out
    }

    pub fn lower(n: usize, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); v.len()];
        for (b, &a) in v.iter().enumerate() {
            for k in 0..n {
                if b & (1 << k) != 0 {
                    out[b & !(1 << k)] += a;
                }
            }
        }
        out
    }

    /// `J_z = (n_excited - N/2)`.
    pub fn z(n: usize, v: &[C64]) -> Vec<C64> {
        v.iter()
            .enumerate()
            .map(|(b, &a)| a * (b.count_ones() as f64 - n as f64 / 2.0))
            .collect()
    }

    /// Exchanges ions `k` and `l`.
    pub fn swap(k: usize, l: usize, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); v.len()];
        for (b, &a) in v.iter().enumerate() {
            let bk = (b >> k) & 1;
            let bl = (b >> l) & 1;
            let mut s = b & !(1 << k) & !(1 << l);
            s |= bl << k;
            s |= bk << l;
            out[s] = a;
        }
        out
    }
}

/// `J^2 v = (J+ J- + J- J+) v / 2 + J_z^2 v`.
pub fn j_squared_apply(n_ions: usize, v: &[C64]) -> Vec<C64> {
    let pm = spin::raise(n_ions, &spin::lower(n_ions, v));
    let mp = spin::lower(n_ions, &spin::raise(n_ions, v));
    let zz = spin::z(n_ions, &spin::z(n_ions, v));
    pm.iter()
        .zip(&mp)
        .zip(&zz)
        .map(|((a, b), c)| (a + b) * 0.5 + c)
        .collect()
}

/// `<v| J^2 |v> / <v|v>`.
pub fn j_squared_expectation(n_ions: usize, v: &[C64]) -> f64 {
    let jv = j_squared_apply(n_ions, v);
    let num: C64 = v.iter().zip(&jv).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    num.re / den
}

/// Equal-weight superposition of all `n`-excitation bitstrings.
pub fn dicke_internal_state(n_ions: usize, n: usize) -> Result<Vec<C64>> {
    if n > n_ions {
        return Err(Error::invalid(format!("excitation {n} out of range 0..={n_ions}")));
    }
    let amp = 1.0 / binomial(n_ions, n).sqrt();
    Ok((0..1usize << n_ions)
        .map(|b| {
            if b.count_ones() as usize == n {
                C64::new(amp, 0.0)
            } else {
                C64::default()
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeSpectrumEntry {
    pub excitations: usize,
    pub j_squared: f64,
    /// `max |J^2 w - j(j+1) w|`.
    pub eigen_residual: f64,
    /// `max_{k<l} max |S_kl w - w|`.
    pub swap_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n_ions: usize,
    /// `(1 + N/2) N/2`.
    pub expected_eigenvalue: f64,
    pub entries: Vec<DickeSpectrumEntry>,
}

impl SpectrumReport {
    pub fn max_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.eigen_residual.max(e.swap_residual).max((e.j_squared - self.expected_eigenvalue).abs()))
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

/// Checks every Dicke state against `J^2` and every pairwise swap.
pub fn symmetry_spectrum_check(n_ions: usize) -> Result<SpectrumReport> {
    if n_ions == 0 || n_ions > MAX_SPECTRUM_IONS {
        return Err(Error::invalid(format!(
            "symmetry check supports 1..={MAX_SPECTRUM_IONS} ions, got {n_ions}"
        )));
    }
    let j = n_ions as f64 / 2.0;
    let expected = (1.0 + j) * j;
    let entries = (0..=n_ions)
        .map(|n| {
            let w = dicke_internal_state(n_ions, n)?;
            let jw = j_squared_apply(n_ions, &w);
            let eigen_residual = jw
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b * expected).norm())
                .fold(0.0, f64::max);
            let mut swap_residual = 0.0f64;
            for k in 0..n_ions {
                for l in k + 1..n_ions {
                    let s = spin::swap(k, l, &w);
                    let r = s.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    swap_residual = swap_residual.max(r);
                }
            }
            Ok(DickeSpectrumEntry {
                excitations: n,
                j_squared: j_squared_expectation(n_ions, &w),
                eigen_residual,
                swap_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumReport {
        n_ions,
        expected_eigenvalue: expected,
        entries,
    })
}
