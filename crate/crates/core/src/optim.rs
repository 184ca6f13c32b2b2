//! Multistart quasi-Newton synthesis of `N`-pulse sequences.
//!
//! The free parameters of an `N`-pulse sequence are laid out as
//! `[A_1, ..., A_N, phi_2, ..., phi_N]` (units of pi); `phi_1 = 0` is the
//! phase reference and is not a coordinate.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{wrap_phase, ChainModel, Pulse, PulseSequence, SystemConfig, TargetSpec, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaBounds {
    pub lower: f64,
    pub upper: f64,
}

impl AreaBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower >= 0.0 && upper > lower) {
            return Err(Error::invalid(format!("invalid area bounds [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }
}

impl Default for AreaBounds {
    fn default() -> Self {
        Self { lower: 0.0, upper: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_restarts: usize,
    /// Threshold for a solution to count as reaching the target. This is a
    /// tunable, not a physical constant.
    pub fidelity_goal: f64,
    pub max_iterations: usize,
    /// Central-difference step, units of pi.
    pub gradient_step: f64,
    /// Stop once the projected gradient infinity-norm drops below this.
    pub convergence_tol: f64,
    pub area_bounds: AreaBounds,
    pub rng_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_restarts: 500,
            fidelity_goal: 0.999,
            max_iterations: 500,
            gradient_step: 1e-6,
            convergence_tol: 1e-9,
            area_bounds: AreaBounds::default(),
            rng_seed: 0,
        }
    }
}

impl SearchConfig {
    /// Restart budget scaled to the ion count: 500 up to six ions, 2000 beyond.
    pub fn for_ions(n_ions: usize) -> Self {
        Self {
            n_restarts: if n_ions <= 6 { 500 } else { 2000 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 {
            return Err(Error::invalid("n_restarts must be positive"));
        }
        if !(self.fidelity_goal > 0.0 && self.fidelity_goal <= 1.0) {
            return Err(Error::invalid(format!(
                "fidelity_goal must lie in (0, 1], got {}",
                self.fidelity_goal
            )));
        }
        if !(self.gradient_step > 0.0 && self.gradient_step.is_finite()) {
            return Err(Error::invalid("gradient_step must be positive"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid("convergence_tol must be positive"));
        }
        AreaBounds::new(self.area_bounds.lower, self.area_bounds.upper)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub sequence: PulseSequence,
    pub fidelity: f64,
    /// Units of pi.
    pub total_area: f64,
    pub restart_index: usize,
    pub iterations: usize,
    /// `fidelity >= fidelity_goal`.
    pub qualified: bool,
}

/// Number of free parameters for `n_ions` pulses.
pub fn parameter_count(n_ions: usize) -> usize {
    2 * n_ions - 1
}

/// Uniform areas within `bounds`, uniform phases in `[0, 2)`.
pub fn random_start<R: Rng + ?Sized>(n_ions: usize, bounds: AreaBounds, rng: &mut R) -> Vec<f64> {
    let mut params = Vec::with_capacity(parameter_count(n_ions));
    for _ in 0..n_ions {
        params.push(rng.random_range(bounds.lower..=bounds.upper));
    }
    for _ in 1..n_ions {
        params.push(rng.random_range(0.0..2.0));
    }
    params
}

/// Rng stream owned by one restart.
pub fn restart_rng(seed: u64, restart_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart_index as u64);
    rng
}

/// Converts a parameter vector to a sequence: phases wrapped, `phi_1 = 0`,
/// areas clamped at zero.
pub fn params_to_sequence(n_ions: usize, params: &[f64]) -> Result<PulseSequence> {
    if params.len() != parameter_count(n_ions) {
        return Err(Error::invalid(format!(
            "expected {} parameters for {n_ions} pulses, got {}",
            parameter_count(n_ions),
            params.len()
        )));
    }
    let pulses = (0..n_ions)
        .map(|k| {
            let phase = if k == 0 { 0.0 } else { wrap_phase(params[n_ions + k - 1]) };
            Pulse::new(params[k].max(0.0), phase)
        })
        .collect::<Result<Vec<_>>>()?;
    PulseSequence::new(pulses)
}

/// Fidelity as a function of the free parameters.
#[derive(Debug, Clone)]
pub struct Objective {
    model: ChainModel,
    target: TargetSpec,
}

impl Objective {
    pub fn new(config: &SystemConfig, target: &TargetSpec) -> Result<Self> {
        if target.dim() != config.chain_dim() {
            return Err(Error::invalid(format!(
                "target has {} amplitudes, expected {}",
                target.dim(),
                config.chain_dim()
            )));
        }
        Ok(Self {
            model: ChainModel::new(config)?,
            target: target.clone(),
        })
    }

    pub fn n_ions(&self) -> usize {
        self.model.config().n_ions()
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    pub fn fidelity(&self, params: &[f64]) -> f64 {
        let n = self.n_ions();
        let mut state = vec![C64::new(0.0, 0.0); n + 1];
        state[0] = C64::new(1.0, 0.0);
        let mut scratch = Vec::with_capacity(n + 1);
        for k in 0..n {
            let phase = if k == 0 { 0.0 } else { params[n + k - 1] };
            self.model.apply_raw(params[k], phase, &mut state, &mut scratch);
        }
        self.target.score(&state)
    }

    /// Fidelity and its central-difference gradient.
    ///
    /// A shift of coordinate `i` touches a single pulse, so each difference
    /// quotient reuses the state before that pulse and the product of the
    /// pulses after it.
    pub fn fidelity_and_gradient(&self, params: &[f64], step: f64) -> (f64, Vec<f64>) {
        let n = self.n_ions();
        let dim = n + 1;
        let phase_of = |k: usize| if k == 0 { 0.0 } else { params[n + k - 1] };

        let mut prefix = Vec::with_capacity(n + 1);
        let mut state = vec![C64::new(0.0, 0.0); dim];
        state[0] = C64::new(1.0, 0.0);
        let mut scratch = Vec::with_capacity(dim);
        prefix.push(state.clone());
        for k in 0..n {
            self.model.apply_raw(params[k], phase_of(k), &mut state, &mut scratch);
            prefix.push(state.clone());
        }
        let f = self.target.score(&state);

        // suffix[k] = U_{n-1} ... U_{k+1}
        let mut suffix = vec![DMatrix::<C64>::identity(dim, dim); n];
        for k in (0..n.saturating_sub(1)).rev() {
            suffix[k] = &suffix[k + 1] * self.model.propagator_raw(params[k + 1], phase_of(k + 1));
        }

        let mut probe = vec![C64::new(0.0, 0.0); dim];
        let mut out = vec![C64::new(0.0, 0.0); dim];
        let mut eval = |k: usize, area: f64, phase: f64| -> f64 {
            probe.copy_from_slice(&prefix[k]);
            self.model.apply_raw(area, phase, &mut probe, &mut scratch);
            let s = &suffix[k];
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..dim).map(|c| s[(r, c)] * probe[c]).sum();
            }
            self.target.score(&out)
        };

        let mut grad = Vec::with_capacity(params.len());
        for k in 0..n {
            let (a, p) = (params[k], phase_of(k));
            grad.push((eval(k, a + step, p) - eval(k, a - step, p)) / (2.0 * step));
        }
        for k in 1..n {
            let (a, p) = (params[k], phase_of(k));
            grad.push((eval(k, a, p + step) - eval(k, a, p - step)) / (2.0 * step));
        }
        (f, grad)
    }

    /// Plain central differences through full re-evaluation.
    pub fn fidelity_and_gradient_naive(&self, params: &[f64], step: f64) -> (f64, Vec<f64>) {
        let f = self.fidelity(params);
        let mut x = params.to_vec();
        let grad = (0..params.len())
            .map(|i| {
                let orig = x[i];
                x[i] = orig + step;
                let up = self.fidelity(&x);
                x[i] = orig - step;
                let down = self.fidelity(&x);
                x[i] = orig;
                (up - down) / (2.0 * step)
            })
            .collect();
        (f, grad)
    }
}

pub fn objective_gradient(
    config: &SystemConfig,
    target: &TargetSpec,
    params: &[f64],
    gradient_step: f64,
) -> Result<(f64, Vec<f64>)> {
    let obj = Objective::new(config, target)?;
    if params.len() != parameter_count(obj.n_ions()) {
        return Err(Error::invalid("parameter vector has the wrong length"));
    }
    Ok(obj.fidelity_and_gradient(params, gradient_step))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected BFGS on `1 - F` from one start point.
fn refine(obj: &Objective, start: &[f64], search: &SearchConfig) -> Result<(Vec<f64>, usize)> {
    let n_ions = obj.n_ions();
    let dim = start.len();
    let bounds = search.area_bounds;
    let project = |x: &mut [f64]| {
        for a in x.iter_mut().take(n_ions) {
            *a = a.clamp(bounds.lower, bounds.upper);
        }
    };
    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (f, g) = obj.fidelity_and_gradient(x, search.gradient_step);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite fidelity during refinement".into()));
        }
        Ok((1.0 - f, g.into_iter().map(|v| -v).collect()))
    };
    // Coordinates pinned at a bound with the descent direction pointing outward.
    let active = |x: &[f64], g: &[f64]| -> Vec<bool> {
        (0..dim)
            .map(|i| {
                i < n_ions
                    && ((x[i] <= bounds.lower && g[i] > 0.0) || (x[i] >= bounds.upper && g[i] < 0.0))
            })
            .collect()
    };

    let mut x = start.to_vec();
    project(&mut x);
    let (mut f, mut g) = eval(&x)?;
    let identity = |scale: f64| -> Vec<Vec<f64>> {
        (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect()
    };
    let mut h = identity(1.0);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < search.max_iterations {
        let act = active(&x, &g);
        let pg_norm = (0..dim)
            .filter(|&i| !act[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg_norm < search.convergence_tol {
            break;
        }

        let mut d: Vec<f64> = (0..dim)
            .map(|i| if act[i] { 0.0 } else { -dot(&h[i], &g) })
            .collect();
        // Never push a pinned area further outside the box.
        for i in 0..n_ions {
            if (x[i] <= bounds.lower && d[i] < 0.0) || (x[i] >= bounds.upper && d[i] > 0.0) {
                d[i] = 0.0;
            }
        }
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            h = identity(1.0);
            fresh = true;
            d = (0..dim).map(|i| if act[i] { 0.0 } else { -g[i] }).collect();
            slope = dot(&d, &g);
        }

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            project(&mut xn);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step).min(t * slope * 1e-3);
            let fn_ = 1.0 - obj.fidelity(&xn);
            if !fn_.is_finite() {
                return Err(Error::Numerical("non-finite fidelity during line search".into()));
            }
            if fn_ < f && fn_ <= f + 1e-4 * decrease {
                accepted = Some((xn, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, s)) = accepted else {
            if fresh {
                break;
            }
            h = identity(1.0);
            fresh = true;
            continue;
        };

        let (fn_, gn) = eval(&xn)?;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh {
                // Rescale the initial inverse Hessian before the first update.
                let scale = sy / dot(&y, &y);
                h = identity(scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        x = xn;
        f = fn_;
        g = gn;
        iterations += 1;
    }
    Ok((x, iterations))
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let dim = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..dim).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..dim {
        for j in 0..dim {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn solution_from_params(
    obj: &Objective,
    params: &[f64],
    restart_index: usize,
    iterations: usize,
    goal: f64,
) -> Result<Solution> {
    let sequence = params_to_sequence(obj.n_ions(), params)?;
    let fidelity = obj.model().fidelity(&sequence, obj.target())?;
    Ok(Solution {
        total_area: sequence.total_area(),
        sequence,
        fidelity,
        restart_index,
        iterations,
        qualified: fidelity >= goal,
    })
}

/// Quasi-Newton ascent from `start_params` under the box constraint on areas.
pub fn local_refine(
    config: &SystemConfig,
    target: &TargetSpec,
    start_params: &[f64],
    search: &SearchConfig,
) -> Result<Solution> {
    search.validate()?;
    let obj = Objective::new(config, target)?;
    if start_params.len() != parameter_count(obj.n_ions()) {
        return Err(Error::invalid("start vector has the wrong length"));
    }
    let (x, iterations) = refine(&obj, start_params, search)?;
    solution_from_params(&obj, &x, 0, iterations, search.fidelity_goal)
}

/// Ordering key: area bucketed at 1e-6, then higher fidelity, then restart.
fn rank(a: &Solution, b: &Solution) -> std::cmp::Ordering {
    let bucket = |s: &Solution| (s.total_area / 1e-6).round() as i64;
    bucket(a)
        .cmp(&bucket(b))
        .then(b.fidelity.total_cmp(&a.fidelity))
        .then(a.restart_index.cmp(&b.restart_index))
}

/// Runs `n_restarts` independent refinements and returns every solution that
/// reaches the goal, smallest total area first. If none does, the single
/// highest-fidelity result is returned with `qualified = false`.
pub fn synthesize(config: &SystemConfig, target: &TargetSpec, search: &SearchConfig) -> Result<Vec<Solution>> {
    search.validate()?;
    let obj = Objective::new(config, target)?;
    let n_ions = obj.n_ions();

    let results: Vec<Option<Solution>> = (0..search.n_restarts)
        .into_par_iter()
        .map(|idx| {
            let mut rng = restart_rng(search.rng_seed, idx);
            let start = random_start(n_ions, search.area_bounds, &mut rng);
            // A restart that hits a numerical fault is dropped.
            let (x, iters) = refine(&obj, &start, search).ok()?;
            solution_from_params(&obj, &x, idx, iters, search.fidelity_goal).ok()
        })
        .collect();

    let all: Vec<Solution> = results.into_iter().flatten().collect();
    if all.is_empty() {
        return Err(Error::Numerical("every restart failed".into()));
    }
    let mut qualifying: Vec<Solution> = all.iter().filter(|s| s.qualified).cloned().collect();
    if qualifying.is_empty() {
        let best = all
            .into_iter()
            .max_by(|a, b| a.fidelity.total_cmp(&b.fidelity).then(b.restart_index.cmp(&a.restart_index)))
            .expect("non-empty");
        return Ok(vec![best]);
    }
    qualifying.sort_by(rank);
    Ok(qualifying)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{dicke_target, fidelity};

    #[test]
    fn start_vector_lengths_and_determinism() {
        let b = AreaBounds::default();
        assert_eq!(random_start(1, b, &mut restart_rng(1, 0)).len(), 1);
        assert_eq!(random_start(4, b, &mut restart_rng(1, 0)).len(), 7);
        let a = random_start(5, b, &mut restart_rng(42, 3));
        let c = random_start(5, b, &mut restart_rng(42, 3));
        assert_eq!(a, c);
        assert_ne!(a, random_start(5, b, &mut restart_rng(42, 4)));
        for (i, v) in a.iter().enumerate() {
            if i < 5 {
                assert!((0.0..=2.0).contains(v));
            } else {
                assert!((0.0..2.0).contains(v));
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_pi_pulse() {
        let cfg = SystemConfig::ideal(1).unwrap();
        let t = dicke_target(1, 1).unwrap();
        let (f, g) = objective_gradient(&cfg, &t, &[1.0], 1e-6).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
        assert!(g[0].abs() < 1e-5);
    }

    #[test]
    fn phase_gradient_is_zero_when_other_pulses_vanish() {
        // Only pulse 2 has area; its phase is a global phase on a basis-state target.
        let cfg = SystemConfig::ideal(3).unwrap();
        let t = dicke_target(3, 1).unwrap();
        let params = [0.0, 0.7, 0.0, 0.4, 1.3];
        let (_, g) = objective_gradient(&cfg, &t, &params, 1e-6).unwrap();
        assert!(g[3].abs() < 1e-8, "{}", g[3]);
    }

    #[test]
    fn pi_pulse_recovered_from_offset_start() {
        let cfg = SystemConfig::ideal(1).unwrap();
        let t = dicke_target(1, 1).unwrap();
        let sol = local_refine(&cfg, &t, &[0.7], &SearchConfig::default()).unwrap();
        assert!((sol.sequence.pulses()[0].area() - 1.0).abs() < 1e-6, "{:?}", sol);
        assert!(sol.fidelity > 1.0 - 1e-12);
    }

    #[test]
    fn zero_iteration_budget_returns_start() {
        let cfg = SystemConfig::ideal(3).unwrap();
        let t = dicke_target(3, 1).unwrap();
        let search = SearchConfig { max_iterations: 0, ..SearchConfig::default() };
        let start = [0.3, 0.4, 0.5, 0.2, 1.1];
        let sol = local_refine(&cfg, &t, &start, &search).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.sequence, params_to_sequence(3, &start).unwrap());
        let f = fidelity(&cfg, &sol.sequence, &t).unwrap();
        assert_eq!(sol.fidelity, f);
    }

    #[test]
    fn ground_state_target_takes_zero_area() {
        let cfg = SystemConfig::ideal(1).unwrap();
        let t = dicke_target(1, 0).unwrap();
        let search = SearchConfig { n_restarts: 20, ..SearchConfig::default() };
        let sols = synthesize(&cfg, &t, &search).unwrap();
        assert!(sols[0].qualified);
        assert!(sols[0].total_area < 1e-9, "{:?}", sols[0]);
    }

    #[test]
    fn unattainable_goal_returns_flagged_fallback() {
        let cfg = SystemConfig::ideal(2).unwrap();
        let t = dicke_target(2, 1).unwrap();
        let search = SearchConfig {
            n_restarts: 4,
            max_iterations: 1,
            fidelity_goal: 1.0,
            ..SearchConfig::default()
        };
        let sols = synthesize(&cfg, &t, &search).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(!sols[0].qualified || sols[0].fidelity >= 1.0);
    }

    #[test]
    fn invalid_search_configs() {
        let cfg = SystemConfig::ideal(2).unwrap();
        let t = dicke_target(2, 1).unwrap();
        for bad in [
            SearchConfig { n_restarts: 0, ..SearchConfig::default() },
            SearchConfig { fidelity_goal: 0.0, ..SearchConfig::default() },
            SearchConfig { fidelity_goal: 1.5, ..SearchConfig::default() },
            SearchConfig { area_bounds: AreaBounds { lower: -1.0, upper: 2.0 }, ..SearchConfig::default() },
        ] {
            assert!(synthesize(&cfg, &t, &bad).is_err());
        }
    }

    #[test]
    fn reuse_gradient_matches_naive_differences() {
        for (n, eta) in [(1, 0.0), (3, 0.0), (6, 0.1)] {
            let cfg = SystemConfig::new(n, eta).unwrap();
            for target in [dicke_target(n, n / 2).unwrap(), crate::chain::noon_target(n).unwrap().phase_maximized()] {
                let obj = Objective::new(&cfg, &target).unwrap();
                let x = random_start(n, AreaBounds::default(), &mut restart_rng(3, n));
                let (f1, g1) = obj.fidelity_and_gradient(&x, 1e-6);
                let (f2, g2) = obj.fidelity_and_gradient_naive(&x, 1e-6);
                assert!((f1 - f2).abs() < 1e-14);
                for (a, b) in g1.iter().zip(&g2) {
                    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn parameter_mapping_fixes_first_phase() {
        let seq = params_to_sequence(3, &[0.1, 0.2, 0.3, 2.5, -0.25]).unwrap();
        assert_eq!(seq.pulses()[0].phase(), 0.0);
        assert!((seq.pulses()[1].phase() - 0.5).abs() < 1e-15);
        assert!((seq.pulses()[2].phase() - 1.75).abs() < 1e-15);
        assert!(params_to_sequence(3, &[0.1]).is_err());
    }
}
