//! Spreads three ions evenly over the whole chain,
//! `sum_n |W^3_n>|n> / 2`, with the relative phases left free.

use ionchain::chain::{ChainModel, SystemConfig, TargetSpec, C64};
use ionchain::cli::format_pulse_row;
use ionchain::optim::{synthesize, SearchConfig};
use nalgebra::DVector;

fn main() -> ionchain::Result<()> {
    let n = 3;
    let amps = DVector::from_element(n + 1, C64::new(0.5, 0.0));
    let target = TargetSpec::custom(amps)?.phase_maximized();
    let config = SystemConfig::ideal(n)?;
    let search = SearchConfig {
        n_restarts: 500,
        ..SearchConfig::default()
    };
    let best = &synthesize(&config, &target, &search)?[0];

    println!("{}  A_tot = {:.3}  F = {:.6}", format_pulse_row(&best.sequence), best.total_area, best.fidelity);
    let state = ChainModel::new(&config)?.evolve(&best.sequence);
    for (k, a) in state.amplitudes().iter().enumerate() {
        println!("  |c_{k}|^2 = {:.4}  arg = {:+.3} pi", a.norm_sqr(), a.arg() / std::f64::consts::PI);
    }
    Ok(())
}
