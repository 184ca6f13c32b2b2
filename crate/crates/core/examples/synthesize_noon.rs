//! Minimal-area NOON sequences, scored up to the relative phase between
//! `|0>|0>` and `|1..1>|N>`.
//!
//! ```text
//! cargo run --release --example synthesize_noon -- 4
//! ```

use ionchain::chain::{noon_target, SystemConfig};
use ionchain::cli::format_pulse_row;
use ionchain::optim::{synthesize, AreaBounds, SearchConfig};

fn main() -> ionchain::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);

    let config = SystemConfig::ideal(n)?;
    let target = noon_target(n)?.phase_maximized();
    let search = SearchConfig {
        n_restarts: 2000,
        area_bounds: AreaBounds::new(0.0, 0.7)?,
        ..SearchConfig::default()
    };
    let best = &synthesize(&config, &target, &search)?[0];

    println!("N = {n}: A_tot = {:.3} pi (bound N/3 = {:.3})", best.total_area, n as f64 / 3.0);
    println!("fidelity {:.6}, restart {}", best.fidelity, best.restart_index);
    println!("{}", format_pulse_row(&best.sequence));
    Ok(())
}
