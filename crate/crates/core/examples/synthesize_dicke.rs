//! Multistart search for a minimal-area sequence preparing `|W^N_{N/2}>`.
//!
//! ```text
//! cargo run --release --example synthesize_dicke -- 4 2000
//! ```

use ionchain::chain::{dicke_target, SystemConfig};
use ionchain::cli::format_pulse_row;
use ionchain::optim::{synthesize, SearchConfig};

fn main() -> ionchain::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let restarts: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);

    let config = SystemConfig::ideal(n)?;
    let target = dicke_target(n, n / 2)?;
    let search = SearchConfig {
        n_restarts: restarts,
        rng_seed: 1,
        ..SearchConfig::default()
    };
    let solutions = synthesize(&config, &target, &search)?;

    println!("N = {n}, target |W^{n}_{}>, {} qualifying solutions", n / 2, solutions.len());
    for s in solutions.iter().take(3) {
        println!("A_tot = {:.3}  F = {:.6}  {}", s.total_area, s.fidelity, format_pulse_row(&s.sequence));
    }
    Ok(())
}
