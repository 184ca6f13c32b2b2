//! Fidelity of a built-in sequence under Gaussian area and phase noise,
//! written as CSV to stdout.
//!
//! ```text
//! cargo run --release --example robustness_sweep -- noon:8
//! ```

use ionchain::chain::SystemConfig;
use ionchain::robustness::{fidelity_vs_sigma, NoiseModel};
use ionchain::tables::parse_row_key;

fn main() -> ionchain::Result<()> {
    let key = std::env::args().nth(1).unwrap_or_else(|| "dicke:4".into());
    let row = parse_row_key(&key)?;
    let sigmas: Vec<f64> = (0..=10).map(|k| f64::from(k) * 0.005).collect();
    let model = NoiseModel::new(0.0, 2000, 42)?;
    let curve = fidelity_vs_sigma(&SystemConfig::ideal(row.n_ions)?, &row.sequence(), &row.target(), &sigmas, &model)?;
    curve.write_csv(std::io::stdout())
}
