//! Compares the chain model with brute-force evolution on the full
//! `2^N x (nu_max + 1)` space, away from the Lamb-Dicke limit.
//!
//! ```text
//! cargo run --release --example verify_factorization -- 5 0.2
//! ```

use ionchain::chain::SystemConfig;
use ionchain::oracle::{default_cutoff, symmetry_spectrum_check, verify_factorization};
use ionchain::optim::{params_to_sequence, random_start, AreaBounds};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ionchain::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let eta: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);

    let config = SystemConfig::new(n, eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..5 {
        let seq = params_to_sequence(n, &random_start(n, AreaBounds::default(), &mut rng))?;
        let r = verify_factorization(&config, &seq, default_cutoff(n))?;
        println!(
            "trial {trial}: discrepancy {:.2e}, leakage {:.2e}, edge {:.2e}",
            r.max_amplitude_discrepancy, r.max_leakage, r.max_edge_population
        );
    }
    let spectrum = symmetry_spectrum_check(n)?;
    println!(
        "J^2 = {} on every Dicke state, residual {:.2e}",
        spectrum.expected_eigenvalue,
        spectrum.max_residual()
    );
    Ok(())
}
