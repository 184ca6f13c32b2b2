//! Replays every built-in Dicke and NOON sequence on the ideal chain.
//!
//! ```text
//! cargo run --example replay_tables
//! ```

use ionchain::chain::{ChainModel, SystemConfig};
use ionchain::cli::{format_pulse_row, target_label};
use ionchain::tables::all_rows;

fn main() -> ionchain::Result<()> {
    println!("{:<9} {:<24} {:>6} {:>9}  (A_k, phi_k)", "row", "target", "A_tot", "fidelity");
    for row in all_rows() {
        let model = ChainModel::new(&SystemConfig::ideal(row.n_ions)?)?;
        let seq = row.sequence();
        let target = row.target();
        let f = model.fidelity(&seq, &target)?;
        println!(
            "{:<9} {:<24} {:>6.3} {:>9.6}  {}",
            row.label(),
            target_label(&target),
            seq.total_area(),
            f,
            format_pulse_row(&seq)
        );
    }
    Ok(())
}
