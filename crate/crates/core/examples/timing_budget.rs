//! Durations of the built-in sequences at `g = omega_trap / 10`.

use ionchain::chain::DEFAULT_TRAP_FREQUENCY;
use ionchain::tables::{all_rows, StateKind};
use ionchain::timing::TimingReport;

fn main() -> ionchain::Result<()> {
    println!("trap frequency {DEFAULT_TRAP_FREQUENCY:.1e} rad/s");
    println!("{:<9} {:>6} {:>9} {:>9}", "row", "A_tot", "T_tot/us", "bound/us");
    for row in all_rows() {
        let r = TimingReport::new(row.sequence().total_area(), DEFAULT_TRAP_FREQUENCY)?;
        let bound = match row.kind {
            StateKind::Dicke => r.dicke_bound_us(row.n_ions),
            StateKind::Noon => r.noon_bound_us(row.n_ions),
        };
        println!("{:<9} {:>6.3} {:>9.3} {:>9.3}", row.label(), r.total_area, r.duration_us, bound);
    }
    Ok(())
}
