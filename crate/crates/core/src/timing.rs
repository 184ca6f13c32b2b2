//! Wall-clock duration of a sequence at the maximum safe coupling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling ceiling as a fraction of the trap frequency, keeping the
/// spectator phonon modes unexcited.
pub const COUPLING_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// Units of pi.
    pub total_area: f64,
    /// `g = omega_trap / 10`, rad/s.
    pub coupling_g: f64,
    /// `T_tot = A_tot / g`, microseconds.
    pub duration_us: f64,
    /// Duration of a single pi pulse, microseconds.
    pub pi_pulse_us: f64,
}

impl TimingReport {
    /// `trap_frequency` in rad/s.
    pub fn new(total_area: f64, trap_frequency: f64) -> Result<Self> {
        if !(trap_frequency.is_finite() && trap_frequency > 0.0) {
            return Err(Error::invalid(format!(
                "trap frequency must be positive, got {trap_frequency}"
            )));
        }
        if !(total_area.is_finite() && total_area >= 0.0) {
            return Err(Error::invalid(format!(
                "total area must be nonnegative, got {total_area}"
            )));
        }
        let g = trap_frequency * COUPLING_FRACTION;
        Ok(Self {
            total_area,
            coupling_g: g,
            duration_us: total_area * PI / g * 1e6,
            pi_pulse_us: PI / g * 1e6,
        })
    }

    /// `(N/2) T_pi`, the large-N ceiling for Dicke sequences.
    pub fn dicke_bound_us(&self, n_ions: usize) -> f64 {
        n_ions as f64 / 2.0 * self.pi_pulse_us
    }

    /// `(N/3) T_pi`, the large-N ceiling for NOON sequences.
    pub fn noon_bound_us(&self, n_ions: usize) -> f64 {
        n_ions as f64 / 3.0 * self.pi_pulse_us
    }
}
