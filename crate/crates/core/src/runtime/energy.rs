//! Per-step energy and average power under a neuromorphic cost model.
//!
//! Every ordered pair of distinct units exchanges up to `m * d` synaptic
//! events per step and every unit performs one neuron update.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Energy of one synaptic event, in picojoules.
pub const SYNAPTIC_EVENT_PJ: f64 = 23.6;
/// Energy of one neuron update, in picojoules.
pub const NEURON_UPDATE_PJ: f64 = 89.7;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub n_syn: u64,
    /// Joules per step.
    pub e_step: f64,
    /// Watts.
    pub p_avg: f64,
}

/// `N_syn = n (n - 1) m d`, `E = 23.6 N_syn + 89.7 n` pJ, `P = E / dt_sim`.
pub fn estimate_power(n: u64, d: u64, m: u64, dt_sim: f64) -> Result<PowerEstimate, EnergyError> {
    for (name, v) in [("n", n), ("d", d), ("m", m)] {
        if v == 0 {
            return Err(EnergyError::NonPositive(name));
        }
    }
    if !(dt_sim > 0.0 && dt_sim.is_finite()) {
        return Err(EnergyError::NonPositive("dt_sim"));
    }
    let n_syn = n * (n - 1) * m * d;
    let e_step = (SYNAPTIC_EVENT_PJ * n_syn as f64 + NEURON_UPDATE_PJ * n as f64) * 1e-12;
    Ok(PowerEstimate {
        n_syn,
        e_step,
        p_avg: e_step / dt_sim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_unit_has_no_synapses() {
        let e = estimate_power(1, 5, 3, 1e-3).unwrap();
        assert_eq!(e.n_syn, 0);
        assert_relative_eq!(e.e_step, 89.7e-12, max_relative = 1e-12);
    }

    #[test]
    fn small_network_by_hand() {
        let e = estimate_power(30, 2, 10, 0.5e-3).unwrap();
        assert_eq!(e.n_syn, 17_400);
        // 23.6 * 17400 + 89.7 * 30 = 413331 pJ
        assert_relative_eq!(e.e_step, 413_331e-12, max_relative = 1e-12);
        assert_relative_eq!(e.p_avg, 413_331e-12 / 0.5e-3, max_relative = 1e-12);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(estimate_power(0, 1, 1, 1.0).is_err());
        assert!(estimate_power(2, 1, 1, 0.0).is_err());
        assert!(estimate_power(2, 1, 1, f64::NAN).is_err());
    }
}
