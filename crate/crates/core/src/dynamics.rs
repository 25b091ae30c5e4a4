//! Neuron state, sub-threshold vector fields and fixed-step integrators.
//!
//! Every model shares the same two-component state `(v1, v2)`: `v1` plays
//! the role of the membrane potential and `v2` is the auxiliary (recovery)
//! variable. One-dimensional models such as LIF leave `v2` untouched.

use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("integration produced a non-finite state ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Two-component neuron state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NeuroState(pub [f64; 2]);

impl NeuroState {
    pub const ZERO: NeuroState = NeuroState([0.0, 0.0]);

    pub const fn new(v1: f64, v2: f64) -> Self {
        NeuroState([v1, v2])
    }

    pub fn v1(&self) -> f64 {
        self.0[0]
    }

    pub fn v2(&self) -> f64 {
        self.0[1]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm2(&self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    /// Errors if either component is NaN or infinite.
    pub fn checked(self) -> Result<Self, DynamicsError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(DynamicsError::NonFinite(self.0[0], self.0[1]))
        }
    }
}

impl Add for NeuroState {
    type Output = NeuroState;
    fn add(self, rhs: NeuroState) -> NeuroState {
        NeuroState([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for NeuroState {
    type Output = NeuroState;
    fn sub(self, rhs: NeuroState) -> NeuroState {
        NeuroState([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl Mul<f64> for NeuroState {
    type Output = NeuroState;
    fn mul(self, k: f64) -> NeuroState {
        NeuroState([self.0[0] * k, self.0[1] * k])
    }
}

/// `dv/dt = A v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub a: [[f64; 2]; 2],
}

/// Equilibrium type of a planar linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    StableNode,
    StableSpiral,
    UnstableNode,
    UnstableSpiral,
    Saddle,
}

impl LinearModel {
    pub fn new(a: [[f64; 2]; 2]) -> Result<Self, DynamicsError> {
        if a.iter().flatten().all(|v| v.is_finite()) {
            Ok(Self { a })
        } else {
            Err(DynamicsError::InvalidParameter("linear matrix entries must be finite"))
        }
    }

    /// Every entry drawn uniformly in `[-range, range]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, range: f64) -> Self {
        let mut a = [[0.0; 2]; 2];
        for v in a.iter_mut().flatten() {
            *v = rng.random_range(-range..=range);
        }
        Self { a }
    }

    /// Random matrix with eigenvalues placed to produce `class`.
    ///
    /// Real eigenvalue magnitudes and spiral decay/growth rates are drawn in
    /// `[0.2, 2]` and `[0.1, 1]`, rotation rates in `[0.5, 2]`, and the
    /// eigenbasis is a random pair of unit vectors at least 30 degrees apart.
    pub fn with_stability<R: Rng + ?Sized>(rng: &mut R, class: StabilityClass) -> Self {
        use std::f64::consts::PI;
        let t1 = rng.random_range(0.0..PI);
        let t2 = t1 + rng.random_range(PI / 6.0..5.0 * PI / 6.0);
        let basis = [[t1.cos(), t2.cos()], [t1.sin(), t2.sin()]];
        let mut real = || rng.random_range(0.2..=2.0);
        let core = match class {
            StabilityClass::StableNode => [[-real(), 0.0], [0.0, -real()]],
            StabilityClass::UnstableNode => [[real(), 0.0], [0.0, real()]],
            StabilityClass::Saddle => [[-real(), 0.0], [0.0, real()]],
            StabilityClass::StableSpiral | StabilityClass::UnstableSpiral => {
                let sigma = rng.random_range(0.1..=1.0);
                let sigma = if class == StabilityClass::StableSpiral { -sigma } else { sigma };
                let omega = rng.random_range(0.5..=2.0);
                [[sigma, omega], [-omega, sigma]]
            }
        };
        Self {
            a: conjugate(basis, core),
        }
    }

    pub fn trace(&self) -> f64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn classify(&self) -> StabilityClass {
        let (tr, det) = (self.trace(), self.det());
        if det < 0.0 {
            return StabilityClass::Saddle;
        }
        let spiral = tr * tr < 4.0 * det;
        match (tr <= 0.0, spiral) {
            (true, true) => StabilityClass::StableSpiral,
            (true, false) => StabilityClass::StableNode,
            (false, true) => StabilityClass::UnstableSpiral,
            (false, false) => StabilityClass::UnstableNode,
        }
    }
}

/// `P M P^-1` for 2x2 matrices.
fn conjugate(p: [[f64; 2]; 2], m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let inv = [[p[1][1] / det, -p[0][1] / det], [-p[1][0] / det, p[0][0] / det]];
    matmul(matmul(p, m), inv)
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Izhikevich neuron; `i_syn` is a constant input current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IzhikevichModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub i_syn: f64,
}

impl IzhikevichModel {
    /// Regular-spiking cortical neuron with `i_syn = 10`.
    pub const REGULAR_SPIKING: IzhikevichModel = IzhikevichModel {
        a: 0.02,
        b: 0.2,
        c: -65.0,
        d: 8.0,
        i_syn: 10.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64, i_syn: f64) -> Result<Self, DynamicsError> {
        if [a, b, c, d, i_syn].iter().all(|v| v.is_finite()) {
            Ok(Self { a, b, c, d, i_syn })
        } else {
            Err(DynamicsError::InvalidParameter("Izhikevich parameters must be finite"))
        }
    }

    /// Parameters drawn from the ranges spanned by the published firing
    /// patterns: `a in [0.02, 0.1]`, `b in [0.2, 0.25]`, `c in [-65, -50]`,
    /// `d in [0.05, 8]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, i_syn: f64) -> Self {
        Self {
            a: rng.random_range(0.02..=0.1),
            b: rng.random_range(0.2..=0.25),
            c: rng.random_range(-65.0..=-50.0),
            d: rng.random_range(0.05..=8.0),
            i_syn,
        }
    }
}

impl Default for IzhikevichModel {
    fn default() -> Self {
        Self::REGULAR_SPIKING
    }
}

/// Leaky integrate-and-fire neuron acting on `v1` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifModel {
    pub tau_m: f64,
    pub v_rest: f64,
    pub v_th: f64,
    pub i_syn: f64,
}

impl LifModel {
    pub fn new(tau_m: f64, v_rest: f64, v_th: f64, i_syn: f64) -> Result<Self, DynamicsError> {
        if !(tau_m > 0.0 && tau_m.is_finite()) {
            return Err(DynamicsError::InvalidParameter("tau_m must be positive"));
        }
        if ![v_rest, v_th, i_syn].iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::InvalidParameter("LIF parameters must be finite"));
        }
        Ok(Self {
            tau_m,
            v_rest,
            v_th,
            i_syn,
        })
    }
}

impl Default for LifModel {
    fn default() -> Self {
        Self {
            tau_m: 1.0,
            v_rest: 0.0,
            v_th: 1.0,
            i_syn: 0.0,
        }
    }
}

/// The dynamic heuristic of a unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeuronModel {
    Linear(LinearModel),
    Izhikevich(IzhikevichModel),
    Lif(LifModel),
}

impl NeuronModel {
    /// Trace of the system matrix; only defined for linear models.
    pub fn trace(&self) -> Option<f64> {
        match self {
            NeuronModel::Linear(m) => Some(m.trace()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NeuronModel::Linear(_) => "linear",
            NeuronModel::Izhikevich(_) => "izhikevich",
            NeuronModel::Lif(_) => "lif",
        }
    }
}

/// Right-hand side `g(v)` of `dv/dt = g(v)`. All models are autonomous; `t`
/// is accepted for integrator symmetry.
pub fn vector_field(model: &NeuronModel, v: NeuroState, _t: f64) -> NeuroState {
    let [v1, v2] = v.0;
    match model {
        NeuronModel::Linear(m) => NeuroState([
            m.a[0][0] * v1 + m.a[0][1] * v2,
            m.a[1][0] * v1 + m.a[1][1] * v2,
        ]),
        NeuronModel::Izhikevich(m) => NeuroState([
            v1 * v1 / 25.0 + 5.0 * v1 + 140.0 - v2 + m.i_syn,
            m.a * (m.b * v1 - v2),
        ]),
        NeuronModel::Lif(m) => NeuroState([-(v1 - m.v_rest + m.i_syn) / m.tau_m, 0.0]),
    }
}

fn check_dt(dt: f64) -> Result<(), DynamicsError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(DynamicsError::InvalidStep(dt))
    }
}

/// `v + g(v) dt`.
pub fn euler_step(model: &NeuronModel, v: NeuroState, dt: f64) -> Result<NeuroState, DynamicsError> {
    check_dt(dt)?;
    (v + vector_field(model, v, 0.0) * dt).checked()
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step(model: &NeuronModel, v: NeuroState, dt: f64) -> Result<NeuroState, DynamicsError> {
    check_dt(dt)?;
    let k1 = vector_field(model, v, 0.0);
    let k2 = vector_field(model, v + k1 * (dt / 2.0), dt / 2.0);
    let k3 = vector_field(model, v + k2 * (dt / 2.0), dt / 2.0);
    let k4 = vector_field(model, v + k3 * dt, dt);
    (v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)).checked()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

impl Integrator {
    pub fn step(self, model: &NeuronModel, v: NeuroState, dt: f64) -> Result<NeuroState, DynamicsError> {
        match self {
            Integrator::Euler => euler_step(model, v, dt),
            Integrator::Rk4 => rk4_step(model, v, dt),
        }
    }
}

/// After-spike reset `(c, v2 + d)`.
pub fn izhikevich_reset(model: &IzhikevichModel, v: NeuroState) -> NeuroState {
    NeuroState([model.c, v.v2() + model.d])
}

/// After-spike reset of the LIF membrane to rest.
pub fn lif_reset(model: &LifModel, v: NeuroState) -> NeuroState {
    NeuroState([model.v_rest, v.v2()])
}

/// Samples of a free-running neuron.
#[derive(Debug, Clone, Default)]
pub struct NeuronTrace {
    pub times: Vec<f64>,
    pub states: Vec<NeuroState>,
    /// Times at which `v1` reached the threshold.
    pub spike_times: Vec<f64>,
}

impl NeuronTrace {
    pub fn first_spike(&self) -> Option<f64> {
        self.spike_times.first().copied()
    }
}

/// Runs a single neuron from `v0` to `t_end`: when `v1 >= threshold` the
/// model's native reset fires, otherwise one integrator step is taken.
/// Linear models have no native reset and keep their state.
pub fn simulate_neuron(
    model: &NeuronModel,
    integrator: Integrator,
    v0: NeuroState,
    dt: f64,
    t_end: f64,
    threshold: f64,
) -> Result<NeuronTrace, DynamicsError> {
    check_dt(dt)?;
    let steps = (t_end / dt).round() as usize;
    let mut trace = NeuronTrace {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        spike_times: Vec::new(),
    };
    let mut v = v0.checked()?;
    trace.times.push(0.0);
    trace.states.push(v);
    for k in 1..=steps {
        v = if v.v1() >= threshold {
            trace.spike_times.push((k - 1) as f64 * dt);
            match model {
                NeuronModel::Izhikevich(m) => izhikevich_reset(m, v),
                NeuronModel::Lif(m) => lif_reset(m, v),
                NeuronModel::Linear(_) => v,
            }
        } else {
            integrator.step(model, v, dt)?
        };
        trace.times.push(k as f64 * dt);
        trace.states.push(v);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ROTATION: NeuronModel = NeuronModel::Linear(LinearModel {
        a: [[0.0, 1.0], [-1.0, 0.0]],
    });

    #[test]
    fn zero_field_is_still() {
        let m = NeuronModel::Linear(LinearModel { a: [[0.0; 2]; 2] });
        let v = NeuroState::new(1.5, -2.0);
        assert_eq!(vector_field(&m, v, 0.0), NeuroState::ZERO);
        assert_eq!(euler_step(&m, v, 0.1).unwrap(), v);
        assert_eq!(rk4_step(&m, v, 0.1).unwrap(), v);
    }

    #[test]
    fn izhikevich_field_by_hand() {
        let m = NeuronModel::Izhikevich(IzhikevichModel { i_syn: 0.0, ..IzhikevichModel::REGULAR_SPIKING });
        let g = vector_field(&m, NeuroState::new(-65.0, -13.0), 0.0);
        assert_relative_eq!(g.v1(), -3.0, epsilon = 1e-12);
        assert_relative_eq!(g.v2(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lif_rest_is_equilibrium() {
        let m = NeuronModel::Lif(LifModel { v_rest: -0.7, ..LifModel::default() });
        assert_eq!(vector_field(&m, NeuroState::new(-0.7, 3.0), 0.0), NeuroState::ZERO);
    }

    #[test]
    fn euler_rotation_step() {
        let v = euler_step(&ROTATION, NeuroState::new(1.0, 0.0), 0.01).unwrap();
        assert_eq!(v, NeuroState::new(1.0, -0.01));
    }

    #[test]
    fn non_positive_step_rejected() {
        let v = NeuroState::new(1.0, 0.0);
        assert_eq!(euler_step(&ROTATION, v, 0.0), Err(DynamicsError::InvalidStep(0.0)));
        assert_eq!(rk4_step(&ROTATION, v, -0.1), Err(DynamicsError::InvalidStep(-0.1)));
    }

    #[test]
    fn non_finite_result_is_error() {
        let m = NeuronModel::Linear(LinearModel { a: [[1e308, 0.0], [0.0, 0.0]] });
        assert!(matches!(euler_step(&m, NeuroState::new(1e10, 0.0), 1.0), Err(DynamicsError::NonFinite(..))));
    }

    #[test]
    fn rk4_and_euler_differ_at_second_order() {
        // one step from (1, 0): exact (cos h, -sin h); Euler misses the h^2/2 term
        let v0 = NeuroState::new(1.0, 0.0);
        let gap = |h: f64| (rk4_step(&ROTATION, v0, h).unwrap() - euler_step(&ROTATION, v0, h).unwrap()).norm2();
        let ratio = gap(0.02) / gap(0.01);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn stable_linear_norm_decreases() {
        let m = NeuronModel::Linear(LinearModel { a: [[-1.0, 0.0], [0.0, -1.0]] });
        let mut v = NeuroState::new(0.8, -1.3);
        for _ in 0..5 {
            let start = v.norm2();
            for _ in 0..100 {
                v = rk4_step(&m, v, 0.01).unwrap();
            }
            assert!(v.norm2() < start);
        }
    }

    #[test]
    fn izhikevich_reset_examples() {
        let m = IzhikevichModel::REGULAR_SPIKING;
        assert_eq!(izhikevich_reset(&m, NeuroState::new(35.0, -10.0)), NeuroState::new(-65.0, -2.0));
        let no_d = IzhikevichModel { d: 0.0, ..m };
        assert_eq!(izhikevich_reset(&no_d, NeuroState::new(31.0, 4.5)).v2(), 4.5);
        let twice = izhikevich_reset(&m, izhikevich_reset(&m, NeuroState::new(35.0, -10.0)));
        assert_eq!(twice, NeuroState::new(-65.0, 6.0));
    }

    #[test]
    fn eigenvalue_placement_hits_every_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for class in [
            StabilityClass::StableNode,
            StabilityClass::StableSpiral,
            StabilityClass::UnstableNode,
            StabilityClass::UnstableSpiral,
            StabilityClass::Saddle,
        ] {
            for _ in 0..50 {
                let m = LinearModel::with_stability(&mut rng, class);
                assert_eq!(m.classify(), class);
            }
        }
    }

    #[test]
    fn random_linear_entries_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let m = LinearModel::random(&mut rng, 2.0);
            assert!(m.a.iter().flatten().all(|v| v.abs() <= 2.0));
        }
    }

    #[test]
    fn lif_parameters_validated() {
        assert!(LifModel::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(LifModel::new(2.0, 0.0, 1.0, 0.0).is_ok());
    }
}
