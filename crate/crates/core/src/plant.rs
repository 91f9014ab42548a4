//! Fifth-order voice-coil actuator with a free hanging load: first-order
//! actuator lag feeding a four-state mechanical model with gravity and a
//! Coulomb term, plus the PI loop and bounded measurement noise.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{rk4_step, RationalTF, StateSpace};

/// Any state magnitude above this ends the run.
pub const BLOWUP_LIMIT: f64 = 1e6;

pub const MECH_ORDER: usize = 4;
/// Mechanical states plus the actuator filter state.
pub const PLANT_ORDER: usize = MECH_ORDER + 1;

/// Index of the measured load position in the mechanical state.
pub const Y_INDEX: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub a: [[f64; MECH_ORDER]; MECH_ORDER],
    pub b: [f64; MECH_ORDER],
    pub c: [f64; MECH_ORDER],
    /// Gravity acceleration entering rows 1 and 3 with a negative sign.
    pub gravity: f64,
    /// Coefficient of `sign(x1')` on row 1.
    pub coulomb: f64,
    pub actuator_gain: f64,
    pub actuator_time_constant: f64,
    /// Input clamp applied before the actuator filter, if any.
    pub saturation: Option<(f64, f64)>,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            a: [
                [-333.35, -333.33, 0.015, 333.33],
                [1.0, 0.0, 0.0, 0.0],
                [0.012, 266.66, -0.012, -266.66],
                [0.0, 0.0, 1.0, 0.0],
            ],
            b: [1.667, 0.0, 0.0, 0.0],
            c: [0.0, 0.0, 0.0, 1.0],
            gravity: 9.806,
            coulomb: 0.83,
            actuator_gain: 3.2811,
            actuator_time_constant: 0.0012,
            saturation: None,
        }
    }
}

/// Hardware input range of the voice-coil amplifier.
pub const HARDWARE_INPUT_RANGE: (f64, f64) = (0.0, 10.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    /// `(z', z, y', y)`.
    pub x: [f64; MECH_ORDER],
    /// Actuator output after the lag filter.
    pub nu: f64,
    pub t: f64,
}

impl PlantState {
    pub fn output(&self, params: &PlantParams) -> f64 {
        dot(&params.c, &self.x)
    }

    fn packed(&self) -> [f64; PLANT_ORDER] {
        [self.x[0], self.x[1], self.x[2], self.x[3], self.nu]
    }

    fn unpack(v: [f64; PLANT_ORDER], t: f64) -> Self {
        Self {
            x: [v[0], v[1], v[2], v[3]],
            nu: v[4],
            t,
        }
    }
}

fn dot(a: &[f64; MECH_ORDER], b: &[f64; MECH_ORDER]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `sign` with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl PlantParams {
    /// Constant-plus-Coulomb disturbance vector at the given actuator velocity.
    pub fn disturbance(&self, actuator_velocity: f64) -> [f64; MECH_ORDER] {
        [
            -self.gravity + self.coulomb * sign(actuator_velocity),
            0.0,
            -self.gravity,
            0.0,
        ]
    }

    pub fn rates(&self, s: &[f64; PLANT_ORDER], u: f64) -> [f64; PLANT_ORDER] {
        let x = [s[0], s[1], s[2], s[3]];
        let nu = s[4];
        let d = self.disturbance(x[0]);
        let mut out = [0.0; PLANT_ORDER];
        for (i, row) in self.a.iter().enumerate() {
            out[i] = dot(row, &x) + self.b[i] * nu + d[i];
        }
        out[4] = (self.actuator_gain * u - nu) / self.actuator_time_constant;
        out
    }

    pub fn clamp_input(&self, u: f64) -> f64 {
        match self.saturation {
            Some((lo, hi)) => u.clamp(lo, hi),
            None => u,
        }
    }

    /// Mechanical part `x' = A x + B nu` (input is the actuator force).
    pub fn mechanics(&self) -> StateSpace {
        let a = DMatrix::from_fn(MECH_ORDER, MECH_ORDER, |i, j| self.a[i][j]);
        StateSpace::siso(
            a,
            DVector::from_row_slice(&self.b),
            DVector::from_row_slice(&self.c),
        )
        .expect("plant dimensions are fixed")
    }

    /// Voltage-to-position model including the actuator lag (Coulomb and
    /// gravity dropped).
    pub fn with_actuator(&self) -> StateSpace {
        let n = PLANT_ORDER;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..MECH_ORDER {
            for j in 0..MECH_ORDER {
                a[(i, j)] = self.a[i][j];
            }
            a[(i, 4)] = self.b[i];
        }
        a[(4, 4)] = -1.0 / self.actuator_time_constant;
        let mut b = DVector::zeros(n);
        b[4] = self.actuator_gain / self.actuator_time_constant;
        let mut c = DVector::zeros(n);
        for j in 0..MECH_ORDER {
            c[j] = self.c[j];
        }
        StateSpace::siso(a, b, c).expect("plant dimensions are fixed")
    }

    /// Frozen linear closed loop of plant and PI with the Coulomb term
    /// dropped. States: `(z', z, y', y, nu, integral)`.
    pub fn closed_loop_matrix(&self, kp: f64, ki: f64) -> DMatrix<f64> {
        let open = self.with_actuator().a;
        let n = PLANT_ORDER + 1;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (PLANT_ORDER, PLANT_ORDER)).copy_from(&open);
        let input_gain = self.actuator_gain / self.actuator_time_constant;
        for j in 0..MECH_ORDER {
            // u = kp (R1 - y) + ki * integral + R2
            m[(4, j)] += -kp * input_gain * self.c[j];
            m[(5, j)] = -self.c[j];
        }
        m[(4, 5)] = ki * input_gain;
        m
    }

    /// Rest state holding the load at `y_ref` with the Coulomb term at zero.
    /// Returns the state and the constant input voltage that holds it.
    pub fn equilibrium(&self, y_ref: f64) -> Result<(PlantState, f64)> {
        // unknowns: x1, x2, x3, nu ; x4 = y_ref
        let mut m = DMatrix::zeros(MECH_ORDER, MECH_ORDER);
        let mut rhs = DVector::zeros(MECH_ORDER);
        let d = self.disturbance(0.0);
        for i in 0..MECH_ORDER {
            for j in 0..3 {
                m[(i, j)] = self.a[i][j];
            }
            m[(i, 3)] = self.b[i];
            rhs[i] = -d[i] - self.a[i][3] * y_ref;
        }
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidModel("equilibrium system is singular".into()))?;
        let state = PlantState {
            x: [sol[0], sol[1], sol[2], y_ref],
            nu: sol[3],
            t: 0.0,
        };
        Ok((state, sol[3] / self.actuator_gain))
    }

    /// Advances by one RK4 step with the input held constant.
    pub fn step(&self, state: &PlantState, u: f64, dt: f64) -> Result<PlantState> {
        let u = self.clamp_input(u);
        let next = rk4_step(&state.packed(), dt, |s| self.rates(s, u));
        let t = state.t + dt;
        if next.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_LIMIT) {
            return Err(Error::NumericalBlowup {
                t,
                limit: BLOWUP_LIMIT,
            });
        }
        Ok(PlantState::unpack(next, t))
    }
}

/// Feed-forward sub-dynamics from input voltage to the load acceleration.
pub fn make_gtilde() -> RationalTF {
    RationalTF::new(vec![0.1544, 3432.0], vec![0.002824, 3.295, 785.5, 784.5])
        .expect("constant coefficients are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Half-width in meters.
    pub bound: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Uniform,
            bound: 5e-5,
            seed: 1,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            bound: 0.0,
            seed: 0,
        }
    }

    pub fn source(&self) -> NoiseSource {
        NoiseSource {
            model: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }

    /// Bound actually in effect (zero when noise is off).
    pub fn effective_bound(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform => self.bound,
        }
    }
}

/// Seeded sample stream for a [`NoiseModel`].
#[derive(Debug, Clone)]
pub struct NoiseSource {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn sample(&mut self) -> f64 {
        match self.model.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform if self.model.bound > 0.0 => {
                self.rng.gen_range(-self.model.bound..=self.model.bound)
            }
            NoiseKind::Uniform => 0.0,
        }
    }
}

/// One integration step followed by a noisy measurement of the new state.
pub fn plant_step(
    params: &PlantParams,
    state: &PlantState,
    u: f64,
    dt: f64,
    noise: &mut NoiseSource,
) -> Result<(PlantState, f64)> {
    let next = params.step(state, u, dt)?;
    let y = next.output(params) + noise.sample();
    Ok((next, y))
}

pub const PI_KP: f64 = 140.0;
pub const PI_KI: f64 = 170.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiState {
    /// Accumulated `(R1 - y) dt`.
    pub integral: f64,
    pub r1: f64,
    pub r2: f64,
    pub kp: f64,
    pub ki: f64,
}

impl PiState {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self {
            integral: 0.0,
            r1,
            r2,
            kp: PI_KP,
            ki: PI_KI,
        }
    }
}

/// Output is computed from the integral before this sample's error is
/// accumulated.
pub fn pi_control(pi: &PiState, y: f64, dt: f64) -> (PiState, f64) {
    let e = pi.r1 - y;
    let u = pi.kp * e + pi.ki * pi.integral + pi.r2;
    let next = PiState {
        integral: pi.integral + e * dt,
        ..*pi
    };
    (next, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{dominant_mode_of, eval_tf};
    use approx::assert_relative_eq;

    #[test]
    fn free_fall_of_load_row() {
        let p = PlantParams::default();
        let s = [0.0; PLANT_ORDER];
        let r = p.rates(&s, 0.0);
        assert_eq!(r[2], -9.806);
        assert_eq!(r[0], -9.806);
    }

    #[test]
    fn actuator_dc_gain() {
        let p = PlantParams {
            a: [[0.0; 4]; 4],
            b: [0.0; 4],
            gravity: 0.0,
            coulomb: 0.0,
            ..PlantParams::default()
        };
        let mut s = PlantState {
            x: [0.0; 4],
            nu: 0.0,
            t: 0.0,
        };
        for _ in 0..200 {
            s = p.step(&s, 2.0, 5e-4).unwrap();
        }
        assert_relative_eq!(s.nu, 3.2811 * 2.0, max_relative = 1e-9);
    }

    #[test]
    fn equilibrium_matches_hand_elimination() {
        let p = PlantParams::default();
        let y = 0.01;
        let (state, u) = p.equilibrium(y).unwrap();
        // row 3: 266.66 (z - y) = g ; row 1: 1.667 nu = g + 333.33 (z - y)
        let z = y + 9.806 / 266.66;
        let nu = (9.806 + 333.33 * (z - y)) / 1.667;
        assert_relative_eq!(state.x[1], z, max_relative = 1e-12);
        assert_relative_eq!(state.nu, nu, max_relative = 1e-12);
        assert_relative_eq!(u, nu / 3.2811, max_relative = 1e-12);
        assert!(state.x[0].abs() < 1e-12 && state.x[2].abs() < 1e-12);
    }

    #[test]
    fn equilibrium_holds_for_1000_steps() {
        // sign term frozen at zero: round-off in x1' would otherwise switch it
        let p = PlantParams {
            coulomb: 0.0,
            ..PlantParams::default()
        };
        let (mut s, u) = p.equilibrium(0.01).unwrap();
        let start = s;
        for _ in 0..1000 {
            s = p.step(&s, u, 5e-4).unwrap();
        }
        for i in 0..4 {
            assert!((s.x[i] - start.x[i]).abs() < 1e-9, "state {i} drifted");
        }
        assert!((s.nu - start.nu).abs() < 1e-9);
    }

    #[test]
    fn step_is_deterministic() {
        let p = PlantParams::default();
        let run = || {
            let mut s = PlantState {
                x: [0.0, 0.05, 0.0, 0.012],
                nu: 10.0,
                t: 0.0,
            };
            for _ in 0..2000 {
                s = p.step(&s, 0.0, 5e-4).unwrap();
            }
            s
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn blowup_is_reported() {
        let p = PlantParams::default();
        let s = PlantState {
            x: [0.0, 0.0, 0.0, 2e6],
            nu: 0.0,
            t: 1.0,
        };
        assert!(matches!(
            p.step(&s, 0.0, 5e-4),
            Err(Error::NumericalBlowup { .. })
        ));
    }

    #[test]
    fn saturation_clamps_input() {
        let p = PlantParams {
            saturation: Some(HARDWARE_INPUT_RANGE),
            ..PlantParams::default()
        };
        assert_eq!(p.clamp_input(12.0), 10.0);
        assert_eq!(p.clamp_input(-1.0), 0.0);
        assert_eq!(PlantParams::default().clamp_input(12.0), 12.0);
    }

    #[test]
    fn pi_arithmetic() {
        let pi = PiState::new(0.01, 4.0);
        let (_, u) = pi_control(&pi, 0.01, 5e-4);
        assert_eq!(u, 4.0);
        let pi = PiState::new(0.001, 0.0);
        let (next, u) = pi_control(&pi, 0.0, 5e-4);
        assert_relative_eq!(u, 0.14, epsilon = 1e-15);
        assert_relative_eq!(next.integral, 0.001 * 5e-4, epsilon = 1e-18);
    }

    #[test]
    fn pi_integral_accumulates() {
        let dt = 5e-4;
        let e = 0.002;
        let mut pi = PiState::new(e, 0.0);
        let steps = 4000;
        let mut u = 0.0;
        for _ in 0..steps {
            let (next, out) = pi_control(&pi, 0.0, dt);
            pi = next;
            u = out;
        }
        // output at the last sample sees steps - 1 accumulated samples
        let integral_term = u - 140.0 * e;
        let expected = 170.0 * e * (steps as f64 * dt);
        assert!((integral_term - expected).abs() <= 170.0 * e * dt + 1e-12);
    }

    #[test]
    fn gtilde_coefficients_and_limits() {
        let g = make_gtilde();
        assert_eq!(g.num(), &[0.1544, 3432.0]);
        assert_eq!(g.den(), &[0.002824, 3.295, 785.5, 784.5]);
        let dc = eval_tf(&g, 0.0).unwrap();
        assert_relative_eq!(dc.magnitude, 3432.0 / 784.5, max_relative = 1e-14);
        assert_eq!(dc.phase, 0.0);
        assert!(eval_tf(&g, 1e6).unwrap().magnitude < 1e-6);
    }

    #[test]
    fn pi_loop_is_unstable() {
        let p = PlantParams::default();
        let mode = dominant_mode_of(&p.closed_loop_matrix(PI_KP, PI_KI)).unwrap();
        assert!(mode.sigma > 0.0, "sigma = {}", mode.sigma);
        assert!(mode.zeta < 0.0);
    }

    #[test]
    fn noise_bound_and_reproducibility() {
        let model = NoiseModel {
            kind: NoiseKind::Uniform,
            bound: 5e-5,
            seed: 42,
        };
        let mut src = model.source();
        let mut max = 0.0_f64;
        for _ in 0..1_000_000 {
            max = max.max(src.sample().abs());
        }
        assert!(max <= 5e-5);
        assert!(max > 4.9e-5);
        let a: Vec<f64> = (0..100).map({
            let mut s = model.source();
            move |_| s.sample()
        }).collect();
        let b: Vec<f64> = (0..100).map({
            let mut s = model.source();
            move |_| s.sample()
        }).collect();
        assert_eq!(a, b);
        let mut silent = NoiseModel::none().source();
        assert_eq!(silent.sample(), 0.0);
    }

    #[test]
    fn integration_preserves_modal_decay() {
        // Gravity held by the equilibrium input, no Coulomb term: the free
        // load oscillation must decay per period as exp(sigma * period) of the
        // open-loop pair.
        let p = PlantParams {
            coulomb: 0.0,
            ..PlantParams::default()
        };
        let (eq, u) = p.equilibrium(0.01).unwrap();
        let mode = dominant_mode_of(&p.with_actuator().a).unwrap();
        let dt = 5e-4;
        let mut s = eq;
        s.x[3] += 1e-3;
        // extrema of the load position; consecutive differences remove the
        // rigid-body offset
        let mut extrema = Vec::new();
        let mut prev = (s.x[3], s.x[3]);
        for _ in 0..(4.0 / dt) as usize {
            s = p.step(&s, u, dt).unwrap();
            let cur = s.x[3];
            let turning = (prev.1 - prev.0) * (cur - prev.1) < 0.0;
            if turning && s.t > 0.5 {
                extrema.push((s.t - dt, prev.1));
            }
            prev = (prev.1, cur);
        }
        assert!(extrema.len() >= 8);
        let swings: Vec<(f64, f64)> = extrema
            .windows(2)
            .map(|w| (w[0].0, (w[1].1 - w[0].1).abs()))
            .collect();
        for w in swings.windows(3) {
            let predicted = (mode.sigma * (w[2].0 - w[0].0)).exp();
            let actual = w[2].1 / w[0].1;
            assert!(
                (actual / predicted - 1.0).abs() < 1e-3,
                "ratio {actual} vs {predicted}"
            );
        }
    }
}
