//! Bias, amplitude and phase from the linear regression
//! `y = [1, sin(w t), cos(w t)] . [Y0, A cos(phi), A sin(phi)]`.

use serde::{Deserialize, Serialize};

/// How the continuous update law is advanced over one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// `theta += dt * gamma * phi * e`. Diverges once `dt * gamma * |phi|^2 > 2`.
    Euler,
    /// Exact solution of the law with regressor and measurement held over the
    /// sample. Unconditionally stable.
    ExactHold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpBiasEstimState {
    /// `[Y0, A cos(phi), A sin(phi)]`.
    pub theta_hat: [f64; 3],
    pub gamma2: f64,
    pub discretization: Discretization,
}

impl AmpBiasEstimState {
    pub fn new(gamma2: f64, discretization: Discretization) -> Self {
        Self {
            theta_hat: [0.0; 3],
            gamma2,
            discretization,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicEstimate {
    pub omega_hat: f64,
    pub a_hat: f64,
    pub y0_hat: f64,
    pub phi_hat: f64,
}

pub fn regressor(omega_hat: f64, t: f64) -> [f64; 3] {
    let (s, c) = (omega_hat * t).sin_cos();
    [1.0, s, c]
}

pub fn amp_bias_step(
    st: &AmpBiasEstimState,
    y: f64,
    omega_hat: f64,
    t: f64,
    dt: f64,
) -> AmpBiasEstimState {
    let phi = regressor(omega_hat, t);
    let th = st.theta_hat;
    let e = y - (phi[0] * th[0] + phi[1] * th[1] + phi[2] * th[2]);
    let gain = match st.discretization {
        Discretization::Euler => dt * st.gamma2,
        Discretization::ExactHold => {
            let norm2 = phi.iter().map(|p| p * p).sum::<f64>();
            -(-st.gamma2 * dt * norm2).exp_m1() / norm2
        }
    };
    AmpBiasEstimState {
        theta_hat: std::array::from_fn(|i| th[i] + gain * phi[i] * e),
        ..*st
    }
}

/// Four-quadrant phase; zero when the harmonic part is zero.
pub fn extract_params(st: &AmpBiasEstimState, omega_hat: f64) -> HarmonicEstimate {
    let [y0, c, s] = st.theta_hat;
    HarmonicEstimate {
        omega_hat,
        a_hat: c.hypot(s),
        y0_hat: y0,
        phi_hat: s.atan2(c),
    }
}
