//! Continuous LTI models: rational transfer functions, state-space
//! resolvents, modal analysis and the fixed-step integrator used by the
//! plant.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which a denominator value at `j*omega` counts as
/// a pole on the imaginary axis.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Relative pivot threshold for the resolvent solve.
pub const RESOLVENT_TOLERANCE: f64 = 1e-10;

/// `x' = A x + B u + bias`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl StateSpace {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        bias: DVector<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n || bias.len() != n {
            return Err(Error::InvalidModel(format!(
                "inconsistent dimensions: A {n}x{n}, B {}x{}, C {}x{}, bias {}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                bias.len()
            )));
        }
        let finite = a.iter().chain(b.iter()).chain(c.iter()).chain(bias.iter());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("non-finite matrix entry".into()));
        }
        Ok(Self { a, b, c, bias })
    }

    /// SISO system without a bias term.
    pub fn siso(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        let b = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        let c = DMatrix::from_row_slice(1, c.len(), c.as_slice());
        Self::new(a, b, c, DVector::zeros(n))
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// `A x + B u + bias`.
    pub fn rates(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.bias
    }
}

/// Ratio of polynomials in `s`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidModel("empty coefficient list".into()));
        }
        if den[0] == 0.0 {
            return Err(Error::InvalidModel(
                "leading denominator coefficient is zero".into(),
            ));
        }
        if !num.iter().chain(den.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqResponse {
    pub magnitude: f64,
    /// Radians in (-pi, pi].
    pub phase: f64,
}

impl FreqResponse {
    pub fn from_complex(z: Complex<f64>) -> Self {
        Self {
            magnitude: z.norm(),
            phase: wrap_phase(z.arg()),
        }
    }

    pub fn to_complex(self) -> Complex<f64> {
        Complex::from_polar(self.magnitude, self.phase)
    }
}

/// Maps an angle onto (-pi, pi].
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeInfo {
    pub sigma: f64,
    pub omega: f64,
    pub zeta: f64,
}

impl ModeInfo {
    pub fn from_eigenvalue(lambda: Complex<f64>) -> Self {
        let sigma = lambda.re;
        let omega = lambda.im.abs();
        Self {
            sigma,
            omega,
            zeta: damping_ratio(sigma, omega),
        }
    }
}

/// `zeta = -sigma / sqrt(sigma^2 + omega^2)`.
pub fn damping_ratio(sigma: f64, omega: f64) -> f64 {
    -sigma * (sigma * sigma + omega * omega).powf(-0.5)
}

fn horner(coeffs: &[f64], s: Complex<f64>) -> Complex<f64> {
    coeffs
        .iter()
        .fold(Complex::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Complex gain of `tf` at `s = j*omega`.
pub fn eval_tf_complex(tf: &RationalTF, omega: f64) -> Result<Complex<f64>> {
    let s = Complex::new(0.0, omega);
    let den = horner(&tf.den, s);
    let scale = tf.den.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if den.norm() < POLE_TOLERANCE * scale {
        return Err(Error::PoleOnAxis { omega });
    }
    Ok(horner(&tf.num, s) / den)
}

pub fn eval_tf(tf: &RationalTF, omega: f64) -> Result<FreqResponse> {
    eval_tf_complex(tf, omega).map(FreqResponse::from_complex)
}

/// `C (j*omega*I - A)^-1 B` for a SISO system, by direct complex LU solve.
pub fn ss_freq_response_complex(ss: &StateSpace, omega: f64) -> Result<Complex<f64>> {
    if ss.b.ncols() != 1 || ss.c.nrows() != 1 {
        return Err(Error::InvalidModel(format!(
            "frequency response needs a SISO system, got {} inputs and {} outputs",
            ss.b.ncols(),
            ss.c.nrows()
        )));
    }
    let n = ss.order();
    let jw = Complex::new(0.0, omega);
    let resolvent = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        let diag = if i == j { jw } else { Complex::new(0.0, 0.0) };
        diag - Complex::new(ss.a[(i, j)], 0.0)
    });
    let scale = resolvent.iter().fold(0.0_f64, |m, z| m.max(z.norm())).max(1.0);
    let lu = resolvent.lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, z| m.min(z.norm()));
    if min_pivot < RESOLVENT_TOLERANCE * scale {
        return Err(Error::SingularResolvent { omega });
    }
    let rhs = DVector::<Complex<f64>>::from_fn(n, |i, _| Complex::new(ss.b[(i, 0)], 0.0));
    let x = lu.solve(&rhs).ok_or(Error::SingularResolvent { omega })?;
    Ok((0..n).fold(Complex::new(0.0, 0.0), |acc, i| {
        acc + x[i] * ss.c[(0, i)]
    }))
}

pub fn ss_freq_response(ss: &StateSpace, omega: f64) -> Result<FreqResponse> {
    ss_freq_response_complex(ss, omega).map(FreqResponse::from_complex)
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Least-damped complex-conjugate pair of `A` (largest real part).
pub fn dominant_mode(ss: &StateSpace) -> Result<ModeInfo> {
    dominant_mode_of(&ss.a)
}

pub fn dominant_mode_of(a: &DMatrix<f64>) -> Result<ModeInfo> {
    let eig = eigenvalues(a);
    let scale = eig.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    eig.into_iter()
        .filter(|z| z.im > 1e-9 * scale)
        .max_by(|p, q| p.re.total_cmp(&q.re))
        .map(ModeInfo::from_eigenvalue)
        .ok_or(Error::NoOscillatoryMode)
}

/// One classical 4-stage Runge-Kutta step of `x' = rate(x)`.
pub fn rk4_step<const N: usize, F>(x: &[f64; N], dt: f64, rate: F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let offset = |base: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| base[i] + h * k[i])
    };
    let k1 = rate(x);
    let k2 = rate(&offset(x, &k1, 0.5 * dt));
    let k3 = rate(&offset(x, &k2, 0.5 * dt));
    let k4 = rate(&offset(x, &k3, dt));
    std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}
