//! Adaptive Dormand–Prince 5(4) integrator for small complex linear systems.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State<const N: usize> = [Complex64; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += *ki * (h * coef);
        }
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`, returning `y(t1)` and the
/// number of accepted steps.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: State<N>,
    tol: &Tolerances,
) -> Result<(State<N>, usize), OdeError>
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok((y0, 0));
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = span;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    let h_min = span * 1e-14;

    while t < t1 {
        if steps >= tol.max_steps {
            return Err(OdeError::TooManySteps(tol.max_steps));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);

        let mut err = 0.0f64;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() {
            return Err(OdeError::NonFinite(t));
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            steps += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min && t < t1 {
            return Err(OdeError::StepUnderflow { t, h });
        }
    }
    Ok((y, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_integrated_accurately() {
        // y' = -i w y  →  y(t) = e^{-i w t}
        let w = 3.0;
        let (y, steps) = integrate(
            |_, y: &[Complex64; 1]| [Complex64::new(0.0, -w) * y[0]],
            0.0,
            2.0,
            [Complex64::new(1.0, 0.0)],
            &Tolerances::default(),
        )
        .unwrap();
        let exact = Complex64::from_polar(1.0, -w * 2.0);
        assert!((y[0] - exact).norm() < 1e-9);
        assert!(steps > 1);
    }

    #[test]
    fn empty_interval_is_identity() {
        let y0 = [Complex64::new(0.3, 0.4)];
        let (y, steps) = integrate(|_, y: &[Complex64; 1]| *y, 1.0, 1.0, y0, &Tolerances::default()).unwrap();
        assert_eq!(y, y0);
        assert_eq!(steps, 0);
    }

    #[test]
    fn step_budget_is_enforced() {
        let tol = Tolerances {
            max_steps: 3,
            ..Tolerances::default()
        };
        let r = integrate(
            |_, y: &[Complex64; 1]| [Complex64::new(0.0, -1e4) * y[0]],
            0.0,
            1.0,
            [Complex64::new(1.0, 0.0)],
            &tol,
        );
        assert_eq!(r, Err(OdeError::TooManySteps(3)));
    }
}
