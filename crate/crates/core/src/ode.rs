//! Fixed-step explicit integrators for `y' = f(t, y)`.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    #[default]
    Euler,
    Rk4,
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Effective slope of one step: `y(t + dt) = y + dt * slope`.
///
/// The right-hand side may fail; the first error aborts the step.
pub fn step_slope<E>(
    method: Method,
    t: f64,
    y: &[f64],
    dt: f64,
    mut f: impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E> {
    match method {
        Method::Euler => f(t, y),
        Method::Rk4 => {
            let k1 = f(t, y)?;
            let k2 = f(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k1))?;
            let k3 = f(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k2))?;
            let k4 = f(t + dt, &axpy(y, dt, &k3))?;
            Ok((0..y.len())
                .map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0)
                .collect())
        }
    }
}

/// Advances `y` by one step.
pub fn step<E>(
    method: Method,
    t: f64,
    y: &[f64],
    dt: f64,
    f: impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E> {
    let slope = step_slope(method, t, y, dt, f)?;
    Ok(axpy(y, dt, &slope))
}
