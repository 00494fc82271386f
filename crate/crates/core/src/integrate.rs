//! Fixed-step classical Runge-Kutta integration.

/// Advances an autonomous system `x' = f(x)` by one step of length `dt`.
///
/// Inputs that are held constant over the step (zero-order hold) should be
/// captured by the closure.
pub fn rk4_step<const N: usize, F>(x: &[f64; N], dt: f64, f: F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(x);
    let k2 = f(&offset(x, &k1, 0.5 * dt));
    let k3 = f(&offset(x, &k2, 0.5 * dt));
    let k4 = f(&offset(x, &k3, dt));

    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn offset<const N: usize>(x: &[f64; N], dx: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] += h * dx[i];
    }
    out
}
