//! Classical fourth-order Runge-Kutta integration for small fixed-size
//! systems.

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k1));
    let k3 = f(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k2));
    let k4 = f(t + dt, &axpy(y, dt, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Integrate from `t0` over `steps` equal steps of size `dt`, returning the
/// full trajectory including the initial state (`steps + 1` samples).
pub fn rk4_trajectory<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    dt: f64,
    steps: usize,
) -> Vec<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push((t0, y));
    for k in 0..steps {
        let t = t0 + dt * k as f64;
        y = rk4_step(f, t, &y, dt);
        out.push((t0 + dt * (k + 1) as f64, y));
    }
    out
}
