use nalgebra::SVector;

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, E>(
    y: &SVector<f64, N>,
    t: f64,
    dt: f64,
    mut f: impl FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
) -> Result<SVector<f64, N>, E> {
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &(y + k1 * half))?;
    let k3 = f(t + half, &(y + k2 * half))?;
    let k4 = f(t + dt, &(y + k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}
