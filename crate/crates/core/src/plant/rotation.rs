use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector3};

/// Coordinate transform about the y axis by `a` (world components to rotated-frame components).
fn about_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c)
}

fn about_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotor index (0 or 1) and in-rotor slot `n` of blade `j` in 1..=8.
pub fn blade_slot(j: usize) -> (usize, usize) {
    assert!((1..=8).contains(&j), "blade index {j} outside 1..=8");
    if j <= 4 {
        (0, j - 1)
    } else {
        (1, j - 5)
    }
}

/// World-to-blade transform for blade `j` (1..=8): pitch about Y, rotor
/// azimuth plus the blade slot offset about the disc normal, then flap.
pub fn blade_rotation(beta: f64, psi: f64, theta: f64, j: usize) -> Matrix3<f64> {
    let (_, n) = blade_slot(j);
    about_y(-theta) * about_z(psi + n as f64 * FRAC_PI_2) * about_y(beta)
}

/// Unit span vector of a blade in world coordinates.
pub fn span_axis(beta: f64, psi: f64, theta: f64, j: usize) -> Vector3<f64> {
    blade_rotation(beta, psi, theta, j).transpose() * Vector3::x()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_at_rest() {
        let r = blade_rotation(0.0, 0.0, 0.0, 1);
        assert!((r - Matrix3::identity()).norm() < 1e-15);
    }

    #[test]
    fn frame_axes_follow_pitch() {
        let b = 0.3;
        let r = blade_rotation(b, 0.0, 0.0, 1).transpose();
        let x_b = r * Vector3::x();
        let n = r * Vector3::z();
        assert!((x_b - Vector3::new(b.cos(), 0.0, -b.sin())).norm() < 1e-15);
        assert!((n - Vector3::new(b.sin(), 0.0, b.cos())).norm() < 1e-15);
    }

    #[test]
    fn flap_lifts_span_along_normal() {
        let b = 0.2;
        let e = span_axis(b, 0.0, 0.1, 1);
        let n = Vector3::new(b.sin(), 0.0, b.cos());
        assert!((e.dot(&n) - 0.1f64.sin()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn orthonormal(b in -1.0..1.0f64, psi in -7.0..7.0f64, th in -1.5..1.5f64, j in 1usize..=8) {
            let r = blade_rotation(b, psi, th, j);
            prop_assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn neighbouring_blades_differ_by_quarter_turn(b in -1.0..1.0f64, psi in -7.0..7.0f64, th in -1.5..1.5f64) {
            let r1 = blade_rotation(b, psi, th, 1);
            let r2 = blade_rotation(b, psi, th, 2);
            let undo = about_y(th);
            let lhs = undo * r2;
            let rhs = about_z(FRAC_PI_2) * undo * r1;
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
