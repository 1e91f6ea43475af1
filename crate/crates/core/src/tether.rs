//! Static tether between a ground anchor and the frame centre.
//!
//! The line is an elastic catenary: inextensible-catenary geometry plus axial
//! strain T/EA, with no seabed contact. This single model covers both the
//! slack and the taut range, so tension is continuous across the boundary.
//! Points are `(horizontal, vertical)` in metres.

use nalgebra::{Matrix2, Vector2};

use crate::config::PhysicalParams;
use crate::error::{Error, Result};

const MAX_NEWTON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TetherRegime {
    SlackCatenary,
    TautElastic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherSolution {
    /// Force the tether applies to the craft at the attachment point (N).
    pub tension_at_top: Vector2<f64>,
    pub tension_magnitude: f64,
    pub regime: TetherRegime,
    /// Horizontal tension component, constant along the line (N).
    pub horizontal_component: f64,
    /// Vertical tension component at the top, positive when the line pulls down (N).
    pub vertical_top: f64,
    /// Vertical tension component at the anchor (N); negative when the line
    /// leaves the anchor heading down.
    pub vertical_anchor: f64,
    /// Largest vertical distance of the line below the chord (m).
    pub sag: f64,
    pub chord: f64,
}

/// Line properties used by the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub length: f64,
    /// Weight per unit length (N/m).
    pub weight: f64,
    /// Axial stiffness EA (N).
    pub stiffness: f64,
}

impl Line {
    pub fn from_params(p: &PhysicalParams) -> Self {
        Self {
            length: p.l_t,
            weight: p.tether_weight_per_length(),
            stiffness: p.tether_axial_stiffness,
        }
    }

    /// End offsets `(horizontal span, rise)` produced by top tension `(h, v)`.
    pub fn span(&self, h: f64, v: f64) -> (f64, f64) {
        let (l, w, ea) = (self.length, self.weight, self.stiffness);
        let va = v - w * l;
        let (a, b) = (v / h, va / h);
        let x = h / w * (a.asinh() - b.asinh()) + h * l / ea;
        let z = h / w * ((1.0 + a * a).sqrt() - (1.0 + b * b).sqrt()) + (v * l - 0.5 * w * l * l) / ea;
        (x, z)
    }

    fn jacobian(&self, h: f64, v: f64) -> Matrix2<f64> {
        let (l, w, ea) = (self.length, self.weight, self.stiffness);
        let va = v - w * l;
        let (a, b) = (v / h, va / h);
        let (sa, sb) = ((1.0 + a * a).sqrt(), (1.0 + b * b).sqrt());
        let dx_dh = (a.asinh() - b.asinh()) / w - (a / sa - b / sb) / w + l / ea;
        let dx_dv = (1.0 / sa - 1.0 / sb) / w;
        let dz_dh = dx_dv;
        let dz_dv = (a / sa - b / sb) / w + l / ea;
        Matrix2::new(dx_dh, dx_dv, dz_dh, dz_dv)
    }

    /// Point at unstretched arc length `s` from the anchor.
    pub fn point_at(&self, h: f64, va: f64, s: f64) -> (f64, f64) {
        let (w, ea) = (self.weight, self.stiffness);
        let vs = va + w * s;
        let (a, b) = (vs / h, va / h);
        let x = h / w * (a.asinh() - b.asinh()) + h * s / ea;
        let z = h / w * ((1.0 + a * a).sqrt() - (1.0 + b * b).sqrt()) + (va * s + 0.5 * w * s * s) / ea;
        (x, z)
    }
}

/// Solves the tether between `anchor` and `attach`.
pub fn solve_tether(p: &PhysicalParams, anchor: Vector2<f64>, attach: Vector2<f64>) -> Result<TetherSolution> {
    solve_line(&Line::from_params(p), anchor, attach, None)
}

/// Solves with an optional warm start `(horizontal, vertical top)` tension.
pub fn solve_line(
    line: &Line,
    anchor: Vector2<f64>,
    attach: Vector2<f64>,
    guess: Option<(f64, f64)>,
) -> Result<TetherSolution> {
    let d = attach - anchor;
    let chord = d.norm();
    if !(chord > 0.0) || !chord.is_finite() {
        return Err(Error::Domain(format!("tether endpoints coincide or are invalid: chord = {chord}")));
    }
    let regime = if chord >= line.length {
        TetherRegime::TautElastic
    } else {
        TetherRegime::SlackCatenary
    };
    let span = d.x.abs();
    let rise = d.y;
    let side = if d.x >= 0.0 { 1.0 } else { -1.0 };

    let (h, v) = if line.weight == 0.0 {
        straight_line(line, chord, span, rise)
    } else if span <= 1e-12 * line.length {
        (0.0, vertical_solution(line, rise))
    } else {
        catenary_newton(line, span, rise, guess)?
    };

    let magnitude = h.hypot(v);
    let va = v - line.weight * line.length;
    let sag = if line.weight == 0.0 || h == 0.0 {
        0.0
    } else {
        let slope = rise / span;
        let s = ((slope * h - va) / line.weight).clamp(0.0, line.length);
        let (x, z) = line.point_at(h, va, s);
        (slope * x - z).max(0.0)
    };
    Ok(TetherSolution {
        tension_at_top: Vector2::new(-side * h, -v),
        tension_magnitude: magnitude,
        regime,
        horizontal_component: h,
        vertical_top: v,
        vertical_anchor: va,
        sag,
        chord,
    })
}

fn straight_line(line: &Line, chord: f64, span: f64, rise: f64) -> (f64, f64) {
    if chord <= line.length {
        return (0.0, 0.0);
    }
    let t = line.stiffness * (chord - line.length) / line.length;
    (t * span / chord, t * rise / chord)
}

/// Top vertical tension of a line hanging on a vertical chord.
fn vertical_solution(line: &Line, rise: f64) -> f64 {
    let (l, w, ea) = (line.length, line.weight, line.stiffness);
    let knee = l + w * l * l / (2.0 * ea);
    if rise >= knee {
        (rise - l) * ea / l + 0.5 * w * l
    } else {
        // Both ends of the line hang down to a common low point.
        0.5 * w * l + rise / (2.0 * (1.0 / w + l / (2.0 * ea)))
    }
}

fn initial_guess(line: &Line, span: f64, rise: f64) -> (f64, f64) {
    let (l, w) = (line.length, line.weight);
    let lambda = if l * l <= span * span + rise * rise {
        0.2
    } else {
        (3.0 * ((l * l - rise * rise) / (span * span) - 1.0)).sqrt()
    };
    let h = (w * span / (2.0 * lambda)).abs().max(1e-6 * w * l);
    let v = 0.5 * w * (rise / lambda.tanh() + l);
    (h, v)
}

fn catenary_newton(line: &Line, span: f64, rise: f64, guess: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let scale = line.length.max(span.hypot(rise));
    let tol = 1e-11 * scale;
    let (mut h, mut v) = match guess {
        Some((h, v)) if h > 0.0 && h.is_finite() && v.is_finite() => (h, v),
        _ => initial_guess(line, span, rise),
    };
    let residual = |h: f64, v: f64| {
        let (x, z) = line.span(h, v);
        Vector2::new(x - span, z - rise)
    };
    let mut r = residual(h, v);
    for _ in 0..MAX_NEWTON {
        if r.amax() < tol {
            return Ok((h, v));
        }
        let j = line.jacobian(h, v);
        let step = j.lu().solve(&(-r)).ok_or_else(|| Error::RootFind {
            context: "tether catenary",
            detail: format!("singular Jacobian at H = {h}, V = {v}"),
        })?;
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let hn = h + lam * step.x;
            let vn = v + lam * step.y;
            if hn > 0.0 {
                let rn = residual(hn, vn);
                if rn.iter().all(|c| c.is_finite()) && (rn.norm() < r.norm() || lam < 1e-3) {
                    h = hn;
                    v = vn;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.amax() < 1e-9 * scale {
        return Ok((h, v));
    }
    Err(Error::RootFind {
        context: "tether catenary",
        detail: format!(
            "no convergence for span {span:.6} m, rise {rise:.6} m: residual {:.3e} m at H = {h:.6}, V = {v:.6}",
            r.amax()
        ),
    })
}

/// Top tension of a discrete chain of `n_segments` links in static
/// equilibrium, solved by shooting on the anchor tension. Links are rigid when
/// `axial_stiffness` is `None`.
pub fn catenary_oracle(
    anchor: Vector2<f64>,
    attach: Vector2<f64>,
    l_t: f64,
    lin_weight: f64,
    n_segments: usize,
    axial_stiffness: Option<f64>,
) -> Result<f64> {
    if n_segments < 2 {
        return Err(Error::Domain("chain oracle needs at least 2 links".into()));
    }
    if lin_weight == 0.0 {
        return Ok(0.0);
    }
    let d = attach - anchor;
    let span = d.x.abs();
    let rise = d.y;
    if !(span > 0.0) {
        return Err(Error::Domain("chain oracle requires a horizontal span".into()));
    }
    let n = n_segments;
    let seg = l_t / n as f64;
    let node_w = lin_weight * seg;
    let chain_end = |h: f64, v1: f64| -> Vector2<f64> {
        let mut end = Vector2::zeros();
        for k in 0..n {
            let t = Vector2::new(h, v1 + k as f64 * node_w);
            let tn = t.norm();
            let len = seg * axial_stiffness.map_or(1.0, |ea| 1.0 + tn / ea);
            end += t * (len / tn);
        }
        end
    };

    // Parabolic first guess from the excess length.
    let chord = span.hypot(rise);
    let excess = (l_t - chord).max(1e-3 * l_t);
    let dip = (3.0 * chord * excess / 8.0).sqrt();
    let mut h = (lin_weight * span * span / (8.0 * dip)).max(1e-6);
    let mut v1 = h * rise / span - 0.5 * lin_weight * l_t + 0.5 * node_w;
    let target = Vector2::new(span, rise);
    let mut r = chain_end(h, v1) - target;
    for _ in 0..200 {
        if r.amax() < 1e-9 * l_t {
            let top = Vector2::new(h, v1 + (n - 1) as f64 * node_w + 0.5 * node_w);
            return Ok(top.norm());
        }
        let eps_h = 1e-7 * h.abs().max(1.0);
        let eps_v = 1e-7 * v1.abs().max(1.0);
        let c0 = chain_end(h + eps_h, v1) - chain_end(h - eps_h, v1);
        let c1 = chain_end(h, v1 + eps_v) - chain_end(h, v1 - eps_v);
        let j = Matrix2::from_columns(&[c0 / (2.0 * eps_h), c1 / (2.0 * eps_v)]);
        let step = j.lu().solve(&(-r)).ok_or_else(|| Error::RootFind {
            context: "chain oracle",
            detail: "singular Jacobian".into(),
        })?;
        let mut lam = 1.0;
        loop {
            let hn = h + lam * step.x;
            let vn = v1 + lam * step.y;
            if hn > 0.0 {
                let rn = chain_end(hn, vn) - target;
                if rn.norm() < r.norm() || lam < 1e-6 {
                    h = hn;
                    v1 = vn;
                    r = rn;
                    break;
                }
            }
            lam *= 0.5;
            if lam < 1e-12 {
                return Err(Error::RootFind {
                    context: "chain oracle",
                    detail: format!("line search stalled at residual {:.3e}", r.amax()),
                });
            }
        }
    }
    Err(Error::RootFind {
        context: "chain oracle",
        detail: format!("no convergence, residual {:.3e} m", r.amax()),
    })
}
