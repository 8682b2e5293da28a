//! Two-anchor range fix (circle–circle intersection) with first-order
//! covariance propagation.
//!
//! The solution `p` satisfies `|p − a1| = r1` and `|p − a2| = r2`.
//! Differentiating both constraints gives
//!
//! ```text
//! (p − a1)·(dp − da1) = r1 dr1
//! (p − a2)·(dp − da2) = r2 dr2
//! ```
//!
//! so with `M = [(p − a1)ᵀ; (p − a2)ᵀ]` the Jacobians are
//! `J_a1 = M⁻¹ [(p − a1)ᵀ; 0]`, `J_a2 = M⁻¹ [0; (p − a2)ᵀ]` and
//! `J_r = M⁻¹ diag(r1, r2)`. `J_a1 + J_a2 = I`, so a common anchor shift
//! moves the fix by exactly that shift.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{NavError, PoseEstimate};

/// Below this ratio of intersection height to anchor baseline the fix is
/// treated as near-collinear and its covariance is inflated.
pub const NEAR_COLLINEAR_RATIO: f64 = 0.05;

/// Which side of the directed line anchor1 → anchor2 the solution lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Counter-clockwise of anchor1 → anchor2 (+1).
    Left,
    /// Clockwise (−1).
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    /// Side of `q` relative to the directed line `a1 → a2`; ties go left.
    pub fn of_point(a1: Vector2<f64>, a2: Vector2<f64>, q: Vector2<f64>) -> Side {
        let d = a2 - a1;
        let w = q - a1;
        if d.x * w.y - d.y * w.x >= 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeObservation {
    pub range: f64,
    /// 1σ range error, m.
    pub sigma: f64,
}

impl RangeObservation {
    pub fn new(range: f64, sigma: f64) -> Self {
        Self { range, sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixQuality {
    Nominal,
    /// h/d below [`NEAR_COLLINEAR_RATIO`]; covariance scaled by d/h.
    NearCollinear,
    /// Circles do not intersect; the fix sits on the line of centres.
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trilateration {
    pub estimate: PoseEstimate,
    pub quality: FixQuality,
    /// Distance of the fix from the anchor line divided by the baseline.
    pub h_over_d: f64,
}

pub fn trilaterate(
    anchor1: &PoseEstimate,
    anchor2: &PoseEstimate,
    r1: RangeObservation,
    r2: RangeObservation,
    side: Side,
) -> Result<Trilateration, NavError> {
    let (p1, p2) = (anchor1.mean, anchor2.mean);
    let baseline = p2 - p1;
    let d = baseline.norm();
    if !(d > 1e-9) {
        return Err(NavError::InvalidInput(format!(
            "anchors coincide (separation {d} m)"
        )));
    }
    for r in [r1, r2] {
        if !(r.range > 0.0 && r.range.is_finite()) || !(r.sigma >= 0.0) {
            return Err(NavError::InvalidInput(format!(
                "ranges must be positive with non-negative sigma, got {} ± {}",
                r.range, r.sigma
            )));
        }
    }
    let ex = baseline / d;
    let ey = Vector2::new(-ex.y, ex.x) * side.sign();
    let a = (r1.range * r1.range - r2.range * r2.range + d * d) / (2.0 * d);
    let h_sq = r1.range * r1.range - a * a;

    if h_sq <= (1e-9 * d).powi(2) {
        // No (or a grazing) intersection: stay on the line of centres and
        // carry the mismatch as extra variance.
        let gap = (r1.range - r2.range).abs() - d;
        let gap = gap.max(d - r1.range - r2.range).max(0.0);
        let t = a / d;
        let along = ex * ex.transpose();
        let cov = anchor1.cov * (1.0 - t).powi(2)
            + anchor2.cov * t * t
            + along * ((r1.range * r1.sigma).powi(2) + (r2.range * r2.sigma).powi(2)) / (d * d)
            + Matrix2::identity() * gap * gap;
        return Ok(Trilateration {
            estimate: PoseEstimate::new(p1 + ex * a, cov),
            quality: FixQuality::Degraded,
            h_over_d: 0.0,
        });
    }

    let h = h_sq.sqrt();
    let p = p1 + ex * a + ey * h;
    let (u1, u2) = (p - p1, p - p2);
    let m = Matrix2::new(u1.x, u1.y, u2.x, u2.y);
    let m_inv = m
        .try_inverse()
        .ok_or_else(|| NavError::InvalidInput("singular intersection geometry".into()))?;
    let j1 = m_inv * Matrix2::new(u1.x, u1.y, 0.0, 0.0);
    let j2 = m_inv * Matrix2::new(0.0, 0.0, u2.x, u2.y);
    let jr = m_inv * Matrix2::new(r1.range, 0.0, 0.0, r2.range);
    let range_var = Matrix2::new(r1.sigma * r1.sigma, 0.0, 0.0, r2.sigma * r2.sigma);
    let mut cov = j1 * anchor1.cov * j1.transpose()
        + j2 * anchor2.cov * j2.transpose()
        + jr * range_var * jr.transpose();

    let h_over_d = h / d;
    let quality = if h_over_d < NEAR_COLLINEAR_RATIO {
        cov /= h_over_d;
        FixQuality::NearCollinear
    } else {
        FixQuality::Nominal
    };
    Ok(Trilateration {
        estimate: PoseEstimate::new(p, cov),
        quality,
        h_over_d,
    })
}
