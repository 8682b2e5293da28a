use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// Floor-plane position estimate with a 2x2 covariance (m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct PoseEstimate {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

impl From<PoseRepr> for PoseEstimate {
    fn from(r: PoseRepr) -> Self {
        PoseEstimate::new(
            Vector2::new(r.mean[0], r.mean[1]),
            Matrix2::new(r.cov[0][0], r.cov[0][1], r.cov[1][0], r.cov[1][1]),
        )
    }
}

impl From<PoseEstimate> for PoseRepr {
    fn from(p: PoseEstimate) -> Self {
        PoseRepr {
            mean: [p.mean.x, p.mean.y],
            cov: [
                [p.cov[(0, 0)], p.cov[(0, 1)]],
                [p.cov[(1, 0)], p.cov[(1, 1)]],
            ],
        }
    }
}

impl PoseEstimate {
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Self {
        let mut p = Self { mean, cov };
        p.symmetrize();
        p
    }

    /// A perfectly known position.
    pub fn exact(x: f64, y: f64) -> Self {
        Self {
            mean: Vector2::new(x, y),
            cov: Matrix2::zeros(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }

    pub fn symmetrize(&mut self) {
        let off = 0.5 * (self.cov[(0, 1)] + self.cov[(1, 0)]);
        self.cov[(0, 1)] = off;
        self.cov[(1, 0)] = off;
    }

    /// Eigenvalues of the (symmetric) covariance, ascending.
    pub fn cov_eigenvalues(&self) -> [f64; 2] {
        let (a, b, d) = (self.cov[(0, 0)], self.cov[(0, 1)], self.cov[(1, 1)]);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mid - rad, mid + rad]
    }

    pub fn is_well_formed(&self) -> bool {
        let finite = self
            .mean
            .iter()
            .chain(self.cov.iter())
            .all(|v| v.is_finite());
        finite
            && (self.cov[(0, 1)] - self.cov[(1, 0)]).abs() <= 1e-12 * (1.0 + self.cov.abs().max())
            && self.cov_eigenvalues()[0] >= -1e-12
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.mean - Vector2::new(x, y)).norm()
    }
}

/// Covariance of an error with independent components along `dir` (σ_along)
/// and perpendicular to it (σ_across).
pub(crate) fn oriented_cov(dir: Vector2<f64>, sigma_along: f64, sigma_across: f64) -> Matrix2<f64> {
    let u = dir.normalize();
    let v = Vector2::new(-u.y, u.x);
    u * u.transpose() * sigma_along * sigma_along + v * v.transpose() * sigma_across * sigma_across
}
