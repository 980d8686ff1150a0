//! Full-covariance RGB Gaussian mixtures with hard component assignment.
//!
//! Each component's cost for a color `z` is
//!
//! ```text
//! -ln w + 0.5 ln det S + 0.5 (z - m)' S^-1 (z - m) + 0.5 eps tr(S^-1) + 1.5 ln 2pi
//! ```
//!
//! and a pixel's data cost is the minimum over components. The
//! `eps tr(S^-1)` term is the penalty whose exact minimizer is the
//! regularized covariance `scatter / n + eps I`, so a refit never raises the
//! summed cost of a fixed pixel set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CosegError, Result};

pub type Color = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// Ridge added to every covariance diagonal.
pub const COVARIANCE_RIDGE: f64 = 1e-6;
/// Refit rounds during the initial fit.
pub const MIN_INIT_ROUNDS: usize = 3;
pub const MAX_INIT_ROUNDS: usize = 10;

const HALF_LN_2PI_X3: f64 = 1.5 * 1.837_877_066_409_345_5; // 1.5 * ln(2 pi)

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Color,
    pub covariance: Mat3,
    inverse: Mat3,
    log_det: f64,
}

impl GaussianComponent {
    fn new(weight: f64, mean: Color, covariance: Mat3) -> Self {
        let (inverse, det) = invert3(&covariance);
        GaussianComponent {
            weight,
            mean,
            covariance,
            inverse,
            log_det: det.ln(),
        }
    }

    pub fn inverse_covariance(&self) -> &Mat3 {
        &self.inverse
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Cost of explaining `z` with this component (see module docs).
    pub fn cost(&self, z: &Color) -> f64 {
        let d = [z[0] - self.mean[0], z[1] - self.mean[1], z[2] - self.mean[2]];
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                quad += d[i] * self.inverse[i][j] * d[j];
            }
        }
        let trace = self.inverse[0][0] + self.inverse[1][1] + self.inverse[2][2];
        -self.weight.ln() + 0.5 * self.log_det + 0.5 * quad + 0.5 * COVARIANCE_RIDGE * trace + HALF_LN_2PI_X3
    }
}

fn invert3(m: &Mat3) -> (Mat3, f64) {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let inv_det = 1.0 / det;
    let inv = [
        [
            c00 * inv_det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det,
        ],
        [
            c01 * inv_det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det,
        ],
        [
            c02 * inv_det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det,
        ],
    ];
    (inv, det)
}

/// Color model for one GrabCut class.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmModel {
    components: Vec<GaussianComponent>,
}

impl GmmModel {
    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Index and cost of the cheapest component for `z`; ties keep the
    /// lower index.
    pub fn best_component(&self, z: &Color) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, c) in self.components.iter().enumerate() {
            let cost = c.cost(z);
            if cost < best.1 {
                best = (k, cost);
            }
        }
        best
    }

    /// Data cost of `z`: minimum component cost.
    pub fn data_cost(&self, z: &Color) -> f64 {
        self.best_component(z).1
    }

    /// Maximum-likelihood parameters for a fixed hard assignment. Components
    /// that receive no pixels are dropped.
    fn from_assignment(pixels: &[Color], assignment: &[usize], k: usize) -> GmmModel {
        let mut counts = vec![0usize; k];
        let mut sums = vec![[0.0; 3]; k];
        for (z, &c) in pixels.iter().zip(assignment) {
            counts[c] += 1;
            for i in 0..3 {
                sums[c][i] += z[i];
            }
        }
        let means: Vec<Color> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| {
                let n = n.max(1) as f64;
                [s[0] / n, s[1] / n, s[2] / n]
            })
            .collect();
        let mut scatter = vec![[[0.0; 3]; 3]; k];
        for (z, &c) in pixels.iter().zip(assignment) {
            let d = [z[0] - means[c][0], z[1] - means[c][1], z[2] - means[c][2]];
            for i in 0..3 {
                for j in 0..3 {
                    scatter[c][i][j] += d[i] * d[j];
                }
            }
        }
        let total = pixels.len() as f64;
        let components = (0..k)
            .filter(|&c| counts[c] > 0)
            .map(|c| {
                let n = counts[c] as f64;
                let mut cov = scatter[c];
                for (i, row) in cov.iter_mut().enumerate() {
                    for v in row.iter_mut() {
                        *v /= n;
                    }
                    row[i] += COVARIANCE_RIDGE;
                }
                // enforce exact symmetry
                for i in 0..3 {
                    for j in 0..i {
                        let avg = 0.5 * (cov[i][j] + cov[j][i]);
                        cov[i][j] = avg;
                        cov[j][i] = avg;
                    }
                }
                GaussianComponent::new(n / total, means[c], cov)
            })
            .collect();
        GmmModel { components }
    }

    fn assign(&self, pixels: &[Color]) -> Vec<usize> {
        pixels.iter().map(|z| self.best_component(z).0).collect()
    }

    /// One hard-EM round: assign each pixel to its cheapest component, then
    /// re-estimate. An empty pixel set leaves the model unchanged.
    pub fn refit(&self, pixels: &[Color]) -> GmmModel {
        if pixels.is_empty() {
            return self.clone();
        }
        let assignment = self.assign(pixels);
        GmmModel::from_assignment(pixels, &assignment, self.components.len())
    }

    /// Summed data cost of a pixel set.
    pub fn total_cost(&self, pixels: &[Color]) -> f64 {
        pixels.iter().map(|z| self.data_cost(z)).sum()
    }
}

fn sq_dist(a: &Color, b: &Color) -> f64 {
    (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

/// k-means++ centers; stops early once every pixel coincides with a center.
fn seed_centers(pixels: &[Color], k: usize, rng: &mut ChaCha8Rng) -> Vec<Color> {
    let n = pixels.len();
    let mut centers = vec![pixels[rng.gen_range(0..n)]];
    let mut nearest: Vec<f64> = pixels.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, &d) in nearest.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = Some(i);
                break;
            }
            target -= d;
        }
        let pick = pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap());
        let c = pixels[pick];
        for (d, p) in nearest.iter_mut().zip(pixels) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Fits a mixture of up to `component_count` components: k-means++ seeding,
/// nearest-center assignment, then hard-EM rounds (at least three, stopping
/// once assignments settle).
pub fn fit_gmm(pixels: &[Color], component_count: usize, seed: u64) -> Result<GmmModel> {
    if pixels.is_empty() {
        return Err(CosegError::Argument("cannot fit a color model to no pixels".into()));
    }
    if component_count == 0 {
        return Err(CosegError::Argument("component count must be positive".into()));
    }
    let k = component_count.min(pixels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = seed_centers(pixels, k, &mut rng);
    let mut assignment: Vec<usize> = pixels
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect();
    let mut model = GmmModel::from_assignment(pixels, &assignment, centers.len());
    for round in 0..MAX_INIT_ROUNDS {
        let next = model.assign(pixels);
        if round >= MIN_INIT_ROUNDS && next == assignment {
            break;
        }
        model = GmmModel::from_assignment(pixels, &next, model.components.len());
        assignment = next;
    }
    Ok(model)
}
