use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{mahalanobis, PsdMatrix};
use crate::stats::normal_cdf;

/// Integer depth `n·T_x(y)`: the fewest data points in a closed halfspace
/// whose boundary passes through `y`. Exact for `d ∈ {1, 2}`.
pub fn depth_count(x: &Dataset, y: &[f64]) -> Result<usize> {
    if y.len() != x.dim() {
        return Err(Error::BadShape(format!(
            "query of length {} against dimension {}",
            y.len(),
            x.dim()
        )));
    }
    match x.dim() {
        1 => Ok(depth_count_1d(x.as_slice(), y[0])),
        2 => Ok(depth_count_2d(x.rows().map(|r| [r[0], r[1]]), [y[0], y[1]])),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Tukey depth `T_x(y)` in `[0, 1]`.
pub fn tukey_depth(x: &Dataset, y: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("depth of an empty dataset".into()));
    }
    Ok(depth_count(x, y)? as f64 / x.len() as f64)
}

pub fn depth_count_1d(values: &[f64], y: f64) -> usize {
    let ge = values.iter().filter(|&&v| v >= y).count();
    let le = values.iter().filter(|&&v| v <= y).count();
    ge.min(le)
}

/// Sorted copy of one-dimensional data for repeated depth queries.
pub struct SortedLine {
    sorted: Vec<f64>,
}

impl SortedLine {
    pub fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        SortedLine { sorted }
    }

    pub fn depth_count(&self, y: f64) -> usize {
        let below = self.sorted.partition_point(|&v| v < y);
        let at_most = self.sorted.partition_point(|&v| v <= y);
        (self.sorted.len() - below).min(at_most)
    }
}

struct Ray {
    angle: f64,
    dx: f64,
    dy: f64,
}

// Whether `b` lies in the half-open angular window [angle(a), angle(a) + π).
fn in_window(a: &Ray, b: &Ray) -> bool {
    let cross = a.dx * b.dy - a.dy * b.dx;
    let tol = 1e-12 * a.dx.hypot(a.dy) * b.dx.hypot(b.dy);
    if cross > tol {
        true
    } else if cross < -tol {
        false
    } else {
        a.dx * b.dx + a.dy * b.dy > 0.0
    }
}

/// Planar depth by an angular sweep around `y`.
///
/// A closed halfplane through `y` misses exactly the points of the opposite
/// open halfplane, so the depth is `n − max_φ #{points at angle in (φ, φ+π)}`.
/// The maximizing open window can always start just before some point, so
/// sorting the directions `x_i − y` by angle and sliding a window over them
/// finds it in `O(n log n)`. Points equal to `y` lie in every halfplane.
pub fn depth_count_2d(points: impl Iterator<Item = [f64; 2]>, y: [f64; 2]) -> usize {
    let mut coincident = 0usize;
    let mut rays: Vec<Ray> = Vec::new();
    for p in points {
        let (dx, dy) = (p[0] - y[0], p[1] - y[1]);
        if dx == 0.0 && dy == 0.0 {
            coincident += 1;
        } else {
            rays.push(Ray {
                angle: dy.atan2(dx),
                dx,
                dy,
            });
        }
    }
    let m = rays.len();
    if m == 0 {
        return coincident;
    }
    rays.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    let mut best = 0usize;
    let mut j = 0usize;
    for i in 0..m {
        j = j.max(i + 1);
        while j < i + m && in_window(&rays[i], &rays[j % m]) {
            j += 1;
        }
        best = best.max(j - i);
    }
    coincident + m - best
}

/// Population depth `Φ(−‖y − μ‖_Σ)` under `N(μ, Σ)`.
pub fn expected_tukey_depth(y: &[f64], mu: &[f64], sigma: &PsdMatrix) -> Result<f64> {
    if y.len() != mu.len() {
        return Err(Error::BadShape("query and mean differ in length".into()));
    }
    let diff: Vec<f64> = y.iter().zip(mu).map(|(a, b)| a - b).collect();
    Ok(normal_cdf(-mahalanobis(&diff, sigma)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_counts() {
        let x = Dataset::from_scalars(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(tukey_depth(&x, &[3.0]).unwrap(), 0.6);
        assert_eq!(tukey_depth(&x, &[0.0]).unwrap(), 0.0);
        assert_eq!(tukey_depth(&x, &[1.0]).unwrap(), 0.2);
        let s = SortedLine::new(x.as_slice());
        for y in [-1.0, 1.0, 2.5, 3.0, 5.0, 6.0] {
            assert_eq!(s.depth_count(y), depth_count_1d(x.as_slice(), y));
        }
    }

    #[test]
    fn planar_simple_cases() {
        let sq = Dataset::from_rows(&[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]).unwrap();
        assert_eq!(depth_count(&sq, &[0.0, 0.0]).unwrap(), 2);
        assert_eq!(depth_count(&sq, &[5.0, 0.0]).unwrap(), 0);
        // Midpoint of an edge: tilting the edge's halfplane keeps one corner.
        assert_eq!(depth_count(&sq, &[1.0, 0.0]).unwrap(), 1);
        assert_eq!(depth_count(&sq, &[1.0, 1.0]).unwrap(), 1);
        // Collinear points: the middle one has depth 2 of 3 coincident-inclusive.
        let line = Dataset::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(depth_count(&line, &[1.0, 1.0]).unwrap(), 2);
        assert_eq!(depth_count(&line, &[1.0, 0.0]).unwrap(), 0);
        let same = Dataset::from_rows(&[[1.0, 1.0]; 4]).unwrap();
        assert_eq!(depth_count(&same, &[1.0, 1.0]).unwrap(), 4);
    }

    #[test]
    fn rejects_high_dimension() {
        let x = Dataset::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(
            depth_count(&x, &[0.0; 3]),
            Err(Error::UnsupportedDimension(3))
        );
    }

    #[test]
    fn expected_depth_values() {
        let s = PsdMatrix::diagonal(&[4.0, 1.0]).unwrap();
        assert_eq!(
            expected_tukey_depth(&[1.0, 2.0], &[1.0, 2.0], &s).unwrap(),
            0.5
        );
        let v = expected_tukey_depth(&[3.0, 2.0], &[1.0, 2.0], &s).unwrap();
        assert!((v - 0.158_655_253_931_457).abs() < 1e-12);
    }
}
