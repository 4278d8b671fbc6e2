//! Deterministic sampling: Halton low-discrepancy sequences, axis-aligned
//! boxes, and regular grids. Everything here is pure and reproducible; the
//! `seed` arguments offset the sequence rather than feeding a PRNG.

use serde::{Deserialize, Serialize};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical-inverse (van der Corput) value of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut frac = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * frac;
        index /= base;
        frac /= base as f64;
    }
    result
}

/// `dim`-dimensional Halton point for `index` (prime bases 2, 3, 5, ...).
/// Supports up to 8 dimensions, which covers every use in this crate.
pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton supports at most 8 dimensions");
    (0..dim).map(|d| radical_inverse(index, PRIMES[d])).collect()
}

/// A nonempty axis-aligned box `[lo, hi]`, the sampling domain for
/// estimators and grid checks. Coordinates may be infinite only where a
/// caller explicitly allows it (region predicates); the constructor used for
/// sampling requires finite bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must share a dimension");
        assert!(!lo.is_empty(), "box must have positive dimension");
        for (a, b) in lo.iter().zip(&hi) {
            assert!(a.is_finite() && b.is_finite() && a <= b, "invalid box bound [{a}, {b}]");
        }
        BoxRegion { lo, hi }
    }

    /// Sup-norm ball around `center`, which is a box.
    pub fn ball(center: &[f64], radius: f64) -> Self {
        assert!(radius >= 0.0);
        BoxRegion::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Sup-norm diameter.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    /// Nearest point of the box (componentwise clamp).
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| v.clamp(*a, *b))
            .collect()
    }

    /// `count` Halton points inside the box; `seed` offsets the sequence.
    pub fn halton_samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let dim = self.dim();
        (0..count)
            .map(|i| {
                let u = halton_point(seed.wrapping_add(i as u64).wrapping_add(1), dim);
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .zip(u)
                    .map(|((a, b), ui)| a + (b - a) * ui)
                    .collect()
            })
            .collect()
    }

    /// Regular grid with the given spacing per axis (last point clamped to
    /// the upper bound). Returns the points in lexicographic order.
    pub fn grid(&self, spacing: f64) -> Vec<Vec<f64>> {
        assert!(spacing > 0.0, "grid spacing must be positive");
        let counts: Vec<usize> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| ((b - a) / spacing).round().max(0.0) as usize + 1)
            .collect();
        grid_points(&self.lo, &self.hi, &counts)
    }

    /// Regular grid with a fixed number of points per axis.
    pub fn grid_counts(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let counts = vec![per_axis.max(1); self.dim()];
        grid_points(&self.lo, &self.hi, &counts)
    }
}

fn grid_points(lo: &[f64], hi: &[f64], counts: &[usize]) -> Vec<Vec<f64>> {
    let dim = lo.len();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    loop {
        let point: Vec<f64> = (0..dim)
            .map(|d| {
                if counts[d] <= 1 {
                    0.5 * (lo[d] + hi[d])
                } else {
                    let t = idx[d] as f64 / (counts[d] - 1) as f64;
                    let v = lo[d] + (hi[d] - lo[d]) * t;
                    v.min(hi[d])
                }
            })
            .collect();
        out.push(point);
        let mut d = dim;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Evenly spaced values over `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 1);
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Sup norm of a vector.
pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Sup-norm distance between two points of equal dimension.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Euclidean norm.
pub fn euclid_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance.
pub fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
