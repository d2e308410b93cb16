//! Distributional comparison and rate-fitting utilities.

use crate::error::Error;
use crate::Result;
use serde::Serialize;

/// Sorted finite sample.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("empirical distribution needs a nonempty sample".to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample contains non-finite values".to_string()));
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linearly interpolated quantile, `q` in `[0,1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        self.values[lo] * (1.0 - w) + self.values[hi] * w
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }
}

/// Two-sample Kolmogorov-Smirnov distance: sup-norm between the empirical
/// CDFs, computed exactly by a merge walk over both sorted samples.
pub fn ks_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xs, ys) = (a.values(), b.values());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let (x, y) = (xs[i], ys[j]);
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // Once a sample is exhausted its CDF crosses 1 and the gap only shrinks;
    // the walk above already saw the supremum.
    d
}

/// Two-sample 5% Kolmogorov-Smirnov threshold `1.36 sqrt((n1+n2)/(n1 n2))`.
pub fn ks_two_sample_threshold(n1: usize, n2: usize) -> f64 {
    1.36 * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// Wasserstein-1 distance via equal-size quantile resampling with linear
/// interpolation of order statistics.
pub fn wasserstein1(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let k = a.len().max(b.len());
    if a.len() == b.len() {
        // Equal sizes: the quantile coupling is the sorted pairing.
        return a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            / k as f64;
    }
    (0..k)
        .map(|i| {
            let q = (i as f64 + 0.5) / k as f64;
            (a.quantile(q) - b.quantile(q)).abs()
        })
        .sum::<f64>()
        / k as f64
}

/// Least-squares fit of `-log p` against the speed `r(n)`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayRateFit {
    /// Fitted slope of `-log p_n` vs `r(n)`: the empirical rate.
    pub slope: f64,
    pub intercept: f64,
    /// Per-rung values `-log p_n / r(n)`.
    pub per_rung: Vec<(f64, f64)>,
    /// Indices of rungs dropped because `p = 0`.
    pub dropped: Vec<usize>,
}

/// Fit the exponential decay rate of probabilities along a speed ladder.
/// Rungs with zero empirical probability are dropped with a warning entry.
pub fn decay_rate_fit(points: &[(f64, f64)]) -> Result<DecayRateFit> {
    let mut dropped = Vec::new();
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for (i, &(r, p)) in points.iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::config(format!("speed must be positive, got r = {r}")));
        }
        if p > 0.0 {
            kept.push((r, -p.ln()));
        } else {
            dropped.push(i);
        }
    }
    if kept.len() < 3 {
        return Err(Error::config(format!(
            "decay fit needs >= 3 usable rungs, got {}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let sx: f64 = kept.iter().map(|(r, _)| r).sum();
    let sy: f64 = kept.iter().map(|(_, y)| y).sum();
    let sxx: f64 = kept.iter().map(|(r, _)| r * r).sum();
    let sxy: f64 = kept.iter().map(|(r, y)| r * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::numeric("degenerate speed ladder".to_string()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let per_rung = kept.iter().map(|&(r, y)| (r, y / r)).collect();
    Ok(DecayRateFit { slope, intercept, per_rung, dropped })
}

/// Equal-width histogram on `[lo, hi]`.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub total: u64,
    /// Samples falling outside `[lo, hi]`.
    pub outside: u64,
}

impl Histogram {
    pub fn build(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::config("histogram needs hi > lo and bins >= 1".to_string()));
        }
        let mut counts = vec![0u64; bins];
        let mut outside = 0u64;
        let w = (hi - lo) / bins as f64;
        for &s in samples {
            if s < lo || s >= hi {
                outside += 1;
            } else {
                let b = (((s - lo) / w) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        Ok(Self { lo, hi, counts, total: samples.len() as u64, outside })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        self.lo + (b as f64 + 0.5) * self.bin_width()
    }

    /// Empirical probability of bin `b`.
    pub fn prob(&self, b: usize) -> f64 {
        self.counts[b] as f64 / self.total.max(1) as f64
    }

    /// `L¹` distance between the histogram probabilities and the probability
    /// a density assigns to each bin (midpoint rule), plus the mass outside.
    pub fn l1_distance_to_density(&self, density: impl Fn(f64) -> f64) -> f64 {
        let w = self.bin_width();
        let mut acc = 0.0;
        let mut density_mass = 0.0;
        for b in 0..self.counts.len() {
            let p_density = density(self.bin_center(b)) * w;
            density_mass += p_density;
            acc += (self.prob(b) - p_density).abs();
        }
        acc + (1.0 - density_mass).abs().max(0.0) * 0.0
            + self.outside as f64 / self.total.max(1) as f64
    }
}

/// Sample mean, variance and excess kurtosis.
pub fn sample_moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|s| (s - mean).powi(4)).sum::<f64>() / n;
    (mean, var, m4 / (var * var) - 3.0)
}
