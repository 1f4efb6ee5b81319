//! Gaussian kernel density estimates with Scott's bandwidth rule.

use crate::error::{Error, Result};

fn sample_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Scott's rule for one dimension: `σ̂ · n^(-1/5)` with the ddof-1 sample
/// standard deviation.
pub fn scott_bandwidth_1d(n: usize, sd: f64) -> f64 {
    sd * (n as f64).powf(-1.0 / 5.0)
}

/// Scott's rule per axis in two dimensions: `σ̂_d · n^(-1/6)`.
pub fn scott_bandwidth_2d(n: usize, sd: f64) -> f64 {
    sd * (n as f64).powf(-1.0 / 6.0)
}

/// Gaussian KDE of a one-dimensional sample, evaluated on `grid`.
/// A sample with zero spread has no usable bandwidth and is rejected.
pub fn kde_1d(sample: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall {
            what: "kernel density",
            min: 2,
            got: sample.len(),
        });
    }
    let n = sample.len();
    let sd = sample_std(sample.iter().copied(), n);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let h = scott_bandwidth_1d(n, sd);
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            let sum: f64 = sample
                .iter()
                .map(|&xi| {
                    let z = (x - xi) / h;
                    (-z * z / 2.0).exp()
                })
                .sum();
            norm * sum
        })
        .collect())
}

/// Gaussian product-kernel KDE of 2D points, evaluated on the grid cross
/// product. `result[i][j]` is the density at `(grid_x[i], grid_y[j])`.
/// Each axis needs nonzero spread.
pub fn kde_2d(points: &[(f64, f64)], grid_x: &[f64], grid_y: &[f64]) -> Result<Vec<Vec<f64>>> {
    if points.len() < 2 {
        return Err(Error::SampleTooSmall {
            what: "kernel density",
            min: 2,
            got: points.len(),
        });
    }
    let n = points.len();
    let sd_x = sample_std(points.iter().map(|p| p.0), n);
    let sd_y = sample_std(points.iter().map(|p| p.1), n);
    if !(sd_x > 0.0) {
        return Err(Error::DegenerateAxis { axis: "x" });
    }
    if !(sd_y > 0.0) {
        return Err(Error::DegenerateAxis { axis: "y" });
    }
    let h_x = scott_bandwidth_2d(n, sd_x);
    let h_y = scott_bandwidth_2d(n, sd_y);
    let norm = 1.0 / (n as f64 * h_x * h_y * 2.0 * std::f64::consts::PI);
    Ok(grid_x
        .iter()
        .map(|&x| {
            grid_y
                .iter()
                .map(|&y| {
                    let sum: f64 = points
                        .iter()
                        .map(|&(xi, yi)| {
                            let zx = (x - xi) / h_x;
                            let zy = (y - yi) / h_y;
                            (-zx * zx / 2.0 - zy * zy / 2.0).exp()
                        })
                        .sum();
                    norm * sum
                })
                .collect()
        })
        .collect())
}
