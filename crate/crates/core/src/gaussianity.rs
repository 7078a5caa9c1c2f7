//! Empirical marginals and their Kolmogorov distance to the standard normal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::trace::BinnedTrace;

/// Default window length of the windowed marginal analysis.
pub const DEFAULT_WINDOW: usize = 512;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Right-continuous step function with jumps of `1/n` at the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("empirical distribution of no samples".into()));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("samples contain NaN"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    /// `F_n(t)`, the fraction of samples `≤ t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= t) as f64 / self.n() as f64
    }

    /// `sup_x |F_n(x) − Φ(x)|`, attained at a jump: on either side of the
    /// `i`-th order statistic the gaps are `i/n − Φ` and `Φ − (i−1)/n`.
    pub fn distance_to_normal(&self) -> f64 {
        let n = self.n() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.sorted.len() {
            // ties form a single jump
            let x = self.sorted[i];
            let mut j = i;
            while j + 1 < self.sorted.len() && self.sorted[j + 1] == x {
                j += 1;
            }
            let phi = normal_cdf(x);
            d = d.max((j + 1) as f64 / n - phi).max(phi - i as f64 / n);
            i = j + 1;
        }
        d.clamp(0.0, 1.0)
    }
}

/// Kolmogorov distance between the raw samples and `N(0,1)`, without
/// normalization.
pub fn distance_to_normal(samples: &[f64]) -> Result<f64> {
    Ok(EmpiricalCdf::new(samples.to_vec())?.distance_to_normal())
}

/// Centers and scales to unit sample standard deviation.
pub fn standardize(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData("normalization needs at least 2 samples".into()));
    }
    let mean = stats::mean(samples);
    let sd = stats::sample_std(samples);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    Ok(samples.iter().map(|v| (v - mean) / sd).collect())
}

/// Kolmogorov distance of the normalized sample to `N(0,1)`.
pub fn kolmogorov_to_normal(samples: &[f64]) -> Result<f64> {
    distance_to_normal(&standardize(samples)?)
}

/// Distances of consecutive non-overlapping windows, each normalized by its
/// own mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KolmogorovSeries {
    pub window_size: usize,
    /// `None` for windows of zero variance.
    pub distances: Vec<Option<f64>>,
    /// Raw sum of each window.
    pub window_traffic: Vec<f64>,
}

impl KolmogorovSeries {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Non-missing distances in window order.
    pub fn present(&self) -> Vec<f64> {
        self.distances.iter().flatten().copied().collect()
    }

    /// Mean of the non-missing distances.
    pub fn mean_distance(&self) -> Option<f64> {
        let p = self.present();
        (!p.is_empty()).then(|| stats::mean(&p))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "window_index,d_k,traffic")?;
        for (l, (d, t)) in self.distances.iter().zip(&self.window_traffic).enumerate() {
            match d {
                Some(d) => writeln!(w, "{l},{d},{t}")?,
                None => writeln!(w, "{l},,{t}")?,
            }
        }
        Ok(())
    }
}

/// Windowed marginal analysis of a plain series; the trailing partial
/// window is dropped.
pub fn windowed_kolmogorov_values(x: &[f64], window: usize) -> Result<KolmogorovSeries> {
    if window < 2 {
        return Err(Error::invalid(format!("window must hold at least 2 bins, got {window}")));
    }
    if x.len() < 2 * window {
        return Err(Error::InsufficientData(format!(
            "windowed analysis needs at least {} bins, got {}",
            2 * window,
            x.len()
        )));
    }
    let (distances, window_traffic) = x
        .par_chunks_exact(window)
        .map(|w| (kolmogorov_to_normal(w).ok(), w.iter().sum::<f64>()))
        .unzip();
    Ok(KolmogorovSeries {
        window_size: window,
        distances,
        window_traffic,
    })
}

pub fn windowed_kolmogorov(x: &BinnedTrace, window: usize) -> Result<KolmogorovSeries> {
    windowed_kolmogorov_values(x.values(), window)
}

/// Pearson correlation of paired `(distance, traffic)` values; windows with
/// a missing distance are dropped.
pub fn distance_traffic_correlation(series: &KolmogorovSeries) -> Result<f64> {
    let (d, t): (Vec<f64>, Vec<f64>) = series
        .distances
        .iter()
        .zip(&series.window_traffic)
        .filter_map(|(d, t)| d.map(|d| (d, *t)))
        .unzip();
    if d.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 3 usable windows, got {}",
            d.len()
        )));
    }
    stats::pearson(&d, &t)
}
