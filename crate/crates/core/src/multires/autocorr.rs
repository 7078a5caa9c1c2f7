use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Definition, MultiresProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::trace::DyadicView;

/// Sample autocorrelation at lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrSeries {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population variance (divisor `n`).
    pub variance: f64,
}

impl AutocorrSeries {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lag,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

/// `|FFT(y)|²` transformed back; entry `h` is `Σ_t y_t·y_{t+h}` over the
/// (zero padded or circular) index set of length `y.len()`.
fn power_spectrum_inverse(y: Vec<f64>) -> Vec<f64> {
    let n = y.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = y.into_iter().map(|v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re / n as f64).collect()
}

fn center(x: &[f64]) -> (f64, Vec<f64>) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (mean, x.iter().map(|v| v - mean).collect())
}

/// Linear sample autocorrelation with one global mean and the divisor
/// `Σ (X_i - X̄)²`, evaluated through a zero-padded FFT.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<AutocorrSeries> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid(format!("autocorrelation needs at least 2 samples, got {n}")));
    }
    if max_lag == 0 || max_lag >= n {
        return Err(Error::invalid(format!(
            "max lag must lie in 1..{n}, got {max_lag}"
        )));
    }
    let (mean, mut y) = center(x);
    let ss: f64 = y.iter().map(|v| v * v).sum();
    if ss <= 0.0 {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    y.resize((2 * n).next_power_of_two(), 0.0);
    let lagged = power_spectrum_inverse(y);
    let values = lagged[..=max_lag].iter().map(|v| v / ss).collect();
    Ok(AutocorrSeries {
        values,
        mean,
        variance: ss / n as f64,
    })
}

/// Circular sample autocovariance `c(h) = N⁻¹ Σ_t y_t·y_{(t+h) mod N}` for
/// every lag `h = 0..N`, with `y` the centered series.
pub fn circular_autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let (_, y) = center(x);
    power_spectrum_inverse(y)
        .into_iter()
        .map(|v| v / n as f64)
        .collect()
}

/// The 2-Averaging function under the overlapping definition, evaluated as a
/// linear functional of the circular autocorrelation `R`:
///
/// `A_j² = Var/2^(j-1) · {1 − R(n) + Σ_{i=1}^{n-1} (1 − i/n)·[2R(i) − R(n+i) − R(n−i)]}`
/// with `n = 2^j` and lags taken modulo `2^m`.
pub fn averaging_via_autocorr(x: &DyadicView) -> Result<MultiresProfile> {
    let len = x.len();
    let cov = circular_autocovariance(x.values());
    let var = cov[0];
    if var <= 0.0 {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let r = |h: usize| cov[h & (len - 1)] / var;
    let mut values = Vec::with_capacity(x.m() as usize);
    for b in 0..x.m() {
        let n = 1usize << b;
        let nf = n as f64;
        let mut kernel = 0.0;
        for i in 1..n {
            kernel += (1.0 - i as f64 / nf) * (2.0 * r(i) - r(n + i) - r(n - i));
        }
        let square = var / (b as f64 - 1.0).exp2() * (1.0 - r(n) + kernel);
        values.push(square.max(0.0).sqrt());
    }
    Ok(MultiresProfile {
        kind: ProfileKind::Averaging,
        definition: Definition::Def2,
        p: 2.0,
        m: x.m(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn direct(x: &[f64], max_lag: usize) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        (0..=max_lag)
            .map(|k| {
                (0..n - k)
                    .map(|i| (x[i] - mean) * (x[i + k] - mean))
                    .sum::<f64>()
                    / ss
            })
            .collect()
    }

    #[test]
    fn fft_matches_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..4096).map(|_| rng.random::<f64>() * 4.0).collect();
        let fast = autocorrelation(&x, 400).unwrap();
        for (f, d) in fast.values.iter().zip(direct(&x, 400)) {
            assert!((f - d).abs() < 1e-10);
        }
        assert!((fast.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_noise_band() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 8192;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ac = autocorrelation(&x, 200).unwrap();
        let band = 4.0 / (n as f64).sqrt();
        let inside = ac.values[1..].iter().filter(|v| v.abs() < band).count();
        assert!(inside as f64 >= 0.95 * 200.0);
    }

    #[test]
    fn periodic_series() {
        let x: Vec<f64> = (0..1000).map(|i| ((i + 1) % 2) as f64).collect();
        let ac = autocorrelation(&x, 4).unwrap();
        assert!((ac.values[1] + 1.0).abs() < 2e-3);
        assert!((ac.values[2] - 1.0).abs() < 3e-3);
    }

    #[test]
    fn errors() {
        assert!(matches!(autocorrelation(&[1.0], 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(autocorrelation(&[1.0, 2.0], 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(autocorrelation(&[1.0, 2.0], 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(autocorrelation(&[5.0; 10], 3), Err(Error::Degenerate(_))));
        let x = DyadicView::new(vec![2.0; 16]).unwrap();
        assert!(matches!(averaging_via_autocorr(&x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn circular_autocovariance_matches_direct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let c = circular_autocovariance(&x);
        let mean = x.iter().sum::<f64>() / 64.0;
        for h in 0..64 {
            let d: f64 = (0..64).map(|t| (x[t] - mean) * (x[(t + h) % 64] - mean)).sum::<f64>() / 64.0;
            assert!((c[h] - d).abs() < 1e-12);
        }
    }
}
