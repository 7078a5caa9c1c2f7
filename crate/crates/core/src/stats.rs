//! Small numeric helpers shared by the estimators and detectors.

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() as f64 - 1.0)).sqrt()
}

/// Pearson correlation of two equal-length series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("correlation needs equal-length series"));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("correlation needs at least 2 pairs".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("line fit needs at least 2 points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("line fit with constant abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Indices of local maxima of a series with gaps. A run of equal values is
/// a maximum when both neighbours of the run are strictly lower (or absent);
/// the leftmost index of the run is reported. Missing entries count as
/// absent neighbours. A run spanning its whole segment is not a maximum.
pub fn local_maxima(values: &[Option<f64>]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let Some(v) = values[i] else {
            i += 1;
            continue;
        };
        let mut end = i;
        while end + 1 < values.len() && values[end + 1] == Some(v) {
            end += 1;
        }
        let left_lower = i == 0 || values[i - 1].is_none_or(|l| l < v);
        let right_lower = end + 1 >= values.len() || values[end + 1].is_none_or(|r| r < v);
        // an isolated single value is not a peak of anything
        let has_neighbour = (i > 0 && values[i - 1].is_some())
            || (end + 1 < values.len() && values[end + 1].is_some());
        if left_lower && right_lower && has_neighbour {
            out.push(i);
        }
        i = end + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.0, 5.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(pearson(&x, &[1.0; 4]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maxima() {
        let v = |xs: &[f64]| xs.iter().map(|x| Some(*x)).collect::<Vec<_>>();
        assert_eq!(local_maxima(&v(&[0.0, 2.0, 1.0, 3.0, 3.0, 0.0])), vec![1, 3]);
        assert_eq!(local_maxima(&v(&[5.0, 1.0, 2.0])), vec![0, 2]);
        assert!(local_maxima(&v(&[1.0, 1.0, 1.0])).is_empty());
        assert_eq!(local_maxima(&[Some(1.0), None, Some(2.0), Some(1.0)]), vec![2]);
        assert!(local_maxima(&[None, Some(1.0), None]).is_empty());
    }
}
