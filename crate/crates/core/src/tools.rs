//! Level detection from Averaging profiles (Tools 1 and 2) and burstiness
//! indices from windowed marginals (Tools 3 and 4).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussianity::{distance_traffic_correlation, kolmogorov_to_normal, windowed_kolmogorov_values, KolmogorovSeries};
use crate::multires::{MultiresProfile, ProfileKind};
use crate::stats;
use crate::trace::DyadicView;

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_FLAT_THRESHOLD: f64 = -0.1;
pub const DEFAULT_WINDOW_EXPONENT: u32 = 9;

/// Relative slope changes below this are treated as exact zeros.
const CURVATURE_FLOOR: f64 = 1e-9;

/// Slopes and relative slope changes of a log2 Averaging profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSeries {
    /// `slopes[k]` is `S` at scale `slope_scales[k]`: the log2 step from the
    /// previous scale into this one.
    pub slope_scales: Vec<u32>,
    pub slopes: Vec<Option<f64>>,
    /// `curvature[k]` is `Sc` at scale `curvature_scales[k]`.
    pub curvature_scales: Vec<u32>,
    pub curvature: Vec<Option<f64>>,
    pub epsilon: f64,
    /// Scales at local maxima of `Sc`, largest `Sc` first.
    pub levels: Vec<u32>,
}

fn averaging_logs(profile: &MultiresProfile, min_usable: usize) -> Result<Vec<Option<f64>>> {
    if profile.kind != ProfileKind::Averaging {
        return Err(Error::invalid("level tools need an Averaging profile"));
    }
    let logs = profile.log2_values();
    let usable = logs.iter().flatten().count();
    if usable < min_usable {
        return Err(Error::InsufficientData(format!(
            "need at least {min_usable} nonzero scales, got {usable}"
        )));
    }
    Ok(logs)
}

fn slopes_of(logs: &[Option<f64>]) -> Vec<Option<f64>> {
    logs.windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect()
}

impl SlopeSeries {
    pub fn slope_at(&self, scale: u32) -> Option<f64> {
        let k = self.slope_scales.iter().position(|s| *s == scale)?;
        self.slopes[k]
    }

    pub fn curvature_at(&self, scale: u32) -> Option<f64> {
        let k = self.curvature_scales.iter().position(|s| *s == scale)?;
        self.curvature[k]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,slope,curvature,level")?;
        for (k, (scale, s)) in self.slope_scales.iter().zip(&self.slopes).enumerate() {
            let sc = if k + 1 < self.slopes.len() {
                self.curvature[k]
            } else {
                None
            };
            let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            let level = u8::from(self.levels.contains(scale));
            writeln!(w, "{scale},{},{},{level}", fmt(*s), fmt(sc))?;
        }
        Ok(())
    }
}

/// Tool 1: relative slope changes
/// `Sc_i = |S_{i+1} − S_i| / max(min(|S_i|, |S_{i+1}|), ε)`; their local
/// maxima are candidate levels. Missing scales split the series.
pub fn tool1_level_detector(profile: &MultiresProfile, epsilon: f64) -> Result<SlopeSeries> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let logs = averaging_logs(profile, 4)?;
    let slopes = slopes_of(&logs);
    let curvature: Vec<Option<f64>> = slopes
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => {
                let sc = (b - a).abs() / a.abs().min(b.abs()).max(epsilon);
                Some(if sc < CURVATURE_FLOOR { 0.0 } else { sc })
            }
            _ => None,
        })
        .collect();
    let slope_scales: Vec<u32> = (1..logs.len()).map(|p| profile.scale_label(p)).collect();
    let curvature_scales: Vec<u32> = slope_scales[..slope_scales.len() - 1].to_vec();
    let mut maxima: Vec<usize> = stats::local_maxima(&curvature)
        .into_iter()
        .filter(|k| curvature[*k].is_some_and(|v| v > 0.0))
        .collect();
    maxima.sort_by(|a, b| curvature[*b].unwrap().total_cmp(&curvature[*a].unwrap()));
    Ok(SlopeSeries {
        levels: maxima.iter().map(|k| curvature_scales[*k]).collect(),
        slope_scales,
        slopes,
        curvature_scales,
        curvature,
        epsilon,
    })
}

/// Tool 2 output: `flags[k]` is `S > threshold` at `scales[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatRegions {
    pub threshold: f64,
    pub scales: Vec<u32>,
    pub flags: Vec<Option<bool>>,
    /// Inclusive scale ranges: a run of flagged slopes `a..=b` covers the
    /// scales `a−1..=b`.
    pub regions: Vec<(u32, u32)>,
}

impl FlatRegions {
    pub fn covers(&self, scale: u32) -> bool {
        self.regions.iter().any(|(a, b)| (*a..=*b).contains(&scale))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,flat")?;
        for (s, f) in self.scales.iter().zip(&self.flags) {
            match f {
                Some(f) => writeln!(w, "{s},{}", u8::from(*f))?,
                None => writeln!(w, "{s},")?,
            }
        }
        Ok(())
    }
}

/// Tool 2: flat regions where the log2 slope exceeds `threshold`.
pub fn tool2_flat_regions(profile: &MultiresProfile, threshold: f64) -> Result<FlatRegions> {
    let logs = averaging_logs(profile, 2)?;
    let scales: Vec<u32> = (1..logs.len()).map(|p| profile.scale_label(p)).collect();
    let flags: Vec<Option<bool>> = slopes_of(&logs)
        .into_iter()
        .map(|s| s.map(|v| v > threshold))
        .collect();
    let mut regions = Vec::new();
    let mut k = 0;
    while k < flags.len() {
        if flags[k] == Some(true) {
            let start = k;
            while k + 1 < flags.len() && flags[k + 1] == Some(true) {
                k += 1;
            }
            regions.push((scales[start] - 1, scales[k]));
        }
        k += 1;
    }
    Ok(FlatRegions {
        threshold,
        scales,
        flags,
        regions,
    })
}

/// Scale and window parameters of Tools 3 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstinessOptions {
    pub k: u32,
    pub s: u32,
    /// Accept `k` beyond the suggested bounds (with a warning).
    pub allow_large_k: bool,
}

impl BurstinessOptions {
    pub fn new(k: u32) -> Self {
        BurstinessOptions {
            k,
            s: DEFAULT_WINDOW_EXPONENT,
            allow_large_k: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstinessReport {
    pub k: u32,
    pub s: u32,
    /// Tool 3 index: mean of the present `per_scale_d`.
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[serde(rename = "per_scale_D")]
    pub per_scale_d: Vec<Option<f64>>,
    /// Tool 4 index `Σ C_j·D̄_j / Σ D̄_j`.
    #[serde(rename = "O")]
    pub o: Option<f64>,
    #[serde(rename = "per_scale_C")]
    pub per_scale_c: Vec<Option<f64>>,
    #[serde(rename = "per_scale_Dbar")]
    pub per_scale_dbar: Vec<Option<f64>>,
    /// Scales left out of an index, with the reason.
    pub excluded: Vec<(u32, String)>,
}

impl BurstinessReport {
    fn empty(k: u32, s: u32) -> Self {
        BurstinessReport {
            k,
            s,
            d: None,
            per_scale_d: Vec::new(),
            o: None,
            per_scale_c: Vec::new(),
            per_scale_dbar: Vec::new(),
            excluded: Vec::new(),
        }
    }

    /// Folds the Tool 4 part of `other` into a Tool 3 report.
    pub fn merge(mut self, other: BurstinessReport) -> Self {
        if other.o.is_some() || !other.per_scale_c.is_empty() {
            self.o = other.o;
            self.per_scale_c = other.per_scale_c;
            self.per_scale_dbar = other.per_scale_dbar;
            self.s = other.s;
        }
        self.excluded.extend(other.excluded);
        self
    }

    /// One-line CSV summary `trace,D,O` with a header.
    pub fn write_summary_csv<W: Write>(&self, mut w: W, trace: &str) -> Result<()> {
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        writeln!(w, "trace,D,O")?;
        writeln!(w, "{trace},{},{}", fmt(self.d), fmt(self.o))?;
        Ok(())
    }
}

/// Block sums of `2^j` consecutive values.
fn coarse(x: &[f64], j: u32) -> Vec<f64> {
    x.chunks_exact(1 << j).map(|c| c.iter().sum()).collect()
}

fn check_k(k: u32, limit: i64, allow: bool, what: &str) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if (k as i64) > limit {
        if allow {
            log::warn!("{what}: k={k} exceeds the suggested maximum {limit}");
        } else {
            return Err(Error::invalid(format!(
                "{what}: k={k} exceeds the suggested maximum {limit}; pass an override to force it"
            )));
        }
    }
    Ok(())
}

/// Tool 3: mean over scales `j < k` of the Kolmogorov distance of the
/// globally normalized coarse series.
pub fn tool3_gaussian_deviation(x: &DyadicView, opts: &BurstinessOptions) -> Result<BurstinessReport> {
    let m = x.m();
    check_k(opts.k, m as i64 - 10, opts.allow_large_k, "tool 3")?;
    if opts.k > m {
        return Err(Error::invalid(format!("k={} exceeds the {m} available scales", opts.k)));
    }
    let mut report = BurstinessReport::empty(opts.k, opts.s);
    for j in 0..opts.k {
        let d = match kolmogorov_to_normal(&coarse(x.values(), j)) {
            Ok(d) => Some(d),
            Err(e) => {
                report.excluded.push((j, format!("tool 3: {e}")));
                None
            }
        };
        report.per_scale_d.push(d);
    }
    let present: Vec<f64> = report.per_scale_d.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::Degenerate("every scale has zero variance".into()));
    }
    report.d = Some(stats::mean(&present));
    Ok(report)
}

/// Combines per-scale windowed series into `(O, C_j, D̄_j)`; scales with
/// fewer than 3 usable windows or a constant series are left out.
pub fn combine_scale_correlations(
    per_scale: &[KolmogorovSeries],
) -> (Option<f64>, Vec<Option<f64>>, Vec<Option<f64>>, Vec<(u32, String)>) {
    let mut cs = Vec::new();
    let mut dbars = Vec::new();
    let mut excluded = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    for (j, series) in per_scale.iter().enumerate() {
        let dbar = series.mean_distance();
        let c = match distance_traffic_correlation(series) {
            Ok(c) => Some(c),
            Err(e) => {
                excluded.push((j as u32, format!("tool 4: {e}")));
                None
            }
        };
        if let (Some(c), Some(dbar)) = (c, dbar) {
            num += c * dbar;
            den += dbar;
        }
        cs.push(c);
        dbars.push(dbar);
    }
    let o = (den > 0.0).then(|| (num / den).clamp(-1.0, 1.0));
    (o, cs, dbars, excluded)
}

/// Tool 4: per scale `j < k`, the correlation between windowed distances
/// (windows of `2^s` coarse points) and window traffic, weighted by the
/// mean distance.
pub fn tool4_burstiness(x: &DyadicView, opts: &BurstinessOptions) -> Result<BurstinessReport> {
    let m = x.m();
    if opts.s < DEFAULT_WINDOW_EXPONENT && !opts.allow_large_k {
        return Err(Error::invalid(format!(
            "tool 4: window exponent s={} is below the suggested minimum {DEFAULT_WINDOW_EXPONENT}",
            opts.s
        )));
    }
    if opts.s < 1 {
        return Err(Error::invalid("tool 4: window exponent must be positive"));
    }
    check_k(opts.k, m as i64 - opts.s as i64 - 7, opts.allow_large_k, "tool 4")?;
    let window = 1usize << opts.s;
    let mut series = Vec::new();
    let mut early = Vec::new();
    for j in 0..opts.k {
        let xs = if j < m { coarse(x.values(), j) } else { Vec::new() };
        match windowed_kolmogorov_values(&xs, window) {
            Ok(s) => series.push(s),
            Err(e) => {
                early.push((j, format!("tool 4: {e}")));
                series.push(KolmogorovSeries {
                    window_size: window,
                    distances: Vec::new(),
                    window_traffic: Vec::new(),
                });
            }
        }
    }
    let (o, per_scale_c, per_scale_dbar, mut excluded) = combine_scale_correlations(&series);
    // a scale that never produced windows is reported once
    excluded.retain(|(j, _)| !early.iter().any(|(e, _)| e == j));
    early.extend(excluded);
    let Some(o) = o else {
        return Err(Error::InsufficientData(
            "tool 4: no scale has 3 usable windows".into(),
        ));
    };
    let mut report = BurstinessReport::empty(opts.k, opts.s);
    report.o = Some(o);
    report.per_scale_c = per_scale_c;
    report.per_scale_dbar = per_scale_dbar;
    report.excluded = early;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multires::Definition;

    fn profile(values: Vec<f64>) -> MultiresProfile {
        MultiresProfile {
            kind: ProfileKind::Averaging,
            definition: Definition::Def2,
            p: 2.0,
            m: values.len() as u32,
            values,
        }
    }

    #[test]
    fn linear_profile_has_no_levels() {
        let p = profile((0..12).map(|j| (-0.5 * j as f64).exp2()).collect());
        let t = tool1_level_detector(&p, DEFAULT_EPSILON).unwrap();
        assert!(t.curvature.iter().all(|c| *c == Some(0.0)));
        assert!(t.levels.is_empty());
        assert_eq!(t.curvature.len(), t.slopes.len() - 1);
        let f = tool2_flat_regions(&p, DEFAULT_FLAT_THRESHOLD).unwrap();
        assert!(f.flags.iter().all(|x| *x == Some(false)));
        assert!(f.regions.is_empty());
    }

    #[test]
    fn kink_is_found() {
        // slope −0.5 up to scale 6, then −1.5
        let logs: Vec<f64> = (0..12)
            .map(|j| if j <= 6 { -0.5 * j as f64 } else { -3.0 - 1.5 * (j - 6) as f64 })
            .collect();
        let p = profile(logs.iter().map(|l| l.exp2()).collect());
        let t = tool1_level_detector(&p, DEFAULT_EPSILON).unwrap();
        assert_eq!(t.levels, vec![6]);
        assert!((t.curvature_at(6).unwrap() - 2.0).abs() < 1e-9);
        assert!((t.slope_at(7).unwrap() + 1.5).abs() < 1e-9);
    }

    #[test]
    fn bump_flags_rising_scales() {
        let logs = [0.0, -0.5, -1.0, -0.6, -0.2, -0.7, -1.2, -1.7];
        let p = profile(logs.iter().map(|l: &f64| l.exp2()).collect());
        let f = tool2_flat_regions(&p, DEFAULT_FLAT_THRESHOLD).unwrap();
        let flagged: Vec<u32> = f
            .scales
            .iter()
            .zip(&f.flags)
            .filter(|(_, x)| **x == Some(true))
            .map(|(s, _)| *s)
            .collect();
        assert_eq!(flagged, vec![3, 4]);
        assert_eq!(f.regions, vec![(2, 4)]);
        assert!(f.covers(2) && f.covers(4) && !f.covers(5));
    }

    #[test]
    fn missing_scales_split_segments() {
        let mut v: Vec<f64> = (0..10).map(|j| (-0.5 * j as f64).exp2()).collect();
        v[4] = 0.0;
        let t = tool1_level_detector(&profile(v), DEFAULT_EPSILON).unwrap();
        assert_eq!(t.slopes[3], None);
        assert_eq!(t.slopes[4], None);
        assert!(t.levels.is_empty());
        let short = profile(vec![1.0, 0.5, 0.0, 0.0, 0.2]);
        assert!(matches!(
            tool1_level_detector(&short, DEFAULT_EPSILON),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn scale_invariance() {
        let v: Vec<f64> = [1.0, 0.7, 0.6, 0.58, 0.3, 0.1, 0.08].to_vec();
        let a = tool1_level_detector(&profile(v.clone()), 0.01).unwrap();
        let b = tool1_level_detector(&profile(v.iter().map(|x| x * 37.0).collect()), 0.01).unwrap();
        assert_eq!(a.levels, b.levels);
        for (x, y) in a.curvature.iter().zip(&b.curvature) {
            assert!((x.unwrap() - y.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_distance_and_traffic_give_one() {
        let mk = |d: Vec<f64>| KolmogorovSeries {
            window_size: 4,
            distances: d.iter().map(|v| Some(*v)).collect(),
            window_traffic: d,
        };
        let (o, cs, _, excluded) =
            combine_scale_correlations(&[mk(vec![0.1, 0.3, 0.2, 0.5]), mk(vec![0.05, 0.2, 0.1])]);
        assert!((o.unwrap() - 1.0).abs() < 1e-12);
        assert!(cs.iter().all(|c| (c.unwrap() - 1.0).abs() < 1e-12));
        assert!(excluded.is_empty());
    }

    #[test]
    fn k_limits() {
        let x = DyadicView::new((0..1 << 12).map(|i| ((i * 7919) % 101) as f64).collect()).unwrap();
        assert!(tool3_gaussian_deviation(&x, &BurstinessOptions::new(3)).is_err());
        let forced = BurstinessOptions {
            allow_large_k: true,
            ..BurstinessOptions::new(3)
        };
        let r = tool3_gaussian_deviation(&x, &forced).unwrap();
        assert_eq!(r.per_scale_d.len(), 3);
        let single = tool3_gaussian_deviation(&x, &BurstinessOptions { k: 1, ..forced }).unwrap();
        assert_eq!(single.d.unwrap(), kolmogorov_to_normal(x.values()).unwrap());
    }

    #[test]
    fn summary_csv() {
        let mut r = BurstinessReport::empty(2, 9);
        r.d = Some(0.25);
        let mut buf = Vec::new();
        r.write_summary_csv(&mut buf, "t").unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trace,D,O\nt,0.25,\n");
    }
}
