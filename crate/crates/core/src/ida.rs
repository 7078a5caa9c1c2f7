//! Interval Detection Algorithm: log-scale histograms of the 0- and
//! 1-intervals of a session bitmap, with 1-intervals recovered by filling
//! ever larger gaps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::SessionBitmap;

/// Which fill weight normalizes the gap histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapNormalization {
    /// Gap class `i` uses the stage found for 1-interval class `i`.
    MatchingRow,
    /// Every gap class is divided by the session length.
    SessionLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdaConfig {
    pub base: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    /// Floor for the column divisor of the representation step.
    pub epsilon: f64,
    /// Also apply the column rule to the gap histogram.
    pub normalize_gap_column: bool,
    pub gap_normalization: GapNormalization,
}

impl Default for IdaConfig {
    fn default() -> Self {
        IdaConfig {
            base: 2.0,
            gamma: 0.1,
            c1: 3.0,
            c2: 0.3,
            epsilon: 1e-12,
            normalize_gap_column: false,
            gap_normalization: GapNormalization::MatchingRow,
        }
    }
}

impl IdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::invalid(format!("base must exceed 1, got {}", self.base)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.c2 > 0.0 && self.c1 > self.c2 && self.c1.is_finite()) {
            return Err(Error::invalid(format!(
                "need c1 > c2 > 0, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Class `⌊log_b len⌋` of a run length, robust to rounding at exact powers.
pub fn length_class(len: usize, base: f64) -> usize {
    debug_assert!(len > 0);
    let x = len as f64;
    let mut c = (x.ln() / base.ln()).floor().max(0.0) as i32;
    let tol = 1.0 + 1e-12;
    while base.powi(c + 1) <= x * tol {
        c += 1;
    }
    while c > 0 && base.powi(c) > x * tol {
        c -= 1;
    }
    c as usize
}

/// Stage where the whole session first forms a single 1-interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdaArtifact {
    pub class: usize,
    pub stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdaResult {
    pub base: f64,
    pub session_length: usize,
    /// Total gap length per class.
    pub gap_histogram: Vec<f64>,
    /// `stage_array[j][i]`: total length of class-`j` 1-intervals at stage `i`.
    pub stage_array: Vec<Vec<f64>>,
    /// Count of ones after the fill of stage `i`.
    pub fill_weights: Vec<f64>,
    /// Stage array and gap histogram after division by fill weights.
    pub normalized_stages: Vec<Vec<f64>>,
    pub normalized_gaps: Vec<f64>,
    /// Representation matrix: one row per class, stage columns followed by
    /// the gap column; entries in `[0, 1]`.
    pub im: Vec<Vec<f64>>,
    pub v1: Vec<f64>,
    pub v0: Vec<f64>,
    pub artifact: Option<IdaArtifact>,
}

impl IdaResult {
    pub fn classes(&self) -> usize {
        self.stage_array.len()
    }

    pub fn stages(&self) -> usize {
        self.fill_weights.len()
    }

    /// `im` as CSV: `class,stage_0,...,stage_K,gaps`.
    pub fn write_matrix_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("class");
        for i in 0..self.stages() {
            header.push_str(&format!(",stage_{i}"));
        }
        header.push_str(",gaps");
        writeln!(w, "{header}")?;
        for (j, row) in self.im.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{j},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// `class,v1,v0`.
    pub fn write_sums_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "class,v1,v0")?;
        for (j, (a, b)) in self.v1.iter().zip(&self.v0).enumerate() {
            writeln!(w, "{j},{a},{b}")?;
        }
        Ok(())
    }

    /// Greyscale image of `im` transposed (one image row per column of
    /// `im`), plain PGM; darker means larger.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let rows = self.im.first().map_or(0, Vec::len);
        writeln!(w, "P2\n{} {}\n255", self.im.len(), rows)?;
        for i in 0..rows {
            let px: Vec<String> = self
                .im
                .iter()
                .map(|row| (255.0 - (255.0 * row[i].clamp(0.0, 1.0)).round()).to_string())
                .collect();
            writeln!(w, "{}", px.join(" "))?;
        }
        Ok(())
    }
}

/// Maximal runs of equal bits.
fn runs(bits: &[bool]) -> Vec<(bool, usize)> {
    let mut out: Vec<(bool, usize)> = Vec::new();
    for &b in bits {
        match out.last_mut() {
            Some((v, n)) if *v == b => *n += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

fn histogram(runs: &[(bool, usize)], value: bool, base: f64, classes: usize) -> Vec<f64> {
    let mut h = vec![0.0; classes];
    for &(v, n) in runs {
        if v == value {
            h[length_class(n, base)] += n as f64;
        }
    }
    h
}

/// Fills every gap of class `≤ stage` and merges neighbouring runs.
fn fill(runs: &[(bool, usize)], stage: usize, base: f64) -> Vec<(bool, usize)> {
    let mut out: Vec<(bool, usize)> = Vec::with_capacity(runs.len());
    for &(v, n) in runs {
        let v = v || length_class(n, base) <= stage;
        match out.last_mut() {
            Some((pv, pn)) if *pv == v => *pn += n,
            _ => out.push((v, n)),
        }
    }
    out
}

/// One fill step on a bitmap: every 0-interval of class `≤ stage` becomes 1.
pub fn fill_gaps(session: &SessionBitmap, stage: usize, base: f64) -> Result<SessionBitmap> {
    let mut bits = Vec::with_capacity(session.len());
    for (v, n) in fill(&runs(session.bits()), stage, base) {
        bits.extend(std::iter::repeat_n(v, n));
    }
    SessionBitmap::new(session.bin_width(), bits)
}

fn ones(runs: &[(bool, usize)]) -> usize {
    runs.iter().filter(|r| r.0).map(|r| r.1).sum()
}

/// Runs the four parts on one session.
pub fn run_ida(session: &SessionBitmap, config: &IdaConfig) -> Result<IdaResult> {
    config.validate()?;
    let bits = session.bits();
    let len = bits.len();
    if len == 0 {
        return Err(Error::EmptyInput("empty session".into()));
    }
    let total_ones = session.ones();
    if total_ones == 0 || total_ones == len {
        return Err(Error::Degenerate(
            "session must contain both 0 and 1 bins".into(),
        ));
    }
    let b = config.base;
    let top = length_class(len, b);
    let classes = top + 1;
    let stages = top + 2;

    let mut state = runs(bits);
    let gap_histogram = histogram(&state, false, b, classes);

    let mut stage_array = vec![vec![0.0; stages]; classes];
    let mut fill_weights = Vec::with_capacity(stages);
    let mut artifact = None;
    for i in 0..stages {
        if artifact.is_none() && state.len() == 1 {
            artifact = Some(IdaArtifact { class: top, stage: i });
        }
        for (j, v) in histogram(&state, true, b, classes).into_iter().enumerate() {
            stage_array[j][i] = v;
        }
        state = fill(&state, i, b);
        fill_weights.push(ones(&state) as f64);
    }

    let (normalized_stages, normalized_gaps) =
        normalize_by_fill(&stage_array, &gap_histogram, &fill_weights, len as f64, config);
    let (im, v1, v0) = represent(&normalized_stages, &normalized_gaps, config);
    Ok(IdaResult {
        base: b,
        session_length: len,
        gap_histogram,
        stage_array,
        fill_weights,
        normalized_stages,
        normalized_gaps,
        im,
        v1,
        v0,
        artifact,
    })
}

/// Stage at which row `row` drops below `γ·max`, scanning down from the
/// last stage; falls back to the stage of the row maximum.
fn cutoff_stage(row: &[f64], gamma: f64) -> Option<usize> {
    let m = row.iter().copied().fold(0.0, f64::max);
    if m <= 0.0 {
        return None;
    }
    let thr = gamma * m;
    for i in (1..row.len()).rev() {
        if row[i] < thr && row[i - 1] >= thr {
            return Some(i);
        }
    }
    row.iter().position(|v| *v == m)
}

fn normalize_by_fill(
    a: &[Vec<f64>],
    s: &[f64],
    w: &[f64],
    session_length: f64,
    config: &IdaConfig,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut na = a.to_vec();
    let mut ns = s.to_vec();
    for (j, row) in na.iter_mut().enumerate() {
        let weight = cutoff_stage(row, config.gamma).map(|i| w[i]);
        if let Some(wi) = weight {
            for v in row.iter_mut() {
                *v /= wi;
            }
        }
        if config.gap_normalization == GapNormalization::MatchingRow {
            ns[j] /= weight.unwrap_or(session_length);
        }
    }
    if config.gap_normalization == GapNormalization::SessionLength {
        for v in &mut ns {
            *v /= session_length;
        }
    }
    (na, ns)
}

/// Column rule of the representation step, in place.
fn normalize_column(col: &mut [f64], config: &IdaConfig) {
    let mut m1 = 0.0f64;
    let mut m2 = 0.0f64;
    for &v in col.iter() {
        if v > m1 {
            m2 = m1;
            m1 = v;
        } else if v > m2 {
            m2 = v;
        }
    }
    let spiked = m1 > config.c1 * m2 && m2 > config.c2 * m1;
    let d = m2.max(config.epsilon);
    for v in col.iter_mut() {
        *v = if spiked { *v / d } else { (*v / d).min(1.0) };
    }
}

fn normalize_to_max(v: &mut [f64]) {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
}

fn represent(a: &[Vec<f64>], s: &[f64], config: &IdaConfig) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let classes = a.len();
    let stages = a.first().map_or(0, Vec::len);
    let mut im = a.to_vec();
    for i in 0..stages {
        let mut col: Vec<f64> = im.iter().map(|r| r[i]).collect();
        normalize_column(&mut col, config);
        for (r, v) in im.iter_mut().zip(col) {
            r[i] = v;
        }
    }
    // the spiked branch may leave values above 1
    let peak = im.iter().flatten().copied().fold(0.0, f64::max);
    if peak > 1.0 {
        for v in im.iter_mut().flatten() {
            *v /= peak;
        }
    }
    let mut gaps = s.to_vec();
    if config.normalize_gap_column {
        normalize_column(&mut gaps, config);
    }
    normalize_to_max(&mut gaps);
    let mut v1: Vec<f64> = im.iter().map(|r| r.iter().sum()).collect();
    normalize_to_max(&mut v1);
    for (r, g) in im.iter_mut().zip(&gaps) {
        r.push(*g);
    }
    debug_assert_eq!(im.len(), classes);
    (im, v1, gaps)
}

fn add_padded(acc: &mut Vec<f64>, v: &[f64], pad_last: bool) {
    if acc.len() < v.len() {
        let fill = if pad_last { acc.last().copied().unwrap_or(0.0) } else { 0.0 };
        acc.resize(v.len(), fill);
    }
    let tail = if pad_last { v.last().copied().unwrap_or(0.0) } else { 0.0 };
    for (i, x) in acc.iter_mut().enumerate() {
        *x += v.get(i).copied().unwrap_or(tail);
    }
}

/// Superposes per-session results: the normalized stage arrays and gap
/// histograms are summed (shorter ones zero-padded) and the representation
/// step is applied to the sums.
pub fn aggregate_ida(results: &[IdaResult], config: &IdaConfig) -> Result<IdaResult> {
    config.validate()?;
    let Some(first) = results.first() else {
        return Err(Error::EmptyInput("no results to aggregate".into()));
    };
    if results.iter().any(|r| r.base != first.base) {
        return Err(Error::invalid("results use different bases"));
    }
    let classes = results.iter().map(IdaResult::classes).max().unwrap_or(0);
    let stages = results.iter().map(IdaResult::stages).max().unwrap_or(0);
    let zero = || IdaResult {
        base: first.base,
        session_length: 0,
        gap_histogram: Vec::new(),
        stage_array: vec![vec![0.0; stages]; classes],
        fill_weights: Vec::new(),
        normalized_stages: vec![vec![0.0; stages]; classes],
        normalized_gaps: vec![0.0; classes],
        im: Vec::new(),
        v1: Vec::new(),
        v0: Vec::new(),
        artifact: None,
    };
    let merge = |mut acc: IdaResult, r: &IdaResult| {
        acc.session_length = acc.session_length.max(r.session_length);
        add_padded(&mut acc.gap_histogram, &r.gap_histogram, false);
        add_padded(&mut acc.normalized_gaps, &r.normalized_gaps, false);
        add_padded(&mut acc.fill_weights, &r.fill_weights, true);
        for (j, row) in r.stage_array.iter().enumerate() {
            add_padded(&mut acc.stage_array[j], row, false);
            add_padded(&mut acc.normalized_stages[j], &r.normalized_stages[j], false);
        }
        acc
    };
    // fixed-size chunks keep the summation order independent of threads
    let mut sum = results
        .par_chunks(16)
        .map(|chunk| chunk.iter().fold(zero(), merge))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(zero(), |acc, part| merge(acc, &part));
    sum.fill_weights.resize(stages, sum.fill_weights.last().copied().unwrap_or(0.0));
    let (im, v1, v0) = represent(&sum.normalized_stages, &sum.normalized_gaps, config);
    sum.im = im;
    sum.v1 = v1;
    sum.v0 = v0;
    sum.artifact = results.iter().filter_map(|r| r.artifact).max_by_key(|a| a.class);
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(on: usize, off: usize, periods: usize) -> SessionBitmap {
        let mut bits = Vec::new();
        for _ in 0..periods {
            bits.extend(std::iter::repeat_n(true, on));
            bits.extend(std::iter::repeat_n(false, off));
        }
        SessionBitmap::new(1.0, bits).unwrap()
    }

    #[test]
    fn classes() {
        assert_eq!(length_class(1, 2.0), 0);
        assert_eq!(length_class(2, 2.0), 1);
        assert_eq!(length_class(3, 2.0), 1);
        assert_eq!(length_class(4, 2.0), 2);
        assert_eq!(length_class(1023, 2.0), 9);
        assert_eq!(length_class(1024, 2.0), 10);
        assert_eq!(length_class(2, 1.41421356), 2);
        assert_eq!(length_class(8, 10f64.sqrt()), 1);
    }

    #[test]
    fn single_level_construction() {
        let s = periodic(16, 4, 50);
        let r = run_ida(&s, &IdaConfig::default()).unwrap();
        assert_eq!(r.stages(), length_class(1000, 2.0) + 2);
        for (i, v) in r.gap_histogram.iter().enumerate() {
            assert_eq!(*v, if i == 2 { 200.0 } else { 0.0 });
        }
        for stage in 0..=2 {
            assert_eq!(r.stage_array[4][stage], 800.0);
            let others: f64 = (0..r.classes()).filter(|j| *j != 4).map(|j| r.stage_array[j][stage]).sum();
            assert_eq!(others, 0.0);
        }
        // the trailing gap ends the session, so the filled session is one run
        for stage in 3..r.stages() {
            assert_eq!(r.stage_array[9][stage], 1000.0);
        }
        assert_eq!(r.artifact, Some(IdaArtifact { class: 9, stage: 3 }));
        assert_eq!(r.fill_weights[2], 1000.0);
    }

    #[test]
    fn degenerate_sessions() {
        let cfg = IdaConfig::default();
        let all = SessionBitmap::new(1.0, vec![true; 32]).unwrap();
        let none = SessionBitmap::new(1.0, vec![false; 32]).unwrap();
        assert!(matches!(run_ida(&all, &cfg), Err(Error::Degenerate(_))));
        assert!(matches!(run_ida(&none, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn config_validation() {
        let bad = IdaConfig {
            c1: 0.2,
            ..IdaConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(IdaConfig { base: 1.0, ..IdaConfig::default() }.validate().is_err());
        assert!(IdaConfig { gamma: 1.0, ..IdaConfig::default() }.validate().is_err());
    }

    #[test]
    fn aggregate_is_scale_free() {
        let cfg = IdaConfig::default();
        let r = run_ida(&periodic(16, 4, 50), &cfg).unwrap();
        let one = aggregate_ida(std::slice::from_ref(&r), &cfg).unwrap();
        assert_eq!(one.im, r.im);
        assert_eq!(one.v0, r.v0);
        let many = aggregate_ida(&vec![r.clone(); 5], &cfg).unwrap();
        for (a, b) in many.im.iter().flatten().zip(r.im.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        let other = run_ida(&periodic(16, 4, 50), &IdaConfig { base: 3.0, ..cfg }).unwrap();
        assert!(aggregate_ida(&[r, other], &cfg).is_err());
    }

    #[test]
    fn outputs() {
        let r = run_ida(&periodic(2, 1, 4), &IdaConfig::default()).unwrap();
        let mut csv = Vec::new();
        r.write_matrix_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("class,stage_0,stage_1,stage_2,stage_3,stage_4,gaps\n"));
        assert_eq!(csv.lines().count(), 1 + r.classes());
        let mut pgm = Vec::new();
        r.write_pgm(&mut pgm).unwrap();
        let pgm = String::from_utf8(pgm).unwrap();
        assert!(pgm.starts_with(&format!("P2\n{} {}\n255\n", r.classes(), r.stages() + 1)));
        let mut sums = Vec::new();
        r.write_sums_csv(&mut sums).unwrap();
        assert!(String::from_utf8(sums).unwrap().starts_with("class,v1,v0\n0,"));
    }
}
