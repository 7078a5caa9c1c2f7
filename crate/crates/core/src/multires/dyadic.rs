//! Disjoint-block estimators computed on the Haar pyramid of block means.

use super::{check_exponent, Definition, MultiresProfile, ProfileKind};
use crate::error::Result;
use crate::trace::DyadicView;

/// Calls `visit(b, means)` with the block means of size `2^b`, `b = 0..m`.
fn for_each_level(x: &DyadicView, mut visit: impl FnMut(u32, &[f64])) {
    let mut means = x.values().to_vec();
    for b in 0..x.m() {
        visit(b, &means);
        means = means.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
}

/// p-Averaging function over disjoint blocks, labelled `j = 1..=m`.
pub fn averaging_def1(x: &DyadicView, p: f64) -> Result<MultiresProfile> {
    check_exponent(p)?;
    let mut values = Vec::with_capacity(x.m() as usize);
    for_each_level(x, |_, means| {
        let pairs = means.len() / 2;
        let sum: f64 = means
            .chunks_exact(2)
            .map(|c| (c[1] - c[0]).abs().powf(p))
            .sum();
        values.push((sum / pairs as f64).powf(1.0 / p));
    });
    Ok(MultiresProfile {
        kind: ProfileKind::Averaging,
        definition: Definition::Def1,
        p,
        m: x.m(),
        values,
    })
}

/// Energy function over disjoint blocks (mean squared Haar detail),
/// labelled `j = 1..=m`.
pub fn energy_def1(x: &DyadicView) -> Result<MultiresProfile> {
    let mut values = Vec::with_capacity(x.m() as usize);
    for_each_level(x, |b, means| {
        // block sums scaled by 2^{-b/2}, i.e. means scaled by 2^{b/2}
        let norm = (b as f64 / 2.0).exp2();
        let pairs = means.len() / 2;
        let sum: f64 = means
            .chunks_exact(2)
            .map(|c| {
                let d = norm * (c[1] - c[0]) / std::f64::consts::SQRT_2;
                d * d
            })
            .sum();
        values.push(sum / pairs as f64);
    });
    Ok(MultiresProfile {
        kind: ProfileKind::Energy,
        definition: Definition::Def1,
        p: 2.0,
        m: x.m(),
        values,
    })
}
