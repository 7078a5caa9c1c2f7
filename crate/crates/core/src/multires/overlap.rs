//! Overlapping-block estimators. Every circular origin contributes one block
//! pair, so each scale is a mean over all `2^m` positions.
//!
//! Circular block sums of size `2^b` are built level by level:
//! `S_b[s] = S_{b-1}[s] + S_{b-1}[s + 2^{b-1} mod N]`, which keeps the whole
//! computation at `O(m·2^m)`.

use super::{check_exponent, Definition, MultiresProfile, ProfileKind};
use crate::error::Result;
use crate::trace::DyadicView;

/// Calls `visit(b, sums)` with the circular sums of `2^b` consecutive
/// centered values starting at every position.
fn for_each_scale(x: &DyadicView, mut visit: impl FnMut(u32, &[f64])) {
    let n = x.len();
    let mean = x.values().iter().sum::<f64>() / n as f64;
    let mut sums: Vec<f64> = x.values().iter().map(|v| v - mean).collect();
    let mut next = vec![0.0; n];
    for b in 0..x.m() {
        visit(b, &sums);
        let half = 1usize << b;
        for s in 0..n {
            next[s] = sums[s] + sums[(s + half) & (n - 1)];
        }
        std::mem::swap(&mut sums, &mut next);
    }
}

/// Sum over all origins of `f(S[s] - S[s + 2^b])`.
fn pair_sum(b: u32, sums: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = sums.len();
    let size = 1usize << b;
    (0..n)
        .map(|s| f(sums[s] - sums[(s + size) & (n - 1)]))
        .sum()
}

/// p-Averaging function over overlapping circular blocks, labelled
/// `j = 0..m` (entry `j` compares adjacent blocks of `2^j` samples).
pub fn averaging_def2(x: &DyadicView, p: f64) -> Result<MultiresProfile> {
    check_exponent(p)?;
    let n = x.len() as f64;
    let mut values = Vec::with_capacity(x.m() as usize);
    for_each_scale(x, |b, sums| {
        let size = (b as f64).exp2();
        let total = pair_sum(b, sums, |d| (d / size).abs().powf(p));
        values.push((total / n).powf(1.0 / p));
    });
    Ok(MultiresProfile {
        kind: ProfileKind::Averaging,
        definition: Definition::Def2,
        p,
        m: x.m(),
        values,
    })
}

/// Energy function over overlapping circular blocks, labelled `j = 0..m`.
pub fn energy_def2(x: &DyadicView) -> Result<MultiresProfile> {
    let n = x.len() as f64;
    let mut values = Vec::with_capacity(x.m() as usize);
    for_each_scale(x, |b, sums| {
        let scale = 2.0 * (b as f64).exp2();
        let total = pair_sum(b, sums, |d| d * d / scale);
        values.push(total / n);
    });
    Ok(MultiresProfile {
        kind: ProfileKind::Energy,
        definition: Definition::Def2,
        p: 2.0,
        m: x.m(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multires::energy_averaging_residuals;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_gives_zero() {
        let x = DyadicView::new(vec![0.1; 512]).unwrap();
        assert!(averaging_def2(&x, 2.0).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(averaging_def2(&x, 1.0).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(energy_def2(&x).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn energy_identity_at_matching_block_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = DyadicView::new((0..2048).map(|_| rng.random::<f64>().exp()).collect()).unwrap();
        let e = energy_def2(&x).unwrap();
        let a = averaging_def2(&x, 2.0).unwrap();
        for r in energy_averaging_residuals(&e, &a).unwrap().into_iter().flatten() {
            assert!(r.abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn homogeneity_and_translation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let raw: Vec<f64> = (0..1024).map(|_| rng.random::<f64>()).collect();
        let x = DyadicView::new(raw.clone()).unwrap();
        let doubled = DyadicView::new(raw.iter().map(|v| 2.0 * v).collect()).unwrap();
        let shifted = DyadicView::new(raw.iter().map(|v| v + 17.0).collect()).unwrap();
        let a = averaging_def2(&x, 2.0).unwrap().values;
        let e = energy_def2(&x).unwrap().values;
        for (a2, a1) in averaging_def2(&doubled, 2.0).unwrap().values.iter().zip(&a) {
            assert!((a2 / a1 - 2.0).abs() < 1e-12);
        }
        for (e2, e1) in energy_def2(&doubled).unwrap().values.iter().zip(&e) {
            assert!((e2 / e1 - 4.0).abs() < 1e-12);
        }
        for (s, a1) in averaging_def2(&shifted, 2.0).unwrap().values.iter().zip(&a) {
            assert!(((s - a1) / a1).abs() < 1e-9);
        }
    }
}
