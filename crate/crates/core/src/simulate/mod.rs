//! Synthetic traffic: ON/OFF sources, packetized and Slow Start sessions,
//! multi-level sessions, their combination, and the baseline presets.
//!
//! Simulators work in bins. Every user draws from its own substreams, users
//! are generated in fixed chunks and summed in index order, so the output
//! does not depend on the thread count.

mod baseline;
pub mod config;
pub mod dist;
mod impulses;
mod levels;
mod onoff;
pub mod rng;

use rayon::prelude::*;

pub use baseline::{simulate_baseline, simulate_exp_iid, simulate_ht_iid, simulate_rh_ht};
pub use config::{parse_levels, LevelSpec, Model, SimConfig};
pub use dist::{HeavyTailSpec, LightTail};
pub use impulses::{
    phi, slow_start_schedule, slow_start_sessions, simulate_arrrh, simulate_model_b,
    simulate_model_c, SessionSummary, SlowStart,
};
pub use levels::{
    combined_sessions, simulate_combined, simulate_model_d, simulate_session_levels,
    BudgetSession,
};
pub use onoff::{simulate_model_a, simulate_rh};

use crate::error::Result;
use crate::trace::BinnedTrace;

/// Runs the model selected by `config.model`.
pub fn simulate(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    match config.model {
        Model::ModelA => simulate_model_a(config),
        Model::ModelB => simulate_model_b(config),
        Model::ModelC => simulate_model_c(config),
        Model::ModelD => simulate_model_d(config),
        Model::Combined | Model::CombinedRttLevels => simulate_combined(config),
        Model::Rh | Model::RhHt | Model::Arrrh | Model::ExpIid | Model::HtIid => {
            simulate_baseline(config)
        }
    }
}

const USER_CHUNK: u64 = 64;

/// Per-chunk accumulator: point masses go straight into `direct`, long
/// intervals through a difference array.
pub(crate) struct Accum {
    direct: Vec<f64>,
    diff: Vec<f64>,
}

impl Accum {
    fn new(bins: usize) -> Self {
        Accum {
            direct: vec![0.0; bins],
            diff: vec![0.0; bins + 1],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.direct.len()
    }

    /// Adds `w` to the bin containing time `t`, if inside the trace.
    pub(crate) fn point(&mut self, t: f64, w: f64) {
        if t >= 0.0 && t < self.direct.len() as f64 {
            self.direct[t as usize] += w;
        }
    }

    pub(crate) fn bin(&mut self, i: usize, w: f64) {
        self.direct[i] += w;
    }

    /// Adds height `h` over `[a, b)`, with fractional end bins.
    pub(crate) fn interval(&mut self, a: f64, b: f64, h: f64) {
        let n = self.direct.len();
        let (a, b) = (a.max(0.0), b.min(n as f64));
        if b <= a {
            return;
        }
        let ia = a as usize;
        let ib = b as usize;
        if ia == ib {
            self.direct[ia] += (b - a) * h;
            return;
        }
        self.direct[ia] += (ia as f64 + 1.0 - a) * h;
        if ia + 1 < ib {
            self.diff[ia + 1] += h;
            self.diff[ib] -= h;
        }
        if ib < n {
            self.direct[ib] += (b - ib as f64) * h;
        }
    }

    /// Adds `h` to every bin of `[a, b)` (integer bounds).
    pub(crate) fn run(&mut self, a: usize, b: usize, h: f64) {
        if a < b {
            self.diff[a] += h;
            self.diff[b] -= h;
        }
    }

    fn finish(self) -> Vec<f64> {
        let mut level = 0.0;
        self.direct
            .into_iter()
            .zip(self.diff)
            .map(|(d, step)| {
                level += step;
                (d + level).max(0.0)
            })
            .collect()
    }
}

/// Sums `generate(user, acc)` over all users, chunk by chunk in parallel and
/// deterministically.
pub(crate) fn sum_users<F>(users: usize, bins: usize, generate: F) -> Vec<f64>
where
    F: Fn(u64, &mut Accum) + Sync,
{
    let users = users as u64;
    let chunks = users.div_ceil(USER_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum::new(bins);
            for u in c * USER_CHUNK..((c + 1) * USER_CHUNK).min(users) {
                generate(u, &mut acc);
            }
            acc.finish()
        })
        .collect();
    let mut total = vec![0.0; bins];
    for part in parts {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    total
}

/// Discarded prefix: explicit, or ten mean cycles.
pub(crate) fn burn_in(config: &SimConfig, mean_cycle: f64) -> f64 {
    config.burn_in.unwrap_or(10.0 * mean_cycle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_fractions() {
        let mut acc = Accum::new(6);
        acc.interval(0.5, 3.25, 2.0);
        acc.interval(4.2, 4.7, 1.0);
        acc.interval(5.5, 9.0, 1.0);
        acc.interval(-3.0, -1.0, 1.0);
        acc.point(2.0, 10.0);
        acc.point(6.0, 10.0);
        acc.run(1, 3, 0.5);
        let v = acc.finish();
        let want = [1.0, 2.5, 12.5, 0.5, 0.5, 0.5];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn chunked_sum_is_ordered() {
        let a = sum_users(200, 16, |u, acc| acc.bin((u % 16) as usize, u as f64 * 0.1));
        let b = sum_users(200, 16, |u, acc| acc.bin((u % 16) as usize, u as f64 * 0.1));
        assert_eq!(a, b);
        let total: f64 = a.iter().sum();
        assert!((total - 0.1 * (199.0 * 200.0 / 2.0)).abs() < 1e-9);
    }
}
