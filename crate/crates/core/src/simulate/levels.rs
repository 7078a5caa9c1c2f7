//! Multi-level sessions: an RTT spike vector times one alternating 0/1
//! vector per level, optionally over a Slow Start background.

use rand::Rng;

use super::config::{LevelSpec, Model, SimConfig};
use super::dist::LightTail;
use super::rng::{level_stream, user_stream, Purpose};
use super::sum_users;
use crate::error::{Error, Result};
use crate::trace::{BinnedTrace, SessionBitmap};

/// Marks a bin where every level vector is 1.
const OPEN: u8 = u8::MAX;

/// Interval length in bins.
fn bins_of(x: f64) -> usize {
    (x.round() as usize).max(1)
}

/// One user's vectors. `cause[i]` is the index of the coarsest level whose
/// vector is 0 at bin `i` (levels are indexed coarse to fine), or `OPEN`.
/// `spikes` lists the 1-positions of the RTT vector; `None` means all ones.
struct Layers {
    cause: Vec<u8>,
    spikes: Option<Vec<u32>>,
}

impl Layers {
    fn build(levels: &[LevelSpec], rtt: Option<&LightTail>, bins: usize, seed: u64, user: u64) -> Self {
        let mut cause = vec![OPEN; bins];
        // fine to coarse, so that coarser levels overwrite
        for (k, level) in levels.iter().enumerate().rev() {
            let mut rng = level_stream(seed, user, k);
            let mut on = bins_of(level.on.sample(&mut rng));
            let mut off = bins_of(level.off.sample(&mut rng));
            let mut pos = -((rng.random::<f64>() * (on + off) as f64) as i64);
            while pos < bins as i64 {
                let a = (pos + on as i64).max(0) as usize;
                let b = (pos + (on + off) as i64).clamp(0, bins as i64) as usize;
                for c in &mut cause[a.min(b)..b] {
                    *c = k as u8;
                }
                pos += (on + off) as i64;
                on = bins_of(level.on.sample(&mut rng));
                off = bins_of(level.off.sample(&mut rng));
            }
        }
        let spikes = rtt.map(|law| {
            let mut rng = user_stream(seed, user, Purpose::Spikes);
            let mut out = Vec::new();
            let first = bins_of(law.sample(&mut rng));
            let mut pos = (rng.random::<f64>() * first as f64) as usize;
            while pos < bins {
                out.push(pos as u32);
                pos += bins_of(law.sample(&mut rng));
            }
            out
        });
        Layers { cause, spikes }
    }

    /// 1-positions of the RTT vector in increasing order.
    fn spike_positions(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match &self.spikes {
            Some(s) => Box::new(s.iter().map(|p| *p as usize)),
            None => Box::new(0..self.cause.len()),
        }
    }

    fn is_one(&self, pos: usize) -> bool {
        self.cause[pos] == OPEN
    }

    fn bitmap(&self) -> Vec<bool> {
        let mut bits = vec![false; self.cause.len()];
        for p in self.spike_positions() {
            bits[p] = self.is_one(p);
        }
        bits
    }
}

fn rtt_of(config: &SimConfig) -> Option<&LightTail> {
    config.level_rtt.then_some(&config.rtt)
}

/// One multi-level session on `2^bins_log2` bins. `rtt = None` drops the
/// spike vector.
pub fn simulate_session_levels(
    levels: &[LevelSpec],
    rtt: Option<&LightTail>,
    bins_log2: u32,
    seed: u64,
) -> Result<SessionBitmap> {
    if levels.is_empty() {
        return Err(Error::config("levels", "need at least one level"));
    }
    for l in levels {
        l.validate()?;
    }
    if let Some(r) = rtt {
        r.validate("rtt")?;
    }
    let layers = Layers::build(levels, rtt, 1usize << bins_log2, seed, 0);
    SessionBitmap::new(1.0, layers.bitmap())
}

/// Sum of independent multi-level sessions with unit weights.
pub fn simulate_model_d(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    if config.levels.is_empty() {
        return Err(Error::config("levels", "model D needs at least one level"));
    }
    let values = sum_users(config.users, config.bins(), |u, acc| {
        let layers = Layers::build(&config.levels, rtt_of(config), acc.len(), config.seed, u);
        let mut a = None;
        for p in layers.spike_positions() {
            if layers.is_one(p) {
                if layers.spikes.is_none() {
                    a.get_or_insert(p);
                } else {
                    acc.bin(p, config.packet_size);
                }
            } else if let Some(start) = a.take() {
                acc.run(start, p, config.packet_size);
            }
        }
        if let Some(start) = a {
            acc.run(start, acc.len(), config.packet_size);
        }
    });
    BinnedTrace::new(config.bin_width, values)
}

/// Budget walk of one user: one record per Slow Start session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetSession {
    pub budget: u64,
    pub emitted: u64,
    /// Largest single emission of the session.
    pub peak: u64,
}

/// Slow Start weights of one user: `(position, weight)` for every bin that
/// carries traffic in the final vector, plus the session bookkeeping.
fn combined_user(config: &SimConfig, layers: &Layers, user: u64) -> (Vec<(usize, u64)>, Vec<BudgetSession>) {
    let mut budgets = user_stream(config.seed, user, Purpose::Budgets);
    let max = config.slow_start_max;
    let n_levels = config.levels.len();
    let mut out = Vec::new();
    let mut sessions = Vec::new();
    let mut current = BudgetSession {
        budget: config.load.sample_count(&mut budgets),
        emitted: 0,
        peak: 0,
    };
    let mut left = current.budget as i128;
    let mut j = 1u64;
    let mut restart = |current: &mut BudgetSession, left: &mut i128, j: &mut u64, sessions: &mut Vec<BudgetSession>| {
        sessions.push(*current);
        *current = BudgetSession {
            budget: config.load.sample_count(&mut budgets),
            emitted: 0,
            peak: 0,
        };
        *left = current.budget as i128;
        *j = 1;
    };

    match config.model {
        Model::CombinedRttLevels => {
            // a gap resets the session when a level coarser than the RTT
            // levels is 0 somewhere inside it
            let reset_below = (n_levels - config.rtt_level_count) as u8;
            let mut prev: Option<usize> = None;
            for p in layers.spike_positions() {
                if !layers.is_one(p) {
                    continue;
                }
                if let Some(q) = prev {
                    let coarse_gap = layers.cause[q + 1..p]
                        .iter()
                        .any(|c| *c != OPEN && *c < reset_below);
                    if coarse_gap && current.emitted > 0 {
                        restart(&mut current, &mut left, &mut j, &mut sessions);
                    }
                }
                prev = Some(p);
                out.push((p, j));
                current.emitted += j;
                current.peak = current.peak.max(j);
                left -= j as i128;
                j = (2 * j).min(max);
                if left <= 0 {
                    restart(&mut current, &mut left, &mut j, &mut sessions);
                }
            }
        }
        _ => {
            // weights go on the spike vector before the levels cut it
            for p in layers.spike_positions() {
                if layers.is_one(p) {
                    out.push((p, j));
                }
                current.emitted += j;
                current.peak = current.peak.max(j);
                left -= j as i128;
                j = (2 * j).min(max);
                if left <= 0 {
                    restart(&mut current, &mut left, &mut j, &mut sessions);
                }
            }
        }
    }
    if current.emitted > 0 {
        sessions.push(current);
    }
    (out, sessions)
}

/// Levels combined with Slow Start weights: `Combined` assigns the weights
/// along the RTT vector before the level vectors are applied;
/// `CombinedRttLevels` walks the final vector and lets gaps of the
/// `rtt_level_count` finest levels continue a session, while gaps of coarser
/// levels start a new one.
pub fn simulate_combined(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    if config.levels.is_empty() {
        return Err(Error::config("levels", "the combined model needs at least one level"));
    }
    let values = sum_users(config.users, config.bins(), |u, acc| {
        let layers = Layers::build(&config.levels, rtt_of(config), acc.len(), config.seed, u);
        for (p, w) in combined_user(config, &layers, u).0 {
            acc.bin(p, w as f64 * config.packet_size);
        }
    });
    BinnedTrace::new(config.bin_width, values)
}

/// Session bookkeeping of the combined generator for `user`.
pub fn combined_sessions(config: &SimConfig, user: u64) -> Result<Vec<BudgetSession>> {
    config.validate()?;
    let layers = Layers::build(&config.levels, rtt_of(config), config.bins(), config.seed, user);
    Ok(combined_user(config, &layers, user).1)
}
