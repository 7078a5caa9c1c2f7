//! Packetized sessions: after each OFF interval a session of load `L`
//! emits impulses, each followed by an RTT gap. Model B emits `L` unit
//! impulses, model C emits the Slow Start schedule of `L`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::rng::{user_stream, Purpose};
use super::{burn_in, sum_users, Accum};
use crate::error::Result;
use crate::trace::BinnedTrace;

/// Slow Start emissions of one session: `min(2^(k−1), max)`, the last one
/// cut to the remaining load.
#[derive(Debug, Clone)]
pub struct SlowStart {
    remaining: u64,
    next: u64,
    max: u64,
}

impl SlowStart {
    pub fn new(load: u64, max: u64) -> Self {
        SlowStart {
            remaining: load,
            next: 1,
            max: max.max(1),
        }
    }
}

impl Iterator for SlowStart {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        let w = self.next.min(self.remaining);
        self.remaining -= w;
        self.next = self.next.saturating_mul(2).min(self.max);
        Some(w)
    }
}

pub fn slow_start_schedule(load: u64, max: u64) -> Vec<u64> {
    SlowStart::new(load, max).collect()
}

/// Closed-form emission count `⌊log2(l ∧ M) + (l − 2M + 1)₊/M⌋ + 1`. For
/// `M` a power of two it equals the schedule length when `l ≤ 2M − 1` or
/// when `M` divides `l − 2M + 1`, and falls one short otherwise.
pub fn phi(load: u64, max: u64) -> u64 {
    let l = load as f64;
    let m = max as f64;
    let excess = (l - 2.0 * m + 1.0).max(0.0);
    ((l.min(m)).log2() + excess / m + 1e-9).floor() as u64 + 1
}

/// Number of emissions of the schedule without materializing it.
fn emission_count(load: u64, max: u64, slow_start: bool) -> u64 {
    if !slow_start {
        return load;
    }
    let mut count = 0u64;
    let mut w = 1u64;
    let mut left = load;
    while left > 0 && w < max {
        left -= w.min(left);
        count += 1;
        w *= 2;
    }
    count + left.div_ceil(max.max(1))
}

/// Above this many emissions the first session's duration enters the
/// uniform shift through its mean.
const EXACT_SHIFT_LIMIT: u64 = 1 << 20;

struct Streams {
    offs: ChaCha8Rng,
    loads: ChaCha8Rng,
    gaps: ChaCha8Rng,
    heights: ChaCha8Rng,
    phase: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64, user: u64) -> Self {
        Streams {
            offs: user_stream(seed, user, Purpose::Intervals),
            loads: user_stream(seed, user, Purpose::Loads),
            gaps: user_stream(seed, user, Purpose::Gaps),
            heights: user_stream(seed, user, Purpose::Heights),
            phase: user_stream(seed, user, Purpose::Phase),
        }
    }
}

fn impulse_user(config: &SimConfig, user: u64, slow_start: bool, heights: bool, acc: &mut Accum) {
    let mut s = Streams::new(config.seed, user);
    let end = acc.len() as f64;
    let max = config.slow_start_max;
    let mean_gap = config.rtt.nominal_mean();

    let mut off = config.off.sample(&mut s.offs);
    let mut load = config.load.sample_count(&mut s.loads);
    // duration of the first cycle, replaying its gaps on a cloned stream
    let k = emission_count(load, max, slow_start);
    let active = if k <= EXACT_SHIFT_LIMIT {
        let mut replay = s.gaps.clone();
        (0..k).map(|_| config.rtt.sample(&mut replay)).sum::<f64>()
    } else {
        k as f64 * mean_gap
    };
    let shift = s.phase.random::<f64>() * (off + active);
    let mean_emissions = if slow_start {
        // a coarse figure is enough for the burn-in length
        (config.load.mean() / max as f64).max(config.load.mean().log2().max(1.0))
    } else {
        config.load.mean()
    };
    let mut t = -burn_in(config, config.off.nominal_mean() + mean_emissions * mean_gap) - shift;

    'sessions: loop {
        t += off;
        if t >= end {
            break;
        }
        let h = if heights {
            config.height.sample(&mut s.heights)
        } else {
            1.0
        } * config.packet_size;
        let mut emit = |w: u64, t: &mut f64| {
            acc.point(*t, w as f64 * h);
            *t += config.rtt.sample(&mut s.gaps);
        };
        if slow_start {
            for w in SlowStart::new(load, max) {
                emit(w, &mut t);
                if t >= end {
                    break 'sessions;
                }
            }
        } else {
            for _ in 0..load {
                emit(1, &mut t);
                if t >= end {
                    break 'sessions;
                }
            }
        }
        off = config.off.sample(&mut s.offs);
        load = config.load.sample_count(&mut s.loads);
    }
}

/// Unit impulses per packet.
pub fn simulate_model_b(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    let values = sum_users(config.users, config.bins(), |u, acc| {
        impulse_user(config, u, false, false, acc)
    });
    BinnedTrace::new(config.bin_width, values)
}

/// Slow Start emissions.
pub fn simulate_model_c(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    let values = sum_users(config.users, config.bins(), |u, acc| {
        impulse_user(config, u, true, false, acc)
    });
    BinnedTrace::new(config.bin_width, values)
}

/// Unit impulses with an independent height per session.
pub fn simulate_arrrh(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    let values = sum_users(config.users, config.bins(), |u, acc| {
        impulse_user(config, u, false, true, acc)
    });
    BinnedTrace::new(config.bin_width, values)
}

/// Bookkeeping of one Slow Start session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSummary {
    pub load: u64,
    pub emissions: u64,
    pub emitted: u64,
}

/// The first `count` sessions of `user` under `config`, drawn from the same
/// load stream as the model-C generator.
pub fn slow_start_sessions(config: &SimConfig, user: u64, count: usize) -> Vec<SessionSummary> {
    let mut loads = user_stream(config.seed, user, Purpose::Loads);
    (0..count)
        .map(|_| {
            let load = config.load.sample_count(&mut loads);
            let (mut emissions, mut emitted) = (0, 0);
            for w in SlowStart::new(load, config.slow_start_max) {
                emissions += 1;
                emitted += w;
            }
            SessionSummary {
                load,
                emissions,
                emitted,
            }
        })
        .collect()
}
