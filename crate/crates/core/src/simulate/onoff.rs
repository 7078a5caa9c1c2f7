//! Continuous ON/OFF sources.

use rand::Rng;

use super::config::SimConfig;
use super::rng::{user_stream, Purpose};
use super::{burn_in, sum_users, Accum};
use crate::error::Result;
use crate::trace::BinnedTrace;

fn on_length<R: Rng>(config: &SimConfig, rng: &mut R) -> f64 {
    match &config.on {
        Some(law) => law.sample(rng),
        None => config.load.sample(rng),
    }
}

fn mean_on(config: &SimConfig) -> f64 {
    match &config.on {
        Some(law) => law.nominal_mean(),
        None => config.load.mean(),
    }
}

/// One path `W(t) = W̃(u + t)`: OFF first, then ON, `u` uniform over the
/// first cycle, preceded by the burn-in. ON intervals carry `packet_size`
/// times an optional random height.
pub(crate) fn onoff_user(config: &SimConfig, user: u64, random_heights: bool, acc: &mut Accum) {
    let mut intervals = user_stream(config.seed, user, Purpose::Intervals);
    let mut heights = user_stream(config.seed, user, Purpose::Heights);
    let mut phase = user_stream(config.seed, user, Purpose::Phase);
    let end = acc.len() as f64;

    let mut off = config.off.sample(&mut intervals);
    let mut on = on_length(config, &mut intervals);
    let shift = phase.random::<f64>() * (off + on);
    let mut t = -burn_in(config, config.off.nominal_mean() + mean_on(config)) - shift;
    loop {
        t += off;
        if t >= end {
            break;
        }
        let h = if random_heights {
            config.height.sample(&mut heights)
        } else {
            1.0
        };
        acc.interval(t, t + on, h * config.packet_size);
        t += on;
        if t >= end {
            break;
        }
        off = config.off.sample(&mut intervals);
        on = on_length(config, &mut intervals);
    }
}

/// Sum of `users` stationary ON/OFF paths; bin values are ON time per bin
/// scaled by `packet_size`.
pub fn simulate_model_a(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    let values = sum_users(config.users, config.bins(), |u, acc| {
        onoff_user(config, u, false, acc)
    });
    BinnedTrace::new(config.bin_width, values)
}

/// ON/OFF paths with an independent height per ON interval.
pub fn simulate_rh(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    let values = sum_users(config.users, config.bins(), |u, acc| onoff_user(config, u, true, acc));
    BinnedTrace::new(config.bin_width, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::config::Model;
    use crate::simulate::dist::LightTail;

    #[test]
    fn square_wave() {
        let cfg = SimConfig {
            model: Model::ModelA,
            users: 1,
            bins_log2: 10,
            on: Some(LightTail::Constant { mean: 8.0 }),
            off: LightTail::Constant { mean: 8.0 },
            burn_in: Some(0.0),
            seed: 4,
            ..SimConfig::default()
        };
        let v = simulate_model_a(&cfg).unwrap().into_values();
        for i in 0..v.len() - 16 {
            assert!((v[i] - v[i + 16]).abs() < 1e-12);
        }
        let ones = v.iter().filter(|x| **x == 1.0).count();
        let zeros = v.iter().filter(|x| **x == 0.0).count();
        assert!(ones >= 7 * 64 - 1 && zeros >= 7 * 64 - 1);
        let mean: f64 = v[..1008].iter().sum::<f64>() / 1008.0;
        assert!((mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bounded_by_user_count() {
        let cfg = SimConfig {
            users: 30,
            bins_log2: 12,
            off: LightTail::Exponential { mean: 5.0 },
            seed: 1,
            ..SimConfig::default()
        };
        let v = simulate_model_a(&cfg).unwrap().into_values();
        assert!(v.iter().all(|x| (0.0..=30.0 + 1e-9).contains(x)));
        assert!(v.iter().any(|x| *x > 0.0));
    }
}
