//! Reference traces: random heights, the α/β superposition and i.i.d. bins.

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::config::{Model, SimConfig};
use super::impulses::simulate_arrrh;
use super::onoff::{onoff_user, simulate_rh};
use super::rng::{substream, Purpose, GLOBAL_INDEX};
use super::sum_users;
use crate::error::{Error, Result};
use crate::trace::BinnedTrace;

const IID_BLOCK: usize = 4096;

fn iid(config: &SimConfig, draw: impl Fn(&mut super::rng::SimRng) -> f64 + Sync) -> Result<BinnedTrace> {
    config.validate()?;
    let mut values = vec![0.0; config.bins()];
    values
        .par_chunks_mut(IID_BLOCK)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = substream(config.seed, b as u64, Purpose::Iid as u8);
            for v in chunk {
                *v = draw(&mut rng);
            }
        });
    BinnedTrace::new(config.bin_width, values)
}

/// I.i.d. exponential bins of mean `iid_mean`.
pub fn simulate_exp_iid(config: &SimConfig) -> Result<BinnedTrace> {
    let exp = Exp::new(1.0 / config.iid_mean).map_err(|e| Error::config("iid_mean", e.to_string()))?;
    iid(config, |rng| exp.sample(rng))
}

/// I.i.d. Pareto bins following `load`.
pub fn simulate_ht_iid(config: &SimConfig) -> Result<BinnedTrace> {
    iid(config, |rng| config.load.sample(rng))
}

/// ON/OFF aggregate plus a Poisson train of isolated spikes. Spike heights
/// follow `height`, or the load law when `alpha_heavy` is set.
pub fn simulate_rh_ht(config: &SimConfig) -> Result<BinnedTrace> {
    config.validate()?;
    let mut values = sum_users(config.users, config.bins(), |u, acc| {
        onoff_user(config, u, false, acc)
    });
    let mut arrivals = substream(config.seed, GLOBAL_INDEX, Purpose::Spikes as u8);
    let mut heights = substream(config.seed, GLOBAL_INDEX, Purpose::Heights as u8);
    let gap = Exp::new(1.0 / config.alpha_interarrival)
        .map_err(|e| Error::config("alpha_interarrival", e.to_string()))?;
    let end = values.len() as f64;
    let mut t = gap.sample(&mut arrivals);
    while t < end {
        let h = if config.alpha_heavy {
            config.load.sample(&mut heights)
        } else {
            config.height.sample(&mut heights)
        };
        values[t as usize] += h * config.packet_size;
        t += gap.sample(&mut arrivals);
    }
    BinnedTrace::new(config.bin_width, values)
}

pub fn simulate_baseline(config: &SimConfig) -> Result<BinnedTrace> {
    match config.model {
        Model::Rh => simulate_rh(config),
        Model::RhHt => simulate_rh_ht(config),
        Model::Arrrh => simulate_arrrh(config),
        Model::ExpIid => simulate_exp_iid(config),
        Model::HtIid => simulate_ht_iid(config),
        other => Err(Error::invalid(format!("{other} is not a baseline model"))),
    }
}
