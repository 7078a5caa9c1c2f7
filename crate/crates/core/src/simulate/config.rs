//! Simulation configuration, flat `key=value` files and named presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dist::{HeavyTailSpec, LightTail};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Continuous ON/OFF sources ("0-1").
    ModelA,
    /// Packetized sessions with RTT gaps ("ARR").
    ModelB,
    /// Packetized sessions with Slow Start emissions.
    ModelC,
    /// Multi-level sessions.
    ModelD,
    /// Levels over a Slow Start background.
    Combined,
    /// Levels with Slow Start sessions that continue over RTT-level gaps.
    CombinedRttLevels,
    /// ON/OFF sources with random heights.
    Rh,
    /// ON/OFF aggregate plus a Poisson spike train.
    RhHt,
    /// Packetized sessions with random heights.
    Arrrh,
    ExpIid,
    HtIid,
}

impl Model {
    pub const ALL: [Model; 11] = [
        Model::ModelA,
        Model::ModelB,
        Model::ModelC,
        Model::ModelD,
        Model::Combined,
        Model::CombinedRttLevels,
        Model::Rh,
        Model::RhHt,
        Model::Arrrh,
        Model::ExpIid,
        Model::HtIid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::ModelA => "model_a",
            Model::ModelB => "model_b",
            Model::ModelC => "model_c",
            Model::ModelD => "model_d",
            Model::Combined => "combined",
            Model::CombinedRttLevels => "combined_rtt_levels",
            Model::Rh => "rh",
            Model::RhHt => "rh_ht",
            Model::Arrrh => "arrrh",
            Model::ExpIid => "exp_iid",
            Model::HtIid => "ht_iid",
        }
    }

    /// Models that need at least one level.
    pub fn uses_levels(self) -> bool {
        matches!(self, Model::ModelD | Model::Combined | Model::CombinedRttLevels)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalize_name(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .collect()
}

impl FromStr for Model {
    type Err = Error;

    /// Accepts the canonical names, the short letters and the trace labels
    /// (`0-1`, `ARR`, `RH`, `RH-HT`, `ARRRH`, `EXP-IID`, `HT-IID`, `SS`).
    fn from_str(s: &str) -> Result<Self> {
        let model = match normalize_name(s).as_str() {
            "modela" | "a" | "01" | "onoff" => Model::ModelA,
            "modelb" | "b" | "arr" => Model::ModelB,
            "modelc" | "c" | "ss" | "slowstart" => Model::ModelC,
            "modeld" | "d" | "levels" => Model::ModelD,
            "combined" => Model::Combined,
            "combinedrttlevels" | "rttlevels" => Model::CombinedRttLevels,
            "rh" => Model::Rh,
            "rhht" | "alphabeta" => Model::RhHt,
            "arrrh" => Model::Arrrh,
            "expiid" => Model::ExpIid,
            "htiid" => Model::HtIid,
            _ => return Err(Error::config("model", format!("unknown model `{s}`"))),
        };
        Ok(model)
    }
}

/// One level of a multi-level session: alternating 1- and 0-intervals,
/// lengths in bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub on: LightTail,
    pub off: LightTail,
}

/// Relative half-width of a sharp level.
pub const SHARP_SPREAD: f64 = 0.1;

impl LevelSpec {
    pub fn exponential(on_mean: f64, off_mean: f64) -> Self {
        LevelSpec {
            on: LightTail::Exponential { mean: on_mean },
            off: LightTail::Exponential { mean: off_mean },
        }
    }

    /// Uniform lengths within `mean·(1 ± rel)`.
    pub fn uniform(on_mean: f64, off_mean: f64, rel: f64) -> Self {
        LevelSpec {
            on: LightTail::Uniform { mean: on_mean, rel },
            off: LightTail::Uniform { mean: off_mean, rel },
        }
    }

    pub fn sharp(on_mean: f64, off_mean: f64) -> Self {
        Self::uniform(on_mean, off_mean, SHARP_SPREAD)
    }

    pub fn on_mean(&self) -> f64 {
        self.on.nominal_mean()
    }

    pub fn off_mean(&self) -> f64 {
        self.off.nominal_mean()
    }

    pub fn is_sharp(&self) -> bool {
        matches!(
            (self.on, self.off),
            (LightTail::Uniform { rel: a, .. }, LightTail::Uniform { rel: b, .. })
                if a <= SHARP_SPREAD && b <= SHARP_SPREAD
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.on.validate("levels")?;
        self.off.validate("levels")?;
        if self.on_mean() < 1.0 || self.off_mean() < 1.0 {
            return Err(Error::config(
                "levels",
                format!(
                    "level interval means must be at least 1 bin, got {} and {}",
                    self.on_mean(),
                    self.off_mean()
                ),
            ));
        }
        Ok(())
    }
}

/// Parses a level list such as `7/12/17`, `12S`, `7S/12/17` or
/// `6:2/11:7/16:12`. A bare exponent `e` gives exponential 1- and
/// 0-intervals of mean `2^e`; `a:b` gives means `2^a` and `2^b`; a trailing
/// `S` makes the level sharp. Levels are returned coarse to fine.
pub fn parse_levels(text: &str) -> Result<Vec<LevelSpec>> {
    let mut levels = Vec::new();
    for item in text.split(['/', ',']).map(str::trim).filter(|s| !s.is_empty()) {
        let (body, sharp) = match item.strip_suffix(['S', 's']) {
            Some(b) => (b, true),
            None => (item, false),
        };
        let exps: Vec<&str> = body.split(':').collect();
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("levels", format!("bad level exponent in `{item}`")))
        };
        let (on, off) = match exps.as_slice() {
            [e] => (parse(e)?, parse(e)?),
            [a, b] => (parse(a)?, parse(b)?),
            _ => return Err(Error::config("levels", format!("bad level `{item}`"))),
        };
        let (on, off) = (on.exp2(), off.exp2());
        levels.push(if sharp {
            LevelSpec::sharp(on, off)
        } else {
            LevelSpec::exponential(on, off)
        });
    }
    if levels.is_empty() {
        return Err(Error::config("levels", "no levels given"));
    }
    levels.sort_by(|a, b| b.on_mean().total_cmp(&a.on_mean()));
    Ok(levels)
}

/// Full simulation configuration. Times are in bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: Model,
    pub users: usize,
    /// The trace has `2^bins_log2` bins.
    pub bins_log2: u32,
    /// Nominal bin width in seconds, carried for display.
    pub bin_width: f64,
    pub seed: u64,
    /// ON lengths (model A) or session loads (models B, C, budgets).
    pub load: HeavyTailSpec,
    /// Light-tailed ON lengths replacing `load` in the ON/OFF models.
    pub on: Option<LightTail>,
    pub off: LightTail,
    pub rtt: LightTail,
    pub slow_start_max: u64,
    pub packet_size: f64,
    /// Coarse to fine.
    pub levels: Vec<LevelSpec>,
    /// Multiply the level vectors by an RTT spike vector.
    pub level_rtt: bool,
    pub rtt_level_count: usize,
    /// Random heights of the RH, ARRRH and spike-train models.
    pub height: LightTail,
    /// Mean spacing of the spike train of RH_HT.
    pub alpha_interarrival: f64,
    /// Draw spike heights from the load law instead of `height`.
    pub alpha_heavy: bool,
    /// Mean of the EXP IID bins.
    pub iid_mean: f64,
    /// Discarded prefix before the trace starts; `None` means ten mean cycles.
    pub burn_in: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            model: Model::ModelA,
            users: 100,
            bins_log2: 16,
            bin_width: 0.001,
            seed: 0,
            load: HeavyTailSpec::default(),
            on: None,
            off: LightTail::Exponential { mean: 100.0 },
            rtt: LightTail::Exponential { mean: 4.0 },
            slow_start_max: 32,
            packet_size: 1.0,
            levels: Vec::new(),
            level_rtt: true,
            rtt_level_count: 0,
            height: LightTail::Exponential { mean: 1.0 },
            alpha_interarrival: 100.0,
            alpha_heavy: false,
            iid_mean: 1.0,
            burn_in: None,
        }
    }
}

/// Keys accepted by [`SimConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "preset",
    "users",
    "bins_log2",
    "bin_width",
    "seed",
    "load_exponent",
    "load_scale",
    "load_integer",
    "on",
    "off",
    "rtt",
    "slow_start_max",
    "packet_size",
    "levels",
    "level_spread",
    "level_rtt",
    "rtt_level_count",
    "height",
    "alpha_interarrival",
    "alpha_heavy",
    "iid_mean",
    "burn_in",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{value}`"))),
    }
}

impl SimConfig {
    pub fn bins(&self) -> usize {
        1usize << self.bins_log2
    }

    /// Applies a named preset: a model label (`0-1`, `ARR`, `SS`, ...) or a
    /// level list (`7/12/17`, `12S`), which also selects model D unless a
    /// level-based model is already chosen.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        if let Ok(model) = name.parse::<Model>() {
            self.model = model;
            return Ok(());
        }
        self.levels = parse_levels(name)
            .map_err(|_| Error::config("preset", format!("unknown preset `{name}`")))?;
        if !self.model.uses_levels() {
            self.model = Model::ModelD;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "model" => self.model = v.parse()?,
            "preset" => self.apply_preset(v)?,
            "users" => self.users = parse_num(key, v)?,
            "bins_log2" => self.bins_log2 = parse_num(key, v)?,
            "bin_width" => self.bin_width = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "load_exponent" => self.load.exponent = parse_num(key, v)?,
            "load_scale" => self.load.scale = parse_num(key, v)?,
            "load_integer" => self.load.integer_valued = parse_bool(key, v)?,
            "on" => {
                self.on = match v {
                    "" | "heavy" | "load" => None,
                    _ => Some(LightTail::parse(key, v)?),
                }
            }
            "off" => self.off = LightTail::parse(key, v)?,
            "rtt" => self.rtt = LightTail::parse(key, v)?,
            "slow_start_max" => self.slow_start_max = parse_num(key, v)?,
            "packet_size" => self.packet_size = parse_num(key, v)?,
            "levels" => self.levels = parse_levels(v)?,
            "level_spread" => {
                let rel: f64 = parse_num(key, v)?;
                if !(0.0..=1.0).contains(&rel) {
                    return Err(Error::config(key, "must lie in [0, 1]"));
                }
                for l in &mut self.levels {
                    *l = LevelSpec::uniform(l.on_mean(), l.off_mean(), rel);
                }
            }
            "level_rtt" => self.level_rtt = parse_bool(key, v)?,
            "rtt_level_count" => self.rtt_level_count = parse_num(key, v)?,
            "height" => self.height = LightTail::parse(key, v)?,
            "alpha_interarrival" => self.alpha_interarrival = parse_num(key, v)?,
            "alpha_heavy" => self.alpha_heavy = parse_bool(key, v)?,
            "iid_mean" => self.iid_mean = parse_num(key, v)?,
            "burn_in" => {
                self.burn_in = match v {
                    "" | "auto" | "default" => None,
                    _ => Some(parse_num(key, v)?),
                }
            }
            other => return Err(Error::config(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Overlays a flat `key=value` document; blank lines and `#` comments
    /// are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected key=value, got `{line}`"),
                });
            };
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flat `key=value` rendering that [`SimConfig::from_text`] reads back.
    pub fn to_text(&self) -> String {
        let levels: Vec<String> = self
            .levels
            .iter()
            .map(|l| {
                let s = if l.is_sharp() { "S" } else { "" };
                format!("{}:{}{s}", l.on_mean().log2(), l.off_mean().log2())
            })
            .collect();
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
        put("model", self.model.to_string());
        put("users", self.users.to_string());
        put("bins_log2", self.bins_log2.to_string());
        put("bin_width", self.bin_width.to_string());
        put("seed", self.seed.to_string());
        put("load_exponent", self.load.exponent.to_string());
        put("load_scale", self.load.scale.to_string());
        put("load_integer", self.load.integer_valued.to_string());
        put(
            "on",
            self.on.map_or_else(|| "heavy".to_string(), |l| l.to_config_string()),
        );
        put("off", self.off.to_config_string());
        put("rtt", self.rtt.to_config_string());
        put("slow_start_max", self.slow_start_max.to_string());
        put("packet_size", self.packet_size.to_string());
        if !levels.is_empty() {
            put("levels", levels.join("/"));
            if let Some(rel) = self.common_uniform_spread() {
                put("level_spread", rel.to_string());
            }
        }
        put("level_rtt", self.level_rtt.to_string());
        put("rtt_level_count", self.rtt_level_count.to_string());
        put("height", self.height.to_config_string());
        put("alpha_interarrival", self.alpha_interarrival.to_string());
        put("alpha_heavy", self.alpha_heavy.to_string());
        put("iid_mean", self.iid_mean.to_string());
        put(
            "burn_in",
            self.burn_in.map_or_else(|| "auto".to_string(), |b| b.to_string()),
        );
        out
    }

    /// Relative half-width shared by all levels when every level is uniform
    /// with the same non-sharp spread.
    fn common_uniform_spread(&self) -> Option<f64> {
        let mut rel = None;
        for l in &self.levels {
            match (l.on, l.off) {
                (LightTail::Uniform { rel: a, .. }, LightTail::Uniform { rel: b, .. }) if a == b => {
                    if rel.is_some_and(|r| r != a) {
                        return None;
                    }
                    rel = Some(a);
                }
                _ => return None,
            }
        }
        rel.filter(|r| *r != SHARP_SPREAD)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::config("users", "need at least one user"));
        }
        if !(1..=30).contains(&self.bins_log2) {
            return Err(Error::config(
                "bins_log2",
                format!("must lie in 1..=30, got {}", self.bins_log2),
            ));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::config("bin_width", "must be positive"));
        }
        self.load.validate()?;
        if let Some(on) = &self.on {
            on.validate("on")?;
        }
        self.off.validate("off")?;
        self.rtt.validate("rtt")?;
        self.height.validate("height")?;
        if self.slow_start_max == 0 {
            return Err(Error::config("slow_start_max", "must be at least 1"));
        }
        if !(self.packet_size > 0.0 && self.packet_size.is_finite()) {
            return Err(Error::config("packet_size", "must be positive"));
        }
        if !(self.alpha_interarrival > 0.0) {
            return Err(Error::config("alpha_interarrival", "must be positive"));
        }
        if !(self.iid_mean > 0.0) {
            return Err(Error::config("iid_mean", "must be positive"));
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::config("burn_in", "must be nonnegative"));
            }
        }
        for l in &self.levels {
            l.validate()?;
        }
        if self
            .levels
            .windows(2)
            .any(|w| w[0].on_mean() <= w[1].on_mean())
        {
            return Err(Error::config(
                "levels",
                "levels must be ordered coarse to fine with strictly decreasing 1-interval means",
            ));
        }
        if self.levels.len() > 200 {
            return Err(Error::config("levels", "at most 200 levels are supported"));
        }
        if self.model.uses_levels() && self.levels.is_empty() {
            return Err(Error::config("levels", format!("{} needs at least one level", self.model)));
        }
        if self.rtt_level_count > self.levels.len() {
            return Err(Error::config(
                "rtt_level_count",
                format!(
                    "{} RTT levels requested but only {} levels defined",
                    self.rtt_level_count,
                    self.levels.len()
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_presets() {
        let l = parse_levels("7/12/17").unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l[0].on_mean(), 131072.0);
        assert_eq!(l[2].on_mean(), 128.0);
        assert_eq!(l[1].off_mean(), 4096.0);
        assert!(l.iter().all(|x| !x.is_sharp()));
        let s = parse_levels("12S").unwrap();
        assert!(s[0].is_sharp());
        let mixed = parse_levels("6:2/11:7/16:12").unwrap();
        assert_eq!(mixed[0].on_mean(), 65536.0);
        assert_eq!(mixed[0].off_mean(), 4096.0);
        assert!(parse_levels("").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn model_labels() {
        assert_eq!("0-1".parse::<Model>().unwrap(), Model::ModelA);
        assert_eq!("ARR".parse::<Model>().unwrap(), Model::ModelB);
        assert_eq!("RH-HT".parse::<Model>().unwrap(), Model::RhHt);
        assert_eq!("EXP IID".parse::<Model>().unwrap(), Model::ExpIid);
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("zz".parse::<Model>().is_err());
    }

    #[test]
    fn preset_defaults() {
        let cfg = SimConfig::from_text("preset=0-1\nusers=10\nseed=3\n").unwrap();
        assert_eq!(cfg.model, Model::ModelA);
        assert_eq!(cfg.users, 10);
        let cfg = SimConfig::from_text("preset=7/12/17\n").unwrap();
        assert_eq!(cfg.model, Model::ModelD);
        assert_eq!(cfg.levels.len(), 3);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SimConfig::from_text(
            "model=combined_rtt_levels\nlevels=6:2/11:7S\nrtt_level_count=1\noff=gauss:10:2\nburn_in=50\n",
        )
        .unwrap();
        cfg.seed = 99;
        let back = SimConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        let spread = SimConfig::from_text("levels=6:2/11:7/16:12\nlevel_spread=0.3\n").unwrap();
        assert_eq!(spread.levels[2], LevelSpec::uniform(64.0, 4.0, 0.3));
        assert_eq!(SimConfig::from_text(&spread.to_text()).unwrap(), spread);
    }

    #[test]
    fn errors_name_the_key() {
        let e = SimConfig::from_text("users=0").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "users"));
        let e = SimConfig::from_text("nonsense=1").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "nonsense"));
        let e = SimConfig::from_text("levels=7\nrtt_level_count=2").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "rtt_level_count"));
        let e = SimConfig::from_text("model=model_d").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "levels"));
        let e = SimConfig::from_text("load_exponent=2.5").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "load_exponent"));
        assert!(matches!(SimConfig::from_text("users"), Err(Error::Parse { line: 1, .. })));
    }
}
