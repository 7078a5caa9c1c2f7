use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use trafficscope::gaussianity::windowed_kolmogorov_values;
use trafficscope::ida::{aggregate_ida, run_ida, GapNormalization, IdaConfig, IdaResult};
use trafficscope::ingest::{self, ConnectionKey};
use trafficscope::multires::{
    autocorrelation, averaging_def1, averaging_def2, energy_def1, energy_def2, MultiresProfile,
};
use trafficscope::simulate::{simulate as run_simulation, SimConfig};
use trafficscope::tools::{self, BurstinessOptions, BurstinessReport};
use trafficscope::{BinnedTrace, ErrorFamily, SessionBitmap};

use crate::manifest::{digest_inputs, OutputDir};
use crate::{Analysis, AnalyzeArgs, CliError, IdaArgs, InputArgs, InputFormat, SimulateArgs};

fn reader(path: &Path) -> Result<BufReader<File>, CliError> {
    Ok(BufReader::new(File::open(path)?))
}

fn connection_key(input: &InputArgs) -> Result<ConnectionKey, CliError> {
    let text = input
        .connection
        .as_deref()
        .ok_or_else(|| CliError::Usage("the connections format needs --connection".into()))?;
    Ok(ConnectionKey::parse(text)?)
}

fn load_trace(input: &InputArgs, path: &Path) -> Result<BinnedTrace, CliError> {
    let trace = match input.format {
        InputFormat::Prebinned => ingest::parse_prebinned(reader(path)?, input.bin_width)?,
        InputFormat::Packets => ingest::parse_timestamp_size(reader(path)?)?.bin(input.bin_width)?,
        InputFormat::Connections => {
            ingest::parse_connections(reader(path)?, &connection_key(input)?)?.bin(input.bin_width)?
        }
    };
    Ok(trace)
}

fn load_session(input: &InputArgs, path: &Path) -> Result<SessionBitmap, CliError> {
    let session = match input.format {
        InputFormat::Prebinned => {
            // any positive bin counts as activity
            let trace = ingest::parse_prebinned(reader(path)?, input.bin_width)?;
            let bits = trace.values().iter().map(|v| *v > 0.0).collect();
            SessionBitmap::new(input.bin_width, bits)?
        }
        InputFormat::Packets => {
            ingest::parse_timestamp_size(reader(path)?)?.to_bitmap(input.bin_width)?
        }
        InputFormat::Connections => ingest::parse_connections(reader(path)?, &connection_key(input)?)?
            .to_bitmap(input.bin_width)?,
    };
    Ok(session)
}

fn parse_override(text: &str) -> Result<(&str, &str), CliError> {
    text.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Usage(format!("expected KEY=VALUE, got `{text}`")))
}

/// Defaults, then the config file, then flags, then `--set` overrides.
pub fn resolve_config(a: &SimulateArgs) -> Result<SimConfig, CliError> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &a.config {
        cfg.apply_text(&fs::read_to_string(path)?)?;
    }
    if let Some(m) = &a.model {
        cfg.set("model", m)?;
    }
    if let Some(p) = &a.preset {
        cfg.apply_preset(p)?;
    }
    if let Some(v) = a.users {
        cfg.users = v;
    }
    if let Some(v) = a.bins_log2 {
        cfg.bins_log2 = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.bin_width {
        cfg.bin_width = v;
    }
    for o in &a.overrides {
        let (k, v) = parse_override(o)?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = resolve_config(&a)?;
    let inputs = digest_inputs(a.config.as_slice())?;
    let trace = run_simulation(&cfg)?;
    let mut out = OutputDir::create(&a.out_dir)?;
    out.write("trace.txt", |buf| Ok(ingest::write_prebinned(buf, &trace)?))?;
    out.write_json("trace.json", &cfg)?;
    out.finish("simulate", Some(cfg.seed), serde_json::to_value(&cfg)?, inputs, Vec::new())
}

#[derive(Serialize)]
struct AnalyzeConfig<'a> {
    input: &'a InputArgs,
    analyses: Vec<Analysis>,
    definition: u8,
    p: f64,
    window: usize,
    max_lag: usize,
    epsilon: f64,
    threshold: f64,
    k: Option<u32>,
    s: u32,
    force: bool,
}

fn profile_csv(p: &MultiresProfile) -> impl FnOnce(&mut Vec<u8>) -> Result<(), CliError> + '_ {
    move |buf| Ok(p.write_csv(buf, false)?)
}

fn default_k(m: u32, reserve: u32, force: bool, what: &str) -> Result<u32, CliError> {
    match m.checked_sub(reserve) {
        Some(k) if k >= 1 => Ok(k),
        _ if force => Ok(1),
        _ => Err(trafficscope::Error::InsufficientData(format!(
            "{what}: a trace of 2^{m} bins is too short for the suggested k; pass --k and --force"
        ))
        .into()),
    }
}

pub fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let path = a.input.input.clone();
    let trace = load_trace(&a.input, &path)?;
    let inputs = digest_inputs(std::slice::from_ref(&path))?;
    let mut warnings = Vec::new();
    let x = trace.truncate_to_power_of_two()?;
    if x.len() < trace.len() {
        let msg = format!("truncated {} bins to the power-of-two prefix {}", trace.len(), x.len());
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let mut analyses = a.analyses.clone();
    analyses.sort();
    analyses.dedup();
    let max_lag = a.max_lag.unwrap_or(x.len() / 4).min(x.len() - 1);
    let mut out = OutputDir::create(&a.out_dir)?;
    let mut first_error: Option<CliError> = None;
    let mut record = |e: CliError, what: &str, warnings: &mut Vec<String>| {
        let msg = format!("{what}: {e}");
        log::error!("{msg}");
        warnings.push(msg);
        first_error.get_or_insert(e);
    };

    let needs_averaging = analyses
        .iter()
        .any(|x| matches!(x, Analysis::Averaging | Analysis::Tool1 | Analysis::Tool2));
    let averaging = if needs_averaging {
        let p = match a.definition {
            1 => averaging_def1(&x, a.p),
            _ => averaging_def2(&x, a.p),
        };
        match p {
            Ok(p) => Some(p),
            Err(e) => {
                record(e.into(), "averaging", &mut warnings);
                None
            }
        }
    } else {
        None
    };

    let mut burstiness: Option<BurstinessReport> = None;
    for analysis in &analyses {
        let step: Result<(), CliError> = (|| match analysis {
            Analysis::Averaging => match &averaging {
                Some(p) => out.write("averaging.csv", profile_csv(p)),
                None => Ok(()),
            },
            Analysis::Energy => {
                let e = match a.definition {
                    1 => energy_def1(&x)?,
                    _ => energy_def2(&x)?,
                };
                out.write("energy.csv", profile_csv(&e))
            }
            Analysis::Autocorr => {
                let r = autocorrelation(x.values(), max_lag)?;
                out.write("autocorr.csv", |buf| Ok(r.write_csv(buf)?))
            }
            Analysis::Kolmogorov => {
                let k = windowed_kolmogorov_values(trace.values(), a.window)?;
                out.write("kolmogorov.csv", |buf| Ok(k.write_csv(buf)?))
            }
            Analysis::Tool1 => match &averaging {
                Some(p) => {
                    let t = tools::tool1_level_detector(p, a.epsilon)?;
                    out.write("tool1.csv", |buf| Ok(t.write_csv(buf)?))
                }
                None => Ok(()),
            },
            Analysis::Tool2 => match &averaging {
                Some(p) => {
                    let t = tools::tool2_flat_regions(p, a.threshold)?;
                    out.write("tool2.csv", |buf| Ok(t.write_csv(buf)?))
                }
                None => Ok(()),
            },
            Analysis::Tool3 => {
                let k = match a.k {
                    Some(k) => k,
                    None => default_k(x.m(), 10, a.force, "tool 3")?,
                };
                let opts = BurstinessOptions { k, s: a.s, allow_large_k: a.force };
                burstiness = Some(tools::tool3_gaussian_deviation(&x, &opts)?);
                Ok(())
            }
            Analysis::Tool4 => {
                let k = match a.k {
                    Some(k) => k,
                    None => default_k(x.m(), a.s + 7, a.force, "tool 4")?,
                };
                let opts = BurstinessOptions { k, s: a.s, allow_large_k: a.force };
                let r = tools::tool4_burstiness(&x, &opts)?;
                burstiness = Some(match burstiness.take() {
                    Some(d) => d.merge(r),
                    None => r,
                });
                Ok(())
            }
        })();
        if let Err(e) = step {
            record(e, &format!("{analysis:?}").to_lowercase(), &mut warnings);
        }
    }
    if let Some(r) = &burstiness {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        out.write_json("burstiness.json", r)?;
        out.write("burstiness.csv", |buf| Ok(r.write_summary_csv(buf, &name)?))?;
    }

    let config = AnalyzeConfig {
        input: &a.input,
        analyses,
        definition: a.definition,
        p: a.p,
        window: a.window,
        max_lag,
        epsilon: a.epsilon,
        threshold: a.threshold,
        k: a.k,
        s: a.s,
        force: a.force,
    };
    out.finish("analyze", None, serde_json::to_value(&config)?, inputs, warnings)?;
    first_error.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct IdaRunConfig<'a> {
    input: &'a InputArgs,
    aggregate: bool,
    ida: IdaConfig,
    sessions: Vec<String>,
}

fn session_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    Ok(files)
}

fn is_data_error(e: &CliError) -> bool {
    matches!(e, CliError::Core(c) if c.family() == ErrorFamily::Data)
}

pub fn ida(a: IdaArgs) -> Result<(), CliError> {
    let config = IdaConfig {
        base: a.base,
        gamma: a.gamma,
        c1: a.c1,
        c2: a.c2,
        normalize_gap_column: a.normalize_gap_column,
        gap_normalization: if a.gap_by_length {
            GapNormalization::SessionLength
        } else {
            GapNormalization::MatchingRow
        },
        ..IdaConfig::default()
    };
    config.validate()?;
    let path = a.input.input.clone();
    let mut warnings = Vec::new();
    let mut names = Vec::new();
    let (result, inputs): (IdaResult, _) = if !a.aggregate {
        let session = load_session(&a.input, &path)?;
        names.push(path.display().to_string());
        (run_ida(&session, &config)?, digest_inputs(std::slice::from_ref(&path))?)
    } else {
        let mut sessions: Vec<(String, Result<SessionBitmap, CliError>)> = Vec::new();
        let input_files = if path.is_dir() {
            let files = session_files(&path)?;
            for f in &files {
                sessions.push((f.display().to_string(), load_session(&a.input, f)));
            }
            files
        } else if matches!(a.input.format, InputFormat::Connections) {
            for (key, trace) in ingest::split_connections(reader(&path)?)? {
                sessions.push((key.to_string(), trace.to_bitmap(a.input.bin_width).map_err(Into::into)));
            }
            vec![path.clone()]
        } else {
            return Err(CliError::Usage(
                "--aggregate needs a directory or a connections-format trace".into(),
            ));
        };
        let mut results = Vec::new();
        for (name, session) in sessions {
            match session.and_then(|s| run_ida(&s, &config).map_err(Into::into)) {
                Ok(r) => {
                    names.push(name);
                    results.push(r);
                }
                Err(e) if is_data_error(&e) => {
                    let msg = format!("skipped session {name}: {e}");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                Err(e) => return Err(e),
            }
        }
        (aggregate_ida(&results, &config)?, digest_inputs(&input_files)?)
    };

    let mut out = OutputDir::create(&a.out_dir)?;
    out.write("ida_matrix.csv", |buf| Ok(result.write_matrix_csv(buf)?))?;
    out.write("ida_sums.csv", |buf| Ok(result.write_sums_csv(buf)?))?;
    out.write("ida.pgm", |buf| Ok(result.write_pgm(buf)?))?;
    out.write_json("ida.json", &result)?;
    let run = IdaRunConfig {
        input: &a.input,
        aggregate: a.aggregate,
        ida: config,
        sessions: names,
    };
    out.finish("ida", None, serde_json::to_value(&run)?, inputs, warnings)
}
