//! Whitespace-separated text trace formats.
//!
//! - packets: `<seconds> <bytes> [ignored...]`
//! - connections: `<seconds> <bytes> <shost> <rhost> <sport> <rport>`
//! - pre-binned: one value per line, bin width supplied by the caller
//!
//! Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{BinnedTrace, Event, PacketTrace};

/// Identifies one connection by its four endpoint tokens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConnectionKey {
    pub sender_host: String,
    pub receiver_host: String,
    pub sender_port: String,
    pub receiver_port: String,
}

impl ConnectionKey {
    pub fn new(
        sender_host: impl Into<String>,
        receiver_host: impl Into<String>,
        sender_port: impl Into<String>,
        receiver_port: impl Into<String>,
    ) -> Result<Self> {
        let key = Self {
            sender_host: sender_host.into(),
            receiver_host: receiver_host.into(),
            sender_port: sender_port.into(),
            receiver_port: receiver_port.into(),
        };
        let tokens = [
            &key.sender_host,
            &key.receiver_host,
            &key.sender_port,
            &key.receiver_port,
        ];
        if tokens
            .iter()
            .any(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::invalid(
                "connection key tokens must be nonempty and contain no whitespace",
            ));
        }
        Ok(key)
    }

    /// Parses `shost,rhost,sport,rport`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b, c, d] => Self::new(*a, *b, *c, *d),
            _ => Err(Error::invalid(format!(
                "connection key must have four comma-separated tokens, got `{text}`"
            ))),
        }
    }

    fn matches(&self, fields: &[&str]) -> bool {
        fields[0] == self.sender_host
            && fields[1] == self.receiver_host
            && fields[2] == self.sender_port
            && fields[3] == self.receiver_port
    }
}

impl fmt::Display for ConnectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.sender_host, self.receiver_host, self.sender_port, self.receiver_port
        )
    }
}

/// Iterates over `(line_number, fields)` of the meaningful lines.
fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((idx + 1, t.to_owned())))
                }
            }
        })
}

fn parse_number(field: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let raw = field.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    let v: f64 = raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what} `{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what} `{raw}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_event(fields: &[&str], line: usize) -> Result<Event> {
    let timestamp = parse_number(fields.first().copied(), line, "timestamp")?;
    let size = parse_number(fields.get(1).copied(), line, "size")?;
    if timestamp < 0.0 {
        return Err(Error::Validation {
            line,
            message: format!("negative timestamp {timestamp}"),
        });
    }
    if size < 0.0 {
        return Err(Error::Validation {
            line,
            message: format!("negative size {size}"),
        });
    }
    Ok(Event::new(timestamp, size))
}

/// Reads the packet format. Input order is not required; events are stably
/// sorted by timestamp.
pub fn parse_timestamp_size<R: BufRead>(reader: R) -> Result<PacketTrace> {
    let mut events = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        events.push(parse_event(&fields, line)?);
    }
    PacketTrace::from_unsorted(events)
}

fn connection_fields(text: &str, line: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() < 6 {
        return Err(Error::Parse {
            line,
            message: format!(
                "expected `<seconds> <bytes> <shost> <rhost> <sport> <rport>`, got {} fields",
                fields.len()
            ),
        });
    }
    Ok(fields)
}

/// Reads the connection format and keeps only the events of `key`.
/// A key that never occurs yields an empty trace.
pub fn parse_connections<R: BufRead>(reader: R, key: &ConnectionKey) -> Result<PacketTrace> {
    let mut events = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields = connection_fields(&text, line)?;
        let ev = parse_event(&fields, line)?;
        if key.matches(&fields[2..6]) {
            events.push(ev);
        }
    }
    PacketTrace::from_unsorted(events)
}

/// Reads the connection format and groups events by connection key.
pub fn split_connections<R: BufRead>(reader: R) -> Result<BTreeMap<ConnectionKey, PacketTrace>> {
    let mut groups: BTreeMap<ConnectionKey, Vec<Event>> = BTreeMap::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields = connection_fields(&text, line)?;
        let ev = parse_event(&fields, line)?;
        let key = ConnectionKey::new(fields[2], fields[3], fields[4], fields[5])?;
        groups.entry(key).or_default().push(ev);
    }
    groups
        .into_iter()
        .map(|(k, evs)| Ok((k, PacketTrace::from_unsorted(evs)?)))
        .collect()
}

/// Reads a pre-binned trace, one nonnegative value per line.
pub fn parse_prebinned<R: BufRead>(reader: R, bin_width: f64) -> Result<BinnedTrace> {
    let values = parse_values(reader)?;
    for (i, v) in values.iter().enumerate() {
        if *v < 0.0 {
            return Err(Error::Validation {
                line: i + 1,
                message: format!("negative bin value {v}"),
            });
        }
    }
    BinnedTrace::new(bin_width, values)
}

/// Reads one number per line (the pre-binned layout) without the sign check.
pub fn parse_values<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let mut fields = text.split_whitespace();
        let v = parse_number(fields.next(), line, "value")?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line,
                message: "expected a single value".into(),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("no values in pre-binned input".into()));
    }
    Ok(values)
}

/// Writes a binned trace in the pre-binned layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_prebinned<W: Write>(mut writer: W, trace: &BinnedTrace) -> Result<()> {
    for v in trace.values() {
        writeln!(writer, "{v}")?;
    }
    Ok(())
}
