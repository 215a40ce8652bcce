//! Line-oriented text encoding of populations, day series and statistics.
//!
//! Each record is one line: a keyword followed by `key=value` fields
//! separated by spaces. Vectors are comma-separated, floats use the shortest
//! representation that parses back to the same value, and blank lines or
//! lines starting with `#` are ignored.
//!
//! ```text
//! population n=2 horizon=2
//! set segment a=1 b=0.5
//! set sum parts=2
//! set singleton profile=0.5,0
//! set segment a=0.25 b=1
//! ```
//!
//! A `sum` record is followed by its `parts` member records, which may
//! themselves be sums.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::meanfield::Population;
use crate::scenario::{DaySeries, SeriesStatistics};
use crate::sets::{IndifferenceSet, ThermalParams};

/// Deepest nesting of `sum` records accepted by the decoder.
pub const MAX_NESTING: usize = 32;
/// Largest horizon accepted by the decoder.
pub const MAX_HORIZON: usize = 1 << 16;

pub fn encode_population(pop: &Population) -> String {
    let mut out = format!("population n={} horizon={}\n", pop.len(), pop.horizon());
    for set in pop.sets() {
        encode_set(set, &mut out);
    }
    out
}

fn encode_set(set: &IndifferenceSet, out: &mut String) {
    let line = match set {
        IndifferenceSet::Singleton { profile } => format!("set singleton profile={}", floats(profile)),
        IndifferenceSet::EvCharging {
            total_kwh,
            start,
            deadline,
            horizon,
        } => format!("set ev total={total_kwh} start={start} deadline={deadline} horizon={horizon}"),
        IndifferenceSet::DiscreteAppliance {
            energy_kwh,
            allowed_periods,
            horizon,
        } => {
            let periods: Vec<String> = allowed_periods.iter().map(|p| p.to_string()).collect();
            format!("set appliance energy={energy_kwh} periods={} horizon={horizon}", periods.join(","))
        }
        IndifferenceSet::ThermalHvac(p) => {
            let mut s = format!(
                "set thermal alpha={} beta={} t_init={} t_min={} t_max={}",
                p.alpha, p.beta, p.t_init, p.t_min, p.t_max
            );
            if let Some(cap) = p.q_max {
                let _ = write!(s, " q_max={cap}");
            }
            let _ = write!(s, " t_out={}", floats(&p.t_out));
            s
        }
        IndifferenceSet::LinearSegment { a, b } => format!("set segment a={a} b={b}"),
        IndifferenceSet::MinkowskiSum(parts) => format!("set sum parts={}", parts.len()),
    };
    out.push_str(&line);
    out.push('\n');
    if let IndifferenceSet::MinkowskiSum(parts) = set {
        for part in parts {
            encode_set(part, out);
        }
    }
}

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

struct Record<'a> {
    line: usize,
    keyword: &'a str,
    kind: &'a str,
    fields: HashMap<&'a str, &'a str>,
}

impl<'a> Record<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.fields
            .get(key)
            .copied()
            .ok_or_else(|| self.err(format!("missing field `{key}`")))
    }

    fn float(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.parse().map_err(|_| self.err(format!("`{key}`: `{v}` is not a number")))
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse().map_err(|_| self.err(format!("`{key}`: `{v}` is not a count")))
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.get(key)?;
        let out: Vec<f64> = v
            .split(',')
            .map(|x| x.parse().map_err(|_| self.err(format!("`{key}`: `{x}` is not a number"))))
            .collect::<Result<_>>()?;
        if out.len() > MAX_HORIZON {
            return Err(self.err(format!("`{key}` has more than {MAX_HORIZON} entries")));
        }
        Ok(out)
    }

    fn counts(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.get(key)?;
        v.split(',')
            .map(|x| x.parse().map_err(|_| self.err(format!("`{key}`: `{x}` is not a count"))))
            .collect()
    }

    fn horizon(&self, key: &str) -> Result<usize> {
        let h = self.count(key)?;
        if h > MAX_HORIZON {
            return Err(self.err(format!("horizon {h} exceeds {MAX_HORIZON}")));
        }
        Ok(h)
    }
}

fn records(text: &str) -> Result<Vec<Record<'_>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut words = trimmed.split_whitespace();
        let keyword = words.next().unwrap_or_default();
        let mut kind = "";
        let mut fields = HashMap::new();
        for word in words {
            match word.split_once('=') {
                Some((k, v)) => {
                    if fields.insert(k, v).is_some() {
                        return Err(Error::Format {
                            line,
                            message: format!("duplicate field `{k}`"),
                        });
                    }
                }
                None if kind.is_empty() && fields.is_empty() => kind = word,
                None => {
                    return Err(Error::Format {
                        line,
                        message: format!("expected key=value, got `{word}`"),
                    })
                }
            }
        }
        out.push(Record {
            line,
            keyword,
            kind,
            fields,
        });
    }
    Ok(out)
}

pub fn decode_population(text: &str) -> Result<Population> {
    let recs = records(text)?;
    let header = recs.first().ok_or(Error::Format {
        line: 0,
        message: "empty input".into(),
    })?;
    if header.keyword != "population" {
        return Err(header.err("expected a `population` header"));
    }
    let n = header.count("n")?;
    let horizon = header.horizon("horizon")?;
    let mut rest = recs[1..].iter();
    let mut sets = Vec::new();
    while let Some(rec) = rest.next() {
        sets.push(decode_set(rec, &mut rest, 0)?);
    }
    if sets.len() != n {
        return Err(header.err(format!("header announces {n} sets, found {}", sets.len())));
    }
    let pop = Population::new(sets).map_err(|e| header.err(e.to_string()))?;
    if pop.horizon() != horizon {
        return Err(header.err(format!("header horizon {horizon}, sets have {}", pop.horizon())));
    }
    Ok(pop)
}

fn decode_set<'a, 'r>(
    rec: &'r Record<'a>,
    rest: &mut impl Iterator<Item = &'r Record<'a>>,
    depth: usize,
) -> Result<IndifferenceSet>
where
    'a: 'r,
{
    if rec.keyword != "set" {
        return Err(rec.err(format!("expected a `set` record, got `{}`", rec.keyword)));
    }
    let invalid = |e: Error| rec.err(e.to_string());
    match rec.kind {
        "singleton" => IndifferenceSet::singleton(rec.floats("profile")?).map_err(invalid),
        "ev" => IndifferenceSet::ev_window(
            rec.float("total")?,
            rec.count("start")?,
            rec.count("deadline")?,
            rec.horizon("horizon")?,
        )
        .map_err(invalid),
        "appliance" => {
            IndifferenceSet::appliance(rec.float("energy")?, rec.counts("periods")?, rec.horizon("horizon")?)
                .map_err(invalid)
        }
        "thermal" => {
            let mut p = ThermalParams::new(
                rec.float("alpha")?,
                rec.float("beta")?,
                rec.floats("t_out")?,
                rec.float("t_init")?,
                rec.float("t_min")?,
                rec.float("t_max")?,
            )
            .map_err(invalid)?;
            if rec.fields.contains_key("q_max") {
                p = p.with_cap(rec.float("q_max")?).map_err(invalid)?;
            }
            IndifferenceSet::thermal(p).map_err(invalid)
        }
        "segment" => IndifferenceSet::segment(rec.float("a")?, rec.float("b")?).map_err(invalid),
        "sum" => {
            if depth >= MAX_NESTING {
                return Err(rec.err(format!("sums nested deeper than {MAX_NESTING}")));
            }
            let k = rec.count("parts")?;
            let mut parts = Vec::new();
            for _ in 0..k {
                let next = rest
                    .next()
                    .ok_or_else(|| rec.err(format!("sum announces {k} parts, input ended early")))?;
                parts.push(decode_set(next, rest, depth + 1)?);
            }
            IndifferenceSet::minkowski(parts).map_err(invalid)
        }
        other => Err(rec.err(format!("unknown set kind `{other}`"))),
    }
}

/// Escapes characters that would break a `key=value` field.
fn escape(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '%' | '=' | ',' => {
                let _ = write!(out, "%{:02X}", c as u32);
            }
            c if c.is_whitespace() => {
                for b in c.to_string().bytes() {
                    let _ = write!(out, "%{b:02X}");
                }
            }
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str, line: usize) -> Result<String> {
    let bad = || Error::Format {
        line,
        message: format!("bad escape in `{text}`"),
    };
    let mut bytes = Vec::with_capacity(text.len());
    let mut it = text.bytes();
    while let Some(b) = it.next() {
        if b == b'%' {
            let hex = [it.next().ok_or_else(bad)?, it.next().ok_or_else(bad)?];
            let hex = std::str::from_utf8(&hex).map_err(|_| bad())?;
            bytes.push(u8::from_str_radix(hex, 16).map_err(|_| bad())?);
        } else {
            bytes.push(b);
        }
    }
    String::from_utf8(bytes).map_err(|_| bad())
}

pub fn encode_series(days: &[DaySeries]) -> String {
    days.iter()
        .map(|d| format!("series label={} values={}\n", escape(&d.label), floats(&d.values)))
        .collect()
}

pub fn decode_series(text: &str) -> Result<Vec<DaySeries>> {
    records(text)?
        .iter()
        .map(|rec| {
            if rec.keyword != "series" || !rec.kind.is_empty() {
                return Err(rec.err("expected a `series` record"));
            }
            let values = rec.floats("values")?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(rec.err("series values must be finite"));
            }
            Ok(DaySeries {
                label: unescape(rec.get("label")?, rec.line)?,
                values,
            })
        })
        .collect()
}

pub fn encode_statistics(stats: &SeriesStatistics) -> String {
    let mut out = format!("statistics d={}\nmean values={}\n", stats.mean.len(), floats(&stats.mean));
    for (i, row) in stats.covariance.iter().enumerate() {
        let _ = writeln!(out, "cov row={i} values={}", floats(row));
    }
    out
}

pub fn decode_statistics(text: &str) -> Result<SeriesStatistics> {
    let recs = records(text)?;
    let header = recs.first().ok_or(Error::Format {
        line: 0,
        message: "empty input".into(),
    })?;
    if header.keyword != "statistics" {
        return Err(header.err("expected a `statistics` header"));
    }
    let d = header.horizon("d")?;
    if recs.len() != d + 2 {
        return Err(header.err(format!("expected {} records, found {}", d + 2, recs.len())));
    }
    if recs[1].keyword != "mean" {
        return Err(recs[1].err("expected a `mean` record"));
    }
    let mean = recs[1].floats("values")?;
    let mut covariance = Vec::with_capacity(d);
    for (i, rec) in recs[2..].iter().enumerate() {
        if rec.keyword != "cov" || rec.count("row")? != i {
            return Err(rec.err(format!("expected `cov row={i}`")));
        }
        covariance.push(rec.floats("values")?);
    }
    let stats = SeriesStatistics { mean, covariance };
    stats.validate().map_err(|e| header.err(e.to_string()))?;
    Ok(stats)
}
