//! Weather and renewable series, Gaussian day sampling and thermal
//! populations.
//!
//! Series files are long-format CSV with a header row and one row per
//! (day, hour): `day,hour,value`. Every day must have exactly 24 rows.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::meanfield::Population;
use crate::sets::{IndifferenceSet, ThermalParams, DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct DaySeries {
    pub values: Vec<f64>,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// Outside temperature in degrees Celsius.
    Temperature,
    /// Renewable production in kWh; must be nonnegative.
    Renewable,
}

/// Header names of the three columns in a series file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub day: String,
    pub hour: String,
    pub value: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            day: "day".into(),
            hour: "hour".into(),
            value: "value".into(),
        }
    }
}

pub fn load_series(path: impl AsRef<Path>, columns: &ColumnMap, kind: SeriesKind) -> Result<Vec<DaySeries>> {
    let text = std::fs::read_to_string(path)?;
    parse_series(&text, columns, kind)
}

/// Parses long-format CSV text. Days are returned in order of first
/// appearance.
pub fn parse_series(text: &str, columns: &ColumnMap, kind: SeriesKind) -> Result<Vec<DaySeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (day_col, hour_col, value_col) = (find(&columns.day)?, find(&columns.hour)?, find(&columns.value)?);

    let mut order: Vec<String> = Vec::new();
    let mut days: HashMap<String, Vec<Option<f64>>> = HashMap::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |col: usize, name: &str| {
            record.get(col).ok_or_else(|| Error::Parse {
                line,
                column: name.to_string(),
                message: "missing field".into(),
            })
        };
        let label = cell(day_col, &columns.day)?.to_string();
        let hour_text = cell(hour_col, &columns.hour)?;
        let hour: usize = hour_text
            .parse()
            .ok()
            .filter(|h| *h < DAY)
            .ok_or_else(|| Error::Parse {
                line,
                column: columns.hour.clone(),
                message: format!("hour `{hour_text}` is not in 0..24"),
            })?;
        let value_text = cell(value_col, &columns.value)?;
        let value: f64 = value_text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line,
                column: columns.value.clone(),
                message: format!("`{value_text}` is not a finite number"),
            })?;
        if kind == SeriesKind::Renewable && value < 0.0 {
            return Err(Error::Parse {
                line,
                column: columns.value.clone(),
                message: format!("renewable production {value} is negative"),
            });
        }

        let slots = days.entry(label.clone()).or_insert_with(|| {
            order.push(label.clone());
            vec![None; DAY]
        });
        *counts.entry(label.clone()).or_insert(0) += 1;
        if slots[hour].replace(value).is_some() {
            return Err(Error::Parse {
                line,
                column: columns.hour.clone(),
                message: format!("hour {hour} of day `{label}` appears twice"),
            });
        }
    }

    order
        .into_iter()
        .map(|label| {
            let slots = &days[&label];
            let rows = counts[&label];
            if rows != DAY {
                return Err(Error::WrongHorizon {
                    day: label,
                    rows,
                    expected: DAY,
                });
            }
            let values = slots.iter().map(|v| v.expect("all hours present")).collect();
            Ok(DaySeries { values, label })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse {
        line: e.position().map_or(0, |p| p.line()),
        column: String::new(),
        message: e.to_string(),
    }
}

/// Writes days back out in the long format read by [`parse_series`].
pub fn series_to_csv(days: &[DaySeries]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["day", "hour", "value"]).expect("in-memory write");
    for day in days {
        for (h, v) in day.values.iter().enumerate() {
            w.write_record([day.label.as_str(), &h.to_string(), &v.to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStatistics {
    pub mean: Vec<f64>,
    /// Row-major `d x d` sample covariance.
    pub covariance: Vec<Vec<f64>>,
}

impl SeriesStatistics {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mean.len();
        if d == 0 || self.covariance.len() != d || self.covariance.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameters("covariance must be d x d".into()));
        }
        if self.mean.iter().chain(self.covariance.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters("statistics must be finite".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if (self.covariance[i][j] - self.covariance[j][i]).abs() > 1e-10 {
                    return Err(Error::InvalidParameters(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

/// Sample mean and unbiased sample covariance. The result does not depend
/// on the order of `days`.
pub fn fit_statistics(days: &[DaySeries]) -> Result<SeriesStatistics> {
    if days.len() < 2 {
        return Err(Error::TooFewDays(days.len()));
    }
    let d = days[0].values.len();
    if let Some(bad) = days.iter().find(|s| s.values.len() != d) {
        return Err(Error::HorizonMismatch {
            expected: d,
            got: bad.values.len(),
        });
    }
    let mut sorted: Vec<&[f64]> = days.iter().map(|s| s.values.as_slice()).collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    // Welford updates: repeated days contribute exactly zero spread.
    let mut mean = vec![0.0; d];
    let mut covariance = vec![vec![0.0; d]; d];
    let mut before = vec![0.0; d];
    for (k, v) in sorted.iter().enumerate() {
        for i in 0..d {
            before[i] = v[i] - mean[i];
            mean[i] += before[i] / (k + 1) as f64;
        }
        for i in 0..d {
            let after = v[i] - mean[i];
            for j in 0..=i {
                covariance[i][j] += after * before[j];
            }
        }
    }
    let m = sorted.len() as f64;
    for i in 0..d {
        for j in 0..=i {
            covariance[i][j] /= m - 1.0;
            covariance[j][i] = covariance[i][j];
        }
    }
    Ok(SeriesStatistics { mean, covariance })
}

/// Draws days from `N(mean, covariance)` through a symmetric square root of
/// the covariance with negative eigenvalues clipped to zero.
#[derive(Debug, Clone)]
pub struct GaussianDaySampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    kind: SeriesKind,
}

impl GaussianDaySampler {
    pub fn new(stats: &SeriesStatistics, kind: SeriesKind) -> Result<Self> {
        stats.validate()?;
        let d = stats.horizon();
        let cov = DMatrix::from_fn(d, d, |i, j| stats.covariance[i][j]);
        let eig = SymmetricEigen::new(cov);
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self {
            mean: DVector::from_column_slice(&stats.mean),
            factor,
            kind,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, label: String) -> DaySeries {
        let d = self.mean.len();
        let xi = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let x = &self.mean + &self.factor * xi;
        let values = x
            .iter()
            .map(|&v| match self.kind {
                SeriesKind::Renewable => v.max(0.0),
                SeriesKind::Temperature => v,
            })
            .collect();
        DaySeries { values, label }
    }
}

pub fn sample_day(stats: &SeriesStatistics, kind: SeriesKind, seed: u64) -> Result<DaySeries> {
    let sampler = GaussianDaySampler::new(stats, kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng, format!("sample-{seed}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub n: usize,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub t_bounds: (f64, f64),
    pub t_init: f64,
    pub seed: u64,
    /// All consumers see the same outside temperature; otherwise each draws
    /// its own day.
    pub shared_weather: bool,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            n: 20,
            alpha_range: (0.05, 0.08),
            beta_range: (-0.35, -0.25),
            t_bounds: (20.0, 25.0),
            t_init: 24.0,
            seed: 0,
            shared_weather: true,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.alpha_range;
        let (b0, b1) = self.beta_range;
        let (t0, t1) = self.t_bounds;
        let bad = if self.n == 0 {
            Some("n must be positive")
        } else if !(0.0 < a0 && a0 <= a1 && a1 < 1.0) {
            Some("alpha range must lie in (0, 1)")
        } else if !(b0 <= b1 && b1 < 0.0 && b0.is_finite()) {
            Some("beta range must be negative")
        } else if !(t0 <= t1 && t0.is_finite() && t1.is_finite()) {
            Some("temperature bounds must be ordered")
        } else if !self.t_init.is_finite() {
            Some("initial temperature must be finite")
        } else {
            None
        };
        match bad {
            Some(msg) => Err(Error::InvalidParameters(msg.into())),
            None => Ok(()),
        }
    }

    fn draw_params(&self, rng: &mut ChaCha8Rng, t_out: Vec<f64>, i: usize) -> Result<IndifferenceSet> {
        let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        let alpha = uniform(rng, self.alpha_range);
        let beta = uniform(rng, self.beta_range);
        let params = ThermalParams::new(alpha, beta, t_out, self.t_init, self.t_bounds.0, self.t_bounds.1)?;
        let set = IndifferenceSet::thermal(params)?;
        let d = set.horizon();
        set.hems_respond(&vec![1.0; d])
            .map_err(|e| Error::InfeasibleSet(format!("consumer {i}: {e}")))?;
        Ok(set)
    }
}

/// `n` thermal consumers sharing the outside temperature `t_out`.
pub fn build_population(spec: &PopulationSpec, t_out: &DaySeries) -> Result<Population> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sets = (0..spec.n)
        .map(|i| spec.draw_params(&mut rng, t_out.values.clone(), i))
        .collect::<Result<Vec<_>>>()?;
    Population::new(sets)
}

/// Like [`build_population`], with outside temperatures drawn from
/// `weather`: one day for everybody when `spec.shared_weather`, otherwise one
/// per consumer.
pub fn build_population_sampled(spec: &PopulationSpec, weather: &GaussianDaySampler) -> Result<Population> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut weather_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_da7a);
    let shared = weather.sample(&mut weather_rng, "shared".into());
    let sets = (0..spec.n)
        .map(|i| {
            let t_out = if spec.shared_weather {
                shared.values.clone()
            } else {
                weather.sample(&mut weather_rng, String::new()).values
            };
            spec.draw_params(&mut rng, t_out, i)
        })
        .collect::<Result<Vec<_>>>()?;
    Population::new(sets)
}

/// Synthetic summer days: a daily cosine peaking at 15:00 around 33 C with
/// a 7 C swing, a random per-day offset and autocorrelated hourly noise.
pub fn synthetic_temperature_days(n_days: usize, seed: u64) -> Vec<DaySeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_days)
        .map(|k| {
            let e: f64 = StandardNormal.sample(&mut rng);
            let offset = 1.5 * e;
            let mut noise = 0.0;
            let values = (0..DAY)
                .map(|h| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    noise = 0.8 * noise + 0.4 * e;
                    33.0 + 7.0 * (2.0 * PI * (h as f64 - 15.0) / DAY as f64).cos() + offset + noise
                })
                .collect();
            DaySeries {
                values,
                label: format!("synthetic-{:02}", k + 1),
            }
        })
        .collect()
}

/// Synthetic solar days: a bell centred on 12:30 between 06:00 and 19:00
/// with peak 1, scaled by a per-day cloudiness factor and hourly noise.
pub fn synthetic_renewable_days(n_days: usize, seed: u64) -> Vec<DaySeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_days)
        .map(|k| {
            let cloud = rng.random_range(0.7..1.0);
            let values = (0..DAY)
                .map(|h| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    if (6..=19).contains(&h) {
                        let x = (h as f64 - 12.5) / 3.0;
                        (cloud * (-0.5 * x * x).exp() * (1.0 + 0.05 * e)).max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            DaySeries {
                values,
                label: format!("synthetic-{:02}", k + 1),
            }
        })
        .collect()
}

/// Factor that makes `scale * renewable[hour]` equal `fraction` of
/// `demand[hour]`. Used to size per-consumer renewables against flat-rate
/// demand.
pub fn renewable_scale(demand: &[f64], renewable: &[f64], hour: usize, fraction: f64) -> Result<f64> {
    match (demand.get(hour), renewable.get(hour)) {
        (Some(&q), Some(&r)) if r > 0.0 => Ok(fraction * q / r),
        _ => Err(Error::InvalidParameters(format!("no renewable production at hour {hour}"))),
    }
}
