//! Indifference sets and the price-responsive HEMS oracle.
//!
//! Every set exposes the minimal spending `h(p; R) = min { p . q : q in R }`
//! together with a minimizer, a membership test and its support function
//! `delta(u; R) = -h(-u; R)`. Periods are zero-indexed; ties between equally
//! cheap periods always go to the lowest index.

mod thermal;

pub use thermal::ThermalParams;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::vecops::{argmin, dot};

/// Default absolute tolerance on constraint residuals for membership tests.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-6;

/// Length of a day in hourly periods.
pub const DAY: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub enum IndifferenceSet {
    /// A consumer with no flexibility at all.
    Singleton { profile: Vec<f64> },
    /// `total_kwh` spread freely over periods `start..deadline`.
    EvCharging {
        total_kwh: f64,
        start: usize,
        deadline: usize,
        horizon: usize,
    },
    /// One run of `energy_kwh` in exactly one of the allowed periods.
    DiscreteAppliance {
        energy_kwh: f64,
        allowed_periods: Vec<usize>,
        horizon: usize,
    },
    ThermalHvac(ThermalParams),
    /// Two-period segment `{(w a, (1 - w) b) : w in [0, 1]}`.
    LinearSegment { a: f64, b: f64 },
    MinkowskiSum(Vec<IndifferenceSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemsResponse {
    pub cost: f64,
    pub profile: Vec<f64>,
}

impl IndifferenceSet {
    pub fn singleton(profile: Vec<f64>) -> Result<Self> {
        let set = Self::Singleton { profile };
        set.validate()?;
        Ok(set)
    }

    /// EV that must receive `total_kwh` within the first `deadline` periods.
    pub fn ev_charging(total_kwh: f64, deadline: usize, horizon: usize) -> Result<Self> {
        Self::ev_window(total_kwh, 0, deadline, horizon)
    }

    pub fn ev_window(total_kwh: f64, start: usize, deadline: usize, horizon: usize) -> Result<Self> {
        let set = Self::EvCharging {
            total_kwh,
            start,
            deadline,
            horizon,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn appliance(energy_kwh: f64, mut allowed_periods: Vec<usize>, horizon: usize) -> Result<Self> {
        allowed_periods.sort_unstable();
        allowed_periods.dedup();
        let set = Self::DiscreteAppliance {
            energy_kwh,
            allowed_periods,
            horizon,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn thermal(params: ThermalParams) -> Result<Self> {
        params.validate()?;
        Ok(Self::ThermalHvac(params))
    }

    pub fn segment(a: f64, b: f64) -> Result<Self> {
        let set = Self::LinearSegment { a, b };
        set.validate()?;
        Ok(set)
    }

    pub fn minkowski(parts: Vec<IndifferenceSet>) -> Result<Self> {
        let set = Self::MinkowskiSum(parts);
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        match self {
            Self::Singleton { profile } => {
                if profile.is_empty() || profile.iter().any(|x| !x.is_finite()) {
                    return bad("singleton profile must be nonempty and finite".into());
                }
            }
            Self::EvCharging {
                total_kwh,
                start,
                deadline,
                horizon,
            } => {
                if !(*total_kwh >= 0.0) || !total_kwh.is_finite() {
                    return bad(format!("EV energy {total_kwh} must be nonnegative"));
                }
                if *deadline > *horizon || start >= deadline {
                    return bad(format!(
                        "EV window {start}..{deadline} invalid for horizon {horizon}"
                    ));
                }
            }
            Self::DiscreteAppliance {
                energy_kwh,
                allowed_periods,
                horizon,
            } => {
                if !(*energy_kwh >= 0.0) || !energy_kwh.is_finite() {
                    return bad(format!("appliance energy {energy_kwh} must be nonnegative"));
                }
                if allowed_periods.is_empty() || allowed_periods.iter().any(|&j| j >= *horizon) {
                    return bad("appliance needs allowed periods inside the horizon".into());
                }
            }
            Self::ThermalHvac(params) => params.validate()?,
            Self::LinearSegment { a, b } => {
                if !(*a > 0.0 && *b > 0.0) || !a.is_finite() || !b.is_finite() {
                    return bad(format!("segment parameters ({a}, {b}) must be positive"));
                }
            }
            Self::MinkowskiSum(parts) => {
                let Some(first) = parts.first() else {
                    return bad("Minkowski sum needs at least one part".into());
                };
                let d = first.horizon();
                for part in parts {
                    part.validate()?;
                    check_len(d, part.horizon())?;
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        match self {
            Self::Singleton { profile } => profile.len(),
            Self::EvCharging { horizon, .. } | Self::DiscreteAppliance { horizon, .. } => *horizon,
            Self::ThermalHvac(params) => params.horizon(),
            Self::LinearSegment { .. } => 2,
            Self::MinkowskiSum(parts) => parts[0].horizon(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Singleton { .. } => "singleton",
            Self::EvCharging { .. } => "ev",
            Self::DiscreteAppliance { .. } => "appliance",
            Self::ThermalHvac(_) => "thermal",
            Self::LinearSegment { .. } => "segment",
            Self::MinkowskiSum(_) => "sum",
        }
    }

    /// Whether the set is convex (a discrete appliance with two or more
    /// allowed periods is not).
    pub fn is_convex(&self) -> bool {
        match self {
            Self::DiscreteAppliance {
                allowed_periods,
                energy_kwh,
                ..
            } => allowed_periods.len() == 1 || *energy_kwh == 0.0,
            Self::MinkowskiSum(parts) => parts.iter().all(Self::is_convex),
            _ => true,
        }
    }

    /// Cheapest profile in the set at prices `p`.
    pub fn hems_respond(&self, p: &[f64]) -> Result<HemsResponse> {
        let profile = self.respond_profile(p)?;
        Ok(HemsResponse {
            cost: dot(p, &profile),
            profile,
        })
    }

    fn respond_profile(&self, p: &[f64]) -> Result<Vec<f64>> {
        let d = self.horizon();
        check_len(d, p.len())?;
        Ok(match self {
            Self::Singleton { profile } => profile.clone(),
            Self::EvCharging {
                total_kwh,
                start,
                deadline,
                ..
            } => {
                let mut q = vec![0.0; d];
                q[start + argmin(&p[*start..*deadline])] = *total_kwh;
                q
            }
            Self::DiscreteAppliance {
                energy_kwh,
                allowed_periods,
                ..
            } => {
                let prices: Vec<f64> = allowed_periods.iter().map(|&j| p[j]).collect();
                let mut q = vec![0.0; d];
                q[allowed_periods[argmin(&prices)]] = *energy_kwh;
                q
            }
            Self::ThermalHvac(params) => params.respond(p)?,
            Self::LinearSegment { a, b } => {
                if a * p[0] <= b * p[1] {
                    vec![*a, 0.0]
                } else {
                    vec![0.0, *b]
                }
            }
            Self::MinkowskiSum(parts) => {
                let mut q = vec![0.0; d];
                for part in parts {
                    for (acc, x) in q.iter_mut().zip(part.respond_profile(p)?) {
                        *acc += x;
                    }
                }
                q
            }
        })
    }

    /// Minimal spending `h(p; R)`.
    pub fn min_cost(&self, p: &[f64]) -> Result<f64> {
        Ok(self.hems_respond(p)?.cost)
    }

    /// Support function `delta(u; R) = sup { u . q : q in R }`.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        Ok(-self.min_cost(&neg)?)
    }

    /// Membership within `tol` on every defining constraint.
    pub fn contains(&self, q: &[f64], tol: f64) -> Result<bool> {
        let d = self.horizon();
        check_len(d, q.len())?;
        Ok(match self {
            Self::Singleton { profile } => profile.iter().zip(q).all(|(a, b)| (a - b).abs() <= tol),
            Self::EvCharging {
                total_kwh,
                start,
                deadline,
                ..
            } => {
                let inside: f64 = q[*start..*deadline].iter().sum();
                q.iter().all(|&x| x >= -tol)
                    && q.iter()
                        .enumerate()
                        .all(|(j, &x)| (*start..*deadline).contains(&j) || x.abs() <= tol)
                    && (inside - total_kwh).abs() <= tol
            }
            Self::DiscreteAppliance {
                energy_kwh,
                allowed_periods,
                ..
            } => allowed_periods.iter().any(|&k| {
                q.iter().enumerate().all(|(j, &x)| {
                    let want = if j == k { *energy_kwh } else { 0.0 };
                    (x - want).abs() <= tol
                })
            }),
            Self::ThermalHvac(params) => params.contains(q, tol)?,
            Self::LinearSegment { a, b } => {
                q.iter().all(|&x| x >= -tol) && (q[0] / a + q[1] / b - 1.0).abs() <= tol
            }
            Self::MinkowskiSum(parts) => minkowski_contains(parts, q, tol)?,
        })
    }

    /// The same consumer repeated over `days` consecutive days.
    pub fn tiled(&self, days: usize) -> Result<Self> {
        if days == 1 {
            return Ok(self.clone());
        }
        let d = self.horizon();
        Ok(match self {
            Self::Singleton { profile } => Self::Singleton {
                profile: profile.repeat(days),
            },
            Self::EvCharging {
                total_kwh,
                start,
                deadline,
                ..
            } => Self::MinkowskiSum(
                (0..days)
                    .map(|k| Self::EvCharging {
                        total_kwh: *total_kwh,
                        start: start + k * d,
                        deadline: deadline + k * d,
                        horizon: d * days,
                    })
                    .collect(),
            ),
            Self::DiscreteAppliance {
                energy_kwh,
                allowed_periods,
                ..
            } => Self::MinkowskiSum(
                (0..days)
                    .map(|k| Self::DiscreteAppliance {
                        energy_kwh: *energy_kwh,
                        allowed_periods: allowed_periods.iter().map(|j| j + k * d).collect(),
                        horizon: d * days,
                    })
                    .collect(),
            ),
            Self::ThermalHvac(params) => Self::ThermalHvac(params.tiled(days)),
            Self::LinearSegment { .. } => return Err(Error::UnsupportedTiling("segment")),
            Self::MinkowskiSum(parts) => Self::MinkowskiSum(
                parts
                    .iter()
                    .map(|p| p.tiled(days))
                    .collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    /// Finite list of profiles for discrete sets; `None` for continuous ones.
    pub(crate) fn discrete_profiles(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Self::Singleton { profile } => Some(vec![profile.clone()]),
            Self::DiscreteAppliance {
                energy_kwh,
                allowed_periods,
                horizon,
            } => Some(
                allowed_periods
                    .iter()
                    .map(|&j| {
                        let mut q = vec![0.0; *horizon];
                        q[j] = *energy_kwh;
                        q
                    })
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Linear description `(ub rows, eq rows, bounds)` of a convex,
    /// non-composite set over `q`.
    pub(crate) fn linear_description(&self) -> Option<LinearDescription> {
        let d = self.horizon();
        let mut desc = LinearDescription {
            ub: Vec::new(),
            eq: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); d],
        };
        match self {
            Self::Singleton { profile } => {
                desc.bounds = profile.iter().map(|&x| (x, x)).collect();
            }
            Self::EvCharging {
                total_kwh,
                start,
                deadline,
                ..
            } => {
                let row = (0..d).map(|j| if (*start..*deadline).contains(&j) { 1.0 } else { 0.0 }).collect();
                desc.eq.push((row, *total_kwh));
                for (j, b) in desc.bounds.iter_mut().enumerate() {
                    if !(*start..*deadline).contains(&j) {
                        *b = (0.0, 0.0);
                    }
                }
            }
            Self::ThermalHvac(params) => {
                let (rows, bounds) = params.q_space_rows();
                desc.ub = rows;
                desc.bounds = bounds;
            }
            Self::LinearSegment { a, b } => desc.eq.push((vec![1.0 / a, 1.0 / b], 1.0)),
            Self::DiscreteAppliance { .. } | Self::MinkowskiSum(_) => return None,
        }
        Some(desc)
    }

    /// Leaves of a (possibly nested) Minkowski sum.
    pub(crate) fn flatten(&self) -> Vec<&IndifferenceSet> {
        match self {
            Self::MinkowskiSum(parts) => parts.iter().flat_map(|p| p.flatten()).collect(),
            other => vec![other],
        }
    }
}

pub(crate) struct LinearDescription {
    pub ub: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<(f64, f64)>,
}

/// Decomposition test: is `q` within `tol` of a sum of one element per part?
fn minkowski_contains(parts: &[IndifferenceSet], q: &[f64], tol: f64) -> Result<bool> {
    let leaves: Vec<&IndifferenceSet> = parts.iter().flat_map(|p| p.flatten()).collect();
    let d = q.len();
    let (discrete, convex): (Vec<_>, Vec<_>) = leaves
        .into_iter()
        .partition(|s| matches!(s, IndifferenceSet::DiscreteAppliance { .. }));
    let choices: Vec<Vec<Vec<f64>>> = discrete
        .iter()
        .map(|s| s.discrete_profiles().expect("discrete leaf"))
        .collect();
    let descriptions: Vec<LinearDescription> = convex
        .iter()
        .map(|s| s.linear_description().expect("convex leaf"))
        .collect();

    let mut pick = vec![0usize; choices.len()];
    loop {
        let mut target = q.to_vec();
        for (c, &k) in choices.iter().zip(&pick) {
            for (t, x) in target.iter_mut().zip(&c[k]) {
                *t -= x;
            }
        }
        if decomposes(&descriptions, &target, d, tol)? {
            return Ok(true);
        }
        // Odometer over the discrete choices.
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Ok(false);
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn decomposes(parts: &[LinearDescription], target: &[f64], d: usize, tol: f64) -> Result<bool> {
    if parts.is_empty() {
        return Ok(target.iter().all(|x| x.abs() <= tol));
    }
    let m = parts.len() * d;
    let mut lp = LinearProgram::new(vec![0.0; m]);
    for (k, part) in parts.iter().enumerate() {
        let embed = |row: &[f64]| {
            let mut full = vec![0.0; m];
            full[k * d..(k + 1) * d].copy_from_slice(row);
            full
        };
        for (row, rhs) in &part.ub {
            lp.add_ub(embed(row), *rhs);
        }
        for (row, rhs) in &part.eq {
            lp.add_eq(embed(row), *rhs);
        }
        for (j, &(lo, hi)) in part.bounds.iter().enumerate() {
            lp.set_bounds(k * d + j, lo, hi);
        }
    }
    for j in 0..d {
        let mut row = vec![0.0; m];
        for k in 0..parts.len() {
            row[k * d + j] = 1.0;
        }
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        lp.add_ub(row, target[j] + tol);
        lp.add_ub(neg, -(target[j] - tol));
    }
    Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::HorizonMismatch { expected, got })
    }
}
