//! Direct control: the grid picks every consumer's profile itself,
//!
//! ```text
//! R_DM = min { rho(sum_i q_i - Q0) : q_i in R_i }.
//! ```
//!
//! Three routes are provided: exhaustive enumeration (exact on discrete sets,
//! grid-restricted on continuous ones), the convex dual solved with the same
//! Frank-Wolfe machinery as pricing (exact for convex sets), and the closed
//! forms of the two-period peak-demand example with linear segments.

use crate::cost::GridCostFunction;
use crate::error::{Error, Result};
use crate::meanfield::Population;
use crate::pricing::{PricingProblem, StepRule};
use crate::sets::{IndifferenceSet, ThermalParams};

/// Upper limit on the number of joint profiles brute force will visit.
pub const MAX_ENUMERATION: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmMethod {
    BruteForce,
    ConvexDual,
    WarmupClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectControlResult {
    /// Total grid cost `sigma(sum_i q_i, Q0)` (or a lower bound on it).
    pub value: f64,
    pub profiles: Option<Vec<Vec<f64>>>,
    pub method: DmMethod,
}

/// Resolution used to discretize continuous sets for enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { resolution: 0.05 }
    }
}

/// Exact minimum of the grid cost over the (grid-restricted) product of the
/// consumers' sets.
pub fn brute_force_dm(
    pop: &Population,
    rho: GridCostFunction,
    renewables: &[f64],
    grid: GridSpec,
) -> Result<DirectControlResult> {
    let d = pop.horizon();
    if renewables.len() != d {
        return Err(Error::HorizonMismatch {
            expected: d,
            got: renewables.len(),
        });
    }
    if !(grid.resolution > 0.0) {
        return Err(Error::InvalidParameters("grid resolution must be positive".into()));
    }
    let mut candidates = Vec::with_capacity(pop.len());
    let mut total: u128 = 1;
    for set in pop.sets() {
        let list = candidates_for(set, grid.resolution, MAX_ENUMERATION)?;
        total = total.saturating_mul(list.len() as u128);
        if total > MAX_ENUMERATION {
            return Err(Error::EnumerationTooLarge(total, MAX_ENUMERATION));
        }
        candidates.push(list);
    }

    let mut search = Search {
        candidates: &candidates,
        rho,
        renewables,
        pick: vec![0; candidates.len()],
        best: f64::INFINITY,
        best_pick: Vec::new(),
    };
    search.descend(0, &mut vec![0.0; d]);
    if search.best_pick.is_empty() && !candidates.is_empty() {
        return Err(Error::InfeasibleSet("no grid point inside some set".into()));
    }
    let profiles = search
        .best_pick
        .iter()
        .zip(&candidates)
        .map(|(&k, list)| list[k].clone())
        .collect();
    Ok(DirectControlResult {
        value: search.best,
        profiles: Some(profiles),
        method: DmMethod::BruteForce,
    })
}

struct Search<'a> {
    candidates: &'a [Vec<Vec<f64>>],
    rho: GridCostFunction,
    renewables: &'a [f64],
    pick: Vec<usize>,
    best: f64,
    best_pick: Vec<usize>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize, acc: &mut Vec<f64>) {
        if i == self.candidates.len() {
            let v = self.rho.grid_cost(acc, self.renewables);
            if v < self.best {
                self.best = v;
                self.best_pick = self.pick.clone();
            }
            return;
        }
        for (k, q) in self.candidates[i].iter().enumerate() {
            self.pick[i] = k;
            for (a, x) in acc.iter_mut().zip(q) {
                *a += x;
            }
            self.descend(i + 1, acc);
            for (a, x) in acc.iter_mut().zip(q) {
                *a -= x;
            }
        }
    }
}

/// Grid points of one set, failing once more than `limit` are produced.
fn candidates_for(set: &IndifferenceSet, res: f64, limit: u128) -> Result<Vec<Vec<f64>>> {
    let too_many = |n: u128| Error::EnumerationTooLarge(n, limit);
    let d = set.horizon();
    match set {
        IndifferenceSet::Singleton { .. } | IndifferenceSet::DiscreteAppliance { .. } => {
            Ok(set.discrete_profiles().expect("discrete set"))
        }
        IndifferenceSet::EvCharging {
            total_kwh,
            start,
            deadline,
            ..
        } => {
            let units = ((total_kwh / res).round() as u64).max(1);
            let slots = deadline - start;
            let count = binomial(units as u128 + slots as u128 - 1, slots as u128 - 1);
            if count > limit {
                return Err(too_many(count));
            }
            let step = total_kwh / units as f64;
            let mut out = Vec::new();
            let mut parts = vec![0u64; slots];
            compositions(units, 0, &mut parts, &mut |c| {
                let mut q = vec![0.0; d];
                for (j, &u) in c.iter().enumerate() {
                    q[start + j] = u as f64 * step;
                }
                out.push(q);
            });
            Ok(out)
        }
        IndifferenceSet::LinearSegment { a, b } => {
            let steps = (a.max(*b) / res).ceil().max(1.0) as usize;
            Ok((0..=steps)
                .map(|i| {
                    let w = i as f64 / steps as f64;
                    vec![w * a, (1.0 - w) * b]
                })
                .collect())
        }
        IndifferenceSet::ThermalHvac(params) => thermal_grid(params, res, limit),
        IndifferenceSet::MinkowskiSum(parts) => {
            let mut acc = vec![vec![0.0; d]];
            for part in parts {
                let list = candidates_for(part, res, limit)?;
                let n = acc.len() as u128 * list.len() as u128;
                if n > limit {
                    return Err(too_many(n));
                }
                acc = acc
                    .iter()
                    .flat_map(|base| {
                        list.iter()
                            .map(move |q| base.iter().zip(q).map(|(x, y)| x + y).collect::<Vec<f64>>())
                    })
                    .collect();
            }
            Ok(acc)
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn compositions(remaining: u64, slot: usize, parts: &mut Vec<u64>, emit: &mut dyn FnMut(&[u64])) {
    if slot + 1 == parts.len() {
        parts[slot] = remaining;
        emit(parts);
        return;
    }
    for u in 0..=remaining {
        parts[slot] = u;
        compositions(remaining - u, slot + 1, parts, emit);
    }
}

/// Cooling profiles on a `res` grid that keep the house inside its band.
fn thermal_grid(params: &ThermalParams, res: f64, limit: u128) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let mut q = Vec::with_capacity(params.horizon());
    let mut overflow = false;
    thermal_descend(params, res, params.t_init, &mut q, &mut out, limit, &mut overflow);
    if overflow {
        return Err(Error::EnumerationTooLarge(out.len() as u128 + 1, limit));
    }
    Ok(out)
}

fn thermal_descend(
    p: &ThermalParams,
    res: f64,
    temp: f64,
    q: &mut Vec<f64>,
    out: &mut Vec<Vec<f64>>,
    limit: u128,
    overflow: &mut bool,
) {
    if *overflow {
        return;
    }
    let t = q.len();
    if t == p.horizon() {
        if out.len() as u128 >= limit {
            *overflow = true;
        } else {
            out.push(q.clone());
        }
        return;
    }
    let free = temp + p.alpha * (p.t_out[t] - temp);
    let cap = p.q_max.unwrap_or(f64::INFINITY);
    let lo = ((free - p.t_max) / -p.beta).max(0.0);
    let hi = ((free - p.t_min) / -p.beta).min(cap);
    let first = (lo / res - 1e-9).ceil().max(0.0) as u64;
    let mut k = first;
    loop {
        let qt = k as f64 * res;
        if qt > hi + 1e-12 {
            break;
        }
        q.push(qt);
        thermal_descend(p, res, free + p.beta * qt, q, out, limit, overflow);
        q.pop();
        k += 1;
    }
}

/// Lower bound on `R_DM` from the convex dual
/// `max_{z in P} H_n(z) - z . Q0 / n`, scaled back to totals; exact when every
/// set is convex and the iteration has converged.
pub fn convex_dual_dm(
    pop: &Population,
    rho: GridCostFunction,
    renewables: &[f64],
    iters: usize,
) -> Result<DirectControlResult> {
    let n = pop.len() as f64;
    let q0 = renewables.iter().map(|x| x / n).collect();
    let prob = PricingProblem::new(pop.clone(), rho, q0)?;
    let trace = prob.frank_wolfe(iters, StepRule::OpenLoop)?;
    Ok(DirectControlResult {
        value: n * trace.best_objective(),
        profiles: None,
        method: DmMethod::ConvexDual,
    })
}

/// Direct-control lower curve of the two-period example at price split
/// `(z, 1 - z)`; its maximum over `[0, 1]` is `R_DM`.
pub fn warmup_l(z: f64, params: &[(f64, f64)]) -> f64 {
    params
        .iter()
        .map(|&(a, b)| {
            let late = (1.0 - z) * b;
            let early = z * a;
            if late < early {
                late
            } else {
                early
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupU {
    pub u_plus: f64,
    pub u_minus: f64,
    pub u: f64,
}

/// Peak demand induced by the positive price `(z, 1 - z)` (`u_plus`) and by
/// the negative price `(-z, z - 1)` (`u_minus`); `R_PM` is the minimum over
/// `[0, 1]` of `u = min(u_plus, u_minus)`.
pub fn warmup_u(z: f64, params: &[(f64, f64)]) -> WarmupU {
    let peak = |first: &dyn Fn(f64, f64) -> bool| {
        let (mut early, mut late) = (0.0, 0.0);
        for &(a, b) in params {
            if first(a, b) {
                early += a;
            } else {
                late += b;
            }
        }
        f64::max(early, late)
    };
    let u_plus = peak(&|a, b| a * z <= b * (1.0 - z));
    let u_minus = peak(&|a, b| -a * z <= b * (-1.0 + z));
    WarmupU {
        u_plus,
        u_minus,
        u: u_plus.min(u_minus),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupGap {
    pub dm_value: f64,
    pub pm_value: f64,
    /// `(pm - dm) / dm`.
    pub relative_gap: f64,
    pub z_dm: f64,
    pub z_pm: f64,
}

/// `max L_n` and `min U_n` over an evenly spaced grid of `grid_size` points
/// in `[0, 1]`.
pub fn warmup_gap(params: &[(f64, f64)], grid_size: usize) -> Result<WarmupGap> {
    if grid_size < 2 {
        return Err(Error::InvalidParameters("grid needs at least two points".into()));
    }
    let mut best_l = (f64::NEG_INFINITY, 0.0);
    let mut best_u = (f64::INFINITY, 0.0);
    for i in 0..grid_size {
        let z = i as f64 / (grid_size - 1) as f64;
        let l = warmup_l(z, params);
        if l > best_l.0 {
            best_l = (l, z);
        }
        let u = warmup_u(z, params).u;
        if u < best_u.0 {
            best_u = (u, z);
        }
    }
    if !(best_l.0 > 0.0) {
        return Err(Error::DegenerateParams);
    }
    Ok(WarmupGap {
        dm_value: best_l.0,
        pm_value: best_u.0,
        relative_gap: (best_u.0 - best_l.0) / best_l.0,
        z_dm: best_l.1,
        z_pm: best_u.1,
    })
}

/// The warm-up direct-control value as a [`DirectControlResult`].
pub fn warmup_dm(params: &[(f64, f64)], grid_size: usize) -> Result<DirectControlResult> {
    Ok(DirectControlResult {
        value: warmup_gap(params, grid_size)?.dm_value,
        profiles: None,
        method: DmMethod::WarmupClosedForm,
    })
}
