//! Day-ahead pricing for a neighbourhood of air-conditioned houses with
//! rooftop solar.
//!
//! Prices are optimized against the average summer day, rescaled so the
//! utility collects the same revenue as under the flat rate `1`, and compared
//! with the flat rate on grid cost, net-demand variability and comfort. The
//! same prices can then be replayed on freshly sampled days.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::GridCostFunction;
use crate::error::Result;
use crate::meanfield::Population;
use crate::pricing::{OptimizerTrace, PricingProblem};
use crate::scenario::{
    build_population, fit_statistics, renewable_scale, synthetic_renewable_days, synthetic_temperature_days,
    DaySeries, GaussianDaySampler, PopulationSpec, SeriesKind, SeriesStatistics,
};
use crate::sets::{IndifferenceSet, DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyConfig {
    pub population: PopulationSpec,
    pub iterations: usize,
    /// Exponents `s` of the positive-part grid costs `||(Q - Q0)_+||_s`.
    pub exponents: Vec<f64>,
    pub weather_days: usize,
    pub weather_seed: u64,
    /// Midday renewable production as a fraction of midday flat-rate demand.
    pub renewable_fraction: f64,
    pub renewable_hour: usize,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            population: PopulationSpec::default(),
            iterations: 2000,
            exponents: vec![1.0, 2.0, 4.0, f64::INFINITY],
            weather_days: 31,
            weather_seed: 2023,
            renewable_fraction: 1.2,
            renewable_hour: 12,
        }
    }
}

/// Behaviour of the population under one price vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceOutcome {
    pub price: Vec<f64>,
    /// Average consumption minus per-consumer renewables.
    pub net_demand: Vec<f64>,
    /// Per-consumer revenue `net_demand . price`.
    pub revenue: f64,
    /// Indoor temperature of every house, hour by hour.
    pub indoor: Vec<Vec<f64>>,
}

impl PriceOutcome {
    pub fn net_demand_variance(&self) -> f64 {
        variance(&self.net_demand)
    }

    pub fn grid_cost(&self, s: f64) -> f64 {
        GridCostFunction::PositivePartLp { s }.evaluate(&self.net_demand)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPrice {
    pub s: f64,
    pub outcome: PriceOutcome,
    pub flat_cost: f64,
    pub dynamic_cost: f64,
    /// `1 - dynamic_cost / flat_cost`.
    pub savings: f64,
    pub final_fw_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyReport {
    pub temperature: SeriesStatistics,
    pub renewable: SeriesStatistics,
    pub t_out: Vec<f64>,
    /// Per-consumer renewable production.
    pub q0: Vec<f64>,
    pub renewable_scale: f64,
    pub flat: PriceOutcome,
    pub dynamic: Vec<DynamicPrice>,
}

/// Response to `price` repeated over three days, reported for the middle
/// day so that neither end of the horizon distorts it.
pub fn outcome(pop: &Population, q0: &[f64], price: &[f64]) -> Result<PriceOutcome> {
    let d = price.len();
    let tripled = pop.tiled(3)?;
    let prob = PricingProblem::new(tripled.clone(), GridCostFunction::Peak, q0.repeat(3))?;
    let z = price.repeat(3);
    let e = prob.evaluate(&z)?;
    let mut indoor = Vec::with_capacity(pop.len());
    for set in tripled.sets() {
        if let IndifferenceSet::ThermalHvac(p) = set {
            let q = set.hems_respond(&z)?.profile;
            indoor.push(p.indoor_trajectory(&q)?[d..2 * d].to_vec());
        }
    }
    let net_demand = e.gradient[d..2 * d].to_vec();
    Ok(PriceOutcome {
        price: price.to_vec(),
        revenue: crate::vecops::dot(&net_demand, price),
        net_demand,
        indoor,
    })
}

/// Middle day of the Frank-Wolfe iterate with the lowest grid cost when
/// deployed as a price that repeats every day.
pub fn best_deployable(pop: &Population, q0: &[f64], rho: GridCostFunction, trace: &OptimizerTrace) -> Result<Vec<f64>> {
    let prob = PricingProblem::new(pop.tiled(3)?, rho, q0.repeat(3))?;
    let mut best = (f64::INFINITY, trace.final_z[DAY..2 * DAY].to_vec());
    for entry in &trace.iterates {
        let day = &entry.z[DAY..2 * DAY];
        let net = prob.evaluate(&day.repeat(3))?.gradient;
        let cost = rho.evaluate(&net[DAY..2 * DAY]);
        if cost < best.0 {
            best = (cost, day.to_vec());
        }
    }
    Ok(best.1)
}

/// Multiplies `price` so that the middle-day revenue equals `target`.
fn scale_revenue(pop: &Population, q0: &[f64], price: &[f64], target: f64) -> Result<Vec<f64>> {
    let revenue = outcome(pop, q0, price)?.revenue;
    if revenue <= crate::pricing::MIN_REVENUE {
        return Err(crate::Error::NonpositiveRevenue(revenue));
    }
    Ok(price.iter().map(|p| p * target / revenue).collect())
}

/// Runs the study on synthetic weather and solar days.
pub fn run_case_study(cfg: &CaseStudyConfig) -> Result<CaseStudyReport> {
    let temps = synthetic_temperature_days(cfg.weather_days, cfg.weather_seed);
    let solar = synthetic_renewable_days(cfg.weather_days, cfg.weather_seed.wrapping_add(1));
    run_case_study_on(cfg, &temps, &solar)
}

/// Runs the study on recorded days; `weather_days` and `weather_seed` are
/// ignored.
pub fn run_case_study_on(cfg: &CaseStudyConfig, temps: &[DaySeries], solar: &[DaySeries]) -> Result<CaseStudyReport> {
    let temperature = fit_statistics(temps)?;
    let renewable = fit_statistics(solar)?;
    let t_out = temperature.mean.clone();
    let pop = build_population(
        &cfg.population,
        &DaySeries {
            values: t_out.clone(),
            label: "mean".into(),
        },
    )?;

    let flat_price = vec![1.0; DAY];
    let no_solar = outcome(&pop, &[0.0; DAY], &flat_price)?;
    let scale = renewable_scale(
        &no_solar.net_demand,
        &renewable.mean,
        cfg.renewable_hour,
        cfg.renewable_fraction,
    )?;
    let q0: Vec<f64> = renewable.mean.iter().map(|r| r * scale).collect();
    let flat = outcome(&pop, &q0, &flat_price)?;

    let mut dynamic = Vec::with_capacity(cfg.exponents.len());
    for &s in &cfg.exponents {
        let rho = GridCostFunction::PositivePartLp { s };
        let prob = PricingProblem::new(pop.clone(), rho, q0.clone())?;
        let periodic = prob.periodic_price(cfg.iterations)?;
        let price = scale_revenue(&pop, &q0, &best_deployable(&pop, &q0, rho, &periodic.trace)?, flat.revenue)?;
        let out = outcome(&pop, &q0, &price)?;
        let flat_cost = flat.grid_cost(s);
        let dynamic_cost = out.grid_cost(s);
        dynamic.push(DynamicPrice {
            s,
            flat_cost,
            dynamic_cost,
            savings: 1.0 - dynamic_cost / flat_cost,
            final_fw_gap: periodic.trace.iterates.last().map_or(f64::NAN, |e| e.fw_gap),
            outcome: out,
        });
    }

    Ok(CaseStudyReport {
        temperature,
        renewable,
        t_out,
        q0,
        renewable_scale: scale,
        flat,
        dynamic,
    })
}

/// Savings of each dynamic price on one sampled day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayEvaluation {
    pub label: String,
    pub savings: Vec<f64>,
}

/// Replays the report's prices on `n_days` days drawn from the fitted
/// weather and solar distributions. Houses keep their thermal parameters.
pub fn evaluate_days(cfg: &CaseStudyConfig, report: &CaseStudyReport, n_days: usize, seed: u64) -> Result<Vec<DayEvaluation>> {
    let weather = GaussianDaySampler::new(&report.temperature, SeriesKind::Temperature)?;
    let sun = GaussianDaySampler::new(&report.renewable, SeriesKind::Renewable)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat_price = vec![1.0; DAY];
    (0..n_days)
        .map(|k| {
            let label = format!("day-{:02}", k + 1);
            let t_out = weather.sample(&mut rng, label.clone());
            let q0: Vec<f64> = sun
                .sample(&mut rng, label.clone())
                .values
                .iter()
                .map(|r| r * report.renewable_scale)
                .collect();
            let pop = build_population(&cfg.population, &t_out)?;
            let flat = outcome(&pop, &q0, &flat_price)?;
            let savings = report
                .dynamic
                .iter()
                .map(|d| {
                    let out = outcome(&pop, &q0, &d.outcome.price)?;
                    Ok(1.0 - out.grid_cost(d.s) / flat.grid_cost(d.s))
                })
                .collect::<Result<_>>()?;
            Ok(DayEvaluation { label, savings })
        })
        .collect()
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
