//! First-order optimal pricing.
//!
//! The grid looks for prices `z` in the dual set `P` of its cost function
//! maximizing `H_n(z) - z . q0`, where `H_n` is the population's average
//! minimal spending and `q0` the per-consumer renewable supply. The objective
//! is concave and its supergradient at `z` is the average consumption the
//! HEMS report at `z`, minus `q0`. Frank-Wolfe only needs that gradient and
//! the dual linear-maximization oracle, so it never leaves `P`.
//!
//! All quantities here are per consumer: multiply by `n` to get totals.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::GridCostFunction;
use crate::error::{Error, Result};
use crate::meanfield::Population;
use crate::sets::DAY;
use crate::vecops::{add_assign, dot, norm2, sub};

/// Revenue below this is treated as zero when rescaling prices.
pub const MIN_REVENUE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PricingProblem {
    pub pop: Population,
    pub rho: GridCostFunction,
    /// Renewable production per consumer and period.
    pub q0: Vec<f64>,
}

/// Objective, average response and supergradient at one price vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub mean_cost: f64,
    pub mean_consumption: Vec<f64>,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `gamma_k = 2 / (k + 2)`.
    OpenLoop,
    Constant(f64),
}

impl StepRule {
    pub fn gamma(&self, k: usize) -> f64 {
        match *self {
            Self::OpenLoop => 2.0 / (k as f64 + 2.0),
            Self::Constant(g) => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub k: usize,
    pub z: Vec<f64>,
    pub objective: f64,
    /// `(s_k - z_k) . g_k`, the Frank-Wolfe certificate.
    pub fw_gap: f64,
    /// Best objective seen up to and including iteration `k`.
    pub best_objective: f64,
    /// `rho(qbar(z_k) - q0)` for the queried consumers.
    pub realized_cost: f64,
    /// Index into the batch schedule, for stochastic runs.
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace {
    pub iterates: Vec<TraceEntry>,
    pub final_z: Vec<f64>,
}

impl OptimizerTrace {
    pub fn best_objective(&self) -> f64 {
        self.iterates.last().map_or(f64::NEG_INFINITY, |e| e.best_objective)
    }

    /// The iterate whose induced demand has the lowest grid cost, earliest
    /// on ties.
    pub fn lowest_cost(&self) -> Option<&TraceEntry> {
        self.iterates
            .iter()
            .fold(None, |acc: Option<&TraceEntry>, e| match acc {
                Some(b) if b.realized_cost <= e.realized_cost => Some(b),
                _ => Some(e),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `z . (qbar(z) - q0) - dm_value`.
    pub delta: f64,
    /// `rho(qbar(z) - q0) - dm_value`: excess grid cost of pricing at `z`.
    pub realized_gap: f64,
    /// `|rho(qbar(z) - q0) - (H(z) - z . q0)|`; zero at a mean-field optimum.
    pub duality_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPrice {
    pub price: Vec<f64>,
    pub trace: OptimizerTrace,
}

impl PeriodicPrice {
    /// Middle day of the iterate with the lowest realized grid cost over the
    /// tripled horizon.
    pub fn lowest_cost_price(&self) -> Vec<f64> {
        let z = self.trace.lowest_cost().map_or(&self.trace.final_z, |e| &e.z);
        z[DAY..2 * DAY].to_vec()
    }
}

impl PricingProblem {
    pub fn new(pop: Population, rho: GridCostFunction, q0: Vec<f64>) -> Result<Self> {
        rho.validate()?;
        if q0.len() != pop.horizon() {
            return Err(Error::HorizonMismatch {
                expected: pop.horizon(),
                got: q0.len(),
            });
        }
        Ok(Self { pop, rho, q0 })
    }

    pub fn horizon(&self) -> usize {
        self.pop.horizon()
    }

    /// Evaluates the members listed in `batch` (all members when `None`).
    fn evaluate_on(&self, z: &[f64], batch: Option<&[usize]>) -> Result<Evaluation> {
        let d = self.horizon();
        if z.len() != d {
            return Err(Error::HorizonMismatch { expected: d, got: z.len() });
        }
        let sets = self.pop.sets();
        let mut mean = vec![0.0; d];
        let mut cost = 0.0;
        let mut count = 0usize;
        let mut visit = |i: usize| -> Result<()> {
            let r = sets[i].hems_respond(z)?;
            add_assign(&mut mean, &r.profile);
            cost += r.cost;
            count += 1;
            Ok(())
        };
        match batch {
            Some(idx) => idx.iter().try_for_each(|&i| visit(i))?,
            None => (0..sets.len()).try_for_each(&mut visit)?,
        }
        let inv = 1.0 / count as f64;
        for m in &mut mean {
            *m *= inv;
        }
        let mean_cost = cost * inv;
        let gradient = sub(&mean, &self.q0);
        Ok(Evaluation {
            objective: mean_cost - dot(z, &self.q0),
            mean_cost,
            mean_consumption: mean,
            gradient,
        })
    }

    /// `H_n(z) - z . q0` and the supergradient `qbar(z) - q0`.
    pub fn objective_and_gradient(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let e = self.evaluate(z)?;
        Ok((e.objective, e.gradient))
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<Evaluation> {
        self.evaluate_on(z, None)
    }

    /// Grid cost per consumer when every HEMS responds to `p`:
    /// `rho(qbar(p) - q0)`.
    pub fn realized_cost(&self, p: &[f64]) -> Result<f64> {
        let e = self.evaluate(p)?;
        Ok(self.rho.evaluate(&e.gradient))
    }

    /// Per-consumer revenue `(qbar(p) - q0) . p`.
    pub fn revenue(&self, p: &[f64]) -> Result<f64> {
        let e = self.evaluate(p)?;
        Ok(dot(&e.gradient, p))
    }

    /// Deterministic Frank-Wolfe over the dual set, starting from
    /// `dual_lmo(1)`. `final_z` is the best iterate.
    pub fn frank_wolfe(&self, iters: usize, step: StepRule) -> Result<OptimizerTrace> {
        let mut trace = self.run(vec![None; iters].into_iter(), step)?;
        let best = trace
            .iterates
            .iter()
            .fold(None::<&TraceEntry>, |acc, e| match acc {
                Some(b) if b.objective >= e.objective => Some(b),
                _ => Some(e),
            })
            .expect("at least one iterate");
        trace.final_z = best.z.clone();
        Ok(trace)
    }

    /// Frank-Wolfe driven by batch-mean responses: step `k` queries only the
    /// consumers in `batches[k]`. `final_z` is the last iterate.
    pub fn stochastic_query_loop(&self, batches: &[Vec<usize>], step: StepRule) -> Result<OptimizerTrace> {
        let n = self.pop.len();
        for (k, b) in batches.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::EmptyBatch(k));
            }
            if let Some(&index) = b.iter().find(|&&i| i >= n) {
                return Err(Error::BatchIndexOutOfRange { batch: k, index, n });
            }
        }
        self.run(batches.iter().map(|b| Some(b.as_slice())), step)
    }

    fn run<'a>(
        &self,
        schedule: impl ExactSizeIterator<Item = Option<&'a [usize]>>,
        step: StepRule,
    ) -> Result<OptimizerTrace> {
        if schedule.len() == 0 {
            return Err(Error::InvalidParameters("need at least one iteration".into()));
        }
        let d = self.horizon();
        let mut z = self.rho.dual_lmo(&vec![1.0; d]);
        let mut best = f64::NEG_INFINITY;
        let mut iterates = Vec::with_capacity(schedule.len());
        for (k, batch) in schedule.enumerate() {
            let e = self.evaluate_on(&z, batch)?;
            if let Some(j) = e.gradient.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    iteration: k,
                    detail: format!("component {j} is {} at z = {:?}", e.gradient[j], z),
                });
            }
            let s = self.rho.dual_lmo(&e.gradient);
            let fw_gap = dot(&sub(&s, &z), &e.gradient);
            best = best.max(e.objective);
            iterates.push(TraceEntry {
                k,
                z: z.clone(),
                objective: e.objective,
                fw_gap,
                best_objective: best,
                realized_cost: self.rho.evaluate(&e.gradient),
                batch: batch.map(|_| k),
            });
            let gamma = step.gamma(k);
            for (zj, sj) in z.iter_mut().zip(&s) {
                *zj += gamma * (sj - *zj);
            }
        }
        Ok(OptimizerTrace { iterates, final_z: z })
    }

    /// Rescales `z` so that per-consumer revenue equals `target`; consumption
    /// is unchanged since HEMS only react to relative prices.
    pub fn scale_to_revenue(&self, z: &[f64], target: f64) -> Result<Vec<f64>> {
        let revenue = self.revenue(z)?;
        if revenue <= MIN_REVENUE {
            return Err(Error::NonpositiveRevenue(revenue));
        }
        Ok(z.iter().map(|x| x * target / revenue).collect())
    }

    /// Suboptimality of pricing at `z` against a direct-control value
    /// `dm_value` (per consumer, same scaling as the objective).
    pub fn suboptimality_gap(&self, z: &[f64], dm_value: f64) -> Result<GapReport> {
        let e = self.evaluate(z)?;
        let realized = self.rho.evaluate(&e.gradient);
        Ok(GapReport {
            delta: dot(z, &e.gradient) - dm_value,
            realized_gap: realized - dm_value,
            duality_residual: (realized - e.objective).abs(),
        })
    }

    /// Optimizes over three copies of the day and returns the middle day's
    /// prices, so the first and last hours of the result line up.
    pub fn periodic_price(&self, iters: usize) -> Result<PeriodicPrice> {
        if self.horizon() != DAY {
            return Err(Error::HorizonNotDaily(self.horizon()));
        }
        let tripled = PricingProblem::new(self.pop.tiled(3)?, self.rho, self.q0.repeat(3))?;
        let trace = tripled.frank_wolfe(iters, StepRule::OpenLoop)?;
        Ok(PeriodicPrice {
            price: trace.final_z[DAY..2 * DAY].to_vec(),
            trace,
        })
    }

    /// Largest change in average consumption between `z` and `probes` random
    /// perturbations of relative size `eps`. Large values flag prices where
    /// the HEMS responses are not unique (the objective is not differentiable).
    pub fn nonuniqueness_probe(&self, z: &[f64], eps: f64, probes: usize, seed: u64) -> Result<f64> {
        let base = self.evaluate(z)?.mean_consumption;
        let scale = eps * norm2(z).max(1.0);
        let mut worst: f64 = 0.0;
        for u in crate::meanfield::sample_directions(z.len(), probes, seed) {
            let zp: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + scale * b).collect();
            let q = self.evaluate(&zp)?.mean_consumption;
            worst = worst.max(norm2(&sub(&q, &base)));
        }
        Ok(worst)
    }
}

/// `steps` batches of `size` distinct consumers drawn uniformly without
/// replacement from `0..n`, each sorted.
pub fn random_batches(n: usize, size: usize, steps: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| {
            let mut b = sample(&mut rng, n, size.min(n)).into_vec();
            b.sort_unstable();
            b
        })
        .collect()
}

/// Batches that visit consumers one at a time in order, `k mod n`.
pub fn cyclic_singletons(n: usize, steps: usize) -> Vec<Vec<usize>> {
    (0..steps).map(|k| vec![k % n]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::IndifferenceSet;

    fn singletons(qs: &[&[f64]]) -> Population {
        Population::new(qs.iter().map(|q| IndifferenceSet::singleton(q.to_vec()).unwrap()).collect()).unwrap()
    }

    #[test]
    fn singleton_objective_and_gradient() {
        let prob = PricingProblem::new(singletons(&[&[1.0, 2.0, 0.5]]), GridCostFunction::Peak, vec![0.5, 0.5, 0.0]).unwrap();
        let (obj, g) = prob.objective_and_gradient(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(g, vec![0.5, 1.5, 0.5]);
        assert!((obj - (0.1 + 0.45 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_gradient_is_constant() {
        let prob = PricingProblem::new(singletons(&[&[1.0, 0.0], &[0.0, 1.0]]), GridCostFunction::Peak, vec![0.0; 2]).unwrap();
        for z in [[1.0, 0.0], [0.3, 0.7], [-2.0, 5.0]] {
            assert_eq!(prob.objective_and_gradient(&z).unwrap().1, vec![0.5, 0.5]);
        }
        let trace = prob.frank_wolfe(5, StepRule::OpenLoop).unwrap();
        assert!((trace.best_objective() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linear_objective_solved_in_one_step() {
        let q = [0.4, 1.3, 0.9];
        let prob = PricingProblem::new(
            singletons(&[&q]),
            GridCostFunction::PositivePartLp { s: f64::INFINITY },
            vec![0.0; 3],
        )
        .unwrap();
        let trace = prob.frank_wolfe(3, StepRule::OpenLoop).unwrap();
        // z_1 = s_0 exactly since gamma_0 = 1.
        assert_eq!(trace.iterates[1].objective, 1.3);
        assert_eq!(trace.iterates[1].fw_gap, 0.0);
        let gap = prob.suboptimality_gap(&trace.final_z, 1.3).unwrap();
        assert!(gap.delta.abs() < 1e-8 && gap.realized_gap.abs() < 1e-8);
    }

    #[test]
    fn revenue_scaling() {
        let prob = PricingProblem::new(singletons(&[&[2.0, 3.0]]), GridCostFunction::Peak, vec![0.0; 2]).unwrap();
        let z = [1.0, 1.0];
        assert_eq!(prob.revenue(&z).unwrap(), 5.0);
        assert_eq!(prob.scale_to_revenue(&z, 10.0).unwrap(), vec![2.0, 2.0]);
        assert_eq!(prob.scale_to_revenue(&z, 5.0).unwrap(), z.to_vec());
        let zero = PricingProblem::new(singletons(&[&[1.0, 1.0]]), GridCostFunction::Peak, vec![1.0, 1.0]).unwrap();
        assert!(matches!(zero.scale_to_revenue(&z, 1.0), Err(Error::NonpositiveRevenue(_))));
    }

    #[test]
    fn batch_errors() {
        let prob = PricingProblem::new(singletons(&[&[1.0], &[2.0]]), GridCostFunction::Peak, vec![0.0]).unwrap();
        assert!(matches!(prob.stochastic_query_loop(&[vec![0], vec![]], StepRule::OpenLoop), Err(Error::EmptyBatch(1))));
        assert!(matches!(
            prob.stochastic_query_loop(&[vec![2]], StepRule::OpenLoop),
            Err(Error::BatchIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn single_consumer_batch_gradient() {
        let prob = PricingProblem::new(singletons(&[&[1.0, 2.0], &[5.0, 0.0]]), GridCostFunction::Peak, vec![0.5, 0.5]).unwrap();
        let e = prob.evaluate_on(&[0.5, 0.5], Some(&[0])).unwrap();
        assert_eq!(e.gradient, vec![0.5, 1.5]);
    }

    #[test]
    fn periodic_price_needs_a_day() {
        let prob = PricingProblem::new(singletons(&[&[1.0, 2.0]]), GridCostFunction::Peak, vec![0.0; 2]).unwrap();
        assert!(matches!(prob.periodic_price(10), Err(Error::HorizonNotDaily(2))));
    }

    #[test]
    fn mismatched_renewables_rejected() {
        assert!(PricingProblem::new(singletons(&[&[1.0, 2.0]]), GridCostFunction::Peak, vec![0.0; 3]).is_err());
    }

    #[test]
    fn batch_helpers() {
        let b = random_batches(10, 3, 4, 9);
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|x| x.len() == 3 && x.windows(2).all(|w| w[0] < w[1]) && x[2] < 10));
        assert_eq!(cyclic_singletons(3, 4), vec![vec![0], vec![1], vec![2], vec![0]]);
    }
}
