//! Populations of random indifference sets.
//!
//! The Minkowski average of a population is never built explicitly: its
//! support function is the average of the members' support functions, and
//! Hausdorff distances between convex sets are sup-norm distances between
//! support functions on the unit sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sets::IndifferenceSet;
use crate::vecops::{dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    sets: Vec<IndifferenceSet>,
    horizon: usize,
}

impl Population {
    pub fn new(sets: Vec<IndifferenceSet>) -> Result<Self> {
        let Some(first) = sets.first() else {
            return Err(Error::InvalidParameters("population must be nonempty".into()));
        };
        let horizon = first.horizon();
        for s in &sets {
            if s.horizon() != horizon {
                return Err(Error::HorizonMismatch {
                    expected: horizon,
                    got: s.horizon(),
                });
            }
        }
        Ok(Self { sets, horizon })
    }

    pub fn sets(&self) -> &[IndifferenceSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_convex(&self) -> bool {
        self.sets.iter().all(IndifferenceSet::is_convex)
    }

    /// The first `n` members.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        Self::new(self.sets[..n.min(self.len())].to_vec())
    }

    pub fn tiled(&self, days: usize) -> Result<Self> {
        Self::new(self.sets.iter().map(|s| s.tiled(days)).collect::<Result<_>>()?)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.horizon {
            Ok(())
        } else {
            Err(Error::HorizonMismatch {
                expected: self.horizon,
                got: v.len(),
            })
        }
    }

    /// Support of the Minkowski average, `(1/n) sum_i delta(u; R_i)`, at a
    /// unit direction.
    pub fn average_support(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        if (norm2(u) - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameters(format!(
                "support direction must have unit length, got {}",
                norm2(u)
            )));
        }
        let mut total = 0.0;
        for s in &self.sets {
            total += s.support(u)?;
        }
        Ok(total / self.len() as f64)
    }

    /// Empirical average minimal spending `H_n(z) = (1/n) sum_i h(z; R_i)`.
    pub fn empirical_h(&self, z: &[f64]) -> Result<f64> {
        self.check(z)?;
        let mut total = 0.0;
        for s in &self.sets {
            total += s.min_cost(z)?;
        }
        Ok(total / self.len() as f64)
    }
}

/// `n` directions drawn uniformly from the unit sphere in `R^d`.
pub fn sample_directions(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm2(&v);
        if norm > 1e-12 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Lower estimate of the Hausdorff distance between two convex sets given
/// by their support functions: the largest support gap over `n_dirs` random
/// unit directions.
pub fn hausdorff_estimate<A, B>(a: A, b: B, d: usize, n_dirs: usize, seed: u64) -> Result<f64>
where
    A: Fn(&[f64]) -> Result<f64>,
    B: Fn(&[f64]) -> Result<f64>,
{
    if n_dirs == 0 {
        return Err(Error::InvalidParameters("need at least one direction".into()));
    }
    let mut best: f64 = 0.0;
    for u in sample_directions(d, n_dirs, seed) {
        best = best.max((a(&u)? - b(&u)?).abs());
    }
    Ok(best)
}

/// Distributions over indifference sets used for law-of-large-numbers runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSampler {
    /// Always the same singleton.
    Fixed(Vec<f64>),
    /// Two-period segments with `a, b ~ Unif[0, upper]` i.i.d.
    UniformSegment { upper: f64 },
    /// Houses with `alpha`, `beta` drawn uniformly; no closed-form mean set.
    UniformThermal {
        alpha: (f64, f64),
        beta: (f64, f64),
        t_out: Vec<f64>,
    },
}

impl SetSampler {
    pub fn horizon(&self) -> usize {
        match self {
            Self::Fixed(q) => q.len(),
            Self::UniformSegment { .. } => 2,
            Self::UniformThermal { t_out, .. } => t_out.len(),
        }
    }

    pub fn draw(&self, n: usize, seed: u64) -> Result<Vec<IndifferenceSet>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| match self {
                Self::Fixed(q) => IndifferenceSet::singleton(q.clone()),
                Self::UniformSegment { upper } => {
                    // Unif[0, upper] draws are positive almost surely; resample exact zeros.
                    let mut draw = || loop {
                        let x = rng.random::<f64>() * upper;
                        if x > 0.0 {
                            break x;
                        }
                    };
                    let a = draw();
                    let b = draw();
                    IndifferenceSet::segment(a, b)
                }
                Self::UniformThermal { alpha, beta, t_out } => {
                    let a = rng.random_range(alpha.0..=alpha.1);
                    let b = rng.random_range(beta.0..=beta.1);
                    crate::sets::ThermalParams::new(a, b, t_out.clone(), 24.0, 20.0, 25.0)
                        .and_then(IndifferenceSet::thermal)
                }
            })
            .collect()
    }

    /// Support function of `E[conv(R)]`, when it has a closed form.
    pub fn expected_support(&self, u: &[f64]) -> Result<f64> {
        match self {
            Self::Fixed(q) => Ok(dot(q, u)),
            Self::UniformSegment { upper } => Ok(upper * uniform_segment_support(u[0], u[1])),
            Self::UniformThermal { .. } => Err(Error::UnsupportedSampler("uniform thermal".into())),
        }
    }

    /// Mean-field minimal spending `H(z) = E[h(z; R)] = -E[delta(-z; R)]`.
    pub fn expected_h(&self, z: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = z.iter().map(|x| -x).collect();
        Ok(-self.expected_support(&neg)?)
    }
}

/// `E[max(x u1, y u2)]` for `x, y ~ Unif[0, 1]` independent: the support
/// function of the expected segment `{(w x, (1 - w) y)}` at `(u1, u2)`.
pub fn uniform_segment_support(u1: f64, u2: f64) -> f64 {
    match (u1 >= 0.0, u2 >= 0.0) {
        (true, true) => {
            let (hi, lo) = if u1 >= u2 { (u1, u2) } else { (u2, u1) };
            if hi == 0.0 {
                return 0.0;
            }
            let r = lo / hi;
            hi * (0.5 + r * r / 6.0)
        }
        (true, false) => u1 / 2.0,
        (false, true) => u2 / 2.0,
        (false, false) => {
            // max of two nonpositive terms = -min(x |u1|, y |u2|)
            let (a, b) = (-u1, -u2);
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            if hi == 0.0 {
                return 0.0;
            }
            let r = lo / hi;
            -(lo * (0.5 - r / 6.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnRow {
    pub n: usize,
    pub distance: f64,
}

/// Hausdorff estimates between the Minkowski average of the first `n`
/// draws and `E[conv(R)]`, for each `n` in `n_grid`.
pub fn lln_experiment(sampler: &SetSampler, n_grid: &[usize], n_dirs: usize, seed: u64) -> Result<Vec<LlnRow>> {
    let d = sampler.horizon();
    // Fail before drawing anything if there is no reference set.
    sampler.expected_support(&vec![0.0; d])?;
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let pop = Population::new(sampler.draw(n_max.max(1), seed)?)?;
    let dir_seed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    n_grid
        .iter()
        .map(|&n| {
            let prefix = pop.prefix(n)?;
            let distance = hausdorff_estimate(
                |u| prefix.average_support(u),
                |u| sampler.expected_support(u),
                d,
                n_dirs,
                dir_seed,
            )?;
            Ok(LlnRow { n, distance })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singleton(q: &[f64]) -> IndifferenceSet {
        IndifferenceSet::singleton(q.to_vec()).unwrap()
    }

    #[test]
    fn average_of_singletons() {
        let pop = Population::new(vec![singleton(&[1.0, 0.0]), singleton(&[0.0, 1.0])]).unwrap();
        assert_eq!(pop.average_support(&[1.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn copies_are_idempotent() {
        let s = IndifferenceSet::segment(1.5, 0.5).unwrap();
        let pop = Population::new(vec![s.clone(); 7]).unwrap();
        let u = [0.6, -0.8];
        assert!((pop.average_support(&u).unwrap() - s.support(&u).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn segment_population_support() {
        let params = [(0.3, 1.0), (1.7, 0.2), (0.9, 0.9)];
        let pop = Population::new(params.iter().map(|&(a, b)| IndifferenceSet::segment(a, b).unwrap()).collect()).unwrap();
        let mean_a = params.iter().map(|p| p.0).sum::<f64>() / 3.0;
        assert!((pop.average_support(&[1.0, 0.0]).unwrap() - mean_a).abs() < 1e-15);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let pop = Population::new(vec![singleton(&[1.0, 0.0])]).unwrap();
        assert!(pop.average_support(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn empirical_h_examples() {
        let pop = Population::new(vec![singleton(&[2.0, 3.0])]).unwrap();
        assert_eq!(pop.empirical_h(&[0.5, 1.0]).unwrap(), 4.0);
        assert_eq!(pop.empirical_h(&[0.0, 0.0]).unwrap(), 0.0);
        let pop = Population::new(vec![
            IndifferenceSet::segment(1.0, 2.0).unwrap(),
            IndifferenceSet::segment(2.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(pop.empirical_h(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_examples() {
        let seg = |u: &[f64]| Ok(u[0].max(0.0));
        let origin = |_: &[f64]| Ok(0.0);
        let ball = |_: &[f64]| Ok(1.0);
        assert_eq!(hausdorff_estimate(seg, seg, 2, 100, 1).unwrap(), 0.0);
        assert_eq!(hausdorff_estimate(origin, ball, 3, 10, 1).unwrap(), 1.0);
        assert!(hausdorff_estimate(seg, origin, 2, 10_000, 7).unwrap() >= 0.99);
        assert_eq!(
            hausdorff_estimate(seg, origin, 2, 500, 3).unwrap(),
            hausdorff_estimate(origin, seg, 2, 500, 3).unwrap()
        );
    }

    #[test]
    fn fixed_sampler_has_zero_distance() {
        let rows = lln_experiment(&SetSampler::Fixed(vec![1.0, 2.0, 0.5]), &[1, 10, 100], 200, 3).unwrap();
        assert!(rows.iter().all(|r| r.distance.abs() < 1e-12));
    }

    #[test]
    fn single_draw_deviates() {
        let rows = lln_experiment(&SetSampler::UniformSegment { upper: 2.0 }, &[1], 500, 11).unwrap();
        assert!(rows[0].distance > 0.0);
    }

    #[test]
    fn thermal_sampler_unsupported() {
        let s = SetSampler::UniformThermal {
            alpha: (0.05, 0.08),
            beta: (-0.35, -0.25),
            t_out: vec![30.0; 4],
        };
        assert!(matches!(lln_experiment(&s, &[10], 10, 1), Err(Error::UnsupportedSampler(_))));
    }
}
