//! Randomized properties shared by the property tests and the acceptance run.

use super::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

const TOL: f64 = 1e-7;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S, F>(cases: u32, strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn h(set: &IndifferenceSet, p: &[f64]) -> Result<f64, TestCaseError> {
    set.min_cost(p).map_err(|e| TestCaseError::fail(e.to_string()))
}

pub fn homogeneity(cases: u32) -> Result<(), String> {
    run(cases, (set_and_prices(1), 0.01..100.0f64), |((set, ps), lambda)| {
        let p = &ps[0];
        let scaled: Vec<f64> = p.iter().map(|x| lambda * x).collect();
        let lhs = h(&set, &scaled)?;
        let rhs = lambda * h(&set, p)?;
        prop_assert!(close(lhs, rhs, TOL), "h(lp) = {lhs}, l h(p) = {rhs}");
        Ok(())
    })
}

pub fn concavity(cases: u32) -> Result<(), String> {
    run(cases, (set_and_prices(2), 0.0..=1.0f64), |((set, ps), t)| {
        let mix: Vec<f64> = ps[0].iter().zip(&ps[1]).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = h(&set, &mix)?;
        let rhs = t * h(&set, &ps[0])? + (1.0 - t) * h(&set, &ps[1])?;
        prop_assert!(lhs >= rhs - TOL * (1.0 + rhs.abs()), "h(mix) = {lhs} < {rhs}");
        Ok(())
    })
}

pub fn subgradient(cases: u32) -> Result<(), String> {
    run(cases, set_and_prices(2), |(set, ps)| {
        let r = set.hems_respond(&ps[0]).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(set.contains(&r.profile, 1e-6).unwrap(), "response outside the set");
        prop_assert!(close(r.cost, dot(&ps[0], &r.profile), 1e-9));
        let other = h(&set, &ps[1])?;
        let bound = r.cost + dot(&ps[1], &r.profile) - dot(&ps[0], &r.profile);
        prop_assert!(other <= bound + TOL * (1.0 + bound.abs()), "h(p') = {other} > {bound}");
        Ok(())
    })
}

pub fn minkowski_additivity(cases: u32) -> Result<(), String> {
    let strategy = (2usize..=5).prop_flat_map(|d| (basic_set(d), basic_set(d), price(d)));
    run(cases, strategy, |(a, b, p)| {
        let sum = IndifferenceSet::minkowski(vec![a.clone(), b.clone()]).unwrap();
        let lhs = h(&sum, &p)?;
        let rhs = h(&a, &p)? + h(&b, &p)?;
        prop_assert!(close(lhs, rhs, 1e-9), "{lhs} != {rhs}");
        Ok(())
    })
}

pub fn argmin_scale_invariance(cases: u32) -> Result<(), String> {
    run(cases, (set_and_prices(1), -4i32..=4, 0.01..100.0f64), |((set, ps), k, lambda)| {
        let p = &ps[0];
        let base = set.hems_respond(p).unwrap();
        let pow: Vec<f64> = p.iter().map(|x| x * 2f64.powi(k)).collect();
        let q = set.hems_respond(&pow).unwrap().profile;
        for (x, y) in q.iter().zip(&base.profile) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{q:?} != {:?}", base.profile);
        }
        let scaled: Vec<f64> = p.iter().map(|x| x * lambda).collect();
        let q = set.hems_respond(&scaled).unwrap().profile;
        let cost = dot(p, &q);
        prop_assert!(close(cost, base.cost, TOL), "p . q(lp) = {cost}, h(p) = {}", base.cost);
        Ok(())
    })
}

pub fn lmo_closure_and_membership(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=8).prop_flat_map(|d| {
        (cost_function(), price(d), prop::collection::vec(price(d), 8))
    });
    run(cases, strategy, |(rho, g, probes)| {
        let z = rho.dual_lmo(&g);
        let value = dot(&z, &g);
        let target = rho.evaluate(&g);
        prop_assert!(close(value, target, 1e-9), "z . g = {value}, rho(g) = {target}");
        prop_assert!(rho.dual_contains(&z, &probes, 1e-9 * (1.0 + target.abs())), "lmo output outside P");
        Ok(())
    })
}

pub fn lipschitz_bound(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=8).prop_flat_map(|d| (cost_function(), price(d), price(d)));
    run(cases, strategy, |(rho, x, y)| {
        let d = x.len();
        let l = rho.lipschitz_bound(d);
        let diff = (rho.evaluate(&x) - rho.evaluate(&y)).abs();
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(diff <= l * dist + 1e-9, "|rho(x) - rho(y)| = {diff} > {l} * {dist}");
        let z = rho.dual_lmo(&x);
        let radius = dot(&z, &z).sqrt();
        prop_assert!(radius <= l + 1e-9, "||lmo|| = {radius} > {l}");
        Ok(())
    })
}

pub type Property = fn(u32) -> Result<(), String>;

pub const SUITE: [(&str, Property); 7] = [
    ("h homogeneity", homogeneity),
    ("h concavity", concavity),
    ("subgradient inequality", subgradient),
    ("minkowski additivity", minkowski_additivity),
    ("argmin scale invariance", argmin_scale_invariance),
    ("lmo closure and membership", lmo_closure_and_membership),
    ("lipschitz bound", lipschitz_bound),
];
