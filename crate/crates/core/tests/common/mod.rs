#![allow(dead_code)]

use dr_core::sets::ThermalParams;
use dr_core::{GridCostFunction, IndifferenceSet};
use proptest::prelude::*;

pub fn price(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, d)
}

fn singleton(d: usize) -> BoxedStrategy<IndifferenceSet> {
    prop::collection::vec(0.0..5.0f64, d)
        .prop_map(|q| IndifferenceSet::singleton(q).unwrap())
        .boxed()
}

fn ev(d: usize) -> BoxedStrategy<IndifferenceSet> {
    (1..=d)
        .prop_flat_map(|deadline| (0.0..60.0f64, 0..deadline, Just(deadline)))
        .prop_map(move |(total, start, deadline)| IndifferenceSet::ev_window(total, start, deadline, d).unwrap())
        .boxed()
}

fn appliance(d: usize) -> BoxedStrategy<IndifferenceSet> {
    (0.0..5.0f64, prop::collection::vec(any::<bool>(), d), 0..d)
        .prop_map(move |(energy, mask, fallback)| {
            let mut periods: Vec<usize> = (0..d).filter(|&t| mask[t]).collect();
            if periods.is_empty() {
                periods.push(fallback);
            }
            IndifferenceSet::appliance(energy, periods, d).unwrap()
        })
        .boxed()
}

pub fn thermal_params(d: usize) -> impl Strategy<Value = ThermalParams> {
    (
        0.05..0.1f64,
        -0.5..-0.25f64,
        prop::collection::vec(26.0..36.0f64, d),
        20.0..25.0f64,
    )
        .prop_map(|(alpha, beta, t_out, t_init)| ThermalParams::new(alpha, beta, t_out, t_init, 20.0, 25.0).unwrap())
}

fn thermal(d: usize) -> BoxedStrategy<IndifferenceSet> {
    thermal_params(d)
        .prop_map(|p| IndifferenceSet::thermal(p).unwrap())
        .boxed()
}

fn segment() -> BoxedStrategy<IndifferenceSet> {
    (0.0..3.0f64, 0.0..3.0f64)
        .prop_map(|(a, b)| IndifferenceSet::segment(a, b).unwrap())
        .boxed()
}

/// A set of one of the basic kinds over `d` periods.
pub fn basic_set(d: usize) -> BoxedStrategy<IndifferenceSet> {
    if d == 2 {
        prop_oneof![singleton(d), ev(d), appliance(d), thermal(d), segment()].boxed()
    } else {
        prop_oneof![singleton(d), ev(d), appliance(d), thermal(d)].boxed()
    }
}

/// A basic set or a sum of two.
pub fn any_set(d: usize) -> BoxedStrategy<IndifferenceSet> {
    prop_oneof![
        3 => basic_set(d),
        1 => (basic_set(d), basic_set(d)).prop_map(|(a, b)| IndifferenceSet::minkowski(vec![a, b]).unwrap()),
    ]
    .boxed()
}

pub fn set_and_prices(n_prices: usize) -> impl Strategy<Value = (IndifferenceSet, Vec<Vec<f64>>)> {
    (2usize..=5).prop_flat_map(move |d| (any_set(d), prop::collection::vec(price(d), n_prices)))
}

pub fn cost_function() -> impl Strategy<Value = GridCostFunction> {
    prop_oneof![
        Just(GridCostFunction::Peak),
        (1.0..6.0f64).prop_map(|kappa| GridCostFunction::LpNorm { kappa }),
        Just(GridCostFunction::LpNorm { kappa: 1.0 }),
        Just(GridCostFunction::LpNorm { kappa: f64::INFINITY }),
        (1.0..6.0f64).prop_map(|s| GridCostFunction::PositivePartLp { s }),
        Just(GridCostFunction::PositivePartLp { s: f64::INFINITY }),
        (1.0..4.0f64, 0.0..2.0f64).prop_map(|(kappa, lambda)| GridCostFunction::RampPenalized { kappa, lambda }),
    ]
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub mod props;
