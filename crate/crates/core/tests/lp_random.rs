use dr_core::lp::{solve_lp, LinearProgram, LpStatus};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when it is (numerically) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum over every basic solution of a box-bounded program: each vertex
/// makes all equalities and `m - #eq` of the inequalities active.
fn vertex_minimum(lp: &LinearProgram) -> Option<f64> {
    let m = lp.num_vars();
    let mut ineq: Vec<(Vec<f64>, f64)> = lp.ub_matrix.iter().cloned().zip(lp.ub_rhs.iter().copied()).collect();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        ineq.push((e.clone(), hi));
        e[j] = -1.0;
        ineq.push((e, -lo));
    }
    let free = m - lp.eq_rhs.len();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; free];
    fn combos(k: usize, start: usize, n: usize, pick: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
        if k == pick.len() {
            out(pick);
            return;
        }
        for i in start..n {
            pick[k] = i;
            combos(k + 1, i + 1, n, pick, out);
        }
    }
    combos(0, 0, ineq.len(), &mut pick, &mut |idx| {
        let mut a = lp.eq_matrix.clone();
        let mut b = lp.eq_rhs.clone();
        for &i in idx {
            a.push(ineq[i].0.clone());
            b.push(ineq[i].1);
        }
        if let Some(x) = solve_square(a, b) {
            if lp.max_violation(&x) <= 1e-9 {
                let v = dot(&lp.objective, &x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    });
    best
}

fn small_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=3)
        .prop_flat_map(|m| {
            let row = prop::collection::vec(-3.0..3.0f64, m);
            (
                prop::collection::vec(-2.0..2.0f64, m),
                prop::collection::vec((row.clone(), -4.0..4.0f64), 0..=4),
                prop::collection::vec((row, -2.0..2.0f64), 0..=1.min(m - 1)),
            )
        })
        .prop_map(|(c, ubs, eqs)| {
            let m = c.len();
            let mut lp = LinearProgram::new(c);
            for j in 0..m {
                lp.set_bounds(j, -5.0, 5.0);
            }
            for (row, rhs) in ubs {
                lp.add_ub(row, rhs);
            }
            for (row, rhs) in eqs {
                lp.add_eq(row, rhs);
            }
            lp
        })
}

#[test]
fn small_programs_match_vertex_enumeration() {
    runner(1000)
        .run(&small_lp(), |lp| {
            let sol = solve_lp(&lp).unwrap();
            match vertex_minimum(&lp) {
                Some(v) => {
                    prop_assert_eq!(sol.status, LpStatus::Optimal);
                    let got = sol.objective_value.unwrap();
                    prop_assert!((got - v).abs() <= 1e-6 * (1.0 + v.abs()), "simplex {got}, vertices {v}");
                    prop_assert!(lp.max_violation(sol.point.as_ref().unwrap()) <= 1e-7);
                }
                None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            }
            Ok(())
        })
        .unwrap();
}

/// Feasible by construction: every row is slack at a random interior point.
fn large_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=50, 0usize..=50, 0usize..=5)
        .prop_flat_map(|(m, n_ub, n_eq)| {
            let row = prop::collection::vec(-1.0..1.0f64, m);
            (
                prop::collection::vec(-1.0..1.0f64, m),
                prop::collection::vec(0.0..4.0f64, m),
                prop::collection::vec((row.clone(), 0.0..1.0f64), n_ub),
                prop::collection::vec(row, n_eq.min(m)),
                prop::collection::vec(prop::option::weighted(0.7, 5.0..10.0f64), m),
            )
        })
        .prop_map(|(c, x0, ubs, eqs, uppers)| {
            let mut lp = LinearProgram::new(c);
            for (j, u) in uppers.into_iter().enumerate() {
                lp.set_bounds(j, 0.0, u.unwrap_or(f64::INFINITY));
            }
            for (row, slack) in ubs {
                let rhs = dot(&row, &x0) + slack;
                lp.add_ub(row, rhs);
            }
            for row in eqs {
                let rhs = dot(&row, &x0);
                lp.add_eq(row, rhs);
            }
            // Keep the program bounded.
            let m = x0.len();
            lp.add_ub(vec![1.0; m], x0.iter().sum::<f64>() + 10.0);
            lp
        })
}

#[test]
fn random_programs_terminate_deterministically() {
    runner(1000)
        .run(&large_lp(), |lp| {
            let sol = solve_lp(&lp).unwrap();
            prop_assert_eq!(sol.status, LpStatus::Optimal);
            let x = sol.point.clone().unwrap();
            prop_assert!(lp.max_violation(&x) <= 1e-7, "violation {}", lp.max_violation(&x));
            let value = sol.objective_value.unwrap();
            prop_assert!((value - dot(&lp.objective, &x)).abs() <= 1e-9 * (1.0 + value.abs()));
            prop_assert_eq!(&solve_lp(&lp).unwrap(), &sol);

            let mut cut = lp.clone();
            cut.add_eq(lp.objective.clone(), value);
            let again = solve_lp(&cut).unwrap();
            prop_assert_eq!(again.status, LpStatus::Optimal);
            prop_assert!((again.objective_value.unwrap() - value).abs() <= 1e-6 * (1.0 + value.abs()));
            Ok(())
        })
        .unwrap();
}
