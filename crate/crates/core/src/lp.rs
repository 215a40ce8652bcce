//! Dense two-phase simplex for small linear programs.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    c · x
//! subject to  A_eq x  = b_eq
//!             A_ub x <= b_ub
//!             l <= x <= u
//! ```
//!
//! Variable bounds are handled inside the ratio test (bounded-variable
//! simplex), so box constraints never become tableau rows. Entering and
//! leaving variables follow Bland's rule with lowest-index tie breaking, which
//! makes every solve deterministic and cycle free.

use thiserror::Error;

/// Absolute tolerance on constraint residuals and phase-one infeasibility.
pub const FEAS_TOL: f64 = 1e-8;
/// Reduced costs above `-OPT_TOL` count as non-improving.
const OPT_TOL: f64 = 1e-10;
/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("simplex exceeded the iteration cap of {0} pivots")]
    NumericalFailure(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_matrix: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    /// Per-variable `(lower, upper)`; infinities allowed on either side.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program over `objective.len()` variables, all bounded to `[0, +inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let m = objective.len();
        Self {
            objective,
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            ub_matrix: Vec::new(),
            ub_rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); m],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ub_matrix.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.bounds[var] = (lower, upper);
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let m = self.num_vars();
        if self.bounds.len() != m {
            return Err(LpError::DimensionMismatch(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                m
            )));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() || self.ub_matrix.len() != self.ub_rhs.len() {
            return Err(LpError::DimensionMismatch(
                "constraint rows and right-hand sides differ in length".into(),
            ));
        }
        for (k, row) in self.eq_matrix.iter().chain(&self.ub_matrix).enumerate() {
            if row.len() != m {
                return Err(LpError::DimensionMismatch(format!(
                    "constraint row {k} has {} columns, expected {m}",
                    row.len()
                )));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::DimensionMismatch(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute residual of `x` against every constraint and bound.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.eq_matrix.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row, x) - b).abs());
        }
        for (row, &b) in self.ub_matrix.iter().zip(&self.ub_rhs) {
            worst = worst.max(dot(row, x) - b);
        }
        for (&xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            point: None,
            objective_value: None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable is recovered from the nonnegative standard-form
/// columns: `x = offset + sign * y[col]` (minus `y[col + 1]` when split).
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shifted { col: usize, offset: f64 },
    Mirrored { col: usize, upper: f64 },
    Split { col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NonbasicAt {
    Lower,
    Upper,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols` matrix `B^-1 A`.
    a: Vec<f64>,
    /// Current values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Position of each column in the basis, if basic.
    basic_row: Vec<Option<usize>>,
    at: Vec<NonbasicAt>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    pivots: usize,
    cap: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl Tableau {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn recompute_reduced(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (r, &v) in self.reduced.iter_mut().zip(row) {
                    *r -= cb * v;
                }
            }
        }
        for i in 0..self.rows {
            self.reduced[self.basis[i]] = 0.0;
        }
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        (0..self.cols).find_map(|j| {
            if self.basic_row[j].is_some() || !self.enterable[j] || self.upper[j] == 0.0 {
                return None;
            }
            let d = self.reduced[j];
            match self.at[j] {
                NonbasicAt::Lower if d < -OPT_TOL => Some((j, 1.0)),
                NonbasicAt::Upper if d > OPT_TOL => Some((j, -1.0)),
                _ => None,
            }
        })
    }

    fn step(&mut self) -> Result<Step, LpError> {
        let Some((enter, dir)) = self.choose_entering() else {
            return Ok(Step::Optimal);
        };
        if self.pivots >= self.cap {
            return Err(LpError::NumericalFailure(self.cap));
        }
        self.pivots += 1;

        // Ratio test. Moving the entering column by t changes basic row i by
        // -dir * t * a[i][enter].
        let mut best_t = self.upper[enter];
        let mut leave: Option<(usize, NonbasicAt)> = None;
        for i in 0..self.rows {
            let alpha = dir * self.entry(i, enter);
            let var = self.basis[i];
            let (t, bound) = if alpha > PIVOT_TOL {
                ((self.beta[i].max(0.0)) / alpha, NonbasicAt::Lower)
            } else if alpha < -PIVOT_TOL && self.upper[var].is_finite() {
                (((self.upper[var] - self.beta[i]).max(0.0)) / -alpha, NonbasicAt::Upper)
            } else {
                continue;
            };
            let better = match leave {
                _ if t < best_t => true,
                Some((r, _)) if t == best_t => var < self.basis[r],
                _ => false,
            };
            if better {
                best_t = t;
                leave = Some((i, bound));
            }
        }
        if best_t == f64::INFINITY {
            return Ok(Step::Unbounded);
        }

        for i in 0..self.rows {
            let alpha = self.entry(i, enter);
            if alpha != 0.0 {
                self.beta[i] -= dir * best_t * alpha;
            }
        }

        match leave {
            None => {
                // Bound flip of the entering column.
                self.at[enter] = match self.at[enter] {
                    NonbasicAt::Lower => NonbasicAt::Upper,
                    NonbasicAt::Upper => NonbasicAt::Lower,
                };
            }
            Some((r, bound)) => {
                let entering_value = match self.at[enter] {
                    NonbasicAt::Lower => best_t,
                    NonbasicAt::Upper => self.upper[enter] - best_t,
                };
                let old = self.basis[r];
                self.pivot(r, enter);
                self.beta[r] = entering_value;
                self.basic_row[old] = None;
                self.at[old] = bound;
                self.basis[r] = enter;
                self.basic_row[enter] = Some(r);
            }
        }
        Ok(Step::Continue)
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let cols = self.cols;
        let p = self.a[r * cols + col];
        let inv = 1.0 / p;
        for v in &mut self.a[r * cols..(r + 1) * cols] {
            *v *= inv;
        }
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[col];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            for (v, &pv) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *v -= f * pv;
            }
            self.reduced[col] = 0.0;
        }
    }

    fn run(&mut self) -> Result<Step, LpError> {
        loop {
            match self.step()? {
                Step::Continue => continue,
                done => return Ok(done),
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| match self.basic_row[j] {
                Some(i) => self.beta[i],
                None => match self.at[j] {
                    NonbasicAt::Lower => 0.0,
                    NonbasicAt::Upper => self.upper[j],
                },
            })
            .collect()
    }
}

/// Solves `lp` to optimality, or proves it infeasible or unbounded.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let m = lp.num_vars();

    // Map original variables onto nonnegative columns.
    let mut maps = Vec::with_capacity(m);
    let mut upper = Vec::new();
    for &(lo, hi) in &lp.bounds {
        let col = upper.len();
        if lo.is_finite() {
            maps.push(VarMap::Shifted { col, offset: lo });
            upper.push(hi - lo);
        } else if hi.is_finite() {
            maps.push(VarMap::Mirrored { col, upper: hi });
            upper.push(f64::INFINITY);
        } else {
            maps.push(VarMap::Split { col });
            upper.push(f64::INFINITY);
            upper.push(f64::INFINITY);
        }
    }
    let n_struct = upper.len();

    let transform_row = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n_struct];
        let mut b = rhs;
        for (&aj, map) in row.iter().zip(&maps) {
            match *map {
                VarMap::Shifted { col, offset } => {
                    out[col] = aj;
                    b -= aj * offset;
                }
                VarMap::Mirrored { col, upper } => {
                    out[col] = -aj;
                    b -= aj * upper;
                }
                VarMap::Split { col } => {
                    out[col] = aj;
                    out[col + 1] = -aj;
                }
            }
        }
        (out, b)
    };

    let mut struct_cost = vec![0.0; n_struct];
    for (&cj, map) in lp.objective.iter().zip(&maps) {
        match *map {
            VarMap::Shifted { col, .. } => struct_cost[col] = cj,
            VarMap::Mirrored { col, .. } => struct_cost[col] = -cj,
            VarMap::Split { col } => {
                struct_cost[col] = cj;
                struct_cost[col + 1] = -cj;
            }
        }
    }

    let n_ub = lp.ub_matrix.len();
    let n_eq = lp.eq_matrix.len();
    let rows = n_ub + n_eq;

    // Rows whose natural starting basis is infeasible need an artificial.
    let mut prepared: Vec<(Vec<f64>, f64, Option<usize>)> = Vec::with_capacity(rows);
    for (k, (row, &b)) in lp.ub_matrix.iter().zip(&lp.ub_rhs).enumerate() {
        let (r, b) = transform_row(row, b);
        prepared.push((r, b, Some(k)));
    }
    for (row, &b) in lp.eq_matrix.iter().zip(&lp.eq_rhs) {
        let (r, b) = transform_row(row, b);
        prepared.push((r, b, None));
    }
    let needs_artificial: Vec<bool> = prepared
        .iter()
        .map(|(_, b, slack)| slack.is_none() || *b < 0.0)
        .collect();
    let n_art = needs_artificial.iter().filter(|&&x| x).count();
    let cols = n_struct + n_ub + n_art;

    let mut a = vec![0.0; rows * cols];
    let mut beta = vec![0.0; rows];
    let mut basis = vec![0; rows];
    let mut art_col = n_struct + n_ub;
    for (i, (row, b, slack)) in prepared.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        let dst = &mut a[i * cols..(i + 1) * cols];
        for (d, &v) in dst.iter_mut().zip(row) {
            *d = sign * v;
        }
        if let Some(k) = slack {
            dst[n_struct + k] = sign;
        }
        beta[i] = sign * b;
        if needs_artificial[i] {
            dst[art_col] = 1.0;
            basis[i] = art_col;
            art_col += 1;
        } else {
            basis[i] = n_struct + slack.expect("slack row");
        }
    }

    upper.extend(std::iter::repeat_n(f64::INFINITY, n_ub + n_art));
    let mut basic_row = vec![None; cols];
    for (i, &b) in basis.iter().enumerate() {
        basic_row[b] = Some(i);
    }

    let mut tab = Tableau {
        rows,
        cols,
        a,
        beta,
        basis,
        basic_row,
        at: vec![NonbasicAt::Lower; cols],
        upper,
        cost: vec![0.0; cols],
        reduced: vec![0.0; cols],
        enterable: vec![true; cols],
        pivots: 0,
        cap: 50 * (m + rows).max(1),
    };

    if n_art > 0 {
        for c in &mut tab.cost[n_struct + n_ub..] {
            *c = 1.0;
        }
        tab.recompute_reduced();
        tab.run()?;
        let infeasibility: f64 = (0..rows)
            .filter(|&i| tab.basis[i] >= n_struct + n_ub)
            .map(|i| tab.beta[i])
            .sum();
        if infeasibility > FEAS_TOL {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        // Pin artificials at zero for phase two.
        for j in n_struct + n_ub..cols {
            tab.upper[j] = 0.0;
            tab.enterable[j] = false;
            tab.at[j] = NonbasicAt::Lower;
        }
        for i in 0..rows {
            if tab.basis[i] >= n_struct + n_ub {
                tab.beta[i] = 0.0;
            }
        }
    }

    for c in &mut tab.cost {
        *c = 0.0;
    }
    tab.cost[..n_struct].copy_from_slice(&struct_cost);
    tab.recompute_reduced();
    if let Step::Unbounded = tab.run()? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let y = tab.column_values();
    let point: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, offset } => offset + y[col],
            VarMap::Mirrored { col, upper } => upper - y[col],
            VarMap::Split { col } => y[col] - y[col + 1],
        })
        .collect();
    let objective_value = dot(&lp.objective, &point);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        point: Some(point),
        objective_value: Some(objective_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> (Vec<f64>, f64) {
        let sol = solve_lp(lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let x = sol.point.unwrap();
        assert!(lp.max_violation(&x) <= FEAS_TOL, "violation {}", lp.max_violation(&x));
        (x, sol.objective_value.unwrap())
    }

    #[test]
    fn degenerate_segment_optimum() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0);
        let (x, v) = optimal(&lp);
        assert!((v - 1.0).abs() < 1e-12);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_active_bound() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.add_ub(vec![1.0], 2.0);
        let (x, v) = optimal(&lp);
        assert_eq!(x, vec![2.0]);
        assert_eq!(v, -2.0);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        // x1 + x2 = 1 and x1 - x2 = 3 force x1 = 2, x2 = -1.
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0).add_eq(vec![1.0, -1.0], 3.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_ub(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn upper_bounds_without_rows() {
        let mut lp = LinearProgram::new(vec![-1.0, -2.0]);
        lp.set_bounds(0, 0.0, 3.0).set_bounds(1, 1.0, 2.0);
        let (x, v) = optimal(&lp);
        assert_eq!(x, vec![3.0, 2.0]);
        assert_eq!(v, -7.0);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x + y with x free, y <= 5 (no lower), x - y >= -1, x + y >= 2.
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY)
            .set_bounds(1, f64::NEG_INFINITY, 5.0);
        lp.add_ub(vec![-1.0, 1.0], 1.0).add_ub(vec![-1.0, -1.0], -2.0);
        let (x, v) = optimal(&lp);
        assert!((v - 2.0).abs() < 1e-10);
        assert!(x[1] <= 5.0 + 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_ub(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::DimensionMismatch(_))));
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::DimensionMismatch(_))));
    }

    #[test]
    fn empty_program_is_trivially_optimal() {
        let lp = LinearProgram::new(vec![1.0, 2.0]);
        let (x, v) = optimal(&lp);
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0, 0.0]);
        lp.add_eq(vec![1.0, 1.0, 1.0], 2.0)
            .add_eq(vec![2.0, 2.0, 2.0], 4.0)
            .add_ub(vec![0.0, 0.0, 1.0], 1.0);
        let (x, v) = optimal(&lp);
        assert!((v - 1.0).abs() < 1e-10, "{x:?}");
    }
}
