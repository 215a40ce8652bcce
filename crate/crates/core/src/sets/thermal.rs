//! Air-conditioned house with first-order indoor temperature dynamics:
//!
//! ```text
//! T_t = T_{t-1} + alpha (T_out_t - T_{t-1}) + beta q_t
//! ```
//!
//! The set of acceptable cooling profiles is a polytope in `q`. For the HEMS
//! oracle the program is rewritten in temperature variables, where the comfort
//! band becomes plain variable bounds and `q >= 0` a bidiagonal row, which
//! keeps the tableau at `d` rows instead of `2d`.

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalParams {
    /// Heat-exchange coefficient with the outside, in `(0, 1)`.
    pub alpha: f64,
    /// Cooling efficiency in degrees per kWh; negative.
    pub beta: f64,
    pub t_out: Vec<f64>,
    pub t_init: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Optional per-period power cap in kWh.
    pub q_max: Option<f64>,
}

impl ThermalParams {
    pub fn new(alpha: f64, beta: f64, t_out: Vec<f64>, t_init: f64, t_min: f64, t_max: f64) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            t_out,
            t_init,
            t_min,
            t_max,
            q_max: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_cap(mut self, q_max: f64) -> Result<Self> {
        self.q_max = Some(q_max);
        self.validate()?;
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.t_out.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(self.beta < 0.0) || !self.beta.is_finite() {
            return bad(format!("beta {} must be negative", self.beta));
        }
        if !(self.t_min <= self.t_init && self.t_init <= self.t_max) {
            return bad(format!(
                "initial temperature {} outside [{}, {}]",
                self.t_init, self.t_min, self.t_max
            ));
        }
        if self.t_out.is_empty() || self.t_out.iter().any(|t| !t.is_finite()) {
            return bad("outside temperature must be a nonempty finite series".into());
        }
        if let Some(cap) = self.q_max {
            if !(cap >= 0.0) {
                return bad(format!("power cap {cap} must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Indoor temperatures `T_1..T_d` produced by cooling profile `q`.
    pub fn indoor_trajectory(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_len(self.horizon(), q.len())?;
        let mut temp = self.t_init;
        Ok(self
            .t_out
            .iter()
            .zip(q)
            .map(|(&out, &qt)| {
                temp += self.alpha * (out - temp) + self.beta * qt;
                temp
            })
            .collect())
    }

    pub(crate) fn contains(&self, q: &[f64], tol: f64) -> Result<bool> {
        let traj = self.indoor_trajectory(q)?;
        let cap = self.q_max.unwrap_or(f64::INFINITY);
        Ok(q.iter().all(|&x| x >= -tol && x <= cap + tol)
            && traj
                .iter()
                .all(|&t| t >= self.t_min - tol && t <= self.t_max + tol))
    }

    /// Cost-minimizing cooling profile at prices `p`.
    pub(crate) fn respond(&self, p: &[f64]) -> Result<Vec<f64>> {
        let d = self.horizon();
        check_len(d, p.len())?;
        let keep = 1.0 - self.alpha;

        // q_t = (x_t - keep * x_{t-1} - alpha * out_t) / beta
        let objective: Vec<f64> = (0..d)
            .map(|t| {
                let next = if t + 1 < d { p[t + 1] } else { 0.0 };
                (p[t] - keep * next) / self.beta
            })
            .collect();
        let mut lp = LinearProgram::new(objective);
        for t in 0..d {
            lp.set_bounds(t, self.t_min, self.t_max);
        }
        for t in 0..d {
            // q_t >= 0  <=>  x_t - keep x_{t-1} <= alpha out_t
            let mut row = vec![0.0; d];
            row[t] = 1.0;
            let mut rhs = self.alpha * self.t_out[t];
            if t == 0 {
                rhs += keep * self.t_init;
            } else {
                row[t - 1] = -keep;
            }
            if let Some(cap) = self.q_max {
                // q_t <= cap  <=>  -(x_t - keep x_{t-1}) <= -(alpha out_t + beta cap)
                let neg: Vec<f64> = row.iter().map(|v| -v).collect();
                lp.add_ub(neg, -(rhs + self.beta * cap));
            }
            lp.add_ub(row, rhs);
        }

        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::InfeasibleSet(
                    "comfort band cannot be maintained under the cooling limits".into(),
                ))
            }
            LpStatus::Unbounded => unreachable!("temperature variables are boxed"),
        }
        let x = sol.point.expect("optimal point");
        let cap = self.q_max.unwrap_or(f64::INFINITY);
        let mut prev = self.t_init;
        Ok(x
            .iter()
            .zip(&self.t_out)
            .map(|(&xt, &out)| {
                let q = (xt - keep * prev - self.alpha * out) / self.beta;
                prev = xt;
                q.clamp(0.0, cap)
            })
            .collect())
    }

    /// Constraints describing the set in `q` space:
    /// `t_min <= c_t + beta * sum_{i<=t} keep^{t-i} q_i <= t_max`.
    pub(crate) fn q_space_rows(&self) -> (Vec<(Vec<f64>, f64)>, Vec<(f64, f64)>) {
        let d = self.horizon();
        let keep = 1.0 - self.alpha;
        let free = self.indoor_trajectory(&vec![0.0; d]).expect("matching horizon");
        let mut rows = Vec::with_capacity(2 * d);
        for t in 0..d {
            let coeffs: Vec<f64> = (0..d)
                .map(|i| if i <= t { self.beta * keep.powi((t - i) as i32) } else { 0.0 })
                .collect();
            rows.push((coeffs.clone(), self.t_max - free[t]));
            rows.push((coeffs.iter().map(|c| -c).collect(), free[t] - self.t_min));
        }
        let bounds = vec![(0.0, self.q_max.unwrap_or(f64::INFINITY)); d];
        (rows, bounds)
    }

    pub(crate) fn tiled(&self, days: usize) -> Self {
        let mut out = self.clone();
        out.t_out = self.t_out.repeat(days);
        out
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::HorizonMismatch { expected, got })
    }
}
