//! Positively homogeneous convex grid costs `rho` and their dual sets.
//!
//! Each cost is the support function of a compact convex set
//! `P = { z : z . q <= rho(q) for all q }`, so maximizing a linear function
//! over `P` (the linear-maximization oracle used by Frank-Wolfe) has a closed
//! form per variant. The grid cost of total demand `Q` against renewable
//! supply `Q0` is `sigma(Q, Q0) = rho(Q - Q0)`.

use crate::vecops::{argmax, dot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridCostFunction {
    /// `max_j q_j`; the dual set is the probability simplex.
    Peak,
    /// `||q||_kappa` with `kappa` in `[1, inf]`.
    LpNorm { kappa: f64 },
    /// `||max(q, 0)||_s`: only net demand above renewables costs anything.
    PositivePartLp { s: f64 },
    /// `||q||_kappa + lambda * sum_j |q_{j+1} - q_j|`.
    RampPenalized { kappa: f64, lambda: f64 },
}

impl GridCostFunction {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = match *self {
            Self::Peak => true,
            Self::LpNorm { kappa } => kappa >= 1.0,
            Self::PositivePartLp { s } => s >= 1.0,
            Self::RampPenalized { kappa, lambda } => kappa >= 1.0 && lambda >= 0.0 && lambda.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameters(format!("invalid grid cost {self:?}")))
        }
    }

    pub fn evaluate(&self, net: &[f64]) -> f64 {
        match *self {
            Self::Peak => net.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Self::LpNorm { kappa } => lp_norm(net.iter().copied(), kappa),
            Self::PositivePartLp { s } => lp_norm(net.iter().map(|x| x.max(0.0)), s),
            Self::RampPenalized { kappa, lambda } => {
                lp_norm(net.iter().copied(), kappa) + lambda * total_variation(net)
            }
        }
    }

    /// `sigma(Q, Q0) = rho(Q - Q0)`.
    pub fn grid_cost(&self, demand: &[f64], renewables: &[f64]) -> f64 {
        let net: Vec<f64> = demand.iter().zip(renewables).map(|(q, r)| q - r).collect();
        self.evaluate(&net)
    }

    /// `argmax { z . g : z in P }`, lowest index on ties. The maximum value
    /// equals `evaluate(g)`.
    pub fn dual_lmo(&self, g: &[f64]) -> Vec<f64> {
        match *self {
            Self::Peak => {
                let mut z = vec![0.0; g.len()];
                if !g.is_empty() {
                    z[argmax(g)] = 1.0;
                }
                z
            }
            Self::LpNorm { kappa } => norm_ball_maximizer(g, kappa),
            Self::PositivePartLp { s } => {
                let pos: Vec<f64> = g.iter().map(|x| x.max(0.0)).collect();
                norm_ball_maximizer(&pos, s)
            }
            Self::RampPenalized { kappa, lambda } => {
                // P is the Minkowski sum of the kappa-dual ball and lambda D^T B_inf.
                let mut z = norm_ball_maximizer(g, kappa);
                for j in 0..g.len().saturating_sub(1) {
                    let w = sign(g[j + 1] - g[j]);
                    z[j + 1] += lambda * w;
                    z[j] -= lambda * w;
                }
                z
            }
        }
    }

    /// Euclidean radius `sup { ||z||_2 : z in P }` of the dual set over `d`
    /// periods; a Lipschitz constant of `rho`. For the ramp-penalized cost
    /// this is the triangle-inequality bound over its two Minkowski summands.
    pub fn lipschitz_bound(&self, d: usize) -> f64 {
        match *self {
            Self::Peak => 1.0,
            Self::LpNorm { kappa } | Self::PositivePartLp { s: kappa } => dual_ball_radius(kappa, d),
            Self::RampPenalized { kappa, lambda } => {
                let diff = if d >= 2 { ((4 * d - 6) as f64).sqrt() } else { 0.0 };
                dual_ball_radius(kappa, d) + lambda * diff
            }
        }
    }

    /// Whether `z . q <= rho(q) + tol` for every probe.
    pub fn dual_contains(&self, z: &[f64], probes: &[Vec<f64>], tol: f64) -> bool {
        probes.iter().all(|q| dot(z, q) <= self.evaluate(q) + tol)
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Peak => "peak".into(),
            Self::LpNorm { kappa } => format!("lp{}", fmt_exponent(kappa)),
            Self::PositivePartLp { s } => format!("pos{}", fmt_exponent(s)),
            Self::RampPenalized { kappa, lambda } => format!("ramp{}x{lambda}", fmt_exponent(kappa)),
        }
    }
}

fn fmt_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn total_variation(q: &[f64]) -> f64 {
    q.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub(crate) fn lp_norm(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        values.map(f64::abs).sum()
    } else if p == 2.0 {
        values.map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let v: Vec<f64> = values.collect();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Maximizer of `z . g` over the unit ball of the norm dual to `||.||_kappa`.
fn norm_ball_maximizer(g: &[f64], kappa: f64) -> Vec<f64> {
    let mut z = vec![0.0; g.len()];
    if kappa.is_infinite() {
        // Dual ball is l1: all mass on the largest |g_j|.
        let abs: Vec<f64> = g.iter().map(|x| x.abs()).collect();
        if let Some(j) = (!g.is_empty()).then(|| argmax(&abs)) {
            z[j] = sign(g[j]);
        }
    } else if kappa == 1.0 {
        for (zj, &gj) in z.iter_mut().zip(g) {
            *zj = sign(gj);
        }
    } else {
        let norm = lp_norm(g.iter().copied(), kappa);
        if norm > 0.0 {
            for (zj, &gj) in z.iter_mut().zip(g) {
                *zj = sign(gj) * (gj.abs() / norm).powf(kappa - 1.0);
            }
        }
    }
    z
}

/// Euclidean radius of the unit ball of the norm dual to `||.||_kappa` in `R^d`.
fn dual_ball_radius(kappa: f64, d: usize) -> f64 {
    if kappa >= 2.0 {
        1.0
    } else {
        // Dual exponent kappa' >= 2; the radius is d^(1/2 - 1/kappa').
        let inv_dual = 1.0 - 1.0 / kappa;
        (d as f64).powf(0.5 - inv_dual)
    }
}
