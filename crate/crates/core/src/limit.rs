//! Pathwise solver for the limiting white-noise-forced corrector equation.
//!
//! The stochastic equation dχ + ½|∇_x χ|² dξ = −u∥ dW (and its viscous
//! counterpart) is solved through the shift χ̄ = χ + u∥(x) W(ξ), which turns
//! it into a classical evolution in the time-like variable ξ:
//!
//! ```text
//!   χ̄_ξ + ½|∇_x χ̄ − W(ξ) ∇_x u∥|² − δ_visc Δ_x(χ̄ − W(ξ) u∥) = 0,
//!   χ̄(·, 0) = 0,
//! ```
//!
//! discretized with the same monotone machinery (1-D Lax–Friedrichs in x,
//! explicit diffusion). The stored χ = χ̄ − u∥ W satisfies the shift identity
//! exactly at every node. An independent dynamic-programming minimization over
//! lattice paths serves as the verification oracle in the inviscid case: for
//! a driver that is constant on each ξ-interval the interval cost
//! ½ v² Δξ + W [u∥(end) − u∥(start)] is exact, so the only oracle error is the
//! endpoint lattice restriction.

use crate::fields::AdvectionExpr;
use crate::metric::{CorrectorField, CorrectorProvenance};
use crate::noise::BrownianPath;
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("driver covers xi <= {covered}, requested {requested}")]
    DriverRange { covered: f64, requested: f64 },
    #[error("invalid limit configuration: {0}")]
    InvalidConfig(String),
    #[error("the dynamic-programming oracle only supports the inviscid case")]
    OracleViscous,
}

/// Configuration of one limit solve.
#[derive(Debug, Clone)]
pub struct LimitConfig<T> {
    pub viscous: bool,
    /// u∥(·, 0) as a catalog expression of x.
    pub u_par: AdvectionExpr<T>,
    pub x_min: T,
    pub x_max: T,
    pub nx: usize,
    pub xi_max: T,
    pub n_xi: usize,
    pub cfl: T,
}

impl<T: Scalar> LimitConfig<T> {
    pub fn new(u_par: AdvectionExpr<T>, nx: usize, xi_max: T, n_xi: usize) -> Self {
        Self {
            viscous: false,
            u_par,
            x_min: T::zero(),
            x_max: T::of(2.0) * T::PI(),
            nx,
            xi_max,
            n_xi,
            cfl: T::of(0.4),
        }
    }

    fn validate(&self, driver: &BrownianPath<T>) -> Result<(), LimitError> {
        if self.nx < 1 || self.n_xi < 2 {
            return Err(LimitError::InvalidConfig("grid too small".into()));
        }
        if !(self.cfl > T::zero() && self.cfl < T::one()) {
            return Err(LimitError::InvalidConfig("cfl must lie in (0,1)".into()));
        }
        if driver.values.is_empty() || driver.values[0] != T::zero() {
            return Err(LimitError::InvalidConfig("driver must start at W(0) = 0".into()));
        }
        if driver.xi_max() < self.xi_max - T::of(1e-12) {
            return Err(LimitError::DriverRange {
                covered: driver.xi_max().as_f64(),
                requested: self.xi_max.as_f64(),
            });
        }
        Ok(())
    }
}

/// Solve the shifted equation and return the corrector (χ, χ̄) on the
/// (x, ξ) grid of the configuration.
pub fn solve_limit<T: Scalar>(
    config: &LimitConfig<T>,
    driver: &BrownianPath<T>,
) -> Result<CorrectorField<T>, LimitError> {
    config.validate(driver)?;
    let nx = config.nx;
    let hx = (config.x_max - config.x_min) / T::of(nx as f64);
    let x_nodes: Vec<T> = (0..nx).map(|i| config.x_min + hx * T::of(i as f64)).collect();
    let xi_step = config.xi_max / T::of((config.n_xi - 1) as f64);
    let xi_nodes: Vec<T> = (0..config.n_xi).map(|i| xi_step * T::of(i as f64)).collect();
    let u_par: Vec<T> = x_nodes
        .iter()
        .map(|&x| config.u_par.eval(x, T::zero(), T::zero()))
        .collect();
    let grad_u: Vec<T> = x_nodes
        .iter()
        .map(|&x| config.u_par.derivatives(x, T::zero(), T::zero()).0)
        .collect();
    let lap_u: Vec<T> = x_nodes
        .iter()
        .map(|&x| config.u_par.d2_x(x, T::zero(), T::zero()))
        .collect();

    let mut bar = vec![T::zero(); nx];
    let mut chi = Vec::with_capacity(nx * config.n_xi);
    let mut chi_bar = Vec::with_capacity(nx * config.n_xi);
    let mut stage = vec![T::zero(); nx];
    let mut k1 = vec![T::zero(); nx];
    let max_grad_u = grad_u.iter().fold(T::zero(), |a, &g| a.max(g.abs()));

    // one forward-Euler RHS of the shifted equation at driver value w
    let rhs = |bar: &[T], w: T, out: &mut [T]| {
        let half = T::of(0.5);
        for i in 0..nx {
            let il = if i == 0 { nx - 1 } else { i - 1 };
            let ir = if i + 1 == nx { 0 } else { i + 1 };
            let (pm, pp) = if nx > 1 {
                ((bar[i] - bar[il]) / hx, (bar[ir] - bar[i]) / hx)
            } else {
                (T::zero(), T::zero())
            };
            let p = (pm + pp) * half - w * grad_u[i];
            let mut theta = T::zero();
            if nx > 1 {
                // dominate |∂H/∂p| = |p̄ − W ∇u∥| over the grid state
                theta = (pm.abs().max(pp.abs()) + w.abs() * max_grad_u) * T::of(1.05)
                    + T::of(0.1);
            }
            let mut v = -(half * p * p) + theta * (pp - pm) * half;
            if config.viscous {
                let lap_bar = if nx > 1 {
                    (bar[ir] - T::of(2.0) * bar[i] + bar[il]) / (hx * hx)
                } else {
                    T::zero()
                };
                v += half * (lap_bar - w * lap_u[i]);
            }
            out[i] = v;
        }
    };

    // store ξ = 0 slab
    for i in 0..nx {
        chi_bar.push(T::zero());
        chi.push(-u_par[i] * driver.eval(T::zero()));
    }

    for step_idx in 1..config.n_xi {
        let xi0 = xi_nodes[step_idx - 1];
        let xi1 = xi_nodes[step_idx];
        // substep per CFL inside the driver interval
        let mut s = xi0;
        while s < xi1 - T::of(1e-14) {
            let w = driver.eval(s);
            let grad_now = {
                let mut m = T::zero();
                if nx > 1 {
                    for i in 0..nx {
                        let ir = if i + 1 == nx { 0 } else { i + 1 };
                        m = m.max(((bar[ir] - bar[i]) / hx).abs());
                    }
                }
                m
            };
            let speed = grad_now + w.abs() * max_grad_u + T::of(0.1);
            let mut limit = config.cfl * hx / speed;
            if config.viscous && nx > 1 {
                limit = limit.min(config.cfl * hx * hx);
            }
            if nx == 1 {
                limit = xi1 - s;
            }
            let d = limit.min(xi1 - s);
            // Heun step
            rhs(&bar, w, &mut k1);
            for i in 0..nx {
                stage[i] = bar[i] + d * k1[i];
            }
            let w1 = driver.eval(s + d);
            let stage_in = std::mem::take(&mut stage);
            rhs(&stage_in, w1, &mut k1);
            let half = T::of(0.5);
            for i in 0..nx {
                bar[i] = half * (bar[i] + stage_in[i] + d * k1[i]);
            }
            stage = stage_in;
            s += d;
        }
        let w_here = driver.eval(xi1);
        for i in 0..nx {
            chi_bar.push(bar[i]);
            chi.push(bar[i] - u_par[i] * w_here);
        }
    }

    // transpose to the corrector layout chi[(x) * n_xi + xi]
    let n_xi = config.n_xi;
    let reorder = |v: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); v.len()];
        for k in 0..n_xi {
            for i in 0..nx {
                out[i * n_xi + k] = v[k * nx + i];
            }
        }
        out
    };
    Ok(CorrectorField {
        x_nodes,
        xi_nodes,
        tau_nodes: Vec::new(),
        chi: reorder(&chi),
        chi_bar: reorder(&chi_bar),
        valid: vec![true; nx * n_xi],
        eps: T::zero(),
        provenance: CorrectorProvenance::Autonomous,
    })
}

/// Driver that is constant on each ξ-interval (oracle input).
#[derive(Debug, Clone)]
pub struct StepDriver<T> {
    /// Break points ξ_0 = 0 < ξ_1 < … < ξ_K.
    pub breakpoints: Vec<T>,
    /// Value on [ξ_k, ξ_{k+1}).
    pub values: Vec<T>,
}

impl<T: Scalar> StepDriver<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self, LimitError> {
        if breakpoints.len() != values.len() + 1 || breakpoints[0] != T::zero() {
            return Err(LimitError::InvalidConfig(
                "need K+1 breakpoints starting at 0 for K values".into(),
            ));
        }
        Ok(Self { breakpoints, values })
    }

    /// Dense tabulation as a BrownianPath: constant within each interval with
    /// a one-cell ramp at the jumps.
    pub fn to_driver(&self, n_nodes: usize) -> BrownianPath<T> {
        let xi_max = *self.breakpoints.last().unwrap();
        let h = xi_max / T::of((n_nodes - 1) as f64);
        let values = (0..n_nodes)
            .map(|i| {
                let xi = h * T::of(i as f64);
                self.value_at(xi)
            })
            .collect();
        BrownianPath { h, values, provenance: crate::noise::DriverProvenance::Sampled }
    }

    pub fn value_at(&self, xi: T) -> T {
        for k in 0..self.values.len() {
            if xi < self.breakpoints[k + 1] {
                return self.values[k];
            }
        }
        *self.values.last().unwrap()
    }
}

/// Brute-force value function on a periodic lattice: χ̄(x, ξ_k) by dynamic
/// programming over straight segments between breakpoints. `refine` multiplies
/// the lattice resolution relative to `nx`.
pub fn hopf_lax_oracle<T: Scalar>(
    u_par: &AdvectionExpr<T>,
    driver: &StepDriver<T>,
    nx: usize,
    x_range: (T, T),
    refine: usize,
    viscous: bool,
) -> Result<Vec<Vec<T>>, LimitError> {
    if viscous {
        return Err(LimitError::OracleViscous);
    }
    let m = nx * refine.max(1);
    let len = x_range.1 - x_range.0;
    let hx = len / T::of(m as f64);
    let xs: Vec<T> = (0..m).map(|i| x_range.0 + hx * T::of(i as f64)).collect();
    let u: Vec<T> = xs
        .iter()
        .map(|&x| u_par.eval(x, T::zero(), T::zero()))
        .collect();
    let mut value = vec![T::zero(); m];
    let mut out = Vec::with_capacity(driver.breakpoints.len());
    out.push(sample_every(&value, refine.max(1)));
    for k in 0..driver.values.len() {
        let dxi = driver.breakpoints[k + 1] - driver.breakpoints[k];
        let w = driver.values[k];
        let mut next = vec![T::infinity(); m];
        for (i, nv) in next.iter_mut().enumerate() {
            // γ(ξ_{k+1}) = x_i; minimize over the start node x_j
            for (j, &vj) in value.iter().enumerate() {
                // periodic displacement representatives
                let raw = xs[i] - xs[j];
                for shift in [-len, T::zero(), len] {
                    let dx = raw + shift;
                    let cost = vj
                        + dx * dx / (T::of(2.0) * dxi)
                        + w * (u[i] - u[j]);
                    if cost < *nv {
                        *nv = cost;
                    }
                }
            }
        }
        value = next;
        out.push(sample_every(&value, refine.max(1)));
    }
    Ok(out)
}

fn sample_every<T: Copy>(v: &[T], stride: usize) -> Vec<T> {
    v.iter().step_by(stride).copied().collect()
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ViscousReport {
    pub max_equal_gap_constant_profile: f64,
    pub max_grad_viscous: f64,
    pub max_grad_inviscid: f64,
    pub refinement_change: f64,
    pub pass: bool,
}

/// Viscous sanity checks: for x-constant u∥ the viscous and inviscid
/// solutions coincide; for x-dependent u∥ the viscous solution is the
/// smoother one, and halving hx changes it at first order only.
pub fn viscous_consistency_check<T: Scalar>(
    u_par: &AdvectionExpr<T>,
    driver: &BrownianPath<T>,
    nx: usize,
    xi_max: T,
    n_xi: usize,
) -> Result<ViscousReport, LimitError> {
    // x-constant profile: both solutions are the pure shift −u∥ W
    let const_profile = AdvectionExpr::constant(T::one());
    let mut cfg = LimitConfig::new(const_profile, nx, xi_max, n_xi);
    let inv = solve_limit(&cfg, driver)?;
    cfg.viscous = true;
    let vis = solve_limit(&cfg, driver)?;
    let mut equal_gap = 0.0f64;
    for (a, b) in inv.chi.iter().zip(&vis.chi) {
        equal_gap = equal_gap.max((*a - *b).abs().as_f64());
    }

    let grad_sup = |c: &CorrectorField<T>| -> f64 {
        let nx = c.n_x();
        let hx = if nx > 1 {
            (c.x_nodes[1] - c.x_nodes[0]).as_f64()
        } else {
            1.0
        };
        let mut m = 0.0f64;
        let kk = c.n_xi() - 1;
        for i in 0..nx {
            let ir = (i + 1) % nx;
            let d = (c.chi[c.idx(0, ir, kk)] - c.chi[c.idx(0, i, kk)]).as_f64() / hx;
            m = m.max(d.abs());
        }
        m
    };
    let mut cfg_x = LimitConfig::new(u_par.clone(), nx, xi_max, n_xi);
    let inv_x = solve_limit(&cfg_x, driver)?;
    cfg_x.viscous = true;
    let vis_x = solve_limit(&cfg_x, driver)?;
    let g_inv = grad_sup(&inv_x);
    let g_vis = grad_sup(&vis_x);

    let mut cfg_fine = LimitConfig::new(u_par.clone(), nx * 2, xi_max, n_xi);
    cfg_fine.viscous = true;
    let vis_fine = solve_limit(&cfg_fine, driver)?;
    let mut change = 0.0f64;
    for i in 0..nx {
        for k in 0..n_xi {
            let coarse = vis_x.chi[vis_x.idx(0, i, k)];
            let fine = vis_fine.chi[vis_fine.idx(0, 2 * i, k)];
            change = change.max((coarse - fine).abs().as_f64());
        }
    }
    let pass = equal_gap < 1e-12 && g_vis <= g_inv + 1e-3;
    Ok(ViscousReport {
        max_equal_gap_constant_profile: equal_gap,
        max_grad_viscous: g_vis,
        max_grad_inviscid: g_inv,
        refinement_change: change,
        pass,
    })
}
