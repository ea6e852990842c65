//! The metric planar problem and its correctors.
//!
//! The steady problem −r(ε^β/2)Δρ + rεu·∇ρ + |∇ρ|^r = 1 with ρ = 0 on
//! {y = 0} is solved by long-time marching of the evolution model with datum
//! f(·, 0) = y: the traveling ansatz f = ρ − t turns the steady equation into
//! the statement that f decreases at unit rate everywhere, so the march is
//! stopped once ‖f(·, t+dt) − f(·, t) + dt‖_∞ ≤ tol·dt and ρ = f + t.
//!
//! The corrector is the rescaled deviation χ(x, ξ) = ρ(x, ξ/ε^{2/3})/ε^{2/3}
//! − ξ/ε^{4/3}, and its shifted companion χ̄ = χ + u∥(x) W^ε(ξ) obeys growth
//! bounds with constants that are fitted once at the coarsest ε and then
//! verified unchanged at the finer ones.

use crate::fields::{AdvectionSpec, FieldError, Grid2D, ScalarField, SimParams};
use crate::noise::{integrate_w_eps, NoiseError, NoisePath};
use crate::scalar::Scalar;
use crate::solver::{Scheme, SolverConfig, SolverError, Stepper};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("grid must contain a node at y = 0 for the Dirichlet pin")]
    NoZeroRow,
    #[error("denominator 1 + eps*u*w reaches {0} <= 0; shear too strong for the oracle")]
    OracleDenominator(f64),
    #[error("requested xi = {0} outside the rescaled range of the solution")]
    XiOutOfRange(f64),
    #[error("trajectory snapshots do not match the requested tau nodes")]
    TauMismatch,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Converged steady solution with its residual-rate history.
#[derive(Debug, Clone)]
pub struct MetricSolution<T> {
    pub rho: ScalarField<T>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
}

/// Grid for the planar problem: y ∈ [0, y_max] (or [−y_max, y_max] when
/// mirrored), with a node pinned at y = 0.
pub fn metric_grid<T: Scalar>(
    x_range: (T, T),
    nx: usize,
    y_max: T,
    hy: T,
    mirrored: bool,
) -> Result<Grid2D<T>, FieldError> {
    let n_half = (y_max / hy).ceil().as_f64() as usize;
    let y_max = hy * T::of(n_half as f64);
    if mirrored {
        Grid2D::new(x_range, nx, (-y_max, y_max), 2 * n_half + 1)
    } else {
        Grid2D::new(x_range, nx, (T::zero(), y_max), n_half + 1)
    }
}

/// Default vertical extent: the rescaled range must cover ξ ∈ [0, 2].
pub fn default_y_max<T: Scalar>(eps: T) -> T {
    T::of(20.0).max(T::of(2.0) / eps.powf(T::of(2.0 / 3.0)))
}

/// March the evolution problem to its traveling steady state and return ρ.
pub fn solve_rho<T: Scalar>(
    params: &SimParams<T>,
    advection: &AdvectionSpec<T>,
    noise: Option<&NoisePath<T>>,
    grid: Grid2D<T>,
    tol: T,
) -> Result<MetricSolution<T>, MetricError> {
    let pin_row = grid.y_zero_row().ok_or(MetricError::NoZeroRow)?;
    // advection frozen at t = 0
    let frozen = SimParams { alpha: T::infinity(), ..*params };
    let scheme = if params.r == T::one() { Scheme::GodunovR1 } else { Scheme::LaxFriedrichs };
    let mut config = SolverConfig::new(scheme, T::infinity());
    config.residual_tol = tol;
    config.stop_time = T::infinity();
    config.output_times = vec![];
    let mut stepper = Stepper::new(grid, frozen, advection, noise, config)?;
    let mut f: Vec<T> = (0..grid.len()).map(|i| grid.y_at(i % grid.ny)).collect();
    let mut prev = f.clone();
    let mut t = T::zero();
    let y_len = grid.y_max - grid.y_min;
    let max_time = (T::of(2.5) * y_len + T::of(20.0)).as_f64();
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut settled = 0usize;
    loop {
        let dt = stepper.dt_bound(&f);
        prev.copy_from_slice(&f);
        stepper.rk2_step(&mut f, t, dt, Some(pin_row));
        t += dt;
        iterations += 1;
        // residual rate: |f(t+dt) − f(t) + dt| / dt
        let mut res = T::zero();
        for i in 0..f.len() {
            res = res.max((f[i] - prev[i] + dt).abs());
        }
        let rate = (res / dt).as_f64();
        history.push(rate);
        if rate <= tol.as_f64() {
            settled += 1;
            if settled >= 3 {
                break;
            }
        } else {
            settled = 0;
        }
        if t.as_f64() > max_time {
            let tail = history[history.len().saturating_sub(12)..].to_vec();
            return Err(MetricError::Solver(SolverError::NonConvergence(tail)));
        }
    }
    let rho_values: Vec<T> = f.iter().map(|v| *v + t).collect();
    let rho = ScalarField { grid, values: rho_values, time_stamp: T::zero() };
    Ok(MetricSolution { rho, residual_history: history, iterations })
}

/// Exact 1-D shear solution ∫_0^y dz / (1 + ε u∥ w(z)) by composite Simpson
/// with exact noise evaluations (r = 1, β = ∞, u⊥ ≡ 0, u∥ constant).
pub fn shear_oracle<T: Scalar>(
    noise: &NoisePath<T>,
    eps: T,
    u_par: T,
    y: T,
) -> Result<T, MetricError> {
    let worst = T::one() - (eps * u_par).abs() * noise.certified_bound();
    if worst <= T::zero() {
        return Err(MetricError::OracleDenominator(worst.as_f64()));
    }
    let n = ((y.abs() / T::of(5e-4)).ceil().as_f64() as usize).clamp(8, 4_000_000);
    let h = y / T::of(n as f64); // signed step: the integral is antisymmetric
    let g = |z: T| -> Result<T, MetricError> {
        let (w, _) = noise.eval(z)?;
        Ok((T::one() + eps * u_par * w).recip())
    };
    let mut acc = T::zero();
    for i in 0..n {
        let z0 = h * T::of(i as f64);
        let z1 = z0 + h;
        let zm = (z0 + z1) * T::of(0.5);
        acc += h / T::of(6.0) * (g(z0)? + T::of(4.0) * g(zm)? + g(z1)?);
    }
    Ok(acc)
}

/// Corrector in rescaled coordinates, with the shifted field
/// χ̄ = χ + u∥(x) W^ε(ξ) filled from the same noise realization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorProvenance {
    Autonomous,
    TimeDependent,
}

#[derive(Debug, Clone)]
pub struct CorrectorField<T> {
    pub x_nodes: Vec<T>,
    pub xi_nodes: Vec<T>,
    /// Empty for autonomous correctors; one entry per trajectory snapshot.
    pub tau_nodes: Vec<T>,
    /// chi[tau][x * n_xi + xi] (single tau slab when autonomous).
    pub chi: Vec<T>,
    pub chi_bar: Vec<T>,
    /// Wedge mask: false where ξ < τ (time-dependent correctors only).
    pub valid: Vec<bool>,
    pub eps: T,
    pub provenance: CorrectorProvenance,
}

impl<T: Scalar> CorrectorField<T> {
    pub fn n_x(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn n_xi(&self) -> usize {
        self.xi_nodes.len()
    }

    #[inline]
    pub fn idx(&self, i_tau: usize, ix: usize, ixi: usize) -> usize {
        (i_tau * self.n_x() + ix) * self.n_xi() + ixi
    }

    pub fn chi_at(&self, ix: usize, ixi: usize) -> T {
        self.chi[self.idx(0, ix, ixi)]
    }

    /// Cubic interpolation of χ in ξ at fixed x (single-slab correctors).
    pub fn interp_chi(&self, ix: usize, xi: T) -> Result<T, MetricError> {
        let n = self.n_xi();
        let h = self.xi_nodes[1] - self.xi_nodes[0];
        let pos = ((xi - self.xi_nodes[0]) / h).as_f64();
        if pos < -1e-9 || pos > (n - 1) as f64 + 1e-9 {
            return Err(MetricError::XiOutOfRange(xi.as_f64()));
        }
        let j1 = (pos.floor() as i64).clamp(0, n as i64 - 2) as usize;
        if n < 4 {
            let u = T::of(pos - j1 as f64);
            return Ok(self.chi_at(ix, j1) * (T::one() - u) + self.chi_at(ix, j1 + 1) * u);
        }
        let j0 = j1.saturating_sub(1).min(n - 4);
        let u = T::of(pos - j0 as f64);
        let mut acc = T::zero();
        for k in 0..4 {
            let mut l = T::one();
            for m in 0..4 {
                if m != k {
                    l *= (u - T::of(m as f64)) / (T::of(k as f64) - T::of(m as f64));
                }
            }
            acc += self.chi_at(ix, j0 + k) * l;
        }
        Ok(acc)
    }
}

/// χ(x, ξ) = ρ(x, ε^{−2/3}ξ)/ε^{2/3} − ξ/ε^{4/3}, cubic in y.
pub fn extract_corrector<T: Scalar>(
    rho: &ScalarField<T>,
    eps: T,
    noise: &NoisePath<T>,
    u_par_at_origin: impl Fn(T) -> T,
    xi_nodes: Vec<T>,
) -> Result<CorrectorField<T>, MetricError> {
    let e23 = eps.powf(T::of(2.0 / 3.0));
    let g = rho.grid;
    let mut chi = Vec::with_capacity(g.nx * xi_nodes.len());
    let mut chi_bar = Vec::with_capacity(chi.capacity());
    let w_eps: Vec<T> = xi_nodes
        .iter()
        .map(|&xi| integrate_w_eps(noise, eps, xi))
        .collect::<Result<_, _>>()?;
    for ix in 0..g.nx {
        let u_par = u_par_at_origin(g.x_at(ix));
        for (k, &xi) in xi_nodes.iter().enumerate() {
            let y = xi / e23;
            if y < g.y_min - T::of(1e-9) || y > g.y_max + T::of(1e-9) {
                return Err(MetricError::XiOutOfRange(xi.as_f64()));
            }
            let c = (rho.interp_y_cubic(ix, y) - y) / e23;
            chi.push(c);
            chi_bar.push(c + u_par * w_eps[k]);
        }
    }
    Ok(CorrectorField {
        x_nodes: (0..g.nx).map(|i| g.x_at(i)).collect(),
        xi_nodes,
        tau_nodes: Vec::new(),
        valid: vec![true; chi.len()],
        chi,
        chi_bar,
        eps,
        provenance: CorrectorProvenance::Autonomous,
    })
}

/// Time-dependent corrector χ(x, ξ, τ) = f(x, ξ/ε^{2/3}, τ/ε^{2/3})/ε^{2/3}
/// − (ξ−τ)/ε^{4/3}, restricted to the wedge ξ ≥ τ.
pub fn extract_td_corrector<T: Scalar>(
    trajectory: &[ScalarField<T>],
    eps: T,
    noise: &NoisePath<T>,
    u_par_at_origin: impl Fn(T) -> T,
    xi_nodes: Vec<T>,
    tau_nodes: Vec<T>,
) -> Result<CorrectorField<T>, MetricError> {
    let e23 = eps.powf(T::of(2.0 / 3.0));
    if trajectory.len() != tau_nodes.len() {
        return Err(MetricError::TauMismatch);
    }
    for (snap, &tau) in trajectory.iter().zip(&tau_nodes) {
        if (snap.time_stamp * e23 - tau).abs() > T::of(1e-9) {
            return Err(MetricError::TauMismatch);
        }
    }
    let g = trajectory[0].grid;
    let n = g.nx * xi_nodes.len() * tau_nodes.len();
    let mut chi = vec![T::zero(); n];
    let mut chi_bar = vec![T::zero(); n];
    let mut valid = vec![false; n];
    let w_eps: Vec<T> = xi_nodes
        .iter()
        .map(|&xi| integrate_w_eps(noise, eps, xi))
        .collect::<Result<_, _>>()?;
    let n_xi = xi_nodes.len();
    let n_x = g.nx;
    for (it, (snap, &tau)) in trajectory.iter().zip(&tau_nodes).enumerate() {
        for ix in 0..n_x {
            let u_par = u_par_at_origin(g.x_at(ix));
            for (k, &xi) in xi_nodes.iter().enumerate() {
                if xi < tau {
                    continue; // outside the wedge
                }
                let y = xi / e23;
                if y < g.y_min - T::of(1e-9) || y > g.y_max + T::of(1e-9) {
                    return Err(MetricError::XiOutOfRange(xi.as_f64()));
                }
                let val = snap.interp_y_cubic(ix, y);
                let c = (val - (y - snap.time_stamp)) / e23;
                let i = (it * n_x + ix) * n_xi + k;
                chi[i] = c;
                chi_bar[i] = c + u_par * w_eps[k];
                valid[i] = true;
            }
        }
    }
    Ok(CorrectorField {
        x_nodes: (0..g.nx).map(|i| g.x_at(i)).collect(),
        xi_nodes,
        tau_nodes,
        chi,
        chi_bar,
        valid,
        eps,
        provenance: CorrectorProvenance::TimeDependent,
    })
}

// ---------------------------------------------------------------------------
// a priori bounds

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    /// |ρ(x,y) − y| ≤ |y|/2, printed constant, no fitting.
    WithinHalfY,
    /// |ρ(x,y) − y| ≤ 3 ε ‖u‖_∞ |y|.
    WeakLinear,
    /// max one-sided difference quotient ≤ C_L.
    Lipschitz,
    /// |ρ − y + ε^{2/3} u∥ W^ε(ε^{2/3}y)| ≤ ε^{4/3}μ₁|y| + μ₂ε²y²/2
    ///  + ε^{2/3}μ₃|∫_0^{yε^{2/3}} |W^ε|²|.
    SharpShift,
    /// |χ̄(x,ξ)| ≤ μ₁|ξ| + μ₂ξ²/2 + μ₃∫_0^ξ|W^ε|².
    CorrectorGrowth,
}

impl std::fmt::Display for BoundName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BoundName::WithinHalfY => "within_half_y",
            BoundName::WeakLinear => "weak_linear",
            BoundName::Lipschitz => "lipschitz",
            BoundName::SharpShift => "sharp_shift",
            BoundName::CorrectorGrowth => "corrector_growth",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MuConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub max_violation: f64,
    pub fitted_constants: Option<MuConstants>,
    pub lipschitz_constant: Option<f64>,
    pub pass: bool,
}

/// Basis columns of the three-term growth bound at one node.
fn sharp_basis<T: Scalar>(
    eps: T,
    y: T,
    w_eps_sq_int: T, // |∫_0^{yε^{2/3}} |W^ε(ξ')|² dξ'|
) -> [f64; 3] {
    let e23 = eps.powf(T::of(2.0 / 3.0));
    let e43 = e23 * e23;
    [
        (e43 * y.abs()).as_f64(),
        (eps * eps * y * y * T::of(0.5)).as_f64(),
        (e23 * w_eps_sq_int).as_f64(),
    ]
}

/// Nonnegative least squares for three coefficients (active-set over the
/// 2³ sign patterns), then scaled so the calibration data is fully covered.
fn fit_covering_mu(lhs: &[f64], basis: &[[f64; 3]]) -> MuConstants {
    let solve3 = |active: [bool; 3]| -> Option<[f64; 3]> {
        // normal equations restricted to the active set
        let idx: Vec<usize> = (0..3).filter(|&i| active[i]).collect();
        if idx.is_empty() {
            return Some([0.0; 3]);
        }
        let k = idx.len();
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[r][c] = basis.iter().map(|bb| bb[i] * bb[j]).sum();
            }
            b[r] = basis.iter().zip(lhs).map(|(bb, l)| bb[i] * l).sum();
        }
        // Gaussian elimination
        for p in 0..k {
            let mut piv = p;
            for r in p + 1..k {
                if a[r][p].abs() > a[piv][p].abs() {
                    piv = r;
                }
            }
            if a[piv][p].abs() < 1e-300 {
                return None;
            }
            a.swap(p, piv);
            b.swap(p, piv);
            for r in p + 1..k {
                let f = a[r][p] / a[p][p];
                for c in p..k {
                    a[r][c] -= f * a[p][c];
                }
                b[r] -= f * b[p];
            }
        }
        let mut x = vec![0.0; k];
        for p in (0..k).rev() {
            let mut acc = b[p];
            for c in p + 1..k {
                acc -= a[p][c] * x[c];
            }
            x[p] = acc / a[p][p];
        }
        let mut full = [0.0; 3];
        for (r, &i) in idx.iter().enumerate() {
            full[i] = x[r];
        }
        Some(full)
    };
    let mut best: Option<([f64; 3], f64)> = None;
    for mask in 0..8u8 {
        let active = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
        if let Some(mu) = solve3(active) {
            if mu.iter().any(|&m| m < 0.0 || !m.is_finite()) {
                continue;
            }
            let resid: f64 = basis
                .iter()
                .zip(lhs)
                .map(|(bb, l)| {
                    let fit = bb[0] * mu[0] + bb[1] * mu[1] + bb[2] * mu[2];
                    (l - fit).powi(2)
                })
                .sum();
            if best.map(|(_, r)| resid < r).unwrap_or(true) {
                best = Some((mu, resid));
            }
        }
    }
    let mut mu = best.map(|(m, _)| m).unwrap_or([1.0, 1.0, 1.0]);
    if mu.iter().all(|&m| m == 0.0) {
        mu = [1.0, 0.0, 0.0];
    }
    // scale to cover: smallest inflation making every node satisfy the bound
    let mut scale = 1.0f64;
    for (bb, &l) in basis.iter().zip(lhs) {
        let rhs = bb[0] * mu[0] + bb[1] * mu[1] + bb[2] * mu[2];
        if rhs > 0.0 {
            scale = scale.max(l / rhs);
        } else if l > 1e-12 {
            scale = f64::INFINITY;
        }
    }
    if !scale.is_finite() {
        // degenerate basis with nonzero data: fall back to a covering slope
        let worst = lhs.iter().cloned().fold(0.0, f64::max);
        return MuConstants { mu1: worst.max(1.0) * 2.0, mu2: 1.0, mu3: 1.0 };
    }
    let s = scale * 1.05;
    MuConstants { mu1: mu[0] * s, mu2: mu[1] * s, mu3: mu[2] * s }
}

struct ShiftData {
    lhs: Vec<f64>,
    basis: Vec<[f64; 3]>,
}

fn sharp_shift_data<T: Scalar>(
    rho: &ScalarField<T>,
    eps: T,
    noise: &NoisePath<T>,
    u_par_at_origin: &impl Fn(T) -> T,
) -> Result<ShiftData, MetricError> {
    let g = rho.grid;
    let e23 = eps.powf(T::of(2.0 / 3.0));
    // cumulative ∫ |W^ε|² on the rescaled y nodes
    let mut wsq_int = vec![T::zero(); g.ny];
    let mut w_eps = vec![T::zero(); g.ny];
    for j in 0..g.ny {
        w_eps[j] = integrate_w_eps(noise, eps, e23 * g.y_at(j))?;
    }
    for j in 1..g.ny {
        let h = e23 * (g.y_at(j) - g.y_at(j - 1));
        wsq_int[j] = wsq_int[j - 1]
            + (w_eps[j - 1] * w_eps[j - 1] + w_eps[j] * w_eps[j]) * h * T::of(0.5);
    }
    let mut lhs = Vec::with_capacity(g.len());
    let mut basis = Vec::with_capacity(g.len());
    for ix in 0..g.nx {
        let u_par = u_par_at_origin(g.x_at(ix));
        for j in 0..g.ny {
            let y = g.y_at(j);
            let val = (rho.get(ix, j) - y + e23 * u_par * w_eps[j]).abs();
            lhs.push(val.as_f64());
            basis.push(sharp_basis(eps, y, wsq_int[j].abs()));
        }
    }
    Ok(ShiftData { lhs, basis })
}

fn corrector_growth_data<T: Scalar>(
    corr: &CorrectorField<T>,
    noise: &NoisePath<T>,
) -> Result<ShiftData, MetricError> {
    let n_xi = corr.n_xi();
    let mut wsq_int = vec![0.0f64; n_xi];
    let mut w_prev = integrate_w_eps(noise, corr.eps, corr.xi_nodes[0])?.as_f64();
    for k in 1..n_xi {
        let w_k = integrate_w_eps(noise, corr.eps, corr.xi_nodes[k])?.as_f64();
        let h = (corr.xi_nodes[k] - corr.xi_nodes[k - 1]).as_f64();
        wsq_int[k] = wsq_int[k - 1] + 0.5 * h * (w_prev * w_prev + w_k * w_k);
        w_prev = w_k;
    }
    let mut lhs = Vec::new();
    let mut basis = Vec::new();
    for ix in 0..corr.n_x() {
        for k in 0..n_xi {
            let xi = corr.xi_nodes[k].as_f64();
            lhs.push(corr.chi_bar[corr.idx(0, ix, k)].abs().as_f64());
            basis.push([xi.abs(), xi * xi * 0.5, wsq_int[k].abs()]);
        }
    }
    Ok(ShiftData { lhs, basis })
}

/// Fit the smallest covering (μ₁, μ₂, μ₃) on a calibration solution.
pub fn fit_sharp_shift<T: Scalar>(
    rho: &ScalarField<T>,
    eps: T,
    noise: &NoisePath<T>,
    u_par_at_origin: impl Fn(T) -> T,
) -> Result<MuConstants, MetricError> {
    let data = sharp_shift_data(rho, eps, noise, &u_par_at_origin)?;
    Ok(fit_covering_mu(&data.lhs, &data.basis))
}

pub fn fit_corrector_growth<T: Scalar>(
    corr: &CorrectorField<T>,
    noise: &NoisePath<T>,
) -> Result<MuConstants, MetricError> {
    let data = corrector_growth_data(corr, noise)?;
    Ok(fit_covering_mu(&data.lhs, &data.basis))
}

/// Inputs for the nodewise bound checks.
pub enum BoundInput<'a, T> {
    Rho {
        rho: &'a ScalarField<T>,
        eps: T,
        advection: &'a AdvectionSpec<T>,
        u_par_at_origin: &'a dyn Fn(T) -> T,
    },
    Corrector(&'a CorrectorField<T>),
}

/// Evaluate the named inequality nodewise. Fitted bounds take their constants
/// from a calibration run; the printed 1/2 bound takes none.
pub fn check_bounds<T: Scalar>(
    input: &BoundInput<'_, T>,
    noise: &NoisePath<T>,
    which: BoundName,
    constants: Option<MuConstants>,
    lipschitz_cap: Option<f64>,
) -> Result<BoundReport, MetricError> {
    let mut max_violation = f64::NEG_INFINITY;
    let mut fitted = None;
    let mut lips = None;
    match which {
        BoundName::WithinHalfY => {
            let (rho, _) = expect_rho(input)?;
            for ix in 0..rho.grid.nx {
                for j in 0..rho.grid.ny {
                    let y = rho.grid.y_at(j);
                    let v = (rho.get(ix, j) - y).abs() - y.abs() * T::of(0.5);
                    max_violation = max_violation.max(v.as_f64());
                }
            }
        }
        BoundName::WeakLinear => {
            let (rho, ctx) = expect_rho(input)?;
            let (eps, advection) = ctx;
            let u_inf = advection.sup_bound_with_noise(noise.certified_bound());
            let c = T::of(3.0) * eps * u_inf;
            for ix in 0..rho.grid.nx {
                for j in 0..rho.grid.ny {
                    let y = rho.grid.y_at(j);
                    let v = (rho.get(ix, j) - y).abs() - c * y.abs();
                    max_violation = max_violation.max(v.as_f64());
                }
            }
        }
        BoundName::Lipschitz => {
            let (rho, _) = expect_rho(input)?;
            let g = rho.grid;
            let mut max_q = 0.0f64;
            for ix in 0..g.nx {
                let xr = if ix + 1 == g.nx { 0 } else { ix + 1 };
                for j in 0..g.ny {
                    if j + 1 < g.ny {
                        let q = ((rho.get(ix, j + 1) - rho.get(ix, j)) / g.hy()).abs();
                        max_q = max_q.max(q.as_f64());
                    }
                    if g.nx > 1 {
                        let q = ((rho.get(xr, j) - rho.get(ix, j)) / g.hx()).abs();
                        max_q = max_q.max(q.as_f64());
                    }
                }
            }
            let cap = lipschitz_cap.unwrap_or(max_q * 1.05);
            lips = Some(cap);
            max_violation = max_q - cap;
        }
        BoundName::SharpShift => {
            let (rho, ctx) = expect_rho(input)?;
            let (eps, _) = ctx;
            let u_par = match input {
                BoundInput::Rho { u_par_at_origin, .. } => u_par_at_origin,
                _ => unreachable!(),
            };
            let data = sharp_shift_data(rho, eps, noise, u_par)?;
            let mu = constants.unwrap_or_else(|| fit_covering_mu(&data.lhs, &data.basis));
            fitted = Some(mu);
            for (bb, l) in data.basis.iter().zip(&data.lhs) {
                let rhs = bb[0] * mu.mu1 + bb[1] * mu.mu2 + bb[2] * mu.mu3;
                max_violation = max_violation.max(l - rhs);
            }
        }
        BoundName::CorrectorGrowth => {
            let corr = match input {
                BoundInput::Corrector(c) => c,
                _ => return Err(MetricError::TauMismatch),
            };
            let data = corrector_growth_data(corr, noise)?;
            let mu = constants.unwrap_or_else(|| fit_covering_mu(&data.lhs, &data.basis));
            fitted = Some(mu);
            for (bb, l) in data.basis.iter().zip(&data.lhs) {
                let rhs = bb[0] * mu.mu1 + bb[1] * mu.mu2 + bb[2] * mu.mu3;
                max_violation = max_violation.max(l - rhs);
            }
        }
    }
    Ok(BoundReport {
        bound_name: which.to_string(),
        max_violation,
        fitted_constants: fitted,
        lipschitz_constant: lips,
        pass: max_violation <= 0.0,
    })
}

fn expect_rho<'a, T: Scalar>(
    input: &'a BoundInput<'a, T>,
) -> Result<(&'a ScalarField<T>, (T, &'a AdvectionSpec<T>)), MetricError> {
    match input {
        BoundInput::Rho { rho, eps, advection, .. } => Ok((rho, (*eps, advection))),
        BoundInput::Corrector(_) => Err(MetricError::TauMismatch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AdvectionExpr;
    use crate::noise::{sample_noise_with_resolution, NoisePath, NoiseSpec, StepLaw};
    use approx::assert_relative_eq;

    fn shear_setup(
        eps: f64,
        seed: u64,
        y_max: f64,
        hy: f64,
    ) -> (SimParams<f64>, AdvectionSpec<f64>, NoisePath<f64>, Grid2D<f64>) {
        let params = SimParams::g_equation(eps);
        let adv = AdvectionSpec::pure_shear(1.0);
        let spec = NoiseSpec::new(seed, StepLaw::Rademacher);
        let noise = sample_noise_with_resolution(&spec, (-2.0, y_max + 2.0), hy).unwrap();
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, y_max, hy, false).unwrap();
        (params, adv, noise, grid)
    }

    #[test]
    fn rho_is_identity_without_advection() {
        let params = SimParams::g_equation(0.0);
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, 10.0, 0.05, false).unwrap();
        let sol = solve_rho(&params, &AdvectionSpec::zero(), None, grid, 1e-6).unwrap();
        let mut err = 0.0f64;
        for j in 0..grid.ny {
            err = err.max((sol.rho.get(0, j) - grid.y_at(j)).abs());
        }
        assert!(err <= 2e-6, "sup |rho - y| = {err}");
    }

    #[test]
    fn rho_matches_shear_oracle() {
        let (params, adv, noise, grid) = shear_setup(0.1, 3, 20.0, 0.02);
        let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
        let mut err = 0.0f64;
        for j in 0..grid.ny {
            let y = grid.y_at(j);
            let oracle = shear_oracle(&noise, 0.1, 1.0, y).unwrap();
            err = err.max((sol.rho.get(0, j) - oracle).abs());
        }
        assert!(err <= 5.0 * 0.02, "sup |rho - oracle| = {err}");
    }

    #[test]
    fn rho_within_half_y() {
        let (params, adv, noise, grid) = shear_setup(0.1, 7, 10.0, 0.02);
        let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
        let input = BoundInput::Rho {
            rho: &sol.rho,
            eps: 0.1,
            advection: &adv,
            u_par_at_origin: &|_| 1.0,
        };
        let rep = check_bounds(&input, &noise, BoundName::WithinHalfY, None, None).unwrap();
        assert!(rep.pass, "violation {}", rep.max_violation);
    }

    #[test]
    fn residual_history_non_increasing_after_burn_in() {
        let (params, adv, noise, grid) = shear_setup(0.1, 11, 10.0, 0.02);
        let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
        let h = &sol.residual_history;
        let mut running_min = f64::INFINITY;
        for (i, &r) in h.iter().enumerate() {
            if i >= 10 {
                assert!(
                    r <= running_min * (1.0 + 1e-9) + 1e-15,
                    "residual rose at step {i}: {r} > {running_min}"
                );
            }
            running_min = running_min.min(r);
        }
    }

    #[test]
    fn oracle_special_cases() {
        let spec = NoiseSpec::new(1, StepLaw::Rademacher);
        // w ≡ 0 → y
        let zero = NoisePath::with_steps(&spec, (-25.0, 25.0), -27, vec![0.0; 54]).unwrap();
        assert_relative_eq!(shear_oracle(&zero, 0.1, 1.0, 7.3).unwrap(), 7.3, epsilon = 1e-9);
        // w ≡ c → y / (1 + eps u c)
        let c = 0.6;
        let cpath =
            NoisePath::with_steps(&spec, (-25.0, 25.0), -27, vec![c; 54]).unwrap();
        let y = 5.0;
        assert_relative_eq!(
            shear_oracle(&cpath, 0.1, 1.0, y).unwrap(),
            y / (1.0 + 0.1 * c),
            epsilon = 1e-9
        );
        // derivative at 0 equals (1 + eps u w(0))^{-1}
        let noise = sample_noise_with_resolution(&spec, (-2.0, 2.0), 0.02).unwrap();
        let h = 1e-5;
        let d = (shear_oracle(&noise, 0.1, 1.0, h).unwrap()
            - shear_oracle(&noise, 0.1, 1.0, -h).unwrap())
            / (2.0 * h);
        let expect = 1.0 / (1.0 + 0.1 * noise.w(0.0).unwrap());
        assert_relative_eq!(d, expect, epsilon = 1e-6);
        // strong shear rejected
        let big = NoisePath::with_steps(&spec, (-25.0, 25.0), -27, vec![1.0; 54]).unwrap();
        assert!(shear_oracle(&big, 1.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn corrector_zero_for_exact_identity() {
        let spec = NoiseSpec::new(2, StepLaw::Rademacher);
        let noise = NoisePath::with_steps(&spec, (-25.0, 25.0), -27, vec![0.0; 54]).unwrap();
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, 20.0, 0.05, false).unwrap();
        let rho = ScalarField::from_fn(grid, 0.0, |_, y| y);
        let xi: Vec<f64> = (0..=100).map(|i| i as f64 * 0.02).collect();
        let corr = extract_corrector(&rho, 0.1, &noise, |_| 1.0, xi).unwrap();
        for &c in &corr.chi {
            assert!(c.abs() < 1e-10);
        }
        for &c in &corr.chi_bar {
            assert!(c.abs() < 1e-10);
        }
    }

    #[test]
    fn shifted_corrector_vanishes_for_synthetic_shift() {
        // rho = y − ε^{2/3} u∥ W^ε(ε^{2/3} y) makes χ̄ ≡ 0 up to interpolation
        let eps = 0.1f64;
        let e23 = eps.powf(2.0 / 3.0);
        let spec = NoiseSpec::new(5, StepLaw::Rademacher);
        let noise = sample_noise_with_resolution(&spec, (-2.0, 25.0), 0.02).unwrap();
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, 20.0, 0.02, false).unwrap();
        let rho = ScalarField::from_fn(grid, 0.0, |_, y| {
            y - e23 * integrate_w_eps(&noise, eps, e23 * y).unwrap()
        });
        let xi: Vec<f64> = (0..=80).map(|i| i as f64 * 0.025).collect();
        let corr = extract_corrector(&rho, eps, &noise, |_| 1.0, xi).unwrap();
        let max_bar = corr.chi_bar.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(max_bar < 5e-4, "max |chi_bar| = {max_bar}");
        // shift identity holds exactly at the nodes
        for ix in 0..corr.n_x() {
            for k in 0..corr.n_xi() {
                let i = corr.idx(0, ix, k);
                let w = integrate_w_eps(&noise, eps, corr.xi_nodes[k]).unwrap();
                assert!((corr.chi_bar[i] - corr.chi[i] - w).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn corrector_boundary_value_small() {
        let (params, adv, noise, grid) = shear_setup(0.1, 13, 20.0, 0.02);
        let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
        let xi: Vec<f64> = (0..=50).map(|i| i as f64 * 0.02).collect();
        let corr = extract_corrector(&sol.rho, 0.1, &noise, |_| 1.0, xi).unwrap();
        let e23 = 0.1f64.powf(2.0 / 3.0);
        let tol = 2.0 * 0.02 / e23;
        assert!(corr.chi_at(0, 0).abs() <= tol, "chi(0) = {}", corr.chi_at(0, 0));
    }

    #[test]
    fn growth_bound_calibrates_then_verifies() {
        // fit at ε = 0.2, verify unchanged at ε ∈ {0.1, 0.05}
        let eps_list = [0.2f64, 0.1, 0.05];
        let mut mu: Option<MuConstants> = None;
        for (i, &eps) in eps_list.iter().enumerate() {
            let hy = (eps / 12.0).min(0.01);
            let (params, adv, noise, grid) = shear_setup(eps, 17, 20.0, hy);
            let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
            let input = BoundInput::Rho {
                rho: &sol.rho,
                eps,
                advection: &adv,
                u_par_at_origin: &|_| 1.0,
            };
            if i == 0 {
                let fitted =
                    fit_sharp_shift(&sol.rho, eps, &noise, |_| 1.0).unwrap();
                let rep =
                    check_bounds(&input, &noise, BoundName::SharpShift, Some(fitted), None)
                        .unwrap();
                assert!(rep.pass, "calibration violated: {}", rep.max_violation);
                mu = Some(fitted);
            } else {
                let rep = check_bounds(&input, &noise, BoundName::SharpShift, mu, None)
                    .unwrap();
                assert!(
                    rep.pass,
                    "eps = {eps}: violation {} with constants {:?}",
                    rep.max_violation, mu
                );
            }
        }
    }

    #[test]
    fn mirrored_grid_solves_both_sides() {
        let params = SimParams::g_equation(0.0);
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, 5.0, 0.05, true).unwrap();
        let sol = solve_rho(&params, &AdvectionSpec::zero(), None, grid, 1e-6).unwrap();
        for j in 0..grid.ny {
            let y = grid.y_at(j);
            assert!(
                (sol.rho.get(0, j) - y).abs() < 5e-5,
                "rho({y}) = {}",
                sol.rho.get(0, j)
            );
        }
    }

    #[test]
    fn td_corrector_zero_for_unperturbed() {
        // ε = 0 exact solution y − t gives χ ≡ 0 on the wedge and masks ξ < τ
        let eps = 0.1f64;
        let e23 = eps.powf(2.0 / 3.0);
        let spec = NoiseSpec::new(2, StepLaw::Rademacher);
        let noise = NoisePath::with_steps(&spec, (-25.0, 25.0), -27, vec![0.0; 54]).unwrap();
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, 20.0, 0.05, false).unwrap();
        let taus = vec![0.0, 0.1, 0.2];
        let traj: Vec<_> = taus
            .iter()
            .map(|&tau| ScalarField::from_fn(grid, tau / e23, |_, y| y - tau / e23))
            .collect();
        let xi: Vec<f64> = (0..=40).map(|i| i as f64 * 0.02).collect();
        let corr =
            extract_td_corrector(&traj, eps, &noise, |_| 1.0, xi, taus.clone()).unwrap();
        for it in 0..taus.len() {
            for k in 0..corr.n_xi() {
                let i = corr.idx(it, 0, k);
                if corr.xi_nodes[k] < taus[it] {
                    assert!(!corr.valid[i], "wedge mask missing");
                } else {
                    assert!(corr.valid[i]);
                    assert!(corr.chi[i].abs() < 1e-10);
                }
            }
        }
        // mismatched tau stamps are rejected
        assert!(extract_td_corrector(
            &traj,
            eps,
            &noise,
            |_| 1.0,
            vec![0.0, 0.02],
            vec![0.0, 0.3, 0.6]
        )
        .is_err());
    }

    #[test]
    fn lipschitz_bound_stable_across_eps() {
        let mut cap: Option<f64> = None;
        for &eps in &[0.2f64, 0.1, 0.05] {
            let (params, adv, noise, grid) = shear_setup(eps, 23, 10.0, 0.02);
            let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
            let input = BoundInput::Rho {
                rho: &sol.rho,
                eps,
                advection: &adv,
                u_par_at_origin: &|_| 1.0,
            };
            let rep =
                check_bounds(&input, &noise, BoundName::Lipschitz, None, cap).unwrap();
            assert!(rep.pass, "eps {eps}: violation {}", rep.max_violation);
            if cap.is_none() {
                cap = rep.lipschitz_constant;
            }
        }
    }

    #[test]
    fn two_dimensional_metric_smoke() {
        // x-dependent parallel advection on a small 2-D grid
        let eps = 0.1f64;
        let params = SimParams::g_equation(eps);
        let adv = AdvectionSpec::new(AdvectionExpr::zero(), AdvectionExpr::cos_x(1.0, 1))
            .unwrap();
        let spec = NoiseSpec::new(31, StepLaw::Rademacher);
        let noise = sample_noise_with_resolution(&spec, (-2.0, 12.0), 0.04).unwrap();
        let grid = metric_grid((0.0, std::f64::consts::TAU), 16, 8.0, 0.04, false).unwrap();
        let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-5).unwrap();
        let input = BoundInput::Rho {
            rho: &sol.rho,
            eps,
            advection: &adv,
            u_par_at_origin: &|x: f64| x.cos(),
        };
        let rep = check_bounds(&input, &noise, BoundName::WithinHalfY, None, None).unwrap();
        assert!(rep.pass);
        let rep2 = check_bounds(&input, &noise, BoundName::WeakLinear, None, None).unwrap();
        assert!(rep2.pass, "weak linear violation {}", rep2.max_violation);
        // Dirichlet row pinned
        for ix in 0..grid.nx {
            assert!(sol.rho.get(ix, 0).abs() < 1e-9);
        }
    }
}
