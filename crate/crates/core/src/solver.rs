//! Monotone finite-difference solver for the unified initial value problem
//!
//! ```text
//!   f_t + ε u(x, y, ε^α t)·∇f + (1/r)|∇f|^r + (r−1)/r = (ε^β/2) Δf,
//! ```
//!
//! which covers the level-set front model (r = 1, Godunov/Rouy–Tourin
//! upwinding) and the viscous eikonal model (r = 2, global Lax–Friedrichs),
//! with explicit TVD-RK2 time stepping and a centered 5-point Laplacian.
//! The domain is periodic in x; in y the stencil is closed by one-sided
//! linear extrapolation, matching the linear growth of front-like data.

use crate::fields::{
    front_like_envelopes, AdvectionSpec, FieldError, Grid2D, ScalarField, SimParams,
};
use crate::noise::{NoiseError, NoisePath};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("CFL violation: dt = {dt} exceeds the stable step {dt_max}")]
    CflViolation { dt: f64, dt_max: f64 },
    #[error("nonpositive radicand {0} in the nonlinear error function")]
    NonpositiveRadicand(f64),
    #[error("probe exponent {0} overflows: probe window reaches too deep past the front")]
    ProbeOverflow(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("steady-state march did not converge; last residual rates {0:?}")]
    NonConvergence(Vec<f64>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Rouy–Tourin upwinding for r = 1 with sign-upwinded advection.
    GodunovR1,
    /// Global Lax–Friedrichs for any r in [1, 2].
    LaxFriedrichs,
}

/// Which second-order term the viscous model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianMode {
    /// Δf in both variables (default).
    #[default]
    Full,
    /// Δ_x f only.
    TransverseOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub scheme: Scheme,
    pub cfl: T,
    pub stop_time: T,
    pub output_times: Vec<T>,
    pub residual_tol: T,
    pub laplacian: LaplacianMode,
    pub allow_non_front_like: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(scheme: Scheme, stop_time: T) -> Self {
        Self {
            scheme,
            cfl: T::of(0.45),
            stop_time,
            output_times: vec![stop_time],
            residual_tol: T::of(1e-6),
            laplacian: LaplacianMode::Full,
            allow_non_front_like: false,
        }
    }

    pub fn with_outputs(mut self, times: Vec<T>) -> Self {
        self.output_times = times;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > T::zero() && self.cfl < T::one()) {
            return Err(SolverError::InvalidConfig(format!("cfl = {} not in (0,1)", self.cfl)));
        }
        if !(self.residual_tol > T::zero()) {
            return Err(SolverError::InvalidConfig("residual_tol must be positive".into()));
        }
        for &t in &self.output_times {
            if t < T::zero() || t > self.stop_time + T::of(1e-12) {
                return Err(SolverError::InvalidConfig(format!(
                    "output time {t} outside [0, {}]",
                    self.stop_time
                )));
            }
        }
        Ok(())
    }
}

/// One-sided difference quotients feeding the numerical flux.
#[derive(Debug, Clone, Copy)]
pub struct OneSidedSlopes<T> {
    pub x_minus: T,
    pub x_plus: T,
    pub y_minus: T,
    pub y_plus: T,
}

/// Lax–Friedrichs dissipation coefficients; must dominate |∂H/∂p| per axis.
#[derive(Debug, Clone, Copy)]
pub struct LfCoefficients<T> {
    pub theta_x: T,
    pub theta_y: T,
}

#[inline]
fn power_term<T: Scalar>(p_sq: T, r: T) -> T {
    // (1/r)|p|^r + (r−1)/r
    let one = T::one();
    let two = T::of(2.0);
    if r == one {
        p_sq.sqrt()
    } else if r == two {
        T::of(0.5) * p_sq + T::of(0.5)
    } else {
        p_sq.powf(r / two) / r + (r - one) / r
    }
}

/// Consistent monotone numerical flux for H(p) = ε u·p + (1/r)|p|^r + (r−1)/r.
/// `eps_advection` is the already-scaled pair (ε u⊥, ε u∥ w).
#[inline]
pub fn numerical_hamiltonian<T: Scalar>(
    scheme: Scheme,
    slopes: OneSidedSlopes<T>,
    eps_advection: (T, T),
    r: T,
    lf: LfCoefficients<T>,
) -> T {
    let (ax, ay) = eps_advection;
    match scheme {
        Scheme::GodunovR1 => {
            let adv_x = if ax >= T::zero() { ax * slopes.x_minus } else { ax * slopes.x_plus };
            let adv_y = if ay >= T::zero() { ay * slopes.y_minus } else { ay * slopes.y_plus };
            let dx = slopes.x_minus.max(T::zero()).max(-slopes.x_plus.min(T::zero()));
            let dy = slopes.y_minus.max(T::zero()).max(-slopes.y_plus.min(T::zero()));
            adv_x + adv_y + (dx * dx + dy * dy).sqrt()
        }
        Scheme::LaxFriedrichs => {
            let half = T::of(0.5);
            let px = (slopes.x_minus + slopes.x_plus) * half;
            let py = (slopes.y_minus + slopes.y_plus) * half;
            let p_sq = px * px + py * py;
            ax * px + ay * py + power_term(p_sq, r)
                - lf.theta_x * (slopes.x_plus - slopes.x_minus) * half
                - lf.theta_y * (slopes.y_plus - slopes.y_minus) * half
        }
    }
}

// ---------------------------------------------------------------------------
// stepping machinery

pub(crate) struct Stepper<'a, T> {
    pub grid: Grid2D<T>,
    params: SimParams<T>,
    advection: &'a AdvectionSpec<T>,
    noise: Option<&'a NoisePath<T>>,
    pub config: SolverConfig<T>,
    // cached per-node quantities
    w_y: Vec<T>,           // w(y_j), zeros when no noise/shear
    eps_upar_x: Vec<T>,    // ε·u∥(x_i, t_eff), refreshed when time-dependent
    eps_uperp: Vec<T>,     // ε·u⊥ per node, empty when u⊥ ≡ 0
    has_shear: bool,
    has_perp: bool,
    cached_t_eff: T,
    stage: Vec<T>,
    k: Vec<T>,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(
        grid: Grid2D<T>,
        params: SimParams<T>,
        advection: &'a AdvectionSpec<T>,
        noise: Option<&'a NoisePath<T>>,
        config: SolverConfig<T>,
    ) -> Result<Self, SolverError> {
        params.validate()?;
        config.validate()?;
        let has_shear = !advection.u_par.is_zero() && params.eps > T::zero();
        let has_perp = !advection.u_perp.is_zero() && params.eps > T::zero();
        let mut w_y = vec![T::zero(); grid.ny];
        if has_shear {
            let path = noise.ok_or_else(|| {
                SolverError::InvalidConfig("shear advection requires a noise path".into())
            })?;
            if !path.covers(grid.y_min, grid.y_max) {
                return Err(SolverError::Noise(NoiseError::OutOfRange {
                    y: grid.y_max.as_f64(),
                    lo: path.y_min.as_f64(),
                    hi: path.y_max.as_f64(),
                }));
            }
            if grid.hy() > T::of(0.1) {
                return Err(SolverError::InvalidConfig(format!(
                    "hy = {} too coarse to resolve the noise (need <= 0.1)",
                    grid.hy()
                )));
            }
            for (j, w) in w_y.iter_mut().enumerate() {
                *w = path.eval(grid.y_at(j))?.0;
            }
        }
        let mut s = Self {
            grid,
            params,
            advection,
            noise,
            config,
            w_y,
            eps_upar_x: vec![T::zero(); grid.nx],
            eps_uperp: Vec::new(),
            has_shear,
            has_perp,
            cached_t_eff: T::nan(),
            stage: vec![T::zero(); grid.len()],
            k: vec![T::zero(); grid.len()],
        };
        s.refresh_advection(T::zero());
        Ok(s)
    }

    fn refresh_advection(&mut self, t_eff: T) {
        if t_eff == self.cached_t_eff {
            return;
        }
        let eps = self.params.eps;
        if self.has_shear {
            for i in 0..self.grid.nx {
                self.eps_upar_x[i] =
                    eps * self.advection.u_par.eval(self.grid.x_at(i), T::zero(), t_eff);
            }
        }
        if self.has_perp {
            if self.eps_uperp.is_empty() {
                self.eps_uperp = vec![T::zero(); self.grid.len()];
            }
            for ix in 0..self.grid.nx {
                let x = self.grid.x_at(ix);
                for iy in 0..self.grid.ny {
                    self.eps_uperp[self.grid.idx(ix, iy)] =
                        eps * self.advection.u_perp.eval(x, self.grid.y_at(iy), t_eff);
                }
            }
        }
        self.cached_t_eff = t_eff;
    }

    fn max_one_sided_slope(&self, f: &[T]) -> T {
        let g = &self.grid;
        let hx = g.hx();
        let hy = g.hy();
        let mut m = T::zero();
        for ix in 0..g.nx {
            let xr = if ix + 1 == g.nx { 0 } else { ix + 1 };
            for iy in 0..g.ny {
                let v = f[g.idx(ix, iy)];
                if iy + 1 < g.ny {
                    m = m.max(((f[g.idx(ix, iy + 1)] - v) / hy).abs());
                }
                if g.nx > 1 {
                    m = m.max(((f[g.idx(xr, iy)] - v) / hx).abs());
                }
            }
        }
        m
    }

    fn advection_bounds(&self) -> (T, T) {
        let eps = self.params.eps;
        let ax = eps * self.advection.u_perp.sup_bound();
        let noise_bound = self
            .noise
            .map(|p| p.certified_bound())
            .unwrap_or(T::zero());
        let ay = eps * self.advection.u_par.sup_bound() * noise_bound;
        (ax, ay)
    }

    fn lf_coefficients(&self, f: &[T]) -> LfCoefficients<T> {
        let (ax, ay) = self.advection_bounds();
        let g = self.max_one_sided_slope(f).max(T::one()) * T::of(1.05);
        let r = self.params.r;
        let speed = if r == T::one() {
            T::one()
        } else if r == T::of(2.0) {
            g
        } else {
            g.powf(r - T::one())
        };
        LfCoefficients { theta_x: ax + speed, theta_y: ay + speed }
    }

    /// Largest stable step at the current state (already includes cfl).
    pub fn dt_bound(&self, f: &[T]) -> T {
        let lf = match self.config.scheme {
            Scheme::GodunovR1 => {
                let (ax, ay) = self.advection_bounds();
                LfCoefficients { theta_x: ax + T::one(), theta_y: ay + T::one() }
            }
            Scheme::LaxFriedrichs => self.lf_coefficients(f),
        };
        let hx = self.grid.hx();
        let hy = self.grid.hy();
        let mut rate = lf.theta_y / hy;
        if self.grid.nx > 1 {
            rate += lf.theta_x / hx;
        }
        let nu = self.params.viscosity();
        if nu > T::zero() {
            let mut prate = T::of(2.0) * nu / (hy * hy);
            match self.config.laplacian {
                LaplacianMode::Full => {
                    if self.grid.nx > 1 {
                        prate += T::of(2.0) * nu / (hx * hx);
                    }
                }
                LaplacianMode::TransverseOnly => {
                    prate = if self.grid.nx > 1 {
                        T::of(2.0) * nu / (hx * hx)
                    } else {
                        T::zero()
                    };
                }
            }
            rate += prate;
        }
        if rate <= T::zero() {
            return T::infinity();
        }
        self.config.cfl / rate
    }

    /// Spatial operator into the k buffer: k = −H_num(∇f) + ν Δf.
    fn rhs_into_k(&mut self, f: &[T], t_eff: T, lf: LfCoefficients<T>) {
        self.refresh_advection(t_eff);
        let g = self.grid;
        let hx = g.hx();
        let hy = g.hy();
        let nu = self.params.viscosity();
        let r = self.params.r;
        let scheme = self.config.scheme;
        let lap_mode = self.config.laplacian;
        let nx = g.nx;
        let ny = g.ny;
        for ix in 0..nx {
            let xl = if ix == 0 { nx - 1 } else { ix - 1 };
            let xr = if ix + 1 == nx { 0 } else { ix + 1 };
            let ax_row = self.eps_upar_x[ix];
            let base = ix * ny;
            let base_l = xl * ny;
            let base_r = xr * ny;
            for iy in 0..ny {
                let v = f[base + iy];
                // ghost closure: linear extrapolation with the boundary slope
                let f_ym = if iy == 0 {
                    T::of(2.0) * v - f[base + 1]
                } else {
                    f[base + iy - 1]
                };
                let f_yp = if iy + 1 == ny {
                    T::of(2.0) * v - f[base + ny - 2]
                } else {
                    f[base + iy + 1]
                };
                let (f_xl, f_xr) = if nx > 1 {
                    (f[base_l + iy], f[base_r + iy])
                } else {
                    (v, v)
                };
                let slopes = OneSidedSlopes {
                    x_minus: (v - f_xl) / hx,
                    x_plus: (f_xr - v) / hx,
                    y_minus: (v - f_ym) / hy,
                    y_plus: (f_yp - v) / hy,
                };
                let a_perp = if self.has_perp {
                    self.eps_uperp[base + iy]
                } else {
                    T::zero()
                };
                let a_shear = ax_row * self.w_y[iy];
                let mut rhs =
                    -numerical_hamiltonian(scheme, slopes, (a_perp, a_shear), r, lf);
                if nu > T::zero() {
                    let lap_y = (f_yp - T::of(2.0) * v + f_ym) / (hy * hy);
                    let lap_x = if nx > 1 {
                        (f_xr - T::of(2.0) * v + f_xl) / (hx * hx)
                    } else {
                        T::zero()
                    };
                    let lap = match lap_mode {
                        LaplacianMode::Full => lap_x + lap_y,
                        LaplacianMode::TransverseOnly => lap_x,
                    };
                    rhs += nu * lap;
                }
                self.k[base + iy] = rhs;
            }
        }
    }

    /// One TVD-RK2 (Heun) step in place; `pin_row` re-imposes the Dirichlet
    /// value −(t + dt) on that row after each stage (steady-state march).
    pub fn rk2_step(&mut self, f: &mut [T], t: T, dt: T, pin_row: Option<usize>) {
        let lf = match self.config.scheme {
            Scheme::GodunovR1 => LfCoefficients { theta_x: T::zero(), theta_y: T::zero() },
            Scheme::LaxFriedrichs => self.lf_coefficients(f),
        };
        let t_eff0 = self.params.advection_time(t);
        self.rhs_into_k(f, t_eff0, lf);
        for i in 0..f.len() {
            self.stage[i] = f[i] + dt * self.k[i];
        }
        let pin_val = -(t + dt);
        if let Some(row) = pin_row {
            for ix in 0..self.grid.nx {
                self.stage[self.grid.idx(ix, row)] = pin_val;
            }
        }
        let t_eff1 = self.params.advection_time(t + dt);
        let stage = std::mem::take(&mut self.stage);
        self.rhs_into_k(&stage, t_eff1, lf);
        let half = T::of(0.5);
        for i in 0..f.len() {
            f[i] = half * (f[i] + stage[i] + dt * self.k[i]);
        }
        self.stage = stage;
        if let Some(row) = pin_row {
            for ix in 0..self.grid.nx {
                f[self.grid.idx(ix, row)] = pin_val;
            }
        }
    }
}

/// One explicit step of the unified model; refuses an unstable dt.
pub fn step<T: Scalar>(
    field: &ScalarField<T>,
    dt: T,
    params: &SimParams<T>,
    advection: &AdvectionSpec<T>,
    noise: Option<&NoisePath<T>>,
    config: &SolverConfig<T>,
) -> Result<ScalarField<T>, SolverError> {
    let mut stepper = Stepper::new(field.grid, *params, advection, noise, config.clone())?;
    let dt_max = stepper.dt_bound(&field.values);
    if dt > dt_max {
        return Err(SolverError::CflViolation { dt: dt.as_f64(), dt_max: dt_max.as_f64() });
    }
    let mut values = field.values.clone();
    stepper.rk2_step(&mut values, field.time_stamp, dt, None);
    Ok(ScalarField { grid: field.grid, values, time_stamp: field.time_stamp + dt })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRecord {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub scheme: Scheme,
    pub nx: usize,
    pub ny: usize,
    pub noise_seed: Option<u64>,
    pub output_times: Vec<f64>,
    pub steps_taken: usize,
}

#[derive(Debug)]
pub struct SolveOutput<T> {
    pub snapshots: Vec<ScalarField<T>>,
    pub record: SolveRecord,
}

/// Solve the initial value problem, returning fields at the requested output
/// times. The initial datum must be front-like unless explicitly overridden.
pub fn solve_ivp<T: Scalar>(
    initial: &ScalarField<T>,
    params: &SimParams<T>,
    advection: &AdvectionSpec<T>,
    noise: Option<&NoisePath<T>>,
    config: &SolverConfig<T>,
) -> Result<SolveOutput<T>, SolverError> {
    initial.validate()?;
    if !config.allow_non_front_like
        && initial.grid.y_min < T::zero()
        && initial.grid.y_max > T::zero()
    {
        for ix in 0..initial.grid.nx {
            let g = initial.grid;
            front_like_envelopes(
                |y| {
                    let pos = ((y - g.y_min) / g.hy()).as_f64();
                    let j = (pos.floor() as usize).min(g.ny - 2);
                    let u = T::of(pos - j as f64);
                    initial.get(ix, j) * (T::one() - u) + initial.get(ix, j + 1) * u
                },
                (g.y_min, g.y_max),
            )
            .map_err(|e| {
                SolverError::Field(FieldError::NotFrontLike(format!("column {ix}: {e}")))
            })?;
        }
    }
    let mut stepper = Stepper::new(initial.grid, *params, advection, noise, config.clone())?;
    let mut outputs: Vec<T> = config.output_times.clone();
    outputs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut snapshots = Vec::with_capacity(outputs.len());
    let mut f = initial.values.clone();
    let mut t = initial.time_stamp;
    let t_end = initial.time_stamp + config.stop_time;
    let mut next_out = outputs.into_iter().peekable();
    let tiny = T::of(1e-13);
    let mut steps = 0usize;
    while let Some(&target) = next_out.peek() {
        let target_abs = initial.time_stamp + target;
        while t < target_abs - tiny {
            let dt = stepper.dt_bound(&f).min(target_abs - t);
            stepper.rk2_step(&mut f, t, dt, None);
            t += dt;
            steps += 1;
            if steps > 50_000_000 {
                return Err(SolverError::InvalidConfig("step budget exhausted".into()));
            }
        }
        snapshots.push(ScalarField { grid: initial.grid, values: f.clone(), time_stamp: t });
        next_out.next();
    }
    let _ = t_end;
    let record = SolveRecord {
        eps: params.eps.as_f64(),
        alpha: params.alpha.as_f64(),
        beta: params.beta.as_f64(),
        r: params.r.as_f64(),
        scheme: config.scheme,
        nx: initial.grid.nx,
        ny: initial.grid.ny,
        noise_seed: noise.map(|n| n.seed_used),
        output_times: config.output_times.iter().map(|t| t.as_f64()).collect(),
        steps_taken: steps,
    };
    Ok(SolveOutput { snapshots, record })
}

// ---------------------------------------------------------------------------
// nonlinear error function

#[derive(Debug, Clone, Copy)]
pub struct NEpsDiagnostic<T> {
    pub p: [T; 2],
    pub s: T,
    pub value: T,
}

/// N_ε(p, s) = (1/(r ε^{4/3})) [1 + r ε^{4/3} s + (r ε^{4/3}/2)|p|²
///             − (1 + 2ε^{4/3} s + ε^{4/3}|p|² + ε^{8/3} s²)^{r/2}].
pub fn eval_n_eps<T: Scalar>(p: [T; 2], s: T, eps: T, r: T) -> Result<T, SolverError> {
    let e43 = eps.powf(T::of(4.0 / 3.0));
    let e83 = e43 * e43;
    let p_sq = p[0] * p[0] + p[1] * p[1];
    let radicand = T::one() + T::of(2.0) * e43 * s + e43 * p_sq + e83 * s * s;
    if radicand <= T::zero() {
        return Err(SolverError::NonpositiveRadicand(radicand.as_f64()));
    }
    let lead = T::one() + r * e43 * s + r * e43 * T::of(0.5) * p_sq;
    Ok((lead - radicand.powf(r * T::of(0.5))) / (r * e43))
}

pub fn n_eps_diagnostic<T: Scalar>(
    p: [T; 2],
    s: T,
    eps: T,
    r: T,
) -> Result<NEpsDiagnostic<T>, SolverError> {
    Ok(NEpsDiagnostic { p, s, value: eval_n_eps(p, s, eps, r)? })
}

// ---------------------------------------------------------------------------
// exponential transform check

#[derive(Debug, Clone, Copy)]
pub struct ProbeWindow<T> {
    pub x: (T, T),
    pub y: (T, T),
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransformReport {
    pub residual_sup: f64,
    pub t_center: f64,
    pub t_scale: f64,
}

/// Residual of T_t + u·∇T − ΔT/2 − T/2 for T = exp(−ε^{−β} v(ε^β x, ε^β y, ε^α t)),
/// sampled on a coarse probe grid; needs three consecutive snapshots for T_t.
pub fn check_t_transform<T: Scalar>(
    trajectory: &[ScalarField<T>],
    params: &SimParams<T>,
    advection: &AdvectionSpec<T>,
    noise: Option<&NoisePath<T>>,
    window: ProbeWindow<T>,
) -> Result<TransformReport, SolverError> {
    if trajectory.len() < 3 {
        return Err(SolverError::InvalidConfig("need three snapshots for T_t".into()));
    }
    if !params.beta.is_finite() {
        return Err(SolverError::InvalidConfig("transform requires beta < infinity".into()));
    }
    if !(params.eps > T::zero()) || !params.alpha.is_finite() {
        return Err(SolverError::InvalidConfig(
            "transform requires eps > 0 and finite alpha".into(),
        ));
    }
    let eb = params.eps.powf(params.beta);
    let ea = params.eps.powf(params.alpha);
    let inv_eb = eb.recip();
    let n = window.n.max(5);
    let hx_p = (window.x.1 - window.x.0) / T::of((n - 1) as f64);
    let hy_p = (window.y.1 - window.y.0) / T::of((n - 1) as f64);
    // bilinear interpolation of v at scaled coordinates
    let interp = |f: &ScalarField<T>, xx: T, yy: T| -> T {
        let g = f.grid;
        let px = ((xx - g.x_min) / g.hx()).as_f64();
        let py = ((yy - g.y_min) / g.hy()).as_f64();
        let i = (px.floor() as i64).clamp(0, g.nx as i64 - 1) as usize;
        let j = (py.floor() as i64).clamp(0, g.ny as i64 - 2) as usize;
        let i1 = (i + 1).min(g.nx - 1);
        let u = T::of((px - i as f64).clamp(0.0, 1.0));
        let v = T::of((py - j as f64).clamp(0.0, 1.0));
        let one = T::one();
        f.get(i, j) * (one - u) * (one - v)
            + f.get(i1, j) * u * (one - v)
            + f.get(i, j + 1) * (one - u) * v
            + f.get(i1, j + 1) * u * v
    };
    // T on the probe grid at the three snapshot times
    let mut t_vals = vec![vec![T::zero(); n * n]; 3];
    for (k, snap) in trajectory.iter().take(3).enumerate() {
        for i in 0..n {
            let x = window.x.0 + hx_p * T::of(i as f64);
            for j in 0..n {
                let y = window.y.0 + hy_p * T::of(j as f64);
                let v = interp(snap, eb * x, eb * y);
                let expo = -inv_eb * v;
                if expo > T::of(350.0) {
                    return Err(SolverError::ProbeOverflow(expo.as_f64()));
                }
                t_vals[k][i * n + j] = expo.exp();
            }
        }
    }
    // probe times in transform coordinates: t = s / ε^α
    let s0 = trajectory[0].time_stamp;
    let s1 = trajectory[1].time_stamp;
    let s2 = trajectory[2].time_stamp;
    let dt_probe = (s2 - s0) / ea;
    let mut sup = T::zero();
    for i in 1..n - 1 {
        let x = window.x.0 + hx_p * T::of(i as f64);
        for j in 1..n - 1 {
            let y = window.y.0 + hy_p * T::of(j as f64);
            let c = t_vals[1][i * n + j];
            let t_t = (t_vals[2][i * n + j] - t_vals[0][i * n + j]) / dt_probe;
            let t_x = (t_vals[1][(i + 1) * n + j] - t_vals[1][(i - 1) * n + j])
                / (T::of(2.0) * hx_p);
            let t_y = (t_vals[1][i * n + j + 1] - t_vals[1][i * n + j - 1])
                / (T::of(2.0) * hy_p);
            let lap = (t_vals[1][(i + 1) * n + j] - T::of(2.0) * c
                + t_vals[1][(i - 1) * n + j])
                / (hx_p * hx_p)
                + (t_vals[1][i * n + j + 1] - T::of(2.0) * c + t_vals[1][i * n + j - 1])
                    / (hy_p * hy_p);
            // advection as seen by the transformed equation
            let (ux, uy) = if params.eps > T::zero() && !advection.is_zero() {
                let t_adv = ea * (s1 / ea);
                let u_perp = advection.u_perp.eval(eb * x, eb * y, t_adv);
                let w = match noise {
                    Some(p) => p.eval(eb * y).map(|(w, _)| w).unwrap_or(T::zero()),
                    None => T::zero(),
                };
                let u_par = advection.u_par.eval(eb * x, T::zero(), t_adv) * w;
                (params.eps * u_perp, params.eps * u_par)
            } else {
                (T::zero(), T::zero())
            };
            let half = T::of(0.5);
            let res = t_t + ux * t_x + uy * t_y - half * lap - half * c;
            sup = sup.max(res.abs());
        }
    }
    Ok(TransformReport {
        residual_sup: sup.as_f64(),
        t_center: (s1 / ea).as_f64(),
        t_scale: t_vals[1][(n / 2) * n + n / 2].as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn no_lf<T: Scalar>() -> LfCoefficients<T> {
        LfCoefficients { theta_x: T::zero(), theta_y: T::zero() }
    }

    #[test]
    fn flux_consistency_on_equal_slopes() {
        // slopes (0, 1), u = 0: H = 1 for r = 1 and r = 2
        let slopes = OneSidedSlopes { x_minus: 0.0, x_plus: 0.0, y_minus: 1.0, y_plus: 1.0 };
        let h1 = numerical_hamiltonian(Scheme::GodunovR1, slopes, (0.0, 0.0), 1.0, no_lf());
        assert_relative_eq!(h1, 1.0);
        let h2 = numerical_hamiltonian(
            Scheme::LaxFriedrichs,
            slopes,
            (0.0, 0.0),
            2.0,
            LfCoefficients { theta_x: 1.0, theta_y: 2.0 },
        );
        assert_relative_eq!(h2, 1.0);
    }

    #[test]
    fn flux_refinement_order_on_smooth_field() {
        // both schemes approach the exact H(∇f) at order >= 0.9 under refinement
        let f = |x: f64, y: f64| (x).sin() * (0.7 * y).cos() + 0.3 * y;
        let fx = |x: f64, y: f64| x.cos() * (0.7 * y).cos();
        let fy = |x: f64, y: f64| -0.7 * x.sin() * (0.7 * y).sin() + 0.3;
        for &(scheme, r) in &[(Scheme::GodunovR1, 1.0), (Scheme::LaxFriedrichs, 2.0)] {
            let mut errs = Vec::new();
            for &h in &[0.02f64, 0.01, 0.005] {
                let mut max_err = 0.0f64;
                for i in 0..40 {
                    for j in 0..40 {
                        let x = 0.3 + i as f64 * 0.05;
                        let y = -0.8 + j as f64 * 0.04;
                        let slopes = OneSidedSlopes {
                            x_minus: (f(x, y) - f(x - h, y)) / h,
                            x_plus: (f(x + h, y) - f(x, y)) / h,
                            y_minus: (f(x, y) - f(x, y - h)) / h,
                            y_plus: (f(x, y + h) - f(x, y)) / h,
                        };
                        let lf = LfCoefficients { theta_x: 2.0, theta_y: 2.0 };
                        let num = numerical_hamiltonian(scheme, slopes, (0.0, 0.0), r, lf);
                        let p = [fx(x, y), fy(x, y)];
                        let psq = p[0] * p[0] + p[1] * p[1];
                        let exact = if r == 1.0 { psq.sqrt() } else { 0.5 * psq + 0.5 };
                        max_err = max_err.max((num - exact).abs());
                    }
                }
                errs.push(max_err);
            }
            let order1 = (errs[0] / errs[1]).log2();
            let order2 = (errs[1] / errs[2]).log2();
            assert!(
                order1 >= 0.9 && order2 >= 0.9,
                "{scheme:?}: orders {order1:.2} {order2:.2}, errs {errs:?}"
            );
        }
    }

    fn grid_small() -> Grid2D<f64> {
        Grid2D::new((0.0, std::f64::consts::TAU), 4, (-1.0, 3.0), 81).unwrap()
    }

    #[test]
    fn exact_translation_r1() {
        // ε = 0, r = 1: f = y − t stays exact after any admissible step
        let g = grid_small();
        let f0 = ScalarField::from_fn(g, 0.3, |_, y| y - 0.3);
        let params = SimParams::g_equation(0.0);
        let adv = AdvectionSpec::zero();
        let config = SolverConfig::new(Scheme::GodunovR1, 1.0);
        let dt = 0.01;
        let f1 = step(&f0, dt, &params, &adv, None, &config).unwrap();
        for ix in 0..g.nx {
            for iy in 1..g.ny - 1 {
                let expect = g.y_at(iy) - 0.31;
                assert!(
                    (f1.get(ix, iy) - expect).abs() < 1e-13,
                    "node ({ix},{iy}): {} vs {expect}",
                    f1.get(ix, iy)
                );
            }
        }
    }

    #[test]
    fn exact_unit_speed_r2_inviscid() {
        // ε = 0, r = 2, β = ∞, f = y: decreases by dt exactly (H = 1)
        let g = grid_small();
        let f0 = ScalarField::from_fn(g, 0.0, |_, y| y);
        let params = SimParams::eikonal(0.0, f64::INFINITY);
        let adv = AdvectionSpec::zero();
        let config = SolverConfig::new(Scheme::LaxFriedrichs, 1.0);
        let dt = 0.01;
        let f1 = step(&f0, dt, &params, &adv, None, &config).unwrap();
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                assert!((f1.get(ix, iy) - (g.y_at(iy) - dt)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn unit_speed_for_intermediate_r() {
        // gradient (0,1) propagates with speed 1 for all r in [1,2] at ε = 0
        for &r in &[1.0f64, 1.5, 2.0] {
            let g = grid_small();
            let f0 = ScalarField::from_fn(g, 0.0, |_, y| y);
            let params = SimParams::new(0.0, f64::INFINITY, f64::INFINITY, r);
            let adv = AdvectionSpec::zero();
            let scheme = if r == 1.0 { Scheme::GodunovR1 } else { Scheme::LaxFriedrichs };
            let config = SolverConfig::new(scheme, 0.5);
            let out = solve_ivp(&f0, &params, &adv, None, &config).unwrap();
            let f1 = &out.snapshots[0];
            for iy in 2..g.ny - 2 {
                assert!(
                    (f1.get(1, iy) - (g.y_at(iy) - 0.5)).abs() < 1e-12,
                    "r = {r}: {} vs {}",
                    f1.get(1, iy),
                    g.y_at(iy) - 0.5
                );
            }
        }
    }

    #[test]
    fn cfl_violation_is_refused() {
        let g = grid_small();
        let f0 = ScalarField::from_fn(g, 0.0, |_, y| y);
        let params = SimParams::g_equation(0.0);
        let adv = AdvectionSpec::zero();
        let config = SolverConfig::new(Scheme::GodunovR1, 1.0);
        let err = step(&f0, 10.0, &params, &adv, None, &config).unwrap_err();
        assert!(matches!(err, SolverError::CflViolation { .. }));
    }

    #[test]
    fn monotone_in_initial_data() {
        // nodewise ordered inputs stay ordered through a step (seeded trials);
        // the Lax-Friedrichs trials perturb by a constant so both runs see the
        // same dissipation coefficients
        use rand::{Rng, SeedableRng};
        let g = Grid2D::new((0.0, std::f64::consts::TAU), 8, (-1.0, 1.0), 21).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..120 {
            let godunov = trial % 2 == 0;
            let r = if godunov { 1.0 } else { 2.0 };
            let scheme = if godunov { Scheme::GodunovR1 } else { Scheme::LaxFriedrichs };
            let params = SimParams::new(0.0, f64::INFINITY, f64::INFINITY, r);
            let adv = AdvectionSpec::zero();
            let config = SolverConfig::new(scheme, 1.0);
            let f = ScalarField::from_fn(g, 0.0, |x, y| {
                y + 0.3 * rng.random::<f64>() + 0.1 * (x + y).sin()
            });
            let offset = 0.05 + 0.3 * rng.random::<f64>();
            let gfield = ScalarField {
                grid: g,
                values: f
                    .values
                    .iter()
                    .map(|v| {
                        if godunov {
                            v + 0.2 * rng.random::<f64>()
                        } else {
                            v + offset
                        }
                    })
                    .collect(),
                time_stamp: 0.0,
            };
            let dt = 0.004;
            let f1 = step(&f, dt, &params, &adv, None, &config).unwrap();
            let g1 = step(&gfield, dt, &params, &adv, None, &config).unwrap();
            // interior rows only: the extrapolating y-closure is not monotone
            for ix in 0..g.nx {
                for iy in 1..g.ny - 1 {
                    let i = g.idx(ix, iy);
                    assert!(
                        f1.values[i] <= g1.values[i] + 1e-12,
                        "monotonicity violated at {i} (trial {trial})"
                    );
                }
            }
        }
    }

    #[test]
    fn autonomous_restart_reproduces_trajectory() {
        let g = grid_small();
        let f0 = ScalarField::from_fn(g, 0.0, |x, y| {
            y + 0.2 * y.tanh() * (1.0 + 0.1 * x.sin())
        });
        let params = SimParams::g_equation(0.0);
        let adv = AdvectionSpec::zero();
        let config = SolverConfig::new(Scheme::GodunovR1, 1.0).with_outputs(vec![0.5, 1.0]);
        let full = solve_ivp(&f0, &params, &adv, None, &config).unwrap();
        let mid = full.snapshots[0].clone();
        // the resumed datum's zero set sits at y ≈ 0.5, so the front-like
        // gate must be explicitly overridden
        let mut config2 = SolverConfig::new(Scheme::GodunovR1, 0.5).with_outputs(vec![0.5]);
        config2.allow_non_front_like = true;
        let resumed = solve_ivp(&mid, &params, &adv, None, &config2).unwrap();
        let d = resumed.snapshots[0]
            .sup_distance(&full.snapshots[1])
            .unwrap();
        assert!(d <= 1e-10, "restart deviation {d}");
    }

    #[test]
    fn grid_convergence_curved_datum() {
        // r = 1: exact solution G_0(y − t) for increasing 1-D data
        let g0 = |y: f64| 2.0 * y.tanh() + 0.5 * y;
        let mut errs = Vec::new();
        for &ny in &[101usize, 201, 401] {
            let g = Grid2D::line((-2.0, 3.0), ny).unwrap();
            let f0 = ScalarField::from_fn(g, 0.0, |_, y| g0(y));
            let params = SimParams::g_equation(0.0);
            let config = SolverConfig::new(Scheme::GodunovR1, 1.0);
            let out = solve_ivp(&f0, &params, &AdvectionSpec::zero(), None, &config).unwrap();
            let f1 = &out.snapshots[0];
            let mut err = 0.0f64;
            for iy in 0..g.ny {
                let y = g.y_at(iy);
                if y > -1.0 && y < 2.5 {
                    err = err.max((f1.get(0, iy) - g0(y - 1.0)).abs());
                }
            }
            errs.push(err);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(
            order1 >= 0.9 && order2 >= 0.9,
            "orders {order1:.2} {order2:.2}, errs {errs:?}"
        );
    }

    #[test]
    fn n_eps_special_values() {
        assert_eq!(eval_n_eps([0.0, 0.0], 0.0, 0.1, 1.0).unwrap(), 0.0);
        assert_eq!(eval_n_eps([0.0, 0.0], 0.0, 0.1, 2.0).unwrap(), 0.0);
        // r = 2 collapses to −ε^{4/3} s²/2 for all (p, s)
        for &(px, py, s) in &[(0.3, -0.7, 1.1), (2.0, 0.0, -3.0), (0.0, 1.0, 0.5)] {
            let eps = 0.07f64;
            let v = eval_n_eps([px, py], s, eps, 2.0).unwrap();
            assert_relative_eq!(v, -eps.powf(4.0 / 3.0) * s * s / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn n_eps_scaling() {
        // N_ε / (ε^{4/3}(s² + |p|⁴)) stays bounded as ε → 0
        let p = [0.8f64, -0.4];
        let s = 1.3f64;
        let p_sq = p[0] * p[0] + p[1] * p[1];
        let denom_base = s * s + p_sq * p_sq;
        for &r in &[1.0, 1.5, 2.0] {
            let mut ratios = Vec::new();
            for &eps in &[1e-1f64, 1e-2, 1e-3] {
                let v = eval_n_eps(p, s, eps, r).unwrap();
                ratios.push((v / (eps.powf(4.0 / 3.0) * denom_base)).abs());
            }
            for w in ratios.windows(2) {
                assert!(w[1] <= w[0] * 1.5 + 1.0, "r = {r}: ratios {ratios:?}");
            }
            assert!(ratios.iter().all(|v| *v < 10.0), "r = {r}: ratios {ratios:?}");
        }
    }

    #[test]
    fn n_eps_rejects_bad_radicand() {
        // radicand = (1 + ε^{4/3}s)² + ε^{4/3}|p|² needs a very negative s
        let eps = 1.0f64;
        assert!(eval_n_eps([0.0f64, 0.0], -1.0, eps, 1.0).is_err());
    }

    #[test]
    fn transform_matches_traveling_exponential_defect() {
        // v = y − t, u = 0, α = 2, β = 1: residual = |ε^{α−β} − 1| · T
        let eps = 0.2f64;
        let params = SimParams::new(eps, 2.0, 1.0, 2.0);
        let g = Grid2D::new((0.0, std::f64::consts::TAU), 4, (-1.0, 2.0), 301).unwrap();
        let ea = eps.powi(2);
        let make = |s: f64| ScalarField::from_fn(g, s, |_, y| y - s);
        let s1 = 0.5 * ea; // probe time t = 0.5 in transform coordinates
        let traj = vec![make(s1 - 0.01 * ea), make(s1), make(s1 + 0.01 * ea)];
        let window = ProbeWindow { x: (1.0, 2.0), y: (0.0, 1.5), n: 41 };
        let rep =
            check_t_transform(&traj, &params, &AdvectionSpec::zero(), None, window).unwrap();
        // defect at the sup-attaining corner of the window: T = exp(−ε^β y + ... )
        let defect = |y: f64| (eps.powf(1.0) - 1.0).abs() * (-y + eps * 0.5).exp();
        let expected = defect(0.0 + 1.5 / 40.0); // largest T on interior probe nodes
        assert!(
            (rep.residual_sup - expected).abs() / expected < 0.05,
            "residual {} vs defect {}",
            rep.residual_sup,
            expected
        );
    }

    #[test]
    fn transform_residual_refines() {
        // u ≡ 0, β = α = 1, datum y: discrete solve is exact, so the residual
        // is pure probe-discretization error and halving h (probe tied to h)
        // must shrink it by ≥ 1.8×
        let eps = 0.2f64;
        let params = SimParams::new(eps, 1.0, 1.0, 2.0);
        let mut residuals = Vec::new();
        for &(ny, n_probe) in &[(151usize, 21usize), (301, 41)] {
            let g = Grid2D::new((0.0, std::f64::consts::TAU), 4, (-1.0, 2.0), ny).unwrap();
            let f0 = ScalarField::from_fn(g, 0.0, |_, y| y);
            // snapshots tightly spaced so T_t error stays below the spatial one
            let delta = 0.002 * eps;
            let config = SolverConfig::new(Scheme::LaxFriedrichs, 0.2 * eps)
                .with_outputs(vec![0.1 * eps - delta, 0.1 * eps, 0.1 * eps + delta]);
            let out = solve_ivp(&f0, &params, &AdvectionSpec::zero(), None, &config).unwrap();
            let window = ProbeWindow { x: (1.0, 2.0), y: (0.0, 1.5), n: n_probe };
            let rep = check_t_transform(
                &out.snapshots,
                &params,
                &AdvectionSpec::zero(),
                None,
                window,
            )
            .unwrap();
            residuals.push(rep.residual_sup);
        }
        assert!(
            residuals[0] / residuals[1] >= 1.8,
            "refinement ratio {} (residuals {residuals:?})",
            residuals[0] / residuals[1]
        );
    }

    #[test]
    fn transform_overflow_raises() {
        let eps = 0.2f64;
        let params = SimParams::new(eps, 1.0, 1.0, 2.0);
        let g = Grid2D::new((0.0, std::f64::consts::TAU), 4, (-500.0, 2.0), 401).unwrap();
        let make = |s: f64| ScalarField::from_fn(g, s, |_, y| y - s);
        let traj = vec![make(0.0), make(0.01), make(0.02)];
        // probe deep where v < 0 and T = exp(−ε^{−β} v) blows up
        let window = ProbeWindow { x: (1.0, 2.0), y: (-2000.0, -1500.0), n: 11 };
        let err = check_t_transform(&traj, &params, &AdvectionSpec::zero(), None, window)
            .unwrap_err();
        assert!(matches!(err, SolverError::ProbeOverflow(_)));
    }

    #[test]
    fn f32_solver_smoke() {
        let g = Grid2D::<f32>::new((0.0, std::f32::consts::TAU), 4, (-1.0, 2.0), 61).unwrap();
        let f0 = ScalarField::from_fn(g, 0.0f32, |_, y| y);
        let params = SimParams::g_equation(0.0f32);
        let config = SolverConfig::new(Scheme::GodunovR1, 0.5f32);
        let out = solve_ivp(&f0, &params, &AdvectionSpec::zero(), None, &config).unwrap();
        let f1 = &out.snapshots[0];
        assert!((f1.get(0, 30) - (g.y_at(30) - 0.5)).abs() < 1e-5);
    }
}
