//! Grids, scalar fields, simulation parameters, and the advection catalog.
//!
//! The advection u(x, y, t) = (u⊥(x, y, t), u∥(x, t) w(y)) is assembled from a
//! closed catalog of expression forms (constants, trigonometric factors,
//! smooth time bumps), so exact derivatives and certified C¹/C² norm bounds
//! are available without symbolic differentiation of user code.

use crate::noise::{NoiseError, NoisePath};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("smallness convention violated: eps * |u|_C1 = {product} > 1/100")]
    SmallnessViolated { product: f64 },
    #[error("initial datum is not front-like: {0}")]
    NotFrontLike(String),
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// (ε, α, β, r); α or β may be infinite (autonomous advection, no viscosity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams<T> {
    pub eps: T,
    pub alpha: T,
    pub beta: T,
    pub r: T,
}

impl<T: Scalar> SimParams<T> {
    pub fn new(eps: T, alpha: T, beta: T, r: T) -> Self {
        Self { eps, alpha, beta, r }
    }

    /// G-equation: r = 1, no viscosity.
    pub fn g_equation(eps: T) -> Self {
        Self { eps, alpha: T::infinity(), beta: T::infinity(), r: T::one() }
    }

    /// Eikonal model: r = 2, viscosity ε^β/2 (β may be infinite).
    pub fn eikonal(eps: T, beta: T) -> Self {
        Self { eps, alpha: T::infinity(), beta, r: T::of(2.0) }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        // eps = 0 is the unperturbed reference configuration and is allowed
        if !(self.eps >= T::zero() && self.eps.is_finite()) {
            return Err(FieldError::InvalidParams(format!("eps = {} must be >= 0", self.eps)));
        }
        if !(self.alpha >= T::one()) {
            return Err(FieldError::InvalidParams(format!("alpha = {} must be >= 1", self.alpha)));
        }
        if !(self.beta >= T::of(2.0 / 3.0)) {
            return Err(FieldError::InvalidParams(format!(
                "beta = {} must be >= 2/3",
                self.beta
            )));
        }
        if !(self.r >= T::one() && self.r <= T::of(2.0)) {
            return Err(FieldError::InvalidParams(format!("r = {} must be in [1, 2]", self.r)));
        }
        Ok(())
    }

    /// ε^β / 2 (zero when β = ∞ or ε = 0).
    pub fn viscosity(&self) -> T {
        crate::scalar::eps_pow(self.eps, self.beta) * T::of(0.5)
    }

    /// Time argument of the advection: ε^α t.
    pub fn advection_time(&self, t: T) -> T {
        crate::scalar::eps_pow(self.eps, self.alpha) * t
    }
}

/// x-factor of a catalog term; wavenumbers are integers so every term is
/// 2π-periodic in x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XFactor<T> {
    One,
    Cos { wavenumber: u32, phase: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YFactor<T> {
    One,
    Cos { wavenumber: T, phase: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TFactor<T> {
    One,
    Cos { omega: T, phase: T },
    /// exp(−1/(1−v²)) bump in v = (t − center)/width, amplitude 1 at v = 0
    /// after rescaling by e.
    Bump { center: T, width: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvectionTerm<T> {
    pub coef: T,
    pub x: XFactor<T>,
    pub y: YFactor<T>,
    pub t: TFactor<T>,
}

/// Sum of separable catalog terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AdvectionExpr<T> {
    pub terms: Vec<AdvectionTerm<T>>,
}

fn bump01<T: Scalar>(v: T) -> (T, T, T) {
    // value, first, second derivative of e·exp(−1/(1−v²))
    if v.abs() >= T::one() {
        return (T::zero(), T::zero(), T::zero());
    }
    let one = T::one();
    let d = one - v * v;
    let f = (one - one / d).exp();
    let g = -T::of(2.0) * v / (d * d); // (−1/d)' = −2v/d²
    let fp = f * g;
    let gp = (-T::of(2.0) * d * d + T::of(8.0) * v * v * d) / (d * d * d * d);
    let gp = -gp; // d/dv of (−2v/d²)
    let fpp = f * (g * g + gp);
    (f, fp, fpp)
}

impl<T: Scalar> XFactor<T> {
    fn eval(&self, x: T) -> (T, T, T) {
        match *self {
            XFactor::One => (T::one(), T::zero(), T::zero()),
            XFactor::Cos { wavenumber, phase } => {
                let k = T::of(wavenumber as f64);
                let a = k * x + phase;
                (a.cos(), -k * a.sin(), -k * k * a.cos())
            }
        }
    }
    fn bounds(&self) -> (T, T, T) {
        match *self {
            XFactor::One => (T::one(), T::zero(), T::zero()),
            XFactor::Cos { wavenumber, .. } => {
                let k = T::of(wavenumber as f64);
                (T::one(), k, k * k)
            }
        }
    }
}

impl<T: Scalar> YFactor<T> {
    fn eval(&self, y: T) -> (T, T, T) {
        match *self {
            YFactor::One => (T::one(), T::zero(), T::zero()),
            YFactor::Cos { wavenumber, phase } => {
                let a = wavenumber * y + phase;
                (a.cos(), -wavenumber * a.sin(), -wavenumber * wavenumber * a.cos())
            }
        }
    }
    fn bounds(&self) -> (T, T, T) {
        match *self {
            YFactor::One => (T::one(), T::zero(), T::zero()),
            YFactor::Cos { wavenumber, .. } => {
                (T::one(), wavenumber.abs(), wavenumber * wavenumber)
            }
        }
    }
}

impl<T: Scalar> TFactor<T> {
    fn eval(&self, t: T) -> (T, T, T) {
        match *self {
            TFactor::One => (T::one(), T::zero(), T::zero()),
            TFactor::Cos { omega, phase } => {
                let a = omega * t + phase;
                (a.cos(), -omega * a.sin(), -omega * omega * a.cos())
            }
            TFactor::Bump { center, width } => {
                let v = (t - center) / width;
                let (f, fp, fpp) = bump01(v);
                (f, fp / width, fpp / (width * width))
            }
        }
    }
    fn bounds(&self) -> (T, T, T) {
        match *self {
            TFactor::One => (T::one(), T::zero(), T::zero()),
            TFactor::Cos { omega, .. } => (T::one(), omega.abs(), omega * omega),
            TFactor::Bump { width, .. } => {
                // sup |b| = 1, sup |b'| <= 2.3/width, sup |b''| <= 12/width²
                (T::one(), T::of(2.3) / width, T::of(12.0) / (width * width))
            }
        }
    }
}

impl<T: Scalar> AdvectionExpr<T> {
    pub fn zero() -> Self {
        Self { terms: vec![] }
    }

    pub fn constant(c: T) -> Self {
        Self {
            terms: vec![AdvectionTerm {
                coef: c,
                x: XFactor::One,
                y: YFactor::One,
                t: TFactor::One,
            }],
        }
    }

    /// c · cos(k x)
    pub fn cos_x(c: T, wavenumber: u32) -> Self {
        Self {
            terms: vec![AdvectionTerm {
                coef: c,
                x: XFactor::Cos { wavenumber, phase: T::zero() },
                y: YFactor::One,
                t: TFactor::One,
            }],
        }
    }

    /// cos t + sin t: time-dependent with u(0) = 1 and u'(0) = 1.
    pub fn cos_plus_sin_t() -> Self {
        Self {
            terms: vec![
                AdvectionTerm {
                    coef: T::one(),
                    x: XFactor::One,
                    y: YFactor::One,
                    t: TFactor::Cos { omega: T::one(), phase: T::zero() },
                },
                AdvectionTerm {
                    coef: T::one(),
                    x: XFactor::One,
                    y: YFactor::One,
                    t: TFactor::Cos { omega: T::one(), phase: -T::FRAC_PI_2() },
                },
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == T::zero())
    }

    pub fn eval(&self, x: T, y: T, t: T) -> T {
        let mut acc = T::zero();
        for term in &self.terms {
            acc += term.coef * term.x.eval(x).0 * term.y.eval(y).0 * term.t.eval(t).0;
        }
        acc
    }

    /// Exact spatial gradient (∂x, ∂y) and time derivative.
    pub fn derivatives(&self, x: T, y: T, t: T) -> (T, T, T) {
        let mut dx = T::zero();
        let mut dy = T::zero();
        let mut dt = T::zero();
        for term in &self.terms {
            let (fx, fxp, _) = term.x.eval(x);
            let (fy, fyp, _) = term.y.eval(y);
            let (ft, ftp, _) = term.t.eval(t);
            dx += term.coef * fxp * fy * ft;
            dy += term.coef * fx * fyp * ft;
            dt += term.coef * fx * fy * ftp;
        }
        (dx, dy, dt)
    }

    pub fn d2_x(&self, x: T, y: T, t: T) -> T {
        let mut acc = T::zero();
        for term in &self.terms {
            let (_, _, fxpp) = term.x.eval(x);
            acc += term.coef * fxpp * term.y.eval(y).0 * term.t.eval(t).0;
        }
        acc
    }

    /// Certified sup bound.
    pub fn sup_bound(&self) -> T {
        self.terms.iter().map(|t| t.coef.abs()).sum()
    }

    /// Certified C¹ bound: sup|u| + sup|Du| (each factor bounded separately).
    pub fn c1_bound(&self) -> T {
        let mut sup = T::zero();
        let mut grad = T::zero();
        for term in &self.terms {
            let (bx, bxp, _) = term.x.bounds();
            let (by, byp, _) = term.y.bounds();
            let (bt, btp, _) = term.t.bounds();
            let c = term.coef.abs();
            sup += c * bx * by * bt;
            grad += c * (bxp * by * bt + bx * byp * bt + bx * by * btp);
        }
        sup + grad
    }

    pub fn c2_bound(&self) -> T {
        let mut second = T::zero();
        for term in &self.terms {
            let (bx, bxp, bxpp) = term.x.bounds();
            let (by, byp, bypp) = term.y.bounds();
            let (bt, btp, btpp) = term.t.bounds();
            let c = term.coef.abs();
            second += c
                * (bxpp * by * bt
                    + bx * bypp * bt
                    + bx * by * btpp
                    + T::of(2.0) * (bxp * byp * bt + bxp * by * btp + bx * byp * btp));
        }
        self.c1_bound() + second
    }

    pub fn depends_on_x(&self) -> bool {
        self.terms
            .iter()
            .any(|t| !matches!(t.x, XFactor::One) && t.coef != T::zero())
    }

    pub fn depends_on_y(&self) -> bool {
        self.terms
            .iter()
            .any(|t| !matches!(t.y, YFactor::One) && t.coef != T::zero())
    }

    pub fn depends_on_t(&self) -> bool {
        self.terms
            .iter()
            .any(|t| !matches!(t.t, TFactor::One) && t.coef != T::zero())
    }
}

/// The advection pair (u⊥, u∥); u∥ multiplies the noise w(y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvectionSpec<T> {
    pub u_perp: AdvectionExpr<T>,
    pub u_par: AdvectionExpr<T>,
    pub norm_c1: T,
    pub norm_c2: T,
}

impl<T: Scalar> AdvectionSpec<T> {
    pub fn new(u_perp: AdvectionExpr<T>, u_par: AdvectionExpr<T>) -> Result<Self, FieldError> {
        if u_par.depends_on_y() {
            return Err(FieldError::InvalidParams(
                "u_par must be a function of (x, t) only".into(),
            ));
        }
        let norm_c1 = u_perp.c1_bound() + u_par.c1_bound();
        let norm_c2 = u_perp.c2_bound() + u_par.c2_bound();
        Ok(Self { u_perp, u_par, norm_c1, norm_c2 })
    }

    pub fn zero() -> Self {
        Self::new(AdvectionExpr::zero(), AdvectionExpr::zero()).unwrap()
    }

    /// u⊥ ≡ 0, u∥ ≡ c: pure shear along the front direction.
    pub fn pure_shear(c: T) -> Self {
        Self::new(AdvectionExpr::zero(), AdvectionExpr::constant(c)).unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.u_perp.is_zero() && self.u_par.is_zero()
    }

    /// The smallness convention used by the well-posedness theory.
    pub fn validate_smallness(&self, eps: T) -> Result<(), FieldError> {
        let product = (eps * self.norm_c1).as_f64();
        if product > 0.01 {
            return Err(FieldError::SmallnessViolated { product });
        }
        Ok(())
    }

    /// Certified sup of |u| including the noise factor.
    pub fn sup_bound_with_noise(&self, noise_bound: T) -> T {
        self.u_perp.sup_bound() + self.u_par.sup_bound() * noise_bound
    }
}

/// (u⊥(x, y, t), u∥(x, t) · w(y)).
pub fn full_advection<T: Scalar>(
    spec: &AdvectionSpec<T>,
    noise: &NoisePath<T>,
    x: T,
    y: T,
    t: T,
) -> Result<(T, T), FieldError> {
    let (w, _) = noise.eval(y)?;
    Ok((spec.u_perp.eval(x, y, t), spec.u_par.eval(x, T::zero(), t) * w))
}

/// Uniform rectangle; periodic in x (x_max exclusive), inclusive in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    pub x_min: T,
    pub x_max: T,
    pub nx: usize,
    pub y_min: T,
    pub y_max: T,
    pub ny: usize,
}

impl<T: Scalar> Grid2D<T> {
    pub fn new(
        x_range: (T, T),
        nx: usize,
        y_range: (T, T),
        ny: usize,
    ) -> Result<Self, FieldError> {
        let g = Self {
            x_min: x_range.0,
            x_max: x_range.1,
            nx,
            y_min: y_range.0,
            y_max: y_range.1,
            ny,
        };
        if nx < 1 || ny < 3 {
            return Err(FieldError::InvalidGrid(format!("nx = {nx}, ny = {ny} too small")));
        }
        if !(g.x_max > g.x_min) || !(g.y_max > g.y_min) {
            return Err(FieldError::InvalidGrid("empty ranges".into()));
        }
        if !(g.hx() > T::zero() && g.hy() > T::zero()) {
            return Err(FieldError::InvalidGrid("nonpositive spacing".into()));
        }
        Ok(g)
    }

    /// 1-D column in y (pure shear runs).
    pub fn line(y_range: (T, T), ny: usize) -> Result<Self, FieldError> {
        Self::new((T::zero(), T::of(2.0) * T::PI()), 1, y_range, ny)
    }

    pub fn hx(&self) -> T {
        (self.x_max - self.x_min) / T::of(self.nx as f64)
    }

    pub fn hy(&self) -> T {
        (self.y_max - self.y_min) / T::of((self.ny - 1) as f64)
    }

    pub fn x_at(&self, i: usize) -> T {
        self.x_min + self.hx() * T::of(i as f64)
    }

    pub fn y_at(&self, j: usize) -> T {
        self.y_min + self.hy() * T::of(j as f64)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// Index of the node at y = 0, when one exists on the grid.
    pub fn y_zero_row(&self) -> Option<usize> {
        let pos = (-self.y_min / self.hy()).as_f64();
        let j = pos.round() as i64;
        if j < 0 || j >= self.ny as i64 {
            return None;
        }
        let y = self.y_at(j as usize);
        if y.abs() < self.hy() * T::of(1e-9) {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// Discretized solution values on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub grid: Grid2D<T>,
    pub values: Vec<T>,
    pub time_stamp: T,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(grid: Grid2D<T>, values: Vec<T>, time_stamp: T) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::InvalidGrid(format!(
                "values length {} != grid size {}",
                values.len(),
                grid.len()
            )));
        }
        let f = Self { grid, values, time_stamp };
        f.validate()?;
        Ok(f)
    }

    pub fn from_fn(grid: Grid2D<T>, time_stamp: T, mut f: impl FnMut(T, T) -> T) -> Self {
        let mut values = vec![T::zero(); grid.len()];
        for ix in 0..grid.nx {
            let x = grid.x_at(ix);
            for iy in 0..grid.ny {
                values[grid.idx(ix, iy)] = f(x, grid.y_at(iy));
            }
        }
        Self { grid, values, time_stamp }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::InvalidGrid("non-finite field value".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> T {
        self.values[self.grid.idx(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: T) {
        let i = self.grid.idx(ix, iy);
        self.values[i] = v;
    }

    pub fn sup_distance(&self, other: &Self) -> Result<T, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs())))
    }

    /// Cubic interpolation in y along column ix (4-point Lagrange stencil,
    /// one-sided at the boundary).
    pub fn interp_y_cubic(&self, ix: usize, y: T) -> T {
        let g = &self.grid;
        let hy = g.hy();
        let pos = ((y - g.y_min) / hy).as_f64();
        let ny = g.ny;
        let j1 = (pos.floor() as i64).clamp(0, ny as i64 - 2) as usize;
        let j0 = j1.saturating_sub(1).min(ny - 4).max(0);
        let j0 = if ny >= 4 { j0.min(ny - 4) } else { 0 };
        let u = T::of(pos) - T::of(j0 as f64);
        if ny < 4 {
            // fall back to linear
            let a = self.get(ix, j1);
            let b = self.get(ix, j1 + 1);
            let s = T::of(pos - j1 as f64);
            return a * (T::one() - s) + b * s;
        }
        let f = [
            self.get(ix, j0),
            self.get(ix, j0 + 1),
            self.get(ix, j0 + 2),
            self.get(ix, j0 + 3),
        ];
        let mut acc = T::zero();
        for (k, fk) in f.iter().enumerate() {
            let mut l = T::one();
            for m in 0..4 {
                if m != k {
                    l *= (u - T::of(m as f64)) / (T::of(k as f64) - T::of(m as f64));
                }
            }
            acc += *fk * l;
        }
        acc
    }
}

/// Piecewise-scaled increasing envelope: s± · (c tanh(y) + a y) on each side
/// of zero. Covers the linear (c = 0) and tanh-plus-linear catalog forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tanh_coef: T,
    pub linear_coef: T,
    pub scale_pos: T,
    pub scale_neg: T,
}

impl<T: Scalar> Envelope<T> {
    pub fn eval(&self, y: T) -> T {
        let base = self.tanh_coef * y.tanh() + self.linear_coef * y;
        if y >= T::zero() {
            self.scale_pos * base
        } else {
            self.scale_neg * base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelopes<T> {
    pub lower: Envelope<T>,
    pub upper: Envelope<T>,
}

/// Construct strictly increasing envelopes E_lo <= G_0 <= E_up with
/// E(0) = 0 from the sampled profile, or report why none exists (sign change
/// away from zero, flat span crossing zero).
pub fn front_like_envelopes<T: Scalar>(
    profile: impl Fn(T) -> T,
    y_range: (T, T),
) -> Result<Envelopes<T>, FieldError> {
    let (lo, hi) = y_range;
    if !(hi > T::zero() && lo < T::zero()) {
        return Err(FieldError::NotFrontLike(
            "range must straddle y = 0 to check the datum".into(),
        ));
    }
    let n = 2000usize;
    let h = (hi - lo) / T::of(n as f64);
    let band = h * T::of(1.5);
    let mut min_ratio_pos = T::infinity();
    let mut max_ratio_pos = T::zero();
    let mut min_ratio_neg = T::infinity();
    let mut max_ratio_neg = T::zero();
    for i in 0..=n {
        let y = lo + h * T::of(i as f64);
        let v = profile(y);
        if !v.is_finite() {
            return Err(FieldError::NotFrontLike(format!("non-finite value at y = {y}")));
        }
        if y.abs() <= band {
            continue;
        }
        if v * y <= T::zero() {
            return Err(FieldError::NotFrontLike(format!(
                "sign violation at y = {y}: G_0 = {v}"
            )));
        }
        let r = v / y;
        if y > T::zero() {
            min_ratio_pos = min_ratio_pos.min(r);
            max_ratio_pos = max_ratio_pos.max(r);
        } else {
            min_ratio_neg = min_ratio_neg.min(r);
            max_ratio_neg = max_ratio_neg.max(r);
        }
    }
    if !(min_ratio_pos > T::zero()) || !(min_ratio_neg > T::zero()) {
        return Err(FieldError::NotFrontLike("flat span crossing zero".into()));
    }
    if !max_ratio_pos.is_finite() || !max_ratio_neg.is_finite() {
        return Err(FieldError::NotFrontLike("unbounded growth ratio".into()));
    }
    let base = Envelope {
        tanh_coef: T::zero(),
        linear_coef: T::one(),
        scale_pos: T::one(),
        scale_neg: T::one(),
    };
    // lower envelope: below on y > 0, steeper on y < 0; upper mirrored
    let lower = Envelope {
        scale_pos: min_ratio_pos * T::of(0.5),
        scale_neg: max_ratio_neg * T::of(2.0),
        ..base
    };
    let upper = Envelope {
        scale_pos: max_ratio_pos * T::of(2.0),
        scale_neg: min_ratio_neg * T::of(0.5),
        ..base
    };
    Ok(Envelopes { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_noise, NoisePath, NoiseSpec, StepLaw};
    use approx::assert_relative_eq;

    #[test]
    fn params_validation() {
        assert!(SimParams::new(0.1f64, 1.0, 1.0, 1.5).validate().is_ok());
        assert!(SimParams::new(0.0f64, f64::INFINITY, f64::INFINITY, 1.0)
            .validate()
            .is_ok());
        assert!(SimParams::new(0.1f64, 0.5, 1.0, 1.0).validate().is_err());
        assert!(SimParams::new(0.1f64, 1.0, 0.5, 1.0).validate().is_err());
        assert!(SimParams::new(0.1f64, 1.0, 1.0, 2.5).validate().is_err());
        assert!(SimParams::new(-0.1f64, 1.0, 1.0, 1.0).validate().is_err());
    }

    #[test]
    fn smallness_convention() {
        let adv = AdvectionSpec::pure_shear(1.0f64);
        assert!(adv.validate_smallness(0.005).is_ok());
        assert!(adv.validate_smallness(0.2).is_err());
        assert!(AdvectionSpec::<f64>::zero().validate_smallness(0.5).is_ok());
    }

    #[test]
    fn advection_bounds_hold_on_samples() {
        let mut expr = AdvectionExpr::cos_x(0.7f64, 2);
        expr.terms.extend(AdvectionExpr::cos_plus_sin_t().terms);
        let sup = expr.sup_bound();
        let c1 = expr.c1_bound();
        for i in 0..50 {
            for j in 0..10 {
                let x = i as f64 * 0.13;
                let t = j as f64 * 0.31;
                let v = expr.eval(x, 0.0, t);
                let (dx, dy, dt) = expr.derivatives(x, 0.0, t);
                assert!(v.abs() <= sup + 1e-12);
                let grad = (dx * dx + dy * dy + dt * dt).sqrt();
                assert!(v.abs() + grad <= c1 * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn advection_derivatives_match_finite_differences() {
        let mut expr = AdvectionExpr::cos_x(0.5f64, 3);
        expr.terms.push(AdvectionTerm {
            coef: 0.4,
            x: XFactor::One,
            y: YFactor::Cos { wavenumber: 1.7, phase: 0.2 },
            t: TFactor::Bump { center: 1.0, width: 0.5 },
        });
        let h = 1e-6;
        for &(x, y, t) in &[(0.3, 0.5, 0.9), (1.1, -0.4, 1.2), (2.0, 0.0, 0.7)] {
            let (dx, dy, dt) = expr.derivatives(x, y, t);
            let fdx = (expr.eval(x + h, y, t) - expr.eval(x - h, y, t)) / (2.0 * h);
            let fdy = (expr.eval(x, y + h, t) - expr.eval(x, y - h, t)) / (2.0 * h);
            let fdt = (expr.eval(x, y, t + h) - expr.eval(x, y, t - h)) / (2.0 * h);
            assert_relative_eq!(dx, fdx, epsilon = 1e-6, max_relative = 1e-5);
            assert_relative_eq!(dy, fdy, epsilon = 1e-6, max_relative = 1e-5);
            assert_relative_eq!(dt, fdt, epsilon = 1e-5, max_relative = 1e-4);
        }
    }

    #[test]
    fn full_advection_cases() {
        let spec = NoiseSpec::new(5, StepLaw::Rademacher);
        // u_perp = 0, u_par = 1, w = 0
        let zero_path = NoisePath::with_steps(&spec, (-2.0, 2.0), -4, vec![0.0; 10]).unwrap();
        let adv = AdvectionSpec::pure_shear(1.0f64);
        assert_eq!(full_advection(&adv, &zero_path, 0.3, 0.5, 0.0).unwrap(), (0.0, 0.0));

        // u_par = 1: second component is w(y) exactly
        let path = sample_noise(&spec, (-2.0, 2.0)).unwrap();
        let (_, uy) = full_advection(&adv, &path, 0.0, 0.7, 0.0).unwrap();
        assert_eq!(uy, path.w(0.7).unwrap());

        // u_par(x, t) = cos x against a hand-evaluated product
        let adv2 = AdvectionSpec::new(AdvectionExpr::zero(), AdvectionExpr::cos_x(1.0, 1))
            .unwrap();
        for &(x, y) in &[(0.2, 0.9), (1.4, -0.3), (3.0, 1.1)] {
            let (_, uy) = full_advection(&adv2, &path, x, y, 0.0).unwrap();
            let expect = x.cos() * path.w(y).unwrap();
            assert!((uy - expect).abs() < 1e-12);
        }

        // y outside the noise range is an error
        assert!(full_advection(&adv, &path, 0.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn envelopes_for_linear_datum() {
        let env = front_like_envelopes(|y: f64| y, (-10.0, 10.0)).unwrap();
        // y/2 and 2y on the positive side
        assert_relative_eq!(env.lower.eval(2.0), 1.0, max_relative = 1e-6);
        assert_relative_eq!(env.upper.eval(2.0), 4.0, max_relative = 1e-6);
        for &y in &[-5.0, -1.0, 0.5, 3.0, 9.0] {
            assert!(env.lower.eval(y) <= y + 1e-12);
            assert!(env.upper.eval(y) >= y - 1e-12);
        }
    }

    #[test]
    fn envelopes_for_slope_half_datum() {
        let env = front_like_envelopes(|y: f64| y / 2.0, (-10.0, 10.0)).unwrap();
        for &y in &[-4.0, -0.5, 0.5, 4.0] {
            assert!(env.lower.eval(y) <= y / 2.0 + 1e-12);
            assert!(env.upper.eval(y) >= y / 2.0 - 1e-12);
        }
    }

    #[test]
    fn envelopes_for_tanh_blend() {
        let g = |y: f64| 2.0 * y.tanh() + 0.5 * y;
        let env = front_like_envelopes(g, (-15.0, 15.0)).unwrap();
        for i in 0..400 {
            let y = -15.0 + i as f64 * 0.075;
            if y.abs() < 0.1 {
                continue;
            }
            assert!(env.lower.eval(y) <= g(y) + 1e-10, "lower fails at {y}");
            assert!(env.upper.eval(y) >= g(y) - 1e-10, "upper fails at {y}");
        }
    }

    #[test]
    fn sine_datum_rejected() {
        let err = front_like_envelopes(|y: f64| y.sin(), (-10.0, 10.0)).unwrap_err();
        match err {
            FieldError::NotFrontLike(msg) => assert!(msg.contains("sign violation")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn grid_basics() {
        let g = Grid2D::new((0.0f64, std::f64::consts::TAU), 8, (-1.0, 3.0), 41).unwrap();
        assert_relative_eq!(g.hy(), 0.1);
        assert_eq!(g.y_zero_row(), Some(10));
        assert!(Grid2D::new((0.0f64, 1.0), 4, (2.0, 1.0), 10).is_err());
        let f = ScalarField::from_fn(g, 0.0, |_, y| y);
        assert_eq!(f.get(3, 10), 0.0);
        // cubic interpolation reproduces cubics in y
        let f3 = ScalarField::from_fn(g, 0.0, |_, y| y * y * y - y);
        for &y in &[-0.95, -0.31, 0.0, 0.17, 1.99, 2.83] {
            assert_relative_eq!(
                f3.interp_y_cubic(2, y),
                y * y * y - y,
                epsilon = 1e-10,
                max_relative = 1e-9
            );
        }
    }
}
