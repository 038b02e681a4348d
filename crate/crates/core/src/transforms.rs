//! Special functions and integral transforms behind the smoothed count.
//!
//! * `ξ_λ(v) = cos v · cosh((s-1)·arcsinh tan v)`, the even solution of
//!   `cos²v ξ'' + sin v cos v ξ' + λξ = 0` with `ξ(0) = 1`.
//! * `d(f, s) = ∫ f(cosh²u) cosh(su) du` over the real line and
//!   `c(f, t) = (d(f, s) + d(f, 2-s)) / 4` with `s = 1 + it`.
//! * Smoothing profiles `f± = f̃± ∗ χ ∗ χ`, where `χ` is the box of
//!   half-width `δ` with unit mass. Profiles are written as even functions of
//!   `w = arccosh(sec v) = arcsinh(tan v)`.
//! * The inverse Selberg transform of `h(1+t²) = exp(-t²/(2T)²)·cos(rt)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::within_secant_cutoff;
use crate::quadrature;

/// Default absolute tolerance for transform quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Spectral parameter with `λ = s(2-s)`, restricted to real `s` or the
/// line `Re s = 1`, where `ξ_λ` is real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParam {
    pub s: Complex64,
    pub lambda: f64,
    pub t: Complex64,
}

impl SpectralParam {
    pub fn from_s(s: Complex64) -> Result<Self> {
        let on_line = (s.re - 1.0).abs() < 1e-15;
        if s.im != 0.0 && !on_line {
            return Err(Error::Domain(format!("s = {s} is neither real nor on Re s = 1")));
        }
        let lambda = (s * (2.0 - s)).re;
        let t = (s - 1.0) / Complex64::i();
        Ok(SpectralParam { s, lambda, t })
    }

    /// `s ≥ 1` real when `λ ≤ 1`, otherwise `s = 1 + i·sqrt(λ-1)`.
    pub fn from_lambda(lambda: f64) -> Self {
        let s = if lambda <= 1.0 {
            Complex64::new(1.0 + (1.0 - lambda).sqrt(), 0.0)
        } else {
            Complex64::new(1.0, (lambda - 1.0).sqrt())
        };
        SpectralParam {
            s,
            lambda,
            t: (s - 1.0) / Complex64::i(),
        }
    }

    pub fn from_t(t: Complex64) -> Result<Self> {
        Self::from_s(Complex64::new(1.0, 0.0) + Complex64::i() * t)
    }

    /// `cosh((s-1)·w)`, real for admissible parameters.
    fn cosh_shifted(&self, w: f64) -> f64 {
        let sigma2 = 1.0 - self.lambda;
        if sigma2 >= 0.0 {
            (sigma2.sqrt() * w).cosh()
        } else {
            ((-sigma2).sqrt() * w).cos()
        }
    }
}

/// `ξ_λ(v)`.
pub fn xi(param: &SpectralParam, v: f64) -> Result<f64> {
    if !(v.abs() < PI / 2.0) {
        return Err(Error::Domain(format!("v = {v} outside (-pi/2, pi/2)")));
    }
    let w = v.tan().asinh();
    Ok(v.cos() * param.cosh_shifted(w))
}

/// `ξ` in the variable `w` with `tan v = sinh w`: `cosh((s-1)w) / cosh w`.
pub fn xi_of_w(param: &SpectralParam, w: f64) -> f64 {
    param.cosh_shifted(w) / w.cosh()
}

/// Central-difference residual of `cos²v ξ'' + sin v cos v ξ' + λξ` at `v`.
pub fn xi_ode_residual(param: &SpectralParam, v: f64, step: f64) -> Result<f64> {
    let (fp, f0, fm) = (xi(param, v + step)?, xi(param, v)?, xi(param, v - step)?);
    let d1 = (fp - fm) / (2.0 * step);
    let d2 = (fp - 2.0 * f0 + fm) / (step * step);
    let (sin, cos) = v.sin_cos();
    Ok(cos * cos * d2 + sin * cos * d1 + param.lambda * f0)
}

/// Central-difference residual of `ξ'' + 2 tanh w ξ' + λξ` at `w`.
pub fn xi_w_ode_residual(param: &SpectralParam, w: f64, step: f64) -> f64 {
    let (fp, f0, fm) = (xi_of_w(param, w + step), xi_of_w(param, w), xi_of_w(param, w - step));
    let d1 = (fp - fm) / (2.0 * step);
    let d2 = (fp - 2.0 * f0 + fm) / (step * step);
    d2 + 2.0 * w.tanh() * d1 + param.lambda * f0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiBoundsReport {
    pub grid_n: usize,
    /// `max(|ξ| - 1, 0)` over the grid.
    pub upper_violation: f64,
    /// `max(1 - (2+λ)/2·tan²v - ξ, 0)` over the grid.
    pub lower_violation: f64,
}

impl XiBoundsReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.upper_violation <= tol && self.lower_violation <= tol
    }
}

/// Checks `|ξ_λ| ≤ 1` and `ξ_λ ≥ 1 - (2+λ)/2·tan²v` on an even grid over
/// `[0, π/2 - 1e-3]`.
pub fn xi_bounds_check(param: &SpectralParam, grid_n: usize) -> Result<XiBoundsReport> {
    if param.lambda < 0.0 {
        return Err(Error::Domain(format!("lambda = {} must be non-negative", param.lambda)));
    }
    if grid_n < 2 {
        return Err(Error::Domain("grid needs at least two points".into()));
    }
    let top = PI / 2.0 - 1e-3;
    let mut report = XiBoundsReport {
        grid_n,
        upper_violation: 0.0,
        lower_violation: 0.0,
    };
    for k in 0..grid_n {
        let v = top * k as f64 / (grid_n - 1) as f64;
        let val = xi(param, v)?;
        let lower = 1.0 - (2.0 + param.lambda) / 2.0 * v.tan().powi(2);
        report.upper_violation = report.upper_violation.max(val.abs() - 1.0);
        report.lower_violation = report.lower_violation.max(lower - val);
    }
    Ok(report)
}

/// An even, compactly supported function of `w` (read as `f(cosh²w)`).
pub trait Profile: Sync {
    fn eval(&self, w: f64) -> f64;
    /// Half-width of the support; the profile vanishes for `|w| ≥ support`.
    fn support(&self) -> f64;
    /// Non-negative points where the profile is not smooth.
    fn breakpoints(&self) -> Vec<f64>;

    /// The profile at an orbit point with the given `sec v = cosh w`.
    fn at_secant(&self, sec: f64) -> f64 {
        self.eval(sec.max(1.0).acosh())
    }

    /// Largest `sec v` where the profile can be non-zero.
    fn secant_support(&self) -> f64 {
        self.support().cosh()
    }
}

/// Sharp cutoff `1_{[-T, T]}` in `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Indicator {
    pub half_width: f64,
    /// The same cutoff as a bound on `sec v`; for counting indicators this
    /// is `X` itself so that sums agree with the coset count bit for bit.
    pub secant_cutoff: f64,
}

impl Indicator {
    pub fn new(half_width: f64) -> Self {
        Indicator {
            half_width,
            secant_cutoff: half_width.cosh(),
        }
    }

    /// The counting indicator `sec v ≤ X`, i.e. `|w| ≤ arcsinh U`.
    pub fn counting(x: f64) -> Self {
        Indicator {
            half_width: cutoff_u(x).asinh(),
            secant_cutoff: x,
        }
    }
}

impl Profile for Indicator {
    fn eval(&self, w: f64) -> f64 {
        if w.abs() <= self.half_width {
            1.0
        } else {
            0.0
        }
    }
    fn support(&self) -> f64 {
        self.half_width
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.half_width]
    }
    fn at_secant(&self, sec: f64) -> f64 {
        if within_secant_cutoff(sec, self.secant_cutoff) {
            1.0
        } else {
            0.0
        }
    }
    fn secant_support(&self) -> f64 {
        self.secant_cutoff
    }
}

/// `U = tan Θ = sqrt(X² - 1)` for the cutoff `sec v ≤ X`.
pub fn cutoff_u(x: f64) -> f64 {
    (x * x - 1.0).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `f± = 1_{[-L, L]} ∗ χ ∗ χ` with `L = arcsinh U ± 2δ`, stored as an even
/// piecewise quadratic on `[0, L + 2δ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingProfile {
    pub u: f64,
    pub width: f64,
    pub sign: Sign,
    core: f64,
    spline: Vec<Piece>,
}

/// Quadratic `c0 + c1 (w-m) + c2 (w-m)²` on `[lo, hi]`, `m` the midpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: [f64; 3],
}

impl Piece {
    fn eval(&self, w: f64) -> f64 {
        let d = w - 0.5 * (self.lo + self.hi);
        self.coeffs[0] + d * (self.coeffs[1] + d * self.coeffs[2])
    }
}

/// CDF of the triangle density `χ ∗ χ` (half-width `2δ`).
fn triangle_cdf(x: f64, delta: f64) -> f64 {
    let w = 2.0 * delta;
    let d2 = 2.0 * w * w;
    if x <= -w {
        0.0
    } else if x <= 0.0 {
        (x + w).powi(2) / d2
    } else if x < w {
        1.0 - (w - x).powi(2) / d2
    } else {
        1.0
    }
}

impl SmoothingProfile {
    pub fn new(u: f64, width: f64, sign: Sign) -> Result<Self> {
        if !(width > 0.0 && width < 1.0) {
            return Err(Error::Domain(format!("smoothing width {width} outside (0, 1)")));
        }
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("U = {u} must be non-negative")));
        }
        let a = u.asinh();
        let core = match sign {
            Sign::Plus => a + 2.0 * width,
            Sign::Minus => (a - 2.0 * width).max(0.0),
        };
        let mut p = SmoothingProfile {
            u,
            width,
            sign,
            core,
            spline: Vec::new(),
        };
        p.spline = p.build_spline();
        Ok(p)
    }

    /// Profiles bracketing the count `sec v ≤ X`.
    pub fn for_cutoff(x: f64, width: f64, sign: Sign) -> Result<Self> {
        if !(x >= 1.0) {
            return Err(Error::Domain(format!("X = {x} must be at least 1")));
        }
        Self::new(cutoff_u(x), width, sign)
    }

    /// Closed form by differences of the triangle CDF.
    pub fn eval_direct(&self, w: f64) -> f64 {
        if self.core <= 0.0 {
            return 0.0;
        }
        let w = w.abs();
        triangle_cdf(w + self.core, self.width) - triangle_cdf(w - self.core, self.width)
    }

    pub fn knots(&self) -> Vec<f64> {
        if self.core <= 0.0 {
            return vec![0.0];
        }
        let (l, w) = (self.core, 2.0 * self.width);
        let mut k: Vec<f64> = [0.0, l - w, l, l + w, w - l, w]
            .into_iter()
            .filter(|&x| x >= 0.0 && x <= l + w)
            .collect();
        // Knots from the left tail (-L + {-2δ, 0, 2δ}) only matter when L < 2δ.
        if l < w {
            k.push(w - l);
        }
        k.sort_by(f64::total_cmp);
        k.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        k
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.spline
    }

    fn build_spline(&self) -> Vec<Piece> {
        self.knots()
            .windows(2)
            .filter(|k| k[1] > k[0])
            .map(|k| {
                let (lo, hi) = (k[0], k[1]);
                let m = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo);
                let (f0, f1, f2) = (self.eval_direct(lo), self.eval_direct(m), self.eval_direct(hi));
                Piece {
                    lo,
                    hi,
                    coeffs: [f1, (f2 - f0) / (2.0 * h), (f0 - 2.0 * f1 + f2) / (2.0 * h * h)],
                }
            })
            .collect()
    }
}

impl Profile for SmoothingProfile {
    fn eval(&self, w: f64) -> f64 {
        let w = w.abs();
        if self.core <= 0.0 || w >= self.support() {
            return 0.0;
        }
        let idx = self.spline.partition_point(|p| p.hi <= w);
        match self.spline.get(idx) {
            Some(p) => p.eval(w).clamp(0.0, 1.0),
            None => 0.0,
        }
    }
    fn support(&self) -> f64 {
        if self.core <= 0.0 {
            0.0
        } else {
            self.core + 2.0 * self.width
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.knots()
    }
}

/// `d(f, s) = ∫_R f(cosh²u) cosh(su) du` by adaptive quadrature on the
/// (even) support.
pub fn d_transform(f: &dyn Profile, s: Complex64, quad_tol: f64) -> Result<Complex64> {
    let top = f.support();
    let e = quadrature::integrate(
        |u| (s * u).cosh() * f.eval(u),
        0.0,
        top,
        &f.breakpoints(),
        quad_tol / 2.0,
    )?;
    Ok(e.value * 2.0)
}

/// `sinh(z)/z`, continuous at zero.
fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0))
    } else {
        z.sinh() / z
    }
}

/// `d(1_{[-T,T]}, s) = 2 sinh(sT)/s`.
pub fn d_indicator_closed(half_width: f64, s: Complex64) -> Complex64 {
    2.0 * half_width * sinhc(s * half_width)
}

/// `d(f⁺, s) = 8 sinh(s(arcsinh U + 2δ)) sinh²(sδ) / ((2δ)² s³)`, evaluated
/// through `sinh(z)/z` so that `s = 0` gives `2(arcsinh U + 2δ)`.
pub fn d_plus_closed(u: f64, width: f64, s: Complex64) -> Result<Complex64> {
    if !(width > 0.0 && width < 1.0) {
        return Err(Error::Domain(format!("smoothing width {width} outside (0, 1)")));
    }
    if !(u > 0.0) {
        return Err(Error::Domain(format!("U = {u} must be positive")));
    }
    let l = u.asinh() + 2.0 * width;
    let box_factor = sinhc(s * width);
    Ok(2.0 * l * sinhc(s * l) * box_factor * box_factor)
}

/// `c(f, t) = (d(f, s) + d(f, 2-s)) / 4` with `s = 1 + it`.
pub fn c_transform(f: &dyn Profile, t: Complex64, quad_tol: f64) -> Result<Complex64> {
    let s = Complex64::new(1.0, 0.0) + Complex64::i() * t;
    Ok((d_transform(f, s, quad_tol)? + d_transform(f, 2.0 - s, quad_tol)?) / 4.0)
}

/// `c(f, t) = ∫_0^∞ f(1 + r²) cosh((s-1) arcsinh r) dr`, integrated in `r`.
pub fn c_transform_direct(f: &dyn Profile, t: Complex64, quad_tol: f64) -> Result<Complex64> {
    let shift = Complex64::i() * t;
    let top = f.support().sinh();
    let breaks: Vec<f64> = f.breakpoints().iter().map(|w| w.sinh()).collect();
    let e = quadrature::integrate(|r| (shift * r.asinh()).cosh() * f.eval(r.asinh()), 0.0, top, &breaks, quad_tol)?;
    Ok(e.value)
}

/// `c(f⁺, t)` from [`d_plus_closed`].
pub fn c_plus_closed(u: f64, width: f64, t: Complex64) -> Result<Complex64> {
    let s = Complex64::new(1.0, 0.0) + Complex64::i() * t;
    Ok((d_plus_closed(u, width, s)? + d_plus_closed(u, width, 2.0 - s)?) / 4.0)
}

/// The real-`s` leading terms `2^{s-2} X^s / s + 2^{-s} X^{2-s} / (2-s)`
/// (for `s = 2` only `X²/2`).
pub fn c_plus_leading(x: f64, s: f64) -> f64 {
    let main = 2f64.powf(s - 2.0) * x.powf(s) / s;
    if (2.0 - s).abs() < 1e-12 {
        main
    } else {
        main + 2f64.powf(-s) * x.powf(2.0 - s) / (2.0 - s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayBranch {
    /// `|t|·δ < 1`: the `|t|⁻¹` bound.
    Inverse,
    /// `|t|·δ ≥ 1`: the `|t|⁻³ δ⁻²` bound.
    Cubic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientRow {
    pub t: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub bound: f64,
    pub ratio: f64,
    pub branch: DecayBranch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillatoryReport {
    pub x: f64,
    pub width: f64,
    pub rows: Vec<CoefficientRow>,
    /// Smallest `C` with `|a|, |b| ≤ C·min(|t|⁻¹, |t|⁻³δ⁻²)` on the grid.
    pub constant: f64,
}

/// Writes `c(f⁺, t) = a·X^{1+it} + b·X^{1-it}` at `X = sqrt(U²+1)` by
/// solving the 2×2 system from a second cutoff `X₂ = X·exp(π/(4|t|))`, and
/// fits the decay constant of `a`, `b` over the `t` grid.
pub fn oscillatory_coeff_check(u: f64, width: f64, t_grid: &[f64]) -> Result<OscillatoryReport> {
    let x1 = (u * u + 1.0).sqrt();
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t.abs() >= 1.0) {
            return Err(Error::Domain(format!("|t| = {} must be at least 1", t.abs())));
        }
        let x2 = x1 * (PI / (4.0 * t.abs())).exp();
        let tc = Complex64::new(t, 0.0);
        let (c1, c2) = (c_plus_closed(u, width, tc)?, c_plus_closed(cutoff_u(x2), width, tc)?);
        let pw = |x: f64, sign: f64| Complex64::new(0.0, sign * t * x.ln()).exp() * x;
        let (m11, m12, m21, m22) = (pw(x1, 1.0), pw(x1, -1.0), pw(x2, 1.0), pw(x2, -1.0));
        let det = m11 * m22 - m12 * m21;
        let det_scaled = det.norm() / (x1 * x2);
        if det_scaled < 1e-3 {
            return Err(Error::IllConditioned(det_scaled));
        }
        let a = (c1 * m22 - m12 * c2) / det;
        let b = (m11 * c2 - m21 * c1) / det;
        let at = t.abs();
        let bound = (1.0 / at).min(1.0 / (at.powi(3) * width * width));
        let branch = if at * width < 1.0 {
            DecayBranch::Inverse
        } else {
            DecayBranch::Cubic
        };
        rows.push(CoefficientRow {
            t,
            a,
            b,
            bound,
            ratio: a.norm().max(b.norm()) / bound,
            branch,
        });
    }
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(OscillatoryReport {
        x: x1,
        width,
        rows,
        constant,
    })
}

/// Inverse Selberg transform of `h(1+t²) = exp(-t²/(2T)²)·cos(rt)`:
///
/// ```text
/// k(cosh x) = (2√π / 4π²) T³ g(x),
/// g(x) = ((x+r) e^{-T²(x+r)²} + (x-r) e^{-T²(x-r)²}) / sinh x,
/// ```
///
/// with `k(1) = T³ u(rT) / (2π^{3/2})`, `u(y) = 2e^{-y²}(1 - 2y²)`.
pub fn selberg_inverse_gaussian(t_scale: f64, r: f64, x: f64) -> Result<f64> {
    if !(t_scale > 0.0) || !(r >= 0.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!("need T > 0, r >= 0, x >= 0 (got {t_scale}, {r}, {x})")));
    }
    let pref = 2.0 * PI.sqrt() / (4.0 * PI * PI) * t_scale.powi(3);
    let a = t_scale * t_scale;
    // φ(x+r) + φ(x-r) with φ(y) = y e^{-a y²}, regrouped so that neither
    // the difference of the two terms nor the division by sinh x cancels:
    // g = 2 (x / sinh x) e^{-a(r²+x²)} (cosh q - 2ar² sinh(q)/q), q = 2arx,
    // with the exponentials combined before evaluation to avoid underflow.
    let q = 2.0 * a * r * x;
    let e = (-a * (x - r).powi(2)).exp();
    let cosh_part = 0.5 * e * (1.0 + (-2.0 * q).exp());
    let sinhc_part = if q == 0.0 { e } else { e * -(-2.0 * q).exp_m1() / (2.0 * q) };
    let x_over_sinh = if x == 0.0 { 1.0 } else { x / x.sinh() };
    let g = 2.0 * x_over_sinh * (cosh_part - 2.0 * a * r * r * sinhc_part);
    Ok(pref * g)
}

/// `u(y) = 2e^{-y²}(1 - 2y²)`.
pub fn selberg_u(y: f64) -> f64 {
    2.0 * (-y * y).exp() * (1.0 - 2.0 * y * y)
}

/// `k(1) = T³ u(rT) / (2π^{3/2})`.
pub fn selberg_k_at_one(t_scale: f64, r: f64) -> f64 {
    t_scale.powi(3) * selberg_u(r * t_scale) / (2.0 * PI.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

    #[test]
    fn xi_examples() {
        for lambda in [0.0, 0.3, 1.0, 7.0, 50.0] {
            let p = SpectralParam::from_lambda(lambda);
            assert_eq!(xi(&p, 0.0).unwrap(), 1.0);
            assert!((p.s * (2.0 - p.s)).re - lambda < 1e-12);
        }
        let zero = SpectralParam::from_s(Complex64::new(2.0, 0.0)).unwrap();
        let one = SpectralParam::from_s(C1).unwrap();
        for v in [-1.2, -0.3, 0.5, 1.4] {
            assert!((xi(&zero, v).unwrap() - 1.0).abs() < 1e-13);
            assert!((xi(&one, v).unwrap() - f64::cos(v)).abs() < 1e-15);
        }
        assert!(xi(&one, PI / 2.0).is_err());
        assert!(SpectralParam::from_s(Complex64::new(1.5, 0.5)).is_err());
    }

    #[test]
    fn spectral_param_identities() {
        for s in [Complex64::new(1.3, 0.0), Complex64::new(1.0, 4.0), Complex64::new(2.0, 0.0)] {
            let p = SpectralParam::from_s(s).unwrap();
            assert!((1.0 - p.lambda - ((s - 1.0) * (s - 1.0)).re).abs() < 1e-12);
            assert!(((s - 1.0) * (s - 1.0)).im.abs() < 1e-12);
            let q = SpectralParam::from_t(p.t).unwrap();
            assert!((q.s - s).norm() < 1e-15);
        }
    }

    #[test]
    fn xi_bounds_examples() {
        for lambda in [0.0, 1.0, 50.0] {
            let r = xi_bounds_check(&SpectralParam::from_lambda(lambda), 2000).unwrap();
            assert!(r.holds(1e-12), "lambda {lambda}: {r:?}");
        }
        assert!(xi_bounds_check(&SpectralParam::from_lambda(-1.0), 10).is_err());
    }

    #[test]
    fn indicator_transform() {
        let f = Indicator::new(1.0);
        let s = Complex64::new(2.0, 0.0);
        let d = d_transform(&f, s, 1e-12).unwrap();
        assert!((d.re - 2f64.sinh()).abs() < 1e-10);
        assert!((2f64.sinh() - 3.626_860_407_847_019).abs() < 1e-12);
        let d0 = d_transform(&f, Complex64::new(0.0, 0.0), 1e-12).unwrap();
        assert!((d0.re - 2.0).abs() < 1e-12);
        assert!((d_indicator_closed(1.0, s) - d).norm() < 1e-10);
    }

    /// `(1_{[-L,L]} ∗ χ ∗ χ)(w)` by nested numeric convolution.
    fn numeric_double_convolution(l: f64, delta: f64, w: f64) -> f64 {
        let chi = 1.0 / (2.0 * delta);
        let inner = |a: f64| {
            // (1_{[-L,L]} ∗ χ)(a) = |[-L,L] ∩ [a-δ, a+δ]| / (2δ).
            let lo = (-l).max(a - delta);
            let hi = l.min(a + delta);
            (hi - lo).max(0.0) * chi
        };
        let breaks = [w - l - delta, w - l + delta, w + l - delta, w + l + delta];
        quadrature::integrate_real(|b| inner(w - b) * chi, -delta, delta, &breaks, 1e-14)
            .unwrap()
            .0
    }

    #[test]
    fn profiles_match_numeric_convolution() {
        for (u, delta, sign) in [(10.0, 0.1, Sign::Plus), (10.0, 0.1, Sign::Minus), (0.3, 0.2, Sign::Minus), (3.0, 0.05, Sign::Plus)] {
            let f = SmoothingProfile::new(u, delta, sign).unwrap();
            let l = match sign {
                Sign::Plus => u.asinh() + 2.0 * delta,
                Sign::Minus => (u.asinh() - 2.0 * delta).max(0.0),
            };
            for k in 0..200 {
                let w = -4.0 + 8.0 * k as f64 / 199.0;
                let want = if l > 0.0 { numeric_double_convolution(l, delta, w) } else { 0.0 };
                assert!((f.eval(w) - want).abs() < 1e-12, "{sign:?} U={u} w={w}: {} vs {want}", f.eval(w));
                assert!((f.eval(w) - f.eval_direct(w)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn profile_shape() {
        let x: f64 = 30.0;
        let delta = x.powf(-0.5);
        let plus = SmoothingProfile::for_cutoff(x, delta, Sign::Plus).unwrap();
        let minus = SmoothingProfile::for_cutoff(x, delta, Sign::Minus).unwrap();
        let a = cutoff_u(x).asinh();
        assert!((plus.support() - (a + 4.0 * delta)).abs() < 1e-14);
        assert!((minus.support() - a).abs() < 1e-14);
        let sharp = Indicator::counting(x);
        for k in 0..=2000 {
            let w = 6.0 * k as f64 / 2000.0;
            assert!(minus.eval(w) <= sharp.eval(w) && sharp.eval(w) <= plus.eval(w), "w = {w}");
            if w <= a {
                assert_eq!(plus.eval(w), 1.0);
            }
            if w >= a {
                assert_eq!(minus.eval(w), 0.0);
            }
            assert_eq!(plus.eval(w), plus.eval(-w));
        }
        // C¹: one-sided difference quotients agree at each knot.
        for k in plus.knots() {
            if k == 0.0 {
                continue;
            }
            let h = 1e-7;
            let left = (plus.eval(k) - plus.eval(k - h)) / h;
            let right = (plus.eval(k + h) - plus.eval(k)) / h;
            assert!((left - right).abs() < 1e-5, "knot {k}: {left} vs {right}");
        }
    }

    #[test]
    fn d_plus_matches_quadrature() {
        let (u, delta) = (10.0, 0.1);
        let s = Complex64::new(1.3, 0.0);
        let f = SmoothingProfile::new(u, delta, Sign::Plus).unwrap();
        let quad = d_transform(&f, s, 1e-12).unwrap();
        let closed = d_plus_closed(u, delta, s).unwrap();
        assert!((quad - closed).norm() <= 1e-8 * closed.norm());
        let zero = d_plus_closed(u, delta, Complex64::new(0.0, 0.0)).unwrap();
        assert!((zero.re - 2.0 * (u.asinh() + 2.0 * delta)).abs() < 1e-14);
        assert!(d_plus_closed(u, 1.5, s).is_err());
    }

    #[test]
    fn d_plus_real_scaling() {
        let x: f64 = 200.0;
        let u = cutoff_u(x);
        for s in [1.0, 1.5, 2.0] {
            let target = (2.0 * x).powf(s) / s;
            let r1 = d_plus_closed(u, 0.01, Complex64::new(s, 0.0)).unwrap().re / target;
            let r2 = d_plus_closed(u, 0.001, Complex64::new(s, 0.0)).unwrap().re / target;
            assert!((r2 - 1.0).abs() < (r1 - 1.0).abs());
            assert!((r2 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn c_transform_routes_agree() {
        let f = SmoothingProfile::new(5.0, 0.1, Sign::Plus).unwrap();
        for t in [Complex64::new(0.0, -0.6), Complex64::new(2.5, 0.0), Complex64::new(0.0, -1.0)] {
            let a = c_transform(&f, t, 1e-12).unwrap();
            let b = c_transform_direct(&f, t, 1e-12).unwrap();
            assert!((a - b).norm() <= 1e-8 * a.norm().max(1.0), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn c_plus_leading_terms() {
        let x: f64 = 100.0;
        let u = cutoff_u(x);
        // s = 2 is t = -i.
        let ratio = |w: f64| c_plus_closed(u, w, Complex64::new(0.0, -1.0)).unwrap().re / (x * x / 2.0);
        assert!((ratio(0.001) - 1.0).abs() < (ratio(0.01) - 1.0).abs());
        assert!((ratio(0.001) - 1.0).abs() < 0.01);
        for s in [1.2, 1.5, 1.8] {
            let t = Complex64::new(0.0, -(s - 1.0));
            let lead = c_plus_leading(x, s);
            for w in [0.01, 0.005] {
                let c = c_plus_closed(u, w, t).unwrap().re;
                let rel = (c - lead).abs() / (w * x.powf(s));
                assert!(rel < 2.0, "s={s} width={w}: normalized error {rel}");
            }
        }
    }

    #[test]
    fn oscillatory_branches() {
        let u = cutoff_u(100.0);
        let grid: Vec<f64> = (0..40).map(|k| 1.0 + 1.5 * k as f64).collect();
        let mut constants = Vec::new();
        for width in [0.1, 0.05, 0.02] {
            let r = oscillatory_coeff_check(u, width, &grid).unwrap();
            assert!(r.rows.iter().any(|row| row.branch == DecayBranch::Inverse));
            assert!(r.rows.iter().any(|row| row.branch == DecayBranch::Cubic));
            constants.push(r.constant);
        }
        let mean = constants.iter().sum::<f64>() / 3.0;
        for c in &constants {
            assert!((c / mean - 1.0).abs() < 0.2, "{constants:?}");
        }
        assert!(oscillatory_coeff_check(u, 0.1, &[0.5]).is_err());
    }

    #[test]
    fn selberg_closed_form_examples() {
        for t in [1.0, 5.0, 10.0] {
            let k1 = selberg_inverse_gaussian(t, 0.0, 0.0).unwrap();
            assert!((k1 - t.powi(3) / PI.powf(1.5)).abs() <= 1e-12 * k1);
            for r in [0.0, 1.0, 2.0] {
                let k = selberg_inverse_gaussian(t, r, 0.0).unwrap();
                assert!((k - selberg_k_at_one(t, r)).abs() <= 1e-10 * k.abs().max(1e-300));
                // Against the plain quotient away from x = 0.
                for x in [0.05, 0.7, 2.5] {
                    let phi = |y: f64| y * (-t * t * y * y).exp();
                    let direct = 2.0 * PI.sqrt() / (4.0 * PI * PI) * t.powi(3) * (phi(x + r) + phi(x - r)) / x.sinh();
                    let k = selberg_inverse_gaussian(t, r, x).unwrap();
                    assert!((k - direct).abs() <= 1e-12 * direct.abs(), "T={t} r={r} x={x}: {k} vs {direct}");
                }
            }
        }
        // r = 2, T = 10, x = 2: the (x - r) term dominates and vanishes at x = r.
        let k = selberg_inverse_gaussian(10.0, 2.0, 2.0).unwrap();
        let pref = 2.0 * PI.sqrt() / (4.0 * PI * PI) * 1000.0;
        assert!((k - pref * 4.0 * (-1600f64).exp() / 2f64.sinh()).abs() <= 1e-12 * k.abs().max(1e-300));
        assert!(selberg_inverse_gaussian(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn k_at_one_bound() {
        // |k(1)| ≤ C·min(T³, r⁻³) with C = max|y³u(y)|, max|u| over y ≥ 0.
        let cu = (0..10_000).map(|k| selberg_u(k as f64 * 1e-3).abs()).fold(0.0, f64::max);
        let cy = (0..10_000).map(|k| { let y = k as f64 * 1e-3; (y.powi(3) * selberg_u(y)).abs() }).fold(0.0, f64::max);
        let c = cu.max(cy) / (2.0 * PI.powf(1.5));
        for t in [1.0, 3.0, 10.0] {
            for r in [0.1, 0.5, 1.0, 2.0] {
                let k = selberg_k_at_one(t, r).abs();
                assert!(k <= 1.0001 * c * f64::min(t.powi(3), r.powi(-3)));
            }
        }
    }

    #[test]
    fn u_x_relation() {
        for x in [2.0, 3.5, 10.0, 100.0, 1e4] {
            let u = cutoff_u(x);
            assert!((u - x).abs() <= 1.0 / x);
        }
    }
}
