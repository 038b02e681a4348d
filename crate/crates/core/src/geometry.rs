//! The upper half-space model of hyperbolic 3-space.
//!
//! Points are `p = z + y·j = (x1, x2, y)` with `y > 0`. Besides the
//! Cartesian chart we use the sector chart
//!
//! ```text
//! x = x1,   u = log sqrt(x2² + y²),   v = arctan(x2 / y)
//! ```
//!
//! in which the plane `P = {x2 = 0}` is `{v = 0}` and `sec v` is the
//! hyperbolic cosine of the distance to `P`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::GMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorCoords {
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

impl Point {
    pub fn new(x1: f64, x2: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x1.is_finite() || !x2.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("point ({x1}, {x2}, {y}) needs finite coordinates and y > 0")));
        }
        Ok(Point { x1, x2, y })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x1, self.x2)
    }

    /// `sec v(p) = sqrt(x2² + y²) / y`.
    pub fn sec_v(&self) -> f64 {
        self.x2.hypot(self.y) / self.y
    }

    /// Whether `sec v(p) ≤ x`, see [`within_secant_cutoff`].
    pub fn within_cutoff(&self, x: f64) -> bool {
        within_secant_cutoff(self.sec_v(), x)
    }

    /// `tan v(p) = x2 / y`.
    pub fn tan_v(&self) -> f64 {
        self.x2 / self.y
    }
}

impl SectorCoords {
    pub fn new(x: f64, u: f64, v: f64) -> Result<Self> {
        if !(v.abs() < FRAC_PI_2) {
            return Err(Error::Domain(format!("sector angle v = {v} outside (-pi/2, pi/2)")));
        }
        Ok(SectorCoords { x, u, v })
    }
}

/// Relative slack applied to every `sec v ≤ X` test, so that orbit points
/// lying exactly on the cutoff (e.g. on `P` when `X = 1`) are not lost to
/// rounding in the Möbius action.
pub const CUTOFF_SLACK: f64 = 1e-12;

pub fn within_secant_cutoff(sec: f64, x: f64) -> bool {
    sec <= x * (1.0 + CUTOFF_SLACK)
}

pub fn to_sector(p: &Point) -> Result<SectorCoords> {
    if !(p.y > 0.0) {
        return Err(Error::Domain(format!("y = {} must be positive", p.y)));
    }
    Ok(SectorCoords {
        x: p.x1,
        u: p.x2.hypot(p.y).ln(),
        v: (p.x2 / p.y).atan(),
    })
}

pub fn from_sector(s: &SectorCoords) -> Result<Point> {
    if !(s.v.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!("sector angle v = {} outside (-pi/2, pi/2)", s.v)));
    }
    let r = s.u.exp();
    let (sin, cos) = s.v.sin_cos();
    Ok(Point {
        x1: s.x,
        x2: r * sin,
        y: r * cos,
    })
}

/// `γp` for `γ = (a b; c d)`:
///
/// ```text
/// z' = ((az + b)·conj(cz + d) + a·conj(c)·y²) / ‖cp + d‖²,   y' = y / ‖cp + d‖²
/// ```
///
/// with `‖cp + d‖² = |cz + d|² + |c|²y²`.
pub fn moebius_act(g: &GMatrix, p: &Point) -> Point {
    let [a, b, c, d] = g.entries().map(|e| e.as_complex());
    let z = p.z();
    let y2 = p.y * p.y;
    let czd = c * z + d;
    let denom = czd.norm_sqr() + c.norm_sqr() * y2;
    let num = (a * z + b) * czd.conj() + a * c.conj() * y2;
    Point {
        x1: num.re / denom,
        x2: num.im / denom,
        y: p.y / denom,
    }
}

/// `‖cp + d‖²` for a bottom row `(c, d)`.
pub fn row_norm(c: Complex64, d: Complex64, p: &Point) -> f64 {
    (c * p.z() + d).norm_sqr() + c.norm_sqr() * p.y * p.y
}

/// The point-pair invariant `δ(p, q) = cosh d(p, q)`.
pub fn pp_invariant(p: &Point, q: &Point) -> f64 {
    let dz = (p.z() - q.z()).norm_sqr();
    (dz + p.y * p.y + q.y * q.y) / (2.0 * p.y * q.y)
}

/// Hyperbolic distance `arccosh δ(p, q)`.
pub fn distance(p: &Point, q: &Point) -> f64 {
    pp_invariant(p, q).max(1.0).acosh()
}

/// Orthogonal projection onto `P = {x2 = 0}` along geodesics.
pub fn project_to_plane(p: &Point) -> Point {
    Point {
        x1: p.x1,
        x2: 0.0,
        y: p.x2.hypot(p.y),
    }
}

fn check_chart(s: &SectorCoords) -> Result<()> {
    if FRAC_PI_2 - s.v.abs() < 1e-3 {
        return Err(Error::ChartDegenerate(s.v.abs()));
    }
    Ok(())
}

/// Closed-form metric tensor of the sector chart (diagonal entries).
pub fn sector_metric(s: &SectorCoords) -> [f64; 3] {
    let sec2 = 1.0 / s.v.cos().powi(2);
    [(-2.0 * s.u).exp() * sec2, sec2, sec2]
}

/// Pulls the Cartesian metric `(dx1² + dx2² + dy²)/y²` back through
/// [`from_sector`] with a central-difference Jacobian and returns the
/// largest absolute deviation from [`sector_metric`].
pub fn check_metric_tensor(s: &SectorCoords, step: f64) -> Result<f64> {
    check_chart(s)?;
    let p = from_sector(s)?;
    let shifted = |k: usize, h: f64| -> Result<[f64; 3]> {
        let mut t = *s;
        match k {
            0 => t.x += h,
            1 => t.u += h,
            _ => t.v += h,
        }
        let q = from_sector(&t)?;
        Ok([q.x1, q.x2, q.y])
    };
    let mut jac = [[0.0; 3]; 3];
    for k in 0..3 {
        let (fwd, bwd) = (shifted(k, step)?, shifted(k, -step)?);
        for i in 0..3 {
            jac[i][k] = (fwd[i] - bwd[i]) / (2.0 * step);
        }
    }
    let want = sector_metric(s);
    let y2 = p.y * p.y;
    let mut dev: f64 = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            let g: f64 = (0..3).map(|i| jac[i][k] * jac[i][l]).sum::<f64>() / y2;
            let target = if k == l { want[k] } else { 0.0 };
            dev = dev.max((g - target).abs());
        }
    }
    Ok(dev)
}

fn second_difference<F: Fn(f64) -> f64>(f: F, h: f64) -> (f64, f64) {
    let (fp, f0, fm) = (f(h), f(0.0), f(-h));
    ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
}

/// Sector-chart Laplacian of `F = f ∘ from_sector` at `s` by central
/// differences.
fn sector_laplacian<F: Fn(&Point) -> f64>(s: &SectorCoords, f: &F, h: f64) -> Result<f64> {
    let eval = |x: f64, u: f64, v: f64| f(&from_sector(&SectorCoords { x, u, v }).expect("chart checked"));
    let (_, fxx) = second_difference(|t| eval(s.x + t, s.u, s.v), h);
    let (fu, fuu) = second_difference(|t| eval(s.x, s.u + t, s.v), h);
    let (fv, fvv) = second_difference(|t| eval(s.x, s.u, s.v + t), h);
    let (sin, cos) = s.v.sin_cos();
    let cos2 = cos * cos;
    Ok((2.0 * s.u).exp() * cos2 * fxx + cos2 * (fuu + fvv) - cos2 * fu + sin * cos * fv)
}

/// Cartesian Laplacian `y²(∂²x1 + ∂²x2 + ∂²y) − y ∂y` by central differences.
fn cartesian_laplacian<F: Fn(&Point) -> f64>(p: &Point, f: &F, h: f64) -> f64 {
    let (_, f11) = second_difference(|t| f(&Point { x1: p.x1 + t, ..*p }), h);
    let (_, f22) = second_difference(|t| f(&Point { x2: p.x2 + t, ..*p }), h);
    let (fy, fyy) = second_difference(|t| f(&Point { y: p.y + t, ..*p }), h);
    p.y * p.y * (f11 + f22 + fyy) - p.y * fy
}

/// Absolute difference between the sector-chart and Cartesian Laplacians
/// of `f` at the point with sector coordinates `s`.
pub fn check_laplacian<F: Fn(&Point) -> f64>(s: &SectorCoords, f: F, step: f64) -> Result<f64> {
    check_chart(s)?;
    let p = from_sector(s)?;
    if step >= p.y {
        return Err(Error::Domain(format!("step {step} exceeds height {}", p.y)));
    }
    Ok((sector_laplacian(s, &f, step)? - cartesian_laplacian(&p, &f, step)).abs())
}

/// As [`check_laplacian`], with both sides Richardson-extrapolated from
/// steps `h` and `h/2`.
pub fn check_laplacian_richardson<F: Fn(&Point) -> f64>(s: &SectorCoords, f: F, step: f64) -> Result<f64> {
    check_chart(s)?;
    let p = from_sector(s)?;
    if step >= p.y {
        return Err(Error::Domain(format!("step {step} exceeds height {}", p.y)));
    }
    let rich = |coarse: f64, fine: f64| (4.0 * fine - coarse) / 3.0;
    let sec = rich(sector_laplacian(s, &f, step)?, sector_laplacian(s, &f, step / 2.0)?);
    let cart = rich(cartesian_laplacian(&p, &f, step), cartesian_laplacian(&p, &f, step / 2.0));
    Ok((sec - cart).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{complete_row, ggcd, GaussInt};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn sector_examples() {
        let s = to_sector(&Point::new(0.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(close(s.u, 2f64.sqrt().ln(), 1e-15) && close(s.v, FRAC_PI_4, 1e-15));
        let s = to_sector(&Point::new(3.0, 0.0, 2.0).unwrap()).unwrap();
        assert_eq!((s.x, s.v), (3.0, 0.0));
        assert!(close(s.u, 2f64.ln(), 1e-15));
        let s = to_sector(&Point::new(0.0, -1.0, 1.0).unwrap()).unwrap();
        assert!(close(s.v, -FRAC_PI_4, 1e-15));
        assert!(to_sector(&Point { x1: 0.0, x2: 0.0, y: -1.0 }).is_err());

        let p = from_sector(&SectorCoords { x: 0.0, u: 0.0, v: 0.0 }).unwrap();
        assert_eq!((p.x1, p.x2, p.y), (0.0, 0.0, 1.0));
        let p = from_sector(&SectorCoords { x: 1.0, u: 2f64.ln(), v: 0.0 }).unwrap();
        assert!(close(p.y, 2.0, 1e-15) && p.x2 == 0.0);
        assert!(from_sector(&SectorCoords { x: 0.0, u: 0.0, v: FRAC_PI_2 }).is_err());
    }

    #[test]
    fn moebius_examples() {
        let p = Point::new(0.3, -0.2, 1.1).unwrap();
        assert_eq!(moebius_act(&GMatrix::IDENTITY, &p), p);
        let t = GMatrix::translation(GaussInt::ONE);
        let q = moebius_act(&t, &Point::new(0.0, 0.0, 1.0).unwrap());
        assert_eq!((q.x1, q.x2, q.y), (1.0, 0.0, 1.0));
        let q = moebius_act(&GMatrix::iota(), &p);
        assert_eq!((q.x1, q.x2, q.y), (-0.3, 0.2, 1.1));
    }

    #[test]
    fn pp_invariant_examples() {
        let p = Point::new(0.0, 1.0, 1.0).unwrap();
        assert_eq!(pp_invariant(&p, &p), 1.0);
        let q = project_to_plane(&p);
        assert!(close(q.y, 2f64.sqrt(), 1e-15));
        assert!(close(pp_invariant(&p, &q), 2f64.sqrt(), 1e-15));
        let a = Point::new(0.0, 0.0, 1.0).unwrap();
        let b = Point::new(0.0, 0.0, 1f64.exp()).unwrap();
        assert!(close(pp_invariant(&a, &b), 1f64.cosh(), 1e-15));
        let on_plane = Point::new(5.0, 0.0, 2.0).unwrap();
        assert_eq!(project_to_plane(&on_plane), on_plane);
    }

    #[test]
    fn metric_tensor_examples() {
        let d = check_metric_tensor(&SectorCoords { x: 0.0, u: 0.0, v: 0.0 }, 1e-5).unwrap();
        assert!(d < 1e-8, "deviation {d}");
        let d = check_metric_tensor(&SectorCoords { x: 1.0, u: 0.5, v: 0.7 }, 1e-5).unwrap();
        assert!(d < 1e-7, "deviation {d}");
        let s = SectorCoords { x: 1.0, u: 0.5, v: 0.7 };
        let ratio = check_metric_tensor(&s, 1e-2).unwrap() / check_metric_tensor(&s, 5e-3).unwrap();
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        assert!(matches!(
            check_metric_tensor(&SectorCoords { x: 0.0, u: 0.0, v: FRAC_PI_2 - 1e-4 }, 1e-5),
            Err(Error::ChartDegenerate(_))
        ));
    }

    #[test]
    fn laplacian_examples() {
        let s = SectorCoords { x: 0.2, u: 0.1, v: 0.4 };
        assert!(check_laplacian(&s, |_| 3.0, 1e-4).unwrap() < 1e-10);
        // Δ(y²) = 2y² - 2y² = 0 in either chart.
        let d = check_laplacian(&s, |p: &Point| p.y * p.y, 1e-4).unwrap();
        assert!(d < 1e-6, "{d}");
        let poly = |p: &Point| 1.0 + p.x1 * p.x2 - 2.0 * p.y.powi(3) + p.x2 * p.x2 * p.y + 0.5 * p.x1.powi(2);
        let d = check_laplacian(&s, poly, 1e-4).unwrap();
        assert!(d < 1e-5, "{d}");
        let r = check_laplacian_richardson(&s, poly, 1e-3).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    fn random_point() -> impl Strategy<Value = Point> {
        (-2.0..2.0f64, -2.0..2.0f64, 0.2..3.0f64).prop_map(|(a, b, c)| Point { x1: a, x2: b, y: c })
    }

    fn random_matrix() -> impl Strategy<Value = GMatrix> {
        ((-7i64..=7, -7i64..=7), (-7i64..=7, -7i64..=7), (-3i64..=3, -3i64..=3)).prop_filter_map(
            "coprime",
            |(c, d, t)| {
                let (c, d) = (GaussInt::new(c.0, c.1), GaussInt::new(d.0, d.1));
                if ggcd(c, d).ok()? != GaussInt::ONE {
                    return None;
                }
                Some(GMatrix::translation(GaussInt::new(t.0, t.1)) * complete_row(c, d).ok()?)
            },
        )
    }

    fn random_h() -> impl Strategy<Value = GMatrix> {
        (-6i64..=6, -6i64..=6, -4i64..=4, any::<bool>()).prop_filter_map("coprime", |(c, d, n, flip)| {
            let m = GMatrix::translation(GaussInt::from(n)) * complete_row(GaussInt::from(c), GaussInt::from(d)).ok()?;
            Some(if flip { m * GMatrix::iota() } else { m })
        })
    }

    proptest! {
        #[test]
        fn sector_round_trip(p in random_point()) {
            let q = from_sector(&to_sector(&p).unwrap()).unwrap();
            prop_assert!(close(q.x1, p.x1, 1e-12) && close(q.x2, p.x2, 1e-12) && close(q.y, p.y, 1e-12));
        }

        #[test]
        fn pp_invariant_is_isometry_invariant(p in random_point(), q in random_point(), g in random_matrix()) {
            let (gp, gq) = (moebius_act(&g, &p), moebius_act(&g, &q));
            prop_assert!(gp.y > 0.0);
            let (a, b) = (pp_invariant(&p, &q), pp_invariant(&gp, &gq));
            prop_assert!((a - b).abs() <= 1e-10 * a, "{} vs {}", a, b);
            prop_assert!(a >= 1.0);
            prop_assert!((a - pp_invariant(&q, &p)).abs() <= 1e-15 * a);
        }

        #[test]
        fn sec_v_is_distance_to_plane(p in random_point()) {
            let s = to_sector(&p).unwrap();
            let d = pp_invariant(&p, &project_to_plane(&p));
            prop_assert!((1.0 / s.v.cos() - d).abs() <= 1e-12 * d);
            prop_assert_eq!(to_sector(&project_to_plane(&p)).unwrap().v, 0.0);
        }

        #[test]
        fn stabilizer_commutes_with_projection(p in random_point(), h in random_h()) {
            let hp = moebius_act(&h, &p);
            let (v0, v1) = (to_sector(&p).unwrap().v, to_sector(&hp).unwrap().v);
            let expect = if h.flips_plane_side() { -v0 } else { v0 };
            prop_assert!((v1 - expect).abs() <= 1e-10);
            let a = project_to_plane(&hp);
            let b = moebius_act(&h, &project_to_plane(&p));
            prop_assert!((a.x1 - b.x1).abs() <= 1e-10 * (1.0 + a.x1.abs()));
            prop_assert!((a.y - b.y).abs() <= 1e-10 * a.y);
            prop_assert!(b.x2.abs() <= 1e-12);
        }

        #[test]
        fn real_translation_shifts_x_only(p in random_point(), n in -20i64..=20) {
            let q = moebius_act(&GMatrix::translation(GaussInt::from(n)), &p);
            let (s, t) = (to_sector(&p).unwrap(), to_sector(&q).unwrap());
            prop_assert!((t.u - s.u).abs() <= 1e-12 && (t.v - s.v).abs() <= 1e-12);
            prop_assert!((t.x - s.x - n as f64).abs() <= 1e-12);
        }
    }
}
