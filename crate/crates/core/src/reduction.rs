//! Reduction into a fundamental domain of the plane stabilizer.
//!
//! For the Picard group the stabilizer `H` of `P = {x2 = 0}` acts on `P`
//! through `PSL2(Z)` together with `ι = (i 0; 0 -i)`, which reflects
//! `x ↦ -x`. The domain used here is
//!
//! ```text
//! S = { (x, t) : 0 ≤ x ≤ 1/2, x² + t² ≥ 1 }
//! ```
//!
//! in upper half-plane coordinates `(x, t) = (x, e^u)`. Every element of
//! `H` acts on the sector chart independently of `v`, up to the sign flip
//! of `v` from the purely imaginary elements.

use crate::error::{Error, Result};
use crate::gaussian::{GMatrix, GaussInt};
use crate::geometry::{moebius_act, to_sector, Point};

const MAX_REDUCTION_STEPS: usize = 100_000;

/// Grid spacing of the quantized coset key.
pub const KEY_GRANULARITY: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub t: f64,
}

impl PlanePoint {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !x.is_finite() || !t.is_finite() {
            return Err(Error::Domain(format!("plane point ({x}, {t}) needs t > 0")));
        }
        Ok(PlanePoint { x, t })
    }

    pub fn as_point(&self) -> Point {
        Point {
            x1: self.x,
            x2: 0.0,
            y: self.t,
        }
    }

    pub fn in_domain(&self, tol: f64) -> bool {
        self.x >= -tol && self.x <= 0.5 + tol && self.x * self.x + self.t * self.t >= 1.0 - tol
    }
}

/// Reduces `q` into `S`, returning the image and the element of `H` that
/// realizes it. Ties: no inversion on the unit circle, `x ≥ 0` preferred.
pub fn reduce_plane(q: &PlanePoint) -> Result<(PlanePoint, GMatrix)> {
    let (mut x, mut t) = (q.x, q.t);
    let mut h = GMatrix::IDENTITY;
    let mut steps = 0;
    loop {
        steps += 1;
        if steps > MAX_REDUCTION_STEPS {
            return Err(Error::NonTermination(MAX_REDUCTION_STEPS));
        }
        let n = (x + 0.5).floor();
        if n != 0.0 {
            x -= n;
            h = GMatrix::translation(GaussInt::from(-(n as i64))) * h;
        }
        let r2 = x * x + t * t;
        if r2 < 1.0 - 1e-14 {
            x = -x / r2;
            t /= r2;
            h = GMatrix::inversion() * h;
        } else {
            break;
        }
    }
    if x < 0.0 {
        h = GMatrix::iota() * h;
    }
    // Recompute from the exact group element rather than the iterated floats.
    let image = moebius_act(&h, &q.as_point());
    Ok((PlanePoint { x: image.x1, t: image.y }, h))
}

/// Geometric canonical form of the coset `H·g` seen from the base point `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosetKey {
    pub x_r: f64,
    pub u_r: f64,
    pub v_abs: f64,
}

/// Integer grid cell of a [`CosetKey`].
pub type QuantKey = [i64; 3];

impl CosetKey {
    pub fn quantized(&self) -> QuantKey {
        [self.x_r, self.u_r, self.v_abs].map(|c| (c / KEY_GRANULARITY).round() as i64)
    }

    /// The cell of this key plus neighbouring cells for every coordinate
    /// lying within `guard` (in cell units) of a cell boundary.
    pub fn probe_cells(&self, guard: f64) -> Vec<QuantKey> {
        let coords = [self.x_r, self.u_r, self.v_abs];
        let mut cells = vec![self.quantized()];
        for (i, c) in coords.iter().enumerate() {
            let scaled = c / KEY_GRANULARITY;
            let frac = scaled - scaled.round();
            if frac.abs() > 0.5 - guard {
                let step = if frac > 0.0 { 1 } else { -1 };
                let extra: Vec<QuantKey> = cells
                    .iter()
                    .map(|k| {
                        let mut k = *k;
                        k[i] += step;
                        k
                    })
                    .collect();
                cells.extend(extra);
            }
        }
        cells
    }
}

/// Reduced representative of `H·g` at base point `p`: the key, the element
/// `h·g` whose orbit point projects into `S`, and that point.
#[derive(Clone, Copy, Debug)]
pub struct ReducedCoset {
    pub key: CosetKey,
    pub representative: GMatrix,
    pub point: Point,
}

pub fn reduce_coset(g: &GMatrix, p: &Point) -> Result<ReducedCoset> {
    let gp = moebius_act(g, p);
    let s = to_sector(&gp)?;
    let (_, h) = reduce_plane(&PlanePoint::new(s.x, s.u.exp())?)?;
    let rep = h * *g;
    let point = moebius_act(&rep, p);
    let r = to_sector(&point)?;
    Ok(ReducedCoset {
        key: CosetKey {
            x_r: r.x,
            u_r: r.u,
            v_abs: r.v.abs(),
        },
        representative: rep,
        point,
    })
}

pub fn coset_key(g: &GMatrix, p: &Point) -> Result<CosetKey> {
    Ok(reduce_coset(g, p)?.key)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaEstimate {
    pub value: f64,
    pub error: f64,
}

/// Composite Simpson estimate of `∫∫ dt dx / t²` over `{a ≤ x ≤ b,
/// x² + t² ≥ 1}`; the inner integral in `t` is `1/sqrt(1-x²)`.
fn modular_strip_area(a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let inner = |x: f64| 1.0 / (1.0 - x * x).sqrt();
    let h = (b - a) / n as f64;
    let mut sum = inner(a) + inner(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * inner(a + k as f64 * h);
    }
    sum * h / 3.0
}

fn with_richardson(a: f64, b: f64, n: usize) -> Result<AreaEstimate> {
    if n < 100 {
        return Err(Error::Domain(format!("quadrature_n = {n} must be at least 100")));
    }
    let fine = modular_strip_area(a, b, n);
    let coarse = modular_strip_area(a, b, n / 2);
    Ok(AreaEstimate {
        value: fine,
        error: (fine - coarse).abs() / 15.0,
    })
}

/// Hyperbolic area of `S`, which tends to `π/6`.
pub fn area_s(quadrature_n: usize) -> Result<AreaEstimate> {
    with_richardson(0.0, 0.5, quadrature_n)
}

/// Area of the unfolded modular domain `|x| ≤ 1/2`, which tends to `π/3`.
pub fn area_modular_domain(quadrature_n: usize) -> Result<AreaEstimate> {
    with_richardson(-0.5, 0.5, quadrature_n)
}
