//! Exact arithmetic over the Gaussian integers `Z[i]` and unimodular 2×2
//! matrices over them, taken modulo `±I`.
//!
//! All arithmetic is checked. Overflow panics with a message naming the
//! operation; enumeration bounds elsewhere keep entries many orders of
//! magnitude below `i64::MAX`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

#[inline]
fn ck(v: Option<i64>, op: &str) -> i64 {
    v.unwrap_or_else(|| panic!("Gaussian integer overflow in {op}"))
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };
    pub const ONE: GaussInt = GaussInt { re: 1, im: 0 };
    pub const I: GaussInt = GaussInt { re: 0, im: 1 };
    pub const UNITS: [GaussInt; 4] = [
        GaussInt { re: 1, im: 0 },
        GaussInt { re: 0, im: 1 },
        GaussInt { re: -1, im: 0 },
        GaussInt { re: 0, im: -1 },
    ];

    pub const fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    pub fn norm(self) -> i64 {
        ck(
            self.re
                .checked_mul(self.re)
                .and_then(|a| self.im.checked_mul(self.im).and_then(|b| a.checked_add(b))),
            "norm",
        )
    }

    pub fn conj(self) -> Self {
        GaussInt::new(self.re, -self.im)
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn is_unit(self) -> bool {
        self.norm() == 1
    }

    pub fn is_real(self) -> bool {
        self.im == 0
    }

    pub fn is_imaginary(self) -> bool {
        self.re == 0
    }

    /// Inverse of a unit; `None` for non-units.
    pub fn unit_inverse(self) -> Option<Self> {
        self.is_unit().then(|| self.conj())
    }

    /// The associate `u·self` with `re > 0, im ≥ 0`. Zero maps to zero.
    pub fn first_quadrant(self) -> Self {
        if self.is_zero() {
            return self;
        }
        for u in Self::UNITS {
            let c = self * u;
            if c.re > 0 && c.im >= 0 {
                return c;
            }
        }
        unreachable!("every nonzero Gaussian integer has a first-quadrant associate")
    }

    /// Euclidean quotient with each coordinate rounded to the nearest
    /// integer, ties toward −∞.
    pub fn div_round(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero Gaussian integer");
        let num = self * rhs.conj();
        let m = rhs.norm();
        GaussInt::new(round_half_down(num.re, m), round_half_down(num.im, m))
    }

    pub fn as_complex(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re as f64, self.im as f64)
    }
}

/// `n / m` rounded to nearest, ties toward −∞, for `m > 0`.
fn round_half_down(n: i64, m: i64) -> i64 {
    let two_m = ck(m.checked_mul(2), "div_round");
    let top = ck(m.checked_sub(ck(n.checked_mul(2), "div_round")), "div_round");
    -top.div_euclid(two_m)
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re, self.im) {
            (r, 0) => write!(f, "{r}"),
            (0, i) => write!(f, "{i}i"),
            (r, i) if i < 0 => write!(f, "{r}-{}i", -i),
            (r, i) => write!(f, "{r}+{i}i"),
        }
    }
}

impl From<i64> for GaussInt {
    fn from(re: i64) -> Self {
        GaussInt::new(re, 0)
    }
}

impl Add for GaussInt {
    type Output = GaussInt;
    fn add(self, rhs: Self) -> Self {
        GaussInt::new(
            ck(self.re.checked_add(rhs.re), "add"),
            ck(self.im.checked_add(rhs.im), "add"),
        )
    }
}

impl Sub for GaussInt {
    type Output = GaussInt;
    fn sub(self, rhs: Self) -> Self {
        GaussInt::new(
            ck(self.re.checked_sub(rhs.re), "sub"),
            ck(self.im.checked_sub(rhs.im), "sub"),
        )
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> Self {
        GaussInt::new(ck(self.re.checked_neg(), "neg"), ck(self.im.checked_neg(), "neg"))
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, rhs: Self) -> Self {
        let rr = ck(self.re.checked_mul(rhs.re), "mul");
        let ii = ck(self.im.checked_mul(rhs.im), "mul");
        let ri = ck(self.re.checked_mul(rhs.im), "mul");
        let ir = ck(self.im.checked_mul(rhs.re), "mul");
        GaussInt::new(ck(rr.checked_sub(ii), "mul"), ck(ri.checked_add(ir), "mul"))
    }
}

/// Greatest common divisor by the Euclidean algorithm, normalized to the
/// first-quadrant associate.
pub fn ggcd(a: GaussInt, b: GaussInt) -> Result<GaussInt> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::Domain("gcd of (0, 0) is undefined".into()));
    }
    let (mut a, mut b) = (a, b);
    while !b.is_zero() {
        let r = a - a.div_round(b) * b;
        a = b;
        b = r;
    }
    Ok(a.first_quadrant())
}

/// Extended Euclid: returns `(g, x, y)` with `x·a + y·b = g`, `g` not
/// normalized.
fn egcd(a: GaussInt, b: GaussInt) -> (GaussInt, GaussInt, GaussInt) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (GaussInt::ONE, GaussInt::ZERO);
    let (mut old_t, mut t) = (GaussInt::ZERO, GaussInt::ONE);
    while !r.is_zero() {
        let q = old_r.div_round(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    (old_r, old_s, old_t)
}

/// A determinant-one matrix over `Z[i]`, stored as the lexicographically
/// larger of `M` and `-M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GMatrix {
    a: GaussInt,
    b: GaussInt,
    c: GaussInt,
    d: GaussInt,
}

impl GMatrix {
    pub const IDENTITY: GMatrix = GMatrix {
        a: GaussInt::ONE,
        b: GaussInt::ZERO,
        c: GaussInt::ZERO,
        d: GaussInt::ONE,
    };

    /// Builds `(a b; c d)`, rejecting determinants other than one.
    pub fn new(a: GaussInt, b: GaussInt, c: GaussInt, d: GaussInt) -> Result<Self> {
        let det = a * d - b * c;
        if det != GaussInt::ONE {
            return Err(Error::Domain(format!("determinant {det} != 1")));
        }
        Ok(Self::canonical(a, b, c, d))
    }

    /// Shorthand for tests and fixtures; entries given as `(re, im)` pairs.
    pub fn from_parts(e: [(i64, i64); 4]) -> Result<Self> {
        let g = |i: usize| GaussInt::new(e[i].0, e[i].1);
        Self::new(g(0), g(1), g(2), g(3))
    }

    fn canonical(a: GaussInt, b: GaussInt, c: GaussInt, d: GaussInt) -> Self {
        let m = GMatrix { a, b, c, d };
        let n = GMatrix { a: -a, b: -b, c: -c, d: -d };
        if n.sort_key() > m.sort_key() {
            n
        } else {
            m
        }
    }

    fn sort_key(&self) -> [i64; 8] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im,
        ]
    }

    pub fn a(&self) -> GaussInt {
        self.a
    }
    pub fn b(&self) -> GaussInt {
        self.b
    }
    pub fn c(&self) -> GaussInt {
        self.c
    }
    pub fn d(&self) -> GaussInt {
        self.d
    }

    pub fn entries(&self) -> [GaussInt; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `(1 β; 0 1)`.
    pub fn translation(beta: GaussInt) -> Self {
        Self::canonical(GaussInt::ONE, beta, GaussInt::ZERO, GaussInt::ONE)
    }

    /// `ι = (i 0; 0 -i)`, the rotation by π about the vertical axis.
    pub fn iota() -> Self {
        Self::canonical(GaussInt::I, GaussInt::ZERO, GaussInt::ZERO, -GaussInt::I)
    }

    /// `(0 -1; 1 0)`.
    pub fn inversion() -> Self {
        Self::canonical(GaussInt::ZERO, -GaussInt::ONE, GaussInt::ONE, GaussInt::ZERO)
    }

    pub fn inverse(&self) -> Self {
        Self::canonical(self.d, -self.b, -self.c, self.a)
    }

    pub fn det(&self) -> GaussInt {
        self.a * self.d - self.b * self.c
    }

    /// Largest entry norm.
    pub fn max_norm(&self) -> i64 {
        self.entries().iter().map(|e| e.norm()).max().unwrap_or(0)
    }

    /// Whether `self` is a real matrix or `i` times a real matrix.
    pub fn is_in_h(&self) -> bool {
        let e = self.entries();
        e.iter().all(|x| x.is_real()) || e.iter().all(|x| x.is_imaginary())
    }

    /// For elements of `H`: whether this element reverses the sign of `v`.
    /// Purely imaginary representatives flip the side of the plane.
    pub fn flips_plane_side(&self) -> bool {
        let e = self.entries();
        !e.iter().all(|x| x.is_real()) && e.iter().all(|x| x.is_imaginary())
    }
}

impl Mul for GMatrix {
    type Output = GMatrix;
    fn mul(self, r: GMatrix) -> GMatrix {
        GMatrix::canonical(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl fmt::Display for GMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

/// Unimodular completion of a coprime bottom row via the Bézout
/// certificate of the extended Euclidean algorithm.
pub fn complete_row(c: GaussInt, d: GaussInt) -> Result<GMatrix> {
    if c.is_zero() && d.is_zero() {
        return Err(Error::RowNotUnimodular(c, d));
    }
    let (g, x, y) = egcd(c, d);
    let Some(ginv) = g.unit_inverse() else {
        return Err(Error::RowNotUnimodular(c, d));
    };
    // x·c + y·d = 1 after scaling; a = y, b = -x gives a·d - b·c = 1.
    let (x, y) = (x * ginv, y * ginv);
    GMatrix::new(y, -x, c, d)
}

pub fn is_in_h(g: &GMatrix) -> bool {
    g.is_in_h()
}

/// Whether `g1` and `g2` lie in the same left coset `H·g`.
pub fn same_coset(g1: &GMatrix, g2: &GMatrix) -> bool {
    (*g1 * g2.inverse()).is_in_h()
}
