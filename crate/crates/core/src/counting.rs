//! The coset count `N(p, X) = #{γ ∈ H\Γ : sec v(γp) ≤ X}` for the Picard
//! group, its main term, smoothed automorphic sums and full-group ball
//! counts.
//!
//! Enumeration runs over coprime bottom rows `(c, d)` modulo units with
//! `‖cp + d‖² ≤ B`. Every coset with `sec v ≤ X` has a representative whose
//! orbit point reduces into `S`, where `e^u ≥ √3/2`, hence
//! `y(γp) ≥ √3/(2X)` and `‖cp + d‖² ≤ 2Xy/√3`. Real translations lie in
//! `H`; imaginary translations `x2 ↦ x2 + n` are looped explicitly.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{complete_row, ggcd, same_coset, GMatrix, GaussInt};
use crate::geometry::{moebius_act, pp_invariant, row_norm, within_secant_cutoff, Point};
use crate::reduction::{reduce_coset, CosetKey, QuantKey};
use crate::transforms::{cutoff_u, Profile};

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219_015;

/// Multiplier on the enumeration bound `B = 2Xy/√3`.
pub const BOUND_SAFETY: f64 = 1.05;

/// Default cap on enumerated candidates.
pub const DEFAULT_CANDIDATE_BUDGET: u64 = 2_000_000_000;

/// Guard band (in key cells) for neighbour probing during dedup.
const PROBE_GUARD: f64 = 1e-3;

/// Largest key discrepancy tolerated between two representatives of one
/// coset before the reduction is declared unsound.
const KEY_CONSISTENCY: f64 = 1e-6;

/// Number of `c` values handed to the worker pool per merge round.
const C_BATCH: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupConfig {
    /// `vol(Γ\H³)`.
    pub covolume: f64,
    /// `vol(H\P)`.
    pub area_hp: f64,
    /// Exceptional terms `(s_j, coeff_j)` with `s_j ∈ (1, 2)`.
    pub exceptional: Vec<(f64, f64)>,
}

impl GroupConfig {
    /// `PSL2(Z[i])`: covolume `G/3`, plane area `π/6`, no exceptional terms.
    pub fn picard() -> Self {
        GroupConfig {
            covolume: CATALAN / 3.0,
            area_hp: std::f64::consts::PI / 6.0,
            exceptional: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.covolume > 0.0 && self.area_hp > 0.0) {
            return Err(Error::Domain("covolume and plane area must be positive".into()));
        }
        if let Some((s, _)) = self.exceptional.iter().find(|(s, _)| !(*s > 1.0 && *s < 2.0)) {
            return Err(Error::Domain(format!("exceptional exponent {s} outside (1, 2)")));
        }
        Ok(())
    }

    /// `area_hp / covolume`, the coefficient of `X²`.
    pub fn leading_constant(&self) -> f64 {
        self.area_hp / self.covolume
    }

    /// `M(X) = (area/covolume)·X² + Σ coeff·2^{s-1}/s·X^s`.
    pub fn main_term(&self, x: f64) -> f64 {
        let extra: f64 = self
            .exceptional
            .iter()
            .map(|&(s, coeff)| coeff * 2f64.powf(s - 1.0) / s * x.powf(s))
            .sum();
        self.leading_constant() * x * x + extra
    }
}

impl Default for GroupConfig {
    fn default() -> Self {
        Self::picard()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountOptions {
    pub candidate_budget: u64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            candidate_budget: DEFAULT_CANDIDATE_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountResult {
    pub x: f64,
    pub n: u64,
    pub main: f64,
    pub err: f64,
    pub candidates_scanned: u64,
    pub cosets_kept: u64,
    pub bound_b: f64,
}

/// All cosets with `sec v ≤ x_max` at a base point, as a sorted list of
/// secants, so that `N(p, X)` for any `X ≤ x_max` is a binary search.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetScan {
    pub point: Point,
    pub x_max: f64,
    pub secants: Vec<f64>,
    pub candidates: u64,
    pub bound_b: f64,
}

impl CosetScan {
    pub fn count(&self, x: f64) -> u64 {
        self.secants.partition_point(|&s| within_secant_cutoff(s, x)) as u64
    }

    pub fn result(&self, x: f64, cfg: &GroupConfig) -> Result<CountResult> {
        if x > self.x_max {
            return Err(Error::Domain(format!("X = {x} beyond scanned range {}", self.x_max)));
        }
        let n = self.count(x);
        let main = cfg.main_term(x);
        Ok(CountResult {
            x,
            n,
            main,
            err: n as f64 - main,
            candidates_scanned: self.candidates,
            cosets_kept: n,
            bound_b: enumeration_bound(&self.point, x),
        })
    }
}

/// `B = 2Xy/√3`.
pub fn enumeration_bound(p: &Point, x: f64) -> f64 {
    2.0 * x * p.y / 3f64.sqrt()
}

struct Candidate {
    key: CosetKey,
    rep: GMatrix,
    sec: f64,
}

/// Nonzero `c` modulo units (`re > 0, im ≥ 0`) with `|c|² ≤ limit`, sorted.
fn c_values(limit: f64) -> Vec<GaussInt> {
    let r = limit.max(0.0).sqrt().floor() as i64;
    let mut out = Vec::new();
    for re in 1..=r {
        for im in 0..=r {
            let c = GaussInt::new(re, im);
            if (c.norm() as f64) <= limit {
                out.push(c);
            }
        }
    }
    out.sort_by_key(|c| (c.norm(), c.re, c.im));
    out
}

/// Gaussian integers `d` with `|w + d|² ≤ radius²`, in lexicographic order.
fn disc_points(w: num_complex::Complex64, radius2: f64) -> Vec<GaussInt> {
    if radius2 < 0.0 {
        return Vec::new();
    }
    let r = radius2.sqrt();
    let mut out = Vec::new();
    let (lo, hi) = ((-w.re - r).ceil() as i64, (-w.re + r).floor() as i64);
    for re in lo..=hi {
        let dx = re as f64 + w.re;
        let rem = radius2 - dx * dx;
        if rem < 0.0 {
            continue;
        }
        let s = rem.sqrt();
        for im in ((-w.im - s).ceil() as i64)..=((-w.im + s).floor() as i64) {
            out.push(GaussInt::new(re, im));
        }
    }
    out
}

fn is_coprime(c: GaussInt, d: GaussInt) -> bool {
    ggcd(c, d).map(|g| g.is_unit()).unwrap_or(false)
}

/// Candidates from one bottom row class `c` (all admissible `d`, all `n2`).
fn row_candidates(c: GaussInt, p: &Point, x: f64, bmax: f64) -> Result<(Vec<Candidate>, u64)> {
    let z = p.z();
    let cz = c.as_complex() * z;
    let radius2 = bmax - (c.norm() as f64) * p.y * p.y;
    let ds = if c.is_zero() {
        vec![GaussInt::ONE]
    } else {
        disc_points(cz, radius2)
    };
    let u = cutoff_u(x) * (1.0 + 1e-9) + 1e-12;
    let mut out = Vec::new();
    let mut scanned = 0u64;
    for d in ds {
        if !c.is_zero() && !is_coprime(c, d) {
            continue;
        }
        if row_norm(c.as_complex(), d.as_complex(), p) > bmax {
            continue;
        }
        let g0 = complete_row(c, d)?;
        let q = moebius_act(&g0, p);
        let span = q.y * u;
        for n2 in ((-q.x2 - span).ceil() as i64)..=((-q.x2 + span).floor() as i64) {
            scanned += 1;
            let shifted = Point { x2: q.x2 + n2 as f64, ..q };
            if !within_secant_cutoff(shifted.sec_v(), x) {
                continue;
            }
            let g = GMatrix::translation(GaussInt::new(0, n2)) * g0;
            let r = reduce_coset(&g, p)?;
            out.push(Candidate {
                key: r.key,
                rep: r.representative,
                sec: r.point.sec_v(),
            });
        }
    }
    Ok((out, scanned))
}

struct Kept {
    key: CosetKey,
    rep: GMatrix,
    sec: f64,
}

#[derive(Default)]
struct CosetSet {
    kept: Vec<Kept>,
    cells: HashMap<QuantKey, Vec<usize>>,
}

impl CosetSet {
    /// Inserts unless an already kept coset equals it; the key only
    /// narrows the search, equality is decided by `same_coset`.
    fn insert(&mut self, cand: Candidate) -> Result<()> {
        for cell in cand.key.probe_cells(PROBE_GUARD) {
            let Some(idxs) = self.cells.get(&cell) else {
                continue;
            };
            for &i in idxs {
                let k = &self.kept[i];
                if same_coset(&k.rep, &cand.rep) {
                    let gap = (k.key.x_r - cand.key.x_r)
                        .abs()
                        .max((k.key.u_r - cand.key.u_r).abs())
                        .max((k.key.v_abs - cand.key.v_abs).abs());
                    if gap > KEY_CONSISTENCY {
                        return Err(Error::DedupUnsound(format!(
                            "representatives {} and {} of one coset have keys {gap:e} apart",
                            k.rep, cand.rep
                        )));
                    }
                    return Ok(());
                }
            }
        }
        self.cells.entry(cand.key.quantized()).or_default().push(self.kept.len());
        self.kept.push(Kept {
            key: cand.key,
            rep: cand.rep,
            sec: cand.sec,
        });
        Ok(())
    }
}

/// Enumerates every coset `Hγ` with `sec v(γp) ≤ x_max`.
///
/// Rows are processed in parallel in fixed batches and merged in a fixed
/// order, so the result does not depend on the number of threads.
pub fn coset_scan(p: &Point, x_max: f64, opts: &CountOptions) -> Result<CosetScan> {
    if !(x_max >= 1.0) {
        return Err(Error::Domain(format!("X = {x_max} must be at least 1")));
    }
    let p = Point::new(p.x1, p.x2, p.y)?;
    let b = enumeration_bound(&p, x_max);
    let bmax = BOUND_SAFETY * b;
    let mut cs = vec![GaussInt::ZERO];
    cs.extend(c_values(bmax / (p.y * p.y)));

    let mut set = CosetSet::default();
    let mut scanned = 0u64;
    for batch in cs.chunks(C_BATCH) {
        let parts: Vec<Result<(Vec<Candidate>, u64)>> =
            batch.par_iter().map(|&c| row_candidates(c, &p, x_max, bmax)).collect();
        for part in parts {
            let (cands, n) = part?;
            scanned += n;
            if scanned > opts.candidate_budget {
                return Err(Error::CandidateBudget {
                    budget: opts.candidate_budget,
                    bound: b,
                });
            }
            for cand in cands {
                set.insert(cand)?;
            }
        }
    }

    // The bound relies on reduced orbit points having e^u ≥ √3/2.
    for k in &set.kept {
        let norm = row_norm(k.rep.c().as_complex(), k.rep.d().as_complex(), &p);
        if norm > bmax * (1.0 + 1e-9) {
            return Err(Error::AuditFailed(format!(
                "reduced representative {} has ‖cp+d‖² = {norm} > {bmax}",
                k.rep
            )));
        }
    }

    let mut secants: Vec<f64> = set.kept.iter().map(|k| k.sec).collect();
    secants.sort_by(f64::total_cmp);
    Ok(CosetScan {
        point: p,
        x_max,
        secants,
        candidates: scanned,
        bound_b: b,
    })
}

/// `N(p, X)` with main term and error.
pub fn count_sector(p: &Point, x: f64, cfg: &GroupConfig) -> Result<CountResult> {
    count_sector_with(p, x, cfg, &CountOptions::default())
}

pub fn count_sector_with(p: &Point, x: f64, cfg: &GroupConfig, opts: &CountOptions) -> Result<CountResult> {
    cfg.validate()?;
    coset_scan(p, x, opts)?.result(x, cfg)
}

/// Counts at several cutoffs from a single enumeration at the largest.
pub fn count_sector_many(p: &Point, xs: &[f64], cfg: &GroupConfig, opts: &CountOptions) -> Result<Vec<CountResult>> {
    cfg.validate()?;
    let Some(x_max) = xs.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let scan = coset_scan(p, x_max, opts)?;
    xs.iter().map(|&x| scan.result(x, cfg)).collect()
}

/// `A(f)(p) = Σ_{γ ∈ H\Γ} f(sec² v(γp))`.
pub fn automorphic_sum(p: &Point, f: &dyn Profile) -> Result<f64> {
    automorphic_sum_with(p, f, &CountOptions::default())
}

pub fn automorphic_sum_with(p: &Point, f: &dyn Profile, opts: &CountOptions) -> Result<f64> {
    let scan = coset_scan(p, f.secant_support().max(1.0), opts)?;
    Ok(automorphic_sum_from_scan(&scan, f))
}

/// `A(f)` over an existing scan; `f` must vanish beyond `scan.x_max`.
pub fn automorphic_sum_from_scan(scan: &CosetScan, f: &dyn Profile) -> f64 {
    scan.secants.iter().map(|&s| f.at_secant(s)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleCount {
    pub depth: i64,
    pub count: u64,
    /// The same count at `depth - 1`.
    pub previous: u64,
}

impl OracleCount {
    pub fn stable(&self) -> bool {
        self.count == self.previous
    }
}

/// Gaussian integers of norm at most `depth`.
fn small_gaussians(depth: i64) -> Vec<GaussInt> {
    let r = (depth.max(0) as f64).sqrt().floor() as i64;
    let mut out = Vec::new();
    for re in -r..=r {
        for im in -r..=r {
            let g = GaussInt::new(re, im);
            if g.norm() <= depth {
                out.push(g);
            }
        }
    }
    out
}

/// All determinant-one matrices (mod `±I`) with entry norms at most `depth`.
pub fn small_matrices(depth: i64) -> Vec<GMatrix> {
    let gs = small_gaussians(depth);
    let mut set = HashSet::new();
    for &a in &gs {
        for &d in &gs {
            let ad = a * d;
            for &b in &gs {
                for &c in &gs {
                    if ad - b * c == GaussInt::ONE {
                        set.insert(GMatrix::new(a, b, c, d).expect("determinant checked"));
                    }
                }
            }
        }
    }
    let mut out: Vec<GMatrix> = set.into_iter().collect();
    out.sort_by_key(|g| g.entries().map(|e| (e.re, e.im)));
    out
}

fn oracle_at(p: &Point, x: f64, depth: i64) -> u64 {
    let mut reps: Vec<GMatrix> = Vec::new();
    for g in small_matrices(depth) {
        if !moebius_act(&g, p).within_cutoff(x) {
            continue;
        }
        if !reps.iter().any(|r| same_coset(r, &g)) {
            reps.push(g);
        }
    }
    reps.len() as u64
}

/// Brute-force coset count: every small matrix, pairwise `same_coset`.
pub fn oracle_count(p: &Point, x: f64, depth: i64) -> Result<OracleCount> {
    if depth < 1 {
        return Err(Error::Domain(format!("oracle depth {depth} must be at least 1")));
    }
    let p = Point::new(p.x1, p.x2, p.y)?;
    Ok(OracleCount {
        depth,
        count: oracle_at(&p, x, depth),
        previous: oracle_at(&p, x, depth - 1),
    })
}

/// `#{γ ∈ Γ : δ(p, γq) ≤ x}` over the full group, each `γ` taken mod `±I`.
pub fn ball_count(p: &Point, q: &Point, x: f64) -> Result<u64> {
    ball_count_with(p, q, x, &CountOptions::default())
}

pub fn ball_count_with(p: &Point, q: &Point, x: f64, opts: &CountOptions) -> Result<u64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!("x = {x} must be at least 1")));
    }
    let (p, q) = (Point::new(p.x1, p.x2, p.y)?, Point::new(q.x1, q.x2, q.y)?);
    let xs = x * (1.0 + 1e-12);
    // δ ≥ y_p / (2 y(γq)) bounds the height of γq from below.
    let bmax = 2.0 * xs * q.y / p.y;
    let mut cs = vec![GaussInt::ZERO];
    for c in c_values(bmax / (q.y * q.y)) {
        cs.push(c);
        cs.push(c * GaussInt::I);
    }
    let rows = |c: GaussInt| -> Result<Vec<GMatrix>> {
        let ds = if c.is_zero() {
            vec![GaussInt::ONE, GaussInt::I]
        } else {
            disc_points(c.as_complex() * q.z(), bmax - (c.norm() as f64) * q.y * q.y)
        };
        let mut out = Vec::new();
        for d in ds {
            if !c.is_zero() && !is_coprime(c, d) {
                continue;
            }
            let g0 = complete_row(c, d)?;
            let q0 = moebius_act(&g0, &q);
            // |z_p - z_q0 - β|² ≤ 2 x y_p y0 - y_p² - y0².
            let r2 = 2.0 * xs * p.y * q0.y - p.y * p.y - q0.y * q0.y;
            for beta in disc_points(q0.z() - p.z(), r2) {
                let g = GMatrix::translation(beta) * g0;
                if pp_invariant(&p, &moebius_act(&g, &q)) <= xs {
                    out.push(g);
                }
            }
        }
        Ok(out)
    };
    let mut seen = HashSet::new();
    for batch in cs.chunks(C_BATCH) {
        let parts: Vec<Result<Vec<GMatrix>>> = batch.par_iter().map(|&c| rows(c)).collect();
        for part in parts {
            seen.extend(part?);
            if seen.len() as u64 > opts.candidate_budget {
                return Err(Error::CandidateBudget {
                    budget: opts.candidate_budget,
                    bound: bmax,
                });
            }
        }
    }
    Ok(seen.len() as u64)
}
