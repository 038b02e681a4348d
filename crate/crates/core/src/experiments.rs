//! Averaged error terms: radial means over cutoffs `X_k ∈ [X, 2X]` at a
//! fixed base point, spatial means over well-separated base points at a
//! fixed cutoff, and log-log exponent fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::counting::{coset_scan, count_sector_with, small_matrices, CountOptions, GroupConfig};
use crate::error::{Error, Result};
use crate::gaussian::GMatrix;
use crate::geometry::{moebius_act, pp_invariant, Point};

/// Default seed for spatial sampling.
pub const DEFAULT_SEED: u64 = 0x5ec7_0c0u64;

/// Lower bound imposed on `R·eps³` for spatial experiments.
pub const SPATIAL_DENSITY_FLOOR: f64 = 1e-3;

/// Rejections allowed while packing spatial samples.
pub const MAX_REJECTIONS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Radial,
    Spatial,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Radial => "radial",
            ExperimentKind::Spatial => "spatial",
        }
    }
}

/// One sample of an averaged experiment. For radial records
/// `sample_value` is `X_k`; for spatial records it is `y(p_k)` and the full
/// point is kept in `point`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub x: f64,
    pub sample_id: usize,
    pub sample_value: f64,
    pub point: Point,
    pub err: f64,
    pub err_sq: f64,
}

impl ExperimentRecord {
    fn new(kind: ExperimentKind, x: f64, sample_id: usize, sample_value: f64, point: Point, err: f64) -> Self {
        ExperimentRecord {
            kind,
            x,
            sample_id,
            sample_value,
            point,
            err,
            err_sq: err * err,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacingSpec {
    pub r: usize,
    pub eps: f64,
    pub kind: ExperimentKind,
    /// Skip the growth conditions on `R` and `R·eps` (degenerate runs such
    /// as `R = 1`); separation is still enforced.
    pub relaxed: bool,
}

impl SpacingSpec {
    pub fn radial(r: usize, eps: f64) -> Self {
        SpacingSpec {
            r,
            eps,
            kind: ExperimentKind::Radial,
            relaxed: false,
        }
    }

    pub fn spatial(r: usize, eps: f64) -> Self {
        SpacingSpec {
            r,
            eps,
            kind: ExperimentKind::Spatial,
            relaxed: false,
        }
    }

    pub fn relaxed(self) -> Self {
        SpacingSpec { relaxed: true, ..self }
    }

    /// Smallest radial spec meeting the constraints: `R = ⌈X^{2/3}⌉ + 1`,
    /// `eps = X/(2R)`.
    pub fn default_radial(x: f64) -> Self {
        let r = x.powf(2.0 / 3.0).ceil() as usize + 1;
        Self::radial(r, x / (2.0 * r as f64))
    }

    /// `R = ⌊X⌋ + 1` with `eps = 0.05`, raised if needed so `R·eps³` clears
    /// the density floor.
    pub fn default_spatial(x: f64) -> Self {
        let r = x.floor() as usize + 1;
        let eps = 0.05f64.max((SPATIAL_DENSITY_FLOOR / r as f64).cbrt());
        Self::spatial(r, eps)
    }

    /// Checks the hypotheses for cutoff `x`, naming the violated inequality.
    pub fn validate(&self, x: f64) -> Result<()> {
        let fail = |msg: String| Err(Error::Spacing(msg));
        if self.r == 0 {
            return fail("R >= 1".into());
        }
        if !(self.eps > 0.0) {
            return fail(format!("eps > 0 (eps = {})", self.eps));
        }
        if !(x >= 2.0) {
            return fail(format!("X >= 2 (X = {x})"));
        }
        let r = self.r as f64;
        match self.kind {
            ExperimentKind::Radial => {
                if self.r > 1 && !(x / r > self.eps) {
                    return fail(format!("gap X/R > eps ({} <= {})", x / r, self.eps));
                }
                if self.relaxed {
                    return Ok(());
                }
                if !(r * self.eps >= x / 4.0 && r * self.eps <= 4.0 * x) {
                    return fail(format!("X/4 <= R*eps <= 4X (R*eps = {}, X = {x})", r * self.eps));
                }
                if !(r > x.powf(2.0 / 3.0)) {
                    return fail(format!("R > X^(2/3) ({} <= {})", self.r, x.powf(2.0 / 3.0)));
                }
            }
            ExperimentKind::Spatial => {
                if self.relaxed {
                    return Ok(());
                }
                if !(r > x) {
                    return fail(format!("R > X ({} <= {x})", self.r));
                }
                if !(r * self.eps.powi(3) >= SPATIAL_DENSITY_FLOOR) {
                    return fail(format!(
                        "R*eps^3 >= {SPATIAL_DENSITY_FLOOR} (R*eps^3 = {})",
                        r * self.eps.powi(3)
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Mean of `err_sq` in `sample_id` order.
pub fn mean_square(records: &[ExperimentRecord]) -> f64 {
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sample_id);
    sorted.iter().map(|r| r.err_sq).sum::<f64>() / records.len() as f64
}

/// Radial cutoffs `X_k = X + (k - 1/2)·X/R`, `k = 1..R`.
pub fn radial_cutoffs(x: f64, r: usize) -> Vec<f64> {
    (1..=r).map(|k| x + (k as f64 - 0.5) * x / r as f64).collect()
}

/// `(1/R) Σ_k |e(p, X_k)|²` over equally spaced `X_k ∈ [X, 2X]`.
pub fn radial_mean_square(p: &Point, x: f64, spec: &SpacingSpec, cfg: &GroupConfig) -> Result<(f64, Vec<ExperimentRecord>)> {
    radial_mean_square_with(p, x, spec, cfg, &CountOptions::default())
}

pub fn radial_mean_square_with(
    p: &Point,
    x: f64,
    spec: &SpacingSpec,
    cfg: &GroupConfig,
    opts: &CountOptions,
) -> Result<(f64, Vec<ExperimentRecord>)> {
    if spec.kind != ExperimentKind::Radial {
        return Err(Error::Spacing("radial experiment needs a radial spacing spec".into()));
    }
    spec.validate(x)?;
    cfg.validate()?;
    let xs = radial_cutoffs(x, spec.r);
    let scan = coset_scan(p, xs[xs.len() - 1], opts)?;
    let records: Vec<ExperimentRecord> = xs
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let c = scan.result(xk, cfg)?;
            Ok(ExperimentRecord::new(ExperimentKind::Radial, x, k, xk, scan.point, c.err))
        })
        .collect::<Result<_>>()?;
    Ok((mean_square(&records), records))
}

/// Axis-aligned sampling box in upper half-space coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub y: (f64, f64),
}

impl Default for Region {
    fn default() -> Self {
        Region {
            x1: (0.0, 0.5),
            x2: (0.0, 0.5),
            y: (0.9, 1.4),
        }
    }
}

impl Region {
    fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !(ok(self.x1) && ok(self.x2) && ok(self.y) && self.y.0 > 0.0) {
            return Err(Error::Domain(format!("invalid sampling region {self:?}")));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let draw = |rng: &mut ChaCha8Rng, (a, b): (f64, f64)| if a == b { a } else { rng.gen_range(a..b) };
        let x1 = draw(rng, self.x1);
        let x2 = draw(rng, self.x2);
        Point { x1, x2, y: draw(rng, self.y) }
    }
}

/// `d̃(p, q) = min_γ d(p, γq)` over a fixed finite set of group elements.
#[derive(Clone, Debug)]
pub struct InducedDistance {
    elements: Vec<GMatrix>,
}

impl InducedDistance {
    /// Uses every element with entry norms at most `search_norm`.
    pub fn new(search_norm: i64) -> Result<Self> {
        if search_norm < 2 {
            return Err(Error::Domain(format!("search norm {search_norm} must be at least 2")));
        }
        Ok(InducedDistance {
            elements: small_matrices(search_norm),
        })
    }

    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        let best = self
            .elements
            .iter()
            .map(|g| pp_invariant(p, &moebius_act(g, q)))
            .fold(f64::INFINITY, f64::min);
        best.max(1.0).acosh()
    }
}

pub fn induced_distance(p: &Point, q: &Point, search_norm: i64) -> Result<f64> {
    Ok(InducedDistance::new(search_norm)?.distance(p, q))
}

/// Draws `r` points from `region` with pairwise induced distance `> eps`.
pub fn sample_separated(region: &Region, r: usize, eps: f64, seed: u64, metric: &InducedDistance) -> Result<Vec<Point>> {
    region.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Point> = Vec::with_capacity(r);
    let mut rejections = 0;
    while points.len() < r {
        let cand = region.sample(&mut rng);
        if points.iter().all(|q| metric.distance(&cand, q) > eps) {
            points.push(cand);
        } else {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::PackingInfeasible {
                    placed: points.len(),
                    wanted: r,
                    attempts: rejections,
                });
            }
        }
    }
    Ok(points)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialOptions {
    pub seed: u64,
    pub region: Region,
    pub search_norm: i64,
    pub count: CountOptions,
}

impl Default for SpatialOptions {
    fn default() -> Self {
        SpatialOptions {
            seed: DEFAULT_SEED,
            region: Region::default(),
            search_norm: 2,
            count: CountOptions::default(),
        }
    }
}

/// `(1/R) Σ_k |e(X, p_k)|²` over separated base points `p_k`.
pub fn spatial_mean_square(x: f64, spec: &SpacingSpec, cfg: &GroupConfig, opts: &SpatialOptions) -> Result<(f64, Vec<ExperimentRecord>)> {
    if spec.kind != ExperimentKind::Spatial {
        return Err(Error::Spacing("spatial experiment needs a spatial spacing spec".into()));
    }
    spec.validate(x)?;
    cfg.validate()?;
    let metric = InducedDistance::new(opts.search_norm)?;
    let points = sample_separated(&opts.region, spec.r, spec.eps, opts.seed, &metric)?;
    let records: Vec<ExperimentRecord> = points
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let c = count_sector_with(p, x, cfg, &opts.count)?;
            Ok(ExperimentRecord::new(ExperimentKind::Spatial, x, k, p.y, *p, c.err))
        })
        .collect::<Result<_>>()?;
    Ok((mean_square(&records), records))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub used: usize,
    /// Points dropped for non-positive values.
    pub dropped: usize,
}

/// Least-squares slope of `log value` against `log X`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, v)| *x > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(x, v)| (x.ln(), v.ln()))
        .collect();
    let dropped = points.len() - usable.len();
    let mut distinct: Vec<f64> = usable.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct X values with positive data ({dropped} dropped), need 3",
            distinct.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if usable.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
        used: usable.len(),
        dropped,
    })
}
