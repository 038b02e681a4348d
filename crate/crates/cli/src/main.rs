//! `sector-count`: orbit counting experiments for PSL2(Z[i]) from the shell.
//!
//! All tables are CSV with a leading `# sector-count v1` line; comment lines
//! start with `#`. Floats carry 17 significant digits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sector_count::counting::{ball_count_with, count_sector_many, CountOptions, CountResult, GroupConfig};
use sector_count::experiments::{
    fit_exponent, radial_mean_square_with, spatial_mean_square, ExperimentRecord, Region, SpacingSpec, SpatialOptions,
    DEFAULT_SEED,
};
use sector_count::verify::{self, Check};
use sector_count::Point;
use serde_json::json;

const SCHEMA: &str = "# sector-count v1";
const SEED_ENV: &str = "SECTOR_COUNT_SEED";

#[derive(Parser, Debug)]
#[command(name = "sector-count", version, about = "Count PSL2(Z[i]) orbit points by distance to a plane in H³")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// key=value file supplying defaults for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count orbit points within secant X of the plane at one X.
    Count(CountArgs),
    /// Count over an X grid and fit exponents for N and |e|.
    Sweep(SweepArgs),
    /// Mean-square error over R cutoffs in [X, 2X].
    Radial(RadialArgs),
    /// Mean-square error over R separated base points.
    Spatial(SpatialArgs),
    /// Count orbit points of q in the hyperbolic ball of radius acosh(x) around p.
    Ball(BallArgs),
    /// Run an invariant suite; exit status 0 iff every check passes.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct CountArgs {
    /// Base point as x1,x2,y.
    #[arg(long)]
    p: Option<String>,
    /// Secant cutoff X >= 1.
    #[arg(long = "X")]
    x: Option<f64>,
    /// Abort when the candidate bound exceeds this.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Spacing {
    Geometric,
    Linear,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    p: Option<String>,
    /// Explicit comma-separated X values; overrides the grid flags.
    #[arg(long)]
    xs: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    /// Geometric ratio between successive X.
    #[arg(long)]
    ratio: Option<f64>,
    /// Linear step between successive X.
    #[arg(long)]
    step: Option<f64>,
    /// Number of grid points, spaced per --spacing.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct RadialArgs {
    #[arg(long)]
    p: Option<String>,
    /// Comma-separated X values.
    #[arg(long = "X")]
    x: Option<String>,
    /// Number of cutoffs per X (default ceil(X^(2/3))+1).
    #[arg(long)]
    r: Option<usize>,
    /// Minimum cutoff spacing (default X/(2R)).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct SpatialArgs {
    /// Comma-separated X values.
    #[arg(long = "X")]
    x: Option<String>,
    /// Number of sample points per X (default floor(X)+1).
    #[arg(long)]
    r: Option<usize>,
    /// Minimum induced distance between samples.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling box as x1lo,x1hi,x2lo,x2hi,ylo,yhi.
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args, Debug)]
struct BallArgs {
    #[arg(long)]
    p: Option<String>,
    /// Orbit point; defaults to p.
    #[arg(long)]
    q: Option<String>,
    /// Comma-separated cosh-radius values x >= 1.
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Suite {
    Geometry,
    Transforms,
    Selberg,
    Oracle,
    Sandwich,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Oracle depth (entry norm bound).
    #[arg(long)]
    depth: Option<i64>,
    /// Sandwich cutoff.
    #[arg(long = "X")]
    x: Option<f64>,
    /// Sandwich smoothing width (default X^(-1/2)).
    #[arg(long)]
    width: Option<f64>,
    /// Sample count for geometry and sandwich.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Emit JSON lines instead of text.
    #[arg(long)]
    json: bool,
}

/// Flat key=value settings; `#` starts a comment line.
#[derive(Debug, Default)]
struct ConfigFile(HashMap<String, String>);

impl ConfigFile {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(ConfigFile(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key}: {e}")))
            .transpose()
    }

    /// Flag value if given, else the config entry.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("missing required parameter --{name}"))
}

fn parse_list(s: &str, name: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("--{name}: bad number {t:?}")))
        .collect()
}

fn parse_point(s: &str, name: &str) -> Result<Point> {
    let v = parse_list(s, name)?;
    if v.len() != 3 {
        bail!("--{name} expects x1,x2,y");
    }
    if !(v[2] > 0.0) {
        bail!("--{name}: y must be positive, got {}", v[2]);
    }
    Point::new(v[0], v[1], v[2]).map_err(|e| anyhow!("--{name}: {e}"))
}

fn check_cutoff(x: f64, name: &str) -> Result<()> {
    if !(x.is_finite() && x >= 1.0) {
        bail!("--{name} must be a finite value >= 1, got {x}");
    }
    Ok(())
}

/// Precedence: flag, then config file, then `SECTOR_COUNT_SEED`, then the built-in default.
fn resolve_seed(flag: Option<u64>, cfg: &ConfigFile, default: u64) -> Result<u64> {
    if let Some(s) = cfg.pick(flag, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an integer")),
        Err(_) => Ok(default),
    }
}

fn count_options(budget: Option<u64>, cfg: &ConfigFile) -> Result<CountOptions> {
    let mut opts = CountOptions::default();
    if let Some(b) = cfg.pick(budget, "budget")? {
        opts.candidate_budget = b;
    }
    Ok(opts)
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn count_row(p: &Point, r: &CountResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        f(p.x1),
        f(p.x2),
        f(p.y),
        f(r.x),
        r.n,
        f(r.main),
        f(r.err),
        r.candidates_scanned,
        r.cosets_kept
    )
}

const COUNT_HEADER: &str = "x1,x2,y,X,N,M,err,candidates,cosets";
const RECORD_HEADER: &str = "kind,X,sample_id,sample_value,err,err_sq";

fn record_row(r: &ExperimentRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.kind.as_str(),
        f(r.x),
        r.sample_id,
        f(r.sample_value),
        f(r.err),
        f(r.err_sq)
    )
}

fn cmd_count(a: CountArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<i32> {
    let p = parse_point(&required(cfg.pick(a.p, "p")?, "p")?, "p")?;
    let x = required(cfg.pick(a.x, "X")?, "X")?;
    check_cutoff(x, "X")?;
    let opts = count_options(a.budget, cfg)?;
    let r = count_sector_many(&p, &[x], &GroupConfig::picard(), &opts)?.remove(0);
    writeln!(out, "{SCHEMA}\n{COUNT_HEADER}\n{}", count_row(&p, &r))?;
    Ok(0)
}

fn sweep_grid(a: &SweepArgs, cfg: &ConfigFile) -> Result<Vec<f64>> {
    if let Some(xs) = cfg.pick(a.xs.clone(), "xs")? {
        return parse_list(&xs, "xs");
    }
    let from = required(cfg.pick(a.from, "from")?, "from")?;
    let to = required(cfg.pick(a.to, "to")?, "to")?;
    if !(from.is_finite() && to.is_finite() && from <= to) {
        bail!("--from must not exceed --to");
    }
    let ratio = cfg.pick(a.ratio, "ratio")?;
    let step = cfg.pick(a.step, "step")?;
    let points = cfg.pick(a.points, "points")?;
    let mut xs = Vec::new();
    match (ratio, step, points) {
        (Some(q), None, None) => {
            if !(q > 1.0) {
                bail!("--ratio must exceed 1");
            }
            let mut x = from;
            while x <= to * (1.0 + 1e-12) {
                xs.push(x);
                x *= q;
            }
        }
        (None, Some(h), None) => {
            if !(h > 0.0) {
                bail!("--step must be positive");
            }
            let n = ((to - from) / h + 1e-9).floor() as usize;
            xs.extend((0..=n).map(|k| from + h * k as f64));
        }
        (None, None, Some(n)) => {
            if n < 2 {
                bail!("--points must be at least 2");
            }
            let spacing = match a.spacing {
                Some(s) => s,
                None => match cfg.get::<String>("spacing")?.as_deref() {
                    None | Some("geometric") => Spacing::Geometric,
                    Some("linear") => Spacing::Linear,
                    Some(other) => bail!("config key spacing: unknown value {other:?}"),
                },
            };
            let t = |k: usize| k as f64 / (n - 1) as f64;
            xs.extend((0..n).map(|k| match spacing {
                Spacing::Geometric => from * (to / from).powf(t(k)),
                Spacing::Linear => from + (to - from) * t(k),
            }));
        }
        _ => bail!("give exactly one of --ratio, --step or --points (or --xs)"),
    }
    Ok(xs)
}

fn cmd_sweep(a: SweepArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<i32> {
    let p = parse_point(&required(cfg.pick(a.p.clone(), "p")?, "p")?, "p")?;
    let xs = sweep_grid(&a, cfg)?;
    for &x in &xs {
        check_cutoff(x, "X")?;
    }
    let opts = count_options(a.budget, cfg)?;
    let rows = count_sector_many(&p, &xs, &GroupConfig::picard(), &opts)?;
    writeln!(out, "{SCHEMA}\n{COUNT_HEADER}")?;
    for r in &rows {
        writeln!(out, "{}", count_row(&p, r))?;
    }
    let fit_n = fit_exponent(&rows.iter().map(|r| (r.x, r.n as f64)).collect::<Vec<_>>());
    let fit_e = fit_exponent(&rows.iter().map(|r| (r.x, r.err.abs())).collect::<Vec<_>>());
    let show = |fit: &sector_count::Result<sector_count::experiments::ExponentFit>| match fit {
        Ok(v) => format!("{}±{}", f(v.slope), f(v.stderr)),
        Err(e) => format!("unavailable ({e})"),
    };
    writeln!(out, "# fit slope_N={} slope_abs_err={}", show(&fit_n), show(&fit_e))?;
    Ok(0)
}

fn write_summary(out: &mut dyn Write, kind: &str, means: &[(f64, f64)]) -> Result<()> {
    match fit_exponent(means) {
        Ok(v) => writeln!(out, "# fit {kind} slope={} stderr={} used={}", f(v.slope), f(v.stderr), v.used)?,
        Err(e) => writeln!(out, "# fit {kind} unavailable ({e})")?,
    }
    Ok(())
}

fn cmd_radial(a: RadialArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<i32> {
    let p = parse_point(&required(cfg.pick(a.p, "p")?, "p")?, "p")?;
    let xs = parse_list(&required(cfg.pick(a.x, "X")?, "X")?, "X")?;
    let r = cfg.pick(a.r, "R")?;
    let eps = cfg.pick(a.eps, "eps")?;
    let gc = GroupConfig::picard();
    let opts = count_options(a.budget, cfg)?;
    let mut specs = Vec::new();
    for &x in &xs {
        check_cutoff(x, "X")?;
        let d = SpacingSpec::default_radial(x);
        let spec = SpacingSpec::radial(r.unwrap_or(d.r), eps.unwrap_or(x / (2.0 * r.unwrap_or(d.r) as f64)));
        spec.validate(x).with_context(|| format!("radial spacing at X={x}"))?;
        specs.push(spec);
    }
    writeln!(out, "{SCHEMA}\n{RECORD_HEADER}")?;
    let mut means = Vec::new();
    for (&x, spec) in xs.iter().zip(&specs) {
        let (m, recs) = radial_mean_square_with(&p, x, spec, &gc, &opts)?;
        for rec in &recs {
            writeln!(out, "{}", record_row(rec))?;
        }
        writeln!(out, "# summary X={} R={} eps={} mean_square={}", f(x), spec.r, f(spec.eps), f(m))?;
        means.push((x, m));
    }
    write_summary(out, "radial", &means)?;
    Ok(0)
}

fn parse_region(s: &str) -> Result<Region> {
    let v = parse_list(s, "region")?;
    if v.len() != 6 {
        bail!("--region expects x1lo,x1hi,x2lo,x2hi,ylo,yhi");
    }
    Ok(Region { x1: (v[0], v[1]), x2: (v[2], v[3]), y: (v[4], v[5]) })
}

fn cmd_spatial(a: SpatialArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<i32> {
    let xs = parse_list(&required(cfg.pick(a.x, "X")?, "X")?, "X")?;
    let r = cfg.pick(a.r, "R")?;
    let eps = cfg.pick(a.eps, "eps")?;
    let mut opts = SpatialOptions {
        seed: resolve_seed(a.seed, cfg, DEFAULT_SEED)?,
        count: count_options(a.budget, cfg)?,
        ..SpatialOptions::default()
    };
    if let Some(s) = cfg.pick(a.region, "region")? {
        opts.region = parse_region(&s)?;
    }
    let gc = GroupConfig::picard();
    let mut specs = Vec::new();
    for &x in &xs {
        check_cutoff(x, "X")?;
        let d = SpacingSpec::default_spatial(x);
        let spec = SpacingSpec::spatial(r.unwrap_or(d.r), eps.unwrap_or(d.eps));
        spec.validate(x).with_context(|| format!("spatial spacing at X={x}"))?;
        specs.push(spec);
    }
    writeln!(out, "{SCHEMA}\n# seed {}\n{RECORD_HEADER}", opts.seed)?;
    let mut means = Vec::new();
    for (&x, spec) in xs.iter().zip(&specs) {
        let (m, recs) = spatial_mean_square(x, spec, &gc, &opts)?;
        for rec in &recs {
            writeln!(out, "# point {} {},{},{}", rec.sample_id, f(rec.point.x1), f(rec.point.x2), f(rec.point.y))?;
            writeln!(out, "{}", record_row(rec))?;
        }
        writeln!(out, "# summary X={} R={} eps={} mean_square={}", f(x), spec.r, f(spec.eps), f(m))?;
        means.push((x, m));
    }
    write_summary(out, "spatial", &means)?;
    Ok(0)
}

fn cmd_ball(a: BallArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<i32> {
    let p = parse_point(&required(cfg.pick(a.p, "p")?, "p")?, "p")?;
    let q = match cfg.pick(a.q, "q")? {
        Some(s) => parse_point(&s, "q")?,
        None => p,
    };
    let xs = parse_list(&required(cfg.pick(a.x, "x")?, "x")?, "x")?;
    let opts = count_options(a.budget, cfg)?;
    for &x in &xs {
        check_cutoff(x, "x")?;
    }
    writeln!(out, "{SCHEMA}\nx1,x2,y,q1,q2,q3,x,count,ratio")?;
    for &x in &xs {
        let n = ball_count_with(&p, &q, x, &opts)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{n},{}",
            f(p.x1),
            f(p.x2),
            f(p.y),
            f(q.x1),
            f(q.x2),
            f(q.y),
            f(x),
            f(n as f64 / (x * x))
        )?;
    }
    Ok(0)
}

fn cmd_verify(a: VerifyArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<i32> {
    let seed = resolve_seed(a.seed, cfg, verify::VERIFY_SEED)?;
    let checks: Vec<Check> = match a.suite {
        Suite::Geometry => verify::geometry_suite(cfg.pick(a.n, "n")?.unwrap_or(100), seed)?,
        Suite::Transforms => verify::transform_suite(seed)?,
        Suite::Selberg => verify::selberg_suite()?,
        Suite::Oracle => {
            let depth = cfg.pick(a.depth, "depth")?.unwrap_or(5);
            if depth < 2 {
                bail!("--depth must be at least 2");
            }
            verify::oracle_suite(depth)?
        }
        Suite::Sandwich => {
            let x = cfg.pick(a.x, "X")?.unwrap_or(30.0);
            check_cutoff(x, "X")?;
            let width = cfg.pick(a.width, "width")?.unwrap_or(x.powf(-0.5));
            if !(width > 0.0 && width.is_finite()) {
                bail!("--width must be positive");
            }
            verify::sandwich_suite(x, width, cfg.pick(a.n, "n")?.unwrap_or(20), seed)?
        }
    };
    for c in &checks {
        if a.json {
            let line = json!({
                "suite": c.suite,
                "name": c.name,
                "inputs": c.inputs,
                "measured": c.measured,
                "tolerance": c.tolerance,
                "passed": c.passed,
            });
            writeln!(out, "{line}")?;
        } else {
            writeln!(
                out,
                "[{}] {}: {} ({}) measured {:e} tolerance {:e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.inputs,
                c.measured,
                c.tolerance
            )?;
        }
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    if failed.is_empty() {
        if !a.json {
            writeln!(out, "{} checks passed", checks.len())?;
        }
        return Ok(0);
    }
    for c in &failed {
        eprintln!("invariant violated: {} with {}", c.name, c.inputs);
    }
    Ok(1)
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = cfg.pick(cli.threads, "threads")? {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let output = cli.output.clone().or(cfg.get::<PathBuf>("output")?);
    let mut out: Box<dyn Write> = match &output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let code = match cli.cmd {
        Command::Count(a) => cmd_count(a, &cfg, &mut out)?,
        Command::Sweep(a) => cmd_sweep(a, &cfg, &mut out)?,
        Command::Radial(a) => cmd_radial(a, &cfg, &mut out)?,
        Command::Spatial(a) => cmd_spatial(a, &cfg, &mut out)?,
        Command::Ball(a) => cmd_ball(a, &cfg, &mut out)?,
        Command::Verify(a) => cmd_verify(a, &cfg, &mut out)?,
    };
    out.flush()?;
    Ok(code)
}

fn main() {
    let code = match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = ConfigFile::parse("# comment\nX = 50\n\np=0.1,0.2,1.3\n").unwrap();
        assert_eq!(c.get::<f64>("X").unwrap(), Some(50.0));
        assert_eq!(c.pick(Some(7.0), "X").unwrap(), Some(7.0));
        assert_eq!(c.get::<String>("p").unwrap().as_deref(), Some("0.1,0.2,1.3"));
        assert!(ConfigFile::parse("novalue\n").is_err());
    }

    #[test]
    fn geometric_grid() {
        let a = SweepArgs {
            p: None,
            xs: None,
            from: Some(20.0),
            to: Some(320.0),
            ratio: Some(2.0),
            step: None,
            points: None,
            spacing: None,
            budget: None,
        };
        assert_eq!(sweep_grid(&a, &ConfigFile::default()).unwrap(), vec![20.0, 40.0, 80.0, 160.0, 320.0]);
    }

    #[test]
    fn point_validation() {
        assert!(parse_point("0,0,-1", "p").is_err());
        assert!(parse_point("0,0", "p").is_err());
        assert!(parse_point("0.1,0.2,1.3", "p").is_ok());
    }
}
