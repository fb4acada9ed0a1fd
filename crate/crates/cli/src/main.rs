use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use siegel::config::CalibrationConfig;
use siegel::johncurve::{build_john_curve, john_scan, verify_cone, CurveSample};
use siegel::oracle::{
    connect_constructive, empirical_equivalence_scan, refine_distance, OptimizerStatus, RefineOptions, Region,
};
use siegel::perimeter::{ahlfors_scan, geometric_radii, r0};
use siegel::quasimetric::{delta, sample_ball, BallSample};
use siegel::report::{fmt_f64, write_csv, CsvRow};
use siegel::surface::{
    admissibility_grid, annulus_grid, boundary_samples, builtin_names, check_admissibility, lift, nondegeneracy_sweep,
    residual_exponents, surface_by_name, AdmissibleGraph,
};
use siegel::uniformcurve::{build_uniform_curve, uniform_pairs, uniform_scan, verify_uniform, UniformSample};
use siegel::{Execution, ModelParams, Point, Vec2};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "siegel",
    version,
    about = "Quasi-distance, curve and perimeter verifiers for the Siegel-type vector fields"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Calibration file (TOML `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Homogeneity exponent; overrides the config file.
    #[arg(long, global = true)]
    m: Option<f64>,
    /// RNG seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// John leg-1 factor; overrides the config file.
    #[arg(long, global = true)]
    eps0: Option<f64>,
    /// Accept constants violating `H·mu_split ≤ eps0/2`.
    #[arg(long, global = true)]
    allow_unsafe: bool,
    /// Run every sweep on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Write the effective configuration to this path and continue.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// δ and refined CC upper/lower bounds for a pair of points.
    Distance {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        p: Point,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        q: Point,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 10)]
        segments: usize,
        /// JSON destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Batch verifier writing PREFIX.csv and PREFIX.json.
    Scan {
        kind: ScanKind,
        #[arg(long, default_value = "plane")]
        surface: String,
        /// Pairs, starts or base points.
        #[arg(long)]
        n: Option<usize>,
        /// Output prefix.
        #[arg(long)]
        out: PathBuf,
        /// Times per John curve.
        #[arg(long, default_value_t = 20)]
        times: usize,
        /// Ball samples per cone test.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Refiner budget for the equivalence scan.
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        /// Smallest Ahlfors radius.
        #[arg(long, default_value_t = 2e-3)]
        r_min: f64,
        /// Largest Ahlfors radius, capped at the surface's admissible radius.
        #[arg(long, default_value_t = 2.0)]
        r_max: f64,
        #[arg(long, default_value_t = 7)]
        radii: usize,
    },
    /// Point cloud of the δ-ball as CSV `x,y,t,delta`.
    ExportBall {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        p: Point,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Samples of the John curve from a start point, plus its cone report.
    JohnCurve {
        #[arg(long, default_value = "plane")]
        surface: String,
        /// `x,y,t`, or `x,y` for the boundary point above `(x, y)`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
        p: Coords,
        /// Samples per leg.
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        times: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Samples of the uniform curve between two points, plus its report.
    UniformCurve {
        #[arg(long, default_value = "plane")]
        surface: String,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
        p: Coords,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_coords)]
        q: Coords,
        /// Samples per piece.
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Admissibility, expansion residuals and nondegeneracy of a surface.
    CheckSurface {
        #[arg(long, default_value = "plane")]
        surface: String,
        /// Grid points per side.
        #[arg(long, default_value_t = 41)]
        grid: usize,
        /// JSON destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    Equivalence,
    Ahlfors,
    John,
    Uniform,
}

impl ScanKind {
    fn name(self) -> &'static str {
        match self {
            ScanKind::Equivalence => "equivalence",
            ScanKind::Ahlfors => "ahlfors",
            ScanKind::John => "john",
            ScanKind::Uniform => "uniform",
        }
    }
}

#[derive(Clone, Debug)]
struct Coords(Vec<f64>);

fn parse_coords(s: &str) -> std::result::Result<Coords, String> {
    let v = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("{c:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if !(2..=3).contains(&v.len()) || v.iter().any(|x| !x.is_finite()) {
        return Err(format!("expected finite x,y or x,y,t, got {s:?}"));
    }
    Ok(Coords(v))
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    match parse_coords(s)?.0.as_slice() {
        &[x, y, t] => Ok(Point::new(x, y, t)),
        _ => Err(format!("expected x,y,t, got {s:?}")),
    }
}

fn resolve_point(g: &dyn AdmissibleGraph, c: &Coords) -> Point {
    match *c.0.as_slice() {
        [x, y] => lift(g, Vec2::new(x, y)),
        [x, y, t] => Point::new(x, y, t),
        _ => unreachable!("validated by parse_coords"),
    }
}

struct Ctx {
    cfg: CalibrationConfig,
    params: ModelParams,
    exec: Execution,
}

impl Ctx {
    fn new(g: &Global) -> Result<Self> {
        let mut cfg = match &g.config {
            Some(path) => CalibrationConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => CalibrationConfig::default(),
        };
        if let Some(m) = g.m {
            cfg.m = m;
        }
        if let Some(seed) = g.seed {
            cfg.seed = seed;
        }
        if let Some(eps0) = g.eps0 {
            cfg.eps0 = eps0;
        }
        cfg.allow_unsafe |= g.allow_unsafe;
        cfg.validate()?;
        if let Some(path) = &g.save_config {
            cfg.save(path).with_context(|| format!("writing {}", path.display()))?;
        }
        let params = cfg.params()?;
        let exec = if g.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        Ok(Self { cfg, params, exec })
    }

    fn surface(&self, name: &str) -> Result<Box<dyn AdmissibleGraph>> {
        surface_by_name(name, &self.params).with_context(|| format!("known surfaces: {}", builtin_names().join(", ")))
    }

    fn header(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut h = serde_json::Map::new();
        h.insert("schema".into(), json!(SCHEMA));
        h.insert("command".into(), json!(command));
        h.insert(
            "config".into(),
            serde_json::to_value(&self.cfg).expect("config is plain data"),
        );
        h
    }
}

fn with_fields(mut head: serde_json::Map<String, Value>, body: impl Serialize) -> Value {
    if let Value::Object(fields) = serde_json::to_value(body).expect("report is plain data") {
        head.extend(fields);
    }
    Value::Object(head)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn emit_json(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => create(path)?.write_all(text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn emit_table<R: CsvRow>(rows: &[R], summary: &Value, prefix: &Path) -> Result<()> {
    let csv = with_ext(prefix, "csv");
    let mut w = create(&csv)?;
    write_csv(rows, &mut w).with_context(|| format!("writing {}", csv.display()))?;
    w.flush()?;
    emit_json(summary, Some(&with_ext(prefix, "json")))
}

struct BallRow(BallSample);
struct CurveRow(CurveSample);
struct PieceRow(UniformSample);

impl CsvRow for BallRow {
    fn header() -> &'static [&'static str] {
        &["x", "y", "t", "delta"]
    }
    fn fields(&self) -> Vec<String> {
        let s = &self.0;
        [s.point.x, s.point.y, s.point.t, s.delta].map(fmt_f64).to_vec()
    }
}

impl CsvRow for CurveRow {
    fn header() -> &'static [&'static str] {
        &["x", "y", "t", "s"]
    }
    fn fields(&self) -> Vec<String> {
        let c = &self.0;
        [c.x, c.y, c.t, c.s].map(fmt_f64).to_vec()
    }
}

impl CsvRow for PieceRow {
    fn header() -> &'static [&'static str] {
        &["x", "y", "t", "piece", "delta_t"]
    }
    fn fields(&self) -> Vec<String> {
        let s = &self.0;
        let p = s.point;
        vec![
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.t),
            s.piece.to_string(),
            fmt_f64(s.delta_t),
        ]
    }
}

fn cmd_distance(ctx: &Ctx, p: Point, q: Point, opts: RefineOptions, out: Option<&Path>) -> Result<ExitCode> {
    let params = &ctx.params;
    let d = delta(&p, &q, params);
    let init = connect_constructive(&p, &q, params)?;
    let est = refine_distance(&p, &q, &init, &opts, params)?;
    let ratio = if d.value == 0.0 && est.upper == 0.0 {
        1.0
    } else {
        est.upper / d.value
    };
    let mut head = ctx.header("distance");
    head.insert("p".into(), json!(p));
    head.insert("q".into(), json!(q));
    let body = json!({
        "delta": d.value,
        "upper": est.upper,
        "lower": est.lower,
        "ratio": ratio,
        "status": est.status,
        "evaluations": est.evaluations,
        "endpoint_gap": est.endpoint_gap,
        "witness_path": est.witness,
    });
    emit_json(&with_fields(head, body), out)?;
    Ok(match est.status {
        OptimizerStatus::Converged => ExitCode::SUCCESS,
        OptimizerStatus::Stagnated => ExitCode::from(2),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    ctx: &Ctx,
    kind: ScanKind,
    surface: &str,
    n: Option<usize>,
    out: &Path,
    times: usize,
    samples: usize,
    budget: usize,
    radii: (f64, f64, usize),
) -> Result<()> {
    let g = ctx.surface(surface)?;
    let g = g.as_ref();
    let (cfg, params, exec) = (&ctx.cfg, &ctx.params, ctx.exec);
    let mut head = ctx.header("scan");
    head.insert("kind".into(), json!(kind.name()));
    head.insert("surface".into(), json!(g.name()));
    match kind {
        ScanKind::Equivalence => {
            let opts = RefineOptions {
                budget,
                ..RefineOptions::default()
            };
            let rep = empirical_equivalence_scan(n.unwrap_or(1000), &Region::unit(), cfg.seed, &opts, exec, params)?;
            emit_table(&rep.rows, &with_fields(head, &rep.summary), out)
        }
        ScanKind::Ahlfors => {
            let (lo, hi, k) = radii;
            let hi = hi.min(r0(g));
            if !(lo > 0.0 && lo < hi) {
                bail!("need 0 < r-min < r-max, got {lo} and {hi}");
            }
            let bases = boundary_samples(g, n.unwrap_or(20), cfg.seed);
            let rep = ahlfors_scan(g, &bases, &geometric_radii(lo, hi, k), cfg, exec, params)?;
            emit_table(&rep.rows, &with_fields(head, &rep.summary), out)
        }
        ScanKind::John => {
            let starts = boundary_samples(g, n.unwrap_or(50), cfg.seed);
            let rep = john_scan(g, &starts, cfg, times, samples, exec, params)?;
            emit_table(&rep.rows, &with_fields(head, &rep.summary), out)
        }
        ScanKind::Uniform => {
            let pairs = uniform_pairs(g, n.unwrap_or(100), cfg.seed, params);
            let rep = uniform_scan(g, &pairs, cfg, 16, samples, exec, params)?;
            emit_table(&rep.rows, &with_fields(head, rep.summary), out)
        }
    }
}

fn cmd_export_ball(ctx: &Ctx, p: Point, r: f64, n: usize, out: &Path) -> Result<()> {
    let pts = if n == 0 {
        if !(r > 0.0 && r.is_finite()) {
            bail!("radius must be positive, got {r}");
        }
        Vec::new()
    } else {
        sample_ball(&p, r, n, ctx.cfg.seed, &ctx.params)?
    };
    let rows: Vec<BallRow> = pts.into_iter().map(BallRow).collect();
    let mut w = create(out)?;
    write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_john_curve(
    ctx: &Ctx,
    surface: &str,
    p: &Coords,
    n: usize,
    times: usize,
    samples: usize,
    out: &Path,
) -> Result<()> {
    let g = ctx.surface(surface)?;
    let g = g.as_ref();
    let start = resolve_point(g, p);
    let curve = build_john_curve(g, &start, &ctx.cfg, &ctx.params)?;
    let report = verify_cone(g, &curve, &ctx.cfg, times, samples, ctx.cfg.seed, ctx.exec, &ctx.params);
    let s_end = report.times.iter().map(|t| t.s).fold(curve.switch_time, f64::max);
    let rows: Vec<CurveRow> = curve.samples(s_end, n, &ctx.params).into_iter().map(CurveRow).collect();
    let mut head = ctx.header("john-curve");
    head.insert("surface".into(), json!(g.name()));
    head.insert("curve".into(), json!(curve));
    emit_table(&rows, &with_fields(head, &report), out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_uniform_curve(
    ctx: &Ctx,
    surface: &str,
    p: &Coords,
    q: &Coords,
    n: usize,
    samples: usize,
    out: &Path,
) -> Result<()> {
    let g = ctx.surface(surface)?;
    let g = g.as_ref();
    let (p, q) = (resolve_point(g, p), resolve_point(g, q));
    let curve = build_uniform_curve(g, &p, &q, &ctx.cfg, &ctx.params)?;
    let report = verify_uniform(g, &curve, &ctx.cfg, n, samples, ctx.cfg.seed, ctx.exec, &ctx.params);
    let rows: Vec<PieceRow> = curve.samples(n, &ctx.params).into_iter().map(PieceRow).collect();
    let mut head = ctx.header("uniform-curve");
    head.insert("surface".into(), json!(g.name()));
    head.insert("p".into(), json!(p));
    head.insert("q".into(), json!(q));
    head.insert("s_hat".into(), json!([curve.s_hat_p, curve.s_hat_q]));
    head.insert("tau".into(), json!(curve.tau));
    emit_table(&rows, &with_fields(head, report), out)
}

fn cmd_check_surface(ctx: &Ctx, surface: &str, grid: usize, out: Option<&Path>) -> Result<ExitCode> {
    let g = ctx.surface(surface)?;
    let g = g.as_ref();
    let params = &ctx.params;
    let adm = check_admissibility(g, &admissibility_grid(g, grid), params)?;
    let residuals: Vec<_> = [Vec2::new(0.6, 0.3), Vec2::new(-0.25, 0.4)]
        .into_iter()
        .filter(|z| g.domain().contains(*z))
        .map(|z| residual_exponents(g, z, params))
        .collect();
    let hi = g.check_radius().min(2.0);
    let sweep = nondegeneracy_sweep(g, &annulus_grid(g, grid, 0.1, hi), &[0.5, 0.25, 0.1], params)?;
    let largest_eps0 = sweep.iter().find(|s| s.pass).map(|s| s.eps0);
    let mut head = ctx.header("check-surface");
    head.insert("surface".into(), json!(g.name()));
    let body = json!({
        "admissible": adm.pass,
        "constant": adm.constant,
        "max_ratios": adm.max_ratios,
        "annuli": adm.annuli,
        "residual_exponents": residuals,
        "nondegeneracy": sweep,
        "largest_eps0": largest_eps0,
    });
    emit_json(&with_fields(head, body), out)?;
    Ok(if adm.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let ctx = Ctx::new(&cli.global)?;
    match cli.command {
        Command::Distance {
            p,
            q,
            budget,
            starts,
            segments,
            out,
        } => {
            let opts = RefineOptions {
                budget,
                starts,
                segments,
                seed: ctx.cfg.seed,
                ..RefineOptions::default()
            };
            cmd_distance(&ctx, p, q, opts, out.as_deref())
        }
        Command::Scan {
            kind,
            surface,
            n,
            out,
            times,
            samples,
            budget,
            r_min,
            r_max,
            radii,
        } => {
            cmd_scan(
                &ctx,
                kind,
                &surface,
                n,
                &out,
                times,
                samples,
                budget,
                (r_min, r_max, radii),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportBall { p, r, n, out } => {
            cmd_export_ball(&ctx, p, r, n, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::JohnCurve {
            surface,
            p,
            n,
            times,
            samples,
            out,
        } => {
            cmd_john_curve(&ctx, &surface, &p, n, times, samples, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::UniformCurve {
            surface,
            p,
            q,
            n,
            samples,
            out,
        } => {
            cmd_uniform_curve(&ctx, &surface, &p, &q, n, samples, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckSurface { surface, grid, out } => cmd_check_surface(&ctx, &surface, grid, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
