//! `widom-lab`: batch front end to the library. One subcommand per run,
//! writing a JSON artifact and optional CSV tables and SVG plots.

mod artifact;
mod svg;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use widom_lab::discriminant::{self, asymptotic_length};
use widom_lab::extremal::{self, ETA_REL, NORM_TOL};
use widom_lab::greenpot::solve_green;
use widom_lab::realset::{self, LogLengthOptions};
use widom_lab::reflect::{measure_report, Divisor, LambdaFamily, Reflectionless};
use widom_lab::table::{Cell, Table};
use widom_lab::{build_named_set, Error, GapSystem, NamedSet, QuadratureSpec, RealSet, Scheme};

use artifact::{Formats, Output};
use svg::{Plot, Series};

#[derive(Parser)]
#[command(name = "widom-lab", version, about = "Potential theory on Denjoy domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Set summary, homogeneity ratios and logarithmic length.
    Set(SetCmd),
    /// Green function with pole at infinity: critical points, Widom sum, Robin constant.
    Green(GreenCmd),
    /// Reflectionless function and its measure, or the λ-family member.
    Reflect(ReflectCmd),
    /// λ-sweep of boundary norms and the candidate gap indicator.
    Extremal(ExtremalCmd),
    /// Bands of the discriminant on a window of the real axis.
    Bands(BandsCmd),
    /// Weighted L¹ witness built from the discriminant bands.
    DctDemo(DctCmd),
    /// Hypothesis checks on a Benedicks-type set.
    Certify(CertifyCmd),
}

#[derive(Args, Serialize, Clone)]
struct Input {
    /// Named set, `name` or `name:key=value,...`.
    #[arg(long, conflicts_with = "input")]
    set: Option<String>,
    /// RealSet JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SchemeArg {
    GaussChebyshevPerBand,
    AdaptiveGap,
}

#[derive(Args, Serialize, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    formats: Vec<Format>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "adaptive-gap")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 32)]
    nodes_per_band: usize,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct SetCmd {
    #[command(flatten)]
    #[serde(flatten)]
    input: Input,
    /// Pole for the logarithmic length; defaults to the accumulation point.
    #[arg(long, allow_hyphen_values = true)]
    pole: Option<f64>,
    /// Number of δ values in the homogeneity grid.
    #[arg(long, default_value_t = 24)]
    deltas: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct GreenCmd {
    #[command(flatten)]
    #[serde(flatten)]
    input: Input,
    /// Density samples per band.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct ReflectCmd {
    #[command(flatten)]
    #[serde(flatten)]
    input: Input,
    /// Use the λ-family member with this λ instead of a divisor.
    #[arg(long)]
    lambda: Option<f64>,
    /// Draw divisor points and sheets from the seed instead of right edges.
    #[arg(long)]
    random_divisor: bool,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct ExtremalCmd {
    #[command(flatten)]
    #[serde(flatten)]
    input: Input,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct BandsCmd {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = -35.0 * PI, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Samples of Δ for the plot table.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct DctCmd {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 200)]
    bands: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct CertifyCmd {
    #[command(flatten)]
    #[serde(flatten)]
    input: Input,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Modification parameter; absent for the plain set.
    #[arg(long)]
    q: Option<f64>,
    /// Used when no set is given.
    #[arg(long, default_value_t = 50)]
    n_max: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

enum Failure {
    /// Bad flags, unreadable or invalid input, unwritable output.
    Schema(String),
    /// The library could not certify a result.
    Numeric(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Overlap(..)
            | Error::ParameterDomain(_)
            | Error::InvalidSet(_)
            | Error::SampleNotInSet(_)
            | Error::PoleInsideInterval { .. }
            | Error::DivisorMismatch { .. }
            | Error::DivisorOutsideGap { .. }
            | Error::MissingAccumulation(_)
            | Error::LambdaOutOfRange { .. }
            | Error::NotBenedicksShape(_) => Failure::Schema(e.to_string()),
            _ => Failure::Numeric(e),
        }
    }
}

type Run<T> = Result<T, Failure>;

impl Common {
    fn quad(&self) -> Run<QuadratureSpec> {
        let scheme = match self.scheme {
            SchemeArg::GaussChebyshevPerBand => Scheme::GaussChebyshevPerBand,
            SchemeArg::AdaptiveGap => Scheme::AdaptiveGap,
        };
        Ok(QuadratureSpec::new(scheme, self.nodes_per_band, self.tol)?)
    }

    fn formats(&self) -> Formats {
        let has = |f| self.formats.contains(&f);
        Formats { json: has(Format::Json), csv: has(Format::Csv), svg: has(Format::Svg) }
    }
}

/// The set and a description of where it came from, for the config block.
fn load(input: &Input) -> Run<(RealSet, Value)> {
    match (&input.set, &input.input) {
        (Some(name), None) => Ok((build_named_set(&NamedSet::parse(name)?)?, json!({ "named": name }))),
        (None, Some(path)) => {
            let bytes =
                std::fs::read(path).map_err(|e| Failure::Schema(format!("cannot read {}: {e}", path.display())))?;
            let set: RealSet = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::Schema(format!("{} is not a RealSet: {e}", path.display())))?;
            let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
            Ok((set, json!({ "path": path.display().to_string(), "sha256": digest })))
        }
        _ => Err(Failure::Schema("exactly one of --set or --input is required".into())),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn set_truncation(set: &RealSet, source: &Value) -> Value {
    json!({
        "source": source,
        "intervals": set.intervals().len(),
        "accumulation": set.accumulation(),
        "generator": set.meta().generator,
        "params": set.meta().params,
        "set_truncation": set.meta().truncation,
    })
}

fn table<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<Cell>>) -> Table {
    let mut t = Table::new(header);
    for r in rows {
        t.push(r);
    }
    t
}

fn c<T: Into<Cell>>(v: T) -> Cell {
    v.into()
}

fn theta_samples(l: f64, r: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| 0.5 * (l + r) - 0.5 * (r - l) * ((k as f64 + 0.5) * PI / n as f64).cos())
}

// ---------------------------------------------------------------------------

fn run_set(cmd: &SetCmd) -> Run<Output> {
    let (set, source) = load(&cmd.input)?;
    let xs: Vec<f64> = set.intervals().iter().flat_map(|iv| [iv[0], 0.5 * (iv[0] + iv[1]), iv[1]]).collect();
    let grid = realset::default_delta_grid(&set, cmd.deltas);
    let hom = realset::homogeneity_report(&set, &xs, &grid)?;
    let pole = cmd.pole.or(set.accumulation());
    let ll = pole.map(|p| realset::log_length(&set, p, &LogLengthOptions::default())).transpose()?;
    let per_delta: Vec<(f64, f64)> = grid
        .iter()
        .map(|&d| (d, hom.table.iter().filter(|r| r.delta == d).map(|r| r.ratio).fold(f64::INFINITY, f64::min)))
        .collect();
    let result = json!({
        "set": to_value(&set),
        "total_length": set.total_length(),
        "diameter": set.diameter(),
        "gaps": set.gap_count(),
        "homogeneity": to_value(&hom),
        "log_length": ll.as_ref().map(to_value),
    });
    let intervals = table(&["lo", "hi"], set.intervals().iter().map(|iv| vec![c(iv[0]), c(iv[1])]));
    let ratios = table(&["delta", "min_ratio"], per_delta.iter().map(|&(d, r)| vec![c(d), c(r)]));
    let plot = Plot {
        title: "smallest density ratio over sample points".into(),
        x_label: "δ".into(),
        y_label: "min |E ∩ (x-δ, x+δ)| / δ".into(),
        log_x: true,
        series: vec![Series::line("min ratio", per_delta)],
        ..Default::default()
    };
    Ok(Output {
        result,
        truncation: json!({ "set": set_truncation(&set, &source), "samples": xs.len(), "delta_grid": grid.len() }),
        tables: vec![("intervals".into(), intervals), ("min-ratio".into(), ratios)],
        plots: vec![("min-ratio".into(), plot)],
    })
}

fn run_green(cmd: &GreenCmd) -> Run<Output> {
    let (set, source) = load(&cmd.input)?;
    let quad = cmd.common.quad()?;
    let g = solve_green(&set, &quad)?;
    let mass = g.harmonic_mass(&quad)?;
    let mut density = Vec::new();
    for iv in set.intervals() {
        for x in theta_samples(iv[0], iv[1], cmd.samples.max(1)) {
            density.push((x, g.harmonic_density(x)?));
        }
    }
    let crit = table(
        &["gap", "critical_point", "green_value"],
        g.critical_points.iter().zip(&g.critical_values).enumerate().map(|(k, (x, v))| vec![c(k), c(*x), c(*v)]),
    );
    let dens = table(&["x", "density"], density.iter().map(|&(x, d)| vec![c(x), c(d)]));
    let plot = Plot {
        title: "harmonic measure density".into(),
        x_label: "x".into(),
        y_label: "dω/dx".into(),
        log_y: true,
        series: vec![Series::dots("density", density)],
        spans: set.intervals().to_vec(),
        ..Default::default()
    };
    Ok(Output {
        result: json!({ "green": to_value(&g), "harmonic_mass": mass, "genus": g.genus() }),
        truncation: json!({ "set": set_truncation(&set, &source), "quad": to_value(&quad) }),
        tables: vec![("critical".into(), crit), ("density".into(), dens)],
        plots: vec![("density".into(), plot)],
    })
}

fn run_reflect(cmd: &ReflectCmd, seed: u64) -> Run<Output> {
    let (set, source) = load(&cmd.input)?;
    let quad = cmd.common.quad()?;
    if let Some(l) = cmd.lambda {
        let fam = LambdaFamily::new(&set, l)?;
        let ac = fam.ac_mass(&quad)?;
        let density: Vec<(f64, f64)> = set
            .intervals()
            .iter()
            .flat_map(|iv| theta_samples(iv[0], iv[1], cmd.samples.max(1)))
            .map(|x| (x, fam.boundary(x).r.norm() / PI))
            .collect();
        let (_, div) = fam.divisor()?;
        let result = json!({
            "lambda": l,
            "i_infinity": fam.i_infinity(),
            "ac_mass": ac,
            "sigma0_closed": fam.sigma0_closed(),
            "sigma0_numeric": fam.sigma0_numeric(),
            "total_mass": ac + fam.sigma0_closed(),
            "divisor": div.points(),
        });
        return Ok(density_output(result, &set, &source, &quad, density));
    }
    let sys = GapSystem::of(&set);
    let div = if cmd.random_divisor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let iv = set.intervals();
        let entries = (0..set.gap_count())
            .map(|j| {
                let (a, b) = (iv[j][1], iv[j + 1][0]);
                let u: f64 = rng.random_range(0.05..0.95);
                (a + u * (b - a), if rng.random_bool(0.5) { 1 } else { -1 })
            })
            .collect();
        Divisor::new(&sys, entries)?
    } else {
        Divisor::right_edges(&sys)
    };
    let points = div.points();
    let r = Reflectionless::new(sys, div)?;
    let rep = measure_report(&r, &quad, cmd.samples)?;
    let density = rep.density_samples.clone();
    let result = json!({ "divisor": points, "measure": to_value(&rep) });
    Ok(density_output(result, &set, &source, &quad, density))
}

fn density_output(result: Value, set: &RealSet, source: &Value, quad: &QuadratureSpec, density: Vec<(f64, f64)>) -> Output {
    let t = table(&["x", "density"], density.iter().map(|&(x, d)| vec![c(x), c(d)]));
    let plot = Plot {
        title: "boundary density |R(x+i0)|/π".into(),
        x_label: "x".into(),
        y_label: "density".into(),
        log_y: true,
        series: vec![Series::dots("density", density)],
        spans: set.intervals().to_vec(),
        ..Default::default()
    };
    Output {
        result,
        truncation: json!({ "set": set_truncation(set, source), "quad": to_value(quad) }),
        tables: vec![("density".into(), t)],
        plots: vec![("density".into(), plot)],
    }
}

fn run_extremal(cmd: &ExtremalCmd) -> Run<Output> {
    let (set, source) = load(&cmd.input)?;
    let quad = cmd.common.quad()?;
    let curve = extremal::lambda_sweep(&set, cmd.grid, &quad)?;
    let gap = extremal::dct_gap_indicator(&set, &quad)?;
    let sweep = table(
        &["lambda", "norm", "closed_form", "rel_error"],
        (0..curve.lambda_grid.len())
            .map(|i| vec![c(curve.lambda_grid[i]), c(curve.norms[i]), c(curve.closed_form[i]), c(curve.rel_errors[i])]),
    );
    let pts = |v: &[f64]| curve.lambda_grid.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let plot = Plot {
        title: "boundary L¹ norm of H_λ".into(),
        x_label: "λ".into(),
        y_label: "norm".into(),
        series: vec![Series::dots("computed", pts(&curve.norms)), Series::line("closed form", pts(&curve.closed_form))],
        ..Default::default()
    };
    Ok(Output {
        result: json!({ "curve": to_value(&curve), "gap_indicator": to_value(&gap), "upper_bound_on_extremal_value": gap.best_known_norm }),
        truncation: json!({ "set": set_truncation(&set, &source), "quad": to_value(&quad), "grid": cmd.grid, "eta_rel": ETA_REL, "norm_tol": NORM_TOL }),
        tables: vec![("sweep".into(), sweep)],
        plots: vec![("sweep".into(), plot)],
    })
}

fn run_bands(cmd: &BandsCmd) -> Run<Output> {
    let bs = discriminant::find_bands(cmd.t, [cmd.from, cmd.to], cmd.step)?;
    let bands = table(
        &["index", "lo", "hi", "length", "asymptotic_length"],
        bs.bands.iter().zip(&bs.band_index).map(|(b, k)| {
            let idx = k.map_or(c(""), c);
            let asym = k.filter(|&k| k > 0).map_or(c(""), |k| c(asymptotic_length(cmd.t, k)));
            vec![idx, c(b[0]), c(b[1]), c(b[1] - b[0]), asym]
        }),
    );
    let n = cmd.samples.max(2);
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = cmd.from + (cmd.to - cmd.from) * i as f64 / (n - 1) as f64;
            (x, discriminant::delta_real(cmd.t, x))
        })
        .collect();
    let delta = table(&["x", "delta"], samples.iter().map(|&(x, d)| vec![c(x), c(d)]));
    let plot = Plot {
        title: format!("Δ(x) for t = {}, bands shaded", cmd.t),
        x_label: "x".into(),
        y_label: "Δ (clipped to [-3, 3])".into(),
        series: vec![Series::line("Δ", samples)],
        spans: bs.bands.clone(),
        y_clip: Some([-3.0, 3.0]),
        ..Default::default()
    };
    Ok(Output {
        result: to_value(&bs),
        truncation: json!({ "window": [cmd.from, cmd.to], "scan_step": cmd.step, "edge_residual_floor": 1e-10 }),
        tables: vec![("bands".into(), bands), ("delta".into(), delta)],
        plots: vec![("delta".into(), plot)],
    })
}

fn run_dct(cmd: &DctCmd) -> Run<Output> {
    let rep = discriminant::dct_failure_demo(cmd.t, cmd.tau, cmd.bands)?;
    let terms = table(
        &["k", "term", "partial_sum"],
        rep.band_terms.iter().zip(&rep.band_partial_sums).enumerate().map(|(k, (t, s))| vec![c(k), c(*t), c(*s)]),
    );
    let pts: Vec<(f64, f64)> = rep.band_terms.iter().enumerate().map(|(k, &t)| (k as f64, t)).collect();
    let plot = Plot {
        title: "weighted band terms ∫|F|/(x-c₁)²".into(),
        x_label: "k".into(),
        y_label: "term".into(),
        log_y: true,
        series: vec![Series::dots("band k", pts)],
        ..Default::default()
    };
    Ok(Output {
        truncation: json!({
            "k_bands": rep.k_bands,
            "ray_cutoff": rep.ray_cutoff,
            "ray_tail": rep.ray_tail,
            "tail_bound": rep.tail_bound,
            "tail_constants": to_value(&rep.tail_constants),
            "outer_samples": rep.outer_samples,
        }),
        result: to_value(&rep),
        tables: vec![("bands".into(), terms)],
        plots: vec![("bands".into(), plot)],
    })
}

fn run_certify(cmd: &CertifyCmd) -> Run<Output> {
    let (set, source) = if cmd.input.set.is_some() || cmd.input.input.is_some() {
        load(&cmd.input)?
    } else {
        let name = match cmd.q {
            Some(q) => NamedSet::BenedicksMod { p: cmd.p, delta: cmd.delta, q, n_max: cmd.n_max },
            None => NamedSet::Benedicks { p: cmd.p, delta: cmd.delta, n_max: cmd.n_max },
        };
        (build_named_set(&name)?, json!({ "generated": format!("{name:?}") }))
    };
    let rep = extremal::theorem72_certificate(&set, cmd.p, cmd.delta, cmd.q)?;
    let terms = table(
        &["k", "term", "partial_sum"],
        rep.weighted_terms
            .iter()
            .zip(&rep.weighted_widom_partial)
            .enumerate()
            .map(|(k, (t, s))| vec![c(k), c(*t), c(*s)]),
    );
    let pts: Vec<(f64, f64)> =
        rep.weighted_widom_partial.iter().enumerate().map(|(k, &s)| ((k + 1) as f64, s)).collect();
    let plot = Plot {
        title: "partial sums of the weighted series".into(),
        x_label: "terms".into(),
        y_label: "partial sum".into(),
        series: vec![Series::line("partial sum", pts)],
        ..Default::default()
    };
    Ok(Output {
        truncation: json!({ "set": set_truncation(&set, &source), "padded_gaps": rep.padded_gaps }),
        result: to_value(&rep),
        tables: vec![("weighted".into(), terms)],
        plots: vec![("weighted".into(), plot)],
    })
}

// ---------------------------------------------------------------------------

fn configure_threads() {
    if let Some(n) = std::env::var("WIDOMLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    configure_threads();
    let (name, config, common, out) = match &cli.command {
        Command::Set(c) => ("set", to_value(c), &c.common, run_set(c)),
        Command::Green(c) => ("green", to_value(c), &c.common, run_green(c)),
        Command::Reflect(c) => ("reflect", to_value(c), &c.common, run_reflect(c, c.common.seed)),
        Command::Extremal(c) => ("extremal", to_value(c), &c.common, run_extremal(c)),
        Command::Bands(c) => ("bands", to_value(c), &c.common, run_bands(c)),
        Command::DctDemo(c) => ("dct-demo", to_value(c), &c.common, run_dct(c)),
        Command::Certify(c) => ("certify", to_value(c), &c.common, run_certify(c)),
    };
    match out {
        Ok(out) => {
            let doc = artifact::envelope(name, config, common.seed, out.truncation.clone(), out.result.clone());
            match artifact::write_all(&common.out, name, &doc, &out, common.formats()) {
                Ok(paths) => {
                    println!("{}", doc["determinism_hash"].as_str().unwrap_or_default());
                    for p in paths {
                        eprintln!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: cannot write to {}: {e}", common.out.display());
                    ExitCode::from(1)
                }
            }
        }
        Err(Failure::Schema(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numerical failure: {e}");
            let diag = json!({ "error": format!("{e:?}"), "message": e.to_string() });
            let doc = artifact::envelope(name, config, common.seed, json!(null), diag);
            let path = common.out.join(format!("{name}-error.json"));
            let _ = std::fs::create_dir_all(&common.out)
                .and_then(|_| artifact::write_atomic(&path, &serde_json::to_vec_pretty(&doc).unwrap_or_default()));
            ExitCode::from(2)
        }
    }
}
