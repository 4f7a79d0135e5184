use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use quasitrig::analysis::{box_count, dyadic_scales, estimate_beta, estimate_constants};
use quasitrig::dynamics::{endpoint, hair_trace, itinerary_of, iterate, DEFAULT_HEIGHT_CAP};
use quasitrig::io::{has_parameter_column, read_points_csv, write_hair_csv, write_orbit_csv, VERSION};
use quasitrig::render::{ppm_bytes, render_slice, write_grid_csv, Palette, SliceSpec};
use quasitrig::verify::{self, Suite};
use quasitrig::{validate_params, Error, Itinerary, MapParams, Point};

const AUTO_SAMPLES: usize = 100_000;

#[derive(Parser)]
#[command(name = "quasitrig", version, about = "Escaping hairs of a Zorich-type quasiregular map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Dimension d >= 2.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Scaling lambda, or "auto" for 1.1 / beta_hat.
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_HEIGHT_CAP)]
    height_cap: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate beta, alpha, delta, K, K_O, K_I and M as JSON.
    Constants {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = AUTO_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "auto")]
        lambda: String,
    },
    /// Forward orbit as CSV.
    Iterate {
        #[command(flatten)]
        map: MapArgs,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tray symbols of a forward orbit as JSON.
    Itinerary {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long)]
        steps: usize,
    },
    /// Endpoint of the hair with a given itinerary, as JSON.
    Endpoint {
        #[command(flatten)]
        map: MapArgs,
        /// Itinerary JSON file.
        #[arg(long)]
        itinerary: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
    },
    /// Sampled hair as CSV.
    Hair {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        itinerary: PathBuf,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 20.0)]
        tmax: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Box-counting dimension of a point cloud, as JSON.
    Boxdim {
        #[arg(long)]
        points: PathBuf,
        /// Number of dyadic scales.
        #[arg(long, default_value_t = 6)]
        scales: usize,
        /// Coarsest scale; defaults to 1/8 of the cloud's widest extent.
        #[arg(long)]
        coarsest: Option<f64>,
    },
    /// Escape-time image of a coordinate slice as binary PPM.
    Render {
        #[command(flatten)]
        map: MapArgs,
        /// Slice axes "u,v" (1-based).
        #[arg(long, default_value = "1,2")]
        plane: String,
        /// Remaining coordinates, e.g. "x2=0.5" (1-based); unset ones are 0.
        #[arg(long, default_value = "")]
        fix: String,
        /// u_min,u_max,v_min,v_max.
        #[arg(long, allow_hyphen_values = true, default_value = "-1,3,-2,2")]
        window: String,
        /// WxH.
        #[arg(long, default_value = "256x256")]
        res: String,
        #[arg(long, default_value_t = 64)]
        max_iter: usize,
        #[arg(long, default_value = "hue")]
        palette: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-pixel CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run self-checks; exit status 0 iff all pass.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit status 2 for bad input, 1 for failed computations or checks.
enum Failure {
    Usage(String),
    Run(String),
    /// Reader went away, e.g. `| head`.
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::InvalidParameter(_)
            | Error::NotExpanding { .. }
            | Error::Inadmissible { .. }
            | Error::Json(_)
            | Error::Parse(_) => Failure::Usage(e.to_string()),
            Error::Io { ref source, .. } if source.kind() == io::ErrorKind::BrokenPipe => Failure::Closed,
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Closed;
        }
        Failure::Run(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: cannot parse {v:?}")))
        })
        .collect()
}

fn resolve_params(dim: usize, lambda: &str, seed: u64) -> CliResult<MapParams> {
    let beta = estimate_beta(dim, AUTO_SAMPLES, seed)?;
    let lambda = match lambda {
        "auto" => 1.1 / beta,
        v => v
            .parse::<f64>()
            .map_err(|_| usage(format!("--lambda: expected a number or \"auto\", got {v:?}")))?,
    };
    Ok(validate_params(dim, lambda, beta)?)
}

fn read_itinerary(path: &PathBuf) -> CliResult<Itinerary> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(Itinerary::from_json(&text)?)
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::Run(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn meta(params: &MapParams, seed: u64) -> serde_json::Value {
    json!({
        "dim": params.dim(),
        "lambda": params.lambda(),
        "beta_hat": params.beta_hat(),
        "alpha_hat": params.alpha_hat(),
        "seed": seed,
        "version": VERSION,
    })
}

fn print_json(value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    writeln!(io::stdout().lock(), "{text}")?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Constants {
            dim,
            samples,
            seed,
            lambda,
        } => {
            let lambda = match lambda.as_str() {
                "auto" => None,
                v => Some(v.parse::<f64>().map_err(|_| usage(format!("--lambda: cannot parse {v:?}")))?),
            };
            let (report, _) = estimate_constants(dim, lambda, samples, seed)?;
            print_json(&serde_json::to_value(report).map_err(Error::from)?)
        }
        Command::Iterate { map, point, steps, out } => {
            let params = resolve_params(map.dim, &map.lambda, map.seed)?;
            let x = Point::new(parse_list(&point, "--point")?)?;
            let orbit = iterate(&x, steps, &params, map.height_cap)?;
            let mut w = output(&out)?;
            write_orbit_csv(&mut w, &orbit, &params, map.seed)?;
            w.flush()?;
            eprintln!("status: {:?}", orbit.status);
            Ok(())
        }
        Command::Itinerary { map, point, steps } => {
            let params = resolve_params(map.dim, &map.lambda, map.seed)?;
            let x = Point::new(parse_list(&point, "--point")?)?;
            let trace = itinerary_of(&x, steps, &params, map.height_cap)?;
            print_json(&json!({
                "params": meta(&params, map.seed),
                "point": x,
                "symbols": trace.symbols,
                "truncated_at": trace.truncated_at,
            }))
        }
        Command::Endpoint {
            map,
            itinerary,
            tol,
            max_depth,
        } => {
            let it = read_itinerary(&itinerary)?;
            let params = resolve_params(it.dim(), &map.lambda, map.seed)?;
            let e = endpoint(&it, tol, max_depth, &params)?;
            print_json(&json!({
                "params": meta(&params, map.seed),
                "itinerary": it,
                "point": e.point,
                "residual": e.residual,
                "depth": e.depth,
            }))
        }
        Command::Hair {
            map,
            itinerary,
            depth,
            tmax,
            samples,
            out,
        } => {
            let it = read_itinerary(&itinerary)?;
            let params = resolve_params(it.dim(), &map.lambda, map.seed)?;
            let hair = hair_trace(&it, depth, tmax, samples, &params)?;
            let mut w = output(&out)?;
            write_hair_csv(&mut w, &hair, &params, map.seed)?;
            w.flush()?;
            eprintln!(
                "endpoint residual {:e}, contraction constant {:e}",
                hair.residual, hair.contraction_constant
            );
            Ok(())
        }
        Command::Boxdim {
            points,
            scales,
            coarsest,
        } => {
            let text = fs::read_to_string(&points).map_err(|e| usage(format!("{}: {e}", points.display())))?;
            let cloud = read_points_csv(text.as_bytes(), has_parameter_column(&text))?;
            let coarsest = coarsest.unwrap_or_else(|| widest_extent(&cloud) / 8.0);
            let est = box_count(&cloud, &dyadic_scales(coarsest, scales))?;
            print_json(&json!({
                "points": cloud.len(),
                "scales": est.scales,
                "counts": est.counts,
                "slope": est.slope,
                "r2": est.r2,
                "version": VERSION,
            }))
        }
        Command::Render {
            map,
            plane,
            fix,
            window,
            res,
            max_iter,
            palette,
            out,
            csv,
        } => {
            let params = resolve_params(map.dim, &map.lambda, map.seed)?;
            let spec = slice_spec(map.dim, &plane, &fix, &window, &res)?;
            let palette: Palette = palette.parse()?;
            let grid = render_slice(&spec, &params, max_iter, map.height_cap)?;
            fs::write(&out, ppm_bytes(&grid, palette)).map_err(|e| Failure::Run(format!("{}: {e}", out.display())))?;
            let mut sidecar = out.clone().into_os_string();
            sidecar.push(".json");
            let info = json!({
                "params": meta(&params, map.seed),
                "slice": spec,
                "max_iter": max_iter,
                "height_cap": map.height_cap,
                "palette": format!("{palette:?}").to_lowercase(),
            });
            fs::write(&sidecar, serde_json::to_string_pretty(&info).map_err(Error::from)? + "\n")?;
            if let Some(path) = csv {
                let mut w = output(&Some(path))?;
                write_grid_csv(&grid, &spec, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Verify { suite, dim, seed } => {
            let suite: Suite = suite.parse()?;
            let ctx = verify::Context::new(dim, seed)?;
            let results = verify::run(suite, &ctx)?;
            let mut out = io::stdout().lock();
            writeln!(out, "dim={dim} lambda={} seed={seed} version={VERSION}", ctx.params.lambda())?;
            for r in &results {
                writeln!(out, "{r}")?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            writeln!(out, "{} passed, {failed} failed", results.len() - failed)?;
            if failed > 0 {
                return Err(Failure::Run(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
    }
}

fn slice_spec(dim: usize, plane: &str, fix: &str, window: &str, res: &str) -> CliResult<SliceSpec> {
    let axes: Vec<usize> = plane
        .split(',')
        .map(|v| v.trim().parse::<usize>().ok().filter(|&a| a >= 1).map(|a| a - 1))
        .collect::<Option<_>>()
        .ok_or_else(|| usage(format!("--plane: expected \"u,v\" with 1-based axes, got {plane:?}")))?;
    if axes.len() != 2 {
        return Err(usage(format!("--plane: expected two axes, got {plane:?}")));
    }
    let mut coords = vec![0.0; dim];
    for item in fix.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--fix: expected xj=value, got {item:?}")))?;
        let j: usize = name
            .trim()
            .strip_prefix('x')
            .and_then(|j| j.parse().ok())
            .filter(|&j| j >= 1 && j <= dim)
            .ok_or_else(|| usage(format!("--fix: bad coordinate name {name:?}")))?;
        if axes.contains(&(j - 1)) {
            return Err(usage(format!("--fix: x{j} is a slice axis")));
        }
        coords[j - 1] = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("--fix: cannot parse {value:?}")))?;
    }
    let fixed = (0..dim).filter(|j| !axes.contains(j)).map(|j| coords[j]).collect();
    let w = parse_list(window, "--window")?;
    if w.len() != 4 {
        return Err(usage("--window: expected four values"));
    }
    let (rw, rh) = res
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| usage(format!("--res: expected WxH, got {res:?}")))?;
    Ok(SliceSpec::new(dim, axes[0], axes[1], fixed, (w[0], w[1], w[2], w[3]), (rw, rh))?)
}

fn widest_extent(cloud: &[Point]) -> f64 {
    let dim = cloud.first().map_or(0, Point::dim);
    (0..dim)
        .map(|j| {
            let (lo, hi) = cloud
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
