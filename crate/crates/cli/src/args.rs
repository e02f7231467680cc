use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctqw_hitting::Complex64;

#[derive(Debug, Parser)]
#[command(name = "ctqw", version, about = "Hitting times of Poisson-measured quantum walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected hitting time and hitting probability for one initial state.
    Hit {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Lambda,
        #[arg(long, value_parser = parse_init, allow_hyphen_values = true)]
        init: Init,
        #[command(flatten)]
        out: Output,
    },
    /// Expectation matrices for hitting probability and hitting time.
    Matrices {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Lambda,
        #[command(flatten)]
        out: Output,
    },
    /// Dark subspace of the final vertex.
    Dark {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        out: Output,
    },
    /// Hitting time over a log-spaced grid of rates.
    Sweep {
        #[command(flatten)]
        target: Target,
        /// `start:stop:points`, log-spaced, or a single rate.
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Lambda,
        #[arg(long, value_parser = parse_init, allow_hyphen_values = true)]
        init: Init,
        /// Append the fitted small- and large-rate coefficients.
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo estimate from sampled measurement records.
    Simulate {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Lambda,
        #[arg(long, value_parser = parse_init, allow_hyphen_values = true)]
        init: Init,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        n_traj: u64,
        #[arg(long, default_value_t = ctqw_hitting::trajectory::DEFAULT_MAX_MEAS as u64, value_parser = clap::value_parser!(u64).range(1..))]
        max_meas: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Never-hitting state built from a disconnected graph complement.
    ComplementCheck {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Args)]
pub struct Target {
    /// Edge-list file: vertex count, then one `u v` pair per line.
    #[arg(long)]
    pub graph: PathBuf,
    /// Final vertex, 0-based.
    #[arg(long = "final")]
    pub final_vertex: usize,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lambda {
    Value(f64),
    /// Strictly ascending, log-spaced.
    Grid(Vec<f64>),
}

impl Lambda {
    pub fn rates(&self) -> Vec<f64> {
        match self {
            Lambda::Value(v) => vec![*v],
            Lambda::Grid(g) => g.clone(),
        }
    }

    pub fn single(&self) -> Result<f64, String> {
        match self {
            Lambda::Value(v) => Ok(*v),
            Lambda::Grid(_) => Err("--lambda: this command takes a single rate, not a grid".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Vertex(usize),
    Uniform,
    /// Unit norm.
    Amplitudes(Vec<Complex64>),
}

fn positive(text: &str) -> Result<f64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("`{text}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("rate `{text}` must be finite and positive"))
    }
}

pub fn parse_lambda(text: &str) -> Result<Lambda, String> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [v] => positive(v).map(Lambda::Value),
        [a, b, k] => {
            let (a, b) = (positive(a)?, positive(b)?);
            let k: usize = k.trim().parse().map_err(|_| format!("point count `{k}` is not an integer"))?;
            if k < 2 {
                return Err("a grid needs at least 2 points".into());
            }
            if !(a < b) {
                return Err(format!("grid start {a} must be below stop {b}"));
            }
            let (la, lb) = (a.ln(), b.ln());
            let step = (lb - la) / (k - 1) as f64;
            let mut grid: Vec<f64> = (0..k).map(|i| (la + step * i as f64).exp()).collect();
            grid[0] = a;
            grid[k - 1] = b;
            if grid.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(format!("grid {text} is too dense to be strictly ascending"));
            }
            Ok(Lambda::Grid(grid))
        }
        _ => Err(format!("`{text}` is neither a rate nor start:stop:points")),
    }
}

fn amplitude(text: &str) -> Result<Complex64, String> {
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let z = match text.split_once(':') {
        None => num(text).map(|re| Complex64::new(re, 0.0)),
        Some((re, im)) => num(re).zip(num(im)).map(|(re, im)| Complex64::new(re, im)),
    };
    z.ok_or_else(|| format!("amplitude `{text}` is not `re` or `re:im`"))
}

pub fn parse_init(text: &str) -> Result<Init, String> {
    let text = text.trim();
    if text == "uniform" {
        return Ok(Init::Uniform);
    }
    if !text.contains(',') && !text.contains(':') {
        return text
            .parse()
            .map(Init::Vertex)
            .map_err(|_| format!("`{text}` is not a vertex index, `uniform`, or an amplitude list"));
    }
    let amps = text.split(',').map(amplitude).collect::<Result<Vec<_>, _>>()?;
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err("amplitude list has zero norm".into());
    }
    Ok(Init::Amplitudes(amps.into_iter().map(|z| z / norm).collect()))
}
