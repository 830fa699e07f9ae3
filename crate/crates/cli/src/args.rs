//! Command-line and config-file arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "spectral-lab", version, about = "Sparse-potential Schrödinger numerics: propagation, growth, bounds, covers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Propagate Prüfer variables and emit a per-barrier CSV trace.
    Propagate(PropagateArgs),
    /// Fit growth exponents and decompose increments.
    Growth(GrowthArgs),
    /// Dimension bounds for an interval, a k grid or the worked example.
    Bounds(BoundsArgs),
    /// Random-offset ensembles, one JSON line per k.
    Ensemble(EnsembleArgs),
    /// Partitions, covering counts and the counting oracles.
    Hausdorff(HausdorffArgs),
    /// Even/odd decomposition of the reflected whole-line operator.
    Wholeline(WholelineArgs),
    /// Run the acceptance criteria.
    Selfcheck(SelfcheckArgs),
    /// Re-run the command recorded in a manifest and compare output hashes.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Propagate(_) => "propagate",
            Command::Growth(_) => "growth",
            Command::Bounds(_) => "bounds",
            Command::Ensemble(_) => "ensemble",
            Command::Hausdorff(_) => "hausdorff",
            Command::Wholeline(_) => "wholeline",
            Command::Selfcheck(_) => "selfcheck",
            Command::Replay(_) => "replay",
        }
    }

    pub fn common(&self) -> Option<&Common> {
        match self {
            Command::Propagate(a) => Some(&a.common),
            Command::Growth(a) => Some(&a.common),
            Command::Bounds(a) => Some(&a.common),
            Command::Ensemble(a) => Some(&a.common),
            Command::Hausdorff(a) => Some(&a.common),
            Command::Wholeline(a) => Some(&a.common),
            Command::Selfcheck(a) => Some(&a.common),
            Command::Replay(_) => None,
        }
    }
}

/// Options shared by every data-producing command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output file; a manifest is written next to it. Defaults to stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Exit with an error if any job in a sweep fails.
    #[arg(long)]
    pub strict: bool,
    /// JSON file whose keys supply flags not given on the command line.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// The sparse potential.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SpecArgs {
    #[arg(long, default_value_t = 2)]
    pub gamma: u64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub v: f64,
    /// Number of barriers.
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    /// Random offsets γⁿ + ωₙ with ωₙ uniform in {−n, …, n}.
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stream index of the random realization.
    #[arg(long, default_value_t = 0)]
    pub sample: u64,
    /// Explicit barriers: one `x amplitude` pair per line.
    #[arg(long)]
    pub explicit: Option<PathBuf>,
}

/// One `k` or a grid of them.
#[derive(Debug, Clone, Args, Serialize)]
pub struct KArgs {
    /// Quasimomentum; accepts numbers and `pi`, `pi/4`, `sqrt2` forms.
    #[arg(long, value_parser = parse_real, conflicts_with = "k_grid")]
    pub k: Option<f64>,
    /// `lo:hi:count`, endpoints included.
    #[arg(long, value_parser = parse_grid)]
    pub k_grid: Option<Grid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PropagateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub k: KArgs,
    /// Boundary condition u(0) cos φ + u(1) sin φ = 0.
    #[arg(long, default_value_t = 0.0, value_parser = parse_real, allow_negative_numbers = true)]
    pub phi: f64,
    /// Fractional phase bits, at least the depth floor.
    #[arg(long)]
    pub bits: Option<u64>,
    /// Add a column with the distance to the site-by-site oracle.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GrowthArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, default_value_t = 0.0, value_parser = parse_real, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long)]
    pub bits: Option<u64>,
    /// Fit window `lo:hi` in levels; default the trailing half.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub v: f64,
    #[arg(long, default_value_t = 1e6)]
    pub gamma: f64,
    /// `k_lo:k_hi`: full constants report for an interval.
    #[arg(long, value_parser = parse_interval)]
    pub interval: Option<(f64, f64)>,
    /// Pointwise bounds on a k grid.
    #[arg(long, value_parser = parse_grid)]
    pub k_grid: Option<Grid>,
    /// Reproduce the worked example: v = 1/10, γ = 10⁶, E ∈ [−1.9, 1.9].
    #[arg(long = "example-s5")]
    pub example: bool,
    /// Rows of the example table.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Exact dimension of the random model at this energy.
    #[arg(long, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    /// With --interval, also scan ψ to this depth to detect n₀.
    #[arg(long)]
    pub scan_depth: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 2)]
    pub gamma: u64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub v: f64,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, default_value_t = 500)]
    pub depth: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave out the per-sample records.
    #[arg(long)]
    pub summary: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Partition,
    Binomial,
    Dyadic,
    Covering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Trace,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HausdorffArgs {
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long, value_enum, default_value_t = Family::Linear)]
    pub family: Family,
    /// Linear family slope prefactor β.
    #[arg(long, default_value_t = 1.0, value_parser = parse_real)]
    pub beta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub gamma: f64,
    /// Trace family amplitude.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub v: f64,
    #[arg(long, value_parser = parse_interval, default_value = "1:2")]
    pub interval: (f64, f64),
    /// Partition level n.
    #[arg(long, default_value_t = 3)]
    pub level: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Depth N for dyadic and covering counts.
    #[arg(long, default_value_t = 20)]
    pub depth: u32,
    /// Largest n of the binomial sweep.
    #[arg(long, default_value_t = 60)]
    pub n_max: u64,
    #[arg(long, default_value_t = 0.05)]
    pub eps_step: f64,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    #[arg(long, default_value_t = 0.0)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta2: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c0: f64,
    /// Cross-check dyadic counts by direct enumeration.
    #[arg(long)]
    pub enumerate: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Whole,
    Even,
    Odd,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WholelineArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Half-width: sites 1 − L, …, L.
    #[arg(long = "L", default_value_t = 200)]
    pub l: usize,
    #[arg(long, default_value_t = 0.0, value_parser = parse_real, allow_negative_numbers = true)]
    pub phi: f64,
    /// Emit this matrix in banded text form instead of the spectral check.
    #[arg(long, value_enum)]
    pub banded: Option<Block>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelfcheckArgs {
    /// Comma-separated criterion ids (default: all).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Reals with the shorthands `pi`, `pi/q`, `p*pi`, `sqrtX`, `sqrt(X)`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || format!("cannot read {s:?} as a real number");
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    if let Some(rest) = t.strip_prefix('-') {
        return parse_real(rest).map(|x| -x);
    }
    if let Some(rest) = t.strip_prefix("sqrt") {
        let inner = rest.trim_start_matches('(').trim_end_matches(')');
        return inner.parse::<f64>().map(f64::sqrt).map_err(|_| bad());
    }
    if t == "pi" {
        return Ok(std::f64::consts::PI);
    }
    if let Some(q) = t.strip_prefix("pi/") {
        return q.parse::<f64>().map(|q| std::f64::consts::PI / q).map_err(|_| bad());
    }
    if let Some(p) = t.strip_suffix("*pi").or_else(|| t.strip_suffix("pi")) {
        return p.parse::<f64>().map(|p| p * std::f64::consts::PI).map_err(|_| bad());
    }
    Err(bad())
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:count, got {s:?}"));
    }
    let count: usize = parts[2].parse().map_err(|_| format!("bad count in {s:?}"))?;
    if count == 0 {
        return Err("grid count must be positive".into());
    }
    Ok(Grid { lo: parse_real(parts[0])?, hi: parse_real(parts[1])?, count })
}

pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    Ok((parse_real(a)?, parse_real(b)?))
}

pub fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo = a.parse().map_err(|_| format!("bad window start {a:?}"))?;
    let hi = b.parse().map_err(|_| format!("bad window end {b:?}"))?;
    Ok((lo, hi))
}

/// Flags from a JSON config object, placed before the user's own flags so
/// that the command line wins.
pub fn config_args(value: &serde_json::Value) -> Result<Vec<String>, String> {
    let obj = value.as_object().ok_or("config must be a JSON object")?;
    let mut out = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => out.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Number(n) => out.extend([flag, n.to_string()]),
            serde_json::Value::String(s) => out.extend([flag, s.clone()]),
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                out.extend([flag, joined.join(",")]);
            }
            serde_json::Value::Object(_) => return Err(format!("config key {key:?} has an object value")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_shorthands() {
        assert_eq!(parse_real("sqrt2").unwrap(), 2f64.sqrt());
        assert_eq!(parse_real("pi/4").unwrap(), std::f64::consts::FRAC_PI_4);
        assert_eq!(parse_real("-0.5").unwrap(), -0.5);
        assert_eq!(parse_real("2pi").unwrap(), 2.0 * std::f64::consts::PI);
        assert!(parse_real("two").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.5:2.6:50").unwrap();
        let p = g.points();
        assert_eq!(p.len(), 50);
        assert_eq!(p[0], 0.5);
        assert_eq!(p[49], 2.6);
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn config_flags() {
        let v: serde_json::Value = serde_json::from_str(r#"{"gamma": 3, "k_grid": "1:2:3", "random": true, "only": [1, 2]}"#).unwrap();
        let args = config_args(&v).unwrap();
        assert!(args.windows(2).any(|w| w == ["--gamma", "3"]));
        assert!(args.windows(2).any(|w| w == ["--k-grid", "1:2:3"]));
        assert!(args.contains(&"--random".to_string()));
        assert!(args.windows(2).any(|w| w == ["--only", "1,2"]));
    }
}
