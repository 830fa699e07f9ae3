//! Command execution: every command turns its arguments into output bytes
//! plus one status entry per job.

use std::fs;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde_json::{json, Value};

use spectral_lab::bounds::{
    dims_ae_phi, dims_all_phi, example_table, interval_constants, random_dimension, ratio_scan, scan_n0,
};
use spectral_lab::export::{fmt_f64, partition_rows, per_barrier_diff, trace_header, trace_rows, write_csv, PARTITION_COLUMNS};
use spectral_lab::growth::{c0, decompose, f_closed, fit_exponents, regime};
use spectral_lab::hausdorff::{
    binomial_tail_check, covering_count, dyadic_enumerate, dyadic_model, measured_deltas, partition_level, CoveringParams,
    PhaseFamily,
};
use spectral_lab::propagate::propagate_naive;
use spectral_lab::random::ensemble_growth;
use spectral_lab::selfcheck::{run_criterion, CRITERIA};
use spectral_lab::wholeline::{banded_text, check_decomposition, finite_matrices, WholeLineSpec};
use spectral_lab::{propagate, EnergyOptions, EnergyPoint, SparseSpec};

use crate::args::*;
use crate::manifest::{sha256_hex, JobStatus};

/// Failure classes, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// A core error: bad domain, precision floor, hypothesis not met.
    Core(spectral_lab::Error),
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "UsageError",
            CliError::Io(_) => "IoError",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
        }
    }
}

impl From<spectral_lab::Error> for CliError {
    fn from(e: spectral_lab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CoreResult<T> = spectral_lab::Result<T>;

/// Output of a command.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub jobs: Vec<JobStatus>,
    /// Set when acceptance criteria failed.
    pub failed: bool,
    /// Whether this result may be served from the cache.
    pub cacheable: bool,
}

/// Parameters echoed into the manifest, plus hashes of any input files.
pub fn params_of(command: &Command) -> Result<(Value, Value), CliError> {
    let params = serde_json::to_value(command).map_err(|e| CliError::Usage(e.to_string()))?;
    let explicit = match command {
        Command::Propagate(a) => a.spec.explicit.as_ref(),
        Command::Growth(a) => a.spec.explicit.as_ref(),
        Command::Wholeline(a) => a.spec.explicit.as_ref(),
        _ => None,
    };
    let inputs = match explicit {
        Some(path) => json!({ "explicit_sha256": sha256_hex(&fs::read(path)?) }),
        None => json!({}),
    };
    Ok((params, inputs))
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Propagate(a) => cmd_propagate(a),
        Command::Growth(a) => cmd_growth(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Hausdorff(a) => cmd_hausdorff(a),
        Command::Wholeline(a) => cmd_wholeline(a),
        Command::Selfcheck(a) => cmd_selfcheck(a),
        Command::Replay(_) => Err(CliError::Usage("replay is handled by the driver".into())),
    }
}

fn read_explicit(path: &std::path::Path) -> Result<SparseSpec, CliError> {
    let text = fs::read_to_string(path)?;
    let mut sites = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        let bad = || CliError::Usage(format!("{}:{}: expected `x amplitude`", path.display(), i + 1));
        if cells.len() != 2 {
            return Err(bad());
        }
        let x: BigUint = cells[0].parse().map_err(|_| bad())?;
        let a: f64 = cells[1].parse().map_err(|_| bad())?;
        sites.push((x, a));
    }
    Ok(SparseSpec::explicit(sites)?)
}

fn build_spec(s: &SpecArgs) -> Result<SparseSpec, CliError> {
    if let Some(path) = &s.explicit {
        return read_explicit(path);
    }
    Ok(if s.random {
        SparseSpec::random(s.v, s.gamma, s.seed, s.sample, s.depth)?
    } else {
        SparseSpec::deterministic(s.v, s.gamma, s.depth)?
    })
}

fn k_values(k: &KArgs) -> Result<(Vec<f64>, bool), CliError> {
    match (k.k, &k.k_grid) {
        (Some(k), None) => Ok((vec![k], false)),
        (None, Some(g)) => Ok((g.points(), true)),
        _ => Err(CliError::Usage("give exactly one of --k or --k-grid".into())),
    }
}

/// Run `f` on every job in parallel; results stay in job order.
fn run_jobs<T: Send>(labels: &[String], f: impl Fn(usize) -> CoreResult<(T, Value)> + Sync + Send) -> Vec<CoreResult<(T, Value)>> {
    (0..labels.len()).into_par_iter().map(f).collect()
}

/// Turn per-job results into outputs and statuses. A lone job's error is the
/// command's error; in a sweep errors are recorded unless `strict`.
fn settle<T>(
    labels: Vec<String>,
    results: Vec<CoreResult<(T, Value)>>,
    sweep: bool,
    strict: bool,
) -> Result<(Vec<T>, Vec<JobStatus>), CliError> {
    let mut outputs = Vec::new();
    let mut jobs = Vec::new();
    for (index, (label, r)) in labels.into_iter().zip(results).enumerate() {
        match r {
            Ok((out, summary)) => {
                outputs.push(out);
                jobs.push(JobStatus { index, label, status: "ok".into(), message: None, summary: Some(summary) });
            }
            Err(e) => {
                if !sweep || strict {
                    return Err(e.into());
                }
                jobs.push(JobStatus {
                    index,
                    label,
                    status: e.kind().into(),
                    message: Some(e.to_string()),
                    summary: None,
                });
            }
        }
    }
    Ok((outputs, jobs))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows)?;
    Ok(buf)
}

fn json_bytes(v: &impl serde::Serialize) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

fn single(bytes: Vec<u8>, summary: Value, label: &str) -> Outcome {
    let job = JobStatus { index: 0, label: label.into(), status: "ok".into(), message: None, summary: Some(summary) };
    Outcome { bytes, jobs: vec![job], failed: false, cacheable: true }
}

fn k_label(k: f64) -> String {
    format!("k={k}")
}

fn energy(spec: &SparseSpec, k: f64, bits: Option<u64>) -> CoreResult<EnergyPoint> {
    EnergyPoint::for_spec_with(spec, k, EnergyOptions { bits, ..EnergyOptions::default() })
}

fn cmd_propagate(a: &PropagateArgs) -> Result<Outcome, CliError> {
    let spec = build_spec(&a.spec)?;
    let (ks, sweep) = k_values(&a.k)?;
    let labels: Vec<String> = ks.iter().map(|&k| k_label(k)).collect();
    let results = run_jobs(&labels, |i| {
        let e = energy(&spec, ks[i], a.bits)?;
        let trace = propagate(&spec, &e, a.phi)?;
        let diff = if a.oracle {
            let last = spec.positions().last().map(|s| s.x.clone()).unwrap_or_default();
            let l = u64::try_from(last + 2u32)
                .map_err(|_| spectral_lab::Error::Size("oracle length does not fit in 64 bits".into()))?;
            Some(per_barrier_diff(&trace, &propagate_naive(&spec, &e, a.phi, l)?.trace))
        } else {
            None
        };
        let max_diff = diff.as_ref().map(|d| d.iter().copied().fold(0.0, f64::max));
        let summary = json!({ "final_ln_r": trace.final_ln_r(), "bits": e.bits(), "max_oracle_diff": max_diff });
        Ok((trace_rows(&trace, diff.as_deref()), summary))
    });
    let (rows, jobs) = settle(labels, results, sweep, a.common.strict)?;
    let bytes = csv_bytes(&trace_header(a.oracle), rows.into_iter().flatten().collect())?;
    Ok(Outcome { bytes, jobs, failed: false, cacheable: true })
}

const GROWTH_COLUMNS: [&str; 13] = [
    "k",
    "v_k",
    "slope",
    "intercept",
    "beta",
    "stderr",
    "window_lo",
    "window_hi",
    "final_ln_r",
    "f_closed",
    "slope_minus_f",
    "max_remainder_ratio",
    "c0",
];

fn cmd_growth(a: &GrowthArgs) -> Result<Outcome, CliError> {
    let spec = build_spec(&a.spec)?;
    let gamma = spec.gamma().unwrap_or(a.spec.gamma) as f64;
    let (ks, sweep) = k_values(&a.k)?;
    let labels: Vec<String> = ks.iter().map(|&k| k_label(k)).collect();
    let results = run_jobs(&labels, |i| {
        let e = energy(&spec, ks[i], a.bits)?;
        let trace = propagate(&spec, &e, a.phi)?;
        let fit = fit_exponents(&trace.ln_r(), a.window, gamma)?;
        let v_k = e.v_k();
        let (ratio, c) = if regime(v_k) < 1.0 {
            (decompose(&trace, v_k)?.max_remainder_ratio(), c0(v_k))
        } else {
            (f64::NAN, f64::NAN)
        };
        let f = f_closed(v_k);
        let row = vec![
            fmt_f64(ks[i]),
            fmt_f64(v_k),
            fmt_f64(fit.slope),
            fmt_f64(fit.intercept),
            fmt_f64(fit.beta),
            fmt_f64(fit.stderr),
            fit.window.0.to_string(),
            fit.window.1.to_string(),
            fmt_f64(trace.final_ln_r()),
            fmt_f64(f),
            fmt_f64(fit.slope - f),
            fmt_f64(ratio),
            fmt_f64(c),
        ];
        Ok((row, json!({ "slope": fit.slope, "f_closed": f })))
    });
    let (rows, jobs) = settle(labels, results, sweep, a.common.strict)?;
    Ok(Outcome { bytes: csv_bytes(&GROWTH_COLUMNS, rows)?, jobs, failed: false, cacheable: true })
}

const EXAMPLE_COLUMNS: [&str; 13] = [
    "e",
    "k",
    "v_k",
    "alpha1",
    "alpha2",
    "centre",
    "corridor",
    "ae_inside",
    "alpha1prime",
    "alpha2prime",
    "all_lo",
    "all_hi",
    "all_inside",
];

const POINTWISE_COLUMNS: [&str; 9] =
    ["k", "v_k", "alpha1", "alpha2", "ae_valid", "eps_k", "alpha1prime", "alpha2prime", "all_valid"];

fn cmd_bounds(a: &BoundsArgs) -> Result<Outcome, CliError> {
    let chosen = [a.example, a.interval.is_some(), a.k_grid.is_some(), a.energy.is_some()].iter().filter(|&&b| b).count();
    if chosen != 1 {
        return Err(CliError::Usage("give exactly one of --example-s5, --interval, --k-grid, --energy".into()));
    }
    if a.example {
        let rows = example_table(0.1, 1e6, -1.9, 1.9, a.count)?;
        let inside = rows.iter().all(|r| r.ae_inside && r.all_inside);
        let cells = rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.e),
                    fmt_f64(r.k),
                    fmt_f64(r.v_k),
                    fmt_f64(r.alpha1),
                    fmt_f64(r.alpha2),
                    fmt_f64(r.centre),
                    fmt_f64(r.corridor),
                    r.ae_inside.to_string(),
                    fmt_f64(r.alpha1prime),
                    fmt_f64(r.alpha2prime),
                    fmt_f64(r.all_lo),
                    fmt_f64(r.all_hi),
                    r.all_inside.to_string(),
                ]
            })
            .collect();
        return Ok(single(csv_bytes(&EXAMPLE_COLUMNS, cells)?, json!({ "rows": rows.len(), "all_inside": inside }), "example"));
    }
    if let Some((lo, hi)) = a.interval {
        let mut report = interval_constants(lo, hi, a.v, a.gamma)?;
        if let Some(depth) = a.scan_depth {
            if a.gamma.fract() != 0.0 {
                return Err(CliError::Usage("--scan-depth needs an integer gamma".into()));
            }
            let corridor = (report.d1_ratio - 0.01, report.d2_ratio + 0.01);
            let scan = ratio_scan(lo, hi, a.v, a.gamma as u64, depth, 200, corridor)?;
            report = report.with_n0(Some(scan_n0(&scan)));
        }
        let summary = json!({ "valid": report.valid });
        return Ok(single(json_bytes(&report)?, summary, &format!("interval={lo}:{hi}")));
    }
    if let Some(e) = a.energy {
        let r = random_dimension(e, a.v, a.gamma)?;
        let out = json!({ "e": e, "v": a.v, "gamma": a.gamma, "dimension": r.dimension, "window": r.window, "in_window": r.in_window });
        return Ok(single(json_bytes(&out)?, json!({ "dimension": r.dimension }), &format!("e={e}")));
    }
    let grid = a.k_grid.expect("checked above");
    let ks = grid.points();
    let labels: Vec<String> = ks.iter().map(|&k| k_label(k)).collect();
    let results = run_jobs(&labels, |i| {
        let k = ks[i];
        if !(k > 0.0 && k < std::f64::consts::PI) {
            return Err(spectral_lab::Error::Domain(format!("k = {k} outside (0, π)")));
        }
        let ae = dims_ae_phi(k, a.v, a.gamma);
        let all = dims_all_phi(k, a.v, a.gamma);
        let row = vec![
            fmt_f64(k),
            fmt_f64(ae.v_k),
            fmt_f64(ae.alpha1),
            fmt_f64(ae.alpha2),
            ae.valid.to_string(),
            fmt_f64(all.eps_k),
            fmt_f64(all.alpha1prime),
            fmt_f64(all.alpha2prime),
            all.valid.to_string(),
        ];
        Ok((row, json!({ "ae_valid": ae.valid, "all_valid": all.valid })))
    });
    let (rows, jobs) = settle(labels, results, true, a.common.strict)?;
    Ok(Outcome { bytes: csv_bytes(&POINTWISE_COLUMNS, rows)?, jobs, failed: false, cacheable: true })
}

fn cmd_ensemble(a: &EnsembleArgs) -> Result<Outcome, CliError> {
    let (ks, sweep) = k_values(&a.k)?;
    let labels: Vec<String> = ks.iter().map(|&k| k_label(k)).collect();
    let results = run_jobs(&labels, |i| {
        let mut r = ensemble_growth(a.v, a.gamma, ks[i], a.depth, a.samples, a.seed)?;
        if a.summary {
            r.samples.clear();
        }
        let summary = json!({ "mean": r.aggregate.mean, "stderr": r.aggregate.stderr, "predicted": r.aggregate.predicted });
        let line = serde_json::to_string(&r).map_err(|e| spectral_lab::Error::Numerical(e.to_string()))?;
        Ok((line, summary))
    });
    let (lines, jobs) = settle(labels, results, sweep, a.common.strict)?;
    let mut bytes = Vec::new();
    for line in lines {
        bytes.extend_from_slice(line.as_bytes());
        bytes.push(b'\n');
    }
    Ok(Outcome { bytes, jobs, failed: false, cacheable: true })
}

fn family_of(a: &HausdorffArgs) -> Result<PhaseFamily, CliError> {
    Ok(match a.family {
        Family::Linear => PhaseFamily::Linear { beta: a.beta, gamma: a.gamma },
        Family::Trace => {
            if a.gamma.fract() != 0.0 || a.gamma < 2.0 {
                return Err(CliError::Usage("the trace family needs an integer gamma >= 2".into()));
            }
            PhaseFamily::Trace { v: a.v, gamma: a.gamma as u64 }
        }
    })
}

fn cmd_hausdorff(a: &HausdorffArgs) -> Result<Outcome, CliError> {
    match a.task {
        Task::Partition => {
            let family = family_of(a)?;
            let level = partition_level(&family, a.interval, a.level, a.rel_tol)?;
            let phase = family.level(a.level)?;
            let deltas = match family {
                PhaseFamily::Linear { .. } => (0.0, 0.0),
                PhaseFamily::Trace { .. } => measured_deltas(&level, &phase, 200)?,
            };
            let bracket = level.check_bracket(deltas.0, deltas.1);
            let summary = json!({ "zeros": level.zeros.len(), "deltas": deltas, "bracket": bracket });
            Ok(single(csv_bytes(&PARTITION_COLUMNS, partition_rows(&level))?, summary, &format!("n={}", a.level)))
        }
        Task::Binomial => {
            if !(a.eps_step > 0.0) {
                return Err(CliError::Usage("--eps-step must be positive".into()));
            }
            let steps = (0.5 / a.eps_step + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=steps).map(|i| a.eps_step * i as f64).collect();
            let tail = binomial_tail_check(1..=a.n_max, &grid)?;
            Ok(single(json_bytes(&tail)?, json!({ "max_ratio": tail.max_ratio }), "binomial"))
        }
        Task::Dyadic => {
            let d = dyadic_model(a.eps, a.depth)?;
            let enumerated = if a.enumerate { Some(dyadic_enumerate(a.eps, a.depth)?) } else { None };
            let out = json!({ "model": d, "enumerated": enumerated });
            let agrees = enumerated.map(|(s, n)| s == d.strict && n == d.non_strict);
            Ok(single(json_bytes(&out)?, json!({ "strict": d.strict, "enumeration_agrees": agrees }), "dyadic"))
        }
        Task::Covering => {
            let params = CoveringParams {
                family: family_of(a)?,
                interval: a.interval,
                eps: a.eps,
                depth: a.depth,
                p: a.p,
                i: a.i,
                delta1: a.delta1,
                delta2: a.delta2,
                c0: a.c0,
            };
            let r = covering_count(&params)?;
            let summary = json!({ "certifies": r.certifies, "alpha_eps": r.alpha_eps });
            Ok(single(json_bytes(&r)?, summary, "covering"))
        }
    }
}

fn cmd_wholeline(a: &WholelineArgs) -> Result<Outcome, CliError> {
    let spec = WholeLineSpec::new(build_spec(&a.spec)?, a.phi);
    let m = finite_matrices(&spec, a.l)?;
    if let Some(block) = a.banded {
        let matrix = match block {
            Block::Whole => &m.whole,
            Block::Even => &m.even,
            Block::Odd => &m.odd,
        };
        return Ok(single(banded_text(matrix).into_bytes(), json!({ "size": matrix.nrows() }), "banded"));
    }
    let c = check_decomposition(&m);
    let out = json!({
        "L": a.l,
        "phi": a.phi,
        "agrees_1e-10": c.agrees(1e-10),
        "max_diff": c.max_diff,
        "max_projection_residual": c.max_projection_residual,
        "near_degenerate": c.near_degenerate,
        "whole": c.whole,
        "union": c.union,
    });
    let summary = json!({ "max_diff": c.max_diff, "agrees": c.agrees(1e-10) });
    Ok(single(json_bytes(&out)?, summary, &format!("L={}", a.l)))
}

fn cmd_selfcheck(a: &SelfcheckArgs) -> Result<Outcome, CliError> {
    let ids: Vec<u8> = if a.only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { a.only.clone() };
    let mut bytes = Vec::new();
    let mut jobs = Vec::new();
    let mut failed = false;
    for (index, id) in ids.into_iter().enumerate() {
        let o = run_criterion(id)?;
        failed |= !o.passed;
        bytes.extend_from_slice(o.line().as_bytes());
        bytes.push(b'\n');
        jobs.push(JobStatus {
            index,
            label: format!("criterion {id}: {}", o.name),
            status: if o.passed { "ok".into() } else { "FAIL".into() },
            message: (!o.passed).then(|| o.detail.clone()),
            summary: Some(serde_json::to_value(&o).unwrap_or(Value::Null)),
        });
    }
    Ok(Outcome { bytes, jobs, failed, cacheable: false })
}
