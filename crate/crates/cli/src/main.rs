// negated float comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod manifest;
mod run;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, FromArgMatches};
use serde_json::json;

use args::{config_args, Cli, Command};
use manifest::{manifest_path, sha256_hex, Cache, RunManifest};
use run::{execute, params_of, CliError};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn log(event: &str, fields: serde_json::Value) {
    let mut obj = json!({ "event": event });
    if let (Some(o), Some(f)) = (obj.as_object_mut(), fields.as_object()) {
        o.extend(f.clone());
    }
    eprintln!("{obj}");
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", json!({ "error": e.kind(), "message": e.message() }));
    ExitCode::from(e.exit_code() as u8)
}

/// Splice flags from `--config FILE` in right after the subcommand name, so
/// that anything given on the command line overrides them.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let (path, span) = match argv[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (argv.get(pos + 1).cloned().ok_or_else(|| CliError::Usage("--config needs a file".into()))?, 2),
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let extra = config_args(&value).map_err(CliError::Usage)?;
    let mut out: Vec<String> = argv[..pos].to_vec();
    out.extend(argv[pos + span..].iter().cloned());
    // argv[0] is the binary, argv[1] the subcommand
    let at = 2.min(out.len());
    out.splice(at..at, extra);
    Ok(out)
}

fn parse(argv: &[String]) -> Result<Cli, clap::Error> {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    let matches = cmd.try_get_matches_from(argv.iter().map(OsString::from))?;
    Cli::from_arg_matches(&matches)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Run one command; returns whether acceptance criteria held.
fn run_command(command: &Command, argv: &[String]) -> Result<bool, CliError> {
    let common = command.common().expect("replay is dispatched separately");
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let start = Instant::now();
    let (params, inputs) = params_of(command)?;
    let key_material = json!({ "command": command.name(), "params": params, "version": VERSION, "inputs": inputs });
    let input_hash = sha256_hex(key_material.to_string().as_bytes());
    log("start", json!({ "command": command.name(), "input_hash": input_hash }));

    let cache = match command {
        Command::Selfcheck(_) => None,
        _ => Cache::from_env(),
    };
    let cached = cache.as_ref().and_then(|c| c.get(&input_hash));
    let cache_state = match (&cache, &cached) {
        (None, _) => "off",
        (Some(_), Some(_)) => "hit",
        (Some(_), None) => "miss",
    };
    let (bytes, jobs, failed) = match cached {
        Some((bytes, jobs)) => (bytes, jobs, false),
        None => {
            let outcome = execute(command)?;
            if let (Some(c), true) = (&cache, outcome.cacheable) {
                if let Err(e) = c.put(&input_hash, &outcome.bytes, &outcome.jobs) {
                    log("cache_write_failed", json!({ "message": e.to_string() }));
                }
            }
            (outcome.bytes, outcome.jobs, outcome.failed)
        }
    };
    write_output(common.out.as_deref(), &bytes)?;

    let manifest = RunManifest {
        command: command.name().into(),
        argv: argv.to_vec(),
        params,
        tool_version: VERSION.into(),
        input_hash,
        output: common.out.as_ref().map_or_else(|| "-".into(), |p| p.display().to_string()),
        output_sha256: sha256_hex(&bytes),
        wall_time_s: start.elapsed().as_secs_f64(),
        cache: cache_state.into(),
        jobs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    match &common.out {
        Some(p) => {
            let mp = manifest_path(p);
            fs::write(&mp, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", mp.display())))?;
        }
        None => eprintln!("{}", json!({ "event": "manifest", "manifest": manifest })),
    }
    log("done", json!({ "wall_time_s": manifest.wall_time_s, "cache": cache_state, "failed": failed }));
    Ok(!failed)
}

/// Re-run the argv recorded in a manifest and compare output hashes.
fn replay(path: &Path) -> Result<bool, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let recorded: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let exe = std::env::current_exe()?;
    let dir = tempfile_dir()?;
    let out = dir.join("replay.out");
    let mut child = std::process::Command::new(exe);
    // strip any --out so the replay writes to a scratch file
    let mut args = Vec::new();
    let mut skip = false;
    for a in recorded.argv.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if !a.starts_with("--out=") {
            args.push(a.clone());
        }
    }
    args.push("--out".into());
    args.push(out.display().to_string());
    let status = child.args(&args).env_remove(manifest::CACHE_ENV).status()?;
    let bytes = fs::read(&out);
    let _ = fs::remove_dir_all(&dir);
    if !status.success() {
        return Err(CliError::Usage(format!("replayed command exited with {status}")));
    }
    let got = sha256_hex(&bytes?);
    let same = got == recorded.output_sha256;
    println!("{}", json!({ "replay": path.display().to_string(), "expected": recorded.output_sha256, "got": got, "match": same }));
    Ok(same)
}

fn tempfile_dir() -> Result<std::path::PathBuf, CliError> {
    let dir = std::env::temp_dir().join(format!("spectral-lab-replay-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let argv = match expand_config(raw) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(&CliError::Usage(e.kind().to_string() + ": " + e.to_string().trim()));
        }
    };
    let result = match &cli.command {
        Command::Replay(r) => replay(&r.manifest),
        command => run_command(command, &argv),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => fail(&e),
    }
}
