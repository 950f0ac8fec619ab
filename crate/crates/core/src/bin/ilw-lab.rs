use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ilw_lab::experiments::{run, Command, ExperimentConfig};
use ilw_lab::{exec, Error};

/// Run ILW / BO experiments and write CSV and JSON artifacts.
///
/// Parameters come from defaults, then the top level of the config file, then
/// its `[command]` section, then `--key value` flags.
#[derive(Parser, Debug)]
#[command(name = "ilw-lab", version)]
struct Cli {
    /// simulate | wave | beta | gronwall | illposed | smoothing | twodepth
    command: String,

    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Parameter overrides as `--key value` pairs, e.g. `--delta 2 --deltas 0.5,1,2`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    params: Vec<String>,
}

fn pairs(raw: &[String]) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(k) = it.next() {
        let key = k
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected `--key`, got `{k}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            continue;
        }
        let v = it.next().ok_or_else(|| Error::Config(format!("missing value for `--{key}`")))?;
        out.push((key.to_string(), v.clone()));
    }
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Contract(_) | Error::Dimension { .. } => 1,
        _ => 2,
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
    if let Some(n) = std::env::var("ILW_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        exec::init_threads(n);
    }
    let result = (|| {
        let command = Command::parse(&cli.command)?;
        let text = cli.config.as_ref().map(std::fs::read_to_string).transpose()?;
        let cfg = ExperimentConfig::resolve(command, text.as_deref(), &pairs(&cli.params)?)?;
        run(command, &cfg).map(|r| (r, cfg))
    })();
    match result {
        Ok((report, cfg)) => {
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {} files to {} in {:.2}s", report.outputs.len(), cfg.output_dir.display(), report.wall_time_s);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
