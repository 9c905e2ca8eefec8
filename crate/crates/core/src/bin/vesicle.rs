use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

use vesicle_core::config::{self, Mode, RunConfig};
use vesicle_core::sim::{self, study};
use vesicle_core::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulate,
    Convergence,
    Complexity,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Convergence => Mode::Convergence,
            ModeArg::Complexity => Mode::Complexity,
        }
    }
}

/// Phase-field vesicle growth and shrinkage with a nonlinear multigrid solver.
///
/// Settings are resolved in order: built-in defaults, `--preset`, `--config`,
/// `--set`, then the dedicated flags. The resolved config is written to the
/// run directory as `config.cfg` before anything is computed.
#[derive(Debug, Parser)]
#[command(name = "vesicle", version)]
struct Cli {
    /// Harness to run (overrides the config's `mode`).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Config file in `section.key = value` format.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Named preset shipped with the program (see --list-presets).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Run directory. Defaults to `output.dir`, else `$VESICLE_MG_OUT/<name>`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for studies; 0 uses every core.
    #[arg(long, default_value_t = 1, value_name = "N")]
    jobs: usize,

    /// Steps between field snapshots; 0 writes six evenly spaced ones.
    #[arg(long, value_name = "N")]
    snapshot_stride: Option<usize>,

    /// Steps between diagnostics rows.
    #[arg(long, value_name = "N")]
    diag_stride: Option<usize>,

    /// Override one config key, e.g. `--set grid.m=128`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Print the resolved config to stdout and exit.
    #[arg(long)]
    print_config: bool,

    /// List preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.preset {
        Some(name) => config::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("--config: cannot read {}", path.display()))?;
        cfg.apply_text(&text)
            .with_context(|| format!("--config {}", path.display()))?;
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set: expected KEY=VALUE, got `{kv}`"))?;
        cfg.set(k.trim(), v).context("--set")?;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m.into();
    }
    if let Some(s) = cli.snapshot_stride {
        cfg.output.snapshot_stride = s;
    }
    if let Some(s) = cli.diag_stride {
        cfg.output.diag_stride = s;
    }
    cfg.output.dir = Some(run_dir(cli, &cfg));
    cfg.validate()?;
    Ok(cfg)
}

fn run_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    if let Some(dir) = &cfg.output.dir {
        return dir.clone();
    }
    let root =
        std::env::var_os("VESICLE_MG_OUT").map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    let name = cli
        .preset
        .clone()
        .or_else(|| {
            cli.config
                .as_ref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| cfg.mode.as_str().to_string());
    root.join(name)
}

fn simulate(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let total = cfg.step_count();
    let every = (total / 200).max(1);
    let out = sim::run(cfg, Some(dir), |r| {
        if r.step % every == 0 || r.step == total {
            eprintln!(
                "step {}/{} time {:.6e} residual {:.3e} iterations {}",
                r.step,
                total,
                r.time,
                r.residual_history.last().copied().unwrap_or(f64::NAN),
                r.iterations
            );
        }
    })?;
    if let Some(last) = out.diagnostics.last() {
        eprintln!(
            "done: F_total {:.6e}, B_h {:.6e}, mass {:.12e}, inner {:.4}, outer {:.4}",
            last.f_total, last.b_h, last.total_mass, last.inner_conc, last.outer_conc
        );
    }
    Ok(())
}

fn convergence(cfg: &RunConfig, dir: &Path, jobs: usize) -> Result<()> {
    eprintln!(
        "convergence: {} grids from {}x{}, dt {:e}",
        cfg.study.levels, cfg.grid.m, cfg.grid.n, cfg.time.dt
    );
    let report = study::convergence_study(cfg, jobs)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    fs::write(dir.join("convergence.csv"), &buf)?;
    io::stdout().write_all(&buf)?;
    Ok(())
}

fn complexity(cfg: &RunConfig, dir: &Path, jobs: usize, label: &str) -> Result<()> {
    let cases = study::complexity_cases(label, cfg);
    for (_, c) in &cases {
        eprintln!(
            "complexity: {} on {}x{}, {} steps",
            label,
            c.grid.m,
            c.grid.n,
            c.step_count()
        );
    }
    let rows = study::complexity_study(&cases, jobs)?;
    let mut buf = Vec::new();
    study::write_complexity_csv(&rows, &mut buf)?;
    fs::write(dir.join("complexity.csv"), &buf)?;
    io::stdout().write_all(&buf)?;
    let mut res = Vec::new();
    study::write_complexity_residuals(&rows, &mut res)?;
    fs::write(dir.join("residuals.csv"), &res)?;
    Ok(())
}

fn real_main(cli: Cli) -> Result<()> {
    if cli.list_presets {
        for name in config::preset_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let cfg = resolve(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let dir = cfg.output.dir.clone().expect("resolved");
    ensure_dir(&dir)?;
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("config.cfg"), cfg.to_text())?;
    eprintln!("writing to {}", dir.display());
    if cli.jobs > 1 && cfg.mode == Mode::Simulate {
        eprintln!("note: --jobs has no effect on a single simulation");
    }
    let label = cli.preset.clone().unwrap_or_else(|| "config".to_string());
    match cfg.mode {
        Mode::Simulate => simulate(&cfg, &dir),
        Mode::Convergence => convergence(&cfg, &dir, cli.jobs),
        Mode::Complexity => complexity(&cfg, &dir, cli.jobs, &label),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(e.downcast_ref::<Error>(), Some(Error::NotConverged { .. })) {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        bail!("--out: {} is not a directory", dir.display());
    }
    Ok(())
}
