use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use crawler_core::plant::{self, AnalyticDrive, PlantParams, MIN_CYCLES};
use crawler_service::calibration::{self, CalibrationRow};
use crawler_service::course::{self, WaypointPilot};
use crawler_service::experiments::{self, DEFAULT_TETHER_K, SWEEP_FREQUENCIES};
use crawler_service::protocol::ScriptEntry;
use crawler_service::record::{self, ReplayOptions};
use crawler_service::server::{self, ServeOptions};
use crawler_service::session::{self, CommandSource, Script};
use crawler_service::{DriveMode, SessionConfig};

#[derive(Parser)]
#[command(name = "crawler", version, about = "Crawling soft robot simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the body model and write its trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Simulated seconds.
        #[arg(long, default_value_t = 20.0)]
        duration: f64,
        /// Phase index 0..=3; defaults to the lag in the config.
        #[arg(long)]
        phase: Option<u8>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the live WebSocket server.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long)]
        arena: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20.0)]
        snapshot_hz: f64,
    },
    /// Parameter sweeps over the body model.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run the phase sweep again with the fixed-step integrator.
        #[arg(long)]
        oracle: bool,
    },
    /// Tabulate the oscillator input for each frequency.
    Calibrate {
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a headless session from a command script and record it.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// JSON list of `{tick, mode, phase_n, freq_hz}`; the demo course
        /// pilot is used when omitted.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 3000)]
        ticks: u64,
        #[arg(long)]
        record: PathBuf,
        /// Also write the snapshots as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Verify a session record by re-running it.
    Replay {
        #[arg(long)]
        record: PathBuf,
        /// Simulated seconds per wall second; flat out when omitted.
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    PhaseSweep,
    FreqSweep,
    ForceCorr,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<SessionConfig> {
    match path {
        Some(p) => SessionConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SessionConfig::default()),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().cmd {
        Cmd::Simulate { config, duration, phase, out } => {
            let cfg = load_config(config.as_deref())?;
            let mut p: PlantParams = cfg.plant;
            if let Some(n) = phase {
                if n > 3 {
                    bail!("phase index {n} outside 0..=3");
                }
                p = p.with_phase_index(n);
            }
            let traj = match cfg.drive {
                DriveMode::Analytic => plant::simulate(&p, &AnalyticDrive(p), duration, Default::default())?,
                DriveMode::Valve => {
                    let d = plant::pneumatic::PneumaticDrive::square_wave(
                        p.frequency,
                        p.lag_seconds(),
                        duration + p.period(),
                        cfg.pneumatic,
                        p.rest_length,
                    );
                    plant::simulate(&p, &d, duration, Default::default())?
                }
            };
            traj.write_csv(create(&out)?)?;
            if duration * p.frequency >= MIN_CYCLES {
                log::info!("steady speed {:.4} mm/s", plant::steady_speed(&traj)? * 1e3);
            }
        }
        Cmd::Serve { port, arena, config, snapshot_hz } => {
            let mut cfg = load_config(config.as_deref())?;
            if arena.is_some() {
                cfg.arena = arena;
            }
            let arena = session::load_arena(cfg.arena.as_deref())?;
            let rows = read_calibration(&cfg)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                log::info!("listening on {}", listener.local_addr()?);
                let opts = ServeOptions { snapshot_hz, ..ServeOptions::default() };
                server::serve(listener, cfg, arena, rows, opts).await?;
                anyhow::Ok(())
            })?;
        }
        Cmd::Experiment { kind, out, config, oracle } => {
            let cfg = load_config(config.as_deref())?;
            let w = create(&out)?;
            match kind {
                ExperimentKind::PhaseSweep => {
                    let rows = experiments::phase_sweep(&cfg.plant, &[0, 1, 2, 3], oracle)?;
                    for r in &rows {
                        log::info!("n={} speed {:.4} mm/s ({:.1} ms)", r.n, r.speed_mm_s, r.wall_ms);
                    }
                    experiments::write_csv(w, &rows)?;
                }
                ExperimentKind::FreqSweep => {
                    let sweep = experiments::freq_sweep(&cfg.plant, &cfg.pneumatic, cfg.drive, 1, &SWEEP_FREQUENCIES)?;
                    match sweep.interior_maximum {
                        Some(b) => log::info!("interior maximum: {b}"),
                        None => log::info!("interior maximum: N/A for the analytic drive"),
                    }
                    experiments::write_csv(w, &sweep.rows)?;
                }
                ExperimentKind::ForceCorr => {
                    let fc = experiments::force_correlation(&cfg.plant, &[0, 1, 2, 3], DEFAULT_TETHER_K)?;
                    match fc.r {
                        Some(r) => log::info!("pearson r = {r:.4}"),
                        None => log::info!("pearson r = N/A"),
                    }
                    experiments::write_csv(w, &fc.rows)?;
                }
            }
        }
        Cmd::Calibrate { freqs, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let rows = calibration::calibration_table(&freqs, &cfg.cpg)?;
            calibration::write_table(&out, &rows)?;
            for r in &rows {
                log::info!("{} Hz: m = {:.6}", r.f_hz, r.m);
            }
        }
        Cmd::Run { config, script, ticks, record, csv } => {
            let course_default = script.is_none() && config.is_none();
            let (cfg, mut source): (SessionConfig, Box<dyn CommandSource>) = match script {
                Some(s) => {
                    let entries: Vec<ScriptEntry> = serde_json::from_reader(BufReader::new(File::open(&s)?))?;
                    let events = entries
                        .iter()
                        .map(|e| Ok((e.tick, e.command.to_user().map_err(anyhow::Error::msg)?)))
                        .collect::<anyhow::Result<Vec<_>>>()?;
                    (load_config(config.as_deref())?, Box::new(Script::new(events)))
                }
                None => {
                    let cfg = match config {
                        Some(p) => load_config(Some(&p))?,
                        None => course::course_config(),
                    };
                    (cfg, Box::new(WaypointPilot::for_course()))
                }
            };
            let arena = match (&cfg.arena, course_default) {
                (None, true) => course::three_obstacle_arena(),
                _ => session::load_arena(cfg.arena.as_deref())?,
            };
            let rows = read_calibration(&cfg)?;
            let mut snaps = Vec::new();
            let keep = csv.is_some();
            let summary = record::record_session(cfg, arena, &rows, source.as_mut(), ticks, create(&record)?, |s| {
                if keep {
                    snaps.push(s.clone());
                }
            })?;
            if let Some(path) = csv {
                session::write_snapshot_csv(create(&path)?, &snaps)?;
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Cmd::Replay { record, speed, out } => {
            let input = BufReader::new(File::open(&record)?);
            let mut snaps = Vec::new();
            let summary = record::replay(input, ReplayOptions { speed }, |s| {
                if out.is_some() {
                    snaps.push(s.clone());
                }
            })?;
            if let Some(path) = out {
                let mut w = create(&path)?;
                session::write_snapshot_csv(&mut w, &snaps)?;
                w.flush()?;
            }
            println!(
                "replayed {} ticks in {:.3} s, snapshot sha256 {}",
                summary.ticks,
                summary.wall.as_secs_f64(),
                summary.snapshot_sha256
            );
        }
    }
    Ok(())
}

fn read_calibration(cfg: &SessionConfig) -> anyhow::Result<Vec<CalibrationRow>> {
    match &cfg.calibration {
        Some(p) => Ok(calibration::read_table(p)?),
        None => Ok(Vec::new()),
    }
}
