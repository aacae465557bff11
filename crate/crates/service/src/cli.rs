//! `lumi` command line. Every verb goes through the same [`Engine`] calls
//! as the HTTP service.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use lumi_core::color::{Gamut, LogCurve, UnknownCurve, UnknownGamut};
use lumi_core::frame_io::write_frame;
use lumi_core::synthetic::log_chart;
use serde::Serialize;

use crate::config::{BackendMode, EngineConfig};
use crate::engine::{frame_stats, CreateSession, Engine, EngineError};

#[derive(Debug, Parser)]
#[command(name = "lumi", version, about = "Agentic log-to-display color grading")]
pub struct Cli {
    /// Engine configuration file (TOML).
    #[arg(long, global = true, env = "LUMI_CONFIG")]
    pub config: Option<PathBuf>,
    /// Backend mode; overrides the config file and LUMI_MODE.
    #[arg(long, global = true)]
    pub mode: Option<BackendMode>,
    /// Scripted-mode fixture file.
    #[arg(long, global = true)]
    pub fixture: Option<PathBuf>,
    /// Where session documents live.
    #[arg(long, global = true)]
    pub sessions_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a session from a frame or clip directory and produce the base grade.
    Grade {
        #[arg(long)]
        source: PathBuf,
        /// Camera log curve: slog3, log3g10, logc3, vlog.
        #[arg(long)]
        curve: String,
        #[arg(long)]
        gamut: Option<String>,
        /// Optional creative intent, e.g. "cinematic teal and orange".
        #[arg(long)]
        directive: Option<String>,
    },
    /// Apply one piece of director feedback to a graded session.
    Feedback {
        #[arg(long)]
        session: String,
        text: String,
    },
    /// Write the .cube, CDL XML and report for an iteration.
    Export {
        #[arg(long)]
        session: String,
        #[arg(long)]
        iteration: Option<usize>,
        /// Copy the artifacts here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render every frame of a clip through an iteration's LUT.
    Render {
        #[arg(long)]
        session: String,
        #[arg(long)]
        iteration: Option<usize>,
        #[arg(long)]
        clip: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exposure profile of one camera-log frame.
    Stats {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        curve: String,
        #[arg(long)]
        gamut: Option<String>,
    },
    /// Write a synthetic camera-log test chart (16-bit PNG).
    Chart {
        #[arg(long, default_value = "slog3")]
        curve: String,
        #[arg(long)]
        gamut: Option<String>,
        #[arg(long, default_value_t = 1920)]
        width: usize,
        #[arg(long, default_value_t = 1080)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a session's search tree.
    Tree {
        #[arg(long)]
        session: String,
    },
    /// Print a session's state.
    State {
        #[arg(long)]
        session: String,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

pub fn load_config(cli: &Cli) -> anyhow::Result<EngineConfig> {
    let cfg = match &cli.config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    };
    let mut cfg = cfg.with_env()?;
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(f) = &cli.fixture {
        cfg.fixture = Some(f.clone());
        if cli.mode.is_none() {
            cfg.mode = BackendMode::Scripted;
        }
    }
    if let Some(d) = &cli.sessions_dir {
        cfg.sessions_dir = d.clone();
    }
    Ok(cfg)
}

fn print<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("output serializes"));
}

#[derive(Debug, thiserror::Error)]
#[error("{code}: {message}")]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        Self { code: e.code(), message: e.to_string() }
    }
}

/// Runs one command; returns the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    if let Command::Stats { source, curve, gamut } = &cli.command {
        print(&frame_stats(source, curve, gamut.as_deref()).map_err(CliError::from)?);
        return Ok(0);
    }
    if let Command::Chart { curve, gamut, width, height, out } = &cli.command {
        let c: LogCurve = curve.parse().map_err(|e: UnknownCurve| CliError { code: "unknown_curve", message: e.to_string() })?;
        let g = match gamut {
            Some(g) => g.parse().map_err(|e: UnknownGamut| CliError { code: "unknown_gamut", message: e.to_string() })?,
            None => Gamut::native_for(c),
        };
        write_frame(out, &log_chart(c, g, *width, *height))?;
        print(&serde_json::json!({"written": out, "curve": c, "gamut": g}));
        return Ok(0);
    }
    let engine = Engine::new(load_config(&cli)?).map_err(CliError::from)?;
    match cli.command {
        Command::Grade { source, curve, gamut, directive } => {
            let view = engine.create_session(&CreateSession { source, curve, gamut, directive }).map_err(CliError::from)?;
            print(&engine.grade(&view.id).map_err(CliError::from)?);
        }
        Command::Feedback { session, text } => print(&engine.feedback(&session, &text).map_err(CliError::from)?),
        Command::Export { session, iteration, out } => {
            let a = engine.export(&session, iteration).map_err(CliError::from)?;
            let mut paths = vec![a.cube_path.clone(), a.cdl_path.clone(), a.report_path.clone()];
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                for p in paths.iter_mut() {
                    let dest = dir.join(p.file_name().expect("artifact has a file name"));
                    std::fs::copy(&*p, &dest)?;
                    *p = dest;
                }
            }
            print(&serde_json::json!({"iteration": a.iteration, "files": paths}));
        }
        Command::Render { session, iteration, clip, out } => {
            let report = engine.render(&session, iteration, &clip, &out).map_err(CliError::from)?;
            print(&report);
            if !report.ok() {
                return Ok(2);
            }
        }
        Command::Tree { session } => print(&engine.tree(&session).map_err(CliError::from)?),
        Command::State { session } => print(&engine.state(&session).map_err(CliError::from)?),
        Command::Serve { addr } => {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::http::serve(Arc::new(engine), addr))?;
        }
        Command::Stats { .. } | Command::Chart { .. } => unreachable!("handled above"),
    }
    Ok(0)
}
