use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stagecut_cli::bench::cmd_bench;
use stagecut_cli::compare::compare;
use stagecut_cli::inputs::{self, FlagOverrides};
use stagecut_cli::run::{cmd_run, Mode, RunArgs};
use stagecut_cli::synth::{self, SceneSpec};
use stagecut_cli::{CliError, Result};
use stagecut_core::ingest;

#[derive(Parser)]
#[command(name = "stagecut", version, about = "Gaze-driven virtual camera editing of stage recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Edit a clip and write the EDL, runs, report and manifest.
    Run {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        gaze: Option<PathBuf>,
        #[arg(long)]
        speakers: Option<PathBuf>,
        /// Clip description; defaults to clip.json beside the tracks.
        #[arg(long)]
        clip: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "realtime")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Look-ahead in frames.
        #[arg(long)]
        lookahead: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// EDL to report the match rate against.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Also write every shot's crops to rushes.csv.
        #[arg(long)]
        rushes: bool,
        /// Also write raw and smoothed crop paths to trajectory.csv.
        #[arg(long)]
        trajectory: bool,
    },
    /// Compare two EDL files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure filter and full-pipeline throughput on a synthetic scene.
    Bench {
        #[arg(long, default_value_t = 3)]
        actors: usize,
        #[arg(long, default_value_t = 2000)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        lookahead: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write a seeded synthetic scene: clip, tracks, gaze and speakers.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        actors: usize,
        #[arg(long, default_value_t = 2000)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        users: usize,
        /// Watch script in the speakers CSV format; random when absent.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve live editing sessions over WebSocket.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory of fixtures, one sub-directory per fixture.
        #[arg(long)]
        fixtures: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            tracks,
            gaze,
            speakers,
            clip,
            params,
            mode,
            out,
            lookahead,
            alpha,
            reference,
            rushes,
            trajectory,
        } => {
            let report = cmd_run(&RunArgs {
                tracks,
                gaze,
                speakers,
                clip,
                params,
                mode,
                out,
                flags: FlagOverrides { lookahead, alpha },
                reference,
                dump_rushes: rushes,
                dump_trajectory: trajectory,
            })?;
            println!("{}", pretty(&report));
        }
        Command::Compare { a, b, out } => {
            let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| CliError::io(p, e));
            let (sa, sb) = (read(&a)?, read(&b)?);
            // Only frame indices and shot ids matter here.
            let clip = stagecut_core::model::ClipInfo::new(1.0, 1.0, 1.0, 1)?;
            let ea = ingest::parse_edl(&sa, &clip).map_err(|e| e.in_file(&a))?;
            let eb = ingest::parse_edl(&sb, &clip).map_err(|e| e.in_file(&b))?;
            let body = pretty(&compare(&ea, &eb)?);
            match out {
                Some(p) => std::fs::write(&p, body + "\n").map_err(|e| CliError::io(&p, e))?,
                None => println!("{body}"),
            }
        }
        Command::Bench {
            actors,
            frames,
            seed,
            params,
            lookahead,
            alpha,
        } => {
            let spec = SceneSpec::new(seed, actors, frames);
            let flags = FlagOverrides { lookahead, alpha };
            let report = cmd_bench(&spec, |clip| Ok(inputs::load_params(params.as_deref(), flags, clip)?.0))?;
            println!("{}", pretty(&report));
        }
        Command::Synth {
            seed,
            actors,
            frames,
            users,
            script,
            out,
        } => {
            let spec = SceneSpec {
                users,
                ..SceneSpec::new(seed, actors, frames)
            };
            let scene = match script {
                Some(p) => synth::generate_with_script(&spec, inputs::load_speakers(&p)?)?,
                None => synth::generate(&spec)?,
            };
            synth::write_scene(&scene, &out)?;
        }
        Command::Serve { addr, fixtures } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(&fixtures, e))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| CliError::io(std::path::Path::new(&addr), e))?;
                tracing::info!(addr = %addr, "listening");
                let registry = stagecut_gateway::FixtureRegistry::open(&fixtures)?;
                stagecut_gateway::serve(listener, registry)
                    .await
                    .map_err(|e| CliError::io(std::path::Path::new(&addr), e))
            })?;
        }
    }
    Ok(())
}
