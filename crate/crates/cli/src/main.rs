use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mtmct::config::{ConfigError, PipelineConfig};
use mtmct::formats::clm::{read_clm, write_clm};
use mtmct::formats::embeddings::read_embeddings;
use mtmct::formats::results::{read_results, write_results};
use mtmct::formats::tracks::{attach_embeddings, read_tracks, write_tracks};
use mtmct::formats::zones::{read_zones, write_zones};
use mtmct::formats::FormatError;
use mtmct::pipeline::{
    qualify_per_camera, run_clm, run_track, run_tsct, discover_all_zones, TrackOptions,
};
use mtmct::scenario::{generate_scenario, write_scenario, ScenarioConfig, ScenarioError};

use mtmct_core::metrics::{clear_mot, id_measures};

#[derive(Parser)]
#[command(
    name = "mtmct",
    about = "Offline multi-target multi-camera vehicle tracking pipeline",
    version
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug); MTMCT_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic scenario directory.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        cameras: u32,
        #[arg(long, default_value_t = 20)]
        vehicles: u32,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        /// Per-frame Gaussian noise on appearance features.
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        /// Probability of a stop-light track break per camera transit.
        #[arg(long, default_value_t = 0.0)]
        fragmentation: f64,
        #[arg(long, default_value_t = 40)]
        headway: u32,
        #[arg(long, default_value_t = 50)]
        hop_min: u32,
        #[arg(long, default_value_t = 70)]
        hop_max: u32,
        /// Occlusion length of a stop, frames.
        #[arg(long, default_value_t = 25)]
        dwell: u32,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Discover zones from a tracks file.
    Zones {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-link fragmented tracks through traffic-aware zones.
    Tsct {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build the camera link model from identity-labeled tracks.
    Clm {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// CSV mapping (camera_id, local_id) to global identities.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out_zones: PathBuf,
        #[arg(long)]
        out_clm: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Full pipeline: re-link, classify, associate, emit results.
    Track {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Model zones produced by `clm`.
        #[arg(long)]
        zones: PathBuf,
        #[arg(long)]
        clm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Skip single-camera re-linking.
        #[arg(long)]
        no_tsct: bool,
        /// Associate on appearance alone, without link-model filtering.
        #[arg(long)]
        no_clm_filter: bool,
    },
    /// Score a results file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Score identities per camera instead of globally.
        #[arg(long)]
        sct: bool,
        /// Also write the report as machine-readable CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the default configuration with documentation.
    Config {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, ConfigError> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth {
            seed,
            cameras,
            vehicles,
            dim,
            sigma,
            fragmentation,
            headway,
            hop_min,
            hop_max,
            dwell,
            out_dir,
        } => {
            let cfg = ScenarioConfig {
                seed,
                cameras,
                vehicles,
                embedding_dim: dim,
                sigma,
                fragmentation,
                headway,
                hop_min,
                hop_max,
                dwell,
                ..ScenarioConfig::default()
            };
            let scenario = generate_scenario(&cfg)?;
            write_scenario(&out_dir, &scenario)?;
            log::info!(
                "scenario: {} tracklets, {} fragmentation events",
                scenario.tracklets.len(),
                scenario.fragmentation_events
            );
            println!("wrote scenario to {}", out_dir.display());
        }
        Command::Zones {
            tracks,
            out,
            config,
        } => {
            let cfg = load_config(&config)?;
            let parsed = read_tracks(&tracks)?;
            let zones = discover_all_zones(&parsed, &cfg)?;
            write_zones(&out, &zones)?;
            println!("wrote {} zones to {}", zones.len(), out.display());
        }
        Command::Tsct {
            tracks,
            embeddings,
            out,
            config,
        } => {
            let cfg = load_config(&config)?;
            let mut parsed = read_tracks(&tracks)?;
            let emb = read_embeddings(&embeddings)?;
            attach_embeddings(&mut parsed, &emb);
            let (linked, merges) = run_tsct(&parsed, &cfg)?;
            let flat: Vec<_> = linked.values().flatten().cloned().collect();
            write_tracks(&out, &flat)?;
            println!(
                "re-linked {} merges; wrote {} tracklets to {}",
                merges.len(),
                flat.len(),
                out.display()
            );
        }
        Command::Clm {
            tracks,
            embeddings,
            labels,
            out_zones,
            out_clm,
            config,
        } => {
            let cfg = load_config(&config)?;
            let mut parsed = read_tracks(&tracks)?;
            let emb = read_embeddings(&embeddings)?;
            attach_embeddings(&mut parsed, &emb);
            let labels = mtmct::formats::results::read_labels(&labels)?;
            let (zones, clm) = run_clm(&parsed, &labels, &cfg)?;
            write_zones(&out_zones, &zones)?;
            write_clm(&out_clm, &clm)?;
            println!(
                "wrote {} zones and {} links",
                zones.len(),
                clm.links.len()
            );
        }
        Command::Track {
            tracks,
            embeddings,
            zones,
            clm,
            out,
            config,
            no_tsct,
            no_clm_filter,
        } => {
            let cfg = load_config(&config)?;
            let mut parsed = read_tracks(&tracks)?;
            let emb = read_embeddings(&embeddings)?;
            attach_embeddings(&mut parsed, &emb);
            let model_zones = read_zones(&zones)?;
            let model = read_clm(&clm)?;
            let opts = TrackOptions {
                use_tsct: !no_tsct,
                use_clm_filter: !no_clm_filter,
            };
            let output = run_track(&parsed, &model_zones, &model, &cfg, &opts)?;
            write_results(&out, &output.results)?;
            println!(
                "{} global identities over {} tracklets ({} candidate pairs); wrote {}",
                output.globals.len(),
                output.tracklets.len(),
                output.finite_pairs,
                out.display()
            );
        }
        Command::Eval {
            gt,
            pred,
            config,
            sct,
            report,
        } => {
            let cfg = load_config(&config)?;
            let mut gt_boxes = read_results(&gt)?;
            let mut pred_boxes = read_results(&pred)?;
            if sct {
                gt_boxes = qualify_per_camera(&gt_boxes);
                pred_boxes = qualify_per_camera(&pred_boxes);
            }
            let id = id_measures(&gt_boxes, &pred_boxes, cfg.eval_delta);
            let clear = clear_mot(&gt_boxes, &pred_boxes, cfg.eval_delta);

            println!("metric            value");
            println!("IDF1            {:>8.4}", id.idf1);
            println!("IDP             {:>8.4}", id.idp);
            println!("IDR             {:>8.4}", id.idr);
            println!("IDTP            {:>8}", id.idtp);
            println!("IDFP            {:>8}", id.idfp);
            println!("IDFN            {:>8}", id.idfn);
            println!("MOTA            {:>8.4}", clear.mota);
            println!("MOTP            {:>8.4}", clear.motp);
            println!("Recall          {:>8.4}", clear.recall);
            println!("MostlyTracked   {:>8}", clear.mostly_tracked);

            if let Some(path) = report {
                use std::io::Write;
                let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
                writeln!(w, "metric,value")?;
                writeln!(w, "idf1,{}", id.idf1)?;
                writeln!(w, "idp,{}", id.idp)?;
                writeln!(w, "idr,{}", id.idr)?;
                writeln!(w, "idtp,{}", id.idtp)?;
                writeln!(w, "idfp,{}", id.idfp)?;
                writeln!(w, "idfn,{}", id.idfn)?;
                writeln!(w, "mota,{}", clear.mota)?;
                writeln!(w, "motp,{}", clear.motp)?;
                writeln!(w, "recall,{}", clear.recall)?;
                writeln!(w, "mostly_tracked,{}", clear.mostly_tracked)?;
            }
        }
        Command::Config { out } => {
            PipelineConfig::default().write(&out)?;
            println!("wrote default configuration to {}", out.display());
        }
    }
    Ok(())
}

/// Categorized exit codes: 65 malformed data, 70 pipeline failure,
/// 78 bad configuration (clap itself exits 2 on usage errors).
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<ConfigError>() || err.is::<ScenarioError>() {
        78
    } else if err.is::<FormatError>() {
        65
    } else {
        70
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter_or("MTMCT_LOG", default_level)
            .write_style("MTMCT_LOG_STYLE"),
    )
    .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{err:#}");
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
