use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pointvoxel_cli::bench::{
    bench_ball_query, bench_knn, BallBenchParams, BallBenchReport, KnnBenchParams, KnnBenchReport,
    KnnMode,
};
use pointvoxel_cli::config::{PipelineConfig, SceneSpec};
use pointvoxel_cli::io::csv::{read_boxes_csv, write_boxes_csv, write_report_csv};
use pointvoxel_cli::io::pcb::{read_pcb, write_pcb};
use pointvoxel_cli::pipeline::{report_rows, run_pipeline};
use pointvoxel_cli::scene::gen_scene;
use pointvoxel_core::augment::AugmentationRecord;

#[derive(Parser)]
#[command(
    name = "pointvoxel",
    about = "Synthetic scenes, point-voxel fusion pipeline, and neighbor-query benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene and write it as a PCB point cloud.
    GenScene {
        /// Scene spec file (key=value; see README for keys).
        #[arg(long)]
        spec: PathBuf,
        /// Output point cloud (PCB v1).
        #[arg(long)]
        out: PathBuf,
        /// Where to write the ground-truth boxes CSV (default: alongside --out).
        #[arg(long)]
        boxes_out: Option<PathBuf>,
    },
    /// Run the fusion pipeline on a scene and write a diagnostics report.
    RunPipeline {
        /// Scene point cloud (PCB v1).
        #[arg(long)]
        scene: PathBuf,
        /// Ground-truth boxes CSV.
        #[arg(long)]
        boxes: PathBuf,
        /// Pipeline config file (key=value); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Diagnostics report CSV.
        #[arg(long)]
        report: PathBuf,
    },
    /// Time the range-view ball query against the brute-force baseline.
    BenchBallQuery {
        /// Comma-separated point counts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![25_000, 50_000, 100_000, 200_000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2048)]
        queries: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Report CSV.
        #[arg(long)]
        report: PathBuf,
    },
    /// Time one KNN variant and record its work counters.
    BenchKnn {
        /// brute | voxel | conquer
        #[arg(long)]
        mode: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![25_000, 50_000, 100_000, 200_000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2048)]
        queries: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Report CSV.
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenScene {
            spec,
            out,
            boxes_out,
        } => {
            let spec_text =
                fs::read_to_string(&spec).with_context(|| format!("read {}", spec.display()))?;
            let scene_spec = SceneSpec::from_kv_text(&spec_text)?;
            let (cloud, boxes, _record) = gen_scene(&scene_spec)?;
            write_pcb(&out, &cloud)?;
            let boxes_path = boxes_out.unwrap_or_else(|| out.with_extension("boxes.csv"));
            write_boxes_csv(&boxes_path, &boxes)?;
            println!(
                "scene: {} points, {} boxes -> {} / {}",
                cloud.len(),
                boxes.len(),
                out.display(),
                boxes_path.display()
            );
        }
        Command::RunPipeline {
            scene,
            boxes,
            config,
            report,
        } => {
            let cloud = read_pcb(&scene)?;
            let boxes = read_boxes_csv(&boxes)?;
            let cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("read {}", path.display()))?;
                    PipelineConfig::from_kv_text(&text)?
                }
                None => PipelineConfig::default(),
            };
            let out = run_pipeline(&cloud, &boxes, &AugmentationRecord::new(), &cfg)?;
            let rows: Vec<Vec<String>> = report_rows(&out)
                .into_iter()
                .map(|(k, v)| vec![k, v])
                .collect();
            write_report_csv(&report, "key,value", &rows)?;
            println!(
                "pipeline: {} queries fused in {:.1} ms -> {}",
                out.diagnostics.queries,
                out.diagnostics.wall_ms,
                report.display()
            );
        }
        Command::BenchBallQuery {
            sizes,
            seed,
            queries,
            reps,
            report,
        } => {
            let params = BallBenchParams {
                sizes,
                queries,
                seed,
                reps,
                ..BallBenchParams::default()
            };
            let out = bench_ball_query(&params)?;
            write_report_csv(&report, BallBenchReport::CSV_HEADER, &out.csv_rows())?;
            for r in &out.rows {
                println!(
                    "n={:<7} brute {:>9.2} ms | rv build {:>7.2} + query {:>6.2} ms | speedup {:.1}x ({:.1}x with build) | {:.0} cand/query",
                    r.n,
                    r.brute_ms,
                    r.rv_build_ms,
                    r.rv_query_ms,
                    r.speedup,
                    r.speedup_with_build,
                    r.rv_candidates_per_query
                );
            }
        }
        Command::BenchKnn {
            mode,
            sizes,
            seed,
            queries,
            k,
            window,
            reps,
            report,
        } => {
            let params = KnnBenchParams {
                sizes,
                queries,
                k,
                window,
                mode: KnnMode::parse(&mode)?,
                seed,
                reps,
            };
            let out = bench_knn(&params)?;
            write_report_csv(&report, KnnBenchReport::CSV_HEADER, &out.csv_rows())?;
            for r in &out.rows {
                println!(
                    "n={:<7} {} {:>9.2} ms | {} window scans | {} cells visited",
                    r.n, r.mode, r.time_ms, r.window_scans, r.cells_visited
                );
            }
        }
    }
    Ok(())
}
