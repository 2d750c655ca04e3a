//! Benchmark and experiment harness for the sparsekit solvers.

mod experiment;
mod report;

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use experiment::{
    default_workers, run_experiment_on, spmv_bench, AmgParams, CoarseningArg, FormatKind,
    InterpolationArg, MatrixSource, PrecondKind, SmootherArg, SolveParams, SolverKind,
    SpmvBenchParams,
};
use report::{print_rows, read_csv_rows, read_json_rows, write_reports, ReportMeta, ReportRow};
use sparsekit::sparse::{poisson3d, write_matrix_market};

#[derive(Parser)]
#[command(
    name = "sparsekit",
    version,
    about = "Sparse solver experiments: SpMV formats, RAS-ILU(k) Krylov solves, AMG"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a 7-point Poisson matrix and write it as Matrix Market.
    GenPoisson {
        /// Grid shape: N or NX,NY,NZ.
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        /// Output path (.mtx).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print size, nonzero, and symmetry facts about matrices.
    Info {
        /// Matrix Market files.
        files: Vec<PathBuf>,
        /// Also inspect a generated Poisson matrix: N or NX,NY,NZ.
        #[arg(long, value_parser = parse_grid)]
        poisson: Option<Grid>,
    },
    /// Time SpMV throughput per storage format and worker count.
    SpmvBench {
        /// Matrix Market files.
        files: Vec<PathBuf>,
        /// Additionally bench a generated Poisson matrix: N or NX,NY,NZ.
        #[arg(long, value_parser = parse_grid)]
        poisson: Option<Grid>,
        /// Formats to bench.
        #[arg(long, value_delimiter = ',', default_values = ["csr", "hec"])]
        formats: Vec<FormatKind>,
        #[command(flatten)]
        common: CommonRunArgs,
        /// ELL width cap for the HEC conversion.
        #[arg(long, default_value_t = 20)]
        ell_width_cap: usize,
        /// ELL stride rounding unit.
        #[arg(long, default_value_t = 32)]
        stride_unit: usize,
    },
    /// Run one solver configuration.
    Solve {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value_t = SolverKind::Bicgstab)]
        solver: SolverKind,
        #[arg(long, value_enum, default_value_t = PrecondKind::RasIlu)]
        precond: PrecondKind,
        /// ILU fill level k.
        #[arg(long, default_value_t = 0)]
        fill_level: usize,
        #[arg(long, default_value_t = 1)]
        outer_parts: usize,
        #[arg(long, default_value_t = 8)]
        inner_parts: usize,
        #[arg(long, default_value_t = 0)]
        outer_overlap: usize,
        #[arg(long, default_value_t = 0)]
        inner_overlap: usize,
        #[command(flatten)]
        amg: AmgArgs,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value_t = 1000)]
        max_iterations: usize,
        /// GMRES cycle length.
        #[arg(long, default_value_t = 30)]
        restart: usize,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Run a grid of RAS-ILU(k) Krylov experiments.
    Grid {
        #[command(flatten)]
        source: SourceArgs,
        /// Solvers to run the grid with.
        #[arg(long, value_delimiter = ',', default_values = ["bicgstab", "gmres"])]
        solvers: Vec<SolverKind>,
        /// Outer partition counts; with --inner forms a cartesian grid.
        /// Without both, the default six (outer, inner) pairs are
        /// (1,8) (2,8) (3,8) (4,8) (4,128) (4,1024).
        #[arg(long, value_delimiter = ',')]
        outer: Vec<usize>,
        /// Inner partition counts.
        #[arg(long, value_delimiter = ',')]
        inner: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values = ["0"])]
        outer_overlaps: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values = ["0"])]
        inner_overlaps: Vec<usize>,
        /// ILU fill levels k.
        #[arg(long, value_delimiter = ',', default_values = ["0", "1", "2", "3"])]
        fill_levels: Vec<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value_t = 1000)]
        max_iterations: usize,
        #[arg(long, default_value_t = 30)]
        restart: usize,
        #[command(flatten)]
        common: CommonRunArgs,
    },
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Matrix Market file with the system matrix.
    #[arg(long, conflicts_with = "poisson")]
    matrix: Option<PathBuf>,
    /// Generate the matrix instead: N or NX,NY,NZ.
    #[arg(long, value_parser = parse_grid)]
    poisson: Option<Grid>,
}

impl SourceArgs {
    fn to_source(&self) -> anyhow::Result<MatrixSource> {
        match (&self.matrix, &self.poisson) {
            (Some(p), None) => Ok(MatrixSource::File(p.clone())),
            (None, Some(g)) => Ok(MatrixSource::Poisson(g.0, g.1, g.2)),
            _ => bail!("exactly one of --matrix or --poisson is required"),
        }
    }
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Worker counts to sweep (default: 1 and all cores).
    #[arg(long, value_delimiter = ',')]
    workers: Vec<usize>,
    /// Seed for all randomized pieces (CLJP weights, bench vectors).
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Report prefix; writes <prefix>.json and <prefix>.csv.
    #[arg(short, long, default_value = "report")]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct AmgArgs {
    #[arg(long = "amg-coarsening", value_enum, default_value_t = CoarseningArg::Rs)]
    coarsening: CoarseningArg,
    #[arg(long = "amg-interpolation", value_enum, default_value_t = InterpolationArg::Direct)]
    interpolation: InterpolationArg,
    #[arg(long = "amg-smoother", value_enum, default_value_t = SmootherArg::DampedJacobi)]
    smoother: SmootherArg,
    #[arg(long = "amg-theta", default_value_t = 0.25)]
    theta: f64,
    #[arg(long = "amg-max-levels", default_value_t = 8)]
    max_levels: usize,
    #[arg(long, default_value_t = 3)]
    pre_sweeps: usize,
    #[arg(long, default_value_t = 3)]
    post_sweeps: usize,
}

impl AmgArgs {
    fn to_params(&self) -> AmgParams {
        AmgParams {
            coarsening: self.coarsening,
            interpolation: self.interpolation,
            smoother: self.smoother,
            theta: self.theta,
            max_levels: self.max_levels,
            pre_sweeps: self.pre_sweeps,
            post_sweeps: self.post_sweeps,
        }
    }
}

#[derive(Copy, Clone, Debug)]
struct Grid(usize, usize, usize);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split([',', 'x']).collect();
    let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse()).collect();
    match nums.map_err(|e| format!("bad grid '{s}': {e}"))?.as_slice() {
        [n] => Ok(Grid(*n, *n, *n)),
        [nx, ny, nz] => Ok(Grid(*nx, *ny, *nz)),
        _ => Err(format!("bad grid '{s}': expected N or NX,NY,NZ")),
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::GenPoisson { grid, output } => {
            let a = poisson3d(grid.0, grid.1, grid.2)?;
            write_matrix_market(&output, &a)
                .with_context(|| format!("writing {}", output.display()))?;
            println!(
                "wrote {} ({} rows, {} nonzeros)",
                output.display(),
                a.n_rows(),
                a.nnz()
            );
            Ok(())
        }
        Cmd::Info { files, poisson } => {
            let mut sources: Vec<MatrixSource> =
                files.into_iter().map(MatrixSource::File).collect();
            if let Some(g) = poisson {
                sources.push(MatrixSource::Poisson(g.0, g.1, g.2));
            }
            for source in sources {
                match source.load() {
                    Ok(a) => {
                        let symmetric = a.is_square() && a.is_symmetric(0.0);
                        println!(
                            "{}: {} x {}, {} nonzeros, {:.2} per row, symmetric: {}",
                            source.label(),
                            a.n_rows(),
                            a.n_cols(),
                            a.nnz(),
                            a.nnz() as f64 / a.n_rows().max(1) as f64,
                            symmetric,
                        );
                    }
                    Err(e) => println!("{}: error: {e}", source.label()),
                }
            }
            Ok(())
        }
        Cmd::SpmvBench {
            files,
            poisson,
            formats,
            common,
            ell_width_cap,
            stride_unit,
        } => {
            let mut sources: Vec<MatrixSource> =
                files.into_iter().map(MatrixSource::File).collect();
            if let Some(g) = poisson {
                sources.push(MatrixSource::Poisson(g.0, g.1, g.2));
            }
            let params = SpmvBenchParams {
                formats,
                workers: common.workers.clone(),
                ell_width_cap,
                stride_unit,
                seed: common.seed,
            };
            let rows = spmv_bench(&sources, &params);
            finish("spmv-bench", &common, rows)
        }
        Cmd::Solve {
            source,
            solver,
            precond,
            fill_level,
            outer_parts,
            inner_parts,
            outer_overlap,
            inner_overlap,
            amg,
            tolerance,
            max_iterations,
            restart,
            common,
        } => {
            let src = source.to_source()?;
            let params = SolveParams {
                solver,
                precond,
                fill_level,
                outer_parts,
                inner_parts,
                outer_overlap,
                inner_overlap,
                amg: amg.to_params(),
                tolerance,
                max_iterations,
                restart,
                workers: effective_workers(&common),
                seed: common.seed,
            };
            let rows = experiment::run_experiment(&src, &params);
            finish("solve", &common, rows)
        }
        Cmd::Grid {
            source,
            solvers,
            outer,
            inner,
            outer_overlaps,
            inner_overlaps,
            fill_levels,
            tolerance,
            max_iterations,
            restart,
            common,
        } => {
            let src = source.to_source()?;
            let a = match src.load() {
                Ok(a) => a,
                Err(e) => {
                    // a missing matrix fails every cell; one structured row
                    let row = ReportRow {
                        matrix: src.label(),
                        solver: "grid".to_string(),
                        preconditioner: "ras-ilu".to_string(),
                        seed: common.seed,
                        error: Some(e.to_string()),
                        ..Default::default()
                    };
                    return finish("grid", &common, vec![row]);
                }
            };
            let pairs: Vec<(usize, usize)> = if outer.is_empty() && inner.is_empty() {
                vec![(1, 8), (2, 8), (3, 8), (4, 8), (4, 128), (4, 1024)]
            } else {
                let outer = if outer.is_empty() { vec![1] } else { outer };
                let inner = if inner.is_empty() { vec![8] } else { inner };
                outer
                    .iter()
                    .flat_map(|&o| inner.iter().map(move |&i| (o, i)))
                    .collect()
            };
            let workers = effective_workers(&common);
            let mut rows = Vec::new();
            let label = src.label();
            for &solver in &solvers {
                for &(outer_parts, inner_parts) in &pairs {
                    for &outer_overlap in &outer_overlaps {
                        for &inner_overlap in &inner_overlaps {
                            for &fill_level in &fill_levels {
                                let params = SolveParams {
                                    solver,
                                    precond: PrecondKind::RasIlu,
                                    fill_level,
                                    outer_parts,
                                    inner_parts,
                                    outer_overlap,
                                    inner_overlap,
                                    amg: AmgParams::default(),
                                    tolerance,
                                    max_iterations,
                                    restart,
                                    workers: workers.clone(),
                                    seed: common.seed,
                                };
                                rows.extend(run_experiment_on(&a, &label, &params));
                            }
                        }
                    }
                }
            }
            finish("grid", &common, rows)
        }
    }
}

fn effective_workers(common: &CommonRunArgs) -> Vec<usize> {
    if common.workers.is_empty() {
        default_workers()
    } else {
        common.workers.clone()
    }
}

fn finish(command: &str, common: &CommonRunArgs, rows: Vec<ReportRow>) -> anyhow::Result<()> {
    print_rows(&rows);
    let meta = ReportMeta::new(command, common.seed);
    let (json, csv) = write_reports(&common.output, meta, &rows)?;
    // both files must round-trip to the same rows
    let from_json = read_json_rows(&json)?;
    let from_csv = read_csv_rows(&csv)?;
    if from_json != rows || from_csv != rows {
        bail!("report round-trip mismatch between {} and {}", json.display(), csv.display());
    }
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}
