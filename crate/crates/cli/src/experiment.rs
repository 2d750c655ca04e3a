//! Experiment runner: one row per (configuration, worker count).

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparsekit::amg::{
    amg_setup, AmgHierarchy, AmgOptions, AmgPrecond, Coarsening, Interpolation, SmootherConfig,
};
use sparsekit::ilu::{ilu, IluOptions, RasIlu, RasLevel};
use sparsekit::krylov::{bicgstab, cg, gmres, SolveReport, SolverConfig};
use sparsekit::partition::{partition_rows, permute_symmetric, PartitionedMatrix, RowPartition};
use sparsekit::sparse::{poisson3d, read_matrix_market};
use sparsekit::{Exec, HecMatrix, Identity, LinearOperator, Preconditioner, SparseCsr};

use crate::report::ReportRow;

const TIMED_REPS: usize = 3;

#[derive(Clone, Debug)]
pub enum MatrixSource {
    File(PathBuf),
    Poisson(usize, usize, usize),
}

impl MatrixSource {
    pub fn label(&self) -> String {
        match self {
            MatrixSource::File(p) => p.display().to_string(),
            MatrixSource::Poisson(nx, ny, nz) => format!("poisson-{nx}x{ny}x{nz}"),
        }
    }

    pub fn load(&self) -> sparsekit::Result<SparseCsr> {
        match self {
            MatrixSource::File(p) => read_matrix_market(p),
            MatrixSource::Poisson(nx, ny, nz) => poisson3d(*nx, *ny, *nz),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverKind {
    Bicgstab,
    Gmres,
    Cg,
    Amg,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Bicgstab => "bicgstab",
            SolverKind::Gmres => "gmres",
            SolverKind::Cg => "cg",
            SolverKind::Amg => "amg",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PrecondKind {
    None,
    Ilu,
    RasIlu,
    Amg,
}

impl PrecondKind {
    fn label(self, fill_level: usize) -> String {
        match self {
            PrecondKind::None => "none".to_string(),
            PrecondKind::Ilu => format!("ilu({fill_level})"),
            PrecondKind::RasIlu => format!("ras-ilu({fill_level})"),
            PrecondKind::Amg => "amg".to_string(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CoarseningArg {
    Rs,
    Cljp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum InterpolationArg {
    /// Direct interpolation (RSD).
    #[value(alias = "rsd")]
    Direct,
    /// Standard interpolation (RSSTD).
    #[value(alias = "rsstd")]
    Standard,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SmootherArg {
    #[value(alias = "djacobi")]
    DampedJacobi,
    #[value(alias = "wjacobi")]
    WeightedJacobi,
    #[value(alias = "chev")]
    Chebyshev,
    #[value(alias = "gs")]
    GaussSeidel,
}

#[derive(Clone, Debug)]
pub struct AmgParams {
    pub coarsening: CoarseningArg,
    pub interpolation: InterpolationArg,
    pub smoother: SmootherArg,
    pub theta: f64,
    pub max_levels: usize,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
}

impl Default for AmgParams {
    fn default() -> Self {
        AmgParams {
            coarsening: CoarseningArg::Rs,
            interpolation: InterpolationArg::Direct,
            smoother: SmootherArg::DampedJacobi,
            theta: 0.25,
            max_levels: 8,
            pre_sweeps: 3,
            post_sweeps: 3,
        }
    }
}

impl AmgParams {
    pub fn to_options(&self, seed: u64) -> AmgOptions {
        let smoother = match self.smoother {
            SmootherArg::DampedJacobi => SmootherConfig::damped_jacobi(),
            SmootherArg::WeightedJacobi => SmootherConfig::weighted_jacobi(),
            SmootherArg::Chebyshev => SmootherConfig::chebyshev(),
            SmootherArg::GaussSeidel => SmootherConfig::gauss_seidel(),
        };
        AmgOptions {
            theta: self.theta,
            coarsening: match self.coarsening {
                CoarseningArg::Rs => Coarsening::Rs,
                CoarseningArg::Cljp => Coarsening::Cljp,
            },
            interpolation: match self.interpolation {
                InterpolationArg::Direct => Interpolation::Direct,
                InterpolationArg::Standard => Interpolation::Standard,
            },
            smoother,
            pre_sweeps: self.pre_sweeps,
            post_sweeps: self.post_sweeps,
            max_levels: self.max_levels,
            seed,
            ..Default::default()
        }
    }

    fn coarsening_name(&self) -> &'static str {
        match self.coarsening {
            CoarseningArg::Rs => "rs",
            CoarseningArg::Cljp => "cljp",
        }
    }

    fn interpolation_name(&self) -> &'static str {
        match self.interpolation {
            InterpolationArg::Direct => "rsd",
            InterpolationArg::Standard => "rsstd",
        }
    }

    fn smoother_name(&self) -> &'static str {
        match self.smoother {
            SmootherArg::DampedJacobi => "djacobi",
            SmootherArg::WeightedJacobi => "wjacobi",
            SmootherArg::Chebyshev => "chev",
            SmootherArg::GaussSeidel => "gs",
        }
    }
}

/// Everything but the matrix: solver, preconditioner, grid cell, limits.
#[derive(Clone, Debug)]
pub struct SolveParams {
    pub solver: SolverKind,
    pub precond: PrecondKind,
    pub fill_level: usize,
    pub outer_parts: usize,
    pub inner_parts: usize,
    pub outer_overlap: usize,
    pub inner_overlap: usize,
    pub amg: AmgParams,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub workers: Vec<usize>,
    pub seed: u64,
}

impl SolveParams {
    fn base_row(&self, label: &str, workers: u64) -> ReportRow {
        let standalone_amg = self.solver == SolverKind::Amg;
        let ras = !standalone_amg && self.precond == PrecondKind::RasIlu;
        let uses_ilu =
            !standalone_amg && matches!(self.precond, PrecondKind::Ilu | PrecondKind::RasIlu);
        let amg_active = standalone_amg || self.precond == PrecondKind::Amg;
        ReportRow {
            matrix: label.to_string(),
            solver: self.solver.name().to_string(),
            preconditioner: if self.solver == SolverKind::Amg {
                "none".to_string()
            } else {
                self.precond.label(self.fill_level)
            },
            fill_level: uses_ilu.then_some(self.fill_level as u64),
            outer_parts: ras.then_some(self.outer_parts as u64),
            inner_parts: ras.then_some(self.inner_parts as u64),
            outer_overlap: ras.then_some(self.outer_overlap as u64),
            inner_overlap: ras.then_some(self.inner_overlap as u64),
            amg_coarsening: amg_active.then(|| self.amg.coarsening_name().to_string()),
            amg_interpolation: amg_active.then(|| self.amg.interpolation_name().to_string()),
            amg_smoother: amg_active.then(|| self.amg.smoother_name().to_string()),
            tolerance: Some(self.tolerance),
            seed: self.seed,
            workers,
            ..Default::default()
        }
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            restart: self.restart,
            initial_guess: None,
        }
    }
}

/// Runs one experiment end to end; failures land in an error row rather
/// than aborting the harness.
pub fn run_experiment(source: &MatrixSource, params: &SolveParams) -> Vec<ReportRow> {
    let label = source.label();
    let a = match source.load() {
        Ok(a) => a,
        Err(e) => {
            let mut row = params.base_row(&label, 0);
            row.error = Some(e.to_string());
            return vec![row];
        }
    };
    run_experiment_on(&a, &label, params)
}

/// As [`run_experiment`] with a pre-loaded matrix.
pub fn run_experiment_on(a: &SparseCsr, label: &str, params: &SolveParams) -> Vec<ReportRow> {
    match solve_rows(a, label, params) {
        Ok(rows) => rows,
        Err(e) => {
            let mut row = params.base_row(label, 0);
            row.n_rows = a.n_rows() as u64;
            row.nnz = a.nnz() as u64;
            row.error = Some(e.to_string());
            vec![row]
        }
    }
}

enum Operator {
    Hec(HecMatrix),
    Partitioned(Box<PartitionedMatrix>),
}

impl Operator {
    fn as_dyn(&self) -> &dyn LinearOperator {
        match self {
            Operator::Hec(m) => m,
            Operator::Partitioned(m) => m.as_ref(),
        }
    }
}

enum Precond {
    Identity,
    Ilu(sparsekit::ilu::IluFactors),
    Ras(RasIlu),
    Amg(Box<AmgPrecond>),
}

impl Precond {
    fn as_dyn(&self) -> &dyn Preconditioner {
        match self {
            Precond::Identity => &Identity,
            Precond::Ilu(f) => f,
            Precond::Ras(r) => r,
            Precond::Amg(p) => p.as_ref(),
        }
    }
}

fn solve_rows(a: &SparseCsr, label: &str, params: &SolveParams) -> anyhow::Result<Vec<ReportRow>> {
    let n = a.n_rows();
    // right-hand side: b = A * ones, so the exact solution is all-ones
    let ones = vec![1.0; n];
    let b = a.spmv(&ones, Exec::serial())?;
    let cfg = params.solver_config();

    let mut worker_counts = params.workers.clone();
    if worker_counts.is_empty() {
        worker_counts = default_workers();
    }

    if params.solver == SolverKind::Amg {
        let opts = params.amg.to_options(params.seed);
        let setup_started = Instant::now();
        let h = amg_setup(a, &opts)?;
        let setup_seconds = setup_started.elapsed().as_secs_f64();
        let run = |exec: Exec| -> sparsekit::Result<(Vec<f64>, SolveReport)> {
            h.solve(&b, &cfg, exec)
        };
        let (seq_seconds, reference) = best_of(|| run(Exec::serial()))?;
        return rows_for_workers(
            a,
            label,
            params,
            &worker_counts,
            seq_seconds,
            setup_seconds,
            &reference.1,
            Some(&h),
            |w| {
                let (t, out) = best_of(|| run(Exec::with_workers(w)))?;
                Ok((t, out.1))
            },
        );
    }

    // Krylov path: with more than one outer part the system is permuted
    // once and multiplied through the staged-exchange operator. Residual
    // reports are permutation-free, so the solution is not mapped back.
    let setup_started = Instant::now();
    let mut permuted: Option<SparseCsr> = None;
    let (operator, b_sys) = if params.outer_parts > 1 {
        let p = partition_rows(a, params.outer_parts)?;
        let ap = permute_symmetric(a, &p)?;
        let pm = PartitionedMatrix::new(&ap, &p)?;
        let b_perm = apply_perm(&b, &p);
        permuted = Some(ap);
        (Operator::Partitioned(Box::new(pm)), b_perm)
    } else {
        (Operator::Hec(HecMatrix::from_csr_default(a)?), b.clone())
    };
    let a_precond: &SparseCsr = permuted.as_ref().unwrap_or(a);

    let precond = match params.precond {
        PrecondKind::None => Precond::Identity,
        PrecondKind::Ilu => Precond::Ilu(ilu(
            a_precond,
            IluOptions {
                fill_level: params.fill_level,
                diag_shift: None,
            },
        )?),
        PrecondKind::RasIlu => {
            let levels = [
                RasLevel {
                    n_parts: params.outer_parts.max(1),
                    overlap: params.outer_overlap,
                },
                RasLevel {
                    n_parts: params.inner_parts.max(1),
                    overlap: params.inner_overlap,
                },
            ];
            Precond::Ras(RasIlu::build(a_precond, &levels, params.fill_level)?)
        }
        PrecondKind::Amg => Precond::Amg(Box::new(AmgPrecond::new(amg_setup(
            a_precond,
            &params.amg.to_options(params.seed),
        )?))),
    };
    let setup_seconds = setup_started.elapsed().as_secs_f64();

    let op = operator.as_dyn();
    let m = precond.as_dyn();
    let run = |exec: Exec| -> sparsekit::Result<(Vec<f64>, SolveReport)> {
        match params.solver {
            SolverKind::Bicgstab => bicgstab(op, m, &b_sys, &cfg, exec),
            SolverKind::Gmres => gmres(op, m, &b_sys, &cfg, exec),
            SolverKind::Cg => cg(op, m, &b_sys, &cfg, exec),
            SolverKind::Amg => unreachable!("handled above"),
        }
    };
    let (seq_seconds, reference) = best_of(|| run(Exec::serial()))?;

    rows_for_workers(
        a,
        label,
        params,
        &worker_counts,
        seq_seconds,
        setup_seconds,
        &reference.1,
        None,
        |w| {
            let (t, out) = best_of(|| run(Exec::with_workers(w)))?;
            Ok((t, out.1))
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn rows_for_workers(
    a: &SparseCsr,
    label: &str,
    params: &SolveParams,
    worker_counts: &[usize],
    seq_seconds: f64,
    setup_seconds: f64,
    seq_report: &SolveReport,
    hierarchy: Option<&AmgHierarchy>,
    mut run: impl FnMut(usize) -> anyhow::Result<(f64, SolveReport)>,
) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &w in worker_counts {
        let (par_seconds, report) = if w == 1 {
            (seq_seconds, seq_report.clone())
        } else {
            run(w)?
        };
        let mut row = params.base_row(label, w as u64);
        row.n_rows = a.n_rows() as u64;
        row.nnz = a.nnz() as u64;
        row.iterations = Some(report.iterations as u64);
        row.converged = Some(report.converged);
        row.breakdown = report.breakdown.map(|b| b.to_string());
        row.final_relative_residual = Some(report.final_relative_residual);
        row.setup_seconds = Some(setup_seconds);
        row.seq_seconds = Some(seq_seconds);
        row.par_seconds = Some(par_seconds);
        row.speedup = Some(seq_seconds / par_seconds);
        row.comm_volume = Some(report.comm_volume);
        if let Some(h) = hierarchy {
            row.amg_levels = Some(h.n_levels() as u64);
            row.grid_complexity = Some(h.grid_complexity());
            row.operator_complexity = Some(h.operator_complexity());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// 1 warmup, then the best wall time of 3 repetitions. The result comes
/// from the last repetition; all repetitions produce identical values.
fn best_of<T>(mut f: impl FnMut() -> sparsekit::Result<T>) -> anyhow::Result<(f64, T)> {
    f()?;
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..TIMED_REPS {
        let t = Instant::now();
        let value = f()?;
        best = best.min(t.elapsed().as_secs_f64());
        out = Some(value);
    }
    Ok((best, out.expect("at least one repetition")))
}

pub fn default_workers() -> Vec<usize> {
    let max = std::thread::available_parallelism().map_or(1, |p| p.get());
    if max > 1 {
        vec![1, max]
    } else {
        vec![1]
    }
}

fn apply_perm(v: &[f64], p: &RowPartition) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (old, &new) in p.perm().iter().enumerate() {
        out[new] = v[old];
    }
    out
}

/// SpMV throughput rows: per matrix, per format, per worker count, with a
/// numeric cross-check between the formats.
pub struct SpmvBenchParams {
    pub formats: Vec<FormatKind>,
    pub workers: Vec<usize>,
    pub ell_width_cap: usize,
    pub stride_unit: usize,
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatKind {
    Csr,
    Hec,
}

impl FormatKind {
    fn name(self) -> &'static str {
        match self {
            FormatKind::Csr => "csr",
            FormatKind::Hec => "hec",
        }
    }
}

pub fn spmv_bench(sources: &[MatrixSource], params: &SpmvBenchParams) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let worker_counts = if params.workers.is_empty() {
        default_workers()
    } else {
        params.workers.clone()
    };
    for source in sources {
        let label = source.label();
        let a = match source.load() {
            Ok(a) => a,
            Err(e) => {
                rows.push(ReportRow {
                    matrix: label,
                    solver: "spmv".to_string(),
                    preconditioner: "none".to_string(),
                    seed: params.seed,
                    error: Some(e.to_string()),
                    ..Default::default()
                });
                continue;
            }
        };
        let hec = match HecMatrix::from_csr(&a, params.ell_width_cap, params.stride_unit) {
            Ok(h) => h,
            Err(e) => {
                rows.push(ReportRow {
                    matrix: label,
                    solver: "spmv".to_string(),
                    preconditioner: "none".to_string(),
                    seed: params.seed,
                    error: Some(e.to_string()),
                    ..Default::default()
                });
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let x: Vec<f64> = (0..a.n_cols()).map(|_| rng.random::<f64>() - 0.5).collect();

        // formats must agree numerically before any timing is trusted
        let y_csr = a.spmv(&x, Exec::serial()).expect("lengths match");
        let y_hec = hec.spmv(&x, Exec::serial()).expect("lengths match");
        let scale = y_csr.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let agree = y_csr
            .iter()
            .zip(&y_hec)
            .all(|(u, v)| (u - v).abs() <= 1e-13 * scale);

        let reps = (20_000_000 / a.nnz().max(1)).clamp(1, 200);
        for &format in &params.formats {
            for &w in &worker_counts {
                let exec = Exec::with_workers(w);
                let mut y = vec![0.0; a.n_rows()];
                let apply = |y: &mut Vec<f64>| match format {
                    FormatKind::Csr => a.spmv_into(&x, y, exec),
                    FormatKind::Hec => hec.spmv_into(&x, y, exec),
                };
                apply(&mut y); // warmup
                let mut best = f64::INFINITY;
                for _ in 0..TIMED_REPS {
                    let t = Instant::now();
                    for _ in 0..reps {
                        apply(&mut y);
                    }
                    best = best.min(t.elapsed().as_secs_f64());
                }
                let per_apply = best / reps as f64;
                let gflops = 2.0 * a.nnz() as f64 / per_apply / 1e9;
                rows.push(ReportRow {
                    matrix: label.clone(),
                    n_rows: a.n_rows() as u64,
                    nnz: a.nnz() as u64,
                    solver: "spmv".to_string(),
                    preconditioner: "none".to_string(),
                    format: Some(format.name().to_string()),
                    seed: params.seed,
                    workers: w as u64,
                    par_seconds: Some(per_apply),
                    gflops: Some(gflops),
                    formats_agree: Some(agree),
                    ..Default::default()
                });
            }
        }
    }
    rows
}
