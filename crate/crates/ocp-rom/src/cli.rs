//! Command-line driver: `offline` builds all reduced artifacts for one
//! configuration, `online` evaluates the reduced model at new parameters,
//! `benchmark` runs the error-decay and speedup study, and `inspect`
//! validates a run directory against its manifest.
//!
//! Exit codes: 0 on success, 2 for configuration and parameter errors,
//! 3 for numerical failures, 4 for missing or corrupted artifacts.

use crate::cases::{paper_scale, CaseConfig, DiscreteCase};
use crate::error::{Error, Result};
use crate::io;
use crate::pod::SnapshotSet;
use crate::rom::{
    self, build_reduced_basis, collect_snapshots, galerkin_project, reconstruct,
    TrainingData,
};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable naming the default output/scratch directory.
pub const SCRATCH_ENV: &str = "OCP_ROM_SCRATCH";

#[derive(Parser)]
#[command(name = "ocp-rom", version, about = "Offline/online reduced-order solver for parametrized time-dependent optimal control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build the reduced model: snapshots, POD bases, Galerkin projection.
    Offline {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to $OCP_ROM_SCRATCH or ./run).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the snapshot loop (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Solve the reduced problem at given or sampled parameters.
    Online {
        /// Run directory produced by `offline`.
        #[arg(long)]
        out: PathBuf,
        /// Parameter as comma-separated values; repeatable.
        #[arg(long)]
        mu: Vec<String>,
        /// Sample this many random test parameters when no --mu is given.
        #[arg(long, default_value_t = 0)]
        test_size: usize,
        /// Seed of the test sample.
        #[arg(long)]
        seed: Option<u64>,
        /// Also run the full-order solve and emit error columns.
        #[arg(long, default_value_t = false)]
        compare_fe: bool,
    },
    /// Error-decay and speedup study over a sweep of basis sizes.
    Benchmark {
        /// Run directory produced by `offline`.
        #[arg(long)]
        out: PathBuf,
        /// Basis sizes, comma separated (default 2..=n_basis step 2).
        #[arg(long)]
        n: Option<String>,
        /// Test-set size (default from the configuration).
        #[arg(long)]
        test_size: Option<usize>,
        /// Seed of the test sample (default config seed + 2).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Print a run summary and verify artifact checksums.
    Inspect {
        /// Run directory, or a config file for a dry summary.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Map an error to the documented process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownCase(_)
        | Error::InterfaceMisaligned { .. }
        | Error::ParameterOutsideBox(_)
        | Error::NonPositiveAlpha(_)
        | Error::BasisTooLarge { .. }
        | Error::Config(_) => 2,
        Error::Io(_) | Error::ArtifactMismatch(_) => 4,
        _ => 3,
    }
}

/// Run one parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Offline { config, out, seed, workers } => cmd_offline(&config, out, seed, workers),
        Command::Online { out, mu, test_size, seed, compare_fe } => {
            cmd_online(&out, &mu, test_size, seed, compare_fe)
        }
        Command::Benchmark { out, n, test_size, seed, workers } => {
            cmd_benchmark(&out, n.as_deref(), test_size, seed, workers)
        }
        Command::Inspect { out, config } => cmd_inspect(out.as_deref(), config.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn default_out() -> PathBuf {
    std::env::var_os(SCRATCH_ENV).map_or_else(|| PathBuf::from("run"), PathBuf::from)
}

fn init_workers(workers: usize) {
    if workers > 0 {
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
}

fn load_config(dir: &Path) -> Result<CaseConfig> {
    let text = fs::read_to_string(dir.join("config.toml"))?;
    CaseConfig::from_toml_str(&text)
}

fn parse_mu(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad parameter component `{t}`")))
        })
        .collect()
}

fn write_params_csv(path: &Path, params: &[Vec<f64>]) -> Result<()> {
    use std::io::Write;
    let mut file = fs::File::create(path)?;
    let n_mu = params.first().map_or(0, |p| p.len());
    let head: Vec<String> = (1..=n_mu).map(|i| format!("mu{i}")).collect();
    writeln!(file, "{}", head.join(","))?;
    for mu in params {
        let row: Vec<String> = mu.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(())
}

fn read_params_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .skip(1)
        .map(parse_mu)
        .collect()
}

fn snapshots_to_cols(set: &SnapshotSet) -> Vec<Vec<f64>> {
    set.data.clone()
}

/// Build everything and write the run directory.
pub fn cmd_offline(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: usize,
) -> Result<()> {
    init_workers(workers);
    let text = fs::read_to_string(config_path)?;
    let mut config = CaseConfig::from_toml_str(&text)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    let dir = out.unwrap_or_else(default_out);
    fs::create_dir_all(&dir)?;

    let mut timings = io::Timings::default();
    let t_total = Instant::now();

    println!("[offline] building case `{}`", config.case.name());
    let t0 = Instant::now();
    let case = DiscreteCase::build(&config)?;
    timings.record("assemble_affine", t0.elapsed().as_secs_f64());
    println!(
        "[offline] state dofs {}, control dofs {}, space-time unknowns {}",
        case.n_state,
        case.n_control,
        case.kkt_unknowns()
    );

    let params = config.sample_parameters(config.n_train, config.seed);
    println!("[offline] solving {} full-order systems", params.len());
    let t0 = Instant::now();
    let train = collect_snapshots(&case, &params)?;
    timings.record("snapshots", t0.elapsed().as_secs_f64());
    timings.record("fom_solve_mean", train.mean_fom_seconds);

    println!("[offline] POD + aggregation at N = {}", config.n_basis);
    let t0 = Instant::now();
    let basis = build_reduced_basis(&case, &train, config.n_basis, true)?;
    timings.record("pod", t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let model = galerkin_project(&case, &basis)?;
    timings.record("projection", t0.elapsed().as_secs_f64());
    println!(
        "[offline] reduced dimensions: 2 x {} state/adjoint + {} control",
        model.n_z, model.n_u
    );

    let config_echo = config.to_toml_string();
    fs::write(dir.join("config.toml"), &config_echo)?;
    write_params_csv(&dir.join("train_params.csv"), &params)?;
    io::write_basis(&dir.join("basis_state.pmat"), &basis.state_cols)?;
    io::write_basis(&dir.join("basis_control.pmat"), &basis.control_cols)?;
    io::write_eigenvalues_csv(&dir.join("eigenvalues.csv"), &basis.state_eigenvalues)?;
    io::write_basis(&dir.join("snapshots_state.pmat"), &snapshots_to_cols(&train.state))?;
    io::write_basis(&dir.join("snapshots_adjoint.pmat"), &snapshots_to_cols(&train.adjoint))?;
    io::write_basis(&dir.join("snapshots_control.pmat"), &snapshots_to_cols(&train.control))?;
    let model_files = io::save_model(&dir, &model)?;

    let mut manifest = io::RunManifest::new(config.case.name(), &config_echo);
    let mut artifact_names = vec![
        "config.toml".to_string(),
        "train_params.csv".to_string(),
        "basis_state.pmat".to_string(),
        "basis_control.pmat".to_string(),
        "eigenvalues.csv".to_string(),
        "snapshots_state.pmat".to_string(),
        "snapshots_adjoint.pmat".to_string(),
        "snapshots_control.pmat".to_string(),
    ];
    artifact_names.extend(model_files);
    for name in &artifact_names {
        manifest.record(&dir, name)?;
    }
    manifest.save(&dir)?;
    timings.record("total", t_total.elapsed().as_secs_f64());
    timings.save(&dir)?;
    println!("[offline] wrote {} artifacts to {}", artifact_names.len(), dir.display());
    Ok(())
}

/// Verify every artifact recorded in the manifest.
fn verify_manifest(dir: &Path) -> Result<io::RunManifest> {
    let manifest = io::RunManifest::load(dir)?;
    for (name, expected) in &manifest.artifacts {
        let bytes = fs::read(dir.join(name))
            .map_err(|_| Error::ArtifactMismatch(format!("missing artifact `{name}`")))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        if &hex != expected {
            return Err(Error::ArtifactMismatch(format!("checksum mismatch for `{name}`")));
        }
    }
    Ok(manifest)
}

fn load_training(dir: &Path, case: &DiscreteCase) -> Result<TrainingData> {
    let params = read_params_csv(&dir.join("train_params.csv"))?;
    let k = case.grid.n_steps;
    let read_set = |name: &str, n_space: usize| -> Result<SnapshotSet> {
        let cols = io::read_basis(&dir.join(name))?;
        let mut set = SnapshotSet::new(n_space, k);
        for (mu, traj) in params.iter().zip(cols) {
            set.push(mu, traj)?;
        }
        Ok(set)
    };
    let state = read_set("snapshots_state.pmat", case.n_state)?;
    let adjoint = read_set("snapshots_adjoint.pmat", case.n_state)?;
    let control = read_set("snapshots_control.pmat", case.n_control)?;
    // re-measure one full-order solve so speedups reflect this machine
    let t0 = Instant::now();
    let _ = case.solve_fom(&params[0])?;
    let mean_fom_seconds = t0.elapsed().as_secs_f64();
    Ok(TrainingData { parameters: params, state, adjoint, control, mean_fom_seconds })
}

/// Evaluate the persisted reduced model at explicit or sampled parameters.
pub fn cmd_online(
    dir: &Path,
    mu_args: &[String],
    test_size: usize,
    seed: Option<u64>,
    compare_fe: bool,
) -> Result<()> {
    verify_manifest(dir)?;
    let config = load_config(dir)?;
    let case = DiscreteCase::build(&config)?;
    let model = io::load_model(dir)?;
    let basis = rom::ReducedBasis {
        n_basis: config.n_basis,
        state_cols: io::read_basis(&dir.join("basis_state.pmat"))?,
        control_cols: io::read_basis(&dir.join("basis_control.pmat"))?,
        velocity_block: None,
        pressure_block: None,
        state_eigenvalues: Vec::new(),
    };

    let params: Vec<Vec<f64>> = if mu_args.is_empty() {
        let n = if test_size > 0 { test_size } else { config.n_test };
        config.sample_parameters_random(n, seed.unwrap_or(config.seed + 2))
    } else {
        mu_args.iter().map(|t| parse_mu(t)).collect::<Result<_>>()?
    };
    for mu in &params {
        config.case.check_parameter(mu)?;
    }

    use std::io::Write;
    let mut file = fs::File::create(dir.join("online.csv"))?;
    let n_mu = params[0].len();
    let head: Vec<String> = (1..=n_mu).map(|i| format!("mu{i}")).collect();
    if compare_fe {
        writeln!(
            file,
            "{},j_rom,j_fom,state_err,control_err,adjoint_err,output_err,online_seconds",
            head.join(",")
        )?;
    } else {
        writeln!(file, "{},j_rom,online_seconds", head.join(","))?;
    }
    for mu in &params {
        let t0 = Instant::now();
        let red = model.solve_online(mu)?;
        let secs = t0.elapsed().as_secs_f64();
        let rec = reconstruct(&case, &basis, &red);
        let j_rom = case.cost(mu, &rec)?;
        let cols: Vec<String> = mu.iter().map(|v| format!("{v:.12e}")).collect();
        if compare_fe {
            let err = rom::compare_at(&case, &basis, &model, mu)?;
            let fom = case.solve_fom(mu)?;
            let j_fom = case.cost(mu, &fom)?;
            writeln!(
                file,
                "{},{:.12e},{:.12e},{:.6e},{:.6e},{:.6e},{:.6e},{:.3e}",
                cols.join(","),
                j_rom,
                j_fom,
                err.state,
                err.control,
                err.adjoint,
                err.output,
                secs
            )?;
        } else {
            writeln!(file, "{},{:.12e},{:.3e}", cols.join(","), j_rom, secs)?;
        }
    }
    println!("[online] wrote {} rows to {}", params.len(), dir.join("online.csv").display());
    Ok(())
}

fn parse_n_list(text: Option<&str>, n_max: usize) -> Result<Vec<usize>> {
    match text {
        Some(t) => t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad basis size `{s}`")))
            })
            .collect(),
        None => Ok((1..=n_max / 2).map(|i| 2 * i).collect()),
    }
}

/// Error-decay and speedup study from persisted snapshots.
pub fn cmd_benchmark(
    dir: &Path,
    n_list: Option<&str>,
    test_size: Option<usize>,
    seed: Option<u64>,
    workers: usize,
) -> Result<()> {
    init_workers(workers);
    verify_manifest(dir)?;
    let config = load_config(dir)?;
    let case = DiscreteCase::build(&config)?;
    let train = load_training(dir, &case)?;
    let n_values = parse_n_list(n_list, config.n_basis)?;
    for &n in &n_values {
        if n > train.parameters.len() {
            return Err(Error::BasisTooLarge { requested: n, available: train.parameters.len() });
        }
    }
    let n_test = test_size.unwrap_or(config.n_test);
    let test = config.sample_parameters_random(n_test, seed.unwrap_or(config.seed + 2));
    println!(
        "[benchmark] sweep N = {:?} against {} test parameters",
        n_values, n_test
    );
    let test = rom::prepare_test_set(&case, &test)?;
    let rows = rom::speedup_study(&case, &train, &test, &n_values)?;
    io::write_study_csv(&dir.join("study.csv"), &rows)?;
    for row in &rows {
        println!(
            "[benchmark] N = {:2}: state {:.3e}, control {:.3e}, adjoint {:.3e}, output {:.3e}, speedup {:.0}x",
            row.n, row.errors.state, row.errors.control, row.errors.adjoint, row.errors.output, row.speedup
        );
    }
    println!("[benchmark] wrote {}", dir.join("study.csv").display());
    Ok(())
}

/// Print scale summaries and verify run directories.
pub fn cmd_inspect(out: Option<&Path>, config_path: Option<&Path>) -> Result<()> {
    let config = match (out, config_path) {
        (Some(dir), _) => {
            let manifest = verify_manifest(dir)?;
            println!("[inspect] case `{}`: {} artifacts verified", manifest.case, manifest.artifacts.len());
            load_config(dir)?
        }
        (None, Some(path)) => CaseConfig::from_toml_str(&fs::read_to_string(path)?)?,
        (None, None) => {
            return Err(Error::Config("inspect needs --out or --config".into()));
        }
    };
    config.validate()?;
    let case = DiscreteCase::build(&config)?;
    println!(
        "[inspect] desk scale: {} state dofs, {} control dofs, {} steps, {} space-time unknowns",
        case.n_state,
        case.n_control,
        config.n_steps,
        case.kkt_unknowns()
    );
    let scale = paper_scale(config.case);
    println!(
        "[inspect] published scale: {} space-time unknowns reduced to dimension {}",
        scale.kkt_unknowns(),
        scale.reduced_dim()
    );
    Ok(())
}
