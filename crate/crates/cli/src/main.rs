use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use nlcf_core::coupler::Coupler;
use nlcf_core::experiments::checkpoint::write_checkpoint;
use nlcf_core::experiments::config::{parse_config, RunConfig};
use nlcf_core::experiments::csv::CsvWriter;
use nlcf_core::experiments::{mms, normcheck, sweep};
use nlcf_core::norms::Inequality;

#[derive(Parser)]
#[command(name = "nlcf", version, about = "Nematic liquid crystal flow with heat release")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and emit diagnostics as CSV.
    Run { config: PathBuf },
    /// Convergence study of each solver against manufactured solutions.
    MmsVerify {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        grids: Vec<usize>,
    },
    /// Rerun a configuration for several perturbation amplitudes.
    StabilitySweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
    },
    /// Fit interpolation-inequality constants on random histories across grids.
    NormCheck {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        grids: Vec<usize>,
        #[arg(long, default_value_t = normcheck::DEFAULT_HISTORIES)]
        histories: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure classes mapped to the process exit status.
enum Failure {
    Validation(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Solver(_) => 2,
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Validation)?;
    parse_config(&text).map_err(|e| Failure::Validation(e.into()))
}

fn run(path: &Path) -> Result<(), Failure> {
    let cfg = load(path)?;
    let coupler =
        Coupler::new(cfg.grid, cfg.viscosity, cfg.director_bc, cfg.coupler).map_err(|e| Failure::Validation(e.into()))?;
    let sink: Box<dyn Write> = match &cfg.output.csv {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(Failure::Solver)?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    let mut csv = CsvWriter::new(sink).map_err(|e| Failure::Solver(e.into()))?;
    let mut io_error: Option<anyhow::Error> = None;
    let mut emitted = 0usize;
    let dt = cfg.coupler.dt;
    let result = coupler.run_with(&cfg.initial_state(), |record, state| {
        if io_error.is_some() {
            return;
        }
        if let Err(e) = csv.write(record) {
            io_error = Some(e.into());
            return;
        }
        emitted += 1;
        if let (Some(path), Some(every)) = (&cfg.output.checkpoint, cfg.output.checkpoint_interval) {
            if emitted % every == 0 {
                if let Err(e) = write_checkpoint(state, dt, path) {
                    io_error = Some(e.into());
                }
            }
        }
    });
    csv.flush().map_err(|e| Failure::Solver(e.into()))?;
    if let Some(e) = io_error {
        return Err(Failure::Solver(e));
    }
    let out = result.map_err(|e| Failure::Solver(e.into()))?;
    if let Some(path) = &cfg.output.checkpoint {
        write_checkpoint(&out.final_state, dt, path).map_err(|e| Failure::Solver(e.into()))?;
    }
    let last = out.records.last().expect("the initial record is always emitted");
    eprintln!(
        "finished at t = {} after {} steps: E_total = {:.6e}, max |div u| = {:.2e}",
        last.t,
        out.steps.len(),
        last.e_total,
        last.div_max
    );
    Ok(())
}

fn mms_verify(grids: &[usize]) -> Result<(), Failure> {
    let report = mms::run_all(grids).map_err(|e| Failure::Solver(e.into()))?;
    let mut ok = true;
    println!("study,kind,levels,errors,min_order,required");
    for (studies, kind, required) in [(&report.spatial, "space", 1.8), (&report.temporal, "time", 0.9)] {
        for s in studies {
            let min = s.pairwise_orders().into_iter().fold(f64::INFINITY, f64::min);
            ok &= min >= required;
            let join = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
            println!("{},{kind},{},{},{min:.3},{required}", s.label, join(&s.levels), join(&s.errors));
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Solver(anyhow::anyhow!("an observed order is below its requirement")))
    }
}

fn stability_sweep(path: &Path, deltas: &[f64]) -> Result<(), Failure> {
    let cfg = load(path)?;
    if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Failure::Validation(anyhow::anyhow!("invalid value for `deltas`: {d}")));
    }
    let rows = sweep::stability_sweep(&cfg, deltas).map_err(|e| Failure::Validation(e.into()))?;
    println!("delta,sup_F_sur,sup_F_sur_over_delta,energy_drift,div_max,status");
    for r in rows {
        let norm = r.normalized().map_or("".to_string(), |v| format!("{v:.6e}"));
        println!("{},{:.6e},{norm},{:.6e},{:.3e},\"{}\"", r.delta, r.sup_f, r.energy_drift, r.div_max, r.status.label());
    }
    Ok(())
}

fn norm_check(path: &Path, grids: &[usize], histories: usize, seed: u64) -> Result<(), Failure> {
    let cfg = load(path)?;
    let report = normcheck::norm_check(grids, histories, seed, &cfg.exponents()).map_err(|e| Failure::Validation(e.into()))?;
    let header: Vec<String> = report.grids.iter().map(|n| format!("C_{n}")).collect();
    println!("inequality,{},variation,uniform", header.join(","));
    for i in Inequality::ALL {
        let f = report.fit(i);
        let cs: Vec<String> = f.constants.iter().map(|c| format!("{c:.6e}")).collect();
        println!("{},{},{:.4},{}", i.name(), cs.join(","), f.variation(), Inequality::UNIFORM.contains(&i));
    }
    eprintln!(
        "horizon-independent constants vary less than {:.0}% across grids: {}",
        100.0 * normcheck::MAX_VARIATION,
        report.uniform_constants_stable()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::MmsVerify { grids } => mms_verify(grids),
        Command::StabilitySweep { config, deltas } => stability_sweep(config, deltas),
        Command::NormCheck { config, grids, histories, seed } => norm_check(config, grids, *histories, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(e) | Failure::Solver(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
