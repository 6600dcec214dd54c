use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use detsubmod::cli::{
    cmd_bench, cmd_estimate, cmd_solve, cmd_verify, suite_paths, write_bench_csv, BenchOptions, Family, Mode,
    SolveOptions,
};
use detsubmod::error::{Error, Result};
use detsubmod::extension::DEFAULT_FF_CAP;
use detsubmod::instance::Instance;
use detsubmod::prob::{parse_rational, Rational};
use detsubmod::verify::SuiteOptions;

/// Deterministic submodular maximization over a matroid.
///
/// Exit codes: 0 ok, 2 schema error, 3 capability error, 4 contract violation (or a failed
/// check under `verify`), 1 I/O error.
#[derive(Parser)]
#[command(name = "detsubmod", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continuous greedy followed by rounding; prints a JSON report.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Deterministic)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Assert every internal invariant while running.
        #[arg(long)]
        paranoid: bool,
    },
    /// Continuous greedy only; reports F(y).
    Estimate {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Property suite; one JSON line per checked inequality.
    Verify {
        #[arg(required_unless_present = "suite", conflicts_with = "suite")]
        instance: Option<PathBuf>,
        /// Directory of `*.json` instances.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random points per identity family.
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query-count sweep over generated instances; writes CSV.
    Bench {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Comma-separated sizes, e.g. `8,16,32`. May be empty.
        #[arg(long, default_value = "")]
        n_list: String,
        #[arg(long, default_value = "1/2", value_parser = rational)]
        epsilon: Rational,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Also record the rounding phase.
        #[arg(long)]
        with_rounding: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FF_CAP, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..=30))]
        ff_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Accuracy as an integer or fraction, e.g. `1/2`.
    #[arg(long, default_value = "1/2", value_parser = rational)]
    epsilon: Rational,
    /// Attach the exhaustive optimum (up to 14 elements).
    #[arg(long)]
    with_opt: bool,
    /// Largest number of fractional coordinates an evaluation may enumerate.
    #[arg(long, default_value_t = DEFAULT_FF_CAP, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..=30))]
    ff_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Deterministic,
    SampledRounding,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    CoverageUniform,
    CutPartition,
}

fn rational(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn json_out<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn solve_options(run: &RunArgs) -> SolveOptions {
    SolveOptions {
        eps: run.epsilon.clone(),
        with_opt: run.with_opt,
        ff_cap: run.ff_cap,
        ..SolveOptions::default()
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Solve {
            instance,
            run,
            mode,
            seed,
            paranoid,
        } => {
            let inst = Instance::load(&instance)?;
            let opts = SolveOptions {
                mode: match mode {
                    ModeArg::Deterministic => Mode::Deterministic,
                    ModeArg::SampledRounding => Mode::SampledRounding,
                },
                seed,
                paranoid,
                ..solve_options(&run)
            };
            json_out(&run.out, &cmd_solve(&inst, &opts)?)?;
            Ok(true)
        }
        Cmd::Estimate { instance, run } => {
            let inst = Instance::load(&instance)?;
            json_out(&run.out, &cmd_estimate(&inst, &solve_options(&run))?)?;
            Ok(true)
        }
        Cmd::Verify {
            instance,
            suite,
            seed,
            draws,
            out,
        } => {
            let paths = match (instance, suite) {
                (Some(p), _) => vec![p],
                (None, Some(dir)) => suite_paths(&dir)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let instances = paths.iter().map(Instance::load).collect::<Result<Vec<_>>>()?;
            let opts = SuiteOptions {
                draws,
                ..SuiteOptions::default()
            };
            let lines = cmd_verify(&instances, seed, &opts)?;
            let mut w = sink(&out)?;
            for l in &lines {
                serde_json::to_writer(&mut w, l).map_err(|e| Error::Io(e.into()))?;
                writeln!(w)?;
            }
            w.flush()?;
            Ok(lines.iter().all(|l| l.pass))
        }
        Cmd::Bench {
            family,
            n_list,
            epsilon,
            trials,
            with_rounding,
            seed,
            ff_cap,
            out,
        } => {
            let n_list = n_list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::schema("n-list", format!("`{s}` is not a size")))
                })
                .collect::<Result<Vec<usize>>>()?;
            let opts = BenchOptions {
                family: match family {
                    FamilyArg::CoverageUniform => Family::CoverageUniform,
                    FamilyArg::CutPartition => Family::CutPartition,
                },
                n_list,
                eps: epsilon,
                trials,
                with_rounding,
                seed,
                ff_cap,
            };
            let rows = cmd_bench(&opts)?;
            write_bench_csv(sink(&out)?, &rows)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
