use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isohull::exec::Execution;
use isohull::harness::calibrate::calibrate;
use isohull::harness::emit::{format_float, write_jsonl};
use isohull::harness::experiment::SummaryStats;
use isohull::harness::{
    check_inradius_bound, check_main_theorem, check_second_moment_bound, in_stability_slice,
    read_jsonl, run_experiment, run_trial_with, EmitFlags, ExperimentConfig, Fixtures,
    TrialOptions,
};
use isohull::hull::write_off;
use isohull::{derive_seed, sample_symmetric_cloud, symmetric_hull, validate_complex, Error};

/// Label deriving the calibration pilot seed from the campaign seed, so
/// fitted constants are later checked on fresh draws.
const PILOT_LABEL: u64 = 0x5049_4c54;
/// Label deriving the seed of the sphere-statistics fits.
const SPHERE_LABEL: u64 = 0x5048_4552;

#[derive(Parser)]
#[command(
    name = "isohull",
    version,
    about = "Symmetric random polytopes on the sphere: hulls, exact moments and isotropy campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a seeded cloud of m unit vectors in R^n as CSV.
    Sample(Opts),
    /// Build and validate the symmetric hull; with --out, write an OFF-style dump.
    Hull(Opts),
    /// Run one trial and print its record as JSON.
    Trial(Opts),
    /// Run a full campaign (default grid unless --config is given).
    Experiment(Opts),
    /// Run the pilot and count campaigns and write the calibration fixtures.
    Calibrate(Opts),
    /// Re-run the bound checks on a JSONL record file against the fixtures.
    Check {
        /// Records written by `experiment`.
        records: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Monte Carlo cross-check of one trial's exact moments.
    Oracle(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Number of sampled points (the body has 2m vertices).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    oracle_samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
    Both,
}

impl Opts {
    fn shape(&self) -> Result<(usize, usize), Error> {
        match (self.n, self.m) {
            (Some(n), Some(m)) => Ok((n, m)),
            _ => Err(Error::Config("--n and --m are required".into())),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    /// The config file (or the default grid) with command-line overrides.
    fn config(&self, default_seed: u64) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let mut cfg = ExperimentConfig::default_grid("isohull-out");
                cfg.master_seed = default_seed;
                cfg
            }
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(samples) = self.oracle_samples {
            cfg.oracle_samples = samples;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(format) = self.format {
            cfg.emit = match format {
                Format::Csv => EmitFlags {
                    csv: true,
                    jsonl: false,
                },
                Format::Jsonl => EmitFlags {
                    csv: false,
                    jsonl: true,
                },
                Format::Both => EmitFlags {
                    csv: true,
                    jsonl: true,
                },
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => 3,
        e if e.is_numerical() => 2,
        _ => 1,
    }
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Sample(opts) => {
            let (n, m) = opts.shape()?;
            let cloud = sample_symmetric_cloud(n, m, opts.seed())?;
            let mut text = String::new();
            for p in cloud.points() {
                let row: Vec<String> = p.iter().map(|&x| format_float(x)).collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            match &opts.out {
                Some(dir) => write_file(&dir.join("cloud.csv"), text.as_bytes())?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Hull(opts) => {
            let (n, m) = opts.shape()?;
            let cloud = sample_symmetric_cloud(n, m, opts.seed())?;
            let fc = symmetric_hull(&cloud)?;
            let report = validate_complex(&fc);
            let failed: Vec<String> = report.failures().map(|c| format!("{:?}", c.kind)).collect();
            println!(
                "{}",
                serde_json::json!({
                    "n": n, "m": m, "seed": opts.seed(),
                    "facet_count": fc.facet_count(),
                    "vertex_count": fc.vertex_count(),
                    "valid": failed.is_empty(),
                    "failed_checks": failed,
                })
            );
            if let Some(dir) = &opts.out {
                let mut buf = Vec::new();
                write_off(&fc, &mut buf).map_err(stdout_error)?;
                write_file(&dir.join("hull.off"), &buf)?;
            }
            Ok(if failed.is_empty() { 0 } else { 2 })
        }
        Command::Trial(opts) => {
            let (n, m) = opts.shape()?;
            let options = TrialOptions {
                record_timing: true,
                oracle_exec: opts.exec(),
            };
            let out = run_trial_with(
                n,
                m,
                0,
                opts.seed(),
                opts.oracle_samples.unwrap_or(0),
                options,
            )?;
            write_jsonl(std::slice::from_ref(&out.record), std::io::stdout().lock())
                .map_err(stdout_error)?;
            if let Some(deltas) = out.oracle {
                eprintln!(
                    "oracle: {}",
                    serde_json::to_string(&deltas).expect("serializes")
                );
            }
            Ok(0)
        }
        Command::Oracle(opts) => {
            let (n, m) = opts.shape()?;
            let samples = opts.oracle_samples.unwrap_or(100_000);
            let options = TrialOptions {
                record_timing: false,
                oracle_exec: opts.exec(),
            };
            let out = run_trial_with(n, m, 0, opts.seed(), samples, options)?;
            let deltas = out
                .oracle
                .ok_or_else(|| Error::Config("--oracle-samples must be positive".into()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&deltas).expect("serializes")
            );
            Ok(0)
        }
        Command::Experiment(opts) => {
            let cfg = opts.config(isohull::harness::config::DEFAULT_MASTER_SEED)?;
            let c_star = Fixtures::load_default().ok().map(|f| f.c_star);
            let start = std::time::Instant::now();
            let (result, written) = run_experiment(&cfg, opts.exec(), c_star)?;
            print_summary(&result.summary);
            for path in written {
                println!("wrote {}", path.display());
            }
            println!(
                "{} trials in {:.1} s",
                result.records.len(),
                start.elapsed().as_secs_f64()
            );
            Ok(0)
        }
        Command::Calibrate(opts) => {
            let counts = opts.config(isohull::harness::config::DEFAULT_MASTER_SEED)?;
            let mut pilot = counts.clone();
            pilot.master_seed = derive_seed(counts.master_seed, &[PILOT_LABEL]);
            let sphere_seed = derive_seed(counts.master_seed, &[SPHERE_LABEL]);
            let calibration = calibrate(&pilot, &counts, sphere_seed, opts.exec())?;
            println!("pilot campaign (seed {})", pilot.master_seed);
            print_summary(&calibration.pilot.summary);
            println!("count campaign (seed {})", counts.master_seed);
            print_summary(&calibration.counts.summary);
            let path = match &opts.out {
                Some(dir) => dir.join("calibration.json"),
                None => Fixtures::default_path(),
            };
            calibration.fixtures.save(&path)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Check { records, opts } => {
            let records = read_jsonl(&records)?;
            if records.is_empty() {
                return Err(Error::Config("record file is empty".into()));
            }
            let rule = match &opts.config {
                Some(path) => ExperimentConfig::load(path)?.alpha_rule,
                None => isohull::harness::AlphaRule::PaperDefault,
            };
            let fixtures = Fixtures::load_default()?;
            let inradius = check_inradius_bound(&records, rule);
            let moments = check_second_moment_bound(&records)?;
            let theorem = check_main_theorem(&records, fixtures.c_star)?;
            let mut ok = true;
            let mut out = std::io::stdout().lock();
            let mut say = |line: String| writeln!(out, "{line}").map_err(stdout_error);
            say("n m alpha violations expected C_emp band frac(l_k<=c*)".into())?;
            for ((ir, sm), th) in inradius.iter().zip(&moments.cells).zip(&theorem) {
                let expected = fixtures.expected_violations(ir.n, ir.m);
                let [lo, hi] = fixtures.c_emp_band;
                let band = if !in_stability_slice(sm.n, sm.m) {
                    "-"
                } else if sm.c_emp >= lo && sm.c_emp <= hi {
                    "in"
                } else {
                    ok = false;
                    "OUT"
                };
                ok &= expected.is_none_or(|e| e == ir.violations);
                ok &= th.fraction == 1.0;
                say(format!(
                    "{} {} {:.4} {} {} {:.4} {band} {:.4}",
                    ir.n,
                    ir.m,
                    ir.alpha,
                    ir.violations,
                    expected.map_or("-".into(), |e| e.to_string()),
                    sm.c_emp,
                    th.fraction
                ))?;
            }
            say(format!(
                "C_emp spread {:.3} over the grid, {} over m = 3n, 4 <= n <= 8; verdict {}",
                moments.spread,
                moments
                    .slice_spread
                    .map_or("-".into(), |s| format!("{s:.3}")),
                if ok { "PASS" } else { "FAIL" }
            ))?;
            Ok(if ok { 0 } else { 2 })
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.into(),
            source: e,
        })?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn print_summary(summary: &SummaryStats) {
    println!("    n    m  median l_k   max l_k  min inradius  alpha  viol    C_emp  facets(med)");
    for c in &summary.cells {
        println!(
            "{:5} {:4}  {:10.6} {:9.6}  {:12.6} {:6.4} {:5} {:8.4} {:12.0}",
            c.n,
            c.m,
            c.l_k.median,
            c.l_k.max,
            c.inradius.min,
            c.alpha,
            c.inradius_violations,
            c.c_emp,
            c.facet_count.median
        );
    }
    if !summary.failures.is_empty() {
        println!("{} failed trials", summary.failures.len());
    }
}
