//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    check_convergence_condition, default_gamma, tail_convergence, verify_theorem1, ConditionReport,
    TailReport,
};
use crate::armodel::{
    characteristic_roots, classify, solve_coefficients, verify_decomposition, ARSpec,
    Classification, CIRCLE_TOL, DEFAULT_ROOT_TOL,
};
use crate::error::Error;
use crate::grid::GridSpec;
use crate::maps::{validate_range, MapDefinition, MapFile};
use crate::orbit::{default_horizon, period_census, run_pipeline, CensusGenerator};
use crate::point::Point;
use crate::report::{to_json, write_output, Cell, Csv, Envelope};
use crate::spectral::fit_trig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "aporbit",
    version,
    about = "Periodic-chain approximation of orbits in [-1, 1]^d"
)]
pub struct Cli {
    /// Seed for every random choice (sampled Lipschitz constants, census).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Write JSON reports only, no CSV side files.
    #[arg(long, global = true)]
    pub json_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orbit, chain and sinusoid form at one resolution.
    Run(RunArgs),
    /// Check the error bound of the chain against the orbit.
    Verify(VerifyArgs),
    /// Diagnostics over a ladder of resolutions.
    Ladder(LadderArgs),
    /// Closed-form decomposition of an autoregressive recursion.
    Ar(ArArgs),
    /// Period statistics of random maps.
    Census(CensusArgs),
    /// Probe a map for images outside the box.
    ValidateMap(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Map file (JSON).
    #[arg(long)]
    pub map: PathBuf,
    /// Initial point, comma separated.
    #[arg(
        long,
        allow_hyphen_values = true,
        value_delimiter = ',',
        required = true
    )]
    pub y0: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long = "K")]
    pub k: u32,
    /// Defaults to 10 (K + 1)^d, capped at 10^7.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long = "K")]
    pub k: u32,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    /// Sample pairs for the Lipschitz estimate of non-AR maps.
    #[arg(long, default_value_t = 20_000)]
    pub gamma_samples: usize,
}

#[derive(Debug, Args)]
pub struct LadderArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Increasing resolutions, comma separated.
    #[arg(long = "Ks", value_delimiter = ',', required = true)]
    pub ks: Vec<u32>,
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    /// Budget for the partial sums of the convergence condition.
    #[arg(long, default_value_t = 1e6)]
    pub budget: f64,
    /// Tolerance on the last sups of the tail diagnostics.
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub gamma_samples: usize,
}

#[derive(Debug, Args)]
pub struct ArArgs {
    /// AR spec file: {"p": [...], "z0": [...]}.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorArg {
    RandomMap,
    RandomAr,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "K")]
    pub k: u32,
    /// Ensemble size.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = GeneratorArg::RandomMap)]
    pub generator: GeneratorArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn config(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: e.to_string(),
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: e.to_string(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(f) => {
            eprintln!("aporbit: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let mut out = Output {
        dir: &cli.out,
        force: cli.force,
        json_only: cli.json_only,
        written: Vec::new(),
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a, &mut out)?,
        Command::Verify(a) => cmd_verify(a, cli.seed, &mut out)?,
        Command::Ladder(a) => cmd_ladder(a, cli.seed, &mut out)?,
        Command::Ar(a) => cmd_ar(a, &mut out)?,
        Command::Census(a) => cmd_census(a, cli.seed, &mut out)?,
        Command::ValidateMap(a) => cmd_validate(a, cli.seed, &mut out)?,
    }
    Ok(out.written)
}

struct Output<'a> {
    dir: &'a Path,
    force: bool,
    json_only: bool,
    written: Vec<PathBuf>,
}

impl Output<'_> {
    /// Refuses up front if any of `names` exists, so a command never leaves
    /// a partial set of outputs behind.
    fn check(&self, names: &[&str]) -> CliResult<()> {
        if self.force {
            return Ok(());
        }
        for n in names {
            let p = self.dir.join(n);
            if p.exists() {
                return Err(config(format!(
                    "{} already exists; pass --force to overwrite",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    fn json<C: Serialize, R: Serialize>(
        &mut self,
        name: &str,
        command: &str,
        cfg: &C,
        report: &R,
    ) -> CliResult<()> {
        let text = to_json(&Envelope::new(command, cfg, report));
        let path = write_output(self.dir, name, &text, self.force).map_err(config)?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, csv: &Csv) -> CliResult<()> {
        if self.json_only {
            return Ok(());
        }
        let path = write_output(self.dir, name, csv.as_str(), self.force).map_err(config)?;
        self.written.push(path);
        Ok(())
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> CliResult<(MapFile, MapDefinition)> {
    let file = MapFile::from_json(&read_file(path)?).map_err(config)?;
    let def = file.to_definition().map_err(config)?;
    Ok((file, def))
}

fn load_map_and_point(args: &MapArgs) -> CliResult<(MapFile, MapDefinition, Point)> {
    let (file, def) = load_map(&args.map)?;
    if args.y0.len() != def.dim() {
        return Err(config(Error::DimensionMismatch {
            expected: def.dim(),
            found: args.y0.len(),
        }));
    }
    let y0 = Point::new(args.y0.clone()).map_err(config)?;
    Ok((file, def, y0))
}

#[derive(Serialize)]
struct MapConfig<'a> {
    map_path: &'a Path,
    map: &'a MapFile,
    y0: &'a [f64],
}

#[derive(Serialize)]
struct RunConfig<'a> {
    #[serde(flatten)]
    map: MapConfig<'a>,
    #[serde(rename = "K")]
    k: u32,
    horizon: usize,
    closure_limit: usize,
}

fn cmd_run(a: &RunArgs, out: &mut Output) -> CliResult<()> {
    let (file, def, y0) = load_map_and_point(&a.map)?;
    let grid = GridSpec::new(a.k, def.dim()).map_err(config)?;
    let horizon = a.horizon.unwrap_or_else(|| default_horizon(&grid));
    let closure_limit = horizon.max(default_horizon(&grid));
    out.check(&["chain.json", "trig.json", "orbit.csv"])?;
    let run = run_pipeline(&def, &y0, &grid, horizon, closure_limit).map_err(runtime)?;
    let trig = fit_trig(&run.chain).map_err(runtime)?;
    let cfg = RunConfig {
        map: MapConfig {
            map_path: &a.map.map,
            map: &file,
            y0: y0.coords(),
        },
        k: a.k,
        horizon,
        closure_limit,
    };

    #[derive(Serialize)]
    struct ChainReport<'a> {
        #[serde(flatten)]
        summary: crate::orbit::ChainSummary,
        transient: &'a [crate::grid::GridState],
        cycle: &'a [crate::grid::GridState],
        conflict_times: Vec<usize>,
    }
    let chain = &run.chain;
    out.json(
        "chain.json",
        "run",
        &cfg,
        &ChainReport {
            summary: run.summary(),
            transient: &chain.path()[..chain.pre_period],
            cycle: chain.cycle(),
            conflict_times: run.table.conflicts().iter().map(|c| c.time).collect(),
        },
    )?;
    out.json("trig.json", "run", &cfg, &trig)?;

    let d = def.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("y{i}")));
    header.extend((1..=d).map(|i| format!("ystar{i}")));
    header.push("error".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    for t in 0..=horizon {
        let y = run.orbit.samples()[t].coords();
        let ys = chain.decoded_at(t);
        let mut cells = vec![Cell::Int(t as u64)];
        cells.extend(y.iter().map(|&v| Cell::Float(v)));
        cells.extend(ys.iter().map(|&v| Cell::Float(v)));
        cells.push(Cell::Float(crate::point::l2_distance(y, &ys)));
        csv.row(&cells);
    }
    out.csv("orbit.csv", &csv)
}

#[derive(Serialize)]
struct VerifyConfig<'a> {
    #[serde(flatten)]
    map: MapConfig<'a>,
    #[serde(rename = "K")]
    k: u32,
    horizon: usize,
    seed: u64,
    gamma_samples: usize,
}

fn cmd_verify(a: &VerifyArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let (file, def, y0) = load_map_and_point(&a.map)?;
    GridSpec::new(a.k, def.dim()).map_err(config)?;
    out.check(&["bound.json", "bound.csv"])?;
    let gamma = default_gamma(&def, a.gamma_samples, seed).map_err(runtime)?;
    let report = verify_theorem1(&def, &y0, a.k, a.horizon, &gamma).map_err(runtime)?;
    let cfg = VerifyConfig {
        map: MapConfig {
            map_path: &a.map.map,
            map: &file,
            y0: y0.coords(),
        },
        k: a.k,
        horizon: a.horizon,
        seed,
        gamma_samples: a.gamma_samples,
    };
    out.json("bound.json", "verify", &cfg, &report)?;
    let mut csv = Csv::new(&["t", "actual", "bound", "closed_form"]);
    for t in 0..=a.horizon {
        let closed = report.closed_form(t).unwrap_or(f64::NAN);
        csv.row(&[
            Cell::Int(t as u64),
            Cell::Float(report.actual[t]),
            Cell::Float(report.bound[t]),
            Cell::Float(closed),
        ]);
    }
    out.csv("bound.csv", &csv)?;
    if !report.pass {
        return Err(runtime(format!(
            "bound violated at {} time(s), first at t = {}",
            report.violations.len(),
            report.violations[0]
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct LadderConfig<'a> {
    #[serde(flatten)]
    map: MapConfig<'a>,
    #[serde(rename = "Ks")]
    ks: &'a [u32],
    horizon: usize,
    budget: f64,
    tol: f64,
    seed: u64,
    gamma_samples: usize,
}

fn cmd_ladder(a: &LadderArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let (file, def, y0) = load_map_and_point(&a.map)?;
    if a.ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config("--Ks must be strictly increasing"));
    }
    for &k in &a.ks {
        GridSpec::new(k, def.dim()).map_err(config)?;
    }
    out.check(&["ladder.json", "ladder.csv"])?;
    let gamma = default_gamma(&def, a.gamma_samples, seed).map_err(runtime)?;
    let tail = tail_convergence(&def, &y0, &a.ks, a.horizon, a.tol).map_err(runtime)?;
    let condition = check_convergence_condition(&tail.plan, gamma.gamma, a.budget);

    #[derive(Serialize)]
    struct LadderReport<'a> {
        gamma: crate::maps::LipschitzEstimate,
        condition: &'a ConditionReport,
        tail: &'a TailReport,
    }
    let cfg = LadderConfig {
        map: MapConfig {
            map_path: &a.map.map,
            map: &file,
            y0: y0.coords(),
        },
        ks: &a.ks,
        horizon: a.horizon,
        budget: a.budget,
        tol: a.tol,
        seed,
        gamma_samples: a.gamma_samples,
    };
    out.json(
        "ladder.json",
        "ladder",
        &cfg,
        &LadderReport {
            gamma,
            condition: &condition,
            tail: &tail,
        },
    )?;
    let mut csv = Csv::new(&[
        "j",
        "K",
        "T",
        "L",
        "T_prime",
        "lcm",
        "term",
        "partial_sum",
        "level_sup",
        "shadow_sup",
    ]);
    for (j, level) in tail.plan.levels.iter().enumerate() {
        let mut cells = vec![
            Cell::Int(j as u64),
            Cell::Int(u64::from(level.k)),
            Cell::Int(level.pre_period),
            Cell::Int(level.period),
            Cell::Int(level.reselected),
        ];
        if j < tail.plan.lcms.len() {
            cells.extend([
                Cell::Int(tail.plan.lcms[j]),
                Cell::Float(condition.terms[j]),
                Cell::Float(condition.partial_sums[j]),
                Cell::Float(tail.level_sups[j]),
                Cell::Float(tail.shadow_sups[j]),
            ]);
        } else {
            cells.extend((0..5).map(|_| Cell::Text("")));
        }
        csv.row(&cells);
    }
    out.csv("ladder.csv", &csv)
}

#[derive(Serialize)]
struct ArConfig<'a> {
    spec_path: &'a Path,
    spec: &'a ARSpec,
    horizon: usize,
    root_tol: f64,
    circle_tol: f64,
}

fn cmd_ar(a: &ArArgs, out: &mut Output) -> CliResult<()> {
    let spec = ARSpec::from_json(&read_file(&a.spec)?).map_err(config)?;
    out.check(&["ar.json", "curve.csv"])?;
    let cfg = ArConfig {
        spec_path: &a.spec,
        spec: &spec,
        horizon: a.horizon,
        root_tol: DEFAULT_ROOT_TOL,
        circle_tol: CIRCLE_TOL,
    };
    let roots = characteristic_roots(&spec, DEFAULT_ROOT_TOL).map_err(runtime)?;
    if classify(&roots, CIRCLE_TOL) == Classification::Unbounded {
        #[derive(Serialize)]
        struct Refused<'a> {
            classification: Classification,
            roots: &'a crate::armodel::RootSet,
        }
        out.json(
            "ar.json",
            "ar",
            &cfg,
            &Refused {
                classification: Classification::Unbounded,
                roots: &roots,
            },
        )?;
        return Err(runtime(Error::RefusedUnbounded));
    }
    let dec = solve_coefficients(&spec, &roots).map_err(runtime)?;
    let check = verify_decomposition(&spec, &dec, a.horizon);
    let (ap, decay) = dec.split();

    #[derive(Serialize)]
    struct ArReport<'a> {
        decomposition: &'a crate::armodel::ARDecomposition,
        frequencies: Vec<crate::armodel::Frequency>,
        check: &'a crate::armodel::DecompositionCheck,
    }
    out.json(
        "ar.json",
        "ar",
        &cfg,
        &ArReport {
            decomposition: &dec,
            frequencies: ap.frequencies(),
            check: &check,
        },
    )?;
    let z = spec.recursion(a.horizon);
    let mut csv = Csv::new(&["t", "z", "closed", "ap", "R"]);
    for (t, &zt) in z.iter().enumerate() {
        let t = t as u64;
        csv.row(&[
            Cell::Int(t),
            Cell::Float(zt),
            Cell::Float(dec.eval(t)),
            Cell::Float(ap.eval(t)),
            Cell::Float(decay.eval(t)),
        ]);
    }
    out.csv("curve.csv", &csv)
}

#[derive(Serialize)]
struct CensusConfig {
    d: usize,
    #[serde(rename = "K")]
    k: u32,
    n: usize,
    seed: u64,
    generator: GeneratorArg,
}

fn cmd_census(a: &CensusArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    GridSpec::new(a.k, a.d).map_err(config)?;
    if a.n == 0 {
        return Err(config("--n must be at least 1"));
    }
    out.check(&["census.json", "census.csv"])?;
    let generator = match a.generator {
        GeneratorArg::RandomMap => CensusGenerator::RandomMap,
        GeneratorArg::RandomAr => CensusGenerator::RandomAr,
    };
    let report = period_census(a.d, a.k, a.n, seed, generator).map_err(runtime)?;
    let cfg = CensusConfig {
        d: a.d,
        k: a.k,
        n: a.n,
        seed,
        generator: a.generator,
    };
    out.json("census.json", "census", &cfg, &report)?;
    let mut csv = Csv::new(&["sample_id", "T", "L"]);
    for s in &report.samples {
        csv.row(&[
            Cell::Int(s.sample_id as u64),
            Cell::Int(s.pre_period as u64),
            Cell::Int(s.period as u64),
        ]);
    }
    out.csv("census.csv", &csv)
}

#[derive(Serialize)]
struct ValidateConfig<'a> {
    map_path: &'a Path,
    map: &'a MapFile,
    samples: usize,
    seed: u64,
}

fn cmd_validate(a: &ValidateArgs, seed: u64, out: &mut Output) -> CliResult<()> {
    let (file, def) = load_map(&a.map)?;
    out.check(&["validate.json"])?;
    let report = validate_range(&def, a.samples, seed);
    let cfg = ValidateConfig {
        map_path: &a.map,
        map: &file,
        samples: a.samples,
        seed,
    };
    out.json("validate.json", "validate-map", &cfg, &report)?;
    if !report.pass {
        let why = report
            .error
            .clone()
            .unwrap_or_else(|| format!("images overshoot the box by {:e}", report.max_overshoot));
        return Err(runtime(why));
    }
    Ok(())
}
