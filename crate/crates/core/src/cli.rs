//! Command-line front end.
//!
//! Flags take degrees and kilometers; everything is converted to SI at this
//! boundary. JSON output carries full precision, CSV uses six significant
//! digits. With `--output-dir`, every command writes its output file(s) plus
//! a `manifest.json` sufficient to replay the run.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::ground_chain::{self, ChainSpec, RepeaterOptimum, DEFAULT_MAX_REPEATERS};
use crate::mc_oracle;
use crate::orbit::{self, DEFAULT_MIN_ELEVATION_DEG};
use crate::params::{self, SystemParams};
use crate::scenario::{self, Comparison, PassOptions, DEFAULT_FIDELITY_MIN};
use crate::space_link::{self, LinkGeometry};

pub const CONFIG_ENV: &str = "QLINKSIM_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qlinksim", version, about = "Entanglement distribution: repeater chains vs satellite downlinks")]
struct Cli {
    /// Parameter file (flat TOML). Defaults to $QLINKSIM_CONFIG when set.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Parameter override, applied after the config file.
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    params: Vec<String>,

    /// Write outputs and a run manifest into this directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect the effective parameter set.
    #[command(subcommand)]
    Params(ParamsCommand),
    /// Terrestrial repeater chain.
    #[command(subcommand)]
    Ground(GroundCommand),
    /// Satellite downlink desk checks.
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Orbit geometry.
    #[command(subcommand)]
    Orbit(OrbitCommand),
    /// Compare satellite and ground delivery for built-in scenarios.
    Compare(CompareArgs),
    /// Locate the satellite/ground crossover distance.
    Sweep(SweepArgs),
    /// Monte Carlo cross-check of the analytic probabilities.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Subcommand)]
enum ParamsCommand {
    Show,
}

#[derive(Debug, Subcommand)]
enum GroundCommand {
    Eval {
        #[arg(long)]
        distance_km: f64,
        #[arg(long)]
        repeaters: u32,
    },
    Optimize {
        #[arg(long)]
        distance_km: f64,
        #[arg(long, default_value_t = DEFAULT_FIDELITY_MIN)]
        fmin: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_REPEATERS)]
        m_max: u32,
    },
}

#[derive(Debug, Subcommand)]
enum SpaceCommand {
    Eval {
        #[arg(long)]
        range_km: f64,
        #[arg(long)]
        elevation_deg: f64,
        /// Second arm range; defaults to the first arm.
        #[arg(long)]
        range_b_km: Option<f64>,
        #[arg(long)]
        elevation_b_deg: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum OrbitCommand {
    Pass {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = DEFAULT_MIN_ELEVATION_DEG)]
        min_elev_deg: f64,
        #[arg(long, default_value_t = orbit::DEFAULT_STEP_S)]
        step_s: f64,
    },
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// short, medium, long or all
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, default_value_t = DEFAULT_FIDELITY_MIN)]
    fmin: f64,
    #[arg(long, default_value_t = orbit::DEFAULT_STEP_S)]
    step_s: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated user separations [km].
    #[arg(long, value_delimiter = ',', default_value = "90,200,300,440,980")]
    distances: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_FIDELITY_MIN)]
    fmin: f64,
    #[arg(long, default_value_t = orbit::DEFAULT_STEP_S)]
    step_s: f64,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    Elem {
        #[arg(long)]
        arm_km: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Chain {
        #[arg(long)]
        distance_km: f64,
        #[arg(long)]
        repeaters: u32,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub params: SystemParams,
    pub scenario: Option<String>,
    pub code_version: &'static str,
    pub seeds: Vec<u64>,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

/// A named output: file stem plus the rendered content.
struct Output {
    file: String,
    body: String,
}

struct Run {
    outputs: Vec<Output>,
    scenario: Option<String>,
    seeds: Vec<u64>,
}

impl Run {
    fn single(file: impl Into<String>, body: String) -> Self {
        Run {
            outputs: vec![Output { file: file.into(), body }],
            scenario: None,
            seeds: Vec::new(),
        }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit status.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let first = e.to_string().lines().next().unwrap_or("usage error").to_string();
            let _ = writeln!(err, "{}", json!({"error": "usage", "message": first.trim_start_matches("error: ")}));
            return EXIT_USAGE;
        }
    };
    let command_line: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, command_line, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", json!({"error": e.kind(), "message": e.to_string()}));
            match e {
                Error::Io(_) | Error::Serialize(_) => EXIT_FAILURE,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn load_effective_params(cli: &Cli) -> Result<SystemParams> {
    let overrides = cli
        .params
        .iter()
        .map(|p| params::parse_override(p))
        .collect::<Result<Vec<_>>>()?;
    match &cli.config {
        Some(path) => params::load_params(path, &overrides),
        None => SystemParams::from_toml_str("", &overrides),
    }
}

fn execute(cli: &Cli, command_line: Vec<String>, out: &mut dyn Write) -> Result<()> {
    let params = load_effective_params(cli)?;
    let run = match &cli.command {
        Command::Params(ParamsCommand::Show) => params_show(&params, cli.format)?,
        Command::Ground(cmd) => ground(&params, cmd, cli.format.unwrap_or(Format::Json))?,
        Command::Space(cmd) => space(&params, cmd, cli.format.unwrap_or(Format::Json))?,
        Command::Orbit(cmd) => orbit_pass(&params, cmd, cli.format.unwrap_or(Format::Csv))?,
        Command::Compare(args) => compare(&params, args, cli.format.unwrap_or(Format::Json))?,
        Command::Sweep(args) => sweep(&params, args, cli.format.unwrap_or(Format::Json))?,
        Command::Oracle(cmd) => oracle(&params, cmd)?,
    };
    match &cli.output_dir {
        Some(dir) => write_outputs(dir, &run, &params, command_line, out),
        None => {
            if let Some(primary) = run.outputs.first() {
                out.write_all(primary.body.as_bytes())?;
            }
            Ok(())
        }
    }
}

fn write_outputs(dir: &Path, run: &Run, params: &SystemParams, command_line: Vec<String>, out: &mut dyn Write) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for o in &run.outputs {
        std::fs::write(dir.join(&o.file), &o.body)?;
        writeln!(out, "{}", dir.join(&o.file).display())?;
    }
    let manifest = RunManifest {
        command_line,
        params: params.clone(),
        scenario: run.scenario.clone(),
        code_version: env!("CARGO_PKG_VERSION"),
        seeds: run.seeds.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        outputs: run.outputs.iter().map(|o| o.file.clone()).collect(),
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, to_json(&manifest)?)?;
    writeln!(out, "{}", path.display())?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Serialize(e.to_string()))
}

/// Formats a number with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn params_show(params: &SystemParams, format: Option<Format>) -> Result<Run> {
    Ok(match format {
        Some(Format::Json) => Run::single("params.json", to_json(params)?),
        Some(Format::Csv) => {
            let value = serde_json::to_value(params).map_err(|e| Error::Serialize(e.to_string()))?;
            let mut body = csv_line(&["key".into(), "value".into()]);
            if let Some(map) = value.as_object() {
                for (k, v) in map {
                    body.push_str(&csv_line(&[k.clone(), v.to_string().trim_matches('"').to_string()]));
                }
            }
            Run::single("params.csv", body)
        }
        None => Run::single("params.txt", params.show()?),
    })
}

const GROUND_CSV_HEADER: [&str; 9] = [
    "distance_km",
    "repeaters",
    "eta_channel",
    "p_elem_unnormalized",
    "p_elem",
    "p_chain",
    "pair_rate",
    "werner",
    "fidelity",
];

fn ground_csv_row(distance: f64, r: &ground_chain::GroundPathResult) -> String {
    csv_line(&[
        sig6(distance / 1e3),
        r.repeaters.to_string(),
        sig6(r.eta_channel),
        sig6(r.p_elem_unnormalized),
        sig6(r.p_elem),
        sig6(r.p_chain),
        sig6(r.pair_rate),
        sig6(r.werner),
        sig6(r.fidelity),
    ])
}

fn ground(params: &SystemParams, cmd: &GroundCommand, format: Format) -> Result<Run> {
    match *cmd {
        GroundCommand::Eval { distance_km, repeaters } => {
            let spec = ChainSpec::from_km(distance_km, repeaters)?;
            let r = ground_chain::evaluate_ground_path(params, &spec)?;
            Ok(match format {
                Format::Json => Run::single(
                    "ground_eval.json",
                    to_json(&json!({"distance_km": distance_km, "result": r}))?,
                ),
                Format::Csv => {
                    let header: Vec<String> = GROUND_CSV_HEADER.iter().map(|s| s.to_string()).collect();
                    Run::single("ground_eval.csv", csv_line(&header) + &ground_csv_row(spec.distance, &r))
                }
            })
        }
        GroundCommand::Optimize { distance_km, fmin, m_max } => {
            let distance = distance_km * 1e3;
            let opt = ground_chain::optimize_repeaters(params, distance, fmin, m_max)?;
            Ok(match format {
                Format::Json => Run::single(
                    "ground_optimize.json",
                    to_json(&json!({"distance_km": distance_km, "fmin": fmin, "m_max": m_max, "optimum": opt}))?,
                ),
                Format::Csv => {
                    // One row per candidate count, with a feasibility flag.
                    let mut header: Vec<String> = GROUND_CSV_HEADER.iter().map(|s| s.to_string()).collect();
                    header.push("feasible".into());
                    header.push("optimal".into());
                    let mut body = csv_line(&header);
                    let best = match opt {
                        RepeaterOptimum::Feasible { repeaters, .. } => Some(repeaters),
                        RepeaterOptimum::Infeasible => None,
                    };
                    for r in ground_chain::sweep_repeaters(params, distance, m_max)? {
                        let mut row = ground_csv_row(distance, &r);
                        row.pop();
                        row.push_str(&format!(",{},{}\n", r.fidelity >= fmin, best == Some(r.repeaters)));
                        body.push_str(&row);
                    }
                    Run::single("ground_optimize.csv", body)
                }
            })
        }
    }
}

fn space(params: &SystemParams, cmd: &SpaceCommand, format: Format) -> Result<Run> {
    let SpaceCommand::Eval {
        range_km,
        elevation_deg,
        range_b_km,
        elevation_b_deg,
    } = *cmd;
    let a = LinkGeometry::from_km_deg(range_km, elevation_deg)?;
    let b = LinkGeometry::from_km_deg(range_b_km.unwrap_or(range_km), elevation_b_deg.unwrap_or(elevation_deg))?;
    let eta_a = space_link::channel_efficiency(params, &a)?;
    let eta_b = space_link::channel_efficiency(params, &b)?;
    let rate = space_link::pair_rate_from_efficiencies(params, eta_a, eta_b)?;
    let stray = space_link::stray_light(params, &a, &b)?;
    let fidelity = space_link::space_fidelity_from_car(params, stray.car)?;
    Ok(match format {
        Format::Json => Run::single(
            "space_eval.json",
            to_json(&json!({
                "geometry_a": a,
                "geometry_b": b,
                "eta_a": eta_a,
                "eta_b": eta_b,
                "eta_a_db": 10.0 * eta_a.log10(),
                "eta_b_db": 10.0 * eta_b.log10(),
                "pair_rate": rate,
                "stray_rate_per_arm": stray.stray_rate_per_arm,
                "car": if stray.car.is_finite() { json!(stray.car) } else { json!("inf") },
                "werner_stray": stray.werner_stray,
                "fidelity": fidelity,
            }))?,
        ),
        Format::Csv => Run::single(
            "space_eval.csv",
            csv_line(&["eta_a", "eta_b", "pair_rate", "car", "fidelity"].map(String::from))
                + &csv_line(&[sig6(eta_a), sig6(eta_b), sig6(rate), sig6(stray.car), sig6(fidelity)]),
        ),
    })
}

fn orbit_pass(params: &SystemParams, cmd: &OrbitCommand, format: Format) -> Result<Run> {
    let OrbitCommand::Pass {
        ref scenario,
        min_elev_deg,
        step_s,
    } = *cmd;
    let spec = scenario::builtin_scenario(scenario)?.with_min_elevation(min_elev_deg.to_radians())?;
    let opts = PassOptions {
        step: step_s,
        ..PassOptions::default()
    };
    let (orbit, pass) = scenario::tuned_pass(params, &spec, &opts)?;
    let status = if pass.is_empty() { "empty_pass" } else { "ok" };
    let mut run = match format {
        Format::Json => Run::single(
            format!("pass_{scenario}.json"),
            to_json(&json!({"scenario": scenario, "status": status, "orbit": orbit, "pass": pass}))?,
        ),
        Format::Csv => {
            let mut body = format!("# scenario={scenario} status={status}\n");
            body.push_str(&csv_line(
                &["time", "elev_A_deg", "range_A_km", "elev_B_deg", "range_B_km"].map(String::from),
            ));
            for s in &pass.samples {
                body.push_str(&csv_line(&[
                    sig6(s.time),
                    sig6(s.a.elevation.to_degrees()),
                    sig6(s.a.slant_range / 1e3),
                    sig6(s.b.elevation.to_degrees()),
                    sig6(s.b.slant_range / 1e3),
                ]));
            }
            Run::single(format!("pass_{scenario}.csv"), body)
        }
    };
    run.scenario = Some(scenario.clone());
    Ok(run)
}

fn selected_scenarios(name: &str) -> Result<Vec<scenario::ScenarioSpec>> {
    if name == "all" {
        Ok(scenario::builtin_scenarios())
    } else {
        Ok(vec![scenario::builtin_scenario(name)?])
    }
}

fn time_series_csv(c: &Comparison) -> String {
    let mut body = csv_line(&["t_s", "rate_pairs_per_s", "integrated_pairs"].map(String::from));
    for (s, cum) in c.space.samples.iter().zip(&c.space.cumulative_pairs) {
        body.push_str(&csv_line(&[sig6(s.time), sig6(s.pair_rate), sig6(*cum)]));
    }
    body
}

/// Whitespace-separated columns for plotting the pass time series.
fn time_series_dat(c: &Comparison) -> String {
    let mut body = format!("# {} : t_s rate_pairs_per_s integrated_pairs\n", c.report.scenario);
    for (s, cum) in c.space.samples.iter().zip(&c.space.cumulative_pairs) {
        body.push_str(&format!("{} {} {}\n", sig6(s.time), sig6(s.pair_rate), sig6(*cum)));
    }
    body
}

/// One row per scenario: pairs per method over the pass, for a grouped bar plot.
fn methods_dat(comparisons: &[Comparison]) -> String {
    let mut body = String::from("# scenario satellite ground_no_repeater ground_optimized optimal_repeaters\n");
    for c in comparisons {
        let r = &c.report;
        body.push_str(&format!(
            "{} {} {} {} {}\n",
            r.scenario,
            sig6(r.satellite.integrated_pairs),
            sig6(r.ground_no_repeater.pairs),
            sig6(r.ground_optimized.pairs()),
            r.ground_optimized.repeaters().map_or("-".to_string(), |m| m.to_string()),
        ));
    }
    body
}

fn summary_csv(comparisons: &[Comparison]) -> String {
    let mut body = csv_line(
        &["scenario", "method", "repeaters", "rate_pairs_per_s", "pairs_over_pass", "fidelity", "pass_duration_s"]
            .map(String::from),
    );
    for c in comparisons {
        let r = &c.report;
        let opt_fid = r.ground_optimized.result().map(|g| sig6(g.fidelity)).unwrap_or_default();
        let opt_rate = r.ground_optimized.result().map(|g| sig6(g.pair_rate)).unwrap_or_default();
        let rows = [
            [
                r.scenario.clone(),
                "satellite".into(),
                String::new(),
                sig6(r.satellite.peak_rate),
                sig6(r.satellite.integrated_pairs),
                r.satellite.fidelity.map(sig6).unwrap_or_default(),
                sig6(r.pass_duration),
            ],
            [
                r.scenario.clone(),
                "ground_no_repeater".into(),
                "0".into(),
                sig6(r.ground_no_repeater.result.pair_rate),
                sig6(r.ground_no_repeater.pairs),
                sig6(r.ground_no_repeater.result.fidelity),
                sig6(r.pass_duration),
            ],
            [
                r.scenario.clone(),
                "ground_optimized".into(),
                r.ground_optimized.repeaters().map(|m| m.to_string()).unwrap_or_default(),
                opt_rate,
                sig6(r.ground_optimized.pairs()),
                opt_fid,
                sig6(r.pass_duration),
            ],
        ];
        for row in rows {
            body.push_str(&csv_line(&row));
        }
    }
    body
}

fn compare(params: &SystemParams, args: &CompareArgs, format: Format) -> Result<Run> {
    let opts = PassOptions {
        step: args.step_s,
        ..PassOptions::default()
    };
    let comparisons = selected_scenarios(&args.scenario)?
        .iter()
        .map(|spec| scenario::compare(params, spec, args.fmin, &opts))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<_> = comparisons.iter().map(|c| &c.report).collect();
    let mut outputs = vec![match format {
        Format::Json => Output {
            file: "compare.json".into(),
            body: to_json(&reports)?,
        },
        Format::Csv => Output {
            file: "compare.csv".into(),
            body: summary_csv(&comparisons),
        },
    }];
    for c in &comparisons {
        outputs.push(Output {
            file: format!("space_{}.csv", c.report.scenario),
            body: time_series_csv(c),
        });
        outputs.push(Output {
            file: format!("pass_rate_{}.dat", c.report.scenario),
            body: time_series_dat(c),
        });
    }
    outputs.push(Output {
        file: "methods.dat".into(),
        body: methods_dat(&comparisons),
    });
    // The summary comes first: it is what goes to stdout without an output directory.
    Ok(Run {
        outputs,
        scenario: Some(args.scenario.clone()),
        seeds: Vec::new(),
    })
}

fn sweep(params: &SystemParams, args: &SweepArgs, format: Format) -> Result<Run> {
    let opts = PassOptions {
        step: args.step_s,
        ..PassOptions::default()
    };
    let distances: Vec<f64> = args.distances.iter().map(|km| km * 1e3).collect();
    let table = scenario::crossover_sweep(params, &distances, args.fmin, &opts)?;
    Ok(match format {
        Format::Json => Run::single("sweep.json", to_json(&table)?),
        Format::Csv => {
            let mut body = csv_line(
                &["distance_km", "best", "satellite_pairs", "ground_pairs", "ratio", "repeaters", "pass_duration_s"]
                    .map(String::from),
            );
            for r in &table.rows {
                body.push_str(&csv_line(&[
                    sig6(r.distance / 1e3),
                    format!("{:?}", r.best).to_lowercase(),
                    sig6(r.satellite_pairs),
                    sig6(r.ground_pairs),
                    sig6(r.ratio),
                    r.optimal_repeaters.map(|m| m.to_string()).unwrap_or_default(),
                    sig6(r.pass_duration),
                ]));
            }
            Run::single("sweep.csv", body)
        }
    })
}

fn oracle(params: &SystemParams, cmd: &OracleCommand) -> Result<Run> {
    let (label, estimate, analytic) = match *cmd {
        OracleCommand::Elem { arm_km, trials, seed } => {
            let eta = ground_chain::fiber_efficiency(arm_km * 1e3, params.fiber_attenuation)?;
            let est = mc_oracle::simulate_elementary(params, eta, trials, seed)?;
            let analytic = ground_chain::elem_success_prob(params, eta)?.unnormalized;
            ("oracle_elem", est, analytic)
        }
        OracleCommand::Chain {
            distance_km,
            repeaters,
            trials,
            seed,
        } => {
            let spec = ChainSpec::from_km(distance_km, repeaters)?;
            let est = mc_oracle::simulate_chain(params, &spec, trials, seed)?;
            let analytic = ground_chain::chain_success_numerator(params, &spec)?;
            ("oracle_chain", est, analytic)
        }
    };
    let sigma = (analytic * (1.0 - analytic) / estimate.trials as f64).sqrt();
    let z = if sigma > 0.0 {
        (estimate.mean - analytic) / sigma
    } else {
        0.0
    };
    let seed = estimate.rng_seed;
    let body = to_json(&json!({
        "estimate": estimate,
        "analytic": analytic,
        "z_score": z,
        "within_3_sigma": z.abs() < 3.0 || (sigma == 0.0 && estimate.mean == analytic),
    }))?;
    let mut run = Run::single(format!("{label}.json"), body);
    run.seeds.push(seed);
    Ok(run)
}
