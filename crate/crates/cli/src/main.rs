mod strategy;

use clap::{Args, Parser, Subcommand};
use fairshed::consensus::{
    consensus_division_lp, consensus_division_min_cuts, reduce_consensus_to_electricity,
    ConsensusDivision, MinCutOptions, MinCutOutcome,
};
use fairshed::io::{
    generate_instance, instance_to_json, load_instance, read_schedule, write_schedule,
    write_schedule_csv, DemandProfile, GeneratorConfig, MetricsBlock, Provenance, ScheduleReport,
};
use fairshed::packing::{
    best_packing_ratio, bin_pack, q_times_bin_pack, BinPackMode, FeasibleSet, PackingOptions,
    QPackingOutcome,
};
use fairshed::rational::{format_rational, parse_rational, to_f64};
use fairshed::{check_feasible, compute_metrics, Instance, PiecewiseConstantUtility, Rational};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;
use strategy::Strategy;

#[derive(Parser)]
#[command(name = "fairshed", version, about = "Fair electricity distribution under a supply cap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// Rescale every utility to total 1 (default).
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,
    /// Keep utilities as given.
    #[arg(long)]
    no_normalize: bool,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance, Failure> {
        Ok(load_instance(&self.instance, !self.no_normalize)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute a schedule with one strategy.
    Solve {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Schedule CSV; a `.metrics.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a schedule never exceeds the supply.
    Check {
        #[command(flatten)]
        input: InstanceArgs,
        schedule: PathBuf,
    },
    /// Welfare and switching metrics of a schedule.
    Metrics {
        #[command(flatten)]
        input: InstanceArgs,
        schedule: PathBuf,
    },
    /// Bin packing and q-times bin packing of the demands.
    Pack {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Also report the best q/k over q = 1..=Q.
        #[arg(long)]
        q_max: Option<usize>,
        #[arg(long, default_value_t = 10)]
        time_budget_secs: u64,
        /// Write the q-times packing as a schedule.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consensus k-division of the timeline among the instance's agents.
    Consensus {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value = "1e-6")]
        epsilon: String,
        #[arg(long, default_value_t = 10)]
        time_budget_secs: u64,
        /// Largest cut count to try (default n(k-1)).
        #[arg(long)]
        max_cuts: Option<usize>,
        /// Exact division splitting every segment instead of the cut search.
        #[arg(long)]
        lp: bool,
    },
    /// Electricity instance encoding 2-consensus among the instance's agents.
    Reduce {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random instance.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        supply: String,
        #[arg(long, default_value = "24")]
        horizon: String,
        #[arg(long, default_value_t = 1)]
        segments: usize,
        /// identical | uniform-random | heavy-tailed
        #[arg(long, default_value = "uniform-random")]
        profile: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several strategies and tabulate their metrics.
    Compare {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, value_enum, value_delimiter = ',')]
        strategies: Vec<Strategy>,
    },
}

enum Failure {
    Usage(String),
    /// Infeasible input or nothing found within the budget.
    NotFound(String),
}

impl From<fairshed::Error> for Failure {
    fn from(e: fairshed::Error) -> Self {
        match e {
            fairshed::Error::Infeasible(_) | fairshed::Error::GfsInfeasible(_) => {
                Failure::NotFound(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotFound(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn rational_arg(name: &str, text: &str) -> Result<Rational, Failure> {
    parse_rational(text).map_err(|e| Failure::Usage(format!("--{name}: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("valid JSON") + "\n"
}

fn ids(instance: &Instance, set: &FeasibleSet) -> Vec<usize> {
    set.members().iter().map(|&i| instance.agent(i).id).collect()
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve {
            input,
            strategy,
            out,
        } => {
            let instance = input.load()?;
            let solved = strategy::run(strategy, &instance)?;
            let metrics = compute_metrics(&instance, &solved.allocation)?;
            let summary = format!(
                "{}: eg={} ut={} ef={} switches={}",
                strategy.name(),
                format_rational(&metrics.egalitarian),
                format_rational(&metrics.utilitarian),
                format_rational(&metrics.max_difference),
                metrics.switch_count
            );
            match out {
                Some(path) => {
                    let provenance = Provenance::new(strategy.name(), solved.optimal)
                        .with_parameter("normalize", !input.no_normalize);
                    let report = ScheduleReport {
                        metrics: MetricsBlock::new(&instance, &metrics),
                        provenance,
                        details: Some(solved.details),
                    };
                    write_schedule(&path, &instance, &solved.allocation, &report)?;
                    println!("{summary}");
                }
                None => {
                    print!("{}", write_schedule_csv(&instance, &solved.allocation)?);
                    eprintln!("{summary}");
                }
            }
            Ok(())
        }
        Command::Check { input, schedule } => {
            let instance = input.load()?;
            let allocation = read_schedule(&schedule, &instance)?;
            let report = check_feasible(&instance, &allocation)?;
            if report.is_ok() {
                println!("feasible");
                Ok(())
            } else {
                println!("{report}");
                Err(Failure::NotFound("schedule exceeds the supply".into()))
            }
        }
        Command::Metrics { input, schedule } => {
            let instance = input.load()?;
            let allocation = read_schedule(&schedule, &instance)?;
            let metrics = compute_metrics(&instance, &allocation)?;
            let block = MetricsBlock::new(&instance, &metrics);
            print!("{}", pretty(&serde_json::to_value(block).expect("serializable")));
            Ok(())
        }
        Command::Pack {
            input,
            q,
            q_max,
            time_budget_secs,
            out,
        } => pack(&input.load()?, q, q_max, time_budget_secs, out.as_deref()),
        Command::Consensus {
            input,
            k,
            epsilon,
            time_budget_secs,
            max_cuts,
            lp,
        } => {
            let instance = input.load()?;
            let valuations: Vec<PiecewiseConstantUtility> =
                instance.utilities().cloned().collect();
            if lp {
                let division = consensus_division_lp(&valuations, k)?;
                print!("{}", pretty(&division_json(&division, &valuations)?));
                return Ok(());
            }
            let epsilon = rational_arg("epsilon", &epsilon)?;
            let options = MinCutOptions {
                max_cuts,
                time_budget: Duration::from_secs(time_budget_secs),
            };
            match consensus_division_min_cuts(&valuations, k, &epsilon, &options)? {
                MinCutOutcome::Found(division) => {
                    print!("{}", pretty(&division_json(&division, &valuations)?));
                    Ok(())
                }
                MinCutOutcome::NotFound {
                    best_residual,
                    max_cuts,
                    exhausted,
                } => {
                    print!(
                        "{}",
                        pretty(&json!({
                            "found": false,
                            "max_cuts": max_cuts,
                            "exhausted": exhausted,
                            "best_residual": best_residual.as_ref().map(format_rational),
                        }))
                    );
                    Err(Failure::NotFound(format!(
                        "no division within epsilon using at most {max_cuts} cuts"
                    )))
                }
            }
        }
        Command::Reduce { input, out } => {
            let instance = input.load()?;
            let valuations: Vec<PiecewiseConstantUtility> =
                instance.utilities().cloned().collect();
            let reduced = reduce_consensus_to_electricity(&valuations)?;
            emit(out.as_deref(), &pretty(&instance_to_json(&reduced)))
        }
        Command::Gen {
            seed,
            n,
            supply,
            horizon,
            segments,
            profile,
            out,
        } => {
            let profile: DemandProfile = profile.parse()?;
            let config = GeneratorConfig {
                seed,
                n,
                supply: rational_arg("supply", &supply)?,
                horizon: rational_arg("horizon", &horizon)?,
                segments,
                profile,
            };
            let instance = generate_instance(&config)?;
            let mut doc = instance_to_json(&instance);
            doc["provenance"] = json!({
                "generator": "fairshed gen",
                "seed": seed,
                "profile": profile.to_string(),
                "segments": segments,
            });
            emit(out.as_deref(), &pretty(&doc))
        }
        Command::Compare { input, strategies } => {
            let instance = input.load()?;
            let strategies = if strategies.is_empty() {
                vec![
                    Strategy::UniformIdentical,
                    Strategy::Evenpaz,
                    Strategy::EgalitarianUniform,
                    Strategy::Gfs,
                    Strategy::EgalitarianAdditive,
                ]
            } else {
                strategies
            };
            compare(&instance, &strategies);
            Ok(())
        }
    }
}

fn pack(
    instance: &Instance,
    q: usize,
    q_max: Option<usize>,
    time_budget_secs: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let demands = instance.demands();
    let options = PackingOptions {
        time_budget: Duration::from_secs(time_budget_secs),
        ..PackingOptions::default()
    };
    let mode = if instance.n() <= options.max_agents {
        BinPackMode::Exact
    } else {
        BinPackMode::FirstFitDecreasing
    };
    let bins = bin_pack(&demands, instance.supply(), mode, &options)?;
    let bins_json = |sets: &[FeasibleSet]| -> Vec<Vec<usize>> {
        sets.iter().map(|s| ids(instance, s)).collect()
    };
    let mut doc = json!({
        "bin_packing": {
            "k": bins.k(),
            "optimal": bins.optimal,
            "bins": bins_json(&bins.bins),
        }
    });
    let outcome = q_times_bin_pack(&demands, instance.supply(), q, &options)?;
    match &outcome {
        QPackingOutcome::Found(p) => {
            doc["q_packing"] = json!({
                "q": p.q,
                "k": p.k(),
                "ratio": format_rational(&p.ratio()),
                "ratio_f64": to_f64(&p.ratio()),
                "optimal": p.optimal,
                "bins": bins_json(&p.bins),
            });
        }
        QPackingOutcome::NotFound {
            max_bins,
            exhausted,
        } => {
            doc["q_packing"] = json!({
                "q": q,
                "found": false,
                "max_bins": max_bins,
                "exhausted": exhausted,
            });
        }
    }
    if let Some(q_max) = q_max {
        let best = best_packing_ratio(&demands, instance.supply(), q_max, &options)?;
        doc["best_ratio"] = json!({
            "q": best.q,
            "k": best.k,
            "ratio": format_rational(&best.ratio),
            "q_max": best.q_max,
            "bins": bins_json(&best.packing.bins),
        });
    }
    print!("{}", pretty(&doc));
    let Some(packing) = outcome.into_packing() else {
        return Err(Failure::NotFound(format!(
            "no {q}-times packing found within the limits"
        )));
    };
    if let Some(path) = out {
        let allocation = packing.to_allocation(instance.n(), instance.horizon());
        let metrics = compute_metrics(instance, &allocation)?;
        let report = ScheduleReport {
            metrics: MetricsBlock::new(instance, &metrics),
            provenance: Provenance::new("q-times-bin-packing", packing.optimal)
                .with_parameter("q", q)
                .with_parameter("time_budget_secs", time_budget_secs),
            details: Some(json!({ "k": packing.k(), "bins": bins_json(&packing.bins) })),
        };
        write_schedule(path, instance, &allocation, &report)?;
    }
    Ok(())
}

fn division_json(
    division: &ConsensusDivision,
    valuations: &[PiecewiseConstantUtility],
) -> Result<Value, Failure> {
    let values = division.values(valuations)?;
    Ok(json!({
        "found": true,
        "k": division.k(),
        "cut_count": division.cut_count(),
        "max_deviation": format_rational(&division.max_deviation(valuations)?),
        "pieces": division.labels().iter().map(|(iv, label)| json!({
            "start": format_rational(iv.start()),
            "end": format_rational(iv.end()),
            "piece": label,
        })).collect::<Vec<_>>(),
        "values": values.iter().map(|row| row.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
    }))
}

fn compare(instance: &Instance, strategies: &[Strategy]) {
    let mut rows: Vec<[String; 6]> = vec![[
        "strategy".into(),
        "eg".into(),
        "ut".into(),
        "ef".into(),
        "switches".into(),
        "shares".into(),
    ]];
    for &s in strategies {
        let row = match strategy::run(s, instance)
            .and_then(|solved| Ok((compute_metrics(instance, &solved.allocation)?, solved)))
        {
            Ok((m, solved)) => [
                s.name().to_string(),
                format_rational(&m.egalitarian),
                format_rational(&m.utilitarian),
                format_rational(&m.max_difference),
                m.switch_count.to_string(),
                strategy::shares_summary(&solved.details),
            ],
            Err(e) => [
                s.name().to_string(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                format!("n/a: {e}"),
            ],
        };
        rows.push(row);
    }
    let widths: Vec<usize> = (0..6)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }
}
