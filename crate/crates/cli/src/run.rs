//! Dispatch of a validated [`RunConfig`] to the library, and report output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use qel_core::analytics::{finite_dim_lst, mean_externality, variance_externality, MomentReport};
use qel_core::crossing::CrossingReport;
use qel_core::fclt::{condition_check, scaled_externality_experiment, ScalingSequence};
use qel_core::rng::replicate;
use qel_core::sim::{externality_from_path, simulate_path};
use qel_core::stats::Summary;
use qel_core::{count_pmf, BusyPeriodLaw, ModelParams, PmfOptions, RngStream};

use crate::config::{Command, Format, InitSpec, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Plot-ready table; cells are preformatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// 17 significant digits, locale-free.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub json: Value,
    pub table: Option<Table>,
}

/// `{schema_version, version, command, config, ...fields}`.
fn envelope(config: &RunConfig, fields: impl Serialize) -> Value {
    // the report location is not part of what was computed
    let mut resolved = config.clone();
    resolved.output.path = None;
    let mut out = Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("version".into(), json!(qel_core::VERSION));
    out.insert("command".into(), json!(config.command.name()));
    out.insert(
        "config".into(),
        serde_json::to_value(resolved).expect("config serialises"),
    );
    match serde_json::to_value(fields).expect("report serialises") {
        Value::Object(map) => out.extend(map),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

/// Fills in the seed for sampling commands: explicit, else `QEL_SEED`, else
/// generated and logged.
pub fn resolve_seed(config: &mut RunConfig) -> Result<(), CliError> {
    if !config.command.samples() || config.experiment.seed.is_some() {
        return Ok(());
    }
    if let Ok(text) = std::env::var("QEL_SEED") {
        let seed = text.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "QEL_SEED must be an unsigned integer, got {text:?}"
            ))
        })?;
        config.experiment.seed = Some(seed);
        return Ok(());
    }
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    let seed = nanos ^ (u64::from(std::process::id()) << 32);
    log::warn!("no seed given; using auto-generated seed {seed}");
    config.experiment.seed = Some(seed);
    Ok(())
}

/// Validates and runs `config`.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let diagnostics = config.validate();
    if !diagnostics.is_empty() {
        let head = if diagnostics.iter().any(|d| d.contains("rho must be < 1")) {
            "unstable model"
        } else {
            "invalid config"
        };
        return Err(CliError::Config(format!(
            "{head}:\n  {}",
            diagnostics.join("\n  ")
        )));
    }
    match config.command {
        Command::BusyPeriod => busy_period(config),
        Command::Moments => moments(config),
        Command::Lst => lst(config),
        Command::Simulate => simulate(config),
        Command::Crossing => crossing(config),
        Command::Fclt => fclt(config),
    }
}

fn busy_period(config: &RunConfig) -> Result<Report, CliError> {
    let opts = PmfOptions {
        s_max: config.experiment.s_max,
        ..PmfOptions::default()
    };
    let law = BusyPeriodLaw::with_options(config.lambda(), config.dist().clone(), &opts)?;
    let mut table = Table::new(&["s", "N_s"]);
    for (i, p) in law.pmf().iter().enumerate() {
        table.rows.push(vec![(i + 1).to_string(), num(*p)]);
    }
    let json = envelope(
        config,
        json!({
            "eta": law.moments(),
            "tail_mass": law.tail_mass(),
            "s_computed": law.pmf().len(),
        }),
    );
    Ok(Report {
        json,
        table: Some(table),
    })
}

fn moments(config: &RunConfig) -> Result<Report, CliError> {
    let init = config.initial_workload()?;
    let results: Vec<MomentReport> = config
        .experiment
        .x
        .iter()
        .map(|&x| {
            MomentReport::compute(
                config.lambda(),
                config.dist(),
                &init,
                x,
                config.experiment.x2,
            )
        })
        .collect::<qel_core::Result<_>>()?;
    let mut table = Table::new(&["x1", "x2", "mean", "variance", "covariance", "correlation"]);
    for r in &results {
        table.rows.push(vec![
            num(r.x1),
            num(r.x2),
            num(r.mean),
            num(r.variance),
            num(r.covariance),
            opt_num(r.correlation),
        ]);
    }
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "x1": r.x1,
                "x2": r.x2,
                "mean": r.mean,
                "variance": r.variance,
                "covariance": r.covariance,
                "correlation": r.correlation,
            })
        })
        .collect();
    let json = envelope(
        config,
        json!({
            "v_mean": init.mean(),
            "v_variance": init.variance(),
            "results": rows,
        }),
    );
    Ok(Report {
        json,
        table: Some(table),
    })
}

fn lst(config: &RunConfig) -> Result<Report, CliError> {
    let init = config.initial_workload()?;
    let exp = &config.experiment;
    // the grid holds the cumulative points X_l; the transform takes increments
    let increments: Vec<f64> = std::iter::once(exp.x[0])
        .chain(exp.x.windows(2).map(|w| w[1] - w[0]))
        .collect();
    let value = finite_dim_lst(
        config.lambda(),
        config.dist(),
        &init,
        &increments,
        &exp.alpha,
    )?;
    let mut table = Table::new(&["lst_value", "quadrature_error"]);
    table
        .rows
        .push(vec![num(value.lst_value), num(value.quadrature_error)]);
    Ok(Report {
        json: envelope(config, value),
        table: Some(table),
    })
}

fn simulate(config: &RunConfig) -> Result<Report, CliError> {
    let exp = &config.experiment;
    let params = ModelParams::new(
        config.lambda(),
        config.dist().clone(),
        config.initial_workload()?,
    )?;
    let x_max = *exp.x.last().expect("validated grid");
    let root = RngStream::new(exp.seed.expect("resolved seed"));
    let rows: Vec<Option<(f64, Vec<f64>)>> = replicate(&root, exp.reps, |_, rng| {
        let path = simulate_path(&params, x_max, rng, exp.max_events).ok()?;
        if path.truncated {
            return None;
        }
        let e = exp
            .x
            .iter()
            .map(|&x| externality_from_path(&path, x))
            .collect::<qel_core::Result<_>>();
        Some((path.v, e.ok()?))
    });
    let truncated = rows.iter().filter(|r| r.is_none()).count();
    if truncated > 0 {
        return Err(CliError::Truncated(qel_core::Error::Truncated {
            max_events: exp.max_events,
        }));
    }
    let rows: Vec<(f64, Vec<f64>)> = rows.into_iter().flatten().collect();

    let mut header = vec!["rep".to_string(), "v".to_string()];
    header.extend(exp.x.iter().map(|x| format!("E({x})")));
    let mut table = Table {
        header,
        rows: Vec::with_capacity(rows.len()),
    };
    for (i, (v, e)) in rows.iter().enumerate() {
        let mut row = vec![i.to_string(), num(*v)];
        row.extend(e.iter().map(|x| num(*x)));
        table.rows.push(row);
    }

    let init = &params.init;
    let summaries = exp
        .x
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let column: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
            let s = Summary::of(&column);
            Ok(json!({
                "x": x,
                "sample_mean": s.mean,
                "std_error": s.std_error,
                "sample_variance": s.variance,
                "mean": mean_externality(params.lambda, &params.dist, init, x)?,
                "variance": variance_externality(params.lambda, &params.dist, init, x)?,
            }))
        })
        .collect::<Result<Vec<Value>, CliError>>()?;
    let json = envelope(config, json!({ "reps": exp.reps, "summary": summaries }));
    Ok(Report {
        json,
        table: Some(table),
    })
}

fn crossing(config: &RunConfig) -> Result<Report, CliError> {
    let law = count_pmf(config.lambda(), config.dist(), config.experiment.s_max)?;
    let results: Vec<CrossingReport> = config
        .experiment
        .y
        .iter()
        .map(|&y| CrossingReport::compute(&law, y))
        .collect::<qel_core::Result<_>>()?;
    let mut table = Table::new(&["y", "psi0", "mean_crossing", "var_upsilon", "var_crossing"]);
    for r in &results {
        table.rows.push(vec![
            num(r.y),
            num(r.psi0),
            num(r.mean_crossing),
            num(r.var_upsilon),
            num(r.var_crossing),
        ]);
    }
    let fields = if let [single] = results.as_slice() {
        serde_json::to_value(single).expect("report serialises")
    } else {
        json!({ "results": results })
    };
    Ok(Report {
        json: envelope(config, fields),
        table: Some(table),
    })
}

fn fclt(config: &RunConfig) -> Result<Report, CliError> {
    let exp = &config.experiment;
    let v = match config.model.init {
        InitSpec::Fixed { v } => v,
        _ => unreachable!("validated config has a fixed v"),
    };
    let seq = ScalingSequence::new(config.sequence.clone(), v)?;
    let conditions = condition_check(&seq)?;
    let root = RngStream::new(exp.seed.expect("resolved seed"));
    let mut table = Table::new(&["n", "lambda", "rho", "x", "ks_stat", "ks_p", "ratio_iii"]);
    let mut experiments = Vec::new();
    for (i, row) in conditions.rows.iter().enumerate() {
        let report = scaled_externality_experiment(
            &seq,
            i,
            &exp.x,
            exp.reps,
            &root.split(i as u64),
            exp.max_events,
        )?;
        for m in &report.marginals {
            table.rows.push(vec![
                row.n.to_string(),
                num(row.lambda),
                num(row.rho),
                num(m.x),
                opt_num(m.ks.map(|k| k.statistic)),
                opt_num(m.ks.map(|k| k.p_value)),
                opt_num(row.ratio_iii),
            ]);
        }
        experiments.push(report);
    }
    let json = envelope(
        config,
        json!({
            "conditions": conditions,
            "experiments": experiments,
        }),
    );
    Ok(Report {
        json,
        table: Some(table),
    })
}

/// Writes `<command>.json` (and `<command>.csv` when there is a table) into
/// `dir`.
pub fn write_files(report: &Report, command: Command, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&report.json).expect("report serialises") + "\n";
    std::fs::write(dir.join(format!("{}.json", command.name())), json)?;
    if let Some(table) = &report.table {
        std::fs::write(dir.join(format!("{}.csv", command.name())), table.to_csv()?)?;
    }
    Ok(())
}

/// Writes the report where the config asks for it.
pub fn emit(report: &Report, config: &RunConfig, stdout: &mut impl Write) -> Result<(), CliError> {
    if let Some(dir) = &config.output.path {
        return write_files(report, config.command, dir);
    }
    match (config.output.format, &report.table) {
        (Format::Csv, Some(table)) => stdout.write_all(table.to_csv()?.as_bytes())?,
        _ => writeln!(
            stdout,
            "{}",
            serde_json::to_string_pretty(&report.json).expect("report serialises")
        )?,
    }
    Ok(())
}
