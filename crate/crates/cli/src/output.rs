//! Result files. Everything except the timing files is a pure function of the configuration and
//! the master seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Experiment;
use crate::experiment::{ExperimentResult, SummaryRow, TrialOutcome};
use crate::svg;
use crate::CliError;

pub const SUMMARY_HEADER: [&str; 11] = [
    "config",
    "model",
    "spec",
    "algorithm",
    "optimizer",
    "successes",
    "n_success",
    "n_trials",
    "mean_simulations",
    "mean_simulations_success",
    "mean_robustness",
];

/// Columns of the table that groups configurations the way the benchmark tables do.
pub const TABLE_HEADER: [&str; 6] = ["model", "spec", "algorithm", "optimizer", "time", "successes"];

fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn summary_record(r: &SummaryRow) -> Vec<String> {
    vec![
        r.config.clone(),
        r.model.clone(),
        r.spec.clone(),
        r.algorithm.clone(),
        r.optimizer.clone(),
        r.successes.clone(),
        r.n_success.to_string(),
        r.n_trials.to_string(),
        format!("{:.3}", r.mean_simulations),
        r.mean_simulations_success.map_or_else(String::new, |m| format!("{m:.3}")),
        real(r.mean_robustness),
    ]
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// CSV text of summary rows under the summary header.
pub fn summary_csv<'a>(rows: impl IntoIterator<Item = &'a SummaryRow>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record(summary_record(r))?;
    }
    Ok(finish(w))
}

/// CSV text of the benchmark-style table; `time` is the mean wall time per trial in seconds.
pub fn table_csv<'a>(rows: impl IntoIterator<Item = &'a SummaryRow>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        let time = format!("{:.3}", r.mean_wall_time.as_secs_f64());
        w.write_record([&r.model, &r.spec, &r.algorithm, &r.optimizer, &time, &r.successes])?;
    }
    Ok(finish(w))
}

fn timing_csv(result: &ExperimentResult) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "seed", "wall_time_s"])?;
    for t in &result.trials {
        w.write_record([t.index.to_string(), t.seed.to_string(), format!("{:.6}", t.wall_time.as_secs_f64())])?;
    }
    w.write_record(["mean".to_string(), String::new(), format!("{:.6}", result.summary.mean_wall_time.as_secs_f64())])?;
    w.write_record(["total".to_string(), String::new(), format!("{:.6}", result.wall_time.as_secs_f64())])?;
    Ok(finish(w))
}

#[derive(Serialize)]
struct Records<'a> {
    config: &'a str,
    model: &'a str,
    spec: &'a str,
    formula: &'a str,
    algorithm: &'a str,
    optimizer: &'a str,
    seed: u64,
    setup: &'a falsify_core::falsify::TrialSetup,
    #[serde(skip_serializing_if = "Option::is_none")]
    staging: Option<&'a falsify_core::staging::StagingConfig>,
    summary: &'a SummaryRow,
    trials: Vec<TrialOutcome>,
}

/// Paths of the files written for one experiment.
#[derive(Debug, Clone, Default)]
pub struct Written {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub timing: PathBuf,
    pub svg: Option<PathBuf>,
    pub signals: Option<(PathBuf, PathBuf)>,
}

/// Writes records, summary, timing and, when enabled, the best trajectory of an experiment.
pub fn write_experiment(exp: &Experiment, result: &ExperimentResult, dir: &Path) -> Result<Written, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Written {
        records: dir.join("records.json"),
        summary: dir.join("summary.csv"),
        timing: dir.join("timing.csv"),
        ..Default::default()
    };

    let trials = if exp.output.candidates {
        result.trials.clone()
    } else {
        result.trials.iter().map(TrialOutcome::compact).collect()
    };
    let records = Records {
        config: &exp.name,
        model: &exp.model_name,
        spec: &exp.spec_name,
        formula: &exp.spec_text,
        algorithm: exp.algorithm.as_str(),
        optimizer: exp.optimizer.as_str(),
        seed: exp.seed,
        setup: &exp.setup,
        staging: exp.algorithm.is_staged().then_some(&exp.staging),
        summary: &result.summary,
        trials,
    };
    let mut json = serde_json::to_vec_pretty(&records)?;
    json.push(b'\n');
    write_file(&written.records, &json)?;
    write_file(&written.summary, summary_csv([&result.summary])?.as_bytes())?;
    write_file(&written.timing, timing_csv(result)?.as_bytes())?;

    let Some(best) = result.best_trial() else {
        return Ok(written);
    };
    let Some(input) = best.input() else {
        return Ok(written);
    };
    let output = exp.model.simulate(&input)?;
    if exp.output.signals {
        let (ip, op) = (dir.join("best_input.csv"), dir.join("best_output.csv"));
        write_file(&ip, input.to_csv(Some(&exp.model.input_names())).as_bytes())?;
        write_file(&op, output.to_csv(Some(&exp.model.output_names())).as_bytes())?;
        written.signals = Some((ip, op));
    }
    if exp.output.svg {
        let verdict = if best.success { "falsified" } else { "not falsified" };
        let title = format!(
            "{} | {} | trial {} {verdict}, robustness {}",
            exp.name,
            exp.spec_text,
            best.index,
            real(best.robustness)
        );
        let doc = svg::render(&title, &input, &exp.model.input_names(), &output, &exp.model.output_names(), &exp.formula);
        let path = dir.join("best.svg");
        write_file(&path, doc.as_bytes())?;
        written.svg = Some(path);
    }
    Ok(written)
}

/// Writes `matrix.csv` (deterministic summary rows) and `table.csv` (with wall times).
pub fn write_matrix(results: &[ExperimentResult], dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let matrix = dir.join("matrix.csv");
    let table = dir.join("table.csv");
    write_file(&matrix, summary_csv(results.iter().map(|r| &r.summary))?.as_bytes())?;
    write_file(&table, table_csv(results.iter().map(|r| &r.summary))?.as_bytes())?;
    Ok((matrix, table))
}

/// Prints summary rows as an aligned text table.
pub fn print_table(out: &mut impl Write, rows: &[&SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "{:<28} {:<18} {:<10} {:<5} {:<7} {:>9} {:>9} {:>12} {:>9}", "config", "model", "spec", "alg", "opt", "success", "sims", "robustness", "time[s]")?;
    for r in rows {
        writeln!(
            out,
            "{:<28} {:<18} {:<10} {:<5} {:<7} {:>9} {:>9.1} {:>12} {:>9.3}",
            r.config,
            r.model,
            r.spec,
            r.algorithm,
            r.optimizer,
            r.successes,
            r.mean_simulations,
            real(r.mean_robustness),
            r.mean_wall_time.as_secs_f64()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn row(config: &str) -> SummaryRow {
        SummaryRow {
            config: config.into(),
            model: "m".into(),
            spec: "S1".into(),
            algorithm: "ts".into(),
            optimizer: "sa".into(),
            successes: "1/2".into(),
            n_success: 1,
            n_trials: 2,
            mean_simulations: 12.5,
            mean_simulations_success: None,
            mean_robustness: f64::INFINITY,
            mean_wall_time: Duration::from_millis(1500),
        }
    }

    #[test]
    fn empty_matrix_is_header_only() {
        assert_eq!(summary_csv([]).unwrap().lines().count(), 1);
        assert_eq!(table_csv([]).unwrap(), "model,spec,algorithm,optimizer,time,successes\n");
    }

    #[test]
    fn rows_keep_order_and_format() {
        let rows = [row("b"), row("a"), row("c")];
        let text = summary_csv(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "b,m,S1,ts,sa,1/2,1,2,12.500,,inf");
        assert!(lines[2].starts_with("a,") && lines[3].starts_with("c,"));
        assert!(table_csv(&rows).unwrap().lines().nth(1).unwrap().ends_with(",1.500,1/2"));
    }

    #[test]
    fn summary_excludes_wall_time() {
        let mut slow = row("x");
        slow.mean_wall_time = Duration::from_secs(99);
        assert_eq!(summary_csv([&slow]).unwrap(), summary_csv([&row("x")]).unwrap());
    }
}
