//! Simulation harness for robust sparse regression: suite runners, CSV output
//! and SVG charts.

pub mod counterexample;
pub mod output;
pub mod spec;
pub mod suites;

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::Context;

pub use counterexample::{run_counterexample, CounterexampleReport};
pub use output::{read_csv, write_csv, ResultRow, CSV_HEADER};
pub use spec::{EstimatorKind, ExperimentSpec, GridPoint, SpecOverrides, Suite};
pub use suites::{run_mean_estimation_suite, run_regression_suite, run_suite, run_unknown_cov_suite};

/// Writes `results.csv`, the resolved `spec.json` and, if enabled, the charts
/// into `spec.outputs`. Returns the CSV path.
pub fn write_outputs(spec: &ExperimentSpec, rows: &[ResultRow]) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&spec.outputs).with_context(|| format!("creating {}", spec.outputs.display()))?;
    let csv_path = spec.outputs.join("results.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_csv(rows, BufWriter::new(file))?;
    fs::write(spec.outputs.join("spec.json"), serde_json::to_string_pretty(spec)? + "\n")?;
    if spec.plots {
        let charts = match spec.suite {
            Suite::Mean => output::mean_charts(rows),
            Suite::Regress | Suite::UnknownCov => {
                vec![("error_trace.svg".to_string(), output::trace_chart(rows, &format!("{}: robust IHT", spec.name)))]
            }
        };
        for (file, chart) in charts {
            fs::write(spec.outputs.join(file), chart.to_svg())?;
        }
    }
    Ok(csv_path)
}
