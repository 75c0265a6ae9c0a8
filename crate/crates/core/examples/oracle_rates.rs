//! Oracle recall of mechanism shift scoring and of pooled PC as the number
//! of environments grows, with bootstrap intervals.

use mss::sim::SimConfig;
use mss::study::{run_oracle_sweep, write_curves_csv, OracleSweep, SweepAxis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sweep = OracleSweep {
        base: SimConfig { seed: 2024, ..SimConfig::default() },
        axis: SweepAxis::NEnv,
        values: vec![1.0, 2.0, 3.0, 5.0, 8.0, 12.0],
        repetitions: 30,
        bootstrap_resamples: 500,
        mec_limit: 50_000,
    };
    let rows = run_oracle_sweep(&sweep)?;
    write_curves_csv(&rows, std::io::stdout())?;
    Ok(())
}
