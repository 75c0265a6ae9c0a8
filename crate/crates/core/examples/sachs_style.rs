//! The full command-line pipeline on a positive-valued stand-in for the
//! 11-protein signalling data: simulate on the consensus network, write one
//! CSV per environment and a CPDAG file, then run `discover` with log
//! preprocessing and soft KCI scoring.
//!
//! Usage: `cargo run --release --example sachs_style [output_dir]`

use std::fs;
use std::path::PathBuf;

use mss::io::save_multi_env;
use mss::mec::cpdag_of_dag;
use mss::sim::simulate_on_dag;
use mss::study::{sachs_consensus_dag, sachs_style_config, SACHS_VARIABLES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("mss_sachs_style"));
    let names: Vec<String> = SACHS_VARIABLES.iter().map(|s| s.to_string()).collect();
    let dag = sachs_consensus_dag().with_names(names.clone())?;
    let sim = simulate_on_dag(&sachs_style_config(300, 8), &dag)?;

    let input = root.join("input");
    let files = save_multi_env(&sim.data, &input.join("data"))?;
    let cpdag = cpdag_of_dag(&sachs_consensus_dag()).with_names(names)?;
    fs::write(input.join("cpdag.json"), cpdag.to_json())?;
    fs::write(input.join("scenario.json"), sim.scenario.to_json())?;
    let data: Vec<String> = files.iter().map(|p| format!("{:?}", p.display().to_string())).collect();
    let config = format!(
        "output_dir = {:?}\nseed = 8\n\n[discover]\ndata = [{}]\ntransform = \"log\"\ntest = \"kci\"\nmode = \"soft\"\nmec_source = \"cpdag\"\ncpdag = \"cpdag.json\"\nscenario = \"scenario.json\"\n",
        root.join("run").display().to_string(),
        data.join(", ")
    );
    let config_path = input.join("config.toml");
    fs::write(&config_path, config)?;

    println!("targets per environment: {:?}", sim.scenario.targets());
    let args = ["mss", "discover", "--config", &config_path.display().to_string()];
    mss::cli::run(args.iter().map(|s| s.to_string()))?;
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("run/manifest.json"))?)?;
    println!("candidates: {}", manifest["discover"]["candidates"]);
    println!("unique argmin: {}", manifest["discover"]["unique_argmin"]);
    print!("{}", fs::read_to_string(root.join("run/metrics.csv"))?);
    println!("outputs in {}", root.join("run").display());
    Ok(())
}
