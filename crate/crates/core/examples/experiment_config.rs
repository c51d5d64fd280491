//! Drives the experiment layer from an in-memory scenario instead of the CLI.

use token_auction::experiment::{run_config, Command, OutputFormat, ScenarioConfig};

const SCENARIO: &str = r#"
n = 3
T = 3
beta = 0.85
regimes = ["tokens", "dollars"]

[distribution]
kind = "discrete"
atoms = [[1.0, 0.3], [1.5, 0.5], [3.0, 0.2]]

[policy]
tau = [0.1, 0.0, 0.0]
sigma = [0.0, -0.4, 1.0]

[mc]
paths = 10000
seed = 4
"#;

fn main() {
    let mut cfg = ScenarioConfig::from_toml_str(SCENARIO).expect("scenario parses");
    let dir = std::env::temp_dir().join("token-auction-example");
    cfg.output.dir = dir.clone();
    println!("config hash {}", cfg.hash());

    for command in [Command::Solve, Command::Simulate] {
        match run_config(command, &cfg, OutputFormat::Csv) {
            Ok(report) => {
                report.lines.iter().for_each(|l| println!("{l}"));
                report.artifacts.iter().for_each(|p| println!("  -> {}", p.display()));
            }
            Err(e) => eprintln!("{command:?} failed ({}): {e}", e.exit_code()),
        }
    }

    cfg.policy.as_mut().unwrap().sigma[1] = -2.0;
    for v in cfg.validate() {
        println!("invalid: {v}");
    }
}
