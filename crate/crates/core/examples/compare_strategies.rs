//! Run every strategy over a range of seeds and print one line per trial
//! followed by the aggregate table.
//!
//! ```text
//! cargo run --release --example compare_strategies -- env2 10
//! cargo run --release --example compare_strategies -- scenarios/env1.toml 5 20
//! ```
//! Arguments: preset name or scenario file, seed count, first seed.

use slipnav::report::aggregate_table;
use slipnav::sim::expand_trials;
use slipnav::{presets, run_batch, ScenarioConfig, StrategyKind};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let source = args.get(1).map(String::as_str).unwrap_or("env1");
    let count: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let first: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let base = match presets::by_name(source) {
        Some(cfg) => cfg,
        None => {
            let text = std::fs::read_to_string(source).expect("readable scenario file");
            ScenarioConfig::from_toml_str(&text).expect("valid scenario")
        }
    };
    let strategies: Vec<StrategyKind> = if base.goal.is_some() {
        StrategyKind::ALL.to_vec()
    } else {
        StrategyKind::ALL[1..].to_vec()
    };
    let seeds: Vec<u64> = (first..first + count).collect();
    let batch = run_batch(&expand_trials(&base, &seeds, &strategies), None);
    for r in &batch.reports {
        match r {
            Ok(r) => println!(
                "seed {:3} {:5} {:19} t {:7.1} s  len {:6.2} m  coverage {:.3}  violations {}",
                r.config.seed,
                r.config.strategy.name(),
                r.metrics.outcome.name(),
                r.metrics.completion_time,
                r.metrics.path_length,
                r.metrics.final_coverage,
                r.metrics.safety_violations
            ),
            Err(e) => println!("failed: {e}"),
        }
    }
    print!("{}", aggregate_table(&batch.aggregate));
}
