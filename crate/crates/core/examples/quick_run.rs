//! Runs training from `key=value` arguments and prints the summary.
//! Example: cargo run --release --example quick_run -- reward.kind=retrieval steps=200000 mode=sync
//! With `throughput=SECS` it runs the paired throughput measurement instead.

use std::time::Duration;

use lantern::orchestrator::{measure_throughput, run_training, RunConfig};

fn main() {
    let mut cfg = RunConfig::default();
    let mut throughput = None;
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments are key=value");
        if k == "throughput" {
            throughput = Some(Duration::from_secs_f64(v.parse().expect("seconds")));
            continue;
        }
        if let Err(e) = cfg.set(k, v) {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
    let json = match throughput {
        Some(d) => measure_throughput(&cfg, d).map(|r| serde_json::to_string_pretty(&r)),
        None => run_training(&cfg).map(|out| serde_json::to_string_pretty(&out.summary)),
    };
    match json {
        Ok(j) => println!("{}", j.expect("serializable")),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
