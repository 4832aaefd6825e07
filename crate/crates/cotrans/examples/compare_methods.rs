//! Run the benchmark course under all three methods and print the
//! headline metrics side by side.

use cotrans::config::SimConfig;
use cotrans::logging::{summarize, Method};
use cotrans::scenario::Scenario;
use cotrans::sync::run_simulation;

fn main() -> Result<(), cotrans::Error> {
    let mut sim = SimConfig::default();
    sim.normalize()?;
    let scenario = Scenario::benchmark(sim.sim.n_d)?;
    let cfgs = [sim.robot.clone(), sim.robot.clone()];
    println!("{:8} {:>12} {:>12} {:>10} {:>10}", "method", "max|l-0.65|", "mean err 1", "mean err 2", "steps");
    for method in [Method::PngLf, Method::RrtLf, Method::SlqMpc] {
        let log = run_simulation(&scenario, &cfgs, &sim, method, 1)?;
        let s = summarize(&log, scenario.load_length);
        println!(
            "{:8} {:>12.2e} {:>12.4} {:>10.4} {:>10}",
            method.to_string(),
            s.max_load_length_deviation,
            s.mean_tracking_error[0],
            s.mean_tracking_error[1],
            s.steps
        );
    }
    Ok(())
}
