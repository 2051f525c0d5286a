//! Grid search for scenario parameters that reproduce the published band
//! accuracies. Prints the ten best points as TOML-ready rows.
//!
//!     cargo run --release -p erule-core --example calibrate

use erule::simulation::{calibration_grid, ScenarioParams, PUBLISHED_TARGETS};

fn main() -> erule::Result<()> {
    let base = ScenarioParams::default();
    let noise: Vec<f64> = (1..=12).map(|i| i as f64 * 0.025).collect();
    let peaks = [1.0, 1.5, 2.0];
    let troughs: Vec<f64> = (0..=6).map(|i| -0.5 - i as f64 * 0.1).collect();
    let points = calibration_grid(&base, &noise, &peaks, &troughs, 1000, &PUBLISHED_TARGETS)?;
    println!("noise_sd  sahm_peak  trough  acc@0.2  acc@0.3  fp  max_err");
    for p in points.iter().take(10) {
        println!(
            "{:8.3}  {:9.2}  {:6.2}  {:7.3}  {:7.3}  {:2}  {:7.4}",
            p.params.noise_sd,
            p.params.sahm_peak_mean,
            p.params.spread_trough_mean,
            p.accuracies[0],
            p.accuracies[1],
            p.false_positives,
            p.max_error
        );
    }
    Ok(())
}
