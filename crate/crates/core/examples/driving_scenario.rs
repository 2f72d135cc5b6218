//! Car-following data on a slope: the safe driver brakes at a pothole and
//! may stop for a pedestrian, the aggressive one keeps accelerating. Trains on
//! a shortened horizon and reports when prefixes become predictable.
//!
//! cargo run --release --example driving_scenario

use prefix_stl::datagen::{generate_driving, DrivingGenConfig};
use prefix_stl::eval::{run_pipeline, PipelineConfig};

fn main() -> prefix_stl::Result<()> {
    let data = generate_driving(&DrivingGenConfig {
        safe: 40,
        aggressive: 40,
        horizon: 160,
        ..DrivingGenConfig::default()
    })?;
    let cv = run_pipeline(&data, &PipelineConfig::default())?;
    for f in &cv.folds {
        println!(
            "fold {} decision times {:?}",
            f.fold + 1,
            f.model.decision_times.as_slice()
        );
    }
    let first_good = cv.report.mean.iter().position(|&e| e <= 0.1);
    println!("mean IMCR {:.4}", cv.report.mean_over_time());
    match first_good {
        Some(t) => println!(
            "held-out TMCR first drops to 10% or less at t={t} ({:.2} s)",
            t as f64 * 0.05
        ),
        None => println!("held-out TMCR never drops to 10%"),
    }
    Ok(())
}
