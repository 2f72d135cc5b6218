//! Three-fold cross-validation on generated vessel trajectories, comparing
//! learned weights with the uniform-weights baseline.
//!
//! cargo run --release --example naval_pipeline -- [signals per class] [seed]

use std::time::Instant;

use prefix_stl::datagen::{generate_naval, NavalGenConfig};
use prefix_stl::eval::{baseline_uniform_weights, run_pipeline, PipelineConfig};

fn main() -> prefix_stl::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_class: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let data = generate_naval(&NavalGenConfig {
        normal: per_class,
        anomalous: per_class,
        seed,
        ..NavalGenConfig::default()
    })?;
    let cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };

    let start = Instant::now();
    let learned = run_pipeline(&data, &cfg)?;
    println!("framework trained and evaluated in {:.1?}", start.elapsed());
    let uniform = baseline_uniform_weights(&data, &cfg)?;

    for fold in &learned.folds {
        println!(
            "fold {}: decision times {:?}",
            fold.fold + 1,
            fold.model.decision_times.as_slice()
        );
        for f in &fold.model.formulas {
            println!("  t={:>2}  {}", f.decision_time, f.formula);
        }
    }
    let horizon = data.horizon();
    println!("TMCR at T:        {:.4}", learned.report.mean[horizon]);
    println!("mean IMCR learned: {:.4}", learned.report.mean_over_time());
    println!("mean IMCR uniform: {:.4}", uniform.report.mean_over_time());
    println!("\n{}", learned.report.to_csv());
    Ok(())
}
