//! Time-variant weights for a hand-written formula set: each formula gets
//! weight only once its horizon fits the prefix, and an informative formula
//! ends up outweighing a misleading one.

use prefix_stl::datagen::{generate_naval, NavalGenConfig};
use prefix_stl::stl::parse;
use prefix_stl::weights::{learn_weight_matrix, uniform_weight_matrix, WeightConfig};

fn main() -> prefix_stl::Result<()> {
    let data = generate_naval(&NavalGenConfig {
        normal: 50,
        anomalous: 50,
        ..NavalGenConfig::default()
    })?;
    let formulas = vec![
        // normal vessels stay north of the island and west of the passage
        parse("G[20,30](x2 >= 250)")?,
        parse("G[25,35](x1 < 550)")?,
        // misleading: true for the anomalies turning back to open sea
        parse("F[40,50](x2 >= 450)")?,
    ];
    let learned = learn_weight_matrix(&data, &formulas, &WeightConfig::default())?;
    let uniform = uniform_weight_matrix(&formulas, data.horizon());

    for fit in &learned.fits {
        println!(
            "t={:>2} formulas {:?} loss {:.4} -> {:.4}",
            fit.time, fit.formula_ids, fit.fit.initial_loss, fit.fit.final_loss
        );
    }
    for t in [0, 29, 30, 34, 35, 60] {
        println!(
            "w({t:>2}) learned {:?}  uniform {:?}",
            learned.weights.column(t),
            uniform.column(t)
        );
    }
    Ok(())
}
