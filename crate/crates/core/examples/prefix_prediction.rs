//! Train on complete trajectories, then watch the prediction for one new
//! vessel change as more of its track is observed.

use prefix_stl::datagen::{generate_naval, NavalGenConfig};
use prefix_stl::eval::{train, PipelineConfig, Strategy};
use prefix_stl::Prediction;

fn main() -> prefix_stl::Result<()> {
    let train_set = generate_naval(&NavalGenConfig::default())?;
    let model = train(
        &train_set,
        Strategy::Framework,
        &PipelineConfig::default(),
        0,
    )?;
    for (k, f) in model.formulas.iter().enumerate() {
        println!("phi{} (t={}): {}", k + 1, f.decision_time, f.formula);
    }

    let unseen = generate_naval(&NavalGenConfig {
        normal: 1,
        anomalous: 2,
        seed: 99,
        ..NavalGenConfig::default()
    })?;
    for (signal, label) in unseen.iter() {
        print!("{} ({label:?}):", signal.id());
        for t in (0..=unseen.horizon()).step_by(5) {
            match model.predictor.predict(&signal.prefix(t)?, t)? {
                Prediction::Decided { label, .. } => {
                    print!(" {}", if label.sign() > 0.0 { '+' } else { '-' })
                }
                Prediction::Inconclusive => print!(" ?"),
            }
        }
        println!();
    }
    Ok(())
}
