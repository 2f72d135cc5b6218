//! Distance between the two classes over time and the decision times taken
//! from the zeros of its discrete derivatives.

use prefix_stl::analysis::{decision_times, positive_negative_distance, AnalysisConfig};
use prefix_stl::datagen::{generate_naval, NavalGenConfig};

fn main() -> prefix_stl::Result<()> {
    let data = generate_naval(&NavalGenConfig::default())?;
    let curve = positive_negative_distance(&data)?;
    let peak = curve.values.iter().cloned().fold(f64::MIN, f64::max);

    for (t, v) in curve.values.iter().enumerate() {
        let bar = "#".repeat((40.0 * v / peak).round() as usize);
        println!("{t:>2} {bar}");
    }
    for gap in [1, 5] {
        let times = decision_times(&curve, data.horizon(), &AnalysisConfig { min_gap: gap })?;
        println!("min_gap={gap}: {:?}", times.as_slice());
    }
    Ok(())
}
