//! Grow a depth-2 decision tree on complete vessel trajectories, translate it
//! to one STL formula and check both classify the training set alike.

use prefix_stl::datagen::{generate_naval, NavalGenConfig};
use prefix_stl::tree::{build_tree, tree_to_stl, TreeConfig};
use prefix_stl::{satisfies, Label};

fn main() -> prefix_stl::Result<()> {
    let data = generate_naval(&NavalGenConfig {
        normal: 60,
        anomalous: 60,
        ..NavalGenConfig::default()
    })?;
    let prefix = data.prefix(data.horizon())?;
    let tree = build_tree(&prefix, &TreeConfig::default())?;
    let formula = tree_to_stl(&tree);
    println!(
        "tree depth {}, split gains {:?}",
        tree.depth(),
        tree.root.gains()
    );
    println!("formula: {formula}");

    let mut errors = 0;
    let mut disagreements = 0;
    for (view, label) in prefix.iter() {
        let by_tree = tree.classify(&view)?;
        let by_formula = if satisfies(&view, &formula, 0)? {
            Label::Positive
        } else {
            Label::Negative
        };
        errors += usize::from(by_tree != label);
        disagreements += usize::from(by_tree != by_formula);
    }
    println!(
        "training errors {errors}/{}, tree/formula disagreements {disagreements}",
        prefix.len()
    );
    Ok(())
}
