//! Parse a formula and monitor its robustness over a short two-dimensional
//! signal, at every start time it can be decided from.

use prefix_stl::stl::parse;
use prefix_stl::{robustness, satisfies, Signal};

fn main() -> prefix_stl::Result<()> {
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|t| {
            let t = t as f64;
            vec![10.0 - 0.8 * t, (t / 2.0).sin()]
        })
        .collect();
    let signal = Signal::from_rows("demo", &rows)?;
    let phi = parse("G[0,3](x1 >= 2) and F[0,4](x2 > 0.5)")?;
    println!("formula: {phi}   horizon: {}", phi.horizon());

    let view = signal.view();
    for t in 0..=signal.horizon() - phi.horizon() {
        println!(
            "t={t:>2}  rho={:+.3}  satisfied={}",
            robustness(&view, &phi, t)?,
            satisfies(&view, &phi, t)?
        );
    }

    // a prefix shorter than the horizon cannot decide the formula
    let short = signal.prefix(2)?;
    match robustness(&short, &phi, 0) {
        Ok(r) => println!("unexpected value {r}"),
        Err(e) => println!("on s[0:2]: {e}"),
    }
    Ok(())
}
