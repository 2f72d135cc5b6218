use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prefix_stl::stl::{parse, StlFormula};
use prefix_stl::weights::{learn_weight_matrix, learn_weights, RobustnessMatrix, WeightConfig};
use prefix_stl::{Label, LabeledDataset, Signal};

fn label(i: usize) -> Label {
    if i.is_multiple_of(2) {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Column 0 separates the classes, column 1 is unrelated noise.
fn good_and_bad(n: usize, seed: u64) -> (RobustnessMatrix, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<Label> = (0..n).map(label).collect();
    let good = labels
        .iter()
        .map(|l| l.sign() * rng.random_range(0.5..2.0))
        .collect();
    let bad = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    (
        RobustnessMatrix {
            formula_ids: vec![0, 1],
            columns: vec![good, bad],
        },
        labels,
    )
}

/// Plain logistic loss on softplus weights over RMS-scaled columns,
/// minimised by central-difference gradient descent.
fn reference_fit(r: &RobustnessMatrix, labels: &[Label], epochs: usize, lr: f64) -> Vec<f64> {
    let sp = |u: f64| (1.0 + u.exp()).ln();
    let scaled: Vec<Vec<f64>> = r
        .columns
        .iter()
        .map(|c| {
            let rms = (c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sqrt();
            c.iter().map(|v| v / rms).collect()
        })
        .collect();
    let loss = |u: &[f64]| {
        let mut total = 0.0;
        for (i, l) in labels.iter().enumerate() {
            let s: f64 = scaled.iter().zip(u).map(|(c, &uk)| sp(uk) * c[i]).sum();
            total += (1.0 + (-l.sign() * s).exp()).ln();
        }
        total / labels.len() as f64
    };
    let k = r.columns.len();
    let mut u = vec![((1.0 / k as f64).exp() - 1.0).ln(); k];
    let h = 1e-6;
    for _ in 0..epochs {
        let mut g = vec![0.0; k];
        for j in 0..k {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            g[j] = (loss(&up) - loss(&dn)) / (2.0 * h);
        }
        for j in 0..k {
            u[j] -= lr * g[j];
        }
    }
    u.iter().map(|&x| sp(x)).collect()
}

#[test]
fn misleading_formula_gets_small_weight() {
    let cfg = WeightConfig::default();
    for seed in 0..5 {
        let (r, labels) = good_and_bad(60, seed);
        let fit = learn_weights(&r, &labels, &cfg).unwrap();
        let scaled: Vec<f64> = fit
            .weights
            .iter()
            .zip(&fit.scales)
            .map(|(w, s)| w * s)
            .collect();
        assert!(scaled[1] / scaled[0] < 0.1, "seed {seed}: {scaled:?}");

        let oracle = reference_fit(&r, &labels, cfg.epochs, cfg.learning_rate);
        assert!(
            oracle[1] / oracle[0] < 0.1,
            "seed {seed}: oracle {oracle:?}"
        );
        for (a, b) in scaled.iter().zip(&oracle) {
            assert!(
                (a - b).abs() < 0.05 * b.max(1.0),
                "seed {seed}: {scaled:?} vs {oracle:?}"
            );
        }
        assert!(fit.final_loss < fit.initial_loss);
    }
}

#[test]
fn zero_robustness_keeps_initial_weights() {
    let r = RobustnessMatrix {
        formula_ids: vec![0, 1, 2],
        columns: vec![vec![0.0; 8]; 3],
    };
    let labels: Vec<Label> = (0..8).map(label).collect();
    let fit = learn_weights(&r, &labels, &WeightConfig::default()).unwrap();
    for w in fit.weights {
        assert!((w - 1.0 / 3.0).abs() < 1e-12);
    }
    assert_eq!(fit.initial_loss, fit.final_loss);
}

fn ramp_dataset(n: usize, horizon: usize) -> LabeledDataset {
    let signals = (0..n)
        .map(|i| {
            let rows: Vec<Vec<f64>> = (0..=horizon)
                .map(|t| vec![label(i).sign() * (1.0 + t as f64 + i as f64 * 0.01)])
                .collect();
            Signal::from_rows(format!("s{i}"), &rows).unwrap()
        })
        .collect();
    LabeledDataset::new(signals, (0..n).map(label).collect()).unwrap()
}

#[test]
fn single_formula_fits_once() {
    let data = ramp_dataset(10, 10);
    let f = vec![parse("F[0,5](x1 > 0)").unwrap()];
    let learned = learn_weight_matrix(&data, &f, &WeightConfig::default()).unwrap();
    assert_eq!(learned.fits.len(), 1);
    assert_eq!(learned.fits[0].time, 5);
    for t in 0..5 {
        assert_eq!(learned.weights.get(0, t), 0.0);
    }
    let w = learned.weights.get(0, 5);
    assert!(w > 0.0);
    for t in 5..=10 {
        assert_eq!(learned.weights.get(0, t), w);
    }
}

#[test]
fn one_fit_per_distinct_decidable_set() {
    let data = ramp_dataset(12, 20);
    let formulas: Vec<StlFormula> = [
        "G[0,3](x1 > 0)",
        "F[0,3](x1 > 2)",
        "G[2,9](x1 > -1)",
        "x1 > 0.5",
        "F[4,16](x1 > 3)",
    ]
    .iter()
    .map(|s| parse(s).unwrap())
    .collect();
    let learned = learn_weight_matrix(&data, &formulas, &WeightConfig::default()).unwrap();
    // decidable set grows at t = 1, 3, 9 and 16
    let mut sizes: Vec<usize> = (1..=20)
        .map(|t| formulas.iter().filter(|f| f.horizon() <= t).count())
        .collect();
    sizes.dedup();
    assert_eq!(learned.fits.len(), sizes.len());
    let times: Vec<usize> = learned.fits.iter().map(|f| f.time).collect();
    assert_eq!(times, vec![1, 3, 9, 16]);
    // each fit evaluates only the formulas that became decidable
    let evals: Vec<usize> = learned.fits.iter().map(|f| f.evaluations).collect();
    assert_eq!(evals, vec![12, 24, 12, 12]);
}
