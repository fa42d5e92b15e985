//! Per-iteration cost of the fully connected design grows linearly in Nt
//! at fixed N_RF.

use std::time::Instant;

use atomic_mimo::hybrid::{alg1_fc, HybridOptions};
use atomic_mimo::numerics::RealMatrix;
use atomic_mimo::rng::seeded;
use rand::Rng;
use rand_distr::StandardNormal;

fn per_iteration_seconds(nt: usize, n_rf: usize, iterations: usize) -> f64 {
    let mut rng = seeded(nt as u64);
    let f = RealMatrix::from_fn(2 * nt, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    let power = f.norm_squared() / 2.0;
    let opts = HybridOptions {
        tol: 0.0,
        max_iter: iterations,
        ..HybridOptions::fully_connected(1)
    };
    let mut samples: Vec<f64> = (0..7)
        .map(|_| {
            let start = Instant::now();
            let (_, trace) = alg1_fc(&f, n_rf, power, &opts).unwrap();
            assert_eq!(trace.iterations, iterations);
            start.elapsed().as_secs_f64() / iterations as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

#[test]
fn fc_iteration_time_is_linear_in_nt() {
    let sizes = [256usize, 512, 1024, 2048];
    let times: Vec<f64> = sizes
        .iter()
        .map(|&nt| per_iteration_seconds(nt, 4, 20))
        .collect();
    // Least-squares slope of log time against log Nt.
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    println!("per-iteration seconds {times:?}, log-log slope {slope:.3}");
    assert!((slope - 1.0).abs() <= 0.3, "slope {slope}");
}
