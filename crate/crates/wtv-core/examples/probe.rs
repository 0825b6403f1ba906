use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wtv_core::*;

fn scan(lambda: f64, gamma: f64, floor: f64) {
    let grid = PixelGrid::new(4, 4);
    let cost = euclidean_cost(&grid, None);
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(206 + seed);
        let frames: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..16).map(|_| rng.random_range(floor..1.0)).collect())
            .collect();
        let x = FrameSeries::new(4, 4, frames).unwrap().normalize().unwrap();
        let config = FilterConfig {
            lambda, gamma, alpha: 0.05,
            sinkhorn_iters: 200,
            tolerance: Some(1e-300),
            max_outer_iters: 80,
            ..FilterConfig::default()
        };
        let (_, report) = wtv_filter(&x, &cost, &config).unwrap();
        let tr = &report.objective_trace;
        for k in 3..tr.len() {
            worst = worst.max(tr[k] - tr[k - 1]);
        }
    }
    eprintln!("lambda={lambda} gamma={gamma} floor={floor}: worst rise after iter 3 = {worst:.3e}");
}

fn main() {
    scan(0.2, 0.5, 0.1);
}
