//! Pass rate of the default bat configuration on the 2-D sphere.

use dipbat::bat::{optimize, BatConfig, SearchBounds};

fn main() {
    let bounds = SearchBounds::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
    for (name, base) in [("decaying", BatConfig::default()), ("constant", BatConfig::default().constant_mode())] {
        let mut hits = 0;
        let mut worst: f64 = 0.0;
        for seed in 0..100 {
            let cfg = BatConfig { seed, ..base.clone() };
            let r = optimize(|x: &[f64]| x.iter().map(|v| v * v).sum(), &bounds, &cfg).unwrap();
            if r.best_fitness < 1e-2 {
                hits += 1;
            }
            worst = worst.max(r.best_fitness);
        }
        println!("{name}: {hits}/100 below 1e-2, worst {worst:.3e}");
    }
}
