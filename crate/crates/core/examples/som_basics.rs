// Trains a small self-organizing map on three 2-D blobs and reports the two
// map quality measures along with a few best-matching-unit lookups.
//
//     cargo run --example som_basics

use huls::som::{learning_rate, neighborhood};
use huls::{Dataset, GridPos, SomConfig, SomModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct SomReport {
    pub initial_qe: f64,
    pub final_qe: f64,
    pub final_te: f64,
}

fn blobs(seed: u64) -> huls::Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.04).unwrap();
    let centers = [(0.2, 0.2), (0.8, 0.3), (0.5, 0.8)];
    let values: Vec<f64> = (0..300)
        .flat_map(|i| {
            let (cx, cy) = centers[i % 3];
            [cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)]
        })
        .collect();
    Dataset::single_batch(vec!["x".into(), "y".into()], values, "blobs")
}

pub fn run_example(side: usize, epochs: usize) -> huls::Result<SomReport> {
    let data = blobs(7)?;
    let config = SomConfig {
        rows: side,
        cols: side,
        epochs,
        alpha0: 0.05,
        ..SomConfig::reference(7)
    };
    let mut som = SomModel::init_random(&config, &data.bounds())?;
    let initial_qe = som.quantization_error(&data)?;
    som.train(&data)?;
    let report = SomReport {
        initial_qe,
        final_qe: som.quantization_error(&data)?,
        final_te: som.topographic_error(&data)?,
    };

    println!("{side}x{side} map, {epochs} epochs over {} samples", data.len());
    println!("alpha(0) = {:.4}, alpha(K-1) = {:.6}", learning_rate(0, &config)?, learning_rate(epochs - 1, &config)?);
    let centre = GridPos::new(0, 0);
    println!("h at lattice distance 1: epoch 0 {:.4}, last epoch {:.4}",
        neighborhood(centre, GridPos::new(0, 1), 0, &config)?,
        neighborhood(centre, GridPos::new(0, 1), epochs - 1, &config)?);
    println!("E_Q {:.4} -> {:.4}, E_T {:.3}", report.initial_qe, report.final_qe, report.final_te);
    for probe in [[0.2, 0.2], [0.8, 0.3], [0.5, 0.8], [0.5, 0.4]] {
        let (a, b) = som.find_two_bmus(&probe)?;
        println!(
            "probe {probe:?}: bmu ({}, {}) at {:.4}, runner-up ({}, {}) adjacent: {}",
            a.pos.row, a.pos.col, a.distance, b.pos.row, b.pos.col, a.pos.is_adjacent(b.pos)
        );
    }
    Ok(report)
}

fn main() -> huls::Result<()> {
    run_example(10, 60).map(|_| ())
}
