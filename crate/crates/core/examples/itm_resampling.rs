// Shows how the instantaneous topological map turns an unbalanced sample
// stream into an evenly spaced node set: a long stationary phase and a short
// ramp end up with comparable node counts, and the count grows as the spacing
// threshold beta shrinks.
//
//     cargo run --example itm_resampling

use huls::{CreationRule, Dataset, ItmGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct ResamplingReport {
    pub raw_ratio: f64,
    pub node_ratio: f64,
    pub sweep: Vec<(f64, usize)>,
}

/// 1000 noisy samples at a stationary point, then a 20-sample ramp away from it.
fn unbalanced() -> huls::Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut values = Vec::new();
    for _ in 0..1000 {
        values.extend([0.2 + noise.sample(&mut rng), 0.2 + noise.sample(&mut rng)]);
    }
    for i in 1..=20 {
        let t = i as f64 / 20.0;
        values.extend([0.2 + 0.7 * t, 0.2 + 0.6 * t * t]);
    }
    Dataset::single_batch(vec!["a".into(), "b".into()], values, "B1")
}

pub fn run_example() -> huls::Result<ResamplingReport> {
    let data = unbalanced()?;
    let graph = ItmGraph::train(&data, 0.02)?;
    let stationary = |w: &[f64]| (w[0] - 0.2).hypot(w[1] - 0.2) < 0.05;
    let raw_stat = data.samples().filter(|x| stationary(x)).count();
    let node_stat = graph.node_ids().filter(|&i| stationary(graph.weight(i).unwrap())).count();
    let raw_ratio = raw_stat as f64 / (data.len() - raw_stat) as f64;
    let node_ratio = node_stat as f64 / (graph.node_count() - node_stat).max(1) as f64;
    println!("beta 0.02: {} samples -> {} nodes, {} edges", data.len(), graph.node_count(), graph.edge_count());
    println!("stationary : ramp ratio  raw {raw_ratio:.1}  nodes {node_ratio:.2}");

    let mut sweep = Vec::new();
    for k in 0..9 {
        let beta = 10f64.powf(-(k as f64) / 4.0);
        let thales = ItmGraph::train(&data, beta)?.node_count();
        let spacing = ItmGraph::train_with_rule(&data, beta, CreationRule::PairSpacing)?.node_count();
        println!("beta {beta:9.5}: {thales:4} nodes (pair-spacing rule: {spacing})");
        sweep.push((beta, thales));
    }
    Ok(ResamplingReport { raw_ratio, node_ratio, sweep })
}

fn main() -> huls::Result<()> {
    run_example().map(|_| ())
}
