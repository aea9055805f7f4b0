// Computes the U-matrix of a trained map, segments it at several margins and
// writes the grids as CSV and PGM for external plotting.
//
//     cargo run --example umatrix_export -- [out_dir]

use std::fs::File;
use std::path::Path;

use huls::umatrix::watershed;
use huls::{ClusterMap, Dataset, SomConfig, SomModel, UMatrix};

/// Four well separated corners of the unit square, 50 samples each.
fn corners() -> huls::Result<Dataset> {
    let values: Vec<f64> = (0..200)
        .flat_map(|i| {
            let (cx, cy) = [(0.1, 0.1), (0.9, 0.1), (0.1, 0.9), (0.9, 0.9)][i % 4];
            let jitter = (i as f64 * 0.618).fract() * 0.05;
            [cx + jitter, cy - jitter]
        })
        .collect();
    Dataset::single_batch(vec!["x".into(), "y".into()], values, "C")
}

pub fn run_example(out_dir: &Path, side: usize) -> huls::Result<ClusterMap> {
    let data = corners()?;
    let config = SomConfig { rows: side, cols: side, epochs: 40, alpha0: 0.1, sigma0: 1.0, ..SomConfig::reference(2) };
    let mut som = SomModel::init_random(&config, &data.bounds())?;
    som.train(&data)?;
    let u = UMatrix::compute(&som);

    for phi in [0.0, 5.0, 10.0, 40.0, 255.0] {
        println!("phi {phi:5}: {} clusters", watershed(&u, &som, phi)?.num_clusters);
    }
    let clusters = watershed(&u, &som, 40.0)?;
    for row in clusters.labels.chunks(clusters.cols) {
        let line: String = row.iter().map(|&l| char::from_digit(l % 36, 36).unwrap()).collect();
        println!("  {line}");
    }

    std::fs::create_dir_all(out_dir).map_err(|e| huls::Error::io(out_dir, e))?;
    let create = |name: &str| {
        let p = out_dir.join(name);
        File::create(&p).map_err(|e| huls::Error::io(&p, e))
    };
    let io = |e| huls::Error::io(out_dir, e);
    u.write_csv(create("umatrix.csv")?).map_err(io)?;
    u.write_pgm(create("umatrix.pgm")?).map_err(io)?;
    clusters.write_csv(create("clusters.csv")?).map_err(io)?;
    println!("wrote {}", out_dir.display());
    Ok(clusters)
}

fn main() -> huls::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("huls-umatrix"));
    run_example(&out, 16).map(|_| ())
}
