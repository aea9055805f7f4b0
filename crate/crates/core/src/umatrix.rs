//! Unified-distance matrix and marker-controlled watershed segmentation.
//!
//! Heights are quantized to 8-bit levels over `[min U, max U]`. Minima whose
//! depth does not exceed the margin `phi` are removed with an h-minima
//! transform (reconstruction by erosion of `levels + phi`), the surviving
//! regional minima seed basins, and the remaining neurons are flooded in
//! ascending height order. Neurons that were never updated during training
//! are labeled 0.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::som::{GridPos, SomModel};

const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Row-major indices of the in-bounds 8-neighbors of `idx`.
fn neighbors(idx: usize, rows: usize, cols: usize) -> impl Iterator<Item = usize> {
    let (r, c) = ((idx / cols) as isize, (idx % cols) as isize);
    NEIGHBOR_OFFSETS.iter().filter_map(move |&(dr, dc)| {
        let (nr, nc) = (r + dr, c + dc);
        (nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols)
            .then(|| nr as usize * cols + nc as usize)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UMatrix {
    pub rows: usize,
    pub cols: usize,
    pub heights: Vec<f64>,
}

impl UMatrix {
    /// Mean weight distance of each neuron to its existing 8-neighbors.
    pub fn compute(model: &SomModel) -> UMatrix {
        let (rows, cols) = (model.rows(), model.cols());
        let heights = (0..rows * cols)
            .map(|i| {
                let w = model.weight(model.pos(i));
                let (sum, n) = neighbors(i, rows, cols).fold((0.0, 0usize), |(s, n), j| {
                    let d = crate::som::squared_distance(w, model.weight(model.pos(j))).sqrt();
                    (s + d, n + 1)
                });
                if n == 0 {
                    0.0
                } else {
                    sum / n as f64
                }
            })
            .collect();
        UMatrix {
            rows,
            cols,
            heights,
        }
    }

    pub fn height(&self, pos: GridPos) -> f64 {
        self.heights[pos.row * self.cols + pos.col]
    }

    /// Linear map of `[min, max]` onto `0..=255`; a flat matrix maps to all zeros.
    pub fn quantize(&self) -> Vec<u8> {
        let lo = self.heights.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return vec![0; self.heights.len()];
        }
        self.heights
            .iter()
            .map(|&h| ((h - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.heights.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Binary 8-bit PGM (P5) of the quantized heights, `cols` wide and `rows` high.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        w.write_all(&self.quantize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMap {
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<u32>,
    pub num_clusters: u32,
    pub margin: f64,
}

impl ClusterMap {
    /// Cluster id of the neuron at `pos`; 0 means never updated.
    pub fn assign(&self, pos: GridPos) -> Result<u32> {
        if pos.row >= self.rows || pos.col >= self.cols {
            return Err(Error::OutOfBounds {
                row: pos.row,
                col: pos.col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.labels[pos.row * self.cols + pos.col])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.labels.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Segments a U-matrix computed from `model`.
pub fn watershed(u: &UMatrix, model: &SomModel, phi: f64) -> Result<ClusterMap> {
    if u.rows != model.rows() || u.cols != model.cols() {
        return Err(Error::DimensionMismatch {
            expected: model.neurons(),
            found: u.heights.len(),
        });
    }
    let updated: Vec<bool> = model.update_counts.iter().map(|&n| n > 0).collect();
    segment_levels(&u.quantize(), u.rows, u.cols, &updated, phi)
}

/// Watershed on already-quantized levels. `updated[i] == false` forces label 0.
pub fn segment_levels(
    levels: &[u8],
    rows: usize,
    cols: usize,
    updated: &[bool],
    phi: f64,
) -> Result<ClusterMap> {
    let n = rows * cols;
    if levels.len() != n || updated.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: levels.len().min(updated.len()),
        });
    }
    if !(phi >= 0.0) || !phi.is_finite() {
        return Err(Error::InvalidConfig("watershed margin must be >= 0".into()));
    }

    let filled = h_minima(levels, rows, cols, phi);
    let markers = regional_minima(&filled, rows, cols);
    let mut labels = flood(levels, rows, cols, &markers);

    for (l, &u) in labels.iter_mut().zip(updated) {
        if !u {
            *l = 0;
        }
    }
    // dense renumbering, keeping discovery order
    let mut remap = vec![0u32; markers.len() + 1];
    let mut next = 0;
    for old in 1..=markers.len() as u32 {
        if labels.contains(&old) {
            next += 1;
            remap[old as usize] = next;
        }
    }
    for l in labels.iter_mut() {
        *l = remap[*l as usize];
    }
    Ok(ClusterMap {
        rows,
        cols,
        labels,
        num_clusters: next,
        margin: phi,
    })
}

/// Reconstruction by erosion of `levels + phi` over `levels`: every basin is
/// filled to `min(its minimum + phi, its lowest spill level)`. Computed as a
/// minimax-path flood.
fn h_minima(levels: &[u8], rows: usize, cols: usize, phi: f64) -> Vec<f64> {
    struct Key(f64);
    impl PartialEq for Key {
        fn eq(&self, o: &Self) -> bool {
            self.cmp(o).is_eq()
        }
    }
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Key {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0)
        }
    }

    let mut rec: Vec<f64> = levels.iter().map(|&l| l as f64 + phi).collect();
    let mut heap: BinaryHeap<Reverse<(Key, usize)>> =
        rec.iter().enumerate().map(|(i, &v)| Reverse((Key(v), i))).collect();
    while let Some(Reverse((Key(v), i))) = heap.pop() {
        if v > rec[i] {
            continue;
        }
        for j in neighbors(i, rows, cols) {
            let cand = v.max(levels[j] as f64);
            if cand < rec[j] {
                rec[j] = cand;
                heap.push(Reverse((Key(cand), j)));
            }
        }
    }
    rec
}

/// 8-connected plateaus with no strictly lower neighbor, ordered by level and
/// then by their first row-major index.
fn regional_minima(f: &[f64], rows: usize, cols: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; f.len()];
    let mut minima = Vec::new();
    for start in 0..f.len() {
        if seen[start] {
            continue;
        }
        let level = f[start];
        let mut component = vec![start];
        let mut is_min = true;
        seen[start] = true;
        let mut k = 0;
        while k < component.len() {
            let i = component[k];
            k += 1;
            for j in neighbors(i, rows, cols) {
                if f[j] < level {
                    is_min = false;
                } else if f[j] == level && !seen[j] {
                    seen[j] = true;
                    component.push(j);
                }
            }
        }
        if is_min {
            component.sort_unstable();
            minima.push((level, component));
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1[0].cmp(&b.1[0])));
    minima.into_iter().map(|(_, c)| c).collect()
}

/// Priority flood from marker regions. A newly reached neuron takes the label
/// of its lowest labeled neighbor, ties going to the smaller label.
fn flood(levels: &[u8], rows: usize, cols: usize, markers: &[Vec<usize>]) -> Vec<u32> {
    let mut labels = vec![0u32; levels.len()];
    for (m, comp) in markers.iter().enumerate() {
        for &i in comp {
            labels[i] = m as u32 + 1;
        }
    }
    let mut seq = 0u64;
    let mut heap: BinaryHeap<Reverse<(u8, u64, usize)>> = BinaryHeap::new();
    for i in 0..levels.len() {
        if labels[i] != 0 {
            for j in neighbors(i, rows, cols) {
                if labels[j] == 0 {
                    heap.push(Reverse((levels[j], seq, j)));
                    seq += 1;
                }
            }
        }
    }
    while let Some(Reverse((_, _, i))) = heap.pop() {
        if labels[i] != 0 {
            continue;
        }
        let best = neighbors(i, rows, cols)
            .filter(|&j| labels[j] != 0)
            .min_by_key(|&j| (levels[j], labels[j]))
            .map(|j| labels[j])
            .expect("queued neurons always touch a labeled neighbor");
        labels[i] = best;
        for j in neighbors(i, rows, cols) {
            if labels[j] == 0 {
                heap.push(Reverse((levels[j], seq, j)));
                seq += 1;
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::SomConfig;

    fn cfg(rows: usize, cols: usize) -> SomConfig {
        SomConfig {
            rows,
            cols,
            epochs: 1,
            alpha0: 0.02,
            sigma0: 2.0,
            seed: 0,
            shuffle: false,
        }
    }

    fn updated_model(rows: usize, cols: usize, dim: usize, weights: Vec<f64>) -> SomModel {
        let mut m = SomModel::from_weights(&cfg(rows, cols), dim, weights).unwrap();
        m.update_counts.iter_mut().for_each(|c| *c = 1);
        m
    }

    #[test]
    fn identical_weights_give_flat_matrix() {
        let m = updated_model(3, 4, 2, vec![0.25; 24]);
        let u = UMatrix::compute(&m);
        assert!(u.heights.iter().all(|&h| h == 0.0));
        let c = watershed(&u, &m, 10.0).unwrap();
        assert_eq!(c.num_clusters, 1);
        assert!(c.labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn one_by_two_map() {
        let m = updated_model(1, 2, 1, vec![0.0, 3.0]);
        assert_eq!(UMatrix::compute(&m).heights, vec![3.0, 3.0]);
        let single = updated_model(1, 1, 1, vec![4.0]);
        assert_eq!(UMatrix::compute(&single).heights, vec![0.0]);
    }

    #[test]
    fn ridge_profile_splits_unless_margin_covers_it() {
        let levels = [0u8, 0, 255, 0, 0];
        let updated = [true; 5];
        let c = segment_levels(&levels, 1, 5, &updated, 10.0).unwrap();
        assert_eq!(c.num_clusters, 2);
        // ridge goes to its lowest labeled neighbor, tie to the smaller label
        assert_eq!(c.labels, vec![1, 1, 1, 2, 2]);
        let c = segment_levels(&levels, 1, 5, &updated, 255.0).unwrap();
        assert_eq!(c.num_clusters, 1);
        assert_eq!(c.labels, vec![1; 5]);
    }

    #[test]
    fn never_updated_neurons_get_label_zero() {
        let levels = [0u8, 10, 200, 20, 0];
        let c = segment_levels(&levels, 1, 5, &[true, true, true, false, false], 5.0).unwrap();
        assert_eq!(c.labels, vec![1, 1, 1, 0, 0]);
        assert_eq!(c.num_clusters, 1);
        assert_eq!(c.assign(GridPos::new(0, 4)).unwrap(), 0);
        assert_eq!(c.assign(GridPos::new(0, 0)).unwrap(), 1);
        assert!(c.assign(GridPos::new(1, 0)).is_err());
    }

    #[test]
    fn shallow_minimum_is_suppressed() {
        // the right-hand dip is 8 levels deep: kept at phi=5, merged at phi=8
        let levels = [0u8, 50, 100, 92, 100];
        let updated = [true; 5];
        assert_eq!(segment_levels(&levels, 1, 5, &updated, 5.0).unwrap().num_clusters, 2);
        assert_eq!(segment_levels(&levels, 1, 5, &updated, 8.0).unwrap().num_clusters, 1);
    }

    #[test]
    fn quantization_spans_full_range() {
        let u = UMatrix {
            rows: 1,
            cols: 3,
            heights: vec![1.0, 1.5, 2.0],
        };
        assert_eq!(u.quantize(), vec![0, 128, 255]);
        let mut pgm = Vec::new();
        u.write_pgm(&mut pgm).unwrap();
        assert_eq!(&pgm[..11], b"P5\n3 1\n255\n");
        assert_eq!(&pgm[11..], &[0, 128, 255]);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let m = updated_model(2, 2, 1, vec![0.0; 4]);
        let u = UMatrix {
            rows: 1,
            cols: 4,
            heights: vec![0.0; 4],
        };
        assert!(watershed(&u, &m, 1.0).is_err());
        assert!(segment_levels(&[0; 4], 2, 2, &[true; 4], -1.0).is_err());
    }
}
