// Brute-force reference implementations shared by the integration tests.
// They avoid the library's kernels on purpose: plain loops, full sorts, and
// explicit neighbor enumeration.
#![allow(dead_code)]

use std::collections::HashMap;

use huls::batchsim::{TruthRow, TRANSITION_PHASES};
use huls::{Dataset, HulsModel};

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s.sqrt()
}

/// All neurons ranked by (distance, row-major index).
pub fn ranked(weights: &[f64], dim: usize, x: &[f64]) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = weights
        .chunks(dim)
        .enumerate()
        .map(|(i, w)| (i, euclid(w, x)))
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all
}

pub fn bmu(weights: &[f64], dim: usize, x: &[f64]) -> (usize, f64) {
    ranked(weights, dim, x)[0]
}

pub fn two_bmus(weights: &[f64], dim: usize, x: &[f64]) -> ((usize, f64), (usize, f64)) {
    let r = ranked(weights, dim, x);
    (r[0], r[1])
}

pub fn quantization_error(weights: &[f64], dim: usize, data: &[Vec<f64>]) -> f64 {
    let total: f64 = data.iter().map(|x| bmu(weights, dim, x).1).sum();
    total / data.len() as f64
}

pub fn moore_adjacent(cols: usize, a: usize, b: usize) -> bool {
    let (ra, ca) = ((a / cols) as i64, (a % cols) as i64);
    let (rb, cb) = ((b / cols) as i64, (b % cols) as i64);
    a != b && (ra - rb).abs() <= 1 && (ca - cb).abs() <= 1
}

pub fn topographic_error(weights: &[f64], dim: usize, cols: usize, data: &[Vec<f64>]) -> f64 {
    let bad = data
        .iter()
        .filter(|x| {
            let (a, b) = two_bmus(weights, dim, x);
            !moore_adjacent(cols, a.0, b.0)
        })
        .count();
    bad as f64 / data.len() as f64
}

pub fn umatrix(weights: &[f64], dim: usize, rows: usize, cols: usize) -> Vec<f64> {
    let n = rows * cols;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut sum = 0.0;
        let mut count = 0;
        for j in 0..n {
            if moore_adjacent(cols, i, j) {
                sum += euclid(&weights[i * dim..(i + 1) * dim], &weights[j * dim..(j + 1) * dim]);
                count += 1;
            }
        }
        out[i] = if count == 0 { 0.0 } else { sum / count as f64 };
    }
    out
}

/// Number of 8-connected components among cells carrying `label`.
pub fn components(labels: &[u32], cols: usize, label: u32) -> usize {
    let n = labels.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if labels[s] != label || seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && labels[j] == label && moore_adjacent(cols, i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

/// Majority-label purity of cluster assignments over non-transition samples.
pub fn phase_purity(model: &HulsModel, raw: &Dataset, truth: &[TruthRow]) -> f64 {
    let norm = model.normalize(raw).unwrap();
    let mut table: HashMap<u32, HashMap<u8, usize>> = HashMap::new();
    let mut n = 0;
    for (x, t) in norm.samples().zip(truth) {
        if TRANSITION_PHASES.contains(&t.phase) {
            continue;
        }
        let pos = model.som.find_bmu(x).unwrap().pos;
        let c = model.clusters.assign(pos).unwrap();
        *table.entry(c).or_default().entry(t.phase).or_default() += 1;
        n += 1;
    }
    let majority: usize = table.values().map(|m| m.values().max().unwrap()).sum();
    majority as f64 / n as f64
}

pub fn rows_of(data: &Dataset) -> Vec<Vec<f64>> {
    data.samples().map(<[f64]>::to_vec).collect()
}
