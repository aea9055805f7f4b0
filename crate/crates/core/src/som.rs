//! Rectangular self-organizing map with exponential learning-rate and
//! neighborhood schedules, plus quantization and topographic error.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Updates smaller than this (largest component) are not counted as updates.
pub const UPDATE_EPSILON: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomConfig {
    pub rows: usize,
    pub cols: usize,
    pub epochs: usize,
    pub alpha0: f64,
    pub sigma0: f64,
    pub seed: u64,
    /// Present samples in a seeded random order each epoch instead of
    /// dataset order.
    #[serde(default)]
    pub shuffle: bool,
}

impl SomConfig {
    /// 67x67 map, 1000 epochs, initial learning rate 0.02, initial radius 2.
    pub fn reference(seed: u64) -> Self {
        SomConfig {
            rows: 67,
            cols: 67,
            epochs: 1000,
            alpha0: 0.02,
            sigma0: 2.0,
            seed,
            shuffle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("map dimensions must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidConfig("alpha0 must be > 0".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidConfig("sigma0 must be > 0".into()));
        }
        Ok(())
    }

    pub fn neurons(&self) -> usize {
        self.rows * self.cols
    }
}

/// Zero-based lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub row: usize,
    pub col: usize,
}

impl GridPos {
    pub fn new(row: usize, col: usize) -> Self {
        GridPos { row, col }
    }

    pub fn lattice_distance(self, other: GridPos) -> f64 {
        let dr = self.row.abs_diff(other.row) as f64;
        let dc = self.col.abs_diff(other.col) as f64;
        (dr * dr + dc * dc).sqrt()
    }

    /// Moore (8-neighborhood) adjacency; a position is not adjacent to itself.
    pub fn is_adjacent(self, other: GridPos) -> bool {
        self != other && self.row.abs_diff(other.row) <= 1 && self.col.abs_diff(other.col) <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmuResult {
    pub pos: GridPos,
    pub distance: f64,
}

/// `alpha0 * exp(-k / K)`.
pub fn learning_rate(k: usize, config: &SomConfig) -> Result<f64> {
    check_epoch(k, config)?;
    Ok(config.alpha0 * decay(k, config.epochs))
}

/// `exp(-|v* - v| / (sigma0 * exp(-k / K)))` with Euclidean lattice distance.
pub fn neighborhood(bmu: GridPos, v: GridPos, k: usize, config: &SomConfig) -> Result<f64> {
    check_epoch(k, config)?;
    for p in [bmu, v] {
        if p.row >= config.rows || p.col >= config.cols {
            return Err(Error::OutOfBounds {
                row: p.row,
                col: p.col,
                rows: config.rows,
                cols: config.cols,
            });
        }
    }
    let radius = config.sigma0 * decay(k, config.epochs);
    Ok((-bmu.lattice_distance(v) / radius).exp())
}

fn decay(k: usize, epochs: usize) -> f64 {
    (-(k as f64) / epochs as f64).exp()
}

fn check_epoch(k: usize, config: &SomConfig) -> Result<()> {
    if k >= config.epochs {
        return Err(Error::EpochOutOfRange {
            k,
            epochs: config.epochs,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-major first neuron with the smallest squared distance to `x`.
#[inline(always)]
fn nearest_fixed<const D: usize>(weights: &[f64], x: &[f64]) -> (usize, f64) {
    let x: &[f64; D] = x.try_into().expect("dimension checked by caller");
    let mut best = (0, f64::INFINITY);
    for (i, w) in weights.chunks_exact(D).enumerate() {
        let mut d = 0.0;
        for j in 0..D {
            let diff = x[j] - w[j];
            d += diff * diff;
        }
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// `w += ah * (x - w)` for one lattice row, counting neurons that moved.
/// Small dimensions get a fixed-width kernel; the arithmetic is identical.
fn update_row(weights: &mut [f64], counts: &mut [u64], factors: &[f64], x: &[f64]) {
    match x.len() {
        1 => update_row_fixed::<1>(weights, counts, factors, x),
        2 => update_row_fixed::<2>(weights, counts, factors, x),
        3 => update_row_fixed::<3>(weights, counts, factors, x),
        4 => update_row_fixed::<4>(weights, counts, factors, x),
        5 => update_row_fixed::<5>(weights, counts, factors, x),
        6 => update_row_fixed::<6>(weights, counts, factors, x),
        7 => update_row_fixed::<7>(weights, counts, factors, x),
        8 => update_row_fixed::<8>(weights, counts, factors, x),
        dim => {
            for ((w, count), &ah) in weights.chunks_exact_mut(dim).zip(counts.iter_mut()).zip(factors) {
                let mut changed = false;
                for (wj, &xj) in w.iter_mut().zip(x) {
                    let delta = ah * (xj - *wj);
                    *wj += delta;
                    changed |= delta.abs() > UPDATE_EPSILON;
                }
                *count += u64::from(changed);
            }
        }
    }
}

#[inline(always)]
fn update_row_fixed<const D: usize>(weights: &mut [f64], counts: &mut [u64], factors: &[f64], x: &[f64]) {
    let x: &[f64; D] = x.try_into().expect("dimension checked by caller");
    for ((w, count), &ah) in weights.chunks_exact_mut(D).zip(counts.iter_mut()).zip(factors) {
        let w: &mut [f64; D] = w.try_into().unwrap();
        let mut changed = false;
        for j in 0..D {
            let delta = ah * (x[j] - w[j]);
            w[j] += delta;
            changed |= delta.abs() > UPDATE_EPSILON;
        }
        *count += u64::from(changed);
    }
}

/// Per-epoch diagnostics returned by [`SomModel::train`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingStats {
    /// Mean BMU distance of each epoch, measured before each sample's update.
    pub epoch_mean_bmu_distance: Vec<f64>,
}

/// Lattice of weight vectors stored row-major, `rows * cols * dim` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomModel {
    pub config: SomConfig,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub update_counts: Vec<u64>,
}

impl SomModel {
    /// Weights drawn uniformly per feature within `bounds`.
    pub fn init_random(config: &SomConfig, bounds: &[(f64, f64)]) -> Result<Self> {
        config.validate()?;
        if bounds.is_empty() {
            return Err(Error::InvalidConfig("feature dimension must be >= 1".into()));
        }
        if bounds.iter().any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidConfig("bounds must be finite with min <= max".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dim = bounds.len();
        let mut weights = Vec::with_capacity(config.neurons() * dim);
        for _ in 0..config.neurons() {
            for &(lo, hi) in bounds {
                weights.push(if hi > lo { rng.gen_range(lo..=hi) } else { lo });
            }
        }
        Ok(SomModel {
            config: config.clone(),
            dim,
            weights,
            update_counts: vec![0; config.neurons()],
        })
    }

    /// Builds a model from explicit row-major weights with zero update counts.
    pub fn from_weights(config: &SomConfig, dim: usize, weights: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if dim == 0 || weights.len() != config.neurons() * dim {
            return Err(Error::DimensionMismatch {
                expected: config.neurons() * dim,
                found: weights.len(),
            });
        }
        Ok(SomModel {
            config: config.clone(),
            dim,
            weights,
            update_counts: vec![0; config.neurons()],
        })
    }

    pub fn rows(&self) -> usize {
        self.config.rows
    }

    pub fn cols(&self) -> usize {
        self.config.cols
    }

    pub fn neurons(&self) -> usize {
        self.config.neurons()
    }

    pub fn index(&self, pos: GridPos) -> usize {
        pos.row * self.config.cols + pos.col
    }

    pub fn pos(&self, index: usize) -> GridPos {
        GridPos::new(index / self.config.cols, index % self.config.cols)
    }

    pub fn weight(&self, pos: GridPos) -> &[f64] {
        let i = self.index(pos);
        &self.weights[i * self.dim..(i + 1) * self.dim]
    }

    pub fn update_count(&self, pos: GridPos) -> u64 {
        self.update_counts[self.index(pos)]
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    /// Nearest neuron by Euclidean distance; ties go to the lowest row-major index.
    pub fn find_bmu(&self, x: &[f64]) -> Result<BmuResult> {
        self.check_dim(x.len())?;
        let (idx, sq) = self.bmu_index(x);
        Ok(BmuResult {
            pos: self.pos(idx),
            distance: sq.sqrt(),
        })
    }

    #[inline]
    fn bmu_index(&self, x: &[f64]) -> (usize, f64) {
        match self.dim {
            1 => nearest_fixed::<1>(&self.weights, x),
            2 => nearest_fixed::<2>(&self.weights, x),
            3 => nearest_fixed::<3>(&self.weights, x),
            4 => nearest_fixed::<4>(&self.weights, x),
            5 => nearest_fixed::<5>(&self.weights, x),
            6 => nearest_fixed::<6>(&self.weights, x),
            7 => nearest_fixed::<7>(&self.weights, x),
            8 => nearest_fixed::<8>(&self.weights, x),
            dim => {
                let mut best = (0, f64::INFINITY);
                for (i, w) in self.weights.chunks_exact(dim).enumerate() {
                    let d = squared_distance(x, w);
                    if d < best.1 {
                        best = (i, d);
                    }
                }
                best
            }
        }
    }

    /// BMU and second-best neuron.
    pub fn find_two_bmus(&self, x: &[f64]) -> Result<(BmuResult, BmuResult)> {
        if self.neurons() < 2 {
            return Err(Error::SingleNeuron);
        }
        self.check_dim(x.len())?;
        let mut first = (usize::MAX, f64::INFINITY);
        let mut second = (usize::MAX, f64::INFINITY);
        for (i, w) in self.weights.chunks_exact(self.dim).enumerate() {
            let d = squared_distance(x, w);
            if d < first.1 {
                second = first;
                first = (i, d);
            } else if d < second.1 {
                second = (i, d);
            }
        }
        let mk = |(i, d): (usize, f64)| BmuResult {
            pos: self.pos(i),
            distance: d.sqrt(),
        };
        Ok((mk(first), mk(second)))
    }

    /// Sequential training: for each epoch and each sample, every neuron
    /// moves toward the sample by `alpha(k) * h(k)`.
    pub fn train(&mut self, data: &Dataset) -> Result<TrainingStats> {
        self.config.validate()?;
        self.check_dim(data.dim())?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (rows, cols, dim) = (self.config.rows, self.config.cols, self.dim);
        let span_c = 2 * cols - 1;
        let mut table = vec![0.0; (2 * rows - 1) * span_c];
        let mut order: Vec<usize> = (0..data.len()).collect();
        // the init stream is derived from the same seed; keep shuffling independent of it
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x5eed_5eed_5eed_5eed);
        let mut stats = TrainingStats::default();

        for k in 0..self.config.epochs {
            let alpha = learning_rate(k, &self.config)?;
            let radius = self.config.sigma0 * decay(k, self.config.epochs);
            // h depends only on the lattice offset, so tabulate alpha * h per epoch
            for dr in 0..2 * rows - 1 {
                for dc in 0..span_c {
                    let r = dr as f64 - (rows - 1) as f64;
                    let c = dc as f64 - (cols - 1) as f64;
                    table[dr * span_c + dc] = alpha * (-(r * r + c * c).sqrt() / radius).exp();
                }
            }
            if self.config.shuffle {
                order.shuffle(&mut shuffle_rng);
            }

            let mut err_sum = 0.0;
            for &i in &order {
                let x = data.sample(i);
                let (bmu, sq) = self.bmu_index(x);
                err_sum += sq.sqrt();
                let (br, bc) = (bmu / cols, bmu % cols);
                for r in 0..rows {
                    let t0 = (r + rows - 1 - br) * span_c + (cols - 1 - bc);
                    update_row(
                        &mut self.weights[r * cols * dim..(r + 1) * cols * dim],
                        &mut self.update_counts[r * cols..(r + 1) * cols],
                        &table[t0..t0 + cols],
                        x,
                    );
                }
            }
            stats
                .epoch_mean_bmu_distance
                .push(err_sum / data.len() as f64);
        }
        Ok(stats)
    }

    /// BMU distance for every sample, in order.
    pub fn bmu_distances(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data.dim())?;
        Ok(data.samples().map(|x| self.bmu_index(x).1.sqrt()).collect())
    }

    /// Mean BMU distance over the dataset.
    pub fn quantization_error(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = self.bmu_distances(data)?;
        Ok(d.iter().sum::<f64>() / d.len() as f64)
    }

    /// Fraction of samples whose two best neurons are not lattice neighbors.
    pub fn topographic_error(&self, data: &Dataset) -> Result<f64> {
        if self.neurons() < 2 {
            return Err(Error::SingleNeuron);
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut errors = 0usize;
        for x in data.samples() {
            let (a, b) = self.find_two_bmus(x)?;
            if !a.pos.is_adjacent(b.pos) {
                errors += 1;
            }
        }
        Ok(errors as f64 / data.len() as f64)
    }
}
