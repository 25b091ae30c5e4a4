//! Population-level processes: spike propagation, neighbourhood exchange
//! and global best selection, plus the topology builders they rely on.
//!
//! Matrices are row-per-unit: `S` and `A` are `n x d`, `P` is `n x d`,
//! `f_p` has length `n`. The neighbourhood tensor is `m x d x n` with one
//! slice per receiving unit.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoordinationError {
    #[error("a ring needs at least 3 units, got {0}")]
    RingTooSmall(usize),
    #[error("neighbourhood size {m} is outside [1, {max}]")]
    NeighbourCount { m: usize, max: usize },
    #[error("{what}: expected shape {expected:?}, got {actual:?}")]
    Shape {
        what: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("adjacency matrix has a self connection at unit {0}")]
    SelfConnection(usize),
    #[error("unit {0} has no information neighbours")]
    EmptyNeighbourhood(usize),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("row update for unit {unit} but only {n} rows exist")]
    RowOutOfRange { unit: usize, n: usize },
}

fn check_shape(what: &'static str, expected: &[usize], actual: &[usize]) -> Result<(), CoordinationError> {
    if expected == actual {
        Ok(())
    } else {
        Err(CoordinationError::Shape {
            what,
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpikeTopologyKind {
    #[default]
    Ring,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InfoTopologyKind {
    #[default]
    RandomM,
    Full,
}

/// Spike-propagation graph `W_s`; `W_s[i, k]` means spikes of `k` reach `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTopology {
    w_s: Array2<bool>,
    /// For each presynaptic unit `k`, the units `i` it excites.
    targets: Vec<Vec<usize>>,
}

impl SpikeTopology {
    pub fn from_matrix(w_s: Array2<bool>) -> Result<Self, CoordinationError> {
        let n = w_s.nrows();
        check_shape("spike adjacency", &[n, n], w_s.shape())?;
        if let Some(i) = (0..n).find(|&i| w_s[[i, i]]) {
            return Err(CoordinationError::SelfConnection(i));
        }
        let targets = (0..n).map(|k| (0..n).filter(|&i| w_s[[i, k]]).collect()).collect();
        Ok(Self { w_s, targets })
    }

    pub fn size(&self) -> usize {
        self.w_s.nrows()
    }

    pub fn matrix(&self) -> &Array2<bool> {
        &self.w_s
    }

    /// The `n x n x d` tensor with `W_s` replicated across the last axis.
    pub fn weight_tensor(&self, d: usize) -> Array3<bool> {
        let n = self.size();
        Array3::from_shape_fn((n, n, d), |(i, k, _)| self.w_s[[i, k]])
    }
}

/// Bidirectional ring: `W_s[i, (i +- 1) mod n] = 1`.
pub fn build_ring(n: usize) -> Result<SpikeTopology, CoordinationError> {
    if n < 3 {
        return Err(CoordinationError::RingTooSmall(n));
    }
    let w = Array2::from_shape_fn((n, n), |(i, k)| k == (i + 1) % n || k == (i + n - 1) % n);
    SpikeTopology::from_matrix(w)
}

/// Complete graph without self connections.
pub fn build_full(n: usize) -> Result<SpikeTopology, CoordinationError> {
    if n == 0 {
        return Err(CoordinationError::EmptyPopulation);
    }
    SpikeTopology::from_matrix(Array2::from_shape_fn((n, n), |(i, k)| i != k))
}

/// Information-sharing graph `W_x` with its neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoTopology {
    w_x: Array2<bool>,
    neighbours: Vec<Vec<usize>>,
    m: usize,
}

impl InfoTopology {
    pub fn from_matrix(w_x: Array2<bool>) -> Result<Self, CoordinationError> {
        let n = w_x.nrows();
        check_shape("information adjacency", &[n, n], w_x.shape())?;
        if n == 0 {
            return Err(CoordinationError::EmptyPopulation);
        }
        let mut neighbours = Vec::with_capacity(n);
        for i in 0..n {
            if w_x[[i, i]] {
                return Err(CoordinationError::SelfConnection(i));
            }
            let row: Vec<usize> = (0..n).filter(|&k| w_x[[i, k]]).collect();
            if row.is_empty() {
                return Err(CoordinationError::EmptyNeighbourhood(i));
            }
            neighbours.push(row);
        }
        let m = neighbours.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { w_x, neighbours, m })
    }

    pub fn size(&self) -> usize {
        self.w_x.nrows()
    }

    pub fn matrix(&self) -> &Array2<bool> {
        &self.w_x
    }

    /// Neighbours of unit `i` in ascending order.
    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.neighbours[i]
    }

    /// Largest neighbourhood size.
    pub fn m(&self) -> usize {
        self.m
    }
}

/// Each row gets exactly `m` distinct off-diagonal neighbours.
pub fn build_random_info<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<InfoTopology, CoordinationError> {
    if n < 2 || m < 1 || m > n - 1 {
        return Err(CoordinationError::NeighbourCount {
            m,
            max: n.saturating_sub(1),
        });
    }
    let mut w = Array2::from_elem((n, n), false);
    for i in 0..n {
        // sample among the n - 1 other units and skip over i
        for k in index::sample(rng, n - 1, m) {
            let k = if k >= i { k + 1 } else { k };
            w[[i, k]] = true;
        }
    }
    InfoTopology::from_matrix(w)
}

pub fn build_full_info(n: usize) -> Result<InfoTopology, CoordinationError> {
    if n < 2 {
        return Err(CoordinationError::NeighbourCount { m: 1, max: 0 });
    }
    InfoTopology::from_matrix(Array2::from_shape_fn((n, n), |(i, k)| i != k))
}

/// Activations `A[i, j] = OR_k (W[i, k, j] AND S[k, j])`.
///
/// Only true entries of `S` are visited, so the cost follows the spike count.
pub fn tensor_contract(topology: &SpikeTopology, s: ArrayView2<'_, bool>) -> Result<Array2<bool>, CoordinationError> {
    let n = topology.size();
    if s.nrows() != n {
        return Err(CoordinationError::Shape {
            what: "spike matrix",
            expected: vec![n, s.ncols()],
            actual: s.shape().to_vec(),
        });
    }
    let mut a = Array2::from_elem(s.raw_dim(), false);
    for ((k, j), &spike) in s.indexed_iter() {
        if spike {
            for &i in &topology.targets[k] {
                a[[i, j]] = true;
            }
        }
    }
    Ok(a)
}

/// Incumbent of the high-level selector.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBest {
    pub g: Vec<f64>,
    pub f_g: f64,
    pub is_init: bool,
}

impl GlobalBest {
    pub fn new(d: usize) -> Self {
        Self {
            g: vec![0.0; d],
            f_g: f64::INFINITY,
            is_init: false,
        }
    }
}

/// Greedy global best update; ties in `f_p` go to the lowest index.
pub fn high_level_selector_step(
    state: &mut GlobalBest,
    p: ArrayView2<'_, f64>,
    f_p: ArrayView1<'_, f64>,
) -> Result<(Vec<f64>, f64), CoordinationError> {
    let n = f_p.len();
    if n == 0 {
        return Err(CoordinationError::EmptyPopulation);
    }
    check_shape("best positions", &[n, state.g.len()], p.shape())?;
    let mut best = 0;
    for i in 1..n {
        if f_p[i] < f_p[best] {
            best = i;
        }
    }
    if f_p[best] < state.f_g || !state.is_init {
        state.g = p.row(best).to_vec();
        state.f_g = f_p[best];
        state.is_init = true;
    }
    Ok((state.g.clone(), state.f_g))
}

/// Neighbourhood tensor `m x d x n` and fitness matrix `m x n`.
///
/// Slot `l` of slice `i` holds the `l`-th neighbour of `i`; slots beyond
/// the neighbourhood repeat unit `i`'s own best.
pub fn neighbour_manager_step(
    topology: &InfoTopology,
    p: ArrayView2<'_, f64>,
    f_p: ArrayView1<'_, f64>,
) -> Result<(Array3<f64>, Array2<f64>), CoordinationError> {
    let n = topology.size();
    let d = p.ncols();
    check_shape("best positions", &[n, d], p.shape())?;
    check_shape("best fitness", &[n], f_p.shape())?;
    let m = topology.m();
    let mut pn = Array3::zeros((m, d, n));
    let mut fnm = Array2::zeros((m, n));
    for i in 0..n {
        let nb = topology.neighbours(i);
        for l in 0..m {
            let k = nb.get(l).copied().unwrap_or(i);
            for j in 0..d {
                pn[[l, j, i]] = p[[k, j]];
            }
            fnm[[l, i]] = f_p[k];
        }
    }
    Ok((pn, fnm))
}

/// A single row written by one unit into a shared matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RowUpdate<T> {
    pub unit: usize,
    pub row: Vec<T>,
}

/// Assembles an `n x d` matrix from row updates in arrival order.
#[derive(Debug, Clone)]
pub struct RowCollector<T> {
    matrix: Array2<T>,
    reported: Vec<bool>,
}

impl<T: Clone> RowCollector<T> {
    pub fn new(n: usize, d: usize, fill: T) -> Self {
        Self {
            matrix: Array2::from_elem((n, d), fill),
            reported: vec![false; n],
        }
    }

    pub fn apply(&mut self, update: &RowUpdate<T>) -> Result<(), CoordinationError> {
        let n = self.matrix.nrows();
        if update.unit >= n {
            return Err(CoordinationError::RowOutOfRange { unit: update.unit, n });
        }
        check_shape("row update", &[self.matrix.ncols()], &[update.row.len()])?;
        for (dst, src) in self.matrix.row_mut(update.unit).iter_mut().zip(&update.row) {
            *dst = src.clone();
        }
        self.reported[update.unit] = true;
        Ok(())
    }

    /// Every row has been written at least once.
    pub fn is_complete(&self) -> bool {
        self.reported.iter().all(|&r| r)
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }
}

/// Collects best positions together with their fitness.
#[derive(Debug, Clone)]
pub struct BestCollector {
    rows: RowCollector<f64>,
    fitness: Array1<f64>,
}

impl BestCollector {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            rows: RowCollector::new(n, d, 0.0),
            fitness: Array1::from_elem(n, f64::INFINITY),
        }
    }

    pub fn apply(&mut self, position: &RowUpdate<f64>, fitness: (usize, f64)) -> Result<(), CoordinationError> {
        self.rows.apply(position)?;
        if fitness.0 != position.unit {
            return Err(CoordinationError::RowOutOfRange {
                unit: fitness.0,
                n: self.fitness.len(),
            });
        }
        self.fitness[fitness.0] = fitness.1;
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.rows.is_complete()
    }

    pub fn positions(&self) -> &Array2<f64> {
        self.rows.matrix()
    }

    pub fn fitness(&self) -> &Array1<f64> {
        &self.fitness
    }
}
