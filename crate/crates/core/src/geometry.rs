//! The infinite binary tree over `[0,1]^d`: cell splitting, the per-epoch
//! fill-distance schedule, and grid construction with exclusions.
//!
//! Cells are axis-aligned cuboids produced by repeatedly bisecting the
//! longest edge (ties broken by lowest dimension index), so every bound is
//! an exact dyadic rational and the bit path from the root identifies a
//! cell uniquely. Membership of a point is decided by replaying that
//! canonical descent, never by comparing against possibly-rounded bounds.
//! Cells are half-open, `[lower, upper)`, except where they touch the
//! upper domain boundary.

use crate::error::{Error, Result};
use crate::gp::AlgoParams;

/// A node of the binary tree over the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    lower: Vec<f64>,
    upper: Vec<f64>,
    depth: usize,
    path: Vec<u8>,
}

impl Cell {
    /// The root cell `[0,1]^d`.
    pub fn root(dim: usize) -> Cell {
        assert!(dim >= 1);
        Cell {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
            depth: 0,
            path: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn path(&self) -> &[u8] {
        &self.path
    }

    pub fn path_string(&self) -> String {
        self.path.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Axis of the next bisection: longest edge, ties to the lowest index.
    pub fn split_axis(&self) -> usize {
        let mut best = 0;
        let mut best_len = self.upper[0] - self.lower[0];
        for i in 1..self.dim() {
            let len = self.upper[i] - self.lower[i];
            if len > best_len {
                best = i;
                best_len = len;
            }
        }
        best
    }

    /// Bisect the longest edge; the left child takes the lower half.
    pub fn split(&self) -> (Cell, Cell) {
        let axis = self.split_axis();
        let mid = 0.5 * (self.lower[axis] + self.upper[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[axis] = mid;
        right.lower[axis] = mid;
        left.depth += 1;
        right.depth += 1;
        left.path.push(0);
        right.path.push(1);
        (left, right)
    }

    /// Whether `point` lies in this cell, decided by canonical descent.
    pub fn contains(&self, point: &[f64]) -> bool {
        debug_assert_eq!(point.len(), self.dim());
        locate_path(point, self.depth) == self.path
    }
}

/// Bisect the longest edge of `cell` (see [`Cell::split`]).
pub fn split_cell(cell: &Cell) -> (Cell, Cell) {
    cell.split()
}

/// All descendants exactly `levels` below `root`, in canonical path order.
/// They partition `root`.
pub fn subtree_leaves(root: &Cell, levels: usize) -> Vec<Cell> {
    assert!(levels >= 1);
    let mut out = Vec::with_capacity(1 << levels);
    fn descend(cell: &Cell, remaining: usize, out: &mut Vec<Cell>) {
        if remaining == 0 {
            out.push(cell.clone());
            return;
        }
        let (l, r) = cell.split();
        descend(&l, remaining - 1, out);
        descend(&r, remaining - 1, out);
    }
    descend(root, levels, &mut out);
    out
}

/// The canonical bit path of the cell at `depth` containing `point`.
///
/// Points on an internal split plane belong to the right child; the upper
/// domain boundary folds into the last cell so the unit cube stays covered.
pub fn locate_path(point: &[f64], depth: usize) -> Vec<u8> {
    let mut cell = Cell::root(point.len());
    let mut path = Vec::with_capacity(depth);
    for _ in 0..depth {
        let axis = cell.split_axis();
        let mid = 0.5 * (cell.lower[axis] + cell.upper[axis]);
        let (l, r) = cell.split();
        if point[axis] < mid {
            path.push(0);
            cell = l;
        } else {
            path.push(1);
            cell = r;
        }
    }
    path
}

/// Fill-distance parameter for an epoch at common depth `rho`:
/// `(c/L)^(1/alpha) * 2^(-(rho/d + 1))`.
///
/// `rho` is always advanced in whole-dimension steps.
pub fn delta_k(params: &AlgoParams, rho: usize) -> f64 {
    let d = params.domain_dim;
    debug_assert!(rho % d == 0, "rho must be a multiple of the dimension");
    let base = (params.shrink_c / params.holder_l).powf(1.0 / params.holder_alpha);
    base * 2f64.powf(-((rho as f64) / (d as f64) + 1.0))
}

/// A fill-distance-certified discretization of a cell.
#[derive(Debug, Clone)]
pub struct Grid {
    pub cell: Cell,
    pub points: Vec<Vec<f64>>,
    pub delta: f64,
}

/// Uniform lattice of cell centers with per-axis spacing at most
/// `2 delta / sqrt(d)`, which guarantees fill distance at most `delta`.
/// Points falling inside any excluded cell are removed; if nothing
/// survives the caller treats the region as rejected.
pub fn discretize(cell: &Cell, delta: f64, excluded: &[Cell]) -> Result<Grid> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    let d = cell.dim();
    let target = 2.0 * delta / (d as f64).sqrt();
    let mut counts = Vec::with_capacity(d);
    for i in 0..d {
        let len = cell.upper[i] - cell.lower[i];
        let n = (len / target).ceil().max(1.0) as usize;
        counts.push(n);
    }
    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut index = vec![0usize; d];
    loop {
        let p: Vec<f64> = (0..d)
            .map(|i| {
                let len = cell.upper[i] - cell.lower[i];
                let spacing = len / counts[i] as f64;
                cell.lower[i] + (index[i] as f64 + 0.5) * spacing
            })
            .collect();
        if !excluded.iter().any(|e| e.contains(&p)) {
            points.push(p);
        }
        // Odometer increment, last axis fastest.
        let mut axis = d;
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < counts[axis] {
                break;
            }
            index[axis] = 0;
            if axis == 0 {
                break;
            }
        }
        if index.iter().all(|&v| v == 0) {
            break;
        }
    }
    if points.is_empty() {
        return Err(Error::RegionFullyExcluded);
    }
    Ok(Grid {
        cell: cell.clone(),
        points,
        delta,
    })
}
