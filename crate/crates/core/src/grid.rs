//! Uniform Cartesian grids with Dirichlet ghost nodes.
//!
//! Axis `a` carries `points[a]` interior nodes at
//! `x_k = -L_a + (k + 1) d_a`, `d_a = 2 L_a / (points[a] + 1)`, so the
//! homogeneous Dirichlet walls sit exactly at `±L_a`. Flattened indices are
//! row-major: the last axis varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_extents_m: Vec<f64>,
    points: Vec<usize>,
}

impl GridSpec {
    pub fn new(half_extents_m: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        if half_extents_m.is_empty() || half_extents_m.len() > 3 {
            return Err(Error::validation("grid", "grid must have 1 to 3 axes"));
        }
        if half_extents_m.len() != points.len() {
            return Err(Error::validation(
                "grid.points",
                format!("{} point counts for {} axes", points.len(), half_extents_m.len()),
            ));
        }
        if let Some(n) = points.iter().find(|&&n| n < 3) {
            return Err(Error::validation(
                "grid.points",
                format!("each axis needs at least 3 points, got {n}"),
            ));
        }
        if half_extents_m.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::validation("grid", "extents must be positive"));
        }
        Ok(GridSpec { half_extents_m, points })
    }

    /// Grid reaching `margin` times `radii` along every axis.
    pub fn enclosing(radii_m: &[f64], points: Vec<usize>, margin: f64) -> Result<Self> {
        if !(margin >= 1.2) {
            return Err(Error::validation(
                "grid.margin",
                format!("margin factor must be at least 1.2, got {margin}"),
            ));
        }
        GridSpec::new(radii_m.iter().map(|r| r * margin).collect(), points)
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn half_extents(&self) -> &[f64] {
        &self.half_extents_m
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_extents_m[axis] / (self.points[axis] + 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        -self.half_extents_m[axis] + (k + 1) as f64 * self.spacing(axis)
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|k| self.coord(axis, k)).collect()
    }

    /// Flat-index strides per axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    /// Multi-index of flat index `i`.
    pub fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = i % self.points[a];
            i /= self.points[a];
        }
        idx
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        self.unravel(i)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.coord(a, k))
            .collect()
    }

    /// Evaluates `f` at every node in flat order.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_coords(a)).collect();
        let mut r = vec![0.0; self.dim()];
        let mut idx = vec![0usize; self.dim()];
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            for a in 0..self.dim() {
                r[a] = axes[a][idx[a]];
            }
            out.push(f(&r));
            for a in (0..self.dim()).rev() {
                idx[a] += 1;
                if idx[a] < self.points[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// Whether flat index `i` lies on the outermost layer of nodes.
    pub fn is_boundary(&self, i: usize) -> bool {
        self.unravel(i)
            .iter()
            .zip(&self.points)
            .any(|(&k, &n)| k == 0 || k + 1 == n)
    }

    /// Discrete integral `Σ f dV`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::validation(what, "fields live on different grids"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walls_at_extent() {
        let g = GridSpec::new(vec![1.0], vec![9]).unwrap();
        assert!((g.spacing(0) - 0.2).abs() < 1e-15);
        assert!((g.coord(0, 0) + 0.8).abs() < 1e-15);
        assert!((g.coord(0, 8) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = GridSpec::new(vec![1.0, 2.0, 3.0], vec![3, 4, 5]).unwrap();
        let s = g.strides();
        assert_eq!(s, vec![20, 5, 1]);
        for i in 0..g.len() {
            let idx = g.unravel(i);
            assert_eq!(idx.iter().zip(&s).map(|(a, b)| a * b).sum::<usize>(), i);
        }
        let xs = g.sample(|r| r[0] + 10.0 * r[1] + 100.0 * r[2]);
        for (i, v) in xs.iter().enumerate() {
            let r = g.position(i);
            assert!((v - (r[0] + 10.0 * r[1] + 100.0 * r[2])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(vec![1.0], vec![2]).is_err());
        assert!(GridSpec::new(vec![1.0, 1.0], vec![4]).is_err());
        assert!(GridSpec::new(vec![-1.0], vec![4]).is_err());
        assert!(GridSpec::enclosing(&[1.0], vec![10], 1.1).is_err());
    }
}
