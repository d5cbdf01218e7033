//! Square, uniformly spaced `(ξ, η)` grids and field snapshots on them.
//!
//! Arrays are indexed `[i, j]` with `i` along ξ and `j` along η, row-major,
//! so η varies fastest in memory.

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid half-width must be positive and finite, got {0}")]
    HalfWidth(f64),
    #[error("grid needs at least {min} nodes per axis, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("array shape {got:?} does not match a {n}x{n} grid")]
    Shape { got: (usize, usize), n: usize },
    #[error("field contains a non-finite value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },
}

/// `nodes × nodes` sampling of `[−L, L]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    nodes: usize,
}

impl Grid {
    pub fn new(half_width: f64, nodes: usize) -> Result<Self, GridError> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GridError::HalfWidth(half_width));
        }
        if nodes < 2 {
            return Err(GridError::TooFewNodes { min: 2, got: nodes });
        }
        Ok(Self { half_width, nodes })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.coord(i)).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nodes, self.nodes)
    }

    /// Next finer dyadic grid (spacing halved).
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            nodes: 2 * (self.nodes - 1) + 1,
        }
    }

    /// Next coarser dyadic grid, if the node count allows it.
    pub fn coarsened(&self) -> Option<Self> {
        if self.nodes % 2 == 1 && self.nodes >= 5 {
            Some(Self {
                half_width: self.half_width,
                nodes: (self.nodes - 1) / 2 + 1,
            })
        } else {
            None
        }
    }

    pub fn check_shape<T>(&self, a: &Array2<T>) -> Result<(), GridError> {
        if a.dim() != self.shape() {
            return Err(GridError::Shape {
                got: a.dim(),
                n: self.nodes,
            });
        }
        Ok(())
    }

    /// Evaluates `f(ξ, η)` at every node, rows in parallel.
    pub fn sample<T, F>(&self, f: F) -> Array2<T>
    where
        T: Copy + Default + Send + Sync,
        F: Fn(f64, f64) -> T + Sync,
    {
        let xs = self.coords();
        let mut out = Array2::from_elem(self.shape(), T::default());
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                let xi = xs[i];
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(xi, xs[j]);
                }
            });
        out
    }
}

/// Fields `q` (complex), `U`, `V` (real) on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid: Grid,
    pub t: f64,
    pub q: Array2<Complex64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl FieldSnapshot {
    pub fn new(
        grid: Grid,
        t: f64,
        q: Array2<Complex64>,
        u: Array2<f64>,
        v: Array2<f64>,
    ) -> Result<Self, GridError> {
        grid.check_shape(&q)?;
        grid.check_shape(&u)?;
        grid.check_shape(&v)?;
        Ok(Self { grid, t, q, u, v })
    }

    /// Evaluates a closed form `(ξ, η) ↦ (q, U, V)` on the grid.
    pub fn from_fn<F>(grid: Grid, t: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> (Complex64, f64, f64) + Sync,
    {
        let triples = grid.sample(|xi, eta| {
            let (q, u, v) = f(xi, eta);
            (q, u, v)
        });
        let q = triples.mapv(|x| x.0);
        let u = triples.mapv(|x| x.1);
        let v = triples.mapv(|x| x.2);
        Self { grid, t, q, u, v }
    }

    /// First node holding a non-finite value, if any.
    pub fn check_finite(&self) -> Result<(), GridError> {
        let mut bad = None;
        Zip::indexed(&self.q).and(&self.u).and(&self.v).for_each(|(i, j), q, u, v| {
            if bad.is_none() && !(q.re.is_finite() && q.im.is_finite() && u.is_finite() && v.is_finite()) {
                bad = Some((i, j));
            }
        });
        match bad {
            Some((i, j)) => Err(GridError::NonFinite { i, j }),
            None => Ok(()),
        }
    }

    pub fn abs_q(&self) -> Array2<f64> {
        self.q.mapv(|z| z.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_span_the_box() {
        let g = Grid::new(10.0, 257).unwrap();
        assert_eq!(g.coord(0), -10.0);
        assert!((g.coord(256) - 10.0).abs() < 1e-12);
        assert_eq!(g.coord(128), 0.0);
        assert!((g.spacing() - 20.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn dyadic_levels() {
        let g = Grid::new(10.0, 257).unwrap();
        assert_eq!(g.coarsened().unwrap().nodes(), 129);
        assert_eq!(g.refined().nodes(), 513);
        assert!(Grid::new(1.0, 4).unwrap().coarsened().is_none());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0.0, 10).is_err());
        assert!(Grid::new(f64::INFINITY, 10).is_err());
        assert!(Grid::new(1.0, 1).is_err());
    }

    #[test]
    fn sample_is_row_major_eta_fastest() {
        let g = Grid::new(1.0, 3).unwrap();
        let a = g.sample(|xi, eta| 10.0 * xi + eta);
        assert_eq!(a.as_slice().unwrap(), &[-11.0, -10.0, -9.0, -1.0, 0.0, 1.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn snapshot_shape_checked() {
        let g = Grid::new(1.0, 3).unwrap();
        let q = Array2::zeros((3, 3));
        let bad = Array2::zeros((3, 2));
        assert!(FieldSnapshot::new(g, 0.0, q.clone(), bad, Array2::zeros((3, 3))).is_err());
        let mut s = FieldSnapshot::new(g, 0.0, q, Array2::zeros((3, 3)), Array2::zeros((3, 3))).unwrap();
        assert!(s.check_finite().is_ok());
        s.u[[1, 2]] = f64::NAN;
        assert_eq!(s.check_finite(), Err(GridError::NonFinite { i: 1, j: 2 }));
    }
}
