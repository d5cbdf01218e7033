//! Fourth-order finite-difference and cumulative-quadrature kernels on
//! square grids.
//!
//! Interior nodes use 5-point central stencils; the two nodes nearest each
//! edge use one-sided stencils of the same order, so every node gets a value.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

/// Values a stencil can act on.
pub trait GridValue:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl GridValue for f64 {}
impl GridValue for Complex64 {}

/// Nodes excluded on each side when a residual is evaluated with central
/// stencils only.
pub const MARGIN: usize = 2;

const D1_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

const D2_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

/// Stencil (first index, weights) for node `i` of `n`, before the `1/(12h^order)` scale.
fn weights(order: u8, i: usize, n: usize) -> (usize, Vec<f64>) {
    let mirror = |w: &[f64], sign: f64| -> Vec<f64> { w.iter().rev().map(|c| sign * c).collect() };
    match order {
        1 => {
            if i == 0 {
                (0, D1_EDGE0.to_vec())
            } else if i == 1 {
                (0, D1_EDGE1.to_vec())
            } else if i + 2 >= n {
                let w = if i == n - 1 { &D1_EDGE0 } else { &D1_EDGE1 };
                (n - 5, mirror(w, -1.0))
            } else {
                (i - 2, D1_CENTRAL.to_vec())
            }
        }
        2 => {
            if i == 0 {
                (0, D2_EDGE0.to_vec())
            } else if i == 1 {
                (0, D2_EDGE1.to_vec())
            } else if i + 2 >= n {
                let w = if i == n - 1 { &D2_EDGE0 } else { &D2_EDGE1 };
                (n - 6, mirror(w, 1.0))
            } else {
                (i - 2, D2_CENTRAL.to_vec())
            }
        }
        _ => unreachable!("only first and second derivatives are provided"),
    }
}

fn min_nodes(order: u8) -> usize {
    if order == 1 {
        5
    } else {
        6
    }
}

/// Derivative of `order` (1 or 2) along `axis` (0 = ξ, 1 = η) written into `out`.
pub fn derivative_into<T: GridValue>(f: ArrayView2<T>, h: f64, order: u8, axis: usize, mut out: ArrayViewMut2<T>) {
    let (n0, n1) = f.dim();
    let n = if axis == 0 { n0 } else { n1 };
    assert!(n >= min_nodes(order), "stencil needs at least {} nodes, got {n}", min_nodes(order));
    let scale = if order == 1 { 1.0 / (12.0 * h) } else { 1.0 / (12.0 * h * h) };
    let central = if order == 1 { D1_CENTRAL } else { D2_CENTRAL };
    if axis == 1 {
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(f.axis_iter(Axis(0)).into_par_iter())
            .for_each(|(mut o, r)| {
                for j in 0..n {
                    if j >= 2 && j + 2 < n {
                        let mut acc = T::default();
                        for (k, c) in central.iter().enumerate() {
                            if *c != 0.0 {
                                acc = acc + r[j - 2 + k] * *c;
                            }
                        }
                        o[j] = acc * scale;
                    } else {
                        let (s, w) = weights(order, j, n);
                        let mut acc = T::default();
                        for (k, c) in w.iter().enumerate() {
                            acc = acc + r[s + k] * *c;
                        }
                        o[j] = acc * scale;
                    }
                }
            });
    } else {
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut o)| {
                let (s, w) = weights(order, i, n);
                o.fill(T::default());
                for (k, c) in w.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let r = f.row(s + k);
                    o.zip_mut_with(&r, |a, b| *a = *a + *b * *c);
                }
                o.map_inplace(|a| *a = *a * scale);
            });
    }
}

pub fn derivative<T: GridValue>(f: &Array2<T>, h: f64, order: u8, axis: usize) -> Array2<T> {
    let mut out = Array2::from_elem(f.dim(), T::default());
    derivative_into(f.view(), h, order, axis, out.view_mut());
    out
}

pub fn d_xi<T: GridValue>(f: &Array2<T>, h: f64) -> Array2<T> {
    derivative(f, h, 1, 0)
}

pub fn d_eta<T: GridValue>(f: &Array2<T>, h: f64) -> Array2<T> {
    derivative(f, h, 1, 1)
}

pub fn d2_xi<T: GridValue>(f: &Array2<T>, h: f64) -> Array2<T> {
    derivative(f, h, 2, 0)
}

pub fn d2_eta<T: GridValue>(f: &Array2<T>, h: f64) -> Array2<T> {
    derivative(f, h, 2, 1)
}

/// Cumulative integral from the first node along `axis`: composite Simpson
/// from node 0 for even offsets, a cubic first panel then Simpson for odd
/// ones. Fourth order overall.
pub fn cumulative_into(f: ArrayView2<f64>, h: f64, axis: usize, mut out: ArrayViewMut2<f64>) {
    let (n0, n1) = f.dim();
    let n = if axis == 0 { n0 } else { n1 };
    assert!(n >= 4, "cumulative quadrature needs at least 4 nodes, got {n}");
    let panel = h / 24.0;
    let simpson = h / 3.0;
    if axis == 1 {
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(f.axis_iter(Axis(0)).into_par_iter())
            .for_each(|(mut o, r)| {
                o[0] = 0.0;
                o[1] = panel * (9.0 * r[0] + 19.0 * r[1] - 5.0 * r[2] + r[3]);
                for j in 2..n {
                    o[j] = o[j - 2] + simpson * (r[j - 2] + 4.0 * r[j - 1] + r[j]);
                }
            });
    } else {
        // sequential in i, vectorised along the contiguous η rows
        out.row_mut(0).fill(0.0);
        {
            let (r0, r1, r2, r3) = (f.row(0), f.row(1), f.row(2), f.row(3));
            let mut o = out.row_mut(1);
            for j in 0..n1 {
                o[j] = panel * (9.0 * r0[j] + 19.0 * r1[j] - 5.0 * r2[j] + r3[j]);
            }
        }
        for i in 2..n {
            let (done, mut rest) = out.view_mut().split_at(Axis(0), i);
            let prev = done.row(i - 2);
            let mut o = rest.row_mut(0);
            let (a, b, c) = (f.row(i - 2), f.row(i - 1), f.row(i));
            for j in 0..n1 {
                o[j] = prev[j] + simpson * (a[j] + 4.0 * b[j] + c[j]);
            }
        }
    }
}

pub fn cumulative(f: &Array2<f64>, h: f64, axis: usize) -> Array2<f64> {
    let mut out = Array2::zeros(f.dim());
    cumulative_into(f.view(), h, axis, out.view_mut());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn poly(x: f64, deg: i32) -> f64 {
        (0..=deg).map(|p| (0.3 + 0.1 * p as f64) * x.powi(p)).sum()
    }

    fn dpoly(x: f64, deg: i32) -> f64 {
        (1..=deg).map(|p| (0.3 + 0.1 * p as f64) * p as f64 * x.powi(p - 1)).sum()
    }

    fn d2poly(x: f64, deg: i32) -> f64 {
        (2..=deg).map(|p| (0.3 + 0.1 * p as f64) * (p * (p - 1)) as f64 * x.powi(p - 2)).sum()
    }

    #[test]
    fn first_derivative_exact_on_quartics() {
        let g = Grid::new(1.0, 9).unwrap();
        let h = g.spacing();
        let f = g.sample(|xi, eta| poly(xi, 4) + 2.0 * poly(eta, 4));
        let fx = d_xi(&f, h);
        let fy = d_eta(&f, h);
        for i in 0..9 {
            for j in 0..9 {
                assert!((fx[[i, j]] - dpoly(g.coord(i), 4)).abs() < 1e-11, "xi at {i}");
                assert!((fy[[i, j]] - 2.0 * dpoly(g.coord(j), 4)).abs() < 1e-11, "eta at {j}");
            }
        }
    }

    #[test]
    fn second_derivative_exact_on_quintics_at_edges() {
        let g = Grid::new(1.0, 11).unwrap();
        let h = g.spacing();
        let f = g.sample(|xi, eta| poly(xi, 5) - poly(eta, 5));
        let fxx = d2_xi(&f, h);
        let fyy = d2_eta(&f, h);
        for i in 0..11 {
            // central stencil is exact to degree 5 as well
            assert!((fxx[[i, 3]] - d2poly(g.coord(i), 5)).abs() < 1e-9, "xi at {i}");
            assert!((fyy[[3, i]] + d2poly(g.coord(i), 5)).abs() < 1e-9, "eta at {i}");
        }
    }

    #[test]
    fn fourth_order_convergence_on_exponentials() {
        let mut errs = Vec::new();
        for n in [33usize, 65, 129] {
            let g = Grid::new(1.0, n).unwrap();
            let h = g.spacing();
            let f = g.sample(|xi, eta| (1.3 * xi).sin() * (0.7 * eta).exp());
            let fxx = d2_xi(&f, h);
            let fy = d_eta(&f, h);
            let mut e: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = (g.coord(i), g.coord(j));
                    e = e.max((fxx[[i, j]] + 1.69 * (1.3 * x).sin() * (0.7 * y).exp()).abs());
                    e = e.max((fy[[i, j]] - 0.7 * (1.3 * x).sin() * (0.7 * y).exp()).abs());
                }
            }
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn cumulative_quadrature_converges() {
        let mut errs = Vec::new();
        for n in [17usize, 33, 65, 129] {
            let g = Grid::new(2.0, n).unwrap();
            let h = g.spacing();
            let f = g.sample(|xi, eta| (-xi * xi).exp() * (1.0 + eta));
            let ix = cumulative(&f, h, 0);
            let iy = cumulative(&f, h, 1);
            let mut e: f64 = 0.0;
            for i in 0..n {
                let x = g.coord(i);
                // exact ∫_{-2}^{x} e^{-s²} ds via a fine composite Simpson reference
                let m = 4000;
                let hh = (x + 2.0) / m as f64;
                let mut s = 0.0;
                for k in 0..=m {
                    let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    let z = -2.0 + k as f64 * hh;
                    s += w * (-z * z).exp();
                }
                s *= hh / 3.0;
                for j in 0..n {
                    e = e.max((ix[[i, j]] - s * (1.0 + g.coord(j))).abs());
                }
            }
            for j in 0..n {
                let y = g.coord(j);
                let exact = (-g.coord(5).powi(2)).exp() * ((y + 1.0).powi(2) - 1.0) / 2.0;
                e = e.max((iy[[5, j]] - exact).abs());
            }
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn complex_values_supported() {
        let g = Grid::new(1.0, 9).unwrap();
        let f = g.sample(Complex64::new);
        let fy = d_eta(&f, g.spacing());
        assert!((fy[[4, 4]] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }
}
