//! Rectilinear grids and node-sampled scalar fields.
//!
//! Values are stored row-major with the last axis varying fastest, so the
//! flat index of `(i0, i1, .., ik)` is `((i0 * n1 + i1) * n2 + i2) ...`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest dimension any grid in this crate may have.
pub const MAX_DIM: usize = 8;

/// Fractional cell positions closer than this to an integer snap onto the node.
const NODE_SNAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn new(count: usize, min: f64, max: f64) -> Self {
        Self { count, min, max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct GridSpec {
    axes: Vec<Axis>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl TryFrom<Vec<Axis>> for GridSpec {
    type Error = Error;

    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        GridSpec::new(axes)
    }
}

impl From<GridSpec> for Vec<Axis> {
    fn from(spec: GridSpec) -> Self {
        spec.axes
    }
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not in 1..={MAX_DIM}",
                axes.len()
            )));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.count < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} has {} nodes, need at least 3",
                    a.count
                )));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.max > a.min) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k} bounds [{}, {}] are not an increasing finite interval",
                    a.min, a.max
                )));
            }
        }
        let spacing: Vec<f64> = axes
            .iter()
            .map(|a| (a.max - a.min) / (a.count - 1) as f64)
            .collect();
        let mut strides = vec![1usize; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].count;
        }
        let len = strides[0] * axes[0].count;
        Ok(Self {
            axes,
            spacing,
            strides,
            len,
        })
    }

    /// Convenience constructor from `(count, min, max)` triples.
    pub fn from_triples(triples: &[(usize, f64, f64)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(c, lo, hi)| Axis::new(c, lo, hi))
                .collect(),
        )
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.axes[k].count
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.axes[axis].min + i as f64 * self.spacing[axis]
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.ndim());
        multi
            .iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    pub fn unravel(&self, mut flat: usize, multi: &mut [usize]) {
        for k in 0..self.ndim() {
            multi[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
    }

    pub fn node_point(&self, flat: usize, point: &mut [f64]) {
        let mut rem = flat;
        for k in 0..self.ndim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            point[k] = self.coord(k, i);
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(&self.axes)
            .all(|(&x, a)| x >= a.min && x <= a.max)
    }

    /// Index of the node nearest to `x` along `axis` (clamped into the grid).
    pub fn nearest_index(&self, axis: usize, x: f64) -> usize {
        let a = &self.axes[axis];
        let s = ((x - a.min) / self.spacing[axis]).round();
        s.clamp(0.0, (a.count - 1) as f64) as usize
    }

    /// Locates the cell enclosing `point`, clamping it into the box first.
    pub(crate) fn locate(&self, point: &[f64]) -> Result<Cell> {
        if point.len() != self.ndim() {
            return Err(Error::DimensionMismatch {
                expected: self.ndim(),
                got: point.len(),
            });
        }
        let mut cell = Cell {
            base: [0; MAX_DIM],
            frac: [0.0; MAX_DIM],
            clamped: false,
        };
        for (k, &x) in point.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinitePoint(x));
            }
            let a = &self.axes[k];
            let xc = x.clamp(a.min, a.max);
            if xc != x {
                cell.clamped = true;
            }
            let mut s = (xc - a.min) / self.spacing[k];
            let r = s.round();
            if (s - r).abs() < NODE_SNAP {
                s = r;
            }
            let last = (a.count - 2) as f64;
            let i = s.floor().min(last).max(0.0);
            cell.base[k] = i as usize;
            cell.frac[k] = (s - i).clamp(0.0, 1.0);
        }
        Ok(cell)
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self == other
    }
}

/// Lower corner and fractional offsets of the cell enclosing a query point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    pub base: [usize; MAX_DIM],
    pub frac: [f64; MAX_DIM],
    pub clamped: bool,
}

impl Cell {
    /// Calls `f(flat_index, weight)` for every corner with a non-zero weight.
    pub fn for_each_corner(&self, spec: &GridSpec, mut f: impl FnMut(usize, f64)) {
        let d = spec.ndim();
        for mask in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            for k in 0..d {
                let up = (mask >> k) & 1 == 1;
                let t = self.frac[k];
                w *= if up { t } else { 1.0 - t };
                flat += (self.base[k] + up as usize) * spec.strides[k];
            }
            if w != 0.0 {
                f(flat, w);
            }
        }
    }
}

/// Result of an interpolated query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub value: f64,
    /// The query point was outside the grid box and was clamped onto it.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                got: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        let values = vec![value; spec.len()];
        Self { spec, values }
    }

    /// Samples `f` at every node (in parallel).
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = spec.ndim();
        let values = (0..spec.len())
            .into_par_iter()
            .map_init(
                || [0.0; MAX_DIM],
                |buf, flat| {
                    spec.node_point(flat, &mut buf[..d]);
                    f(&buf[..d])
                },
            )
            .collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, multi: &[usize]) -> f64 {
        self.values[self.spec.flat_index(multi)]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Left (`D-`) and right (`D+`) first-order differences along `axis`.
    ///
    /// Boundary nodes use a linearly extrapolated ghost value
    /// (`ghost = 2 * edge - next_inner`), which makes `D-` and `D+` agree there.
    pub fn one_sided_derivatives(&self, axis: usize) -> Result<(ScalarField, ScalarField)> {
        let d = self.spec.ndim();
        if axis >= d {
            return Err(Error::AxisOutOfRange { axis, ndim: d });
        }
        let n = self.spec.count(axis);
        let stride = self.spec.strides[axis];
        let h = self.spec.spacing[axis];
        let v = &self.values;
        let (minus, plus): (Vec<f64>, Vec<f64>) = (0..v.len())
            .into_par_iter()
            .map(|flat| {
                let i = (flat / stride) % n;
                let c = v[flat];
                let lo = if i > 0 { v[flat - stride] } else { 2.0 * c - v[flat + stride] };
                let hi = if i + 1 < n { v[flat + stride] } else { 2.0 * c - v[flat - stride] };
                ((c - lo) / h, (hi - c) / h)
            })
            .unzip();
        Ok((
            ScalarField::new(self.spec.clone(), minus)?,
            ScalarField::new(self.spec.clone(), plus)?,
        ))
    }

    /// Multilinear interpolation; points outside the box are clamped and flagged.
    pub fn interpolate(&self, point: &[f64]) -> Result<Sample> {
        let cell = self.spec.locate(point)?;
        let mut value = 0.0;
        cell.for_each_corner(&self.spec, |flat, w| value += w * self.values[flat]);
        Ok(Sample {
            value,
            clamped: cell.clamped,
        })
    }

    /// Central-difference gradient at a node (one-sided at the edges).
    pub fn node_gradient(&self, flat: usize, axis: usize) -> f64 {
        let n = self.spec.count(axis);
        let stride = self.spec.strides[axis];
        let h = self.spec.spacing[axis];
        let i = (flat / stride) % n;
        let v = &self.values;
        if i == 0 {
            (v[flat + stride] - v[flat]) / h
        } else if i + 1 == n {
            (v[flat] - v[flat - stride]) / h
        } else {
            (v[flat + stride] - v[flat - stride]) / (2.0 * h)
        }
    }

    /// Gradient at an arbitrary point: node gradients, then multilinear
    /// interpolation. Node gradients are evaluated on demand for the
    /// enclosing corners only, which gives the same result as a precomputed
    /// gradient field without storing `ndim` extra copies of a large grid.
    pub fn gradient_at(&self, point: &[f64]) -> Result<(Vec<f64>, bool)> {
        let cell = self.spec.locate(point)?;
        let d = self.spec.ndim();
        let mut grad = vec![0.0; d];
        cell.for_each_corner(&self.spec, |flat, w| {
            for (k, g) in grad.iter_mut().enumerate() {
                *g += w * self.node_gradient(flat, k);
            }
        });
        Ok((grad, cell.clamped))
    }

    /// Value and gradient in one cell lookup.
    pub fn value_and_gradient(&self, point: &[f64]) -> Result<(Sample, Vec<f64>)> {
        let cell = self.spec.locate(point)?;
        let d = self.spec.ndim();
        let mut value = 0.0;
        let mut grad = vec![0.0; d];
        cell.for_each_corner(&self.spec, |flat, w| {
            value += w * self.values[flat];
            for (k, g) in grad.iter_mut().enumerate() {
                *g += w * self.node_gradient(flat, k);
            }
        });
        Ok((
            Sample {
                value,
                clamped: cell.clamped,
            },
            grad,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, lo: f64, hi: f64) -> GridSpec {
        GridSpec::from_triples(&[(n, lo, hi)]).unwrap()
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(GridSpec::from_triples(&[(2, 0.0, 1.0)]).is_err());
        assert!(GridSpec::from_triples(&[(5, 1.0, 1.0)]).is_err());
        assert!(GridSpec::from_triples(&[(5, 0.0, f64::NAN)]).is_err());
        assert!(GridSpec::new(vec![]).is_err());
    }

    #[test]
    fn spacing_and_coordinates() {
        let g = GridSpec::from_triples(&[(240, -10.0, 10.0), (100, -4.0, 4.0)]).unwrap();
        assert_eq!(g.len(), 24_000);
        assert!((g.spacing()[0] - 20.0 / 239.0).abs() < 1e-15);
        assert_eq!(g.coord(1, 0), -4.0);
        assert_eq!(g.coord(1, 7), -4.0 + 7.0 * g.spacing()[1]);
    }

    #[test]
    fn flat_index_is_row_major_last_fastest() {
        let g = GridSpec::from_triples(&[(3, 0.0, 1.0), (4, 0.0, 1.0), (5, 0.0, 1.0)]).unwrap();
        let multi = [2, 1, 3];
        let flat = g.flat_index(&multi);
        assert_eq!(flat, (2 * 4 + 1) * 5 + 3);
        let mut values = vec![0.0; g.len()];
        values[flat] = 1.0;
        let f = ScalarField::new(g.clone(), values).unwrap();
        assert_eq!(f.get(&multi), 1.0);
        let mut back = [0; 3];
        g.unravel(flat, &mut back);
        assert_eq!(back, multi);
    }

    #[test]
    fn derivatives_of_linear_field() {
        let g = line(11, -3.0, 7.0);
        let f = ScalarField::from_fn(g, |p| 2.0 * p[0]);
        let (dm, dp) = f.one_sided_derivatives(0).unwrap();
        for (a, b) in dm.values().iter().zip(dp.values()) {
            assert!((a - 2.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_of_constant_and_kink() {
        let g = line(9, -4.0, 4.0);
        let c = ScalarField::constant(g.clone(), 3.5);
        let (dm, dp) = c.one_sided_derivatives(0).unwrap();
        assert!(dm.values().iter().chain(dp.values()).all(|&v| v == 0.0));

        let abs = ScalarField::from_fn(g, |p| p[0].abs());
        let (dm, dp) = abs.one_sided_derivatives(0).unwrap();
        assert_eq!(dm.values()[4], -1.0);
        assert_eq!(dp.values()[4], 1.0);
        assert!(matches!(
            abs.one_sided_derivatives(1),
            Err(Error::AxisOutOfRange { axis: 1, ndim: 1 })
        ));
    }

    #[test]
    fn interpolation_basics() {
        let g = line(3, 0.0, 2.0);
        let f = ScalarField::new(g, vec![1.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.interpolate(&[0.5]).unwrap().value, 2.0);
        assert_eq!(f.interpolate(&[1.0]).unwrap().value, 3.0);
        let out = f.interpolate(&[5.0]).unwrap();
        assert!(out.clamped);
        assert_eq!(out.value, 4.0);
        assert!(matches!(f.interpolate(&[f64::NAN]), Err(Error::NonFinitePoint(_))));
        assert!(f.interpolate(&[0.0, 1.0]).is_err());

        let sq = GridSpec::from_triples(&[(3, 0.0, 2.0), (3, 0.0, 2.0)]).unwrap();
        // unit cell [0,1]^2 with corner values (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3
        let mut v = vec![0.0; 9];
        v[sq.flat_index(&[0, 1])] = 1.0;
        v[sq.flat_index(&[1, 0])] = 2.0;
        v[sq.flat_index(&[1, 1])] = 3.0;
        let f = ScalarField::new(sq, v).unwrap();
        assert_eq!(f.interpolate(&[0.5, 0.5]).unwrap().value, 1.5);
    }

    #[test]
    fn gradients() {
        let g = GridSpec::from_triples(&[(7, -1.0, 2.0), (5, 0.0, 4.0)]).unwrap();
        let f = ScalarField::from_fn(g.clone(), |p| 3.0 * p[0] + 4.0 * p[1]);
        let (grad, clamped) = f.gradient_at(&[0.33, 1.7]).unwrap();
        assert!(!clamped);
        assert!((grad[0] - 3.0).abs() < 1e-12 && (grad[1] - 4.0).abs() < 1e-12);

        let c = ScalarField::constant(g, -2.0);
        assert_eq!(c.gradient_at(&[0.1, 0.2]).unwrap().0, vec![0.0, 0.0]);

        let h = 0.25;
        let q = ScalarField::from_fn(line(21, -2.5, 2.5), |p| p[0] * p[0]);
        let x0 = -2.5 + 13.0 * h;
        let (grad, _) = q.gradient_at(&[x0]).unwrap();
        assert!((grad[0] - 2.0 * x0).abs() < 1e-12);
    }
}
