//! Samples of a function on a uniform tensor grid in [-L, L]ⁿ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hermite_basis::for_each_tensor_point;

/// A signed-index word (i₁, …, i_m) naming the derivative A_{i₁}⋯A_{i_m}u.
/// Indices are 1-based; negative entries denote creation operators.
pub type Word = Vec<i32>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub dimension: usize,
    pub half_width: f64,
    pub step: f64,
    pub values: Vec<f64>,
    /// Samples of ladder derivatives on the same grid, keyed by word.
    pub derivatives: BTreeMap<Word, Vec<f64>>,
}

impl GridFunction {
    /// Number of grid points per axis for half-width `l` and step `h`.
    pub fn points_per_axis(l: f64, h: f64) -> Result<usize> {
        if !(l > 0.0 && h > 0.0) {
            return Err(Error::domain(format!(
                "grid needs L > 0 and h > 0 (L={l}, h={h})"
            )));
        }
        let cells = 2.0 * l / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::domain(format!("2L/h = {cells} is not an integer")));
        }
        Ok(rounded as usize + 1)
    }

    pub fn new(dimension: usize, half_width: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        let m = Self::points_per_axis(half_width, step)?;
        let expected = m.pow(dimension as u32);
        if values.len() != expected {
            return Err(Error::domain(format!(
                "grid expects {expected} values, got {}",
                values.len()
            )));
        }
        Ok(GridFunction {
            dimension,
            half_width,
            step,
            values,
            derivatives: BTreeMap::new(),
        })
    }

    /// Samples `f` on the grid.
    pub fn from_fn<F: Fn(&[f64]) -> f64 + ?Sized>(
        dimension: usize,
        half_width: f64,
        step: f64,
        f: &F,
    ) -> Result<Self> {
        let m = Self::points_per_axis(half_width, step)?;
        let axis = Self::axis_from(half_width, m);
        let axes: Vec<&[f64]> = (0..dimension).map(|_| axis.as_slice()).collect();
        let mut values = Vec::with_capacity(m.pow(dimension as u32));
        for_each_tensor_point(&axes, |p| values.push(f(p)));
        Self::new(dimension, half_width, step, values)
    }

    fn axis_from(l: f64, m: usize) -> Vec<f64> {
        let h = 2.0 * l / (m - 1) as f64;
        (0..m).map(|i| -l + h * i as f64).collect()
    }

    pub fn per_axis(&self) -> usize {
        Self::points_per_axis(self.half_width, self.step).expect("validated at construction")
    }

    pub fn axis(&self) -> Vec<f64> {
        Self::axis_from(self.half_width, self.per_axis())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multi-index of the flat position `flat`.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let m = self.per_axis();
        let mut idx = vec![0; self.dimension];
        for d in (0..self.dimension).rev() {
            idx[d] = flat % m;
            flat /= m;
        }
        idx
    }

    /// Coordinates of the flat position `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .map(|i| -self.half_width + self.step * i as f64)
            .collect()
    }

    /// Attaches samples of A_{w₁}⋯A_{w_m}u.
    pub fn attach_derivative(&mut self, word: Word, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::domain(format!(
                "derivative grid for {word:?} has {} values, expected {}",
                values.len(),
                self.values.len()
            )));
        }
        for &i in &word {
            if i == 0 || i.unsigned_abs() as usize > self.dimension {
                return Err(Error::domain(format!(
                    "invalid ladder index {i} in {word:?}"
                )));
            }
        }
        self.derivatives.insert(word, values);
        Ok(())
    }

    pub fn derivative(&self, word: &[i32]) -> Option<&[f64]> {
        self.derivatives.get(word).map(|v| v.as_slice())
    }

    /// Pointwise linear combination `self + factor·other`, derivative grids included
    /// where both carry them.
    pub fn axpy(&self, factor: f64, other: &GridFunction) -> Result<Self> {
        check_dim(self.dimension, other.dimension)?;
        if self.values.len() != other.values.len() || self.step != other.step {
            return Err(Error::domain("grid geometries differ"));
        }
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + factor * y).collect();
        let mut out = GridFunction {
            values: comb(&self.values, &other.values),
            derivatives: BTreeMap::new(),
            ..self.clone()
        };
        for (w, a) in &self.derivatives {
            if let Some(b) = other.derivatives.get(w) {
                out.derivatives.insert(w.clone(), comb(a, b));
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        for d in out.derivatives.values_mut() {
            d.iter_mut().for_each(|v| *v *= factor);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = GridFunction::from_fn(2, 1.0, 0.5, &|p: &[f64]| p[0] + 10.0 * p[1]).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(7), vec![-0.5, 0.0]);
        assert_eq!(g.values[7], -0.5);
        assert!(GridFunction::new(1, 1.0, 0.3, vec![0.0; 7]).is_err());
        assert!(GridFunction::new(1, 1.0, 0.5, vec![0.0; 4]).is_err());
    }

    #[test]
    fn attach_checks_shape_and_indices() {
        let mut g = GridFunction::from_fn(1, 1.0, 0.5, &|_: &[f64]| 1.0).unwrap();
        assert!(g.attach_derivative(vec![1], vec![0.0; 5]).is_ok());
        assert!(g.attach_derivative(vec![2], vec![0.0; 5]).is_err());
        assert!(g.attach_derivative(vec![-1], vec![0.0; 3]).is_err());
    }
}
