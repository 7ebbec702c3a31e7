//! Hermite functions, Gauss–Hermite rules and analysis/synthesis between
//! point samples and truncated Hermite expansions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// π^{-1/4}
pub const PI_POW_M_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Largest node count accepted by [`quadrature_rule`].
pub const MAX_RULE_NODES: usize = 1000;

/// Multi-index ν ∈ ℕ₀ⁿ. Ordered by total degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    components: Vec<u32>,
    order: u32,
}

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        let order = components.iter().sum();
        MultiIndex { components, order }
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex::new(vec![0; n])
    }

    /// Unit index e_i (0-based axis).
    pub fn unit(n: usize, axis: usize) -> Self {
        let mut c = vec![0; n];
        c[axis] = 1;
        MultiIndex::new(c)
    }

    pub fn components(&self) -> &[u32] {
        &self.components
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Eigenvalue 2|ν| + n of the oscillator on h_ν.
    pub fn eigenvalue(&self) -> f64 {
        (2 * self.order as usize + self.dim()) as f64
    }

    /// ν with component `axis` shifted by `delta`, or `None` if it would go negative.
    pub fn shifted(&self, axis: usize, delta: i32) -> Option<Self> {
        let v = self.components[axis] as i64 + delta as i64;
        if v < 0 {
            return None;
        }
        let mut c = self.components.clone();
        c[axis] = v as u32;
        Some(MultiIndex::new(c))
    }

    /// All multi-indices of dimension `n` with order ≤ `max_order`, in index order.
    pub fn all_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut cur = vec![0u32; n];
            fill_with_order(&mut cur, 0, order, &mut out);
        }
        out.sort();
        out
    }
}

fn fill_with_order(cur: &mut Vec<u32>, axis: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    let n = cur.len();
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex::new(Vec::new()));
        }
        return;
    }
    if axis == n - 1 {
        cur[axis] = remaining;
        out.push(MultiIndex::new(cur.clone()));
        return;
    }
    for v in 0..=remaining {
        cur[axis] = v;
        fill_with_order(cur, axis + 1, remaining - v, out);
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.order)
            .then_with(|| self.components.cmp(&other.components))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Truncated Hermite expansion. Absent keys are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoeffs {
    pub dimension: usize,
    pub max_degree: u32,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl SpectralCoeffs {
    pub fn zeros(dimension: usize, max_degree: u32) -> Self {
        SpectralCoeffs {
            dimension,
            max_degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// Single basis element h_ν with coefficient 1.
    pub fn basis(nu: MultiIndex) -> Self {
        let mut c = SpectralCoeffs::zeros(nu.dim(), nu.order());
        c.coeffs.insert(nu, 1.0);
        c
    }

    pub fn get(&self, nu: &MultiIndex) -> f64 {
        self.coeffs.get(nu).copied().unwrap_or(0.0)
    }

    /// Sets a coefficient, raising `max_degree` if needed.
    pub fn set(&mut self, nu: MultiIndex, value: f64) -> Result<()> {
        check_dim(self.dimension, nu.dim())?;
        self.max_degree = self.max_degree.max(nu.order());
        self.coeffs.insert(nu, value);
        Ok(())
    }

    pub fn add(&mut self, nu: MultiIndex, value: f64) {
        self.max_degree = self.max_degree.max(nu.order());
        *self.coeffs.entry(nu).or_insert(0.0) += value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.coeffs.iter()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= factor;
        }
        out
    }

    /// Coefficient-wise linear combination `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &SpectralCoeffs) -> Result<Self> {
        check_dim(self.dimension, other.dimension)?;
        let mut out = self.clone();
        out.max_degree = out.max_degree.max(other.max_degree);
        for (k, v) in &other.coeffs {
            *out.coeffs.entry(k.clone()).or_insert(0.0) += factor * v;
        }
        Ok(out)
    }

    /// ℓ² inner product of coefficient vectors.
    pub fn dot(&self, other: &SpectralCoeffs) -> Result<f64> {
        check_dim(self.dimension, other.dimension)?;
        Ok(self.coeffs.iter().map(|(k, v)| v * other.get(k)).sum())
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_abs_diff(&self, other: &SpectralCoeffs) -> f64 {
        let mut m: f64 = 0.0;
        for (k, v) in &self.coeffs {
            m = m.max((v - other.get(k)).abs());
        }
        for (k, v) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                m = m.max(v.abs());
            }
        }
        m
    }
}

/// Evaluates the orthonormal Hermite function h_k at `x`.
pub fn hermite_eval_1d(k: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; k + 1];
    hermite_all(k, x, &mut buf);
    buf[k]
}

/// Fills `out[0..=kmax]` with h_0(x), …, h_kmax(x).
///
/// The recurrence runs on a rescaled mantissa so that neither the Gaussian
/// factor nor the polynomial growth can underflow or overflow prematurely.
pub fn hermite_all(kmax: usize, x: f64, out: &mut [f64]) {
    assert!(out.len() > kmax);
    const BIG: f64 = 1e150;
    const LN_BIG: f64 = 345.387_763_949_107_0;
    let mut log_scale = 0.0;
    out[0] = PI_POW_M_QUARTER;
    if kmax >= 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for k in 1..kmax {
        let kf = k as f64;
        out[k + 1] = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        if out[k + 1].abs() > BIG {
            for v in out[..=k + 1].iter_mut() {
                *v /= BIG;
            }
            log_scale += LN_BIG;
        }
    }
    let factor = (log_scale - 0.5 * x * x).exp();
    for v in out[..=kmax].iter_mut() {
        *v *= factor;
    }
}

/// Fills `vals[0..=kmax]` with h_k(x) and `ders[0..=kmax]` with h_k'(x).
pub fn hermite_all_with_derivative(kmax: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    let mut tmp = vec![0.0; kmax + 2];
    hermite_all(kmax + 1, x, &mut tmp);
    for k in 0..=kmax {
        let down = if k > 0 {
            (k as f64 / 2.0).sqrt() * tmp[k - 1]
        } else {
            0.0
        };
        ders[k] = down - ((k as f64 + 1.0) / 2.0).sqrt() * tmp[k + 1];
        vals[k] = tmp[k];
    }
}

/// h_ν(x) = Π h_{ν_i}(x_i).
pub fn eval_multi(nu: &MultiIndex, x: &[f64]) -> Result<f64> {
    check_dim(nu.dim(), x.len())?;
    Ok(nu
        .components()
        .iter()
        .zip(x)
        .map(|(&k, &xi)| hermite_eval_1d(k as usize, xi))
        .product())
}

/// Gauss–Hermite rule with the weight e^{-x²} folded into the weights, so that
/// Σ W_i f(x_i) ≈ ∫ f for f = (polynomial)·e^{-x²}.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn rule_cache() -> &'static Mutex<HashMap<usize, QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, QuadratureRule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `m`-node Gauss–Hermite rule (Golub–Welsch nodes, Newton polish,
/// Christoffel weights in the function normalization). Results are cached.
pub fn quadrature_rule(m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::domain("quadrature rule needs at least one node"));
    }
    if m > MAX_RULE_NODES {
        return Err(Error::Capacity(format!(
            "{m} nodes requested, cap is {MAX_RULE_NODES}"
        )));
    }
    if let Some(r) = rule_cache().lock().expect("rule cache poisoned").get(&m) {
        return Ok(r.clone());
    }
    let rule = build_rule(m);
    rule_cache()
        .lock()
        .expect("rule cache poisoned")
        .insert(m, rule.clone());
    Ok(rule)
}

fn build_rule(m: usize) -> QuadratureRule {
    let jacobi = nalgebra::DMatrix::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut buf = vec![0.0; m + 1];
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            hermite_all(m, *x, &mut buf);
            let d = (2.0 * m as f64).sqrt() * buf[m - 1] - *x * buf[m];
            if d == 0.0 {
                break;
            }
            let step = buf[m] / d;
            *x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
    }
    // Symmetrize: the rule is exactly even.
    for i in 0..m / 2 {
        let a = 0.5 * (nodes[m - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[m - 1 - i] = a;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            hermite_all(m - 1, x, &mut buf);
            1.0 / buf[..m].iter().map(|h| h * h).sum::<f64>()
        })
        .collect();
    QuadratureRule { nodes, weights }
}

/// Contracts axis `axis` of a row-major tensor of shape `shape` against the
/// matrix `mat` (rows × shape[axis], row-major). Returns the new tensor.
pub(crate) fn contract_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &[f64],
    rows: usize,
) -> (Vec<f64>, Vec<usize>) {
    let cols = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            let mrow = &mat[r * cols..(r + 1) * cols];
            let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
            for (c, &m) in mrow.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let src = &data[(o * cols + c) * inner..(o * cols + c + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

/// Iterates over all points of a tensor grid built from `axes`, in row-major order.
pub(crate) fn for_each_tensor_point(axes: &[&[f64]], mut f: impl FnMut(&[f64])) {
    let n = axes.len();
    let mut idx = vec![0usize; n];
    let mut pt: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    loop {
        f(&pt);
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                pt[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            pt[d] = axes[d][0];
        }
    }
}

/// Computes ⟨f, h_ν⟩ for all |ν| ≤ N by tensor Gauss–Hermite quadrature.
pub fn expand<F>(f: &F, n: usize, max_degree: u32, rule: &QuadratureRule) -> SpectralCoeffs
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let m = rule.len();
    let rows = max_degree as usize + 1;
    let mut phi = vec![0.0; rows * m];
    let mut buf = vec![0.0; rows];
    for (i, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        hermite_all(rows - 1, x, &mut buf);
        for k in 0..rows {
            phi[k * m + i] = w * buf[k];
        }
    }
    let axes: Vec<&[f64]> = (0..n).map(|_| rule.nodes.as_slice()).collect();
    let mut data = Vec::with_capacity(m.pow(n as u32));
    for_each_tensor_point(&axes, |p| data.push(f(p)));
    let mut shape = vec![m; n];
    for axis in 0..n {
        let (d, s) = contract_axis(&data, &shape, axis, &phi, rows);
        data = d;
        shape = s;
    }
    let mut out = SpectralCoeffs::zeros(n, max_degree);
    for nu in MultiIndex::all_up_to(n, max_degree) {
        let mut flat = 0;
        for &c in nu.components() {
            flat = flat * rows + c as usize;
        }
        out.coeffs.insert(nu, data[flat]);
    }
    out
}

fn per_axis_values(c: &SpectralCoeffs, x: &[f64]) -> Vec<Vec<f64>> {
    let kmax = c.max_degree as usize;
    x.iter()
        .map(|&xi| {
            let mut b = vec![0.0; kmax + 1];
            hermite_all(kmax, xi, &mut b);
            b
        })
        .collect()
}

/// Evaluates Σ c_ν h_ν(x).
pub fn synthesize(c: &SpectralCoeffs, x: &[f64]) -> Result<f64> {
    check_dim(c.dimension, x.len())?;
    let tables = per_axis_values(c, x);
    Ok(c.coeffs
        .iter()
        .map(|(nu, v)| {
            v * nu
                .components()
                .iter()
                .enumerate()
                .map(|(a, &k)| tables[a][k as usize])
                .product::<f64>()
        })
        .sum())
}

/// Value, gradient and Laplacian of Σ c_ν h_ν at `x`.
pub fn synthesize_jet(c: &SpectralCoeffs, x: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    check_dim(c.dimension, x.len())?;
    let n = x.len();
    let kmax = c.max_degree as usize;
    let mut vals = vec![vec![0.0; kmax + 1]; n];
    let mut ders = vec![vec![0.0; kmax + 1]; n];
    for a in 0..n {
        hermite_all_with_derivative(kmax, x[a], &mut vals[a], &mut ders[a]);
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; n];
    let mut lap = 0.0;
    for (nu, v) in &c.coeffs {
        let comps = nu.components();
        let prod: f64 = (0..n).map(|a| vals[a][comps[a] as usize]).product();
        value += v * prod;
        for a in 0..n {
            let mut g = *v;
            for b in 0..n {
                let k = comps[b] as usize;
                g *= if a == b { ders[b][k] } else { vals[b][k] };
            }
            grad[a] += g;
            // h_k'' = (x² - 2k - 1) h_k
            lap += v * prod * (x[a] * x[a] - 2.0 * comps[a] as f64 - 1.0);
        }
    }
    Ok((value, grad, lap))
}

/// Synthesizes on the tensor grid `axes[0] × … × axes[n-1]` (row-major output).
pub fn synthesize_tensor(c: &SpectralCoeffs, axes: &[&[f64]]) -> Result<Vec<f64>> {
    check_dim(c.dimension, axes.len())?;
    let n = axes.len();
    let rows = c.max_degree as usize + 1;
    let mut shape = vec![rows; n];
    let mut data = vec![0.0; rows.pow(n as u32)];
    for (nu, v) in &c.coeffs {
        let mut flat = 0;
        for &k in nu.components() {
            flat = flat * rows + k as usize;
        }
        data[flat] = *v;
    }
    let mut buf = vec![0.0; rows];
    for (axis, pts) in axes.iter().enumerate() {
        let mut mat = vec![0.0; pts.len() * rows];
        for (i, &x) in pts.iter().enumerate() {
            hermite_all(rows - 1, x, &mut buf);
            mat[i * rows..(i + 1) * rows].copy_from_slice(&buf);
        }
        let (d, s) = contract_axis(&data, &shape, axis, &mat, pts.len());
        data = d;
        shape = s;
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_order() {
        let a = MultiIndex::new(vec![2, 0]);
        let b = MultiIndex::new(vec![0, 3]);
        let c = MultiIndex::new(vec![1, 1]);
        assert!(c < a && a < b);
        assert_eq!(MultiIndex::all_up_to(2, 2).len(), 6);
        assert_eq!(MultiIndex::all_up_to(3, 4).len(), 35);
        assert_eq!(a.to_string(), "(2,0)");
    }

    #[test]
    fn scaled_recurrence_far_out() {
        // Beyond |x| ≈ 38 the unscaled Gaussian factor underflows; h_k must stay finite.
        let v = hermite_eval_1d(500, 30.0);
        assert!(v.is_finite() && v != 0.0);
        assert!(hermite_eval_1d(1500, 45.0).is_finite());
    }

    #[test]
    fn rule_is_symmetric_and_positive() {
        let r = quadrature_rule(41).unwrap();
        assert_eq!(r.nodes[20], 0.0);
        assert!(r.weights.iter().all(|&w| w > 0.0));
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(quadrature_rule(MAX_RULE_NODES + 1).is_err());
    }

    #[test]
    fn jet_matches_differences() {
        let mut c = SpectralCoeffs::zeros(2, 4);
        c.set(MultiIndex::new(vec![1, 2]), 0.7).unwrap();
        c.set(MultiIndex::new(vec![0, 0]), -0.2).unwrap();
        c.set(MultiIndex::new(vec![3, 1]), 0.4).unwrap();
        let x = [0.3, -0.8];
        let (v, g, l) = synthesize_jet(&c, &x).unwrap();
        let h = 1e-4;
        let f = |p: [f64; 2]| synthesize(&c, &p).unwrap();
        assert!((v - f(x)).abs() < 1e-14);
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            assert!((g[a] - (f(xp) - f(xm)) / (2.0 * h)).abs() < 1e-7);
        }
        let mut fd = -4.0 * f(x);
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            fd += f(xp) + f(xm);
        }
        assert!((l - fd / (h * h)).abs() < 1e-5);
    }
}
