//! Heat semigroup e^{-tH}: closed-form kernel in the t and s = tanh t
//! parametrizations, the Mehler kernel and its partial sums, e^{-tH}1, and
//! application to expansions and grid samples.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::grid::GridFunction;
use crate::hermite_basis::{hermite_all, SpectralCoeffs};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// A point of the reparametrization s = tanh t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedaParam {
    pub s: f64,
    pub t: f64,
}

impl MedaParam {
    pub fn from_s(s: f64) -> Result<Self> {
        Ok(MedaParam {
            s,
            t: meda_t_of_s(s)?,
        })
    }

    pub fn from_t(t: f64) -> Result<Self> {
        Ok(MedaParam {
            s: meda_s_of_t(t)?,
            t,
        })
    }
}

fn check_open_unit(s: f64, what: &str) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} = {s} outside (0, 1)")))
    }
}

/// t = ½ log((1+s)/(1-s)).
pub fn meda_t_of_s(s: f64) -> Result<f64> {
    check_open_unit(s, "s")?;
    Ok(s.atanh())
}

/// s = tanh t.
pub fn meda_s_of_t(t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!(
            "t = {t} must be positive and finite"
        )));
    }
    Ok(t.tanh())
}

/// Density of dμ_ρ(s) = ds / [(1-s²) t(s)^{1+ρ}], the image of dt/t^{1+ρ}.
pub fn mu_density(s: f64, rho: f64) -> Result<f64> {
    let t = meda_t_of_s(s)?;
    Ok(1.0 / ((1.0 - s * s) * t.powf(1.0 + rho)))
}

/// The measure dμ_ρ as a value type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuDensity {
    pub rho: f64,
}

impl MuDensity {
    pub fn density(&self, s: f64) -> Result<f64> {
        mu_density(s, self.rho)
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!("t = {t} must be positive")))
    }
}

fn sq_dist_and_dot(x: &[f64], z: &[f64]) -> (f64, f64) {
    let mut d2 = 0.0;
    let mut dot = 0.0;
    for (a, b) in x.iter().zip(z) {
        d2 += (a - b) * (a - b);
        dot += a * b;
    }
    (d2, dot)
}

/// G_t(x,z) = (2π sinh 2t)^{-n/2} exp(-[½|x-z|² coth 2t + x·z tanh t]).
pub fn heat_kernel(t: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    check_t(t)?;
    check_dim(x.len(), z.len())?;
    let n = x.len() as f64;
    let (d2, dot) = sq_dist_and_dot(x, z);
    if t > 300.0 {
        // log sinh 2t = 2t - log 2 + log(1 - e^{-4t}); coth 2t and tanh t are 1 to double precision.
        let log_sinh = 2.0 * t - std::f64::consts::LN_2 + (-(-4.0 * t).exp()).ln_1p();
        let log_val = -0.5 * n * (TWO_PI.ln() + log_sinh) - (0.5 * d2 + dot);
        return Ok(log_val.exp());
    }
    let two_t = 2.0 * t;
    let sh = two_t.sinh();
    let coth = two_t.cosh() / sh;
    Ok((TWO_PI * sh).powf(-0.5 * n) * (-(0.5 * d2 * coth + dot * t.tanh())).exp())
}

/// G_{t(s)}(x,z) = ((1-s²)/(4πs))^{n/2} exp(-¼[s|x+z|² + |x-z|²/s]).
pub fn heat_kernel_s(s: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    check_open_unit(s, "s")?;
    check_dim(x.len(), z.len())?;
    let n = x.len() as f64;
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (a, b) in x.iter().zip(z) {
        plus += (a + b) * (a + b);
        minus += (a - b) * (a - b);
    }
    let pref = ((1.0 - s) * (1.0 + s) / (FOUR_PI * s)).powf(0.5 * n);
    Ok(pref * (-0.25 * (s * plus + minus / s)).exp())
}

/// Mehler kernel M_r(x,z) = Σ_j r^j Σ_{|ν|=j} h_ν(x)h_ν(z).
pub fn mehler(r: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    check_open_unit(r, "r")?;
    check_dim(x.len(), z.len())?;
    let n = x.len() as f64;
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (a, b) in x.iter().zip(z) {
        plus += (a + b) * (a + b);
        minus += (a - b) * (a - b);
    }
    let pref = (std::f64::consts::PI * (1.0 - r * r)).powf(-0.5 * n);
    let e = -0.25 * ((1.0 - r) / (1.0 + r) * plus + (1.0 + r) / (1.0 - r) * minus);
    Ok(pref * e.exp())
}

/// Shell sums P_j(x,z) = Σ_{|ν|=j} h_ν(x)h_ν(z) for j = 0..=jmax.
pub fn mehler_shell_sums(x: &[f64], z: &[f64], jmax: usize) -> Result<Vec<f64>> {
    check_dim(x.len(), z.len())?;
    let mut hx = vec![0.0; jmax + 1];
    let mut hz = vec![0.0; jmax + 1];
    let mut acc = vec![0.0; jmax + 1];
    acc[0] = 1.0;
    for (a, b) in x.iter().zip(z) {
        hermite_all(jmax, *a, &mut hx);
        hermite_all(jmax, *b, &mut hz);
        let axis: Vec<f64> = hx.iter().zip(&hz).map(|(p, q)| p * q).collect();
        acc = truncated_convolution(&acc, &axis, jmax);
    }
    Ok(acc)
}

/// Shell sums Q_j(x) = Σ_{|ν|=j} h_ν(x)⟨h_ν, 1⟩ for j = 0..=jmax.
pub fn one_shell_sums(x: &[f64], jmax: usize) -> Vec<f64> {
    let ints = hermite_integrals(jmax);
    let mut hx = vec![0.0; jmax + 1];
    let mut acc = vec![0.0; jmax + 1];
    acc[0] = 1.0;
    for a in x {
        hermite_all(jmax, *a, &mut hx);
        let axis: Vec<f64> = hx.iter().zip(&ints).map(|(p, q)| p * q).collect();
        acc = truncated_convolution(&acc, &axis, jmax);
    }
    acc
}

fn truncated_convolution(a: &[f64], b: &[f64], jmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; jmax + 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(jmax + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// ∫_ℝ h_m for m = 0..=mmax (zero for odd m).
pub fn hermite_integrals(mmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; mmax + 1];
    // ∫h_0 = √2 π^{1/4}; I_{2p+2} = I_{2p} √((2p+1)/(2p+2)).
    let mut cur = std::f64::consts::SQRT_2 * std::f64::consts::PI.powf(0.25);
    let mut m = 0;
    while m <= mmax {
        out[m] = cur;
        cur *= ((m as f64 + 1.0) / (m as f64 + 2.0)).sqrt();
        m += 2;
    }
    out
}

/// φ_{2k}(x,z,s) = Σ_{j<k} r^{j+n/2} P_j(x,z) with r = (1-s)/(1+s) on s > 1/2, and 0 otherwise.
pub fn mehler_partial(s: f64, x: &[f64], z: &[f64], k: usize) -> Result<f64> {
    check_open_unit(s, "s")?;
    check_dim(x.len(), z.len())?;
    if k == 0 {
        return Err(Error::domain("partial Mehler sum needs k >= 1"));
    }
    if s <= 0.5 {
        return Ok(0.0);
    }
    let r = (1.0 - s) / (1.0 + s);
    let p = mehler_shell_sums(x, z, k - 1)?;
    let n = x.len() as f64;
    Ok(p.iter()
        .enumerate()
        .map(|(j, pj)| r.powf(j as f64 + 0.5 * n) * pj)
        .sum())
}

/// e^{-tH}1(x) = (cosh 2t)^{-n/2} exp(-tanh(2t)|x|²/2).
pub fn heat_of_one(t: f64, x: &[f64]) -> Result<f64> {
    check_t(t)?;
    let n = x.len() as f64;
    let x2: f64 = x.iter().map(|v| v * v).sum();
    let two_t = 2.0 * t;
    let log_cosh = if two_t > 20.0 {
        two_t - std::f64::consts::LN_2 + (-2.0 * two_t).exp().ln_1p()
    } else {
        two_t.cosh().ln()
    };
    Ok((-0.5 * n * log_cosh - 0.5 * two_t.tanh() * x2).exp())
}

/// e^{-t(s)H}1(x) = ((1-s²)/(1+s²))^{n/2} exp(-s|x|²/(1+s²)).
pub fn heat_of_one_s(s: f64, x: &[f64]) -> Result<f64> {
    check_open_unit(s, "s")?;
    let n = x.len() as f64;
    let x2: f64 = x.iter().map(|v| v * v).sum();
    let q = s / (1.0 + s * s);
    Ok(((1.0 - s * s) / (1.0 + s * s)).powf(0.5 * n) * (-q * x2).exp())
}

/// Objects on which the heat semigroup acts.
pub trait HeatFlow: Sized {
    fn heat_apply(&self, t: f64) -> Result<Self>;
}

impl HeatFlow for SpectralCoeffs {
    fn heat_apply(&self, t: f64) -> Result<Self> {
        check_t(t)?;
        let mut out = self.clone();
        for (nu, v) in out.coeffs.iter_mut() {
            *v *= (-t * nu.eigenvalue()).exp();
        }
        Ok(out)
    }
}

impl HeatFlow for GridFunction {
    /// Integrates the separable kernel against the samples with the
    /// trapezoid rule, one axis at a time. Samples must be negligible at the
    /// box boundary.
    fn heat_apply(&self, t: f64) -> Result<Self> {
        check_t(t)?;
        let axis = self.axis();
        let m = axis.len();
        let mut mat = vec![0.0; m * m];
        for (i, &x) in axis.iter().enumerate() {
            for (j, &z) in axis.iter().enumerate() {
                let w = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                mat[i * m + j] = w * self.step * heat_kernel(t, &[x], &[z])?;
            }
        }
        let mut data = self.values.clone();
        let mut shape = vec![m; self.dimension];
        for a in 0..self.dimension {
            let (d, s) = crate::hermite_basis::contract_axis(&data, &shape, a, &mat, m);
            data = d;
            shape = s;
        }
        GridFunction::new(self.dimension, self.half_width, self.step, data)
    }
}

/// Applies e^{-tH} to a spectral expansion or a grid sample.
pub fn heat_apply<T: HeatFlow>(t: f64, u: &T) -> Result<T> {
    u.heat_apply(t)
}
