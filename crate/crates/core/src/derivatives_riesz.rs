//! Ladder operators A_{±i} and the Hermite–Riesz transforms R_i = A_i H^{-1/2},
//! R_{ij} = A_i A_j H^{-1}, R_i^* = H^{-1/2} A_i, on coefficients and pointwise.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::frac_ops::{
    multiplier_apply, KernelIntegrator, KernelKind, MultiplierSpec, PointwiseOperator,
    QuadratureSpec,
};
use crate::functions::{central_difference, Regularity, TestFunction, FD_STEP};
use crate::hermite_basis::SpectralCoeffs;

/// Signed ladder index: `i > 0` is A_i = ∂_i + x_i, `i < 0` is A_{-|i|} = -∂_{|i|} + x_{|i|}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LadderIndex(pub i32);

impl LadderIndex {
    /// Zero-based coordinate axis, checked against the dimension.
    pub fn axis(self, n: usize) -> Result<usize> {
        let a = self.0.unsigned_abs() as usize;
        if self.0 == 0 || a > n {
            return Err(Error::precondition(format!(
                "ladder index {} outside 1 <= |i| <= {n}",
                self.0
            )));
        }
        Ok(a - 1)
    }

    pub fn is_annihilation(self) -> bool {
        self.0 > 0
    }

    /// ±1, the sign in front of ∂.
    pub fn sign(self) -> f64 {
        self.0.signum() as f64
    }

    pub fn adjoint(self) -> LadderIndex {
        LadderIndex(-self.0)
    }
}

/// A_i on coefficients: A_i h_ν = √(2ν_i) h_{ν-e_i}, A_{-i} h_ν = √(2ν_i+2) h_{ν+e_i}.
pub fn ladder_apply(i: LadderIndex, c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
    let a = i.axis(c.dimension)?;
    let raise = !i.is_annihilation();
    let mut out = SpectralCoeffs::zeros(
        c.dimension,
        if raise {
            c.max_degree + 1
        } else {
            c.max_degree
        },
    );
    for (nu, v) in c.iter() {
        let k = nu.components()[a];
        if raise {
            let target = nu.shifted(a, 1).expect("raising never underflows");
            out.coeffs.insert(target, v * (2.0 * k as f64 + 2.0).sqrt());
        } else if k > 0 {
            let target = nu.shifted(a, -1).expect("nu_i > 0");
            out.coeffs.insert(target, v * (2.0 * k as f64).sqrt());
        }
    }
    Ok(out)
}

/// Applies the word A_{w₁} ⋯ A_{w_m} (rightmost first).
pub fn ladder_word(word: &[i32], c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
    let mut out = c.clone();
    for &i in word.iter().rev() {
        out = ladder_apply(LadderIndex(i), &out)?;
    }
    Ok(out)
}

/// (±∂_i + x_i) u(x). Uses the analytic gradient when `u` has one, otherwise a
/// central difference with step `fallback_step` if that is given.
pub fn a_deriv_eval<U: TestFunction + ?Sized>(
    i: LadderIndex,
    u: &U,
    x: &[f64],
    fallback_step: Option<f64>,
) -> Result<f64> {
    check_dim(u.dim(), x.len())?;
    let a = i.axis(x.len())?;
    let d = match u.gradient(x) {
        Some(g) => g[a],
        None => match fallback_step {
            Some(h) => central_difference(u, x, a, h),
            None => {
                return Err(Error::Missing(format!(
                    "{} has no gradient and no finite-difference step was allowed",
                    u.label()
                )))
            }
        },
    };
    Ok(i.sign() * d + x[a] * u.value(x))
}

/// A_i u as an evaluable function (gradient by central differences of the analytic gradient).
pub struct LadderImage<'a, U: ?Sized> {
    pub i: LadderIndex,
    pub u: &'a U,
}

impl<U: TestFunction + ?Sized> TestFunction for LadderImage<'_, U> {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        a_deriv_eval(self.i, self.u, x, Some(FD_STEP)).expect("index checked on construction")
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            (0..x.len())
                .map(|a| central_difference(self, x, a, FD_STEP))
                .collect(),
        )
    }

    fn regularity(&self) -> Regularity {
        self.u.regularity().differentiated()
    }

    fn label(&self) -> String {
        format!("A[{}]({})", self.i.0, self.u.label())
    }
}

/// The Hermite–Riesz transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RieszKind {
    /// R_i = A_i H^{-1/2}.
    First(i32),
    /// R_{ij} = A_i A_j H^{-1}.
    Second(i32, i32),
    /// R_i^* = H^{-1/2} A_i.
    Adjoint(i32),
}

/// Spectral route: ladder steps and multipliers composed in the defining order.
pub fn riesz_spectral(kind: RieszKind, c: &SpectralCoeffs) -> Result<SpectralCoeffs> {
    match kind {
        RieszKind::First(i) => {
            let m = multiplier_apply(MultiplierSpec::power(-0.5), c)?;
            ladder_apply(LadderIndex(i), &m)
        }
        RieszKind::Second(i, j) => {
            let m = multiplier_apply(MultiplierSpec::power(-1.0), c)?;
            let aj = ladder_apply(LadderIndex(j), &m)?;
            ladder_apply(LadderIndex(i), &aj)
        }
        RieszKind::Adjoint(i) => {
            let a = ladder_apply(LadderIndex(i), c)?;
            multiplier_apply(MultiplierSpec::power(-0.5), &a)
        }
    }
}

/// Kernels of the Riesz-type pointwise formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RieszKernel {
    /// A_i F_{-1/2}(x, z), the kernel of R_i.
    First(i32),
    /// A_i A_j F_{-1}(x, z), the kernel of R_{ij}.
    Second(i32, i32),
    /// A_i F_{2,-1/2}(x, z), the kernel of A_i (H + 2)^{-1/2}.
    FirstShifted(i32),
}

impl RieszKernel {
    fn operator(self) -> PointwiseOperator {
        match self {
            RieszKernel::First(i) => PointwiseOperator::LadderIntegral {
                i,
                sigma: 0.5,
                k: 0,
            },
            RieszKernel::Second(i, j) => PointwiseOperator::SecondOrder { i, j },
            RieszKernel::FirstShifted(i) => PointwiseOperator::LadderIntegral {
                i,
                sigma: 0.5,
                k: 1,
            },
        }
    }
}

/// Differentiated kernel evaluator; reuse it across many (x, z).
pub struct RieszKernelEval {
    op: PointwiseOperator,
    integrator: KernelIntegrator,
    order: usize,
}

impl RieszKernelEval {
    pub fn new(kind: RieszKernel, n: usize, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let (kk, sigma, order) = match kind {
            RieszKernel::First(i) => {
                LadderIndex(i).axis(n)?;
                (KernelKind::FracIntegral, 0.5, 1)
            }
            RieszKernel::FirstShifted(i) => {
                LadderIndex(i).axis(n)?;
                (KernelKind::FracIntegralShiftUp(1), 0.5, 1)
            }
            RieszKernel::Second(i, j) => {
                LadderIndex(i).axis(n)?;
                LadderIndex(j).axis(n)?;
                (KernelKind::FracIntegral, 1.0, 2)
            }
        };
        kk.validate(sigma, n)?;
        Ok(RieszKernelEval {
            op: kind.operator(),
            integrator: KernelIntegrator::new(kk, sigma, n, quad)?,
            order,
        })
    }

    pub fn value(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        check_dim(x.len(), z.len())?;
        if x == z {
            return Err(Error::domain(
                "Riesz kernels are singular on the diagonal x = z",
            ));
        }
        let jet = self.integrator.jet(x, z, self.order)?;
        self.op.combine(&jet, x)
    }
}

/// Evaluates a Riesz-type kernel at (x, z) with default quadrature.
pub fn riesz_kernel_eval(kind: RieszKernel, x: &[f64], z: &[f64]) -> Result<f64> {
    RieszKernelEval::new(kind, x.len(), &QuadratureSpec::default())?.value(x, z)
}

/// Pointwise Riesz transform of `u` at `x`.
///
/// R_i and R_{ij} use their kernels directly. For R_i^* the creation case uses
/// R_{-i}^* = A_{-i}(H + 2)^{-1/2}; the annihilation case applies H^{-1/2} to A_i u.
pub fn riesz_pointwise<U: TestFunction + ?Sized>(
    kind: RieszKind,
    u: &U,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_dim(u.dim(), x.len())?;
    match kind {
        RieszKind::First(i) => RieszKernel::First(i).operator().eval(u, x, spec),
        RieszKind::Second(i, j) => RieszKernel::Second(i, j).operator().eval(u, x, spec),
        RieszKind::Adjoint(i) => {
            let li = LadderIndex(i);
            li.axis(x.len())?;
            if li.is_annihilation() {
                let v = LadderImage { i: li, u };
                PointwiseOperator::Integral { sigma: 0.5, k: 0 }.eval(&v, x, spec)
            } else {
                RieszKernel::FirstShifted(i).operator().eval(u, x, spec)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite_basis::MultiIndex;

    #[test]
    fn ladder_on_basis() {
        let c = SpectralCoeffs::basis(MultiIndex::new(vec![2]));
        let a = ladder_apply(LadderIndex(1), &c).unwrap();
        assert_eq!(a.get(&MultiIndex::new(vec![1])), 2.0);
        let z = ladder_apply(
            LadderIndex(1),
            &SpectralCoeffs::basis(MultiIndex::new(vec![0])),
        )
        .unwrap();
        assert!(z.coeffs.is_empty());
        let up = ladder_apply(LadderIndex(-1), &c).unwrap();
        assert_eq!(up.max_degree, 3);
        assert_eq!(up.get(&MultiIndex::new(vec![3])), 6f64.sqrt());
        assert!(ladder_apply(LadderIndex(2), &c).is_err());
        assert!(ladder_apply(LadderIndex(0), &c).is_err());
    }

    #[test]
    fn word_applies_rightmost_first() {
        let c = SpectralCoeffs::basis(MultiIndex::new(vec![0, 0]));
        // A_1 A_{-2} h_0 = √2 A_1 h_{(0,1)} = 0, A_{-2} A_1 h_0 = 0, A_2 A_{-2} h_0 = 2 h_0
        assert!(ladder_word(&[1, -2], &c).unwrap().coeffs.is_empty());
        assert!((ladder_word(&[2, -2], &c).unwrap().get(&MultiIndex::zero(2)) - 2.0).abs() < 1e-15);
    }
}
