//! Sampled estimates of the Hermite–Hölder seminorms [u]_{C^{0,α}}, [u]_{M^α}
//! and of the C^{k,α}_H norm from grid data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivatives_riesz::{LadderImage, LadderIndex};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::grid::{GridFunction, Word};

pub const DEFAULT_SEED: u64 = 0x5eed_0f_c0ffee;

/// How difference quotients are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairSampling {
    /// All pairs closer than this are visited.
    pub near_radius: f64,
    /// Cap on near-pair evaluations; the near radius shrinks to respect it.
    pub near_budget: usize,
    /// Random pairs at any distance, drawn after the near pairs.
    pub far_pairs: usize,
    pub seed: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        PairSampling {
            near_radius: 1.0,
            near_budget: 60_000_000,
            far_pairs: 100_000,
            seed: DEFAULT_SEED,
        }
    }
}

/// Largest difference quotient found, with the pair attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMax {
    pub value: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Near radius actually used (smaller than requested when the budget bites).
    pub near_radius: f64,
}

/// Largest weighted value found, with the point attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMax {
    pub value: f64,
    pub x: Vec<f64>,
    /// The maximum sits on the outermost grid layer: the box does not capture the decay.
    pub on_boundary: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::precondition(format!(
            "Hölder exponent must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// (value, i, j) with ties broken towards the lexicographically smaller pair.
type Cand = (f64, usize, usize);

fn better(a: Cand, b: Cand) -> Cand {
    if a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2)) {
        a
    } else {
        b
    }
}

/// Offsets o ≠ 0, lexicographically positive, with |o|·h ≤ radius.
fn half_ball_offsets(n: usize, radius_cells: f64) -> Vec<Vec<i64>> {
    let r = radius_cells.floor() as i64;
    let mut out = Vec::new();
    let mut o = vec![-r; n];
    loop {
        let norm2: i64 = o.iter().map(|v| v * v).sum();
        let positive = o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0);
        if positive && (norm2 as f64) <= radius_cells * radius_cells {
            out.push(o.clone());
        }
        let mut d = n;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            if o[d] < r {
                o[d] += 1;
                break;
            }
            o[d] = -r;
        }
    }
}

/// Number of lattice points in a half ball, estimated from its volume.
fn half_ball_count(n: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    let vol = match n {
        1 => 2.0 * r,
        2 => PI * r * r,
        _ => 4.0 / 3.0 * PI * r * r * r,
    };
    0.5 * vol
}

fn quotient(values: &[f64], g: &GridFunction, i: usize, j: usize, alpha: f64) -> f64 {
    let (a, b) = (g.unflatten(i), g.unflatten(j));
    let d2: f64 = a
        .iter()
        .zip(&b)
        .map(|(p, q)| {
            let d = (*p as f64 - *q as f64) * g.step;
            d * d
        })
        .sum();
    (values[i] - values[j]).abs() / d2.powf(0.5 * alpha)
}

/// [v]_{C^{0,α}} over the grid of `g` for an arbitrary sample vector `values`.
pub fn holder_quotient_max(
    g: &GridFunction,
    values: &[f64],
    alpha: f64,
    sampling: &PairSampling,
) -> Result<PairMax> {
    check_alpha(alpha)?;
    if values.len() < 2 {
        return Err(Error::domain(
            "Hölder seminorm needs at least two grid points",
        ));
    }
    let n = g.dimension;
    let m = g.per_axis() as i64;
    let mut radius_cells = sampling.near_radius / g.step;
    while radius_cells >= 1.0
        && half_ball_count(n, radius_cells) * values.len() as f64 > sampling.near_budget as f64
    {
        radius_cells *= 0.9;
    }
    let offsets = half_ball_offsets(n, radius_cells);
    let near = (0..values.len())
        .into_par_iter()
        .map(|i| {
            let idx = g.unflatten(i);
            let mut best: Cand = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
            'off: for o in &offsets {
                let mut j = 0i64;
                for (a, &oa) in idx.iter().zip(o) {
                    let t = *a as i64 + oa;
                    if t < 0 || t >= m {
                        continue 'off;
                    }
                    j = j * m + t;
                }
                let q = quotient(values, g, i, j as usize, alpha);
                best = better(best, (q, i, j as usize));
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX, usize::MAX), better);
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let len = values.len();
    let far: Vec<(usize, usize)> = (0..sampling.far_pairs)
        .map(|_| (rng.gen_range(0..len), rng.gen_range(0..len)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| (i.min(j), i.max(j)))
        .collect();
    let far_best = far
        .par_iter()
        .map(|&(i, j)| (quotient(values, g, i, j, alpha), i, j))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX, usize::MAX), better);
    let best = better(near, far_best);
    if best.1 == usize::MAX {
        return Err(Error::domain("no admissible pairs sampled"));
    }
    Ok(PairMax {
        value: best.0,
        x1: g.point(best.1),
        x2: g.point(best.2),
        near_radius: radius_cells.floor() * g.step,
    })
}

/// [u]_{C^{0,α}} = sup |u(x₁) - u(x₂)| / |x₁ - x₂|^α, estimated with default sampling.
pub fn seminorm_holder(u: &GridFunction, alpha: f64) -> Result<PairMax> {
    holder_quotient_max(u, &u.values, alpha, &PairSampling::default())
}

/// sup (1 + |x|)^α |v(x)| over the grid of `g`.
pub fn weight_max(g: &GridFunction, values: &[f64], alpha: f64) -> Result<PointMax> {
    check_alpha(alpha)?;
    let m = g.per_axis();
    let best = values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let x = g.point(i);
            let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            ((1.0 + r).powf(alpha) * v.abs(), i, i)
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX, usize::MAX), better);
    if best.1 == usize::MAX {
        return Err(Error::domain("empty grid"));
    }
    let on_boundary = g.unflatten(best.1).iter().any(|&k| k == 0 || k + 1 == m);
    if on_boundary && best.0 > 0.0 {
        log::warn!(
            "weighted maximum {:e} attained on the boundary of [-{}, {}]^n",
            best.0,
            g.half_width,
            g.half_width
        );
    }
    Ok(PointMax {
        value: best.0,
        x: g.point(best.1),
        on_boundary: on_boundary && best.0 > 0.0,
    })
}

/// [u]_{M^α} = sup (1 + |x|)^α |u(x)|.
pub fn seminorm_weight(u: &GridFunction, alpha: f64) -> Result<PointMax> {
    weight_max(u, &u.values, alpha)
}

/// One summand of the C^{k,α}_H norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTerm {
    pub word: Word,
    /// "M" for [·]_{M^α}, "C" for [·]_{C^{0,α}}.
    pub seminorm: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub alpha: f64,
    pub k: usize,
    /// [u]_{C^{0,α}}.
    pub seminorm_c: f64,
    /// [u]_{M^α}.
    pub seminorm_m: f64,
    /// ‖u‖_{C^{k,α}_H}.
    pub ck_norm: f64,
    pub argmax_c: (Vec<f64>, Vec<f64>),
    pub argmax_m: Vec<f64>,
    /// Some weighted maximum sits on the box boundary.
    pub boundary_attained: bool,
    pub terms: Vec<NormTerm>,
}

/// All signed words of length `m` over {±1, …, ±n}.
pub fn words_of_length(n: usize, m: usize) -> Vec<Word> {
    let letters: Vec<i32> = (1..=n as i32).flat_map(|i| [i, -i]).collect();
    let mut out: Vec<Word> = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |&l| {
                    let mut v = w.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

/// ‖u‖_{C^{k,α}_H} = [u]_{M^α} + Σ_{1≤m≤k} Σ_{|w|=m} [A_w u]_{M^α} + Σ_{|w|=k} [A_w u]_{C^{0,α}}.
pub fn norm_ck_alpha(u: &GridFunction, k: usize, alpha: f64) -> Result<HolderReport> {
    norm_ck_alpha_with(u, k, alpha, &PairSampling::default())
}

pub fn norm_ck_alpha_with(
    u: &GridFunction,
    k: usize,
    alpha: f64,
    sampling: &PairSampling,
) -> Result<HolderReport> {
    check_alpha(alpha)?;
    let n = u.dimension;
    let mut missing = Vec::new();
    for m in 1..=k {
        for w in words_of_length(n, m) {
            if u.derivative(&w).is_none() {
                missing.push(w);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Missing(format!(
            "derivative grids for words {missing:?}"
        )));
    }
    let m0 = seminorm_weight(u, alpha)?;
    let mut terms = vec![NormTerm {
        word: Vec::new(),
        seminorm: "M".into(),
        value: m0.value,
    }];
    let mut boundary = m0.on_boundary;
    for m in 1..=k {
        for w in words_of_length(n, m) {
            let v = weight_max(u, u.derivative(&w).expect("checked"), alpha)?;
            boundary |= v.on_boundary;
            terms.push(NormTerm {
                word: w,
                seminorm: "M".into(),
                value: v.value,
            });
        }
    }
    let c0 = holder_quotient_max(u, &u.values, alpha, sampling)?;
    if k == 0 {
        terms.push(NormTerm {
            word: Vec::new(),
            seminorm: "C".into(),
            value: c0.value,
        });
    } else {
        for w in words_of_length(n, k) {
            let c = holder_quotient_max(u, u.derivative(&w).expect("checked"), alpha, sampling)?;
            terms.push(NormTerm {
                word: w,
                seminorm: "C".into(),
                value: c.value,
            });
        }
    }
    Ok(HolderReport {
        alpha,
        k,
        seminorm_c: c0.value,
        seminorm_m: m0.value,
        ck_norm: terms.iter().map(|t| t.value).sum(),
        argmax_c: (c0.x1, c0.x2),
        argmax_m: m0.x,
        boundary_attained: boundary,
        terms,
    })
}

/// A_{w₁}⋯A_{w_m}u at x: analytic first derivatives, central differences above that.
pub fn ladder_word_eval<U: TestFunction + ?Sized>(word: &[i32], u: &U, x: &[f64]) -> Result<f64> {
    for &i in word {
        LadderIndex(i).axis(u.dim())?;
    }
    fn go<U: TestFunction + ?Sized>(word: &[i32], u: &U, x: &[f64]) -> f64 {
        match word.split_first() {
            None => u.value(x),
            Some((&i, rest)) if rest.is_empty() => LadderImage {
                i: LadderIndex(i),
                u,
            }
            .value(x),
            Some((&i, rest)) => {
                let inner = WordImage { word: rest, u };
                LadderImage {
                    i: LadderIndex(i),
                    u: &inner,
                }
                .value(x)
            }
        }
    }
    Ok(go(word, u, x))
}

struct WordImage<'a, U: ?Sized> {
    word: &'a [i32],
    u: &'a U,
}

impl<U: TestFunction + ?Sized> TestFunction for WordImage<'_, U> {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        ladder_word_eval(self.word, self.u, x).expect("indices checked by the caller")
    }

    fn label(&self) -> String {
        format!("A{:?}({})", self.word, self.u.label())
    }
}

/// Samples `u` and every ladder word of length ≤ k on the grid [-L, L]ⁿ with step h.
pub fn sample_with_derivatives<U: TestFunction + ?Sized>(
    u: &U,
    half_width: f64,
    step: f64,
    k: usize,
) -> Result<GridFunction> {
    let n = u.dim();
    let mut g = GridFunction::from_fn(n, half_width, step, &|x: &[f64]| u.value(x))?;
    let pts: Vec<Vec<f64>> = (0..g.len()).map(|i| g.point(i)).collect();
    for m in 1..=k {
        for w in words_of_length(n, m) {
            let vals: Result<Vec<f64>> =
                pts.par_iter().map(|x| ladder_word_eval(&w, u, x)).collect();
            g.attach_derivative(w, vals?)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_half_ball() {
        let o = half_ball_offsets(1, 3.0);
        assert_eq!(o, vec![vec![1], vec![2], vec![3]]);
        let o2 = half_ball_offsets(2, 1.5);
        // (0,1), (1,-1), (1,0), (1,1)
        assert_eq!(o2.len(), 4);
        assert!(o2.iter().all(|v| v.iter().find(|&&a| a != 0).unwrap() > &0));
    }

    #[test]
    fn words() {
        assert_eq!(words_of_length(1, 0), vec![Vec::<i32>::new()]);
        assert_eq!(words_of_length(1, 2).len(), 4);
        assert_eq!(
            words_of_length(2, 1),
            vec![vec![1], vec![-1], vec![2], vec![-2]]
        );
    }
}
