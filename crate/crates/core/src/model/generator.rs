//! Polynomial test functions and the infinitesimal generator of the
//! environment process `(C_t, S_t)`.
//!
//! Two variants are exposed. [`GeneratorVariant::ItoCorrected`] is the
//! generator of the SDE obtained by applying Itô's formula to the rotation
//! `(U, V, X) ↦ (C, S)`:
//!
//! ```text
//! dc_j = −j s_j (dB + g dt) + (1 − ½ j² c_j) dt
//! ds_j =  j c_j (dB + g dt) − ½ j² s_j dt,        g = Σ k a_k s_k
//! ```
//!
//! [`GeneratorVariant::AsPrinted`] is the published closed form, which lacks
//! the `−½ Σ j² (c_j ∂_{c_j} + s_j ∂_{s_j})` term and carries the opposite
//! sign on the off-diagonal `∂_{c_k c_j}`, `∂_{s_j s_k}` terms. It does not
//! annihilate π and is kept as a discrepancy detector.

use serde::{Deserialize, Serialize};

use super::{g_observable, EnvState};

/// One term `coef · Π z_i^{exps[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

/// A polynomial in the interleaved variables `(c₁, s₁, …, cₙ, sₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTestFn {
    nvars: usize,
    terms: Vec<Monomial>,
}

impl PolyTestFn {
    pub fn zero(n_modes: usize) -> Self {
        PolyTestFn {
            nvars: 2 * n_modes,
            terms: Vec::new(),
        }
    }

    pub fn constant(n_modes: usize, value: f64) -> Self {
        Self::zero(n_modes).with_term(value, &[])
    }

    /// Index of `c_j` (1-based mode) in the interleaved layout.
    pub fn c_index(j: usize) -> usize {
        2 * (j - 1)
    }

    /// Index of `s_j` (1-based mode) in the interleaved layout.
    pub fn s_index(j: usize) -> usize {
        2 * (j - 1) + 1
    }

    /// `c_j^p s_j^q`-style monomial builder: `powers` lists `(var_index, power)`.
    pub fn monomial(n_modes: usize, coef: f64, powers: &[(usize, u32)]) -> Self {
        Self::zero(n_modes).with_term(coef, powers)
    }

    /// Adds `coef · Π z_i^p` for the listed `(i, p)` pairs.
    pub fn with_term(mut self, coef: f64, powers: &[(usize, u32)]) -> Self {
        let mut exps = vec![0; self.nvars];
        for &(i, p) in powers {
            assert!(i < self.nvars, "variable index {i} out of range");
            exps[i] += p;
        }
        self.push(Monomial { coef, exps });
        self
    }

    fn push(&mut self, m: Monomial) {
        if m.coef == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|t| t.exps == m.exps) {
            Some(t) => {
                t.coef += m.coef;
            }
            None => self.terms.push(m),
        }
        self.terms.retain(|t| t.coef != 0.0);
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.nvars);
        self.terms
            .iter()
            .map(|t| {
                t.exps
                    .iter()
                    .zip(z)
                    .fold(t.coef, |acc, (&e, &zi)| if e == 0 { acc } else { acc * zi.powi(e as i32) })
            })
            .sum()
    }

    pub fn eval_env(&self, env: &EnvState) -> f64 {
        self.eval(&env.to_interleaved())
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> PolyTestFn {
        let mut out = PolyTestFn {
            nvars: self.nvars,
            terms: Vec::new(),
        };
        for t in &self.terms {
            let e = t.exps[i];
            if e == 0 {
                continue;
            }
            let mut exps = t.exps.clone();
            exps[i] -= 1;
            out.push(Monomial {
                coef: t.coef * e as f64,
                exps,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorVariant {
    ItoCorrected,
    AsPrinted,
}

/// A test function with its gradient and Hessian precomputed, ready for
/// repeated evaluation of `Gf`.
#[derive(Debug, Clone)]
pub struct Generator {
    a: Vec<f64>,
    grad: Vec<PolyTestFn>,
    // row-major, full symmetric matrix
    hess: Vec<PolyTestFn>,
}

impl Generator {
    pub fn new(f: &PolyTestFn, a: &[f64]) -> Self {
        assert_eq!(f.nvars(), 2 * a.len(), "test function / model dimension mismatch");
        let m = f.nvars();
        let grad: Vec<PolyTestFn> = (0..m).map(|i| f.derivative(i)).collect();
        let hess = (0..m)
            .flat_map(|p| (0..m).map(move |q| (p, q)))
            .map(|(p, q)| grad[p].derivative(q))
            .collect();
        Generator {
            a: a.to_vec(),
            grad,
            hess,
        }
    }

    pub fn apply(&self, env: &EnvState, variant: GeneratorVariant) -> f64 {
        let z = env.to_interleaved();
        let m = z.len();
        let n = m / 2;
        let df: Vec<f64> = self.grad.iter().map(|p| p.eval(&z)).collect();
        let d2 = |p: usize, q: usize| {
            let h = &self.hess[p * m + q];
            if h.is_zero() {
                0.0
            } else {
                h.eval(&z)
            }
        };
        let g = g_observable(env, &self.a);
        let k = |j: usize| (j + 1) as f64;
        let (ci, si) = (|j: usize| 2 * j, |j: usize| 2 * j + 1);

        match variant {
            GeneratorVariant::ItoCorrected => {
                // diffusion vector of the single driving Brownian motion
                let mut sigma = vec![0.0; m];
                for j in 0..n {
                    sigma[ci(j)] = -k(j) * env.s[j];
                    sigma[si(j)] = k(j) * env.c[j];
                }
                let mut second = 0.0;
                for p in 0..m {
                    for q in 0..m {
                        if sigma[p] != 0.0 && sigma[q] != 0.0 {
                            second += sigma[p] * sigma[q] * d2(p, q);
                        }
                    }
                }
                let first: f64 = (0..n)
                    .map(|j| {
                        let kj = k(j);
                        let mu_c = 1.0 - kj * env.s[j] * g - 0.5 * kj * kj * env.c[j];
                        let mu_s = kj * env.c[j] * g - 0.5 * kj * kj * env.s[j];
                        mu_c * df[ci(j)] + mu_s * df[si(j)]
                    })
                    .sum();
                0.5 * second + first
            }
            GeneratorVariant::AsPrinted => {
                let (c, s) = (&env.c, &env.s);
                let mut total = 0.0;
                for j in 0..n {
                    total += 0.5
                        * k(j)
                        * k(j)
                        * (s[j] * s[j] * d2(ci(j), ci(j)) + c[j] * c[j] * d2(si(j), si(j)));
                }
                for j in 0..n {
                    for l in 0..n {
                        if l != j {
                            total -= 0.5
                                * k(j)
                                * k(l)
                                * (s[j] * s[l] * d2(ci(l), ci(j)) + c[j] * c[l] * d2(si(j), si(l)));
                        }
                        total -= k(j) * k(l) * s[j] * c[l] * d2(ci(j), si(l));
                    }
                }
                let rotation: f64 = (0..n)
                    .map(|j| k(j) * (-s[j] * df[ci(j)] + c[j] * df[si(j)]))
                    .sum();
                total += g * rotation;
                total += (0..n).map(|j| df[ci(j)]).sum::<f64>();
                total
            }
        }
    }
}

/// `Gf(env)` for a single evaluation. Build a [`Generator`] once when
/// evaluating the same `f` at many points.
pub fn apply_generator(
    f: &PolyTestFn,
    env: &EnvState,
    a: &[f64],
    variant: GeneratorVariant,
) -> f64 {
    Generator::new(f, a).apply(env, variant)
}
