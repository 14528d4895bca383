//! Quantum predictions for chained CGLMP measurements on `|ψ_d⟩`.
//!
//! Settings are indexed from 0 in code; index `A` here is the paper-style
//! setting `A + 1`, so `alpha[A] = (A + 1/2)/N` and `beta[B] = (B + 1)/N`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Entries in `[−CLIP_TOL, 0)` are treated as rounding noise and clipped.
pub const CLIP_TOL: f64 = 1e-12;

/// Measurement phases of the chained settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainedSettings {
    d: usize,
    n: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl ChainedSettings {
    /// `α_A = (A − 1/2)/N`, `β_B = B/N` for `A, B = 1..N`.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one setting".into()));
        }
        let nf = n as f64;
        let alpha = (1..=n).map(|a| (a as f64 - 0.5) / nf).collect();
        let beta = (1..=n).map(|b| b as f64 / nf).collect();
        Self::with_phases(d, alpha, beta)
    }

    /// Arbitrary phases, one per setting on each side.
    pub fn with_phases(d: usize, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        Ok(ChainedSettings {
            d,
            n: alpha.len(),
            alpha,
            beta,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

/// An ordered list of `d` state vectors, one per outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBasis {
    vectors: Vec<CVector>,
}

impl StateBasis {
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        let d = vectors.len();
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        Ok(StateBasis { vectors })
    }

    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    /// `max |⟨v_i|v_j⟩ − δ_ij|`.
    pub fn gram_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dotc(b) - target).norm());
            }
        }
        worst
    }

    /// Basis `{U v_x}`.
    pub fn transformed(&self, unitary: &CMatrix) -> StateBasis {
        StateBasis {
            vectors: self.vectors.iter().map(|v| unitary * v).collect(),
        }
    }
}

/// Alice's and Bob's measurement bases, one per setting.
#[derive(Clone, Debug)]
pub struct CglmpBases {
    pub alice: Vec<StateBasis>,
    pub bob: Vec<StateBasis>,
}

/// `|X_A⟩ = Σ_j exp[2πi j (X − α_A)/d] |j⟩ / √d` and
/// `|Y_B⟩ = Σ_j exp[−2πi j (Y − β_B)/d] |j⟩ / √d`.
pub fn cglmp_bases(settings: &ChainedSettings) -> CglmpBases {
    let d = settings.d;
    let side = |phases: &[f64], sign: f64| -> Vec<StateBasis> {
        phases
            .iter()
            .map(|&phase| StateBasis {
                vectors: (0..d)
                    .map(|x| {
                        CVector::from_iterator(
                            d,
                            (0..d).map(|j| {
                                let arg = sign * 2.0 * PI * j as f64 * (x as f64 - phase) / d as f64;
                                Complex64::from_polar(1.0 / (d as f64).sqrt(), arg)
                            }),
                        )
                    })
                    .collect(),
            })
            .collect()
    };
    CglmpBases {
        alice: side(&settings.alpha, 1.0),
        bob: side(&settings.beta, -1.0),
    }
}

/// `Σ_j |j⟩|j⟩ / √d`, component `j·d + k` holding `|j⟩_A|k⟩_B`.
pub fn maximally_entangled(d: usize) -> Result<CVector> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut psi = CVector::zeros(d * d);
    for j in 0..d {
        psi[j * d + j] = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    Ok(psi)
}

/// Reduced density matrix of the first subsystem.
pub fn reduced_first(state: &CVector, d: usize) -> Result<CMatrix> {
    if state.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: state.len(),
        });
    }
    Ok(CMatrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| state[i * d + k] * state[j * d + k].conj()).sum()
    }))
}

/// Read access to a table `P(X, Y | A, B)`.
pub trait Correlations {
    /// Number of outcomes `d`.
    fn outcomes(&self) -> usize;
    /// Number of settings per side `N`.
    fn settings(&self) -> usize;
    /// Row-major `d × d` block of `P(X, Y | A = a, B = b)`.
    fn block(&self, a: usize, b: usize) -> &[f64];

    fn prob(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.block(a, b)[x * self.outcomes() + y]
    }

    /// `P(X = x | A = a, B = b)` for every `x`.
    fn alice_marginal(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.outcomes();
        self.block(a, b).chunks(d).map(|row| row.iter().sum()).collect()
    }

    /// `P(Y = y | A = a, B = b)` for every `y`.
    fn bob_marginal(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.outcomes();
        let blk = self.block(a, b);
        (0..d).map(|y| (0..d).map(|x| blk[x * d + y]).sum()).collect()
    }

    /// Largest `|Σ_{X,Y} P − 1|` over all setting pairs.
    fn normalization_residual(&self) -> f64 {
        let n = self.settings();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let s: CompensatedSum = self.block(a, b).iter().copied().collect();
                worst = worst.max((s.value() - 1.0).abs());
            }
        }
        worst
    }

    /// Largest variation of a local marginal under a change of the remote
    /// setting, over both parties.
    fn signaling_residual(&self) -> f64 {
        let n = self.settings();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let reference = self.alice_marginal(a, 0);
            for b in 1..n {
                for (p, q) in self.alice_marginal(a, b).iter().zip(&reference) {
                    worst = worst.max((p - q).abs());
                }
            }
        }
        for b in 0..n {
            let reference = self.bob_marginal(0, b);
            for a in 1..n {
                for (p, q) in self.bob_marginal(a, b).iter().zip(&reference) {
                    worst = worst.max((p - q).abs());
                }
            }
        }
        worst
    }
}

/// Clips rounding noise below zero; anything beyond `CLIP_TOL` is an error.
pub(crate) fn clip_probabilities(probs: &mut [f64]) -> Result<()> {
    for p in probs.iter_mut() {
        if *p < 0.0 {
            if *p < -CLIP_TOL {
                return Err(Error::NegativeProbability(*p));
            }
            *p = 0.0;
        }
    }
    Ok(())
}

/// Probability tensor `P(X, Y | A, B)` obtained from the Born rule.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    d: usize,
    n: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl Correlations for JointDistribution {
    fn outcomes(&self) -> usize {
        self.d
    }

    fn settings(&self) -> usize {
        self.n
    }

    fn block(&self, a: usize, b: usize) -> &[f64] {
        let size = self.d * self.d;
        let start = (a * self.n + b) * size;
        &self.probs[start..start + size]
    }
}

fn check_bases(state: &CVector, alice: &[StateBasis], bob: &[StateBasis]) -> Result<usize> {
    let d = alice.first().map(StateBasis::dimension).unwrap_or(0);
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if alice.len() != bob.len() {
        return Err(Error::DimensionMismatch {
            expected: alice.len(),
            found: bob.len(),
        });
    }
    if let Some(b) = alice.iter().chain(bob).find(|b| b.dimension() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.dimension(),
        });
    }
    if state.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: state.len(),
        });
    }
    Ok(d)
}

/// `|⟨ψ| (|X⟩ ⊗ |Y⟩)|²` for every outcome pair.
fn born_block(state: &CVector, alice: &StateBasis, bob: &StateBasis) -> Result<Vec<f64>> {
    let d = alice.dimension();
    let mut out = Vec::with_capacity(d * d);
    for xv in &alice.vectors {
        // w_k = Σ_j ψ*_{jk} x_j, then ⟨ψ|x,y⟩ = Σ_k w_k y_k
        let w: Vec<Complex64> = (0..d)
            .map(|k| (0..d).map(|j| state[j * d + k].conj() * xv[j]).sum())
            .collect();
        for yv in &bob.vectors {
            let amp: Complex64 = w.iter().zip(yv.iter()).map(|(a, b)| a * b).sum();
            out.push(amp.norm_sqr());
        }
    }
    clip_probabilities(&mut out)?;
    Ok(out)
}

/// Born-rule distribution of `state` measured in the given bases.
pub fn joint_distribution(
    state: &CVector,
    alice: &[StateBasis],
    bob: &[StateBasis],
) -> Result<JointDistribution> {
    let d = check_bases(state, alice, bob)?;
    let n = alice.len();
    let blocks = (0..n * n)
        .into_par_iter()
        .map(|ab| born_block(state, &alice[ab / n], &bob[ab % n]))
        .collect::<Result<Vec<_>>>()?;
    Ok(JointDistribution {
        d,
        n,
        probs: blocks.concat(),
    })
}

/// CGLMP distribution on `|ψ_d⟩`.
pub fn cglmp_distribution(settings: &ChainedSettings) -> Result<JointDistribution> {
    let bases = cglmp_bases(settings);
    joint_distribution(&maximally_entangled(settings.d)?, &bases.alice, &bases.bob)
}

/// `sin²(πθ) / (d³ sin²(πθ/d))`, with the limit `1/d` at `θ ≡ 0 (mod d)`.
pub fn closed_form_probability(d: usize, theta: f64) -> f64 {
    let df = d as f64;
    let r = theta.rem_euclid(df);
    if r.min(df - r) < 1e-9 {
        return 1.0 / df;
    }
    let num = (PI * theta).sin().powi(2);
    let den = df.powi(3) * (PI * theta / df).sin().powi(2);
    num / den
}

/// Which difference of outcomes enters `⟨[·]⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Difference {
    XMinusY,
    YMinusX,
}

fn expected_mod_block(block: &[f64], d: usize, diff: Difference, offset: i64) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in 0..d {
        for y in 0..d {
            let raw = match diff {
                Difference::XMinusY => x as i64 - y as i64,
                Difference::YMinusX => y as i64 - x as i64,
            };
            let k = (raw + offset).rem_euclid(d as i64);
            acc.add(k as f64 * block[x * d + y]);
        }
    }
    acc.value()
}

/// `⟨[±(X − Y) + offset]⟩ = Σ_k k P([±(X − Y) + offset] mod d = k)` for
/// settings `(a, b)`.
pub fn expected_mod<C: Correlations + ?Sized>(
    dist: &C,
    a: usize,
    b: usize,
    diff: Difference,
    offset: i64,
) -> Result<f64> {
    let n = dist.settings();
    for index in [a, b] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    Ok(expected_mod_block(dist.block(a, b), dist.outcomes(), diff, offset))
}

/// Setting pairs and terms of the chain, in summation order:
/// `⟨[X_i − Y_i]⟩` then `⟨[Y_i − X_{i+1}]⟩`, with `X_{N+1} = X_1 + 1`.
fn chain_terms(n: usize) -> impl Iterator<Item = (usize, usize, Difference, i64)> {
    (0..n).flat_map(move |i| {
        let second = if i + 1 < n {
            (i + 1, i, Difference::YMinusX, 0)
        } else {
            (0, n - 1, Difference::YMinusX, -1)
        };
        [(i, i, Difference::XMinusY, 0), second]
    })
}

/// The chained quantity
/// `I_N = Σ_i (⟨[X_i − Y_i]⟩ + ⟨[Y_i − X_{i+1}]⟩)`.
pub fn chained_in<C: Correlations + ?Sized>(dist: &C) -> f64 {
    let d = dist.outcomes();
    chain_terms(dist.settings())
        .map(|(a, b, diff, off)| expected_mod_block(dist.block(a, b), d, diff, off))
        .collect::<CompensatedSum>()
        .value()
}

/// `I_N` from the Born rule, evaluating only the `2N` setting pairs that
/// enter the chain.
pub fn chained_in_born(state: &CVector, alice: &[StateBasis], bob: &[StateBasis]) -> Result<f64> {
    let d = check_bases(state, alice, bob)?;
    let terms = chain_terms(alice.len())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(a, b, diff, off)| {
            born_block(state, &alice[a], &bob[b]).map(|blk| expected_mod_block(&blk, d, diff, off))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::numeric::sum(&terms))
}

/// Exact quantum `I_N` for `|ψ_d⟩` and the chained CGLMP settings.
pub fn quantum_chained_in(d: usize, n: usize) -> Result<f64> {
    let settings = ChainedSettings::new(d, n)?;
    let bases = cglmp_bases(&settings);
    chained_in_born(&maximally_entangled(d)?, &bases.alice, &bases.bob)
}

/// Coefficient of the leading `2γ/N` term of the quantum `I_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaValue {
    pub d: usize,
    pub gamma: f64,
}

/// `γ(d) = π²/(4d²) Σ_{j=1}^{d−1} j / sin²(πj/d)`.
pub fn gamma(d: usize) -> Result<GammaValue> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let df = d as f64;
    let s: CompensatedSum = (1..d)
        .map(|j| j as f64 / (PI * j as f64 / df).sin().powi(2))
        .collect();
    Ok(GammaValue {
        d,
        gamma: PI * PI / (4.0 * df * df) * s.value(),
    })
}

/// Leading-order `I_N ≈ 2γ(d)/N`.
pub fn asymptotic_in(d: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one setting".into()));
    }
    Ok(2.0 * gamma(d)?.gamma / n as f64)
}
