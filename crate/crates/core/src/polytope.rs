//! No-signaling correlations and the chain of inequalities behind
//! `⟨Δ(P_X, P_{X+1})⟩ ≤ I_N`.
//!
//! The statistical distance used throughout is the `1/d`-normalized L1
//! distance `Δ(P, Q) = Σ_x |P(x) − Q(x)| / d`.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::bloch::BlochVector;
use crate::crypto::MeasurementBasisBloch;
use crate::error::{Error, Result};
use crate::qcorr::{chained_in, clip_probabilities, Correlations, JointDistribution};

/// Normalization tolerance for stored tables.
pub const TABLE_TOL: f64 = 1e-12;
/// Normalization tolerance for distributions passed to the distances.
pub const DISTANCE_TOL: f64 = 1e-9;
/// Tolerance of the theorem and lemma checks.
pub const CHECK_TOL: f64 = 1e-9;
/// Largest number of deterministic strategies enumerated.
pub const MAX_STRATEGIES: u128 = 100_000_000;

/// A table `P(X, Y | A, B)` with no quantum provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalDistribution {
    d: usize,
    n: usize,
    probs: Vec<f64>,
}

impl ConditionalDistribution {
    /// `probs` is indexed `((A·N + B)·d + X)·d + Y`.
    pub fn new(d: usize, n: usize, mut probs: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one setting".into()));
        }
        if probs.len() != n * n * d * d {
            return Err(Error::DimensionMismatch {
                expected: n * n * d * d,
                found: probs.len(),
            });
        }
        clip_probabilities(&mut probs)?;
        let dist = ConditionalDistribution { d, n, probs };
        for a in 0..n {
            for b in 0..n {
                let s: f64 = crate::numeric::sum(dist.block(a, b));
                if (s - 1.0).abs() > TABLE_TOL {
                    return Err(Error::UnnormalizedDistribution(s));
                }
            }
        }
        Ok(dist)
    }

    pub fn from_joint(joint: &JointDistribution) -> Self {
        ConditionalDistribution {
            d: joint.outcomes(),
            n: joint.settings(),
            probs: joint.probs().to_vec(),
        }
    }

    /// Independent local behaviour: `P(X, Y | A, B) = p_A(X) q_B(Y)`.
    pub fn product(alice: &[Vec<f64>], bob: &[Vec<f64>]) -> Result<Self> {
        let n = alice.len();
        let d = alice.first().map(Vec::len).unwrap_or(0);
        if bob.len() != n || alice.iter().chain(bob).any(|m| m.len() != d) {
            return Err(Error::InvalidArgument("local tables have inconsistent shapes".into()));
        }
        let mut probs = Vec::with_capacity(n * n * d * d);
        for p in alice {
            for q in bob {
                for px in p {
                    probs.extend(q.iter().map(|qy| px * qy));
                }
            }
        }
        Self::new(d, n, probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Convex combination `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.probs.len(),
                found: other.probs.len(),
            });
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect();
        Self::new(self.d, self.n, probs)
    }
}

impl Correlations for ConditionalDistribution {
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

/// Deterministic local strategy: outcome per setting on each side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicStrategy {
    /// `I_N` of the strategy, in exact integer arithmetic.
    pub fn chained_value(&self, d: usize) -> u64 {
        let n = self.alice.len();
        let d = d as i64;
        let mut total = 0;
        for i in 0..n {
            let (a, b) = (self.alice[i] as i64, self.bob[i] as i64);
            let next = if i + 1 < n {
                self.alice[i + 1] as i64
            } else {
                self.alice[0] as i64 + 1
            };
            total += (a - b).rem_euclid(d) + (b - next).rem_euclid(d);
        }
        total as u64
    }

    pub fn to_distribution(&self, d: usize) -> Result<ConditionalDistribution> {
        let n = self.alice.len();
        if self.bob.len() != n || self.alice.iter().chain(&self.bob).any(|&x| x >= d) {
            return Err(Error::InvalidArgument("strategy does not fit (d, N)".into()));
        }
        let mut probs = vec![0.0; n * n * d * d];
        for a in 0..n {
            for b in 0..n {
                probs[((a * n + b) * d + self.alice[a]) * d + self.bob[b]] = 1.0;
            }
        }
        ConditionalDistribution::new(d, n, probs)
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| **x < -DISTANCE_TOL) {
        return Err(Error::NegativeProbability(*x));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DISTANCE_TOL {
        return Err(Error::UnnormalizedDistribution(s));
    }
    Ok(())
}

/// `Δ(P, Q) = Σ_x |P(x) − Q(x)| / d`.
pub fn statistical_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let d = p.len() as f64;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / d)
}

/// `Σ_x |P(x) − P(x + 1 mod d)| / d`, the distance between `X` and `X + 1`.
pub fn shift_distance(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    let d = p.len();
    Ok((0..d).map(|x| (p[x] - p[(x + 1) % d]).abs()).sum::<f64>() / d as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalingReport {
    /// Largest change of a local marginal under a change of remote setting.
    pub residual: f64,
    pub pass: bool,
}

pub fn is_no_signaling<C: Correlations + ?Sized>(dist: &C, tol: f64) -> SignalingReport {
    let residual = dist.signaling_residual();
    SignalingReport {
        residual,
        pass: residual <= tol,
    }
}

fn random_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-12).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random no-signaling table: weight `1 − mix` on a mixture of local
/// deterministic strategies and `mix` on a mixture of modulo boxes
/// `Y = X + f(A, B) mod d` with `X` uniform.
///
/// Half of the boxes use the chain-aligned offset (`f = 1` on the wrap pair,
/// zero elsewhere) for which `I_N = 0`.
pub fn random_no_signaling<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    mix: f64,
    rng: &mut R,
) -> Result<ConditionalDistribution> {
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::InvalidArgument(format!("mix must lie in [0, 1], got {mix}")));
    }
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one setting".into()));
    }
    let mut probs = vec![0.0; n * n * d * d];

    let n_local = rng.random_range(1..=4);
    for w in random_weights(n_local, rng) {
        let alice: Vec<usize> = (0..n).map(|_| rng.random_range(0..d)).collect();
        let bob: Vec<usize> = (0..n).map(|_| rng.random_range(0..d)).collect();
        for a in 0..n {
            for b in 0..n {
                probs[((a * n + b) * d + alice[a]) * d + bob[b]] += (1.0 - mix) * w;
            }
        }
    }

    let n_boxes = rng.random_range(1..=3);
    for w in random_weights(n_boxes, rng) {
        let aligned = rng.random_bool(0.5);
        let offsets: Vec<usize> = (0..n * n)
            .map(|ab| {
                if aligned {
                    usize::from(ab == n - 1 && n > 1)
                } else {
                    rng.random_range(0..d)
                }
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                let f = offsets[a * n + b];
                for x in 0..d {
                    probs[((a * n + b) * d + x) * d + (x + f) % d] += mix * w / d as f64;
                }
            }
        }
    }
    ConditionalDistribution::new(d, n, probs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Report {
    pub i_n: f64,
    /// `Δ(P_{X|A}, P_{X+1|A})` for every Alice setting.
    pub deltas: Vec<f64>,
    pub max_delta: f64,
    /// `I_N − max_A Δ_A`.
    pub slack: f64,
    pub holds: bool,
}

/// Checks `Δ(P_{X|A}, P_{X+1|A}) ≤ I_N` for every Alice setting `A`.
///
/// This per-instance form implies the statement averaged over any
/// distribution of hidden states. Signaling input is rejected.
pub fn verify_theorem1<C: Correlations + ?Sized>(dist: &C) -> Result<Theorem1Report> {
    let ns = is_no_signaling(dist, CHECK_TOL);
    if !ns.pass {
        return Err(Error::Signaling(ns.residual));
    }
    let i_n = chained_in(dist);
    let deltas = (0..dist.settings())
        .map(|a| shift_distance(&dist.alice_marginal(a, 0)))
        .collect::<Result<Vec<_>>>()?;
    let max_delta = deltas.iter().copied().fold(0.0, f64::max);
    let slack = i_n - max_delta;
    Ok(Theorem1Report {
        i_n,
        deltas,
        max_delta,
        slack,
        holds: slack >= -CHECK_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaReport {
    /// `P(X_A = Y_B)`.
    pub p_equal: f64,
    /// `Δ(P_{X_A}, P_{Y_B})`.
    pub delta: f64,
    /// `1 − Δ − P(X_A = Y_B)`.
    pub slack: f64,
    pub holds: bool,
}

/// Checks `P(X_A = Y_B) ≤ 1 − Δ(P_{X_A}, P_{Y_B})`.
pub fn lemma_equality_bound<C: Correlations + ?Sized>(dist: &C, a: usize, b: usize) -> Result<LemmaReport> {
    let n = dist.settings();
    for index in [a, b] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    let d = dist.outcomes();
    let p_equal = (0..d).map(|x| dist.prob(a, b, x, x)).sum::<f64>();
    let delta = statistical_distance(&dist.alice_marginal(a, b), &dist.bob_marginal(a, b))?;
    let slack = 1.0 - delta - p_equal;
    Ok(LemmaReport {
        p_equal,
        delta,
        slack,
        holds: slack >= -CHECK_TOL,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LhvMinimum {
    pub value: u64,
    pub witness: DeterministicStrategy,
    pub strategies: u64,
}

fn decode(mut index: u64, d: usize, n: usize) -> DeterministicStrategy {
    let mut digits = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        digits.push((index % d as u64) as usize);
        index /= d as u64;
    }
    let bob = digits.split_off(n);
    DeterministicStrategy { alice: digits, bob }
}

/// Minimum of `I_N` over all `d^{2N}` deterministic local strategies. Mixed
/// local strategies are convex combinations of these, so this is the local
/// bound. Ties resolve to the smallest enumeration index.
pub fn lhv_min_in(d: usize, n: usize) -> Result<LhvMinimum> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one setting".into()));
    }
    let count = (d as u128).checked_pow(2 * n as u32).unwrap_or(u128::MAX);
    if count > MAX_STRATEGIES {
        return Err(Error::InstanceTooLarge(count));
    }
    let count = count as u64;
    let (value, index) = (0..count)
        .into_par_iter()
        .map(|i| (decode(i, d, n).chained_value(d), i))
        .min()
        .expect("at least one strategy");
    Ok(LhvMinimum {
        value,
        witness: decode(index, d, n),
        strategies: count,
    })
}

/// Certificate that no unit `u` has `a₁·u = a₂·u = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContradictionCertificate {
    /// `max_{|u|=1} min(a₁·u, a₂·u)`.
    pub max_min_overlap: f64,
    /// `1 − max_min_overlap`, positive for distinct vectors.
    pub gap: f64,
    /// A unit vector attaining the maximum.
    pub maximizer: BlochVector,
}

/// Max–min overlap of two unit Bloch vectors, attained on their bisector:
/// `(1 + a₁·a₂)/|a₁ + a₂| = sqrt((1 + a₁·a₂)/2)`.
pub fn contradiction_gap(a1: &BlochVector, a2: &BlochVector) -> Result<ContradictionCertificate> {
    for a in [a1, a2] {
        if (a.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("measurement vector norm {}", a.norm())));
        }
    }
    if a1.sub(a2)?.norm() < 1e-12 {
        return Err(Error::NoContradiction);
    }
    let c = a1.dot(a2)?;
    let value = ((1.0 + c) / 2.0).max(0.0).sqrt();
    let sum = a1.add(a2)?;
    let maximizer = if sum.norm() > 1e-12 {
        BlochVector::normalized(a1.dimension(), sum.into_coords())?
    } else {
        // antipodal pair: any direction orthogonal to a₁ gives 0
        let dim = a1.coords().len();
        let axis = (0..dim)
            .min_by(|&i, &j| a1.coords()[i].abs().total_cmp(&a1.coords()[j].abs()))
            .unwrap();
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        let proj = a1.coords()[axis];
        v.iter_mut().zip(a1.coords()).for_each(|(x, a)| *x -= proj * a);
        BlochVector::normalized(a1.dimension(), v)?
    };
    Ok(ContradictionCertificate {
        max_min_overlap: value,
        gap: 1.0 - value,
        maximizer,
    })
}

/// Two settings each yielding a certain outcome would need
/// `a₁^{x₁}·u = a₂^{x₂}·u = 1` in the crypto-nonlocal model.
pub fn deterministic_crypto_contradiction(
    first: &MeasurementBasisBloch,
    x1: usize,
    second: &MeasurementBasisBloch,
    x2: usize,
) -> Result<ContradictionCertificate> {
    let a1 = first
        .vectors()
        .get(x1)
        .ok_or(Error::IndexOutOfRange { index: x1, n: first.d() })?;
    let a2 = second
        .vectors()
        .get(x2)
        .ok_or(Error::IndexOutOfRange { index: x2, n: second.d() })?;
    contradiction_gap(a1, a2)
}
