//! Verification suites behind `leggett verify`.

use leggett::bloch::{state_to_bloch, sample_haar_pure, BlochVector, OperatorBasis};
use leggett::crypto::basis_to_bloch;
use leggett::polytope::{
    contradiction_gap, lemma_equality_bound, lhv_min_in, random_no_signaling, shift_distance,
    statistical_distance, verify_theorem1, ConditionalDistribution, CHECK_TOL,
};
use leggett::qcorr::{cglmp_bases, ChainedSettings, Correlations};
use leggett::rng::SeedStream;
use leggett::Result;
use rand::Rng;
use serde::Deserialize;

use crate::format::fmt12;

/// Largest tolerated difference between the certificate and the scan.
const ORACLE_TOL: f64 = 1e-3;
const SCAN_STEPS: usize = 1 << 17;

/// A table read from `--input`: `probs[((a·n + b)·d + x)·d + y] = P(x, y | a, b)`.
#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub d: usize,
    pub n: usize,
    pub probs: Vec<f64>,
}

impl Fixture {
    pub fn into_distribution(self) -> Result<ConditionalDistribution> {
        ConditionalDistribution::new(self.d, self.n, self.probs)
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub pass: bool,
}

impl Report {
    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }
}

/// Seeded corpus of no-signaling tables: table `i` comes from substream `i`.
pub fn corpus(d: usize, n: usize, trials: u64, seed: SeedStream) -> Result<Vec<ConditionalDistribution>> {
    (0..trials)
        .map(|i| {
            let mut rng = seed.substream(i);
            let mix = rng.random::<f64>();
            random_no_signaling(d, n, mix, &mut rng)
        })
        .collect()
}

pub fn theorem1(tables: &[ConditionalDistribution]) -> Result<Report> {
    let mut report = Report::default();
    let mut min_slack = f64::INFINITY;
    let mut failures = 0usize;
    for t in tables {
        let r = verify_theorem1(t)?;
        min_slack = min_slack.min(r.slack);
        failures += usize::from(!r.holds);
    }
    report.line("tables", tables.len());
    report.line("min slack I_N - max delta", fmt12(min_slack));
    report.line("failures", failures);
    report.pass = failures == 0;
    Ok(report)
}

pub fn lemma(tables: &[ConditionalDistribution]) -> Result<Report> {
    let mut report = Report::default();
    let mut min_slack = f64::INFINITY;
    let mut min_triangle = f64::INFINITY;
    let mut failures = 0usize;
    for t in tables {
        let (n, d) = (t.settings(), t.outcomes());
        for a in 0..n {
            for b in 0..n {
                let r = lemma_equality_bound(t, a, b)?;
                min_slack = min_slack.min(r.slack);
                failures += usize::from(!r.holds);

                // Δ(P_X, P_{X+1}) ≤ Δ(P_X, P_Y) + Δ(P_Y, P_{X+1})
                let p = t.alice_marginal(a, b);
                let q = t.bob_marginal(a, b);
                let shifted: Vec<f64> = (0..d).map(|x| p[(x + 1) % d]).collect();
                let slack = statistical_distance(&p, &q)? + statistical_distance(&q, &shifted)?
                    - shift_distance(&p)?;
                min_triangle = min_triangle.min(slack);
                failures += usize::from(slack < -CHECK_TOL);
            }
        }
    }
    report.line("tables", tables.len());
    report.line("min slack 1 - delta - P(X=Y)", fmt12(min_slack));
    report.line("min triangle slack", fmt12(min_triangle));
    report.line("failures", failures);
    report.pass = failures == 0;
    Ok(report)
}

pub fn lhv(d: usize, n: usize) -> Result<Report> {
    let min = lhv_min_in(d, n)?;
    let mut report = Report::default();
    report.line("strategies", min.strategies);
    report.line("min I_N", min.value);
    report.line("expected", d - 1);
    report.line(
        "witness",
        format!("alice {:?} bob {:?}", min.witness.alice, min.witness.bob),
    );
    report.pass = min.value == (d - 1) as u64;
    Ok(report)
}

/// `max min(a₁·u, a₂·u)` over a dense angular grid in the plane of the two
/// vectors; the maximizer always lies in that plane.
pub fn plane_scan(a1: &BlochVector, a2: &BlochVector) -> Result<f64> {
    let c = a1.dot(a2)?.clamp(-1.0, 1.0);
    let s = (1.0 - c * c).sqrt();
    Ok((0..SCAN_STEPS)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / SCAN_STEPS as f64;
            let (x, y) = (t.cos(), t.sin());
            x.min(c * x + s * y)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Every distinct pair of chained-basis vectors plus `trials` pairs of
/// Haar-random pure-state vectors.
pub fn contradiction(d: usize, n: usize, trials: u64, seed: SeedStream) -> Result<Report> {
    let ops = OperatorBasis::generate(d)?;
    let bases = cglmp_bases(&ChainedSettings::new(d, n)?);
    let mut vectors = Vec::new();
    for b in bases.alice.iter().chain(&bases.bob) {
        vectors.extend(basis_to_bloch(&ops, b)?.vectors().iter().cloned());
    }
    let mut pairs = Vec::new();
    for (i, a1) in vectors.iter().enumerate() {
        for a2 in &vectors[i + 1..] {
            if a1.sub(a2)?.norm() > 1e-9 {
                pairs.push((a1.clone(), a2.clone()));
            }
        }
    }
    for i in 0..trials {
        let mut rng = seed.substream(i);
        let a1 = state_to_bloch(&ops, &sample_haar_pure(d, &mut rng)?)?;
        let a2 = state_to_bloch(&ops, &sample_haar_pure(d, &mut rng)?)?;
        pairs.push((a1, a2));
    }

    let mut min_gap = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    for (a1, a2) in &pairs {
        let cert = contradiction_gap(a1, a2)?;
        min_gap = min_gap.min(cert.gap);
        max_dev = max_dev.max((cert.max_min_overlap - plane_scan(a1, a2)?).abs());
    }
    let mut report = Report::default();
    report.line("pairs", pairs.len());
    report.line("min gap", fmt12(min_gap));
    report.line("max deviation from scan", fmt12(max_dev));
    report.pass = min_gap > 0.0 && max_dev <= ORACLE_TOL;
    Ok(report)
}
