//! Several copies of a chained measurement set, rotated into perpendicular
//! parts of the Bloch space.
//!
//! A fixed hidden vector `u` orthogonal to every difference vector
//! `a^x − a^{x−1}` of a measurement set makes `L` vanish. Copies of the set
//! conjugated by a unitary `U` (Bob's side by `Ū`, which leaves `|ψ_d⟩` and
//! hence `I_N` unchanged) cover other directions. Two families are accepted
//! as perpendicular when the orthogonal projectors onto their difference
//! spans commute, i.e. the spans are orthogonal apart from their common
//! intersection. For qubits this is the familiar pair of perpendicular
//! great-circle planes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bloch::{bloch_dim, BlochVector, CMatrix, OperatorBasis};
use crate::crypto::basis_to_bloch;
use crate::error::{Error, Result};
use crate::qcorr::{cglmp_bases, ChainedSettings, StateBasis};
use crate::rng::SeedStream;

/// Commutator residual accepted for perpendicular families.
pub const PERPENDICULAR_TOL: f64 = 1e-9;
/// Projection norm below which a family is considered escaped.
pub const ESCAPE_TOL: f64 = 1e-9;

const RANK_TOL: f64 = 1e-8;
const NOVELTY_TOL: f64 = 1e-6;
const SEARCH_SEED: u64 = 0x0f4a_3171_e5ba_5e00;
const MAX_ATTEMPTS: u64 = 64;
const MAX_LM_ITERS: usize = 400;

/// One rotated copy of the chained settings.
#[derive(Clone, Debug)]
pub struct MeasurementFamily {
    unitary: CMatrix,
    alice: Vec<StateBasis>,
    bob: Vec<StateBasis>,
    span: Vec<Vec<f64>>,
}

impl MeasurementFamily {
    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn alice(&self) -> &[StateBasis] {
        &self.alice
    }

    pub fn bob(&self) -> &[StateBasis] {
        &self.bob
    }

    /// Orthonormal basis of the span of Alice's difference vectors.
    pub fn span(&self) -> &[Vec<f64>] {
        &self.span
    }

    pub fn span_dim(&self) -> usize {
        self.span.len()
    }

    /// Norm of the projection of `u` onto the difference span.
    pub fn projection_norm(&self, u: &BlochVector) -> Result<f64> {
        let dim = self.span.first().map(Vec::len).unwrap_or(0);
        if u.coords().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: u.coords().len(),
            });
        }
        Ok(self
            .span
            .iter()
            .map(|q| dot(q, u.coords()).powi(2))
            .sum::<f64>()
            .sqrt())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Adds `v` to the orthonormal set if it has a component of relative size
/// above `tol` outside it. Two Gram–Schmidt passes.
fn extend_orthonormal(basis: &mut Vec<Vec<f64>>, v: &[f64], tol: f64) -> bool {
    let scale = dot(v, v).sqrt();
    if scale == 0.0 {
        return false;
    }
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis.iter() {
            let c = dot(q, &r);
            r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
    let norm = dot(&r, &r).sqrt();
    if norm <= tol * scale {
        return false;
    }
    r.iter_mut().for_each(|x| *x /= norm);
    basis.push(r);
    true
}

/// Orthonormal basis of `span{a^x − a^{x−1}}` over every basis given.
pub fn difference_span(ops: &OperatorBasis, bases: &[StateBasis]) -> Result<Vec<Vec<f64>>> {
    let mut span = Vec::new();
    for b in bases {
        for diff in basis_to_bloch(ops, b)?.differences() {
            extend_orthonormal(&mut span, diff.coords(), RANK_TOL);
        }
    }
    Ok(span)
}

fn projector(span: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(dim, dim);
    for q in span {
        let v = DVector::from_column_slice(q);
        p += &v * v.transpose();
    }
    p
}

/// `max |(P_a P_b − P_b P_a)_{ij}|` for the projectors onto two spans.
pub fn perpendicularity_residual(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let dim = a.first().or(b.first()).map(Vec::len).unwrap_or(0);
    let pa = projector(a, dim);
    let pb = projector(b, dim);
    (&pa * &pb - &pb * &pa).abs().max()
}

fn hermitian_from_params(d: usize, p: &[f64]) -> CMatrix {
    let mut h = CMatrix::zeros(d, d);
    let mut idx = 0;
    for j in 0..d {
        h[(j, j)] = Complex64::new(p[idx], 0.0);
        idx += 1;
    }
    for j in 0..d {
        for k in j + 1..d {
            let z = Complex64::new(p[idx], p[idx + 1]);
            h[(j, k)] = z;
            h[(k, j)] = z.conj();
            idx += 2;
        }
    }
    h
}

/// `exp(iH)` through the spectral decomposition, unitary to rounding.
fn unitary_from_params(d: usize, p: &[f64]) -> CMatrix {
    let eig = hermitian_from_params(d, p).symmetric_eigen();
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        eig.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, *l)),
    ));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Image of an orthonormal Bloch set under `ρ ↦ U ρ U†`.
struct Rotator<'a> {
    ops: &'a OperatorBasis,
    operators: Vec<CMatrix>,
}

impl<'a> Rotator<'a> {
    fn new(ops: &'a OperatorBasis, span: &[Vec<f64>]) -> Result<Self> {
        let operators = span.iter().map(|q| ops.combine(q)).collect::<Result<_>>()?;
        Ok(Rotator { ops, operators })
    }

    fn rotate(&self, u: &CMatrix) -> Vec<Vec<f64>> {
        let ud = u.adjoint();
        self.operators
            .iter()
            .map(|m| {
                let rotated = u * m * &ud;
                self.ops.expectations(&rotated).into_iter().map(|t| t / 2.0).collect()
            })
            .collect()
    }
}

/// Strict upper triangle of `[P_j, P]` for every fixed span `j`. The
/// commutator rather than a polynomial in `Q_jᵀ Q` keeps the residual linear
/// in the distance to a solution, so the tolerance is reachable.
fn commutation_residual(fixed: &[Vec<Vec<f64>>], candidate: &[Vec<f64>]) -> Vec<f64> {
    let dim = candidate.first().map(Vec::len).unwrap_or(0);
    let p = projector(candidate, dim);
    let mut out = Vec::new();
    for other in fixed {
        let q = projector(other, dim);
        let c = &q * &p - &p * &q;
        for i in 0..dim {
            for j in i + 1..dim {
                out.push(c[(i, j)]);
            }
        }
    }
    out
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Levenberg–Marquardt on `residual(p)` with a central-difference Jacobian.
fn levenberg_marquardt<F>(mut p: Vec<f64>, residual: F) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = p.len();
    let mut r = residual(&p);
    let mut cost = sq_norm(&r);
    let mut mu = 1e-3;
    let h = 1e-7;
    for _ in 0..MAX_LM_ITERS {
        if cost < 1e-28 || mu > 1e14 {
            break;
        }
        let mut jac = DMatrix::zeros(r.len(), m);
        for k in 0..m {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[k] += h;
            minus[k] -= h;
            let (rp, rm) = (residual(&plus), residual(&minus));
            for i in 0..r.len() {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * rv;
        loop {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += mu * (1.0 + jtj[(k, k)]);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&jtr)),
                None => {
                    mu *= 4.0;
                    if mu > 1e14 {
                        break;
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let tr = residual(&trial);
            let tc = sq_norm(&tr);
            if tc < cost {
                p = trial;
                r = tr;
                cost = tc;
                mu = (mu / 3.0).max(1e-15);
                break;
            }
            mu *= 4.0;
            if mu > 1e14 {
                break;
            }
        }
    }
    (p, cost)
}

fn conjugate(u: &CMatrix) -> CMatrix {
    u.map(|z| z.conj())
}

fn build_family(
    ops: &OperatorBasis,
    alice: &[StateBasis],
    bob: &[StateBasis],
    unitary: CMatrix,
) -> Result<MeasurementFamily> {
    let bar = conjugate(&unitary);
    let alice: Vec<StateBasis> = alice.iter().map(|b| b.transformed(&unitary)).collect();
    let bob = bob.iter().map(|b| b.transformed(&bar)).collect();
    let span = difference_span(ops, &alice)?;
    Ok(MeasurementFamily {
        unitary,
        alice,
        bob,
        span,
    })
}

/// `k` copies of the chained settings with pairwise perpendicular
/// difference spans. The first family is the input itself.
///
/// Each added family must be perpendicular to and differ from every earlier
/// one; among the converged starts the one adding the most new directions to
/// the union of spans wins. The conjugating unitaries are found by a seeded
/// multi-start least-squares search; when no start converges an error is
/// returned.
pub fn multi_plane_sets(settings: &ChainedSettings, k: usize) -> Result<Vec<MeasurementFamily>> {
    let d = settings.d();
    let dim = bloch_dim(d);
    if k == 0 || k > dim - 1 {
        return Err(Error::InvalidArgument(format!(
            "number of families must lie in 1..={}, got {k}",
            dim - 1
        )));
    }
    let ops = OperatorBasis::generate(d)?;
    let bases = cglmp_bases(settings);
    let first = build_family(&ops, &bases.alice, &bases.bob, CMatrix::identity(d, d))?;
    let rotator = Rotator::new(&ops, &first.span)?;
    let first_dim = first.span.len();
    let mut union: Vec<Vec<f64>> = Vec::new();
    for q in &first.span {
        extend_orthonormal(&mut union, q, NOVELTY_TOL);
    }
    let mut families = vec![first];
    let stream = SeedStream::new(SEARCH_SEED);

    for index in 1..k {
        let spans: Vec<Vec<Vec<f64>>> = families.iter().map(|f| f.span.clone()).collect();
        // best candidate so far and how many directions it adds to the union
        let mut found: Option<(CMatrix, usize)> = None;
        let max_growth = first_dim.min(dim - union.len());
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = stream.substream(((index as u64) << 32) | attempt);
            let start: Vec<f64> = (0..d * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let (params, _) = levenberg_marquardt(start, |p| {
                commutation_residual(&spans, &rotator.rotate(&unitary_from_params(d, p)))
            });
            let unitary = unitary_from_params(d, &params);
            let candidate = rotator.rotate(&unitary);
            if spans
                .iter()
                .any(|s| perpendicularity_residual(s, &candidate) > PERPENDICULAR_TOL)
            {
                continue;
            }
            let distinct = spans.iter().all(|s| {
                let mut joint = s.clone();
                for q in &candidate {
                    extend_orthonormal(&mut joint, q, NOVELTY_TOL);
                }
                joint.len() > s.len()
            });
            if !distinct {
                continue;
            }
            let mut grown = union.clone();
            for q in &candidate {
                extend_orthonormal(&mut grown, q, NOVELTY_TOL);
            }
            let growth = grown.len() - union.len();
            if found.as_ref().is_none_or(|f| growth > f.1) {
                found = Some((unitary, growth));
                if growth == max_growth {
                    break;
                }
            }
        }
        let found = found.map(|f| f.0);
        let unitary = found.ok_or_else(|| {
            Error::ConstructionFailed(format!(
                "no perpendicular family {} found for d = {d}, N = {}",
                index + 1,
                settings.n()
            ))
        })?;
        let family = build_family(&ops, &bases.alice, &bases.bob, unitary)?;
        for q in &family.span {
            extend_orthonormal(&mut union, q, NOVELTY_TOL);
        }
        families.push(family);
    }
    Ok(families)
}

/// Per-family projection of a fixed hidden vector onto the difference spans.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeReport {
    pub projections: Vec<f64>,
    /// `true` where the projection is below [`ESCAPE_TOL`], so `u` escapes
    /// that family.
    pub flagged: Vec<bool>,
}

impl EscapeReport {
    /// Whether at least one family sees `u`.
    pub fn caught(&self) -> bool {
        self.flagged.iter().any(|f| !f)
    }
}

pub fn fixed_u_escape_test(u: &BlochVector, families: &[MeasurementFamily]) -> Result<EscapeReport> {
    if (u.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("hidden vector must be unit, norm {}", u.norm())));
    }
    let projections = families
        .iter()
        .map(|f| f.projection_norm(u))
        .collect::<Result<Vec<_>>>()?;
    let flagged = projections.iter().map(|p| *p < ESCAPE_TOL).collect();
    Ok(EscapeReport {
        projections,
        flagged,
    })
}
