//! The generalized Leggett-type crypto-nonlocal model.
//!
//! Each local hidden state `u` fixes Alice's marginals through
//!
//! ```text
//!     P(X = x | a) = [1 + η (d − 1) a^x · u] / d
//! ```
//!
//! and no-signaling then forces the Leggett-type constraint `L ≤ I_N` with
//!
//! ```text
//!     L = η (d − 1)/d² Σ_x ⟨|(a^x − a^{x−1}) · u|⟩_u,
//! ```
//!
//! the outcome index taken cyclically.

mod families;

pub use families::{
    difference_span, fixed_u_escape_test, multi_plane_sets, perpendicularity_residual,
    EscapeReport, MeasurementFamily,
};

use rayon::prelude::*;

use crate::bloch::{
    bloch_dim, expected_abs_projection, sample_haar_pure, sample_sphere, state_to_bloch,
    BlochVector, OperatorBasis, PureState,
};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::qcorr::{quantum_chained_in, StateBasis};
use crate::rng::SeedStream;

/// Tolerance for identities among the Bloch vectors of a measurement.
pub const BASIS_TOL: f64 = 1e-10;

/// Distribution of a local hidden state.
#[derive(Clone, Debug, PartialEq)]
pub enum HiddenMode {
    /// Uniform over the whole sphere `S^{d²−2}`, physical or not.
    SphereUniform,
    /// Bloch vectors of Haar-random pure states.
    HaarPure,
    /// A single fixed unit vector.
    Fixed(BlochVector),
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("purity must lie in (0, 1], got {eta}")))
    }
}

fn check_mode(d: usize, mode: &HiddenMode) -> Result<()> {
    if let HiddenMode::Fixed(u) = mode {
        if u.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: u.dimension(),
            });
        }
        if (u.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "fixed hidden vector must be unit, norm {}",
                u.norm()
            )));
        }
    }
    Ok(())
}

/// Parameters of the crypto-nonlocal model.
///
/// Bob's hidden state `v` never enters `L`; its mode is carried so that a
/// model description is complete.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalModel {
    d: usize,
    eta: f64,
    u_mode: HiddenMode,
    v_mode: HiddenMode,
}

impl LocalModel {
    pub fn new(d: usize, eta: f64, u_mode: HiddenMode) -> Result<Self> {
        Self::with_bob_mode(d, eta, u_mode, HiddenMode::SphereUniform)
    }

    pub fn with_bob_mode(d: usize, eta: f64, u_mode: HiddenMode, v_mode: HiddenMode) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        check_eta(eta)?;
        check_mode(d, &u_mode)?;
        check_mode(d, &v_mode)?;
        Ok(LocalModel {
            d,
            eta,
            u_mode,
            v_mode,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn u_mode(&self) -> &HiddenMode {
        &self.u_mode
    }

    pub fn v_mode(&self) -> &HiddenMode {
        &self.v_mode
    }
}

/// Bloch vectors `a^0 … a^{d−1}` of a projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasisBloch {
    d: usize,
    vectors: Vec<BlochVector>,
}

impl MeasurementBasisBloch {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[BlochVector] {
        &self.vectors
    }

    /// `a^x − a^{x−1}` with `x − 1` taken mod `d`.
    pub fn difference(&self, x: usize) -> BlochVector {
        let prev = (x + self.d - 1) % self.d;
        self.vectors[x % self.d]
            .sub(&self.vectors[prev])
            .expect("vectors share a dimension")
    }

    pub fn differences(&self) -> Vec<BlochVector> {
        (0..self.d).map(|x| self.difference(x)).collect()
    }

    /// `|Σ_x a^x|`.
    pub fn completeness_residual(&self) -> f64 {
        let dim = bloch_dim(self.d);
        (0..dim)
            .map(|i| self.vectors.iter().map(|v| v.coords()[i]).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `max_{x ≠ x'} |a^x · a^{x'} + 1/(d − 1)|`.
    pub fn overlap_residual(&self) -> f64 {
        let target = -1.0 / (self.d as f64 - 1.0);
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for b in &self.vectors[i + 1..] {
                worst = worst.max((a.dot(b).unwrap() - target).abs());
            }
        }
        worst
    }

    /// `max_x | |a^x − a^{x−1}| − sqrt(2d/(d − 1)) |`.
    pub fn difference_norm_residual(&self) -> f64 {
        let target = (2.0 * self.d as f64 / (self.d as f64 - 1.0)).sqrt();
        self.differences()
            .iter()
            .map(|v| (v.norm() - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Bloch vectors of an orthonormal measurement basis.
pub fn basis_to_bloch(ops: &OperatorBasis, basis: &StateBasis) -> Result<MeasurementBasisBloch> {
    let d = basis.dimension();
    if ops.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: ops.dimension(),
            found: d,
        });
    }
    let gram = basis.gram_residual();
    if gram > BASIS_TOL {
        return Err(Error::NotOrthonormal(gram));
    }
    let vectors = basis
        .vectors()
        .iter()
        .map(|v| state_to_bloch(ops, &PureState::new(v.clone())?))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementBasisBloch { d, vectors })
}

/// Model marginal for one outcome. `valid` is false when some outcome of the
/// basis would get a negative probability, which happens for non-physical
/// sphere points; values are reported unclamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Marginal {
    pub value: f64,
    pub valid: bool,
}

/// `[1 + η (d − 1) a^x · u] / d`.
pub fn marginal(x: usize, basis: &MeasurementBasisBloch, u: &BlochVector, eta: f64) -> Result<Marginal> {
    check_eta(eta)?;
    let d = basis.d;
    if x >= d {
        return Err(Error::IndexOutOfRange { index: x, n: d });
    }
    let rule = |a: &BlochVector| -> Result<f64> {
        Ok((1.0 + eta * (d as f64 - 1.0) * a.dot(u)?) / d as f64)
    };
    let all = basis.vectors.iter().map(rule).collect::<Result<Vec<_>>>()?;
    Ok(Marginal {
        value: all[x],
        valid: all.iter().all(|p| *p >= -1e-12),
    })
}

/// Estimate of `L` with its standard error (zero for exact values).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

const MC_BATCH: u64 = 4096;

/// `L` for a measurement basis by Monte Carlo over the hidden state.
///
/// Sample `i` draws from substream `i` of `seed`; batches are reduced in
/// index order, so the result does not depend on the thread count.
pub fn leggett_l_mc(
    basis: &MeasurementBasisBloch,
    model: &LocalModel,
    n_samples: u64,
    seed: SeedStream,
) -> Result<BoundEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let d = model.d;
    if basis.d != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: basis.d,
        });
    }
    let diffs: Vec<Vec<f64>> = basis.differences().into_iter().map(BlochVector::into_coords).collect();
    let prefactor = model.eta * (d as f64 - 1.0) / (d * d) as f64;
    let integrand = |u: &[f64]| -> f64 {
        prefactor
            * diffs
                .iter()
                .map(|w| w.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().abs())
                .sum::<f64>()
    };

    if let HiddenMode::Fixed(u) = &model.u_mode {
        return Ok(BoundEstimate {
            value: integrand(u.coords()),
            std_error: 0.0,
            samples: 1,
        });
    }

    let ops = match model.u_mode {
        HiddenMode::HaarPure => Some(OperatorBasis::generate(d)?),
        _ => None,
    };
    let dim = bloch_dim(d);
    let batches = n_samples.div_ceil(MC_BATCH);
    let partial = (0..batches)
        .into_par_iter()
        .map(|batch| -> Result<(CompensatedSum, CompensatedSum)> {
            let mut s1 = CompensatedSum::new();
            let mut s2 = CompensatedSum::new();
            let end = ((batch + 1) * MC_BATCH).min(n_samples);
            for i in batch * MC_BATCH..end {
                let mut rng = seed.substream(i);
                let f = match &ops {
                    None => integrand(&sample_sphere(dim, &mut rng)),
                    Some(ops) => {
                        let psi = sample_haar_pure(d, &mut rng)?;
                        integrand(state_to_bloch(ops, &psi)?.coords())
                    }
                };
                s1.add(f);
                s2.add(f * f);
            }
            Ok((s1, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s1 = CompensatedSum::new();
    let mut s2 = CompensatedSum::new();
    for (a, b) in &partial {
        s1.merge(a);
        s2.merge(b);
    }
    let n = n_samples as f64;
    let mean = s1.value() / n;
    let std_error = if n_samples > 1 {
        let var = ((s2.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(BoundEstimate {
        value: mean,
        std_error,
        samples: n_samples,
    })
}

/// Closed form of `L` for `u` uniform on the sphere:
/// `η (d − 1)/d² · d · sqrt(2d/(d − 1)) · κ_{d²−1}`.
pub fn leggett_l_analytic(d: usize, eta: f64) -> Result<BoundEstimate> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    check_eta(eta)?;
    let df = d as f64;
    let step = (2.0 * df / (df - 1.0)).sqrt();
    let value = eta * (df - 1.0) / (df * df) * df * step * expected_abs_projection(bloch_dim(d))?;
    Ok(BoundEstimate {
        value,
        std_error: 0.0,
        samples: 0,
    })
}

/// The weak bound `L ≥ η · 2(d − 1)/d³`.
pub fn weak_lower_bound(d: usize, eta: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    check_eta(eta)?;
    let df = d as f64;
    Ok(eta * 2.0 * (df - 1.0) / df.powi(3))
}

/// Whether an observed `I_N` falsifies the model; equality does not.
pub fn is_violation(i_n: f64, bound: f64) -> bool {
    i_n < bound
}

/// Smallest `N ≤ n_max` whose exact quantum `I_N` lies strictly below
/// [`weak_lower_bound`].
pub fn find_ncrit(d: usize, eta: f64, n_max: usize) -> Result<usize> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be >= 2, got {n_max}")));
    }
    let bound = weak_lower_bound(d, eta)?;
    let mut last = f64::NAN;
    for n in 1..=n_max {
        last = quantum_chained_in(d, n)?;
        if is_violation(last, bound) {
            return Ok(n);
        }
    }
    Err(Error::NotFound {
        n_max,
        gap: last - bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcorr::{cglmp_bases, ChainedSettings};
    use crate::bloch::CVector;
    use num_complex::Complex64;

    fn computational(d: usize) -> StateBasis {
        StateBasis::new(
            (0..d)
                .map(|k| {
                    let mut v = CVector::zeros(d);
                    v[k] = Complex64::new(1.0, 0.0);
                    v
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn qubit_computational_basis_is_antipodal() {
        let ops = OperatorBasis::generate(2).unwrap();
        let m = basis_to_bloch(&ops, &computational(2)).unwrap();
        assert_eq!(m.vectors()[0].coords(), &[0.0, 0.0, 1.0]);
        assert_eq!(m.vectors()[1].coords(), &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn cglmp_bloch_vectors_satisfy_simplex_identities() {
        for d in 2..=6 {
            let ops = OperatorBasis::generate(d).unwrap();
            let bases = cglmp_bases(&ChainedSettings::new(d, 5).unwrap());
            for b in bases.alice.iter().chain(&bases.bob) {
                let m = basis_to_bloch(&ops, b).unwrap();
                assert!(m.completeness_residual() < BASIS_TOL);
                assert!(m.overlap_residual() < BASIS_TOL);
                assert!(m.difference_norm_residual() < BASIS_TOL);
            }
        }
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let ops = OperatorBasis::generate(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let v0 = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let v1 = CVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
        let b = StateBasis::new(vec![v0, v1]).unwrap();
        assert!(matches!(basis_to_bloch(&ops, &b), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn marginal_reference_values() {
        let d = 3;
        let ops = OperatorBasis::generate(d).unwrap();
        let m = basis_to_bloch(&ops, &computational(d)).unwrap();
        // aligned
        let p = marginal(0, &m, &m.vectors()[0], 1.0).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12 && p.valid);
        // orthogonal outcome state gives zero
        let p = marginal(0, &m, &m.vectors()[1], 1.0).unwrap();
        assert!(p.value.abs() < 1e-12 && p.valid);
        // u ⊥ every a^x: symmetric generator λ_{01} direction
        let mut coords = vec![0.0; 8];
        coords[0] = 1.0;
        let u = BlochVector::new(d, coords).unwrap();
        for x in 0..d {
            for eta in [0.3, 1.0] {
                assert!((marginal(x, &m, &u, eta).unwrap().value - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        // the antipode of a^0 is not a state: flagged, not clamped
        let neg = BlochVector::new(d, m.vectors()[0].coords().iter().map(|c| -c).collect()).unwrap();
        let p = marginal(0, &m, &neg, 1.0).unwrap();
        assert!(p.value < 0.0 && !p.valid);
        assert!(marginal(0, &m, &u, 0.0).is_err());
        assert!(marginal(3, &m, &u, 1.0).is_err());
    }

    #[test]
    fn physical_marginals_are_distributions() {
        let stream = SeedStream::new(21);
        for d in 2..=5 {
            let ops = OperatorBasis::generate(d).unwrap();
            let bases = cglmp_bases(&ChainedSettings::new(d, 3).unwrap());
            let m = basis_to_bloch(&ops, &bases.alice[1]).unwrap();
            for i in 0..50 {
                let psi = sample_haar_pure(d, &mut stream.substream(i)).unwrap();
                let u = state_to_bloch(&ops, &psi).unwrap();
                for eta in [0.4, 1.0] {
                    let ps: Vec<f64> = (0..d).map(|x| marginal(x, &m, &u, eta).unwrap().value).collect();
                    assert!(ps.iter().all(|p| (-1e-10..=1.0 + 1e-10).contains(p)));
                    assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn weak_bound_values() {
        assert!((weak_lower_bound(3, 1.0).unwrap() - 4.0 / 27.0).abs() < 1e-15);
        assert!((weak_lower_bound(2, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((weak_lower_bound(3, 0.5).unwrap() - 2.0 / 27.0).abs() < 1e-15);
        assert!(weak_lower_bound(3, 1.5).is_err());
    }

    #[test]
    fn analytic_l_values() {
        assert!((leggett_l_analytic(2, 1.0).unwrap().value - 0.5).abs() < 1e-13);
        // κ_8 = Γ(4)/(√π Γ(9/2)) = 6 / (√π · 105√π/16) = 32/(35π)
        let kappa8 = 32.0 / (35.0 * std::f64::consts::PI);
        let expect = 2.0 / 3.0 * 3f64.sqrt() * kappa8;
        assert!((leggett_l_analytic(3, 1.0).unwrap().value - expect).abs() < 1e-13);
        assert!((expect - 0.3361).abs() < 1e-4);
    }

    #[test]
    fn fixed_escape_direction_gives_zero() {
        let d = 2;
        let ops = OperatorBasis::generate(d).unwrap();
        let bases = cglmp_bases(&ChainedSettings::new(d, 4).unwrap());
        let m = basis_to_bloch(&ops, &bases.alice[2]).unwrap();
        // CGLMP qubit vectors live in the xy-plane; z escapes
        let u = BlochVector::new(d, vec![0.0, 0.0, 1.0]).unwrap();
        let model = LocalModel::new(d, 1.0, HiddenMode::Fixed(u)).unwrap();
        let est = leggett_l_mc(&m, &model, 10, SeedStream::new(1)).unwrap();
        assert!(est.value.abs() < 1e-12);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn mc_estimate_is_reproducible() {
        let d = 3;
        let ops = OperatorBasis::generate(d).unwrap();
        let bases = cglmp_bases(&ChainedSettings::new(d, 2).unwrap());
        let m = basis_to_bloch(&ops, &bases.alice[0]).unwrap();
        let model = LocalModel::new(d, 1.0, HiddenMode::SphereUniform).unwrap();
        let a = leggett_l_mc(&m, &model, 10_000, SeedStream::new(9)).unwrap();
        let b = leggett_l_mc(&m, &model, 10_000, SeedStream::new(9)).unwrap();
        assert_eq!(a, b);
        let analytic = leggett_l_analytic(d, 1.0).unwrap().value;
        assert!((a.value - analytic).abs() < 4.0 * a.std_error);
    }

    #[test]
    fn ncrit_reference_values() {
        assert_eq!(find_ncrit(3, 1.0, 100).unwrap(), 15);
        assert_eq!(find_ncrit(2, 1.0, 100).unwrap(), 5);
        match find_ncrit(3, 0.1, 5) {
            Err(Error::NotFound { n_max: 5, gap }) => assert!(gap > 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(find_ncrit(3, 1.0, 1).is_err());
    }

    #[test]
    fn ncrit_at_half_purity_is_first_crossing() {
        let n = find_ncrit(3, 0.5, 200).unwrap();
        assert!(n >= 15);
        let bound = 2.0 / 27.0;
        assert!(quantum_chained_in(3, n).unwrap() < bound);
        assert!(quantum_chained_in(3, n - 1).unwrap() >= bound);
    }
}
