//! Generalized Bloch-sphere machinery.
//!
//! States of a `d`-level system are expanded in a generalized Gell-Mann
//! basis `{λ_i}` of `d² − 1` traceless Hermitian matrices with
//! `Tr(λ_i λ_j) = 2 δ_ij`. A density matrix is written
//!
//! ```text
//!     ρ = I/d + sqrt((d − 1)/(2d)) Σ_i u_i λ_i
//! ```
//!
//! With this normalization a pure state has `|u| = 1`, and for two pure
//! states `Tr(ρ_a ρ_u) = [1 + (d − 1) a·u] / d`, which is the marginal rule of
//! the crypto-nonlocal model.
//!
//! Basis ordering is fixed: symmetric off-diagonal generators for pairs
//! `(j, k)`, `j < k`, in lexicographic order; then the antisymmetric ones in
//! the same pair order; then the `d − 1` diagonal generators. For `d = 2` this
//! is `(σx, σy, σz)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for algebraic identities (normalization, orthogonality).
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dimension of the Bloch space for a `d`-level system.
pub fn bloch_dim(d: usize) -> usize {
    d * d - 1
}

/// Prefactor `sqrt((d − 1)/(2d))` of the Bloch expansion.
pub fn bloch_scale(d: usize) -> f64 {
    ((d as f64 - 1.0) / (2.0 * d as f64)).sqrt()
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// Sparse label of one generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// `|j⟩⟨k| + |k⟩⟨j|`
    Symmetric(usize, usize),
    /// `−i|j⟩⟨k| + i|k⟩⟨j|`
    Antisymmetric(usize, usize),
    /// `sqrt(2/(l(l+1))) (Σ_{j<l} |j⟩⟨j| − l|l⟩⟨l|)`, `1 ≤ l < d`
    Diagonal(usize),
}

/// Ordered generalized Gell-Mann basis.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dimension: usize,
    generators: Vec<Generator>,
    matrices: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn generate(d: usize) -> Result<Self> {
        check_dim(d)?;
        let mut generators = Vec::with_capacity(bloch_dim(d));
        for j in 0..d {
            for k in j + 1..d {
                generators.push(Generator::Symmetric(j, k));
            }
        }
        for j in 0..d {
            for k in j + 1..d {
                generators.push(Generator::Antisymmetric(j, k));
            }
        }
        for l in 1..d {
            generators.push(Generator::Diagonal(l));
        }
        let matrices = generators.iter().map(|g| dense(d, *g)).collect();
        Ok(OperatorBasis {
            dimension: d,
            generators,
            matrices,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// `Tr(m λ_i)` for every generator, evaluated from the sparse structure.
    pub fn expectations(&self, m: &CMatrix) -> Vec<f64> {
        self.generators
            .iter()
            .map(|g| match *g {
                Generator::Symmetric(j, k) => (m[(k, j)] + m[(j, k)]).re,
                Generator::Antisymmetric(j, k) => {
                    (Complex64::new(0.0, 1.0) * (m[(j, k)] - m[(k, j)])).re
                }
                Generator::Diagonal(l) => {
                    let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
                    let head: f64 = (0..l).map(|j| m[(j, j)].re).sum();
                    norm * (head - l as f64 * m[(l, l)].re)
                }
            })
            .collect()
    }

    /// `Σ_i c_i λ_i`.
    pub fn combine(&self, coords: &[f64]) -> Result<CMatrix> {
        if coords.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: coords.len(),
            });
        }
        let d = self.dimension;
        let mut out = CMatrix::zeros(d, d);
        for (c, m) in coords.iter().zip(&self.matrices) {
            out += m * Complex64::new(*c, 0.0);
        }
        Ok(out)
    }

    /// Largest deviation from Hermiticity, tracelessness and
    /// `Tr(λ_i λ_j) = 2 δ_ij` over the whole basis.
    pub fn identity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.matrices.iter().enumerate() {
            worst = worst.max(max_abs(&(a - a.adjoint())));
            worst = worst.max(a.trace().norm());
            for (j, b) in self.matrices.iter().enumerate() {
                let target = if i == j { 2.0 } else { 0.0 };
                worst = worst.max(((a * b).trace() - target).norm());
            }
        }
        worst
    }
}

fn dense(d: usize, g: Generator) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    match g {
        Generator::Symmetric(j, k) => {
            m[(j, k)] = Complex64::new(1.0, 0.0);
            m[(k, j)] = Complex64::new(1.0, 0.0);
        }
        Generator::Antisymmetric(j, k) => {
            m[(j, k)] = Complex64::new(0.0, -1.0);
            m[(k, j)] = Complex64::new(0.0, 1.0);
        }
        Generator::Diagonal(l) => {
            let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
            for j in 0..l {
                m[(j, j)] = Complex64::new(norm, 0.0);
            }
            m[(l, l)] = Complex64::new(-norm * l as f64, 0.0);
        }
    }
    m
}

/// Point of the generalized Bloch space.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochVector {
    dimension: usize,
    coords: Vec<f64>,
}

impl BlochVector {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if coords.len() != bloch_dim(d) {
            return Err(Error::DimensionMismatch {
                expected: bloch_dim(d),
                found: coords.len(),
            });
        }
        Ok(BlochVector { dimension: d, coords })
    }

    /// Unit vector along the given coordinates.
    pub fn normalized(d: usize, coords: Vec<f64>) -> Result<Self> {
        let mut v = Self::new(d, coords)?;
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero Bloch vector".into()));
        }
        v.coords.iter_mut().for_each(|c| *c /= n);
        Ok(v)
    }

    pub fn zero(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(BlochVector {
            dimension: d,
            coords: vec![0.0; bloch_dim(d)],
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> Result<f64> {
        bloch_overlap(self, other)
    }

    pub fn sub(&self, other: &BlochVector) -> Result<BlochVector> {
        self.same_dim(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect();
        Ok(BlochVector { dimension: self.dimension, coords })
    }

    pub fn add(&self, other: &BlochVector) -> Result<BlochVector> {
        self.same_dim(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(BlochVector { dimension: self.dimension, coords })
    }

    fn same_dim(&self, other: &BlochVector) -> Result<()> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: other.dimension,
            });
        }
        Ok(())
    }

    /// `I/d + sqrt((d−1)/(2d)) Σ u_i λ_i`.
    pub fn to_density(&self, basis: &OperatorBasis) -> Result<CMatrix> {
        if basis.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: basis.dimension(),
                found: self.dimension,
            });
        }
        let d = self.dimension;
        let scaled: Vec<f64> = self.coords.iter().map(|c| c * bloch_scale(d)).collect();
        let mut rho = basis.combine(&scaled)?;
        for j in 0..d {
            rho[(j, j)] += Complex64::new(1.0 / d as f64, 0.0);
        }
        Ok(rho)
    }

    /// Whether the vector is the Bloch vector of a pure state: the
    /// reconstructed matrix is positive semidefinite with rank one.
    pub fn is_pure_state(&self, basis: &OperatorBasis, tol: f64) -> Result<bool> {
        let rho = self.to_density(basis)?;
        let mut eig: Vec<f64> = rho.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let min = *eig.last().unwrap();
        Ok(min >= -tol && (eig[0] - 1.0).abs() <= tol && eig[1].abs() <= tol)
    }
}

/// Normalized pure state of a qudit.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::Unnormalized(n2));
        }
        Ok(PureState { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalize(amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(Error::Unnormalized(0.0));
        }
        Self::new(amplitudes.unscale(n))
    }

    /// Computational basis state `|k⟩`.
    pub fn basis_state(d: usize, k: usize) -> Result<Self> {
        check_dim(d)?;
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, n: d });
        }
        let mut amps = CVector::zeros(d);
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(PureState { amplitudes: amps })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Bloch vector of a pure state.
pub fn state_to_bloch(basis: &OperatorBasis, psi: &PureState) -> Result<BlochVector> {
    let d = psi.dimension();
    if basis.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            found: d,
        });
    }
    let n2 = psi.amplitudes().norm_squared();
    if (n2 - 1.0).abs() > ALGEBRAIC_TOL {
        return Err(Error::Unnormalized(n2));
    }
    let scale = 2.0 * bloch_scale(d);
    let coords = basis
        .expectations(&psi.density())
        .into_iter()
        .map(|t| t / scale)
        .collect();
    BlochVector::new(d, coords)
}

/// Euclidean inner product in Bloch space.
pub fn bloch_overlap(a: &BlochVector, u: &BlochVector) -> Result<f64> {
    if a.dimension != u.dimension {
        return Err(Error::DimensionMismatch {
            expected: a.dimension,
            found: u.dimension,
        });
    }
    Ok(a.coords.iter().zip(&u.coords).map(|(x, y)| x * y).sum())
}

/// Uniform point on `S^{n−1}` (normalized isotropic Gaussian).
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    assert!(n >= 1, "sphere dimension must be at least 1");
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Haar-random pure state (normalized complex Gaussian amplitudes).
pub fn sample_haar_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    check_dim(d)?;
    loop {
        let amps = CVector::from_iterator(
            d,
            (0..d).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
        );
        if amps.norm() > 1e-300 {
            return PureState::normalize(amps);
        }
    }
}

/// `κ_n = E|w·u|` for a fixed unit `w` and `u` uniform on `S^{n−1}`:
/// `Γ(n/2) / (√π Γ((n+1)/2))`.
pub fn expected_abs_projection(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection constant needs n >= 2, got {n}"
        )));
    }
    use statrs::function::gamma::ln_gamma;
    let n = n as f64;
    Ok((ln_gamma(n / 2.0) - ln_gamma((n + 1.0) / 2.0)).exp() / std::f64::consts::PI.sqrt())
}
