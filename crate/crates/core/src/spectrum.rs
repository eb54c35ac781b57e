//! The NP operator `K*` on the mean-zero span of `{ζ_{±k}}_{1≤k≤N}`.
//!
//! In the density basis `ζ_m = |m|^{1/2} e^{imθ}/h(ρ₀,θ)` the operator acts by
//!
//! ```text
//! K*[ζ_m]  = Σ_k G_{k,m} ζ_{-k},      K*[ζ_{-m}] = Σ_k conj(G_{k,m}) ζ_k,
//! G_{k,m}  = μ_{k,m} / (2 γ^{m+k}).
//! ```
//!
//! With coefficients ordered `(b_1..b_N, b_{-1}..b_{-N})` this is the Hermitian
//! block matrix `H = [[0, conj(G)], [G, 0]]`, whose eigenvalues are `±σ_i(G)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::conformal::ExteriorMap;
use crate::error::{Error, Result};
use crate::grunsky::{GrunskyTable, SymmetrizedGrunsky};

/// Slack on `σ_max(G) ≤ 1/2`.
pub const NORM_BOUND_SLACK: f64 = 1e-12;

/// Largest allowed `‖Hv − λv‖₂` for returned eigenpairs.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Eigenvalue of `K*` on `ζ_0`, reported separately from the mean-zero spectrum.
pub fn zeta0_action() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedNpMatrix {
    gamma: f64,
    g: DMatrix<Complex64>,
}

impl TruncatedNpMatrix {
    /// `G_{k,m} = μ_{k,m}/(2γ^{m+k})`, after checking the row bound on `μ` and the
    /// norm bound on `G`.
    pub fn assemble(mu: &SymmetrizedGrunsky) -> Result<Self> {
        mu.check_row_bound()?;
        let g = mu.normalized_matrix() * Complex64::new(0.5, 0.0);
        let mat = Self {
            gamma: mu.gamma(),
            g,
        };
        let sigma = mat.norm()?;
        if sigma > 0.5 + NORM_BOUND_SLACK {
            return Err(Error::NormBound { sigma });
        }
        Ok(mat)
    }

    /// Recursion → symmetrization → assembly for an `N`-window of `map`.
    pub fn for_map(map: &ExteriorMap, n: usize) -> Result<Self> {
        let table = GrunskyTable::recursive(map, n)?;
        Self::assemble(&SymmetrizedGrunsky::new(&table)?)
    }

    /// Wraps an explicit block without the bound checks.
    pub fn from_matrix(gamma: f64, g: DMatrix<Complex64>) -> Self {
        assert!(g.is_square());
        Self { gamma, g }
    }

    pub fn size(&self) -> usize {
        self.g.nrows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `G_{k,m}`, 1-indexed.
    pub fn entry(&self, k: usize, m: usize) -> Complex64 {
        self.g[(k - 1, m - 1)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    /// Leading `n × n` window.
    pub fn window(&self, n: usize) -> Self {
        Self {
            gamma: self.gamma,
            g: self.g.view((0, 0), (n, n)).into_owned(),
        }
    }

    /// `σ_max(G)`.
    pub fn norm(&self) -> Result<f64> {
        Ok(singular_values(&self.g)?.first().copied().unwrap_or(0.0))
    }

    /// The full `2N × 2N` Hermitian operator on `span{ζ_{±k}}`.
    pub fn hermitian_block(&self) -> DMatrix<Complex64> {
        let n = self.size();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            for m in 0..n {
                let g = self.g[(k, m)];
                h[(n + k, m)] = g;
                h[(k, n + m)] = g.conj();
            }
        }
        h
    }

    /// Eigenvalues `(+σ_1, −σ_1, +σ_2, −σ_2, …)` with eigenvectors built from the
    /// singular vectors of `G`.
    ///
    /// For `G v = σ u` and (by symmetry) `conj(G) u = σ v`, the vectors
    /// `(v, ±u)/√2` are eigenvectors of `H` for `±σ`.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let n = self.size();
        if n == 0 {
            return Ok(Spectrum::from_eigenvalues(Vec::new(), zeta0_action()));
        }
        let svd = SVD::try_new(self.g.clone(), true, true, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::EigenSolver("SVD did not converge".into()))?;
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested V^H");
        let h = self.hermitian_block();
        let scale = std::f64::consts::FRAC_1_SQRT_2;

        let mut eigenvalues = Vec::with_capacity(2 * n);
        let mut vectors = Vec::with_capacity(2 * n);
        let mut max_residual = 0.0f64;
        for i in 0..n {
            let sigma = svd.singular_values[i];
            let vi: DVector<Complex64> = v_t.row(i).adjoint();
            let ui: DVector<Complex64> = u.column(i).into_owned();
            for sign in [1.0, -1.0] {
                let mut x = DVector::zeros(2 * n);
                x.rows_mut(0, n).copy_from(&(&vi * Complex64::new(scale, 0.0)));
                x.rows_mut(n, n)
                    .copy_from(&(&ui * Complex64::new(sign * scale, 0.0)));
                fix_phase(&mut x);
                let lambda = sign * sigma;
                let r = (&h * &x - &x * Complex64::new(lambda, 0.0)).norm();
                max_residual = max_residual.max(r);
                eigenvalues.push(lambda);
                vectors.push(x);
            }
        }
        if max_residual > EIGEN_RESIDUAL_TOLERANCE {
            return Err(Error::EigenResidual(max_residual));
        }
        Ok(Spectrum {
            eigenvalues,
            vectors: Some(vectors),
            zeta0_eigenvalue: zeta0_action(),
            max_residual,
        })
    }

    /// Eigenvalues of the Hermitian block by a direct dense eigensolve, sorted
    /// descending. Independent of the SVD route in [`Self::spectrum`].
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.hermitian_block());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// Coefficients of `K*φ`.
    pub fn apply(&self, phi: &DensityCoefficients) -> Result<DensityCoefficients> {
        let n = self.size();
        if phi.size() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: phi.size(),
            });
        }
        let pos = DVector::from_column_slice(&phi.positive);
        let neg = DVector::from_column_slice(&phi.negative);
        let out_neg = &self.g * pos;
        let out_pos = self.g.map(|x| x.conj()) * neg;
        Ok(DensityCoefficients {
            positive: out_pos.iter().copied().collect(),
            negative: out_neg.iter().copied().collect(),
        })
    }

    /// `‖(I − P_{N_cut}) K*‖` inside the window: the largest singular value of
    /// rows `N_cut+1..N` of `G`.
    pub fn tail_norm(&self, n_cut: usize) -> Result<f64> {
        let n = self.size();
        if n_cut >= n {
            return Err(Error::InvalidParameter(format!(
                "tail cut {n_cut} must be below the window size {n}"
            )));
        }
        let rows = self.g.rows(n_cut, n - n_cut).into_owned();
        Ok(singular_values(&rows)?.first().copied().unwrap_or(0.0))
    }
}

/// Tail norm straight from the symmetrized coefficients.
pub fn tail_norm(mu: &SymmetrizedGrunsky, n_cut: usize) -> Result<f64> {
    let g = mu.normalized_matrix() * Complex64::new(0.5, 0.0);
    TruncatedNpMatrix::from_matrix(mu.gamma(), g).tail_norm(n_cut)
}

fn singular_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenSolver("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Rotates `x` so its first non-negligible coefficient is real and positive.
fn fix_phase(x: &mut DVector<Complex64>) {
    let norm = x.norm();
    if norm == 0.0 {
        return;
    }
    if let Some(lead) = x.iter().find(|c| c.norm() > 1e-12 * norm).copied() {
        let phase = lead.conj() / lead.norm();
        x.iter_mut().for_each(|c| *c *= phase);
    }
}

/// Ordered eigenvalues `λ_1, λ_2, …` with `|λ_{2k−1}| = |λ_{2k}|` and, when
/// available, eigenvectors over `(ζ_1..ζ_N, ζ_{-1}..ζ_{-N})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub vectors: Option<Vec<DVector<Complex64>>>,
    pub zeta0_eigenvalue: f64,
    /// Largest eigenpair residual `‖Hv − λv‖₂` (zero when no vectors are held).
    pub max_residual: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, zeta0_eigenvalue: f64) -> Self {
        Self {
            eigenvalues,
            vectors: None,
            zeta0_eigenvalue,
            max_residual: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_k`, 1-indexed.
    pub fn get(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|x| x.abs()).collect()
    }

    /// `|λ_{2k}|` for `k ≥ 1`; the magnitude of the `k`-th pair.
    pub fn pair_magnitude(&self, k: usize) -> f64 {
        self.eigenvalues[2 * k - 1].abs()
    }

    pub fn pair_count(&self) -> usize {
        self.eigenvalues.len() / 2
    }
}

/// Density coefficients `b_m`, `m ∈ {−N..−1, 1..N}`; `b_0` is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCoefficients {
    /// `b_1 … b_N`.
    pub positive: Vec<Complex64>,
    /// `b_{-1} … b_{-N}`.
    pub negative: Vec<Complex64>,
}

impl DensityCoefficients {
    pub fn zeros(n: usize) -> Self {
        Self {
            positive: vec![Complex64::default(); n],
            negative: vec![Complex64::default(); n],
        }
    }

    /// Coefficients of `ζ_m` for `m ≠ 0`.
    pub fn unit(m: i64, n: usize) -> Result<Self> {
        let mut out = Self::zeros(n);
        out.set(m, Complex64::new(1.0, 0.0))?;
        Ok(out)
    }

    /// Splits a stacked vector `(b_1..b_N, b_{-1}..b_{-N})`.
    pub fn from_stacked(x: &DVector<Complex64>) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: x.len() + 1,
                got: x.len(),
            });
        }
        let n = x.len() / 2;
        Ok(Self {
            positive: x.rows(0, n).iter().copied().collect(),
            negative: x.rows(n, n).iter().copied().collect(),
        })
    }

    pub fn stacked(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            2 * self.size(),
            self.positive.iter().chain(&self.negative).copied(),
        )
    }

    pub fn size(&self) -> usize {
        self.positive.len()
    }

    fn slot(&self, m: i64) -> Result<(bool, usize)> {
        let n = self.size();
        let idx = m.unsigned_abs() as usize;
        if m == 0 || idx > n {
            return Err(Error::InvalidParameter(format!(
                "density index {m} outside ±1..={n}"
            )));
        }
        Ok((m > 0, idx - 1))
    }

    pub fn get(&self, m: i64) -> Result<Complex64> {
        let (pos, i) = self.slot(m)?;
        Ok(if pos { self.positive[i] } else { self.negative[i] })
    }

    pub fn set(&mut self, m: i64, value: Complex64) -> Result<()> {
        let (pos, i) = self.slot(m)?;
        if pos {
            self.positive[i] = value;
        } else {
            self.negative[i] = value;
        }
        Ok(())
    }

    /// `K^{-1/2}` norm, which is the ℓ² norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.positive
            .iter()
            .chain(&self.negative)
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ b_m ζ_m(θ)` on the boundary of `map`.
    pub fn evaluate(&self, map: &ExteriorMap, theta: f64) -> Result<Complex64> {
        let h = map.scale_factor(map.rho0(), theta)?;
        let mut acc = Complex64::default();
        for (i, (bp, bn)) in self.positive.iter().zip(&self.negative).enumerate() {
            let k = (i + 1) as f64;
            let e = Complex64::from_polar(k.sqrt(), k * theta);
            acc += bp * e + bn * e.conj();
        }
        Ok(acc / h)
    }
}
