//! Faber polynomials and Grunsky coefficients of an exterior map.
//!
//! `F_m(Ψ(w)) − w^m = Σ_{k≥1} c_{m,k} w^{-k}` defines the Grunsky coefficients.
//! Two independent routes are provided: the coefficient recursion
//! ([`GrunskyTable::recursive`]) and a direct composition oracle that samples
//! `F_m∘Ψ` on a circle and reads off the negative Fourier modes
//! ([`GrunskyTable::by_composition`]).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::conformal::ExteriorMap;
use crate::error::{Error, Result};

/// Relative tolerance of the identity `m c_{k,m} = k c_{m,k}`.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Slack allowed on the row bound `Σ_k |μ_{m,k}/γ^{m+k}|² ≤ 1`.
pub const ROW_BOUND_SLACK: f64 = 1e-12;

/// Monomial coefficients of `F_0 … F_N`; row `m` holds the coefficients of
/// `z^0 … z^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaberTable {
    rows: Vec<Vec<Complex64>>,
}

impl FaberTable {
    /// `F_{n+1}(z) = (z − a_0) F_n(z) − Σ_{s=1}^{n} a_s F_{n−s}(z) − n a_n`, `F_0 = 1`.
    pub fn new(map: &ExteriorMap, max_degree: usize) -> Self {
        let mut rows: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0)]];
        for n in 0..max_degree {
            let mut next = vec![Complex64::default(); n + 2];
            for (j, c) in rows[n].iter().enumerate() {
                next[j + 1] += c;
                next[j] -= map.a0() * c;
            }
            for s in 1..=n {
                let a = map.coeff(s);
                if a == Complex64::default() {
                    continue;
                }
                for (j, c) in rows[n - s].iter().enumerate() {
                    next[j] -= a * c;
                }
            }
            next[0] -= map.coeff(n) * n as f64;
            rows.push(next);
        }
        Self { rows }
    }

    pub fn max_degree(&self) -> usize {
        self.rows.len() - 1
    }

    /// Coefficients of `F_m`, lowest degree first.
    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.rows[m]
    }

    /// `F_m(z)` by Horner's rule on the monomial coefficients.
    pub fn eval(&self, m: usize, z: Complex64) -> Complex64 {
        self.rows[m]
            .iter()
            .rev()
            .fold(Complex64::default(), |acc, c| acc * z + c)
    }
}

/// `F_0(z) … F_n(z)` at a single point, evaluated by the three-term-with-history
/// recursion directly on values. Forward recursion is stable here because the
/// wanted solution dominates near and outside the boundary.
pub fn faber_values(map: &ExteriorMap, z: Complex64, n: usize) -> Vec<Complex64> {
    faber_values_with_derivative(map, z, n).0
}

/// Values and derivatives `F_m'(z)` for `m = 0..=n`.
pub fn faber_values_with_derivative(
    map: &ExteriorMap,
    z: Complex64,
    n: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut f = Vec::with_capacity(n + 1);
    let mut df = Vec::with_capacity(n + 1);
    f.push(Complex64::new(1.0, 0.0));
    df.push(Complex64::default());
    let shifted = z - map.a0();
    for j in 0..n {
        let mut v = shifted * f[j] - map.coeff(j) * j as f64;
        let mut dv = f[j] + shifted * df[j];
        for s in 1..=j {
            let a = map.coeff(s);
            if a != Complex64::default() {
                v -= a * f[j - s];
                dv -= a * df[j - s];
            }
        }
        f.push(v);
        df.push(dv);
    }
    (f, df)
}

/// `c_{m,k}` for `1 ≤ m, k ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrunskyTable {
    gamma: f64,
    c: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    /// `max |m c_{k,m} − k c_{m,k}|`.
    pub max: f64,
    pub worst: (usize, usize),
    /// Scale used for the relative check, `1 + max|c|`.
    pub scale: f64,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        self.max / self.scale
    }

    pub fn holds(&self) -> bool {
        self.max <= IDENTITY_TOLERANCE * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionOptions {
    pub radius: f64,
    pub samples: usize,
}

impl CompositionOptions {
    /// Sampling circle just outside `|w| = γ`.
    ///
    /// `F_m(Ψ(w)) − w^m` cancels a quantity of size `R^m`, so absolute errors in
    /// `c_{m,k}` grow like `ε·R^{m+k}`; keeping `R^{2N}` below `e` holds that to a
    /// few ulps. Aliasing is handled by the sample count instead.
    pub fn default_for(map: &ExteriorMap, n: usize) -> Self {
        Self {
            radius: map.gamma() * (1.0 + 0.5 / n.max(1) as f64),
            samples: (8 * n).max(256),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionDiagnostics {
    /// Largest negative Fourier mode beyond index `N`, scaled to `c`.
    pub aliasing: f64,
    /// Largest positive Fourier mode left after subtracting `w^m` (should vanish).
    pub cancellation: f64,
    pub aliasing_warning: bool,
}

impl GrunskyTable {
    pub fn from_matrix(gamma: f64, c: DMatrix<Complex64>) -> Self {
        assert!(c.is_square());
        Self { gamma, c }
    }

    /// Coefficient recursion seeded with `c_{n,1} = n a_n`:
    ///
    /// `c_{m,k+1} = c_{m+1,k} − a_{m+k} + Σ_{s=1}^{m−1} a_{m−s} c_{s,k} − Σ_{s=1}^{k−1} a_{k−s} c_{m,s}`.
    ///
    /// Column `k+1` needs row `m+1` of column `k`, so column 1 is seeded down to
    /// row `2N−1` and each later column is one row shorter; rows beyond `N` are
    /// discarded at the end.
    pub fn recursive(map: &ExteriorMap, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Grunsky table needs N >= 1".into()));
        }
        let rows = 2 * n - 1;
        let len = map.coeffs().len();
        // work[m][k], 1-indexed in both; index 0 unused
        let mut work = vec![vec![Complex64::default(); n + 1]; rows + 2];
        for (m, row) in work.iter_mut().enumerate().take(rows + 1).skip(1) {
            row[1] = map.tail_coeff(m) * m as f64;
        }
        for k in 1..n {
            for m in 1..=(rows - k) {
                let mut v = work[m + 1][k] - map.tail_coeff(m + k);
                for s in m.saturating_sub(len).max(1)..m {
                    v += map.tail_coeff(m - s) * work[s][k];
                }
                for s in k.saturating_sub(len).max(1)..k {
                    v -= map.tail_coeff(k - s) * work[m][s];
                }
                work[m][k + 1] = v;
            }
        }
        let c = DMatrix::from_fn(n, n, |i, j| work[i + 1][j + 1]);
        Ok(Self {
            gamma: map.gamma(),
            c,
        })
    }

    /// Composition oracle with default options.
    pub fn by_composition_default(map: &ExteriorMap, n: usize) -> Result<(Self, CompositionDiagnostics)> {
        Self::by_composition(map, n, CompositionOptions::default_for(map, n))
    }

    /// Samples `F_m(Ψ(w)) − w^m` on `|w| = R` and extracts `c_{m,k} R^{-k}` as
    /// negative Fourier modes.
    pub fn by_composition(
        map: &ExteriorMap,
        n: usize,
        opts: CompositionOptions,
    ) -> Result<(Self, CompositionDiagnostics)> {
        if n == 0 {
            return Err(Error::InvalidParameter("Grunsky table needs N >= 1".into()));
        }
        if !(opts.radius > map.gamma()) {
            return Err(Error::InvalidParameter(format!(
                "composition radius {} must exceed gamma {}",
                opts.radius,
                map.gamma()
            )));
        }
        if opts.samples < 4 * n {
            return Err(Error::InvalidParameter(format!(
                "composition needs at least 4N = {} samples, got {}",
                4 * n,
                opts.samples
            )));
        }
        let p = opts.samples;
        let r = opts.radius;
        let ws: Vec<Complex64> = (0..p)
            .map(|j| Complex64::from_polar(r, 2.0 * PI * j as f64 / p as f64))
            .collect();
        // values[j][m] = F_m(Ψ(w_j))
        let values: Vec<Vec<Complex64>> = ws
            .par_iter()
            .map(|&w| faber_values(map, map.eval_continued(w), n))
            .collect();

        let fft = FftPlanner::<f64>::new().plan_fft_forward(p);
        let rows: Vec<(Vec<Complex64>, f64, f64)> = (1..=n)
            .into_par_iter()
            .map(|m| {
                let mut buf: Vec<Complex64> = values
                    .iter()
                    .zip(&ws)
                    .map(|(v, w)| v[m] - w.powu(m as u32))
                    .collect();
                fft.process(&mut buf);
                let inv_p = 1.0 / p as f64;
                let row: Vec<Complex64> = (1..=n)
                    .map(|k| buf[p - k] * inv_p * r.powi(k as i32))
                    .collect();
                let aliasing = ((n + 1)..(p / 2))
                    .map(|k| (buf[p - k] * inv_p).norm() * r.powi(n as i32))
                    .fold(0.0, f64::max);
                let cancellation = (0..(p / 2))
                    .map(|j| (buf[j] * inv_p).norm())
                    .fold(0.0, f64::max);
                (row, aliasing, cancellation)
            })
            .collect();

        let c = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
        let aliasing = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let cancellation = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        let scale = 1.0 + c.iter().map(|x| x.norm()).fold(0.0, f64::max);
        Ok((
            Self {
                gamma: map.gamma(),
                c,
            },
            CompositionDiagnostics {
                aliasing,
                cancellation,
                aliasing_warning: aliasing > 1e-10 * scale,
            },
        ))
    }

    pub fn size(&self) -> usize {
        self.c.nrows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `c_{m,k}`, 1-indexed.
    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.c[(m - 1, k - 1)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_deviation(&self, other: &GrunskyTable) -> f64 {
        let n = self.size().min(other.size());
        let mut worst = 0.0f64;
        for m in 1..=n {
            for k in 1..=n {
                worst = worst.max((self.get(m, k) - other.get(m, k)).norm());
            }
        }
        worst
    }

    pub fn identity_residual(&self) -> IdentityResidual {
        let n = self.size();
        let mut max = 0.0;
        let mut worst = (1, 1);
        for m in 1..=n {
            for k in 1..=n {
                let r = (self.get(k, m) * m as f64 - self.get(m, k) * k as f64).norm();
                if r > max {
                    max = r;
                    worst = (m, k);
                }
            }
        }
        IdentityResidual {
            max,
            worst,
            scale: 1.0 + self.max_abs(),
        }
    }
}

/// `μ_{m,k} = sqrt(k/m) c_{m,k}`, stored as an exactly symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedGrunsky {
    gamma: f64,
    mu: DMatrix<Complex64>,
    symmetry_residual: f64,
}

impl SymmetrizedGrunsky {
    /// Averages `sqrt(k/m) c_{m,k}` with `sqrt(m/k) c_{k,m}`; the two agree up to
    /// the identity residual, which is reported.
    pub fn new(table: &GrunskyTable) -> Result<Self> {
        let ident = table.identity_residual();
        if !ident.holds() {
            return Err(Error::GrunskyIdentity {
                m: ident.worst.0,
                k: ident.worst.1,
                residual: ident.max,
                tolerance: IDENTITY_TOLERANCE * ident.scale,
            });
        }
        let n = table.size();
        let mut mu = DMatrix::zeros(n, n);
        let mut symmetry_residual = 0.0f64;
        for m in 1..=n {
            for k in m..=n {
                let (mf, kf) = (m as f64, k as f64);
                let one = table.get(m, k) * (kf / mf).sqrt();
                let other = table.get(k, m) * (mf / kf).sqrt();
                symmetry_residual = symmetry_residual.max((one - other).norm());
                let v = (one + other) * 0.5;
                mu[(m - 1, k - 1)] = v;
                mu[(k - 1, m - 1)] = v;
            }
        }
        Ok(Self {
            gamma: table.gamma(),
            mu,
            symmetry_residual,
        })
    }

    pub fn size(&self) -> usize {
        self.mu.nrows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.symmetry_residual
    }

    /// `μ_{m,k}`, 1-indexed.
    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.mu[(m - 1, k - 1)]
    }

    /// `μ_{m,k} γ^{-(m+k)}`.
    pub fn normalized(&self, m: usize, k: usize) -> Complex64 {
        self.get(m, k) * (-((m + k) as f64) * self.gamma.ln()).exp()
    }

    /// Matrix of `μ_{m,k} γ^{-(m+k)}`.
    pub fn normalized_matrix(&self) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.normalized(i + 1, j + 1))
    }

    /// `Σ_{k=1}^{N} |μ_{m,k}/γ^{m+k}|²` for each row `m`.
    pub fn row_l2_report(&self) -> Vec<f64> {
        let n = self.size();
        (1..=n)
            .map(|m| (1..=n).map(|k| self.normalized(m, k).norm_sqr()).sum())
            .collect()
    }

    /// First row violating the row bound, if any.
    pub fn check_row_bound(&self) -> Result<()> {
        for (i, &s) in self.row_l2_report().iter().enumerate() {
            if s > 1.0 + ROW_BOUND_SLACK {
                return Err(Error::RowBound { row: i + 1, sum: s });
            }
        }
        Ok(())
    }
}
