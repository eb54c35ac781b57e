//! Nyström discretization of `K*` by the periodic trapezoidal rule on the
//! parametrized boundary `θ ↦ Ψ(γe^{iθ})`. Independent of the Grunsky pipeline;
//! used as an oracle for the series spectrum.
//!
//! `K*[φ](x) = ∫ ⟨x−y, ν_x⟩ / (2π|x−y|²) φ(y) dσ(y)` with `dσ = h dθ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::conformal::{BoundarySample, ExteriorMap};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Smallest accepted quadrature size.
pub const MIN_NODES: usize = 64;

/// Largest imaginary part tolerated on a reported oracle eigenvalue.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

/// Nodes closer than this (relative to the boundary diameter) count as coincident.
const COINCIDENCE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub a: DMatrix<f64>,
    pub nodes: Vec<BoundarySample>,
}

impl KernelMatrix {
    /// `A_ij = K(x_i, x_j) h_j 2π/n`, with the smooth-curve limit `κ(x_i)/(4π)`
    /// on the diagonal.
    pub fn build(map: &ExteriorMap, n: usize) -> Result<Self> {
        Self::build_shifted(map, n, 0.0)
    }

    /// Same as [`Self::build`] on the grid `θ_j = offset + 2πj/n`.
    pub fn build_shifted(map: &ExteriorMap, n: usize, offset: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "Nyström quadrature needs n >= {MIN_NODES}, got {n}"
            )));
        }
        let nodes = (0..n)
            .map(|j| map.sample_at(offset + 2.0 * PI * j as f64 / n as f64))
            .collect::<Result<Vec<_>>>()?;
        let diameter = nodes
            .iter()
            .map(|s| (s.point - nodes[0].point).norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let weight = 2.0 * PI / n as f64;
        let rows: Vec<Vec<f64>> = nodes
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut row = vec![0.0; n];
                for (j, y) in nodes.iter().enumerate() {
                    row[j] = if i == j {
                        x.curvature / (4.0 * PI) * x.h * weight
                    } else {
                        let d = x.point - y.point;
                        let r2 = d.norm_sqr();
                        if r2.sqrt() < COINCIDENCE_TOLERANCE * diameter {
                            return Err(Error::NodeCoincidence { i, j });
                        }
                        (d * x.normal.conj()).re / (2.0 * PI * r2) * y.h * weight
                    };
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self { a, nodes })
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// `max_i h_i |(A ζ_0)_i − ζ_0(x_i)/2|` with `ζ_0 = 1/h`, i.e. how well the
    /// discretization reproduces `K*[ζ_0] = ζ_0/2`.
    pub fn zeta0_residual(&self) -> f64 {
        let zeta0 = nalgebra::DVector::from_iterator(self.size(), self.nodes.iter().map(|s| 1.0 / s.h));
        let image = &self.a * &zeta0;
        self.nodes
            .iter()
            .zip(image.iter())
            .map(|(s, v)| (s.h * v - 0.5).abs())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of `A`: the one nearest 1/2 is returned out-of-band as the
    /// `ζ_0` eigenvalue, the rest ordered by decreasing magnitude (positive first
    /// within a pair). Only the top `count` are returned, and those must be real
    /// to within [`IMAGINARY_TOLERANCE`].
    pub fn oracle_spectrum(&self, count: usize) -> Result<Spectrum> {
        let n = self.size();
        if count >= n {
            return Err(Error::InvalidParameter(format!(
                "count {count} must be below the quadrature size {n}"
            )));
        }
        let eig = self.a.clone().complex_eigenvalues();
        let mut vals: Vec<_> = eig.iter().copied().collect();
        let half = vals
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| (*x - 0.5).norm().total_cmp(&(*y - 0.5).norm()))
            .map(|(i, _)| i)
            .expect("non-empty spectrum");
        let zeta0 = vals.remove(half);
        vals.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
        vals.truncate(count);
        let residue = vals
            .iter()
            .chain(std::iter::once(&zeta0))
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        if residue > IMAGINARY_TOLERANCE {
            return Err(Error::ImaginaryResidue(residue));
        }
        let mut eigenvalues: Vec<f64> = vals.iter().map(|z| z.re).collect();
        for pair in eigenvalues.chunks_mut(2) {
            if pair.len() == 2 && pair[0] < pair[1] {
                pair.swap(0, 1);
            }
        }
        Ok(Spectrum::from_eigenvalues(eigenvalues, zeta0.re))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub count: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    /// 1-indexed rank of the largest absolute deviation.
    pub worst: usize,
}

/// Rank-by-rank deviation of the top `count` magnitudes.
pub fn compare(a: &Spectrum, b: &Spectrum, count: usize) -> Result<Comparison> {
    for s in [a, b] {
        if s.len() < count {
            return Err(Error::InsufficientData(format!(
                "spectrum has {} entries, {count} requested",
                s.len()
            )));
        }
    }
    let mut ma = a.magnitudes();
    let mut mb = b.magnitudes();
    ma.sort_by(|x, y| y.total_cmp(x));
    mb.sort_by(|x, y| y.total_cmp(x));
    let mut out = Comparison {
        count,
        max_abs: 0.0,
        max_rel: 0.0,
        worst: 0,
    };
    for k in 0..count {
        let d = (ma[k] - mb[k]).abs();
        if d > out.max_abs || out.worst == 0 {
            out.max_abs = d;
            out.worst = k + 1;
        }
        let scale = ma[k].abs().max(mb[k].abs());
        if scale > 0.0 {
            out.max_rel = out.max_rel.max(d / scale);
        }
    }
    Ok(out)
}
