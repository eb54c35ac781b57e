//! Single layer potentials `S[ζ_m]` from Faber polynomials (inside) and the
//! Grunsky series (outside), plus the jump-relation checks tying them to the
//! matrix form of `K*`.
//!
//! For `m ≥ 1`, with `c̃_{m,k} = c_{m,k} γ^{-(m+k)}` and `t = e^{-(ρ−ρ₀)}`:
//!
//! ```text
//! inside:   S[ζ_m](z)   = −F_m(z) / (2√m γ^m)
//! outside:  S[ζ_m](ρ,θ) = −(Σ_k c̃_{m,k} t^k e^{-ikθ} + t^m e^{imθ}) / (2√m)
//! ```
//!
//! `S[ζ_{-m}]` is the complex conjugate of `S[ζ_m]`; `S[ζ_0]` is `ln γ` inside and
//! `ρ` outside.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::conformal::ExteriorMap;
use crate::error::{Error, Result};
use crate::grunsky::{faber_values_with_derivative, GrunskyTable};

/// Exterior series stop once the geometric tail bound drops below this.
pub const SERIES_TOLERANCE: f64 = 1e-13;

/// Points closer than this to the boundary polygon are evaluated from both sides.
pub const BOUNDARY_DISTANCE: f64 = 1e-8;

/// Vertices of the polygon used for inside/outside classification.
pub const POLYGON_VERTICES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
    /// Within [`BOUNDARY_DISTANCE`] of the boundary polygon; both one-sided values are returned.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    /// A point of `Ω̄` given in the plane.
    Interior(Complex64),
    /// Exterior curvilinear coordinates with `ρ ≥ ρ₀`.
    Exterior { rho: f64, theta: f64 },
    /// Any point of the plane; classified by winding number.
    Plane(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEvaluation {
    pub point: Complex64,
    /// `(ρ, θ)` when the exterior formula was used.
    pub coords: Option<(f64, f64)>,
    pub value: Complex64,
    pub side: Side,
    /// Interior value for boundary points (`value` then holds the exterior one).
    pub other_side: Option<Complex64>,
    pub terms_used: usize,
    /// Bound on the omitted part of the exterior series; zero for interior values.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    pub eps: f64,
    pub residual: f64,
    pub residual_half: f64,
    /// `residual(ε)/residual(ε/2)`; `None` when both are at round-off level.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEstimate {
    /// Extrapolated `K*[ζ_m](θ)`.
    pub value: Complex64,
    /// `|D(ε) − D(ε/2)| / |D(ε/2) − D(ε/4)|` for the one-sided average `D`.
    pub ratio: Option<f64>,
    pub flagged: bool,
}

pub struct LayerPotentials<'a> {
    map: &'a ExteriorMap,
    table: &'a GrunskyTable,
    polygon: Vec<Complex64>,
}

impl<'a> LayerPotentials<'a> {
    pub fn new(map: &'a ExteriorMap, table: &'a GrunskyTable) -> Result<Self> {
        if (table.gamma() - map.gamma()).abs() > 1e-14 * map.gamma() {
            return Err(Error::InvalidParameter(
                "Grunsky table was built for a different map".into(),
            ));
        }
        let polygon = map
            .boundary_sample(POLYGON_VERTICES)?
            .into_iter()
            .map(|s| s.point)
            .collect();
        Ok(Self {
            map,
            table,
            polygon,
        })
    }

    pub fn map(&self) -> &ExteriorMap {
        self.map
    }

    fn check_index(&self, m: i64) -> Result<usize> {
        let n = m.unsigned_abs() as usize;
        if n > self.table.size() {
            return Err(Error::InvalidParameter(format!(
                "|m| = {n} exceeds the Grunsky table size {}",
                self.table.size()
            )));
        }
        Ok(n)
    }

    /// `c_{n,k} γ^{-(n+k)}`.
    fn scaled_coeff(&self, n: usize, k: usize) -> Complex64 {
        self.table.get(n, k) * (-((n + k) as f64) * self.map.rho0()).exp()
    }

    /// Exterior value and `∂_ρ` of `S[ζ_m]` at `(ρ, θ)` with the series summed
    /// until the tail bound is met or the table runs out.
    fn exterior_parts(&self, m: i64, rho: f64, theta: f64) -> Result<(Complex64, Complex64, usize, f64)> {
        let n = self.check_index(m)?;
        let delta = rho - self.map.rho0();
        if delta < -1e-14 * self.map.rho0().abs().max(1.0) {
            return Err(Error::OutsideDomain {
                w: Complex64::from_polar(rho.exp(), theta),
                gamma: self.map.gamma(),
            });
        }
        if n == 0 {
            return Ok((Complex64::new(rho, 0.0), Complex64::new(1.0, 0.0), 0, 0.0));
        }
        let t = (-delta.max(0.0)).exp();
        let size = self.table.size();
        // |c̃_{n,k}| ≤ sqrt(n/k) by the row bound, so the tail after K terms is
        // at most t^{K+1} / (2(1 − t)) once divided by 2√n.
        let tail_after = |k: usize| {
            if t < 1.0 {
                t.powi(k as i32 + 1) / (2.0 * (1.0 - t))
            } else {
                f64::INFINITY
            }
        };
        let terms = (1..=size)
            .find(|&k| tail_after(k) < SERIES_TOLERANCE)
            .unwrap_or(size);
        let mut value = Complex64::default();
        let mut drho = Complex64::default();
        let mut tk = 1.0;
        for k in 1..=terms {
            tk *= t;
            let term = self.scaled_coeff(n, k) * Complex64::from_polar(tk, -(k as f64) * theta);
            value += term;
            drho -= term * k as f64;
        }
        let lead = Complex64::from_polar(t.powi(n as i32), n as f64 * theta);
        value += lead;
        drho -= lead * n as f64;
        let scale = -1.0 / (2.0 * (n as f64).sqrt());
        let (mut value, mut drho) = (value * scale, drho * scale);
        if m < 0 {
            value = value.conj();
            drho = drho.conj();
        }
        Ok((value, drho, terms, tail_after(terms)))
    }

    /// Interior value and complex derivative factor: `S[ζ_m](z)` and the
    /// directional derivative along the unit direction `dir`.
    fn interior_parts(&self, m: i64, z: Complex64, dir: Complex64) -> Result<(Complex64, Complex64)> {
        let n = self.check_index(m)?;
        if n == 0 {
            return Ok((Complex64::new(self.map.rho0(), 0.0), Complex64::default()));
        }
        let (f, df) = faber_values_with_derivative(self.map, z, n);
        let scale = -1.0 / (2.0 * (n as f64).sqrt() * self.map.gamma().powi(n as i32));
        let value = f[n] * scale;
        let deriv = df[n] * dir * scale;
        Ok(if m < 0 {
            (value.conj(), deriv.conj())
        } else {
            (value, deriv)
        })
    }

    /// Winding-number classification against the boundary polygon.
    pub fn classify(&self, z: Complex64) -> Side {
        let n = self.polygon.len();
        let mut dist = f64::INFINITY;
        let mut winding = 0.0;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            dist = dist.min(segment_distance(z, a, b));
            winding += ((b - z) / (a - z)).arg();
        }
        if dist < BOUNDARY_DISTANCE {
            Side::Boundary
        } else if (winding / (2.0 * PI)).round() != 0.0 {
            Side::Interior
        } else {
            Side::Exterior
        }
    }

    /// `S[ζ_m]` at `at`.
    pub fn single_layer(&self, m: i64, at: Location) -> Result<PotentialEvaluation> {
        match at {
            Location::Exterior { rho, theta } => {
                let (value, _, terms_used, tail_bound) = self.exterior_parts(m, rho, theta)?;
                Ok(PotentialEvaluation {
                    point: self.map.eval(Complex64::from_polar(rho.exp(), theta))?,
                    coords: Some((rho, theta)),
                    value,
                    side: Side::Exterior,
                    other_side: None,
                    terms_used,
                    tail_bound,
                })
            }
            Location::Interior(z) => match self.classify(z) {
                Side::Exterior => Err(Error::InvalidParameter(format!(
                    "point {z} is not in the closed domain"
                ))),
                Side::Boundary => self.boundary_eval(m, z),
                Side::Interior => self.interior_eval(m, z),
            },
            Location::Plane(z) => match self.classify(z) {
                Side::Interior => self.interior_eval(m, z),
                Side::Boundary => self.boundary_eval(m, z),
                // points just inside the true curve can land outside the polygon;
                // the exterior inverse then fails and the interior formula applies
                Side::Exterior => match self.map.invert(z) {
                    Ok(w) => self.single_layer(
                        m,
                        Location::Exterior {
                            rho: w.norm().ln().max(self.map.rho0()),
                            theta: w.arg(),
                        },
                    ),
                    Err(_) => self.interior_eval(m, z),
                },
            },
        }
    }

    fn interior_eval(&self, m: i64, z: Complex64) -> Result<PotentialEvaluation> {
        let (value, _) = self.interior_parts(m, z, Complex64::new(1.0, 0.0))?;
        Ok(PotentialEvaluation {
            point: z,
            coords: None,
            value,
            side: Side::Interior,
            other_side: None,
            terms_used: 0,
            tail_bound: 0.0,
        })
    }

    fn boundary_eval(&self, m: i64, z: Complex64) -> Result<PotentialEvaluation> {
        let w = self.map.invert(z)?;
        let theta = w.arg();
        let (value, _, terms_used, tail_bound) = self.exterior_parts(m, self.map.rho0(), theta)?;
        let (inner, _) = self.interior_parts(m, z, Complex64::new(1.0, 0.0))?;
        Ok(PotentialEvaluation {
            point: z,
            coords: Some((self.map.rho0(), theta)),
            value,
            side: Side::Boundary,
            other_side: Some(inner),
            terms_used,
            tail_bound,
        })
    }

    /// Interior probe `Ψ(e^{ρ₀−ε+iθ})` (the finite Laurent series continues inside).
    fn interior_probe(&self, theta: f64, eps: f64) -> Complex64 {
        self.map
            .eval_continued(Complex64::from_polar(self.map.gamma() * (-eps).exp(), theta))
    }

    /// `max_θ |S[ζ_m](ρ₀+ε, θ) − S[ζ_m](Ψ(e^{ρ₀−ε+iθ}))|` over `n_samples` angles.
    pub fn continuity_residual(&self, m: i64, n_samples: usize, eps: f64) -> Result<f64> {
        if !(eps > 0.0) || n_samples == 0 {
            return Err(Error::InvalidParameter(
                "continuity check needs eps > 0 and at least one sample".into(),
            ));
        }
        let mut worst = 0.0f64;
        for j in 0..n_samples {
            let theta = 2.0 * PI * j as f64 / n_samples as f64;
            let (outer, _, _, _) = self.exterior_parts(m, self.map.rho0() + eps, theta)?;
            let z = self.interior_probe(theta, eps);
            if self.classify(z) == Side::Exterior {
                return Err(Error::InvalidParameter(format!(
                    "interior probe at theta = {theta} left the domain; reduce eps = {eps}"
                )));
            }
            let (inner, _) = self.interior_parts(m, z, Complex64::new(1.0, 0.0))?;
            worst = worst.max((outer - inner).norm());
        }
        Ok(worst)
    }

    /// Residuals at `ε` and `ε/2` and their ratio (≈ 2 for first-order closure).
    pub fn continuity_study(&self, m: i64, n_samples: usize, eps: f64) -> Result<ContinuityReport> {
        let residual = self.continuity_residual(m, n_samples, eps)?;
        let residual_half = self.continuity_residual(m, n_samples, eps / 2.0)?;
        let ratio = (residual > 1e-12).then(|| residual / residual_half);
        Ok(ContinuityReport {
            eps,
            residual,
            residual_half,
            ratio,
        })
    }

    /// One-sided average `½(∂_ν⁺ + ∂_ν⁻) S[ζ_m]` at distance `ε` from the boundary.
    fn one_sided_average(&self, m: i64, theta: f64, eps: f64) -> Result<Complex64> {
        let rho_out = self.map.rho0() + eps;
        let (_, drho, _, _) = self.exterior_parts(m, rho_out, theta)?;
        let h_out = self.map.scale_factor(rho_out, theta)?;
        let outer = drho / h_out;

        let w_in = Complex64::from_polar(self.map.gamma() * (-eps).exp(), theta);
        let (d1, _) = self.map.derivatives_continued(w_in);
        let nu = (w_in * d1) / (w_in * d1).norm();
        let z = self.map.eval_continued(w_in);
        let inner = if m == 0 {
            Complex64::default()
        } else {
            self.interior_parts(m, z, nu)?.1
        };
        Ok((outer + inner) * 0.5)
    }

    /// `K*[ζ_m](θ)` from the jump relations, Richardson-extrapolated over
    /// `ε, ε/2, ε/4` to third order.
    pub fn np_via_jump(&self, m: i64, theta: f64, eps: f64) -> Result<JumpEstimate> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        let d0 = self.one_sided_average(m, theta, eps)?;
        let d1 = self.one_sided_average(m, theta, eps / 2.0)?;
        let d2 = self.one_sided_average(m, theta, eps / 4.0)?;
        let r0 = d1 * 2.0 - d0;
        let r1 = d2 * 2.0 - d1;
        let value = (r1 * 4.0 - r0) / 3.0;

        let (a, b) = ((d0 - d1).norm(), (d1 - d2).norm());
        let noise = 1e-11 * (1.0 + d0.norm());
        let ratio = (b > noise).then(|| a / b);
        let flagged = matches!(ratio, Some(r) if !(1.5..=2.5).contains(&r));
        Ok(JumpEstimate {
            value,
            ratio,
            flagged,
        })
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}
