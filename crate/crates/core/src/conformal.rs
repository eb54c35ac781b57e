//! Exterior conformal maps `Ψ(w) = w + a_0 + Σ a_k w^{-k}` on `|w| > γ`.
//!
//! The map is the only description of a domain used anywhere in the crate.
//! It induces the curvilinear coordinates `z = Ψ(e^{ρ+iθ})` with `ρ ≥ ρ₀ = ln γ`,
//! in which both scale factors coincide and equal `h(ρ,θ) = |Ψ'(e^{ρ+iθ})| e^ρ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|Ψ'| < CUSP_TOLERANCE · γ` on the boundary circle is treated as a cusp.
pub const CUSP_TOLERANCE: f64 = 1e-12;

/// Relative slack when deciding whether `|w| ≥ γ` for points generated as `γ e^{iθ}`.
const RADIUS_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorMap {
    gamma: f64,
    a0: Complex64,
    coeffs: Vec<Complex64>,
}

impl ExteriorMap {
    /// Builds a map after checking `γ > 0` and the area-theorem necessary condition.
    pub fn new(gamma: f64, a0: Complex64, coeffs: Vec<Complex64>) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidCapacity(gamma));
        }
        if !a0.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedDomain("non-finite coefficient".into()));
        }
        let report = UnivalenceReport::compute(gamma, &coeffs);
        if report.necessary_margin < 0.0 {
            return Err(Error::AreaTheorem {
                sum: report.area_sum,
                bound: gamma * gamma,
            });
        }
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Ok(Self { gamma, a0, coeffs })
    }

    /// `Ψ(w) = w`, the exterior of the unit disk.
    pub fn disk() -> Self {
        Self {
            gamma: 1.0,
            a0: Complex64::new(0.0, 0.0),
            coeffs: Vec::new(),
        }
    }

    /// `Ψ(w) = w + a/w` on `|w| > γ`.
    pub fn ellipse(a: Complex64, gamma: f64) -> Result<Self> {
        Self::new(gamma, Complex64::new(0.0, 0.0), vec![a])
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho0(&self) -> f64 {
        self.gamma.ln()
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    /// Stored coefficients `a_1 … a_L`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `a_k` for `k ≥ 0`; zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> Complex64 {
        match k {
            0 => self.a0,
            _ => self.coeffs.get(k - 1).copied().unwrap_or_default(),
        }
    }

    /// `a_k` for `k ≥ 1` with `a_0` treated as zero (translation does not enter
    /// the Grunsky recursion).
    pub(crate) fn tail_coeff(&self, k: usize) -> Complex64 {
        if k == 0 {
            Complex64::default()
        } else {
            self.coeff(k)
        }
    }

    /// The map `w ↦ tΨ(w/t)`: capacity `tγ`, coefficients `t^{k+1} a_k`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * t.powi(i as i32 + 2))
            .collect();
        Self::new(self.gamma * t, self.a0 * t, coeffs)
    }

    pub fn univalence(&self) -> UnivalenceReport {
        UnivalenceReport::compute(self.gamma, &self.coeffs)
    }

    fn check_radius(&self, w: Complex64) -> Result<()> {
        if w.norm() < self.gamma * (1.0 - RADIUS_SLACK) {
            Err(Error::OutsideDomain {
                w,
                gamma: self.gamma,
            })
        } else {
            Ok(())
        }
    }

    /// `Ψ(w)` for `|w| ≥ γ`.
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        self.check_radius(w)?;
        Ok(self.eval_continued(w))
    }

    /// `(Ψ'(w), Ψ''(w))` for `|w| ≥ γ`.
    pub fn derivatives(&self, w: Complex64) -> Result<(Complex64, Complex64)> {
        self.check_radius(w)?;
        Ok(self.derivatives_continued(w))
    }

    /// Laurent sum without the radius check. The stored series is finite, so this
    /// is the analytic continuation of `Ψ` to `w ≠ 0`.
    pub(crate) fn eval_continued(&self, w: Complex64) -> Complex64 {
        let u = w.inv();
        // Horner in u: Σ_{k=1}^{L} a_k u^k
        let mut acc = Complex64::default();
        for a in self.coeffs.iter().rev() {
            acc = (acc + a) * u;
        }
        w + self.a0 + acc
    }

    pub(crate) fn derivatives_continued(&self, w: Complex64) -> (Complex64, Complex64) {
        let u = w.inv();
        let mut d1 = Complex64::default();
        let mut d2 = Complex64::default();
        for (i, a) in self.coeffs.iter().enumerate().rev() {
            let k = (i + 1) as f64;
            d1 = (d1 + a * k) * u;
            d2 = (d2 + a * (k * (k + 1.0))) * u;
        }
        // d1 = Σ k a_k u^k, d2 = Σ k(k+1) a_k u^k
        (Complex64::new(1.0, 0.0) - d1 * u, d2 * u * u)
    }

    /// `h(ρ,θ) = |Ψ'(e^{ρ+iθ})| e^ρ`.
    pub fn scale_factor(&self, rho: f64, theta: f64) -> Result<f64> {
        if rho < self.rho0() - RADIUS_SLACK * self.rho0().abs().max(1.0) {
            return Err(Error::OutsideDomain {
                w: Complex64::from_polar(rho.exp(), theta),
                gamma: self.gamma,
            });
        }
        let w = Complex64::from_polar(rho.exp().max(self.gamma), theta);
        let (d1, _) = self.derivatives_continued(w);
        if d1.norm() < CUSP_TOLERANCE * self.gamma {
            return Err(Error::Cusp {
                w,
                derivative: d1.norm(),
            });
        }
        Ok(d1.norm() * w.norm())
    }

    /// Boundary point, scale factor, normal and curvature at `Ψ(γe^{iθ})`.
    pub fn sample_at(&self, theta: f64) -> Result<BoundarySample> {
        let w = Complex64::from_polar(self.gamma, theta);
        let point = self.eval_continued(w);
        let (d1, d2) = self.derivatives_continued(w);
        if d1.norm() < CUSP_TOLERANCE * self.gamma {
            return Err(Error::Cusp {
                w,
                derivative: d1.norm(),
            });
        }
        // tangent z_θ = i w Ψ'(w); rotating by -π/2 gives the outward normal w Ψ'/|w Ψ'|
        let wd = w * d1;
        let h = wd.norm();
        let normal = wd / h;
        let curvature = (Complex64::new(1.0, 0.0) + w * d2 / d1).re / h;
        Ok(BoundarySample {
            theta,
            point,
            h,
            normal,
            curvature,
        })
    }

    /// `n` equispaced samples `θ_j = 2πj/n` of the boundary `Ψ(γe^{iθ})`.
    pub fn boundary_sample(&self, n: usize) -> Result<Vec<BoundarySample>> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!(
                "boundary sample needs at least 4 points, got {n}"
            )));
        }
        (0..n)
            .map(|j| self.sample_at(2.0 * PI * j as f64 / n as f64))
            .collect()
    }

    /// Solves `Ψ(w) = z` for `|w| ≥ γ` by damped Newton iteration.
    pub fn invert(&self, z: Complex64) -> Result<Complex64> {
        let samples = self.boundary_sample(256)?;
        let mut w = {
            let far = z - self.a0;
            let nearest = samples
                .iter()
                .min_by(|a, b| {
                    (a.point - z)
                        .norm()
                        .total_cmp(&(b.point - z).norm())
                })
                .expect("non-empty sample");
            let dist = (nearest.point - z).norm();
            let guess = Complex64::from_polar(
                self.gamma * (1.0 + dist / nearest.h * self.gamma),
                nearest.theta,
            );
            if far.norm() > 4.0 * self.gamma.max(self.coeff_scale()) {
                far
            } else {
                guess
            }
        };
        let scale = z.norm().max(self.gamma);
        for _ in 0..200 {
            let f = self.eval_continued(w) - z;
            if f.norm() <= 1e-14 * scale {
                return Ok(w);
            }
            let (d1, _) = self.derivatives_continued(w);
            if d1.norm() == 0.0 {
                break;
            }
            let step = f / d1;
            let mut t = 1.0;
            loop {
                let cand = w - step * t;
                if cand.norm() >= self.gamma * (1.0 - 1e-12)
                    && (self.eval_continued(cand) - z).norm() < f.norm()
                {
                    w = cand;
                    break;
                }
                t *= 0.5;
                if t < 1e-10 {
                    return Err(Error::InverseMap(z));
                }
            }
        }
        let f = self.eval_continued(w) - z;
        if f.norm() <= 1e-11 * scale {
            Ok(w)
        } else {
            Err(Error::InverseMap(z))
        }
    }

    fn coeff_scale(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm().powf(1.0 / (i as f64 + 2.0)))
            .fold(0.0, f64::max)
    }

    pub fn to_spec(&self) -> DomainSpec {
        DomainSpec {
            gamma: self.gamma,
            a0: [self.a0.re, self.a0.im],
            a: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub theta: f64,
    pub point: Complex64,
    pub h: f64,
    /// Outward unit normal.
    pub normal: Complex64,
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// Area theorem holds but the coefficient sum does not certify injectivity.
    PassUnproven,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnivalenceReport {
    pub verdict: Verdict,
    /// `γ² − Σ k|a_k|² γ^{-2k}`.
    pub necessary_margin: f64,
    /// `1 − Σ k|a_k| γ^{-(k+1)}`.
    pub sufficient_margin: f64,
    pub area_sum: f64,
}

impl UnivalenceReport {
    pub fn compute(gamma: f64, coeffs: &[Complex64]) -> Self {
        let mut area_sum = 0.0;
        let mut derivative_sum = 0.0;
        for (i, a) in coeffs.iter().enumerate() {
            let k = (i + 1) as f64;
            area_sum += k * a.norm_sqr() * gamma.powf(-2.0 * k);
            derivative_sum += k * a.norm() * gamma.powf(-(k + 1.0));
        }
        let necessary_margin = gamma * gamma - area_sum;
        let sufficient_margin = 1.0 - derivative_sum;
        let verdict = if necessary_margin < 0.0 {
            Verdict::Fail
        } else if sufficient_margin > 0.0 {
            Verdict::Pass
        } else {
            Verdict::PassUnproven
        };
        Self {
            verdict,
            necessary_margin,
            sufficient_margin,
            area_sum,
        }
    }
}

/// On-disk domain document: `{"gamma": 1.0, "a0": [re, im], "a": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub gamma: f64,
    #[serde(default)]
    pub a0: [f64; 2],
    #[serde(default)]
    pub a: Vec<[f64; 2]>,
}

impl DomainSpec {
    pub fn to_map(&self) -> Result<ExteriorMap> {
        ExteriorMap::new(
            self.gamma,
            Complex64::new(self.a0[0], self.a0[1]),
            self.a.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        )
    }

    /// Compact JSON with fixed field order, used for digests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("domain spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub map: ExteriorMap,
    pub univalence: UnivalenceReport,
}

/// Parses and validates a JSON domain document.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let spec: DomainSpec =
        serde_json::from_str(text).map_err(|e| Error::MalformedDomain(e.to_string()))?;
    let map = spec.to_map()?;
    let univalence = map.univalence();
    Ok(Domain { map, univalence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ellipse() -> ExteriorMap {
        ExteriorMap::ellipse(c(0.5, 0.0), 1.0).unwrap()
    }

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn parse_ellipse_and_disk() {
        let d = parse_domain(r#"{"gamma": 1, "a0": [0, 0], "a": [[0.5, 0]]}"#).unwrap();
        assert_eq!(d.map, ellipse());
        assert_eq!(d.univalence.verdict, Verdict::Pass);
        let d = parse_domain(r#"{"gamma": 1, "a0": [0, 0], "a": []}"#).unwrap();
        assert_eq!(d.map, ExteriorMap::disk());
        assert_eq!(d.map.eval(c(0.3, 2.0)).unwrap(), c(0.3, 2.0));
    }

    #[test]
    fn parse_rejects_area_violation() {
        let err = parse_domain(r#"{"gamma": 1, "a0": [0, 0], "a": [[2.0, 0]]}"#).unwrap_err();
        match err {
            Error::AreaTheorem { sum, .. } => assert_eq!(sum, 4.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn parse_rejects_bad_documents() {
        assert!(matches!(
            parse_domain(r#"{"gamma": 0, "a": []}"#),
            Err(Error::InvalidCapacity(_))
        ));
        assert!(matches!(
            parse_domain(r#"{"gamma": -1}"#),
            Err(Error::InvalidCapacity(_))
        ));
        assert!(matches!(
            parse_domain(r#"{"a": []}"#),
            Err(Error::MalformedDomain(_))
        ));
        assert!(matches!(
            parse_domain(r#"{"gamma": 1, "a": [[1]]}"#),
            Err(Error::MalformedDomain(_))
        ));
    }

    #[test]
    fn evaluate_ellipse() {
        let m = ellipse();
        assert_close(m.eval(c(1.0, 0.0)).unwrap(), c(1.5, 0.0), 1e-15);
        assert_close(m.eval(c(0.0, 1.0)).unwrap(), c(0.0, 0.5), 1e-15);
        assert!(matches!(
            m.eval(c(0.5, 0.0)),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn derivatives_termwise() {
        let (d1, d2) = ellipse().derivatives(c(1.0, 0.0)).unwrap();
        assert_close(d1, c(0.5, 0.0), 1e-15);
        assert_close(d2, c(1.0, 0.0), 1e-15);
        let (d1, d2) = ExteriorMap::disk().derivatives(c(2.0, 0.0)).unwrap();
        assert_eq!(d1, c(1.0, 0.0));
        assert_eq!(d2, c(0.0, 0.0));

        let m = ExteriorMap::new(1.0, c(0.0, 0.0), vec![c(0.3, 0.0), c(0.1, 0.0)]).unwrap();
        let (d1, _) = m.derivatives(c(1.0, 0.0)).unwrap();
        assert_close(d1, c(0.5, 0.0), 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = ExteriorMap::new(
            1.2,
            c(0.1, -0.2),
            vec![c(0.3, 0.1), c(0.1, 0.0), c(-0.02, 0.05)],
        )
        .unwrap();
        let step = 1e-5;
        for &w in &[c(1.5, 0.3), c(-0.4, 1.3), c(2.0, -2.0)] {
            let (d1, d2) = m.derivatives(w).unwrap();
            let fd1 = (m.eval(w + step).unwrap() - m.eval(w - step).unwrap()) / (2.0 * step);
            let fd2 = (m.eval(w + step).unwrap() - m.eval(w).unwrap() * 2.0
                + m.eval(w - step).unwrap())
                / (step * step);
            assert!((d1 - fd1).norm() < 1e-9);
            assert!((d2 - fd2).norm() < 1e-4);
        }
    }

    #[test]
    fn scale_factor_values() {
        let disk = ExteriorMap::disk();
        assert_relative_eq!(disk.scale_factor(0.0, 1.3).unwrap(), 1.0);
        let m = ellipse();
        assert_relative_eq!(m.scale_factor(0.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(m.scale_factor(0.0, PI / 2.0).unwrap(), 1.5, epsilon = 1e-15);
        assert!(m.scale_factor(-0.1, 0.0).is_err());
    }

    #[test]
    fn cusp_is_rejected() {
        // Ψ(w) = w + 1/w maps |w| = 1 onto a slit; Ψ'(±1) = 0
        let slit = ExteriorMap::ellipse(c(1.0, 0.0), 1.0).unwrap();
        assert!(matches!(slit.scale_factor(0.0, 0.0), Err(Error::Cusp { .. })));
        assert!(matches!(slit.boundary_sample(8), Err(Error::Cusp { .. })));
    }

    #[test]
    fn disk_boundary_sample() {
        let s = ExteriorMap::disk().boundary_sample(4).unwrap();
        let expected = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (s, p) in s.iter().zip(expected) {
            assert!((s.point - p).norm() < 1e-15);
            assert!((s.normal - p).norm() < 1e-15);
            assert_relative_eq!(s.h, 1.0);
            assert_relative_eq!(s.curvature, 1.0);
        }
    }

    #[test]
    fn ellipse_boundary_sample() {
        let s = ellipse().boundary_sample(4).unwrap();
        assert_close(s[0].point, c(1.5, 0.0), 1e-15);
        assert_close(s[0].normal, c(1.0, 0.0), 1e-15);
        // semi-axes A = 1.5, B = 0.5: curvature A/B² at θ=0 and B/A² at θ=π/2
        assert!((s[0].curvature - 6.0).abs() < 1e-10);
        assert!((s[1].curvature - 0.5 / 2.25).abs() < 1e-10);
        for x in &s {
            assert!((x.normal.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normals_point_outward() {
        let m = ExteriorMap::new(1.0, c(0.0, 0.0), vec![c(0.2, 0.1), c(0.0, 0.05)]).unwrap();
        for s in m.boundary_sample(64).unwrap() {
            let out = m.eval(Complex64::from_polar(1.0 + 1e-6, s.theta)).unwrap();
            assert!(((out - s.point) * s.normal.conj()).re > 0.0);
        }
    }

    #[test]
    fn univalence_margins() {
        let r = ellipse().univalence();
        assert_relative_eq!(r.necessary_margin, 0.75);
        assert_relative_eq!(r.sufficient_margin, 0.5);
        assert_eq!(r.verdict, Verdict::Pass);

        let r = ExteriorMap::disk().univalence();
        assert_eq!((r.necessary_margin, r.sufficient_margin), (1.0, 1.0));
        assert_eq!(r.verdict, Verdict::Pass);

        let mut a = vec![c(0.0, 0.0); 9];
        a[8] = c(0.34, 0.0);
        let r = UnivalenceReport::compute(1.0, &a);
        assert_relative_eq!(r.necessary_margin, 1.0 - 9.0 * 0.34 * 0.34, epsilon = 1e-15);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(ExteriorMap::new(1.0, c(0.0, 0.0), a).is_err());

        let r = UnivalenceReport::compute(1.0, &[c(0.0, 0.0), c(0.6, 0.0)]);
        assert_eq!(r.verdict, Verdict::PassUnproven);
    }

    #[test]
    fn inverse_map_round_trip() {
        let m = ExteriorMap::new(1.1, c(0.2, 0.0), vec![c(0.3, 0.1), c(0.05, 0.0)]).unwrap();
        for &w in &[c(1.2, 0.0), c(0.0, -1.15), c(3.0, 4.0), c(-1.0, 1.0)] {
            let z = m.eval(w).unwrap();
            let back = m.invert(z).unwrap();
            assert!((back - w).norm() < 1e-10, "{w} -> {back}");
        }
    }

    #[test]
    fn spec_round_trip() {
        let m = ExteriorMap::new(2.0, c(0.5, -1.0), vec![c(0.3, 0.1), c(0.0, 0.2)]).unwrap();
        let d = parse_domain(&m.to_spec().canonical_json()).unwrap();
        assert_eq!(d.map, m);
    }
}
