//! Eigenvalue ordering, decay-law fits, and the finite-window constants of the
//! decay estimate `|λ_{2k}| ≤ C k^{−p−α+1/2}` and of the Grunsky product bound
//! `|Σ_k c_{s,k} conj(c_{k,r}) γ^{−(s+r+2k)}| ≤ M (sr)^{−(p+α)}`.
//!
//! Exponents `p` and `α` are real; only `p + α` enters either constant.

use crate::conformal::ExteriorMap;
use crate::error::{Error, Result};
use crate::grunsky::GrunskyTable;
use crate::spectrum::{Spectrum, TruncatedNpMatrix};

/// Default tolerance on `||λ_{2k−1}| − |λ_{2k}||` when pairing eigenvalues.
pub const PAIRING_TOLERANCE: f64 = 1e-6;

/// Inner sums of the product bound stop once the remaining tail is below this.
pub const LEMMA_TAIL_TOLERANCE: f64 = 1e-14;

/// Slack allowed in the Weyl-Courant comparison.
pub const WEYL_SLACK: f64 = 1e-10;

/// Fits only use eigenvalues at least this many times the noise floor.
pub const NOISE_FLOOR_FACTOR: f64 = 1e3;

/// Eigenvalues reordered as `|λ_1| = |λ_2| ≥ |λ_3| = |λ_4| ≥ …` (positive
/// first within a pair), and the largest magnitude mismatch inside a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSpectrum {
    pub spectrum: Spectrum,
    pub jitter: f64,
}

/// Sorts by decreasing magnitude and checks that consecutive entries pair up
/// within `tol`. A trailing unpaired entry (odd length) is left in place.
pub fn order_eigenvalues(raw: &Spectrum, tol: f64) -> Result<OrderedSpectrum> {
    let mut vals = raw.eigenvalues.clone();
    vals.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    let mut jitter = 0.0f64;
    for pair in vals.chunks_mut(2) {
        if pair.len() < 2 {
            continue;
        }
        jitter = jitter.max((pair[0].abs() - pair[1].abs()).abs());
        if pair[0] < pair[1] {
            pair.swap(0, 1);
        }
    }
    if jitter > tol {
        return Err(Error::Unpaired {
            jitter,
            tolerance: tol,
        });
    }
    Ok(OrderedSpectrum {
        spectrum: Spectrum::from_eigenvalues(vals, raw.zeta0_eigenvalue),
        jitter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `log|λ_{2k}| ≈ intercept + slope·log k`.
    Power,
    /// `log|λ_{2k}| ≈ intercept + slope·k`.
    Exponential,
}

impl std::str::FromStr for DecayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(Self::Power),
            "exp" | "exponential" => Ok(Self::Exponential),
            other => Err(Error::InvalidParameter(format!("unknown decay model `{other}`"))),
        }
    }
}

/// Inclusive range of pair indices `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || end < start {
            return Err(Error::InvalidParameter(format!("invalid index range [{start}, {end}]")));
        }
        Ok(Self { start, end })
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    pub fit_range: IndexRange,
    /// Largest log-domain deviation from the fitted line.
    pub residual: f64,
}

impl DecayReport {
    /// Fitted `|λ_{2k}|`.
    pub fn predict(&self, k: usize) -> f64 {
        (self.intercept + self.slope * abscissa(self.model, k)).exp()
    }
}

fn abscissa(model: DecayModel, k: usize) -> f64 {
    match model {
        DecayModel::Power => (k as f64).ln(),
        DecayModel::Exponential => k as f64,
    }
}

fn check_range(spec: &Spectrum, range: IndexRange) -> Result<()> {
    if range.end > spec.pair_count() {
        return Err(Error::InsufficientData(format!(
            "range ends at k = {} but only {} pairs are available",
            range.end,
            spec.pair_count()
        )));
    }
    Ok(())
}

/// Least-squares line through `log|λ_{2k}|` over `range`.
pub fn fit_decay(spec: &Spectrum, model: DecayModel, range: IndexRange) -> Result<DecayReport> {
    check_range(spec, range)?;
    if range.len() < 2 {
        return Err(Error::InsufficientData("a fit needs at least two points".into()));
    }
    let mut pts = Vec::with_capacity(range.len());
    for k in range.iter() {
        let v = spec.pair_magnitude(k);
        if v == 0.0 {
            return Err(Error::ZeroEigenvalue(k));
        }
        pts.push((abscissa(model, k), v.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(DecayReport {
        model,
        slope,
        intercept,
        fit_range: range,
        residual,
    })
}

fn check_exponents(p: f64, alpha: f64) -> Result<()> {
    if !(p >= 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(p + alpha > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "need p >= 0, 0 < alpha < 1 and p + alpha > 1/2 (got p = {p}, alpha = {alpha})"
        )));
    }
    Ok(())
}

/// Smallest `C` with `|λ_{2k}| ≤ C k^{−p−α+1/2}` for all `k` in `range`.
pub fn bound_constant(spec: &Spectrum, p: f64, alpha: f64, range: IndexRange) -> Result<f64> {
    check_exponents(p, alpha)?;
    check_range(spec, range)?;
    let e = p + alpha - 0.5;
    Ok(range
        .iter()
        .map(|k| spec.pair_magnitude(k) * (k as f64).powf(e))
        .fold(0.0, f64::max))
}

/// Noise floor for fits on an `N`-window: the tail norm of rows `N+1..2N`
/// inside a `2N`-window, i.e. what the `N`-window leaves out.
pub fn noise_floor(map: &ExteriorMap, n: usize) -> Result<f64> {
    let wide = TruncatedNpMatrix::for_map(map, 2 * n)?;
    Ok(wide.tail_norm(n)? + f64::EPSILON)
}

/// `range` cut back so every `|λ_{2k}|` in it is at least
/// [`NOISE_FLOOR_FACTOR`] times `floor`; `None` if fewer than two points remain.
pub fn admissible_range(spec: &Spectrum, range: IndexRange, floor: f64) -> Option<IndexRange> {
    let end = range
        .iter()
        .take_while(|&k| k <= spec.pair_count() && spec.pair_magnitude(k) >= NOISE_FLOOR_FACTOR * floor)
        .last()?;
    (end > range.start).then_some(IndexRange {
        start: range.start,
        end,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaConstantReport {
    pub m: f64,
    /// Tested `(s, r)` pairs; the full grid `1 ≤ s, r ≤ S`.
    pub grid: Vec<(usize, usize)>,
    pub worst_pair: (usize, usize),
    /// Number of inner terms `K` kept.
    pub inner_cutoff: usize,
    /// Cauchy-Schwarz bound on the in-table terms beyond `K`.
    pub tail_estimate: f64,
}

/// `M = max_{s,r ≤ S} |Σ_{k≤K} c̃_{s,k} conj(c̃_{k,r})| (sr)^{p+α}`, with
/// `c̃_{s,k} = c_{s,k} γ^{−(s+k)}`. `K` is the first index where the
/// Cauchy-Schwarz bound on the remaining in-table terms drops below
/// [`LEMMA_TAIL_TOLERANCE`], or the table size.
pub fn lemma_constant(table: &GrunskyTable, p: f64, alpha: f64, s_max: usize) -> Result<LemmaConstantReport> {
    let n = table.size();
    if s_max == 0 || s_max > n {
        return Err(Error::InvalidParameter(format!(
            "S = {s_max} must lie in 1..={n} (the table size)"
        )));
    }
    let rho0 = table.gamma().ln();
    let ct = |s: usize, k: usize| table.get(s, k) * (-((s + k) as f64) * rho0).exp();
    // suffix[s][K] = sqrt(Σ_{k>K} |c̃_{s,k}|²) for rows and, by the identity, columns
    let suffix = |s: usize, col: bool| -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        let mut acc = 0.0f64;
        for k in (1..=n).rev() {
            out[k] = acc.sqrt();
            let v = if col { ct(k, s) } else { ct(s, k) };
            acc += v.norm_sqr();
        }
        out[0] = acc.sqrt();
        out
    };
    let rows: Vec<Vec<f64>> = (1..=s_max).map(|s| suffix(s, false)).collect();
    let cols: Vec<Vec<f64>> = (1..=s_max).map(|r| suffix(r, true)).collect();
    let tail_at = |k: usize| {
        let a = rows.iter().map(|v| v[k]).fold(0.0, f64::max);
        let b = cols.iter().map(|v| v[k]).fold(0.0, f64::max);
        a * b
    };
    let inner_cutoff = (1..=n).find(|&k| tail_at(k) < LEMMA_TAIL_TOLERANCE).unwrap_or(n);
    let e = p + alpha;
    let mut grid = Vec::with_capacity(s_max * s_max);
    let mut m = 0.0f64;
    let mut worst_pair = (1, 1);
    for s in 1..=s_max {
        for r in 1..=s_max {
            let mut sum = num_complex::Complex64::default();
            for k in 1..=inner_cutoff {
                sum += ct(s, k) * ct(k, r).conj();
            }
            let v = sum.norm() * ((s * r) as f64).powf(e);
            if v > m {
                m = v;
                worst_pair = (s, r);
            }
            grid.push((s, r));
        }
    }
    Ok(LemmaConstantReport {
        m,
        grid,
        worst_pair,
        inner_cutoff,
        tail_estimate: tail_at(inner_cutoff),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub n_cut: usize,
    pub tail_norm: f64,
    /// `|λ_{2N+1}|` of the full-window spectrum.
    pub eigenvalue: f64,
    pub holds: bool,
}

/// For each cut `N < window`: `tail_norm(N)` against `|λ_{2N+1}|` of the
/// `window`-spectrum, with `holds` when `|λ_{2N+1}| ≤ tail_norm(N) + 1e−10`.
pub fn tail_vs_eigenvalue_study(map: &ExteriorMap, cuts: &[usize], window: usize) -> Result<Vec<TailRow>> {
    let mat = TruncatedNpMatrix::for_map(map, window)?;
    let spec = mat.spectrum()?;
    cuts.iter()
        .map(|&n_cut| {
            if n_cut >= window {
                return Err(Error::InvalidParameter(format!(
                    "cut {n_cut} must be below the window {window}"
                )));
            }
            let tail_norm = mat.tail_norm(n_cut)?;
            let eigenvalue = spec.get(2 * n_cut + 1).abs();
            Ok(TailRow {
                n_cut,
                tail_norm,
                eigenvalue,
                holds: eigenvalue <= tail_norm + WEYL_SLACK,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn ellipse() -> ExteriorMap {
        ExteriorMap::ellipse(Complex64::new(0.5, 0.0), 1.0).unwrap()
    }

    fn ellipse_spectrum(n: usize) -> Spectrum {
        TruncatedNpMatrix::for_map(&ellipse(), n).unwrap().spectrum().unwrap()
    }

    #[test]
    fn ordering_pairs_and_permutes() {
        let raw = Spectrum::from_eigenvalues(vec![-0.125, 0.0625, 0.25, -0.25, 0.125, -0.0625], 0.5);
        let o = order_eigenvalues(&raw, 1e-12).unwrap();
        assert_eq!(o.spectrum.eigenvalues, vec![0.25, -0.25, 0.125, -0.125, 0.0625, -0.0625]);
        assert_eq!(o.jitter, 0.0);

        let zeros = Spectrum::from_eigenvalues(vec![0.0; 4], 0.5);
        assert_eq!(order_eigenvalues(&zeros, 0.0).unwrap().spectrum, zeros);

        let jittered = Spectrum::from_eigenvalues(vec![0.25 + 1e-8, -0.25, 0.125, -0.125 - 1e-8], 0.5);
        let o = order_eigenvalues(&jittered, 1e-6).unwrap();
        assert!((o.jitter - 1e-8).abs() < 1e-15);
        assert!(matches!(
            order_eigenvalues(&jittered, 1e-9),
            Err(Error::Unpaired { .. })
        ));
    }

    #[test]
    fn ellipse_exponential_fit() {
        let r = fit_decay(&ellipse_spectrum(20), DecayModel::Exponential, IndexRange::new(1, 20).unwrap()).unwrap();
        assert!((r.slope - 0.5f64.ln()).abs() < 1e-10);
        assert!(r.residual < 1e-9);
        assert!((r.predict(3) - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn disk_fit_rejected_and_constant_zero() {
        let s = TruncatedNpMatrix::for_map(&ExteriorMap::disk(), 8).unwrap().spectrum().unwrap();
        let range = IndexRange::new(1, 8).unwrap();
        assert!(matches!(fit_decay(&s, DecayModel::Power, range), Err(Error::ZeroEigenvalue(1))));
        assert_eq!(bound_constant(&s, 1.0, 0.5, range).unwrap(), 0.0);
    }

    #[test]
    fn bound_constant_dominates() {
        let s = ellipse_spectrum(20);
        let range = IndexRange::new(1, 20).unwrap();
        let c = bound_constant(&s, 1.0, 0.5, range).unwrap();
        assert!(c.is_finite() && c > 0.0);
        for k in range.iter() {
            assert!(c / k as f64 >= s.pair_magnitude(k));
        }
        assert!(bound_constant(&s, 0.0, 0.4, range).is_err());
        assert!(bound_constant(&s, 1.0, 1.0, range).is_err());
    }

    #[test]
    fn ellipse_lemma_constant() {
        let t = GrunskyTable::recursive(&ellipse(), 40).unwrap();
        let r = lemma_constant(&t, 1.0, 0.5, 16).unwrap();
        let expected = (1..=16).map(|s| 0.25f64.powi(s) * (s as f64).powi(3)).fold(0.0, f64::max);
        assert!((r.m - expected).abs() < 1e-12);
        assert_eq!(r.worst_pair, (2, 2));
        assert_eq!(r.grid.len(), 256);

        let d = GrunskyTable::recursive(&ExteriorMap::disk(), 8).unwrap();
        assert_eq!(lemma_constant(&d, 1.0, 0.5, 8).unwrap().m, 0.0);
    }

    #[test]
    fn ellipse_tail_study_is_tight() {
        let rows = tail_vs_eigenvalue_study(&ellipse(), &[1, 3, 8], 20).unwrap();
        for r in rows {
            assert!(r.holds);
            assert!((r.tail_norm - 0.5f64.powi(r.n_cut as i32 + 2)).abs() < 1e-12);
            assert!((r.tail_norm - r.eigenvalue).abs() < 1e-12);
        }
    }

    #[test]
    fn admissible_range_trims() {
        let s = ellipse_spectrum(20);
        let r = admissible_range(&s, IndexRange::new(1, 20).unwrap(), 1e-9).unwrap();
        assert_eq!(r.end, 18);
        assert!(admissible_range(&s, IndexRange::new(1, 20).unwrap(), 1.0).is_none());
    }
}
