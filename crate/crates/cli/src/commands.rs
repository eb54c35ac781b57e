//! Subcommand implementations. Each builds its CSV or report text and hands it
//! to [`output::emit`] together with the run manifest.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use npgrunsky::decay::{
    admissible_range, bound_constant, fit_decay, noise_floor, tail_vs_eigenvalue_study,
};
use npgrunsky::grunsky::ROW_BOUND_SLACK;
use npgrunsky::layer::{LayerPotentials, Location, Side};
use npgrunsky::spectrum::NORM_BOUND_SLACK;
use npgrunsky::{
    DecayModel, DensityCoefficients, Error, GrunskyTable, IndexRange, KernelMatrix, SymmetrizedGrunsky,
    TruncatedNpMatrix,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{emit, num, Csv, Report, RunManifest};
use crate::{exit, Failure, Loaded};

pub struct Context<'a> {
    pub domain: &'a Loaded,
    pub out: Option<&'a std::path::Path>,
    pub seed: u64,
    pub tol_scale: f64,
    pub manifest: RunManifest<'a>,
}

impl Context<'_> {
    fn emit(&self, text: &str) -> Result<(), Failure> {
        emit(self.out, text, &self.manifest)
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GrunskyArgs {
    /// Table size
    #[arg(short = 'N', default_value_t = 32)]
    n: usize,
    /// `recursive` or `composition`
    #[arg(long, default_value = "recursive")]
    method: String,
}

pub fn grunsky(ctx: &Context, a: &GrunskyArgs) -> Result<(), Failure> {
    let map = &ctx.domain.map;
    let table = match a.method.as_str() {
        "recursive" => GrunskyTable::recursive(map, a.n)?,
        "composition" => {
            let (t, diag) = GrunskyTable::by_composition_default(map, a.n)?;
            if diag.aliasing_warning {
                eprintln!("warning: composition aliasing estimate {:.3e}", diag.aliasing);
            }
            t
        }
        other => {
            return Err(Failure::new(
                exit::USAGE,
                format!("unknown method `{other}` (expected recursive or composition)"),
            ))
        }
    };
    let mu = SymmetrizedGrunsky::new(&table)?;
    eprintln!("identity residual (relative) = {:.3e}", table.identity_residual().relative());
    let mut csv = Csv::new(&["m", "k", "c_re", "c_im", "mu_re", "mu_im"]);
    for m in 1..=a.n {
        for k in 1..=a.n {
            let (c, u) = (table.get(m, k), mu.get(m, k));
            csv.row(&[m.to_string(), k.to_string(), num(c.re), num(c.im), num(u.re), num(u.im)]);
        }
    }
    ctx.emit(&csv.into_string())
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Truncation size
    #[arg(short = 'N', default_value_t = 64)]
    n: usize,
    /// Also write eigenvector coefficients to this CSV
    #[arg(long)]
    vectors: Option<PathBuf>,
}

pub fn spectrum(ctx: &Context, a: &SpectrumArgs) -> Result<(), Failure> {
    let spec = TruncatedNpMatrix::for_map(&ctx.domain.map, a.n)?.spectrum()?;
    let mut csv = Csv::new(&["k", "lambda", "abs_lambda"]);
    for (i, l) in spec.eigenvalues.iter().enumerate() {
        csv.row(&[(i + 1).to_string(), num(*l), num(l.abs())]);
    }
    ctx.emit(&csv.into_string())?;
    if let (Some(path), Some(vectors)) = (&a.vectors, &spec.vectors) {
        let mut vcsv = Csv::new(&["k", "basis", "re", "im"]);
        for (i, v) in vectors.iter().enumerate() {
            for (j, c) in v.iter().enumerate() {
                let basis = if j < a.n { j as i64 + 1 } else { -((j - a.n) as i64 + 1) };
                vcsv.row(&[(i + 1).to_string(), basis.to_string(), num(c.re), num(c.im)]);
            }
        }
        emit(Some(path), &vcsv.into_string(), &ctx.manifest)?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct TailnormArgs {
    /// Window size
    #[arg(short = 'N', default_value_t = 64)]
    n: usize,
    /// Comma-separated cut indices (default: powers of two below N)
    #[arg(long, value_delimiter = ',')]
    cuts: Vec<usize>,
}

pub fn tailnorm(ctx: &Context, a: &TailnormArgs) -> Result<(), Failure> {
    let cuts: Vec<usize> = if a.cuts.is_empty() {
        std::iter::successors(Some(1usize), |c| Some(c * 2))
            .take_while(|&c| c < a.n)
            .collect()
    } else {
        a.cuts.clone()
    };
    let mat = TruncatedNpMatrix::for_map(&ctx.domain.map, a.n)?;
    let mut csv = Csv::new(&["n_cut", "tail_norm"]);
    for c in cuts {
        if c >= a.n {
            return Err(Failure::new(exit::USAGE, format!("cut {c} must be below N = {}", a.n)));
        }
        csv.row(&[c.to_string(), num(mat.tail_norm(c)?)]);
    }
    ctx.emit(&csv.into_string())
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    /// Quadrature size
    #[arg(short = 'n', default_value_t = 512)]
    n: usize,
    /// Number of eigenvalues to report
    #[arg(long, default_value_t = 10)]
    count: usize,
}

pub fn oracle(ctx: &Context, a: &OracleArgs) -> Result<(), Failure> {
    let spec = KernelMatrix::build(&ctx.domain.map, a.n)?.oracle_spectrum(a.count)?;
    eprintln!("zeta0_eigenvalue = {}", num(spec.zeta0_eigenvalue));
    let mut csv = Csv::new(&["k", "lambda", "abs_lambda"]);
    for (i, l) in spec.eigenvalues.iter().enumerate() {
        csv.row(&[(i + 1).to_string(), num(*l), num(l.abs())]);
    }
    ctx.emit(&csv.into_string())
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Series truncation size
    #[arg(short = 'N', default_value_t = 64)]
    n_series: usize,
    /// Quadrature size
    #[arg(short = 'n', default_value_t = 512)]
    n_quad: usize,
    /// Number of magnitudes compared
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Agreement tolerance (scaled by --tol-scale)
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

pub fn compare(ctx: &Context, a: &CompareArgs) -> Result<(), Failure> {
    let map = &ctx.domain.map;
    let series = TruncatedNpMatrix::for_map(map, a.n_series)?.spectrum()?;
    let oracle = KernelMatrix::build(map, a.n_quad)?.oracle_spectrum(a.count)?;
    let c = npgrunsky::compare(&series, &oracle, a.count)?;
    let tol = a.tol * ctx.tol_scale;
    let mut r = Report::default();
    r.line("count", c.count);
    r.line("max_abs_deviation", num(c.max_abs));
    r.line("max_rel_deviation", num(c.max_rel));
    r.line("worst_rank", c.worst);
    r.line("oracle_zeta0_eigenvalue", num(oracle.zeta0_eigenvalue));
    r.line("tolerance", num(tol));
    r.line("status", status(c.max_abs <= tol));
    ctx.emit(&r.into_string())
}

#[derive(Debug, Args, Serialize)]
pub struct PotentialArgs {
    /// Density index m (may be negative)
    #[arg(short = 'm', allow_negative_numbers = true)]
    m: i64,
    /// Grid points per axis
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Grunsky table size for exterior series
    #[arg(short = 'N', default_value_t = 128)]
    n: usize,
}

pub fn potential(ctx: &Context, a: &PotentialArgs) -> Result<(), Failure> {
    if a.grid < 2 {
        return Err(Failure::new(exit::USAGE, "--grid needs at least 2 points"));
    }
    let map = &ctx.domain.map;
    let table = GrunskyTable::recursive(map, a.n.max(a.m.unsigned_abs() as usize))?;
    let lp = LayerPotentials::new(map, &table)?;
    let boundary = map.boundary_sample(256)?;
    let (mut lo, mut hi) = (boundary[0].point, boundary[0].point);
    for s in &boundary {
        lo = Complex64::new(lo.re.min(s.point.re), lo.im.min(s.point.im));
        hi = Complex64::new(hi.re.max(s.point.re), hi.im.max(s.point.im));
    }
    let pad = (hi - lo) * 0.25;
    let (lo, hi) = (lo - pad, hi + pad);
    let mut csv = Csv::new(&["x", "y", "side", "re", "im"]);
    let step = |i: usize, a0: f64, a1: f64| a0 + (a1 - a0) * i as f64 / (a.grid - 1) as f64;
    for j in 0..a.grid {
        for i in 0..a.grid {
            let z = Complex64::new(step(i, lo.re, hi.re), step(j, lo.im, hi.im));
            let e = lp.single_layer(a.m, Location::Plane(z))?;
            let side = match e.side {
                Side::Interior => "interior",
                Side::Exterior => "exterior",
                Side::Boundary => "boundary",
            };
            csv.row(&[num(z.re), num(z.im), side.into(), num(e.value.re), num(e.value.im)]);
        }
    }
    ctx.emit(&csv.into_string())
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateJumpArgs {
    /// Density index m (may be negative)
    #[arg(short = 'm', allow_negative_numbers = true)]
    m: i64,
    /// Grunsky table size
    #[arg(short = 'N', default_value_t = 128)]
    n: usize,
    /// Boundary offset ε
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Angular samples
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Jump/matrix agreement tolerance (scaled by --tol-scale)
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

struct JumpOutcome {
    residual: f64,
    residual_half: f64,
    ratio: Option<f64>,
    max_deviation: f64,
    flagged: usize,
}

const RATIO_RANGE: (f64, f64) = (1.7, 2.3);

fn jump_check(map: &npgrunsky::ExteriorMap, n: usize, m: i64, eps: f64, thetas: &[f64]) -> Result<JumpOutcome, Error> {
    let n = n.max(m.unsigned_abs() as usize);
    let table = GrunskyTable::recursive(map, n)?;
    let mat = TruncatedNpMatrix::assemble(&SymmetrizedGrunsky::new(&table)?)?;
    let lp = LayerPotentials::new(map, &table)?;
    let c = lp.continuity_study(m, thetas.len(), eps)?;
    let image = if m == 0 {
        None
    } else {
        Some(mat.apply(&DensityCoefficients::unit(m, n)?)?)
    };
    let mut max_deviation = 0.0f64;
    let mut flagged = 0;
    for &theta in thetas {
        let j = lp.np_via_jump(m, theta, eps)?;
        flagged += j.flagged as usize;
        // K*[ζ_0] = ζ_0/2 with ζ_0 = 1/h
        let expected = match &image {
            Some(img) => img.evaluate(map, theta)?,
            None => Complex64::new(0.5 / map.scale_factor(map.rho0(), theta)?, 0.0),
        };
        max_deviation = max_deviation.max((j.value - expected).norm());
    }
    Ok(JumpOutcome {
        residual: c.residual,
        residual_half: c.residual_half,
        ratio: c.ratio,
        max_deviation,
        flagged,
    })
}

fn ratio_ok(ratio: Option<f64>) -> bool {
    ratio.is_none_or(|r| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&r))
}

fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

pub fn validate_jump(ctx: &Context, a: &ValidateJumpArgs) -> Result<(), Failure> {
    if a.samples == 0 {
        return Err(Failure::new(exit::USAGE, "--samples must be positive"));
    }
    let o = jump_check(&ctx.domain.map, a.n, a.m, a.eps, &uniform_angles(a.samples))?;
    let tol = a.tol * ctx.tol_scale;
    let ok = ratio_ok(o.ratio) && o.max_deviation <= tol;
    let mut r = Report::default();
    r.line("m", a.m);
    r.line("eps", num(a.eps));
    r.line("continuity_residual", num(o.residual));
    r.line("continuity_residual_half", num(o.residual_half));
    r.line("richardson_ratio", o.ratio.map_or("exact".into(), num));
    r.line("max_jump_deviation", num(o.max_deviation));
    r.line("flagged_extrapolations", o.flagged);
    r.line("tolerance", num(tol));
    r.line("status", status(ok));
    ctx.emit(&r.into_string())?;
    if ok {
        Ok(())
    } else {
        Err(Failure::new(exit::INVARIANT, "jump-relation check failed"))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DecayArgs {
    /// Truncation size
    #[arg(short = 'N', default_value_t = 64)]
    n: usize,
    /// `power` or `exp`
    #[arg(long, default_value = "power")]
    model: String,
    /// Smoothness exponent p
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Hölder exponent α
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Pair-index range `start,end` (default: 1..N trimmed to the noise floor)
    #[arg(long, value_delimiter = ',')]
    range: Vec<usize>,
}

pub fn decay(ctx: &Context, a: &DecayArgs) -> Result<(), Failure> {
    let model: DecayModel = a.model.parse()?;
    let map = &ctx.domain.map;
    let spec = TruncatedNpMatrix::for_map(map, a.n)?.spectrum()?;
    let range = match a.range.as_slice() {
        [s, e] => IndexRange::new(*s, *e)?,
        [_, ..] => return Err(Failure::new(exit::USAGE, "--range takes exactly two indices: start,end")),
        [] => {
            let floor = noise_floor(map, a.n)?;
            admissible_range(&spec, IndexRange::new(1, a.n)?, floor).ok_or_else(|| {
                Failure::new(
                    exit::NUMERICAL,
                    format!("fewer than two eigenvalue pairs above the noise floor {floor:.3e}"),
                )
            })?
        }
    };
    let fit = fit_decay(&spec, model, range)?;
    let c = bound_constant(&spec, a.p, a.alpha, range)?;
    eprintln!(
        "slope = {}  intercept = {}  residual = {}  range = [{}, {}]  bound_constant = {}",
        num(fit.slope),
        num(fit.intercept),
        num(fit.residual),
        range.start,
        range.end,
        num(c)
    );
    let e = a.p + a.alpha - 0.5;
    let mut csv = Csv::new(&["k", "abs_lambda_2k", "fitted", "bound"]);
    for k in range.iter() {
        csv.row(&[
            k.to_string(),
            num(spec.pair_magnitude(k)),
            num(fit.predict(k)),
            num(c * (k as f64).powf(-e)),
        ]);
    }
    ctx.emit(&csv.into_string())
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    /// Truncation size
    #[arg(short = 'N', default_value_t = 64)]
    n: usize,
    /// Nyström quadrature size
    #[arg(short = 'n', default_value_t = 256)]
    n_quad: usize,
    /// Eigenvalues compared against the oracle
    #[arg(long, default_value_t = 10)]
    count: usize,
}

/// Runs every invariant at its default tolerance; `--tol-scale` is not applied.
pub fn validate(ctx: &Context, a: &ValidateArgs) -> Result<(), Failure> {
    let map = &ctx.domain.map;
    let mut r = Report::default();
    let mut all = true;
    let mut check = |r: &mut Report, name: &str, ok: bool, detail: String| {
        all &= ok;
        r.line(name, format!("{} {detail}", status(ok)));
    };

    let table = GrunskyTable::recursive(map, a.n)?;
    let ident = table.identity_residual();
    check(&mut r, "grunsky_identity", ident.holds(), format!("relative_residual={:.3e}", ident.relative()));

    let mu = SymmetrizedGrunsky::new(&table)?;
    let row = mu.row_l2_report().into_iter().fold(0.0, f64::max);
    check(&mut r, "row_l2_bound", row <= 1.0 + ROW_BOUND_SLACK, format!("max_row_sum={}", num(row)));

    let mat = TruncatedNpMatrix::assemble(&mu)?;
    let sigma = mat.norm()?;
    check(&mut r, "norm_bound", sigma <= 0.5 + NORM_BOUND_SLACK, format!("sigma_max={}", num(sigma)));

    let spec = mat.spectrum()?;
    let mut svd = spec.eigenvalues.clone();
    svd.sort_by(|x, y| y.total_cmp(x));
    let sym = mat
        .hermitian_eigenvalues()
        .iter()
        .zip(&svd)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let paired = spec.eigenvalues.chunks(2).all(|p| p[0] == -p[1]);
    check(&mut r, "spectral_symmetry", paired && sym <= 1e-12, format!("hermitian_deviation={sym:.3e}"));
    let largest = spec.magnitudes().into_iter().fold(0.0, f64::max);
    r.line("max_abs_eigenvalue", num(largest));
    if largest == 0.0 {
        r.line("note", "all-zero spectrum");
    }

    let cuts: Vec<usize> = (0..a.n).collect();
    let study = tail_vs_eigenvalue_study(map, &cuts, a.n)?;
    let worst = study
        .iter()
        .map(|t| t.eigenvalue - t.tail_norm)
        .fold(f64::NEG_INFINITY, f64::max);
    check(
        &mut r,
        "weyl_courant",
        study.iter().all(|t| t.holds),
        format!("max_excess={worst:.3e}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let thetas: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let mut jump_ok = true;
    let mut jump_dev = 0.0f64;
    for m in 1..=4 {
        let o = jump_check(map, a.n.max(128), m, 1e-3, &thetas)?;
        jump_ok &= ratio_ok(o.ratio) && o.max_deviation <= 1e-5;
        jump_dev = jump_dev.max(o.max_deviation);
    }
    check(&mut r, "jump_relation", jump_ok, format!("max_deviation={jump_dev:.3e}"));

    let oracle = KernelMatrix::build(map, a.n_quad)?;
    let zeta0 = oracle.zeta0_residual();
    let fine = oracle.oracle_spectrum(a.count)?;
    let coarse = KernelMatrix::build(map, a.n_quad / 2)?.oracle_spectrum(a.count)?;
    let quadrature = npgrunsky::compare(&fine, &coarse, a.count)?.max_abs;
    let tail = TruncatedNpMatrix::for_map(map, 2 * a.n)?.tail_norm(a.n)?;
    let count = a.count.min(spec.len());
    let dev = npgrunsky::compare(&spec, &fine, count)?.max_abs;
    check(
        &mut r,
        "oracle_comparison",
        dev <= tail + quadrature + 1e-12 && zeta0 <= 1e-8,
        format!("max_deviation={dev:.3e} tail_norm={tail:.3e} quadrature={quadrature:.3e} zeta0_residual={zeta0:.3e}"),
    );

    r.line("status", status(all));
    ctx.emit(&r.into_string())?;
    if all {
        Ok(())
    } else {
        Err(Failure::new(exit::INVARIANT, "invariant violations found"))
    }
}
