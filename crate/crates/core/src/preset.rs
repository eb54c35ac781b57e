//! Named domain families addressable from the command line, e.g.
//! `ellipse:a=0.5,gamma=1` or `powerlaw:c=0.2,beta=4,L=64,gamma=1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::{ExteriorMap, UnivalenceReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Disk {
        gamma: f64,
    },
    /// `Ψ(w) = w + a/w`.
    Ellipse {
        a: Complex64,
        gamma: f64,
    },
    /// `a_k = c·k^{-β}` for `k = 1..=L`.
    PowerLaw {
        c: f64,
        beta: f64,
        len: usize,
        gamma: f64,
    },
    /// Random complex coefficients `a_k = scale·k^{-decay}·(u + iv)`, `u, v ~ U(-1, 1)`,
    /// shrunk until the coefficient-sum injectivity certificate holds with margin.
    Random {
        seed: u64,
        len: usize,
        scale: f64,
        decay: f64,
        gamma: f64,
    },
}

/// Minimum certified injectivity margin for random presets.
const RANDOM_MARGIN: f64 = 0.2;

impl Preset {
    pub fn to_map(&self) -> Result<ExteriorMap> {
        match *self {
            Preset::Disk { gamma } => ExteriorMap::new(gamma, Complex64::default(), Vec::new()),
            Preset::Ellipse { a, gamma } => ExteriorMap::ellipse(a, gamma),
            Preset::PowerLaw { c, beta, len, gamma } => ExteriorMap::new(
                gamma,
                Complex64::default(),
                (1..=len)
                    .map(|k| Complex64::new(c * (k as f64).powf(-beta), 0.0))
                    .collect(),
            ),
            Preset::Random {
                seed,
                len,
                scale,
                decay,
                gamma,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut coeffs: Vec<Complex64> = (1..=len)
                    .map(|k| {
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let im: f64 = rng.gen_range(-1.0..1.0);
                        Complex64::new(re, im) * scale * (k as f64).powf(-decay)
                    })
                    .collect();
                loop {
                    let r = UnivalenceReport::compute(gamma, &coeffs);
                    if r.sufficient_margin >= RANDOM_MARGIN {
                        break;
                    }
                    coeffs.iter_mut().for_each(|c| *c *= 0.8);
                }
                ExteriorMap::new(gamma, Complex64::default(), coeffs)
            }
        }
    }
}

fn parse_params(body: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in body.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{part}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take<T: FromStr>(params: &mut BTreeMap<String, String>, key: &str, default: Option<T>) -> Result<T> {
    match params.remove(key) {
        Some(v) => v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse {key}=`{v}`"))),
        None => default.ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{key}`"))),
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let mut p = parse_params(body)?;
        let preset = match name.trim() {
            "disk" => Preset::Disk {
                gamma: take(&mut p, "gamma", Some(1.0))?,
            },
            "ellipse" => Preset::Ellipse {
                a: Complex64::new(take(&mut p, "a", None)?, take(&mut p, "a_im", Some(0.0))?),
                gamma: take(&mut p, "gamma", Some(1.0))?,
            },
            "powerlaw" => Preset::PowerLaw {
                c: take(&mut p, "c", None)?,
                beta: take(&mut p, "beta", None)?,
                len: take(&mut p, "L", Some(64))?,
                gamma: take(&mut p, "gamma", Some(1.0))?,
            },
            "random" => Preset::Random {
                seed: take(&mut p, "seed", Some(0))?,
                len: take(&mut p, "L", Some(16))?,
                scale: take(&mut p, "scale", Some(0.3))?,
                decay: take(&mut p, "decay", Some(2.0))?,
                gamma: take(&mut p, "gamma", Some(1.0))?,
            },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        if let Some(k) = p.keys().next() {
            return Err(Error::InvalidParameter(format!(
                "unknown parameter `{k}` for preset `{name}`"
            )));
        }
        Ok(preset)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Disk { gamma } => write!(f, "disk:gamma={gamma}"),
            Preset::Ellipse { a, gamma } if a.im == 0.0 => {
                write!(f, "ellipse:a={},gamma={gamma}", a.re)
            }
            Preset::Ellipse { a, gamma } => {
                write!(f, "ellipse:a={},a_im={},gamma={gamma}", a.re, a.im)
            }
            Preset::PowerLaw { c, beta, len, gamma } => {
                write!(f, "powerlaw:c={c},beta={beta},L={len},gamma={gamma}")
            }
            Preset::Random {
                seed,
                len,
                scale,
                decay,
                gamma,
            } => write!(
                f,
                "random:seed={seed},L={len},scale={scale},decay={decay},gamma={gamma}"
            ),
        }
    }
}
