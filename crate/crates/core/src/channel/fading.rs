//! Entry distributions for the random part of the channel. Every kind has
//! zero mean, unit second moment and independent real and imaginary parts.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default log-std of the log-normal amplitude.
pub const DEFAULT_LOGNORMAL_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingKind {
    /// Circularly symmetric complex Gaussian.
    Gaussian,
    /// `W_R cos θ_R + j W_I sin θ_I`, Rayleigh amplitudes with scale `1/√2`.
    RayleighPhase,
    /// Same phase model with Nakagami-`m` amplitudes (`Ω = 1`).
    NakagamiPhase { m: f64 },
    /// Same phase model with log-normal amplitudes, `μ_z = −σ_z²`.
    LogNormalPhase { sigma_z: f64 },
}

impl FadingKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingKind::NakagamiPhase { m } if !(m > 0.0) || !m.is_finite() => {
                Err(Error::Config(format!("Nakagami shape must be > 0, got {m}")))
            }
            FadingKind::LogNormalPhase { sigma_z } if !(sigma_z > 0.0) || !sigma_z.is_finite() => {
                Err(Error::Config(format!("log-normal sigma must be > 0, got {sigma_z}")))
            }
            _ => Ok(()),
        }
    }

    /// Returns a sampler for this kind. Fails on invalid parameters.
    pub fn sampler(&self) -> Result<EntrySampler> {
        self.validate()?;
        let amplitude = match *self {
            FadingKind::Gaussian => Amplitude::None,
            FadingKind::RayleighPhase => Amplitude::Rayleigh,
            FadingKind::NakagamiPhase { m } => Amplitude::Nakagami(
                Gamma::new(m, 1.0 / m).map_err(|e| Error::Config(format!("Nakagami: {e}")))?,
            ),
            FadingKind::LogNormalPhase { sigma_z } => Amplitude::LogNormal(
                LogNormal::new(-sigma_z * sigma_z, sigma_z).map_err(|e| Error::Config(format!("log-normal: {e}")))?,
            ),
        };
        Ok(EntrySampler { amplitude })
    }
}

impl fmt::Display for FadingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingKind::Gaussian => write!(f, "gaussian"),
            FadingKind::RayleighPhase => write!(f, "rayleigh"),
            FadingKind::NakagamiPhase { m } => write!(f, "nakagami:{m}"),
            FadingKind::LogNormalPhase { sigma_z } => write!(f, "lognormal:{sigma_z}"),
        }
    }
}

impl FromStr for FadingKind {
    type Err = Error;

    /// Parses `gaussian`, `rayleigh`, `nakagami:M` or `lognormal[:SIGMA]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad fading parameter '{p}'")))
        };
        let kind = match (name.trim().to_ascii_lowercase().as_str(), param) {
            ("gaussian", None) => FadingKind::Gaussian,
            ("rayleigh", None) => FadingKind::RayleighPhase,
            ("nakagami", Some(p)) => FadingKind::NakagamiPhase { m: parse(p)? },
            ("lognormal", None) => FadingKind::LogNormalPhase {
                sigma_z: DEFAULT_LOGNORMAL_SIGMA,
            },
            ("lognormal", Some(p)) => FadingKind::LogNormalPhase { sigma_z: parse(p)? },
            _ => return Err(Error::Config(format!("unknown fading '{s}'"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Clone)]
enum Amplitude {
    None,
    Rayleigh,
    Nakagami(Gamma<f64>),
    LogNormal(LogNormal<f64>),
}

/// Draws individual unit-power entries.
#[derive(Debug, Clone)]
pub struct EntrySampler {
    amplitude: Amplitude,
}

impl EntrySampler {
    fn amplitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.amplitude {
            Amplitude::None => unreachable!(),
            // Rayleigh(σ = 1/√2) by inversion: σ√(−2 ln U).
            Amplitude::Rayleigh => (-(1.0 - rng.random::<f64>()).ln()).sqrt(),
            Amplitude::Nakagami(gamma) => gamma.sample(rng).sqrt(),
            Amplitude::LogNormal(ln) => ln.sample(rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        if let Amplitude::None = self.amplitude {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            return Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2);
        }
        let w_r = self.amplitude(rng);
        let th_r = TAU * rng.random::<f64>();
        let w_i = self.amplitude(rng);
        let th_i = TAU * rng.random::<f64>();
        Complex64::new(w_r * th_r.cos(), w_i * th_i.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kinds() -> Vec<FadingKind> {
        vec![
            FadingKind::Gaussian,
            FadingKind::RayleighPhase,
            FadingKind::NakagamiPhase { m: 0.5 },
            FadingKind::NakagamiPhase { m: 10.0 },
            FadingKind::LogNormalPhase { sigma_z: 0.5 },
        ]
    }

    /// Mean and standard error of `f` over `n` draws.
    fn moment(kind: FadingKind, n: usize, seed: u64, f: impl Fn(Complex64) -> f64) -> (f64, f64) {
        let s = kind.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| f(s.sample(&mut rng))).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn unit_second_moment_all_kinds() {
        for (i, kind) in kinds().into_iter().enumerate() {
            let (m, se) = moment(kind, 1_000_000, 11 + i as u64, |z| z.norm_sqr());
            assert!((m - 1.0).abs() < 4.0 * se, "{kind}: E|X|^2 = {m} ± {se}");
        }
    }

    #[test]
    fn zero_mean_all_kinds() {
        for (i, kind) in kinds().into_iter().enumerate() {
            let (re, se_re) = moment(kind, 400_000, 100 + i as u64, |z| z.re);
            let (im, se_im) = moment(kind, 400_000, 200 + i as u64, |z| z.im);
            assert!(re.abs() < 4.0 * se_re, "{kind}: E Re = {re}");
            assert!(im.abs() < 4.0 * se_im, "{kind}: E Im = {im}");
        }
    }

    #[test]
    fn lognormal_amplitude_second_moment() {
        // E{e^{2Z}} = e^{2μ + 2σ²} = 1 with μ = −σ².
        let s = FadingKind::LogNormalPhase { sigma_z: 0.5 }.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| s.amplitude(&mut rng).powi(2)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn parse_round_trip() {
        for kind in kinds() {
            assert_eq!(kind.to_string().parse::<FadingKind>().unwrap(), kind);
        }
        assert_eq!(
            "lognormal".parse::<FadingKind>().unwrap(),
            FadingKind::LogNormalPhase { sigma_z: 0.5 }
        );
        assert!("nakagami".parse::<FadingKind>().is_err());
        assert!("nakagami:-1".parse::<FadingKind>().is_err());
        assert!("rician".parse::<FadingKind>().is_err());
    }
}
