//! Experiment dimensions, random channels and the combined channel vector.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, vec, ComplexMatrix};
use crate::rng::complex_gaussian;

pub const DEFAULT_SEED: u64 = 42;

/// How the noise variance is chosen for a given SNR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `σ² = mean|noiseless sample|² / 10^(snr/10)`, measured per trial.
    #[default]
    SnrNormalized,
    /// `σ² = 10^(−snr/10)`.
    FixedSigma,
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::SnrNormalized => "snr-normalized",
            NoiseMode::FixedSigma => "fixed-sigma",
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr-normalized" => Ok(NoiseMode::SnrNormalized),
            "fixed-sigma" => Ok(NoiseMode::FixedSigma),
            other => Err(Error::InvalidConfig(format!(
                "unknown noise mode {other:?} (expected snr-normalized or fixed-sigma)"
            ))),
        }
    }
}

/// Dimensions of one BD-RIS experiment.
///
/// `n = nbar · q` elements split into `q` groups of `nbar`; `t` pilot slots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemConfig {
    pub m_t: usize,
    pub m_r: usize,
    pub n: usize,
    pub nbar: usize,
    pub q: usize,
    pub t: usize,
    pub noise_mode: NoiseMode,
    pub master_seed: u64,
}

impl SystemConfig {
    /// Config with the minimum pilot length `m_t · nbar² · q`.
    pub fn new(m_t: usize, m_r: usize, n: usize, nbar: usize) -> Result<Self> {
        if m_t == 0 || m_r == 0 || n == 0 || nbar == 0 {
            return Err(Error::InvalidConfig(format!(
                "all counts must be >= 1 (m_t={m_t}, m_r={m_r}, n={n}, nbar={nbar})"
            )));
        }
        if !n.is_multiple_of(nbar) {
            return Err(Error::InvalidConfig(format!(
                "group size nbar={nbar} does not divide n={n}"
            )));
        }
        let q = n / nbar;
        let cfg = Self {
            m_t,
            m_r,
            n,
            nbar,
            q,
            t: m_t * nbar * nbar * q,
            noise_mode: NoiseMode::default(),
            master_seed: DEFAULT_SEED,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The layout used for every figure: N = 32, M_T = 2, M_R = 4.
    pub fn reference(nbar: usize) -> Result<Self> {
        Self::new(2, 4, 32, nbar)
    }

    pub fn with_pilots(mut self, t: usize) -> Result<Self> {
        self.t = t;
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise_mode(mut self, mode: NoiseMode) -> Self {
        self.noise_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// Same antennas, element count and options with a different group size.
    pub fn with_nbar(&self, nbar: usize) -> Result<Self> {
        Ok(Self::new(self.m_t, self.m_r, self.n, nbar)?
            .with_noise_mode(self.noise_mode)
            .with_seed(self.master_seed))
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.m_t, self.m_r, self.n, self.nbar, self.q, self.t];
        if counts.contains(&0) {
            return Err(Error::InvalidConfig("all counts must be >= 1".into()));
        }
        if self.n != self.nbar * self.q {
            return Err(Error::InvalidConfig(format!(
                "n={} is not nbar*q={}*{}",
                self.n, self.nbar, self.q
            )));
        }
        if self.t < self.min_pilots() {
            return Err(Error::InvalidConfig(format!(
                "t={} below identifiability bound m_t*nbar^2*q={}",
                self.t,
                self.min_pilots()
            )));
        }
        Ok(())
    }

    pub fn min_pilots(&self) -> usize {
        self.m_t * self.nbar * self.nbar * self.q
    }

    /// Length of one group's segment `vec(H^(q) ⊗ G^(q))`.
    pub fn segment_len(&self) -> usize {
        self.m_r * self.m_t * self.nbar * self.nbar
    }

    /// Length of the combined channel `c`.
    pub fn channel_len(&self) -> usize {
        self.segment_len() * self.q
    }

    /// Column count of the combined training matrix Ω.
    pub fn omega_cols(&self) -> usize {
        self.m_t * self.nbar * self.nbar * self.q
    }
}

/// JSON configuration document. Missing keys fall back to the reference layout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub m_t: Option<usize>,
    pub m_r: Option<usize>,
    pub n: Option<usize>,
    pub nbar: Option<usize>,
    pub snr_db: Option<f64>,
    pub fraction: Option<f64>,
    pub trials: Option<usize>,
    pub noise_mode: Option<NoiseMode>,
    pub master_seed: Option<u64>,
    /// Pilot length; may only raise the minimum.
    pub t: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_system_config(&self) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::new(
            self.m_t.unwrap_or(2),
            self.m_r.unwrap_or(4),
            self.n.unwrap_or(32),
            self.nbar.unwrap_or(4),
        )?
        .with_noise_mode(self.noise_mode.unwrap_or_default())
        .with_seed(self.master_seed.unwrap_or(DEFAULT_SEED));
        if let Some(t) = self.t {
            cfg = cfg.with_pilots(t)?;
        }
        Ok(cfg)
    }
}

/// TX-RIS channel `h` (`m_t × n`) and RIS-RX channel `g` (`m_r × n`).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPair {
    pub h: ComplexMatrix,
    pub g: ComplexMatrix,
    nbar: usize,
}

impl ChannelPair {
    pub fn new(h: ComplexMatrix, g: ComplexMatrix, nbar: usize) -> Result<Self> {
        if h.cols() != g.cols() {
            return Err(Error::dims("ChannelPair", h.cols(), g.cols()));
        }
        if nbar == 0 || !h.cols().is_multiple_of(nbar) {
            return Err(Error::InvalidConfig(format!(
                "nbar={nbar} does not divide element count {}",
                h.cols()
            )));
        }
        Ok(Self { h, g, nbar })
    }

    pub fn groups(&self) -> usize {
        self.h.cols() / self.nbar
    }

    /// Group `q` of `H`: columns `[q·nbar, (q+1)·nbar)`.
    pub fn h_block(&self, q: usize) -> ComplexMatrix {
        self.h.column_block(q * self.nbar, self.nbar)
    }

    pub fn g_block(&self, q: usize) -> ComplexMatrix {
        self.g.column_block(q * self.nbar, self.nbar)
    }
}

/// Draws i.i.d. unit-variance Rayleigh channels; `H` first, then `G`.
pub fn generate_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelPair {
    let h = ComplexMatrix::from_fn(cfg.m_t, cfg.n, |_, _| complex_gaussian(rng));
    let g = ComplexMatrix::from_fn(cfg.m_r, cfg.n, |_, _| complex_gaussian(rng));
    ChannelPair { h, g, nbar: cfg.nbar }
}

/// Stacked per-group channels `c = [vec(H⁽¹⁾⊗G⁽¹⁾); …; vec(H⁽Q⁾⊗G⁽Q⁾)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedChannel {
    pub c: Vec<Complex64>,
    segment_len: usize,
}

impl CombinedChannel {
    pub fn from_vec(c: Vec<Complex64>, segment_len: usize) -> Result<Self> {
        if segment_len == 0 || !c.len().is_multiple_of(segment_len) {
            return Err(Error::dims(
                "CombinedChannel",
                format!("multiple of {segment_len}"),
                c.len(),
            ));
        }
        Ok(Self { c, segment_len })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn segment(&self, q: usize) -> &[Complex64] {
        &self.c[q * self.segment_len..(q + 1) * self.segment_len]
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }
}

pub fn combined_channel(ch: &ChannelPair, cfg: &SystemConfig) -> Result<CombinedChannel> {
    if ch.h.shape() != (cfg.m_t, cfg.n) {
        return Err(Error::dims(
            "combined_channel H",
            format!("{}x{}", cfg.m_t, cfg.n),
            format!("{}x{}", ch.h.rows(), ch.h.cols()),
        ));
    }
    if ch.g.shape() != (cfg.m_r, cfg.n) {
        return Err(Error::dims(
            "combined_channel G",
            format!("{}x{}", cfg.m_r, cfg.n),
            format!("{}x{}", ch.g.rows(), ch.g.cols()),
        ));
    }
    if ch.nbar != cfg.nbar {
        return Err(Error::dims("combined_channel nbar", cfg.nbar, ch.nbar));
    }
    let mut c = Vec::with_capacity(cfg.channel_len());
    for q in 0..cfg.q {
        c.extend(vec(&kron(&ch.h_block(q), &ch.g_block(q))));
    }
    CombinedChannel::from_vec(c, cfg.segment_len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn config_invariants() {
        let cfg = SystemConfig::reference(4).unwrap();
        assert_eq!((cfg.q, cfg.t), (8, 256));
        assert!(SystemConfig::new(2, 4, 32, 3).is_err());
        assert!(SystemConfig::new(0, 4, 32, 4).is_err());
        assert!(cfg.clone().with_pilots(255).is_err());
        assert_eq!(cfg.with_pilots(300).unwrap().t, 300);
    }

    #[test]
    fn channel_shapes_and_determinism() {
        let cfg = SystemConfig::reference(4).unwrap();
        let a = generate_channels(&cfg, &mut stream(7, 3, Purpose::Channel));
        let b = generate_channels(&cfg, &mut stream(7, 3, Purpose::Channel));
        assert_eq!(a, b);
        assert_eq!(a.h.shape(), (2, 32));
        assert_eq!(a.g.shape(), (4, 32));
    }

    #[test]
    fn blocks_reassemble() {
        let cfg = SystemConfig::reference(8).unwrap();
        let ch = generate_channels(&cfg, &mut stream(1, 0, Purpose::Channel));
        let mut h = Vec::new();
        let mut g = Vec::new();
        for q in 0..ch.groups() {
            h.extend_from_slice(ch.h_block(q).as_slice());
            g.extend_from_slice(ch.g_block(q).as_slice());
        }
        assert_eq!(h, ch.h.as_slice());
        assert_eq!(g, ch.g.as_slice());
    }

    #[test]
    fn scalar_combined_channel() {
        let cfg = SystemConfig::new(1, 1, 1, 1).unwrap();
        let ch = ChannelPair::new(
            ComplexMatrix::from_real_rows(&[&[1.0]]),
            ComplexMatrix::from_real_rows(&[&[2.0]]),
            1,
        )
        .unwrap();
        let c = combined_channel(&ch, &cfg).unwrap();
        assert_eq!(c.c, vec![Complex64::new(2.0, 0.0)]);
    }

    #[test]
    fn combined_length_and_segments() {
        let cfg = SystemConfig::reference(4).unwrap();
        let ch = generate_channels(&cfg, &mut stream(5, 0, Purpose::Channel));
        let c = combined_channel(&ch, &cfg).unwrap();
        assert_eq!(c.len(), 4 * 2 * 16 * 8);
        for q in 0..cfg.q {
            assert_eq!(c.segment(q), vec(&kron(&ch.h_block(q), &ch.g_block(q))).as_slice());
        }
    }

    #[test]
    fn combined_rejects_wrong_shapes() {
        let cfg = SystemConfig::reference(4).unwrap();
        let other = SystemConfig::new(3, 4, 32, 4).unwrap();
        let ch = generate_channels(&other, &mut stream(5, 0, Purpose::Channel));
        assert!(combined_channel(&ch, &cfg).is_err());
    }

    #[test]
    fn config_file_keys() {
        let f: ConfigFile = serde_json::from_str(
            r#"{"m_t":2,"m_r":4,"n":32,"nbar":8,"snr_db":10,"fraction":0.2,
                "trials":100,"noise_mode":"fixed-sigma","master_seed":9}"#,
        )
        .unwrap();
        let cfg = f.to_system_config().unwrap();
        assert_eq!((cfg.q, cfg.t, cfg.master_seed), (4, 512, 9));
        assert_eq!(cfg.noise_mode, NoiseMode::FixedSigma);
        assert!(serde_json::from_str::<ConfigFile>(r#"{"bogus":1}"#).is_err());
    }
}
