//! Received-signal synthesis, the matched-filter estimator, NMSE scoring and
//! per-group channel decoupling.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dotc, kron_vec, nearest_kron_rank1, norm_sqr, unvec, vec_kron_map, ComplexMatrix};
use crate::rng::complex_gaussian;
use crate::system::{ChannelPair, CombinedChannel, NoiseMode, SystemConfig};
use crate::training::{TrainingDesign, ORTHOGONALITY_TOLERANCE};

/// SNR and the rule that turns it into a noise variance. An infinite SNR
/// means no noise is drawn at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub mode: NoiseMode,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, mode: NoiseMode) -> Self {
        Self { snr_db, mode }
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            mode: NoiseMode::SnrNormalized,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Noise variance per complex entry given the noiseless signal.
    pub fn sigma2(&self, noiseless: &[Complex64]) -> f64 {
        if self.is_noiseless() {
            return 0.0;
        }
        let inv_snr = 10f64.powf(-self.snr_db / 10.0);
        match self.mode {
            NoiseMode::FixedSigma => inv_snr,
            NoiseMode::SnrNormalized => norm_sqr(noiseless) / noiseless.len() as f64 * inv_snr,
        }
    }
}

/// Stacked observation `y = [y_1; …; y_T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedSignal {
    pub y: Vec<Complex64>,
    pub noiseless: Option<Vec<Complex64>>,
    pub sigma2: f64,
    m_r: usize,
}

impl ReceivedSignal {
    pub fn new(y: Vec<Complex64>, m_r: usize) -> Result<Self> {
        if m_r == 0 || !y.len().is_multiple_of(m_r) {
            return Err(Error::dims("ReceivedSignal", format!("multiple of {m_r}"), y.len()));
        }
        Ok(Self {
            y,
            noiseless: None,
            sigma2: 0.0,
            m_r,
        })
    }

    pub fn m_r(&self) -> usize {
        self.m_r
    }

    pub fn slots(&self) -> usize {
        self.y.len() / self.m_r
    }

    /// `y_t`, the `m_r` samples of slot `t`.
    pub fn slot(&self, t: usize) -> &[Complex64] {
        &self.y[t * self.m_r..(t + 1) * self.m_r]
    }
}

fn check_training(cfg: &SystemConfig, s_bar: &ComplexMatrix, x: &ComplexMatrix) -> Result<()> {
    if x.rows() != cfg.m_t {
        return Err(Error::dims("pilots", cfg.m_t, x.rows()));
    }
    if s_bar.shape() != (cfg.nbar * cfg.nbar * cfg.q, x.cols()) {
        return Err(Error::dims(
            "scattering training",
            format!("{}x{}", cfg.nbar * cfg.nbar * cfg.q, x.cols()),
            format!("{}x{}", s_bar.rows(), s_bar.cols()),
        ));
    }
    Ok(())
}

/// Per-slot synthesis `y_t = Σ_q G⁽q⁾ S̄_t⁽q⁾ H⁽q⁾ᵀ x_t + b_t`.
///
/// Noise is drawn in the order of `y` (slot-major, antenna-minor) with
/// variance from `noise`; nothing is drawn when `noise` is noiseless.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_rx<R: Rng + ?Sized>(
    ch: &ChannelPair,
    s_bar: &ComplexMatrix,
    x: &ComplexMatrix,
    cfg: &SystemConfig,
    noise: NoiseSpec,
    rng: &mut R,
    keep_noiseless: bool,
) -> Result<ReceivedSignal> {
    check_training(cfg, s_bar, x)?;
    if ch.h.shape() != (cfg.m_t, cfg.n) || ch.g.shape() != (cfg.m_r, cfg.n) {
        return Err(Error::dims(
            "synthesize_rx channels",
            format!("H {}x{}, G {}x{}", cfg.m_t, cfg.n, cfg.m_r, cfg.n),
            format!("H {}x{}, G {}x{}", ch.h.rows(), ch.h.cols(), ch.g.rows(), ch.g.cols()),
        ));
    }

    let (nbar, m_r, t_len) = (cfg.nbar, cfg.m_r, x.cols());
    let zero = Complex64::new(0.0, 0.0);
    let mut y = vec![zero; m_r * t_len];
    let mut v = vec![zero; nbar];
    let mut w = vec![zero; nbar];
    for t in 0..t_len {
        let xt = x.column(t);
        let st = s_bar.column(t);
        let yt = &mut y[t * m_r..(t + 1) * m_r];
        for q in 0..cfg.q {
            let base = q * nbar;
            // v = H⁽q⁾ᵀ x_t
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = ch.h.column(base + i).iter().zip(xt).map(|(h, x)| h * x).sum();
            }
            // w = S̄_t⁽q⁾ v
            let seg = &st[q * nbar * nbar..(q + 1) * nbar * nbar];
            w.fill(zero);
            for (j, &vj) in v.iter().enumerate() {
                for (wi, s) in w.iter_mut().zip(&seg[j * nbar..(j + 1) * nbar]) {
                    *wi += s * vj;
                }
            }
            // y_t += G⁽q⁾ w
            for (i, &wi) in w.iter().enumerate() {
                for (yr, g) in yt.iter_mut().zip(ch.g.column(base + i)) {
                    *yr += g * wi;
                }
            }
        }
    }

    let sigma2 = noise.sigma2(&y);
    let noiseless = keep_noiseless.then(|| y.clone());
    if !noise.is_noiseless() {
        let sigma = sigma2.sqrt();
        for yi in y.iter_mut() {
            *yi += complex_gaussian(rng) * sigma;
        }
    }
    Ok(ReceivedSignal {
        y,
        noiseless,
        sigma2,
        m_r,
    })
}

/// Noiseless `y = (Ω̄ ⊗ I_{M_R}) c`, evaluated slot by slot as
/// `y_t = unvec(c) · (s̄_t ⊗ x_t)` without forming either Kronecker product.
pub fn synthesize_rx_vectorized(
    c: &CombinedChannel,
    s_bar: &ComplexMatrix,
    x: &ComplexMatrix,
    cfg: &SystemConfig,
) -> Result<Vec<Complex64>> {
    check_training(cfg, s_bar, x)?;
    if c.len() != cfg.channel_len() {
        return Err(Error::dims("synthesize_rx_vectorized c", cfg.channel_len(), c.len()));
    }
    let cmat = unvec(&c.c, cfg.m_r, cfg.omega_cols())?;
    let mut y = Vec::with_capacity(cfg.m_r * x.cols());
    for t in 0..x.cols() {
        let row = kron_vec(s_bar.column(t), x.column(t));
        y.extend(cmat.matvec(&row)?);
    }
    Ok(y)
}

/// Combined-channel estimate, one segment per group.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub c_hat: Vec<Complex64>,
    segment_len: usize,
}

impl EstimateResult {
    pub fn new(c_hat: Vec<Complex64>, segment_len: usize) -> Result<Self> {
        if segment_len == 0 || !c_hat.len().is_multiple_of(segment_len) {
            return Err(Error::dims(
                "EstimateResult",
                format!("multiple of {segment_len}"),
                c_hat.len(),
            ));
        }
        Ok(Self { c_hat, segment_len })
    }

    pub fn segment(&self, q: usize) -> &[Complex64] {
        &self.c_hat[q * self.segment_len..(q + 1) * self.segment_len]
    }

    pub fn groups(&self) -> usize {
        self.c_hat.len() / self.segment_len
    }
}

/// Matched filter `ĉ = (N̄/T)·vec(Y·Ω*)`, which equals `(N̄/T)(Ω ⊗ I)ᴴ y`.
///
/// Always uses the ideal Ω from `d`; the receiver does not know `E`.
pub fn matched_filter(y: &ReceivedSignal, d: &TrainingDesign) -> Result<EstimateResult> {
    matched_filter_scaled(y, d, d.nbar() as f64 / d.slots() as f64)
}

/// Matched filter with an explicit scale; [`matched_filter`] uses `N̄/T`.
pub fn matched_filter_scaled(y: &ReceivedSignal, d: &TrainingDesign, scale: f64) -> Result<EstimateResult> {
    let residual = d.orthogonality_residual();
    if residual.is_nan() || residual >= ORTHOGONALITY_TOLERANCE {
        return Err(Error::NotOrthogonal {
            residual,
            tolerance: ORTHOGONALITY_TOLERANCE,
        });
    }
    let t_len = d.slots();
    if y.slots() != t_len {
        return Err(Error::dims("matched_filter slots", t_len, y.slots()));
    }
    let m_r = y.m_r;
    // Rows of Y = unvec(y, M_R, T), each contiguous over t.
    let rows: Vec<Vec<Complex64>> = (0..m_r)
        .map(|m| (0..t_len).map(|t| y.y[t * m_r + m]).collect())
        .collect();
    let omega = d.omega();
    let p = omega.cols();
    let mut c_hat = Vec::with_capacity(m_r * p);
    for col in 0..p {
        let w = omega.column(col);
        for row in &rows {
            c_hat.push(dotc(row, w).conj() * scale);
        }
    }
    EstimateResult::new(c_hat, m_r * d.m_t() * d.nbar() * d.nbar())
}

/// `‖c − ĉ‖² / ‖c‖²`.
pub fn nmse(c: &CombinedChannel, est: &EstimateResult) -> Result<f64> {
    nmse_slices(&c.c, &est.c_hat)
}

pub(crate) fn nmse_slices(c: &[Complex64], c_hat: &[Complex64]) -> Result<f64> {
    if c.len() != c_hat.len() {
        return Err(Error::dims("nmse", c.len(), c_hat.len()));
    }
    let energy = norm_sqr(c);
    if energy == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let err: f64 = c.iter().zip(c_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(err / energy)
}

/// Per-group channel estimates recovered from one segment of `ĉ`.
///
/// Only `Ĥ ⊗ Ĝ` is identifiable: `(λĤ, Ĝ/λ)` fits equally well for any
/// nonzero `λ`. Score with [`scale_aligned_nmse`].
#[derive(Clone, Debug)]
pub struct DecoupledChannels {
    pub h: ComplexMatrix,
    pub g: ComplexMatrix,
    /// Dominant singular value of the rearranged segment.
    pub sigma: f64,
    /// Frobenius norm of the rank-1 fit residual.
    pub residual: f64,
}

pub fn decouple_channels(seg: &[Complex64], cfg: &SystemConfig) -> Result<DecoupledChannels> {
    let (m_t, m_r, nbar) = (cfg.m_t, cfg.m_r, cfg.nbar);
    if seg.len() != cfg.segment_len() {
        return Err(Error::dims("decouple_channels", cfg.segment_len(), seg.len()));
    }
    // ĉ⁽q⁾ ≈ vec(H ⊗ G) = P (vec H ⊗ vec G), and vec H ⊗ vec G = vec(vec G · vec Hᵀ).
    let outer = vec_kron_map(m_t, nbar, m_r, nbar).inverse().apply(seg)?;
    let w = unvec(&outer, m_r * nbar, m_t * nbar)?;
    let r1 = nearest_kron_rank1(&w)?;
    if r1.sigma < 1e-12 {
        return Err(Error::DegenerateSegment(r1.sigma));
    }
    let root = r1.sigma.sqrt();
    let residual = w.sub(&r1.to_matrix())?.frobenius_norm();
    let g: Vec<Complex64> = r1.u.iter().map(|z| z * root).collect();
    let h: Vec<Complex64> = r1.v.iter().map(|z| z.conj() * root).collect();
    Ok(DecoupledChannels {
        h: unvec(&h, m_t, nbar)?,
        g: unvec(&g, m_r, nbar)?,
        sigma: r1.sigma,
        residual,
    })
}

/// `min_λ ‖A − λÂ‖²_F / ‖A‖²_F`, attained at `λ* = ⟨Â, A⟩ / ‖Â‖²_F`.
pub fn scale_aligned_nmse(a: &ComplexMatrix, a_hat: &ComplexMatrix) -> Result<f64> {
    if a.shape() != a_hat.shape() {
        return Err(Error::dims(
            "scale_aligned_nmse",
            format!("{:?}", a.shape()),
            format!("{:?}", a_hat.shape()),
        ));
    }
    let est_energy = norm_sqr(a_hat.as_slice());
    if est_energy == 0.0 {
        return Err(Error::ZeroEstimate);
    }
    let energy = norm_sqr(a.as_slice());
    if energy == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let lambda = dotc(a_hat.as_slice(), a.as_slice()) / est_energy;
    let err: f64 = a
        .as_slice()
        .iter()
        .zip(a_hat.as_slice())
        .map(|(x, y)| (x - lambda * y).norm_sqr())
        .sum();
    Ok(err / energy)
}
