//! Pilot and scattering training, and the combined matrix `Ω = (S′ ◇ X)ᵀ`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dft_matrix, khatri_rao, unvec, ComplexMatrix};
use crate::system::SystemConfig;

/// Largest orthogonality residual the matched filter accepts.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

/// Pilots `x` (`m_t × t`), vectorized scattering training `s_prime`
/// (`nbar²q × t`) and `omega` (`t × m_t·nbar²·q`).
#[derive(Clone, Debug)]
pub struct TrainingDesign {
    x: ComplexMatrix,
    s_prime: ComplexMatrix,
    omega: ComplexMatrix,
    nbar: usize,
    q: usize,
    residual: f64,
}

impl TrainingDesign {
    /// Assembles a design from arbitrary pilots and scattering training.
    ///
    /// Ω and its orthogonality residual are computed here once, so the design
    /// can be shared read-only by every trial.
    pub fn from_parts(x: ComplexMatrix, s_prime: ComplexMatrix, nbar: usize, q: usize) -> Result<Self> {
        if nbar == 0 || q == 0 {
            return Err(Error::InvalidConfig("nbar and q must be >= 1".into()));
        }
        if s_prime.rows() != nbar * nbar * q {
            return Err(Error::dims("TrainingDesign S'", nbar * nbar * q, s_prime.rows()));
        }
        if s_prime.cols() != x.cols() {
            return Err(Error::dims("TrainingDesign slots", x.cols(), s_prime.cols()));
        }
        let omega = khatri_rao(&s_prime, &x)?.transpose();
        let mut d = Self {
            x,
            s_prime,
            omega,
            nbar,
            q,
            residual: 0.0,
        };
        d.residual = verify_orthogonality(&d);
        Ok(d)
    }

    pub fn x(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn s_prime(&self) -> &ComplexMatrix {
        &self.s_prime
    }

    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn nbar(&self) -> usize {
        self.nbar
    }

    pub fn groups(&self) -> usize {
        self.q
    }

    pub fn m_t(&self) -> usize {
        self.x.rows()
    }

    pub fn slots(&self) -> usize {
        self.x.cols()
    }

    /// Residual computed at construction; see [`verify_orthogonality`].
    pub fn orthogonality_residual(&self) -> f64 {
        self.residual
    }

    /// `ΩᴴΩ` is expected to equal this multiple of the identity.
    pub fn gram_scale(&self) -> f64 {
        self.slots() as f64 / self.nbar as f64
    }

    /// Scattering matrix of group `q` in slot `t`.
    pub fn slot(&self, t: usize, q: usize) -> ComplexMatrix {
        slot_of(&self.s_prime, t, q, self.nbar)
    }
}

pub(crate) fn slot_of(s_prime: &ComplexMatrix, t: usize, q: usize, nbar: usize) -> ComplexMatrix {
    let seg = nbar * nbar;
    unvec(&s_prime.column(t)[q * seg..(q + 1) * seg], nbar, nbar).expect("segment length")
}

/// Source of training designs; lets other constructions replace the default.
pub trait TrainingBuilder {
    fn build(&self, cfg: &SystemConfig) -> Result<TrainingDesign>;
}

/// Factored Khatri-Rao DFT training.
///
/// Slot `t = t1·m_t + t2` uses scattering column `t1` of the `nbar²q`-point
/// DFT scaled by `1/√nbar`, and pilot column `t2` of the `m_t`-point DFT.
#[derive(Clone, Copy, Debug, Default)]
pub struct KhatriRaoDft;

impl TrainingBuilder for KhatriRaoDft {
    fn build(&self, cfg: &SystemConfig) -> Result<TrainingDesign> {
        cfg.validate()?;
        if cfg.t != cfg.min_pilots() {
            return Err(Error::InvalidConfig(format!(
                "training requires the minimum pilot length t={} (got {})",
                cfg.min_pilots(),
                cfg.t
            )));
        }
        let big = cfg.nbar * cfg.nbar * cfg.q;
        let f_big = dft_matrix(big);
        let f_small = dft_matrix(cfg.m_t);
        let inv = 1.0 / (cfg.nbar as f64).sqrt();

        let s_prime = ComplexMatrix::from_fn(big, cfg.t, |r, t| f_big[(r, t / cfg.m_t)] * inv);
        let x = ComplexMatrix::from_fn(cfg.m_t, cfg.t, |r, t| f_small[(r, t % cfg.m_t)]);
        TrainingDesign::from_parts(x, s_prime, cfg.nbar, cfg.q)
    }
}

pub fn build_training(cfg: &SystemConfig) -> Result<TrainingDesign> {
    KhatriRaoDft.build(cfg)
}

/// `‖ΩᴴΩ − (T/N̄)·I‖_F / ‖(T/N̄)·I‖_F`.
pub fn verify_orthogonality(d: &TrainingDesign) -> f64 {
    let omega = &d.omega;
    let p = omega.cols();
    let scale = d.gram_scale();
    let mut err = 0.0;
    omega.for_each_gram_entry(|i, j, g| {
        err += if i == j {
            (g - scale).norm_sqr()
        } else {
            2.0 * g.norm_sqr()
        };
    });
    err.sqrt() / (scale * (p as f64).sqrt())
}

/// Per-slot, per-group physical realizability diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotDiagnostics {
    pub t: usize,
    pub q: usize,
    /// `‖SᴴS − I‖_F`
    pub unitarity: f64,
    /// `‖S − Sᵀ‖_F`
    pub symmetry: f64,
}

/// Informational only; a design is never rejected on these numbers.
pub fn realizability_report(d: &TrainingDesign) -> Vec<SlotDiagnostics> {
    (0..d.slots())
        .flat_map(|t| (0..d.groups()).map(move |q| (t, q)))
        .map(|(t, q)| slot_diagnostics(&d.slot(t, q), t, q))
        .collect()
}

pub(crate) fn slot_diagnostics(s: &ComplexMatrix, t: usize, q: usize) -> SlotDiagnostics {
    let eye = ComplexMatrix::identity(s.rows());
    SlotDiagnostics {
        t,
        q,
        unitarity: s.gram().sub(&eye).expect("square").frobenius_norm(),
        symmetry: s.sub(&s.transpose()).expect("square").frobenius_norm(),
    }
}

/// Writes `m` as a header line `rows,cols` followed by one `re,im` line per
/// entry in column-major order.
pub fn write_matrix_dump(m: &ComplexMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{},{}", m.rows(), m.cols()).map_err(io)?;
    for z in m.as_slice() {
        writeln!(w, "{:?},{:?}", z.re, z.im).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_matrix_dump(path: &Path) -> Result<ComplexMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |what: &str| Error::InvalidConfig(format!("{}: {what}", path.display()));
    let header = lines
        .next()
        .ok_or_else(|| bad("missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let (r, c) = header.split_once(',').ok_or_else(|| bad("bad header"))?;
    let rows: usize = r.trim().parse().map_err(|_| bad("bad row count"))?;
    let cols: usize = c.trim().parse().map_err(|_| bad("bad column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let (re, im) = line.split_once(',').ok_or_else(|| bad("bad entry"))?;
        let re: f64 = re.trim().parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = im.trim().parse().map_err(|_| bad("bad imaginary part"))?;
        data.push(Complex64::new(re, im));
    }
    ComplexMatrix::from_column_major(rows, cols, data)
}

/// Dumps `X.csv`, `S_prime.csv` and `Omega.csv` into `dir`.
pub fn dump_design(d: &TrainingDesign, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_dump(d.x(), &dir.join("X.csv"))?;
    write_matrix_dump(d.s_prime(), &dir.join("S_prime.csv"))?;
    write_matrix_dump(d.omega(), &dir.join("Omega.csv"))
}
