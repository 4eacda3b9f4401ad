//! Hardware impairment models for the BD-RIS scattering matrix.
//!
//! The impairment matrix `E = blkdiag(E⁽¹⁾, …, E⁽Q⁾)` multiplies the ideal
//! scattering matrix entrywise and stays fixed for all pilot slots. Type 1
//! distorts mutual impedances (off-diagonal entries), Type 2 self-impedances
//! (the diagonal), Type 3 both. Off-diagonal distortions are mirrored
//! conjugately so `[E]_{j,i} = conj([E]_{i,j})`.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{blkdiag, ComplexMatrix};
use crate::system::SystemConfig;
use crate::training::TrainingDesign;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpairmentKind {
    Ideal,
    Type1,
    Type2,
    Type3,
}

impl ImpairmentKind {
    pub const ALL: [ImpairmentKind; 4] = [
        ImpairmentKind::Ideal,
        ImpairmentKind::Type1,
        ImpairmentKind::Type2,
        ImpairmentKind::Type3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ImpairmentKind::Ideal => "ideal",
            ImpairmentKind::Type1 => "type1",
            ImpairmentKind::Type2 => "type2",
            ImpairmentKind::Type3 => "type3",
        }
    }

    fn touches_diagonal(self) -> bool {
        matches!(self, ImpairmentKind::Type2 | ImpairmentKind::Type3)
    }

    fn touches_off_diagonal(self) -> bool {
        matches!(self, ImpairmentKind::Type1 | ImpairmentKind::Type3)
    }
}

impl fmt::Display for ImpairmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImpairmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown impairment kind {s:?} (expected ideal, type1, type2, type3)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpairmentSpec {
    pub kind: ImpairmentKind,
    /// Share of the kind's maximum affected impedances.
    pub fraction: f64,
    /// Amplitudes are drawn from `(amp_min, 1]`.
    pub amp_min: f64,
}

impl ImpairmentSpec {
    pub fn new(kind: ImpairmentKind, fraction: f64) -> Result<Self> {
        let spec = Self {
            kind,
            fraction,
            amp_min: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ideal() -> Self {
        Self {
            kind: ImpairmentKind::Ideal,
            fraction: 0.0,
            amp_min: 0.0,
        }
    }

    pub fn with_amp_min(mut self, amp_min: f64) -> Result<Self> {
        self.amp_min = amp_min;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::InvalidConfig(format!(
                "fraction {} outside [0, 1]",
                self.fraction
            )));
        }
        if !(0.0..1.0).contains(&self.amp_min) {
            return Err(Error::InvalidConfig(format!("amp_min {} outside [0, 1)", self.amp_min)));
        }
        Ok(())
    }

    /// `round(fraction · max)`, halves rounded away from zero.
    pub fn affected_count(&self, cfg: &SystemConfig) -> usize {
        (self.fraction * max_affected(self.kind, cfg) as f64).round() as usize
    }
}

/// Upper bound on distinct impedances a kind can distort. A mirrored
/// off-diagonal pair counts once.
pub fn max_affected(kind: ImpairmentKind, cfg: &SystemConfig) -> usize {
    let mutual = cfg.q * cfg.nbar * (cfg.nbar - 1) / 2;
    match kind {
        ImpairmentKind::Ideal => 0,
        ImpairmentKind::Type1 => mutual,
        ImpairmentKind::Type2 => cfg.n,
        ImpairmentKind::Type3 => cfg.n + mutual,
    }
}

/// An impedance position inside group `q`; always `i <= j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub q: usize,
    pub i: usize,
    pub j: usize,
}

/// Positions a kind may distort, ordered by group, then row, then column.
pub fn candidate_positions(kind: ImpairmentKind, nbar: usize, groups: usize) -> Vec<Position> {
    let mut out = Vec::new();
    for q in 0..groups {
        for i in 0..nbar {
            for j in i..nbar {
                let wanted = if i == j {
                    kind.touches_diagonal()
                } else {
                    kind.touches_off_diagonal()
                };
                if wanted {
                    out.push(Position { q, i, j });
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffectedEntry {
    pub q: usize,
    pub i: usize,
    pub j: usize,
    pub alpha: f64,
    pub phi: f64,
}

impl AffectedEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.alpha, self.phi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpairmentMatrix {
    kind: ImpairmentKind,
    blocks: Vec<ComplexMatrix>,
    affected: Vec<AffectedEntry>,
}

impl ImpairmentMatrix {
    /// All-ones blocks.
    pub fn ideal(nbar: usize, groups: usize) -> Self {
        Self {
            kind: ImpairmentKind::Ideal,
            blocks: vec![ComplexMatrix::ones(nbar, nbar); groups],
            affected: Vec::new(),
        }
    }

    /// Builds `E` from explicit distortions; off-diagonal entries are mirrored
    /// conjugately.
    pub fn from_entries(kind: ImpairmentKind, nbar: usize, groups: usize, entries: Vec<AffectedEntry>) -> Result<Self> {
        let mut e = Self::ideal(nbar, groups);
        e.kind = kind;
        for a in &entries {
            if a.q >= groups || a.i >= nbar || a.j >= nbar {
                return Err(Error::InvalidConfig(format!(
                    "impairment position ({}, {}, {}) outside {groups} groups of {nbar}",
                    a.q, a.i, a.j
                )));
            }
            let v = a.value();
            e.blocks[a.q][(a.i, a.j)] = v;
            e.blocks[a.q][(a.j, a.i)] = if a.i == a.j { v } else { v.conj() };
        }
        e.affected = entries;
        Ok(e)
    }

    pub fn kind(&self) -> ImpairmentKind {
        self.kind
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, q: usize) -> &ComplexMatrix {
        &self.blocks[q]
    }

    pub fn affected(&self) -> &[AffectedEntry] {
        &self.affected
    }

    pub fn affected_count(&self) -> usize {
        self.affected.len()
    }

    /// Global `N × N` matrix.
    pub fn to_global(&self) -> ComplexMatrix {
        blkdiag(&self.blocks).expect("at least one group")
    }

    /// `[vec(E⁽¹⁾); …; vec(E⁽Q⁾)]`, aligned with the rows of `S′`.
    pub fn stacked_vec(&self) -> Vec<Complex64> {
        self.blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect()
    }
}

/// Draws an impairment matrix.
///
/// The candidate set is shuffled and the first `affected_count` positions are
/// distorted in shuffled order, so for a fixed stream a larger fraction
/// distorts a superset of positions with the same values.
pub fn sample_impairment<R: Rng + ?Sized>(spec: &ImpairmentSpec, cfg: &SystemConfig, rng: &mut R) -> ImpairmentMatrix {
    if spec.kind == ImpairmentKind::Ideal {
        return ImpairmentMatrix::ideal(cfg.nbar, cfg.q);
    }
    let mut candidates = candidate_positions(spec.kind, cfg.nbar, cfg.q);
    let count = spec.affected_count(cfg).min(candidates.len());
    candidates.shuffle(rng);
    let entries = candidates[..count]
        .iter()
        .map(|p| {
            let u: f64 = rng.random();
            let alpha = 1.0 - u * (1.0 - spec.amp_min);
            let phi = rng.random::<f64>() * TAU;
            AffectedEntry {
                q: p.q,
                i: p.i,
                j: p.j,
                alpha,
                phi,
            }
        })
        .collect();
    ImpairmentMatrix::from_entries(spec.kind, cfg.nbar, cfg.q, entries).expect("candidate positions are in range")
}

/// Impaired training `S̄′`: every slot's group `q` becomes `S_t⁽q⁾ ⊙ E⁽q⁾`.
pub fn apply_impairment(d: &TrainingDesign, e: &ImpairmentMatrix) -> Result<ComplexMatrix> {
    if e.blocks.len() != d.groups() || e.blocks.iter().any(|b| b.shape() != (d.nbar(), d.nbar())) {
        return Err(Error::dims(
            "apply_impairment",
            format!("{} blocks of {}x{}", d.groups(), d.nbar(), d.nbar()),
            format!("{} blocks", e.blocks.len()),
        ));
    }
    let mut out = d.s_prime().clone();
    if e.affected.is_empty() {
        return Ok(out);
    }
    let weights = e.stacked_vec();
    for t in 0..out.cols() {
        for (s, w) in out.column_mut(t).iter_mut().zip(&weights) {
            *s *= w;
        }
    }
    Ok(out)
}

/// Appends audit rows `trial,kind,q,i,j,alpha,phi`; writes the header when
/// `header` is set.
pub fn write_audit_rows<W: Write>(out: &mut W, trial: u64, e: &ImpairmentMatrix, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(out, "trial,kind,q,i,j,alpha,phi")?;
    }
    for a in &e.affected {
        writeln!(
            out,
            "{trial},{},{},{},{},{:?},{:?}",
            e.kind, a.q, a.i, a.j, a.alpha, a.phi
        )?;
    }
    Ok(())
}

pub fn write_audit_csv(path: &Path, trial: u64, e: &ImpairmentMatrix) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|err| Error::io(path, err))?;
    write_audit_rows(&mut f, trial, e, true).map_err(|err| Error::io(path, err))
}
