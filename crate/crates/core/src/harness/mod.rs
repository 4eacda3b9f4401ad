//! Seeded Monte Carlo sweeps and their CSV output.
//!
//! A trial draws its channel, impairment and noise from streams keyed by
//! `(master_seed, trial_index, purpose)`. Every sweep point with the same
//! trial index therefore sees the same channel and the same noise draws, and
//! results never depend on the number of workers.

mod presets;
pub mod validate;

pub use presets::{preset, Preset, PRESET_NAMES};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    decouple_channels, matched_filter, nmse, scale_aligned_nmse, synthesize_rx, EstimateResult, NoiseSpec,
    ReceivedSignal,
};
use crate::impairment::{
    apply_impairment, max_affected, sample_impairment, ImpairmentKind, ImpairmentMatrix, ImpairmentSpec,
};
use crate::rng::{stream, Purpose, Stream};
use crate::system::{combined_channel, generate_channels, ChannelPair, CombinedChannel, NoiseMode, SystemConfig};
use crate::training::{build_training, TrainingDesign};

pub type Estimator = fn(&ReceivedSignal, &TrainingDesign) -> Result<EstimateResult>;
pub type Sampler = fn(&ImpairmentSpec, &SystemConfig, &mut Stream) -> ImpairmentMatrix;

/// The estimator and impairment sampler a trial runs with. Swappable so the
/// validation suite can prove it catches a broken stage.
#[derive(Clone, Copy)]
pub struct Pipeline {
    pub estimator: Estimator,
    pub sampler: Sampler,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self {
            estimator: matched_filter,
            sampler: |spec, cfg, rng| sample_impairment(spec, cfg, rng),
        }
    }
}

/// Everything a single trial produced.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub nmse: f64,
    pub sigma2: f64,
    pub channels: ChannelPair,
    pub channel: CombinedChannel,
    pub impairment: ImpairmentMatrix,
    pub estimate: EstimateResult,
    /// Scale-aligned `(H, G)` NMSE per group, when decoupling was requested.
    pub decoupled: Option<Vec<(f64, f64)>>,
}

pub fn run_trial(
    cfg: &SystemConfig,
    design: &TrainingDesign,
    spec: &ImpairmentSpec,
    noise: NoiseSpec,
    trial_index: u64,
    decouple: bool,
) -> Result<TrialOutcome> {
    run_trial_with(&Pipeline::default(), cfg, design, spec, noise, trial_index, decouple)
}

pub fn run_trial_with(
    pipeline: &Pipeline,
    cfg: &SystemConfig,
    design: &TrainingDesign,
    spec: &ImpairmentSpec,
    noise: NoiseSpec,
    trial_index: u64,
    decouple: bool,
) -> Result<TrialOutcome> {
    let attach = |e: Error| Error::Trial {
        trial: trial_index,
        source: Box::new(e),
    };
    let seed = cfg.master_seed;
    let channels = generate_channels(cfg, &mut stream(seed, trial_index, Purpose::Channel));
    let impairment = (pipeline.sampler)(spec, cfg, &mut stream(seed, trial_index, Purpose::Impairment));
    let s_bar = apply_impairment(design, &impairment).map_err(attach)?;
    let rx = synthesize_rx(
        &channels,
        &s_bar,
        design.x(),
        cfg,
        noise,
        &mut stream(seed, trial_index, Purpose::Noise),
        false,
    )
    .map_err(attach)?;
    let estimate = (pipeline.estimator)(&rx, design).map_err(attach)?;
    let channel = combined_channel(&channels, cfg).map_err(attach)?;
    let score = nmse(&channel, &estimate).map_err(attach)?;

    let decoupled = if decouple {
        let mut per_group = Vec::with_capacity(cfg.q);
        for q in 0..cfg.q {
            let dec = decouple_channels(estimate.segment(q), cfg).map_err(attach)?;
            per_group.push((
                scale_aligned_nmse(&channels.h_block(q), &dec.h).map_err(attach)?,
                scale_aligned_nmse(&channels.g_block(q), &dec.g).map_err(attach)?,
            ));
        }
        Some(per_group)
    } else {
        None
    };

    Ok(TrialOutcome {
        trial_index,
        nmse: score,
        sigma2: rx.sigma2,
        channels,
        channel,
        impairment,
        estimate,
        decoupled,
    })
}

/// Axes of a sweep; every combination is run for `trials` trials.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub m_t: usize,
    pub m_r: usize,
    pub n: usize,
    pub nbars: Vec<usize>,
    pub kinds: Vec<ImpairmentKind>,
    pub snrs_db: Vec<f64>,
    pub fractions: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub noise_mode: NoiseMode,
    pub amp_min: f64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        for (name, empty) in [
            ("nbar", self.nbars.is_empty()),
            ("kinds", self.kinds.is_empty()),
            ("snr", self.snrs_db.is_empty()),
            ("fractions", self.fractions.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidConfig(format!("{name} axis is empty")));
            }
        }
        for &nbar in &self.nbars {
            if nbar == 0 || !self.n.is_multiple_of(nbar) {
                return Err(Error::InvalidConfig(format!(
                    "group size nbar={nbar} does not divide n={}; pick a divisor of {}",
                    self.n, self.n
                )));
            }
        }
        for &f in &self.fractions {
            ImpairmentSpec::new(ImpairmentKind::Type1, f)?.with_amp_min(self.amp_min)?;
        }
        if self.snrs_db.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("snr values must not be NaN".into()));
        }
        Ok(())
    }

    pub fn config(&self, nbar: usize) -> Result<SystemConfig> {
        Ok(SystemConfig::new(self.m_t, self.m_r, self.n, nbar)?
            .with_noise_mode(self.noise_mode)
            .with_seed(self.master_seed))
    }

    /// Sweep points in output order: kind, nbar, snr, fraction.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut kinds = self.kinds.clone();
        kinds.sort();
        kinds.dedup();
        let mut nbars = self.nbars.clone();
        nbars.sort();
        nbars.dedup();
        let mut snrs = self.snrs_db.clone();
        snrs.sort_by(f64::total_cmp);
        snrs.dedup();
        let mut fractions = self.fractions.clone();
        fractions.sort_by(f64::total_cmp);
        fractions.dedup();

        let mut out = Vec::new();
        for &kind in &kinds {
            for &nbar in &nbars {
                for &snr_db in &snrs {
                    for &fraction in &fractions {
                        out.push(SweepPoint {
                            kind,
                            nbar,
                            snr_db,
                            fraction,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn total_trials(&self) -> usize {
        self.points().len() * self.trials
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub kind: ImpairmentKind,
    pub nbar: usize,
    pub snr_db: f64,
    pub fraction: f64,
}

/// One CSV row: aggregated NMSE at a sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub impairment_type: ImpairmentKind,
    pub nbar: usize,
    pub q: usize,
    pub n: usize,
    pub m_t: usize,
    pub m_r: usize,
    pub t_pilots: usize,
    pub snr_db: f64,
    pub fraction: f64,
    pub max_affected: usize,
    pub affected_count: usize,
    pub trials: usize,
    pub nmse_mean: f64,
    pub nmse_median: f64,
    pub nmse_std: f64,
    pub noise_mode: NoiseMode,
    pub master_seed: u64,
}

pub const CSV_HEADER: &str = "impairment_type,nbar,q,n,m_t,m_r,t_pilots,snr_db,fraction,max_affected,affected_count,trials,nmse_mean,nmse_median,nmse_std,noise_mode,master_seed";

/// Mean, median and population standard deviation, reduced in slice order.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    (mean, median, var.sqrt())
}

/// Runs every point of `plan` on `workers` threads (1 runs inline).
pub fn run_sweep(plan: &SweepPlan, workers: usize) -> Result<Vec<SweepRecord>> {
    plan.validate()?;
    let points = plan.points();

    let mut nbars: Vec<usize> = points.iter().map(|p| p.nbar).collect();
    nbars.sort();
    nbars.dedup();
    let mut setups = Vec::with_capacity(nbars.len());
    for &nbar in &nbars {
        let cfg = plan.config(nbar)?;
        let design = build_training(&cfg)?;
        setups.push((nbar, cfg, design));
    }
    let setup = |nbar: usize| {
        setups
            .iter()
            .find(|(n, _, _)| *n == nbar)
            .map(|(_, c, d)| (c, d))
            .expect("design built for every nbar")
    };

    let specs = points
        .iter()
        .map(|p| ImpairmentSpec::new(p.kind, p.fraction)?.with_amp_min(plan.amp_min))
        .collect::<Result<Vec<_>>>()?;

    let items: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| (0..plan.trials as u64).map(move |t| (i, t)))
        .collect();
    let run_item = |&(i, trial): &(usize, u64)| -> Result<f64> {
        let p = &points[i];
        let (cfg, design) = setup(p.nbar);
        let noise = NoiseSpec::new(p.snr_db, plan.noise_mode);
        Ok(run_trial(cfg, design, &specs[i], noise, trial, false)?.nmse)
    };

    let scores: Vec<f64> = if workers <= 1 {
        items.iter().map(run_item).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
        pool.install(|| items.par_iter().map(run_item).collect::<Result<_>>())?
    };

    let records = points
        .iter()
        .zip(&specs)
        .zip(scores.chunks(plan.trials))
        .map(|((p, spec), values)| {
            let (cfg, _) = setup(p.nbar);
            let (nmse_mean, nmse_median, nmse_std) = summarize(values);
            SweepRecord {
                impairment_type: p.kind,
                nbar: p.nbar,
                q: cfg.q,
                n: cfg.n,
                m_t: cfg.m_t,
                m_r: cfg.m_r,
                t_pilots: cfg.t,
                snr_db: p.snr_db,
                fraction: p.fraction,
                max_affected: max_affected(p.kind, cfg),
                affected_count: spec.affected_count(cfg),
                trials: plan.trials,
                nmse_mean,
                nmse_median,
                nmse_std,
                noise_mode: plan.noise_mode,
                master_seed: plan.master_seed,
            }
        })
        .collect();
    Ok(records)
}

/// Writes records as CSV; floats use the shortest representation that
/// parses back to the same value.
pub fn write_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("write_csv"));
    }
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Parses `start:step:stop` (inclusive) or a single value.
///
/// Values are snapped to 1e-12 so `0:0.1:0.5` yields `0.3`, not
/// `0.30000000000000004`.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad range {s:?} (expected start:step:stop or a number)"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [start, step, stop] => {
            if !(start.is_finite() && step.is_finite() && stop.is_finite()) || *step <= 0.0 || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| snap(start + i as f64 * step)).collect())
        }
        _ => Err(bad()),
    }
}

fn snap(v: f64) -> f64 {
    let s = (v * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("bad list element {p:?} in {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> SweepPlan {
        SweepPlan {
            m_t: 2,
            m_r: 4,
            n: 8,
            nbars: vec![2],
            kinds: vec![ImpairmentKind::Type1],
            snrs_db: vec![10.0],
            fractions: vec![0.2],
            trials: 1,
            master_seed: 3,
            noise_mode: NoiseMode::SnrNormalized,
            amp_min: 0.0,
        }
    }

    #[test]
    fn single_point_single_trial() {
        let recs = run_sweep(&small_plan(), 1).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].nmse_std, 0.0);
        assert_eq!(recs[0].nmse_mean, recs[0].nmse_median);
    }

    #[test]
    fn rejects_bad_nbar() {
        let mut plan = small_plan();
        plan.nbars = vec![3];
        let err = run_sweep(&plan, 1).unwrap_err().to_string();
        assert!(err.contains("does not divide"), "{err}");
    }

    #[test]
    fn summary_statistics() {
        let (mean, median, std) = summarize(&[1.0, 2.0, 3.0, 6.0]);
        assert_eq!((mean, median), (3.0, 2.5));
        assert!((std - 3.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-10:2:30").unwrap().len(), 21);
        let f = parse_range("0:0.05:0.5").unwrap();
        assert_eq!(f.len(), 11);
        assert_eq!(f[6], 0.3);
        assert_eq!(f[10], 0.5);
        assert_eq!(parse_range("10").unwrap(), vec![10.0]);
        assert!(parse_range("1:0:2").is_err());
        assert!(parse_range("a:b").is_err());
        assert_eq!(parse_list::<usize>("1,2, 4").unwrap(), vec![1, 2, 4]);
    }

    #[test]
    fn header_matches_record_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let recs = run_sweep(&small_plan(), 1).unwrap();
        write_csv(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(write_csv(&[], &path).is_err());
    }
}
