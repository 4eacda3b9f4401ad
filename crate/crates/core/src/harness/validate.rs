//! Self-check suite behind the `validate` subcommand.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::estimation::NoiseSpec;
use crate::harness::{run_trial_with, Pipeline};
use crate::impairment::{max_affected, ImpairmentKind, ImpairmentSpec};
use crate::linalg::{hadamard, khatri_rao, kron, kron_vec, max_abs_diff, norm_sqr, vec, vec_kron_map, ComplexMatrix};
use crate::rng::{stream, Purpose};
use crate::system::{NoiseMode, SystemConfig};
use crate::training::build_training;

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

pub const SWEEP_NBARS: [usize; 5] = [1, 2, 4, 8, 32];

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Vectorization identities on `instances` random draws with dimensions ≤ 5.
/// Returns the largest deviation seen per identity.
pub fn algebra_deviations(instances: usize, seed: u64) -> [(&'static str, f64); 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = [0.0f64; 5];
    for _ in 0..instances {
        let mut dim = || rng.random_range(1..=5usize);
        let (m, n, p, q) = (dim(), dim(), dim(), dim());
        let a = random_matrix(&mut rng, m, n);
        let b = random_matrix(&mut rng, n, p);
        let c = random_matrix(&mut rng, p, q);

        let abc = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let rhs = kron(&c.transpose(), &a).matvec(&vec(&b)).unwrap();
        dev[0] = dev[0].max(max_abs_diff(&vec(&abc), &rhs));

        let bb = random_matrix(&mut rng, p, q);
        let lhs = vec_kron_map(m, n, p, q).apply(&kron_vec(&vec(&a), &vec(&bb))).unwrap();
        dev[1] = dev[1].max(max_abs_diff(&lhs, &vec(&kron(&a, &bb))));

        let u = random_matrix(&mut rng, m, 1);
        let v = random_matrix(&mut rng, p, 1);
        let outer = u.matmul(&v.transpose()).unwrap();
        dev[2] = dev[2].max(max_abs_diff(&vec(&outer), &kron_vec(v.as_slice(), u.as_slice())));

        let x = random_matrix(&mut rng, m, q);
        let y = random_matrix(&mut rng, p, q);
        let kr = khatri_rao(&x, &y).unwrap();
        for r in 0..q {
            dev[3] = dev[3].max(max_abs_diff(kr.column(r), &kron_vec(x.column(r), y.column(r))));
        }

        let gram = kr.gram();
        let had = hadamard(&x.gram(), &y.gram()).unwrap();
        dev[4] = dev[4].max(gram.max_abs_diff(&had));
    }
    [
        ("vec(ABC) = (C^T kron A) vec(B)", dev[0]),
        ("vec(A kron B) = P (vec A kron vec B)", dev[1]),
        ("vec(a b^T) = b kron a", dev[2]),
        ("khatri-rao column r = x_r kron y_r", dev[3]),
        ("(A kr B)^H (A kr B) = (A^H A) had (B^H B)", dev[4]),
    ]
}

pub fn check_algebra() -> CheckOutcome {
    let start = Instant::now();
    let devs = algebra_deviations(200, 0xA1);
    let worst = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    let detail = devs
        .iter()
        .map(|(n, d)| format!("{n}: {d:.1e}"))
        .collect::<Vec<_>>()
        .join("; ");
    CheckOutcome::new(
        "algebra identities",
        worst < 1e-12,
        format!("{detail} ({:.2}s)", start.elapsed().as_secs_f64()),
    )
}

pub fn check_orthogonality(nbars: &[usize]) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for &nbar in nbars {
        match SystemConfig::reference(nbar).and_then(|c| build_training(&c)) {
            Ok(d) => {
                worst = worst.max(d.orthogonality_residual());
                detail.push(format!("nbar={nbar}: {:.1e}", d.orthogonality_residual()));
            }
            Err(e) => return CheckOutcome::new("training orthogonality", false, e.to_string()),
        }
    }
    CheckOutcome::new("training orthogonality", worst < 1e-10, detail.join(", "))
}

/// Counts candidate positions by scanning the full `N × N` matrix.
pub fn brute_force_count(kind: ImpairmentKind, n: usize, nbar: usize) -> usize {
    let mut count = 0;
    for r in 0..n {
        for c in r..n {
            if r / nbar != c / nbar {
                continue;
            }
            let hit = match kind {
                ImpairmentKind::Ideal => false,
                ImpairmentKind::Type1 => r != c,
                ImpairmentKind::Type2 => r == c,
                ImpairmentKind::Type3 => true,
            };
            count += hit as usize;
        }
    }
    count
}

pub fn check_counting() -> CheckOutcome {
    let mut mismatches = Vec::new();
    for nbar in [1, 2, 4, 8, 16, 32] {
        let cfg = SystemConfig::reference(nbar).expect("divides 32");
        for kind in ImpairmentKind::ALL {
            let (formula, brute) = (max_affected(kind, &cfg), brute_force_count(kind, 32, nbar));
            if formula != brute {
                mismatches.push(format!("{kind} nbar={nbar}: {formula} vs {brute}"));
            }
        }
    }
    let passed = mismatches.is_empty();
    let detail = if passed {
        "max_affected matches enumeration for all kinds, nbar in {1,2,4,8,16,32}".to_string()
    } else {
        mismatches.join("; ")
    };
    CheckOutcome::new("impairment counting", passed, detail)
}

/// Samples impairments through `pipeline.sampler` and checks their structure.
pub fn check_impairment_structure(pipeline: &Pipeline) -> CheckOutcome {
    let one = Complex64::new(1.0, 0.0);
    let mut problems = Vec::new();
    for nbar in [1, 4, 8] {
        let cfg = SystemConfig::reference(nbar).expect("divides 32");
        for kind in ImpairmentKind::ALL {
            for fraction in [0.2, 1.0] {
                let spec = ImpairmentSpec {
                    kind,
                    fraction,
                    amp_min: 0.0,
                };
                let e = (pipeline.sampler)(&spec, &cfg, &mut stream(11, nbar as u64, Purpose::Impairment));
                let tag = format!("{kind} nbar={nbar} f={fraction}");
                if e.affected_count() != spec.affected_count(&cfg) {
                    problems.push(format!(
                        "{tag}: affected {} != {}",
                        e.affected_count(),
                        spec.affected_count(&cfg)
                    ));
                }
                let mut touched = vec![vec![false; nbar * nbar]; cfg.q];
                for a in e.affected() {
                    touched[a.q][a.j * nbar + a.i] = true;
                    touched[a.q][a.i * nbar + a.j] = true;
                }
                for (q, b) in e.blocks().iter().enumerate() {
                    for i in 0..nbar {
                        for j in 0..nbar {
                            let v = b[(i, j)];
                            if v.norm() > 1.0 + 1e-15 {
                                problems.push(format!("{tag}: |E| > 1 at ({q},{i},{j})"));
                            }
                            if !touched[q][j * nbar + i] && v != one {
                                problems.push(format!("{tag}: unaffected entry ({q},{i},{j}) != 1"));
                            }
                            if i == j && kind == ImpairmentKind::Type1 && v != one {
                                problems.push(format!("{tag}: diagonal distorted at ({q},{i})"));
                            }
                            if i != j && kind == ImpairmentKind::Type2 && v != one {
                                problems.push(format!("{tag}: off-diagonal distorted at ({q},{i},{j})"));
                            }
                            if i != j && b[(j, i)] != v.conj() {
                                problems.push(format!("{tag}: conjugate pairing broken at ({q},{i},{j})"));
                            }
                        }
                    }
                }
            }
        }
    }
    problems.dedup();
    let passed = problems.is_empty();
    let detail = if passed {
        "counts, unit entries, diagonal/off-diagonal confinement and conjugate pairing hold".to_string()
    } else {
        problems.into_iter().take(5).collect::<Vec<_>>().join("; ")
    };
    CheckOutcome::new("impairment structure", passed, detail)
}

/// Noiseless, ideal hardware: every nbar in `nbars` must recover `c` exactly.
pub fn check_exactness(pipeline: &Pipeline, nbars: &[usize]) -> CheckOutcome {
    let mut worst = 0.0f64;
    for &nbar in nbars {
        let cfg = SystemConfig::reference(nbar).expect("divides 32");
        let design = match build_training(&cfg) {
            Ok(d) => d,
            Err(e) => return CheckOutcome::new("noiseless exact recovery", false, e.to_string()),
        };
        for trial in 0..2 {
            match run_trial_with(
                pipeline,
                &cfg,
                &design,
                &ImpairmentSpec::ideal(),
                NoiseSpec::noiseless(),
                trial,
                false,
            ) {
                Ok(o) => worst = worst.max(o.nmse),
                Err(e) => return CheckOutcome::new("noiseless exact recovery", false, e.to_string()),
            }
        }
    }
    CheckOutcome::new(
        "noiseless exact recovery",
        worst < 1e-20,
        format!("worst NMSE {worst:.2e} (threshold 1e-20)"),
    )
}

/// Type 1 has no candidates when nbar = 1, so it must match the ideal run bit for bit.
pub fn check_type1_noop(pipeline: &Pipeline) -> CheckOutcome {
    let cfg = SystemConfig::reference(1).expect("divides 32");
    let design = match build_training(&cfg) {
        Ok(d) => d,
        Err(e) => return CheckOutcome::new("type1 no-op at nbar=1", false, e.to_string()),
    };
    let type1 = ImpairmentSpec {
        kind: ImpairmentKind::Type1,
        fraction: 1.0,
        amp_min: 0.0,
    };
    let mut identical = true;
    for trial in 0..5 {
        let noise = NoiseSpec::new(10.0, NoiseMode::SnrNormalized);
        let a = run_trial_with(pipeline, &cfg, &design, &ImpairmentSpec::ideal(), noise, trial, false);
        let b = run_trial_with(pipeline, &cfg, &design, &type1, noise, trial, false);
        match (a, b) {
            (Ok(a), Ok(b)) => identical &= a.estimate.c_hat == b.estimate.c_hat,
            (Err(e), _) | (_, Err(e)) => return CheckOutcome::new("type1 no-op at nbar=1", false, e.to_string()),
        }
    }
    CheckOutcome::new(
        "type1 no-op at nbar=1",
        identical,
        format!("estimates bitwise identical: {identical}"),
    )
}

/// Mean `‖ĉ − c‖²` in fixed-sigma mode versus `nbar · M_R · σ²`.
pub fn noise_energy(pipeline: &Pipeline, nbar: usize, sigma2: f64, trials: u64) -> crate::Result<(f64, f64)> {
    let cfg = SystemConfig::reference(nbar)?
        .with_noise_mode(NoiseMode::FixedSigma)
        .with_seed(0x5EED);
    let design = build_training(&cfg)?;
    let noise = NoiseSpec::new(-10.0 * sigma2.log10(), NoiseMode::FixedSigma);
    let mut total = 0.0;
    for trial in 0..trials {
        let o = run_trial_with(pipeline, &cfg, &design, &ImpairmentSpec::ideal(), noise, trial, false)?;
        let err: Vec<Complex64> = o.channel.c.iter().zip(&o.estimate.c_hat).map(|(a, b)| a - b).collect();
        total += norm_sqr(&err);
    }
    let expected = (nbar * cfg.m_r) as f64 * sigma2;
    Ok((total / trials as f64, expected))
}

pub fn check_noise_energy(pipeline: &Pipeline) -> CheckOutcome {
    match noise_energy(pipeline, 4, 0.01, 2000) {
        Ok((mean, expected)) => CheckOutcome::new(
            "analytic noise energy",
            ((mean - expected) / expected).abs() <= 0.05,
            format!("mean {mean:.5} vs {expected:.5} (5% tolerance)"),
        ),
        Err(e) => CheckOutcome::new("analytic noise energy", false, e.to_string()),
    }
}

/// Runs every check against `pipeline`.
pub fn run_all_with(pipeline: &Pipeline) -> Vec<CheckOutcome> {
    vec![
        check_algebra(),
        check_orthogonality(&SWEEP_NBARS),
        check_counting(),
        check_impairment_structure(pipeline),
        check_exactness(pipeline, &SWEEP_NBARS),
        check_type1_noop(pipeline),
        check_noise_energy(pipeline),
    ]
}

pub fn run_all() -> Vec<CheckOutcome> {
    run_all_with(&Pipeline::default())
}
