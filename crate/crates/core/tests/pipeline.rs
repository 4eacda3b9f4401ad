mod common;

use bdris::estimation::NoiseSpec;
use bdris::impairment::AffectedEntry;
use bdris::linalg::{dft_matrix, khatri_rao, nearest_kron_rank1, unvec, vec_kron_map, ComplexMatrix};
use bdris::rng::{complex_gaussian, stream, Purpose};
use bdris::training::realizability_report;
use bdris::{
    apply_impairment, build_training, combined_channel, decouple_channels, generate_channels, matched_filter,
    max_affected, run_trial, sample_impairment, synthesize_rx, synthesize_rx_vectorized, ImpairmentKind,
    ImpairmentMatrix, ImpairmentSpec, NoiseMode, ReceivedSignal, SystemConfig, TrainingDesign,
};
use common::{max_diff, naive_kron, naive_matmul, rng, singular_values};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn channel_entries_have_unit_power() {
    let mut s = stream(11, 0, Purpose::Channel);
    let draws = 100_000;
    let mean: f64 = (0..draws).map(|_| complex_gaussian(&mut s).norm_sqr()).sum::<f64>() / draws as f64;
    assert!((0.99..=1.01).contains(&mean), "{mean}");
}

#[test]
fn combined_channel_energy_matches_expectation() {
    let cfg = SystemConfig::reference(4).unwrap();
    let trials = 10_000;
    let mut total = 0.0;
    for k in 0..trials {
        let ch = generate_channels(&cfg, &mut stream(3, k, Purpose::Channel));
        let cc = combined_channel(&ch, &cfg).unwrap();
        total += cc.c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let mean = total / trials as f64;
    let expected = (cfg.m_t * cfg.m_r * cfg.nbar * cfg.n) as f64;
    assert!(((mean - expected) / expected).abs() < 0.03, "{mean} vs {expected}");
}

#[test]
fn combined_length_and_segments() {
    let cfg = SystemConfig::reference(4).unwrap();
    let ch = generate_channels(&cfg, &mut rng(1));
    let cc = combined_channel(&ch, &cfg).unwrap();
    assert_eq!(cc.len(), 4 * 2 * 16 * 8);
    for q in 0..cfg.q {
        let k = naive_kron(&ch.h_block(q), &ch.g_block(q));
        assert_eq!(cc.segment(q), k.as_slice());
    }
}

#[test]
fn design_sizes_and_orthogonality() {
    let d = build_training(&SystemConfig::new(2, 4, 32, 1).unwrap()).unwrap();
    assert_eq!(d.omega().shape(), (64, 64));
    let gram = naive_matmul(&d.omega().adjoint(), d.omega());
    let target = ComplexMatrix::identity(64).scale(c(64.0, 0.0));
    assert!(gram.sub(&target).unwrap().frobenius_norm() < 1e-10);

    assert_eq!(
        build_training(&SystemConfig::reference(4).unwrap()).unwrap().slots(),
        256
    );
}

#[test]
fn largest_design_has_flat_scattering_entries() {
    let d = build_training(&SystemConfig::reference(32).unwrap()).unwrap();
    assert_eq!(d.slots(), 2048);
    let expected = 1.0 / 32f64.sqrt();
    for t in [0, 1, 777, 2047] {
        let s = d.slot(t, 0);
        assert!(s.as_slice().iter().all(|z| (z.norm() - expected).abs() < 1e-14));
    }
    assert!(d.x().as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
}

#[test]
fn omega_is_transposed_khatri_rao_with_exact_gram() {
    let cfg = SystemConfig::new(2, 1, 8, 2).unwrap();
    let d = build_training(&cfg).unwrap();
    assert_eq!(*d.omega(), khatri_rao(d.s_prime(), d.x()).unwrap().transpose());
    // Independent oracle: (T/N̄)·I from a plain product.
    let gram = naive_matmul(&d.omega().adjoint(), d.omega());
    let scale = d.slots() as f64 / cfg.nbar as f64;
    let target = ComplexMatrix::identity(gram.rows()).scale(c(scale, 0.0));
    assert!(gram.max_abs_diff(&target) < 1e-12);
}

#[test]
fn zeroed_pilot_breaks_orthogonality() {
    let cfg = SystemConfig::reference(2).unwrap();
    let d = build_training(&cfg).unwrap();
    assert!(d.orthogonality_residual() < 1e-12);
    let mut x = d.x().clone();
    x.column_mut(5).fill(c(0.0, 0.0));
    let broken = TrainingDesign::from_parts(x, d.s_prime().clone(), 2, cfg.q).unwrap();
    assert!(broken.orthogonality_residual() > 1e-3);
}

#[test]
fn realizability_is_advisory() {
    let flat = build_training(&SystemConfig::new(2, 4, 8, 1).unwrap()).unwrap();
    assert!(realizability_report(&flat).iter().all(|r| r.unitarity < 1e-14));
    let grouped = build_training(&SystemConfig::new(2, 4, 8, 4).unwrap()).unwrap();
    let report = realizability_report(&grouped);
    assert_eq!(report.len(), grouped.slots() * 2);
    assert!(report.iter().all(|r| r.unitarity.is_finite() && r.symmetry.is_finite()));
    assert!(report.iter().any(|r| r.unitarity > 1e-3));

    let eye = ComplexMatrix::identity(2);
    let s_prime = ComplexMatrix::from_column_major(4, 1, eye.as_slice().to_vec()).unwrap();
    let d = TrainingDesign::from_parts(ComplexMatrix::ones(1, 1), s_prime, 2, 1).unwrap();
    let r = &realizability_report(&d)[0];
    assert_eq!((r.unitarity, r.symmetry), (0.0, 0.0));
}

#[test]
fn counting_examples() {
    let cfg = SystemConfig::reference(4).unwrap();
    assert_eq!(max_affected(ImpairmentKind::Type1, &cfg), (16 * 8 - 32) / 2);
    let spec = ImpairmentSpec::new(ImpairmentKind::Type1, 0.2).unwrap();
    assert_eq!(spec.affected_count(&cfg), 10);
    let e = sample_impairment(&spec, &cfg, &mut rng(2));
    assert_eq!(e.affected_count(), 10);
    for b in e.blocks() {
        for i in 0..4 {
            assert_eq!(b[(i, i)], c(1.0, 0.0));
        }
    }
}

#[test]
fn single_diagonal_distortion_scales_one_entry() {
    let cfg = SystemConfig::new(2, 4, 8, 4).unwrap();
    let d = build_training(&cfg).unwrap();
    let entry = AffectedEntry {
        q: 0,
        i: 0,
        j: 0,
        alpha: 0.5,
        phi: 0.0,
    };
    let e = ImpairmentMatrix::from_entries(ImpairmentKind::Type2, 4, 2, vec![entry]).unwrap();
    let s_bar = apply_impairment(&d, &e).unwrap();
    for t in 0..d.slots() {
        for q in 0..2 {
            let ideal = d.slot(t, q);
            let got = unvec(&s_bar.column(t)[q * 16..(q + 1) * 16], 4, 4).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if (q, i, j) == (0, 0, 0) {
                        ideal[(i, j)] * 0.5
                    } else {
                        ideal[(i, j)]
                    };
                    assert_eq!(got[(i, j)], want);
                }
            }
        }
    }
}

#[test]
fn direct_and_vectorized_synthesis_agree() {
    let cfg = SystemConfig::new(2, 4, 8, 2).unwrap();
    let d = build_training(&cfg).unwrap();
    for (seed, kind) in [
        (1, ImpairmentKind::Ideal),
        (2, ImpairmentKind::Type3),
        (3, ImpairmentKind::Type1),
    ] {
        let mut r = rng(seed);
        let ch = generate_channels(&cfg, &mut r);
        let e = sample_impairment(&ImpairmentSpec::new(kind, 0.5).unwrap(), &cfg, &mut r);
        let s_bar = apply_impairment(&d, &e).unwrap();
        let direct = synthesize_rx(&ch, &s_bar, d.x(), &cfg, NoiseSpec::noiseless(), &mut r, false).unwrap();
        let cc = combined_channel(&ch, &cfg).unwrap();
        let vectorized = synthesize_rx_vectorized(&cc, &s_bar, d.x(), &cfg).unwrap();
        assert!(max_diff(&direct.y, &vectorized) < 1e-12);
    }
}

/// Ω̄ ⊗ I_{M_R} and Ω ⊗ I_{M_R} materialized in full on a tiny system.
#[test]
fn materialized_kronecker_oracles() {
    let cfg = SystemConfig::new(2, 2, 4, 2).unwrap();
    let d = build_training(&cfg).unwrap();
    let eye = ComplexMatrix::identity(cfg.m_r);
    let mut r = rng(21);
    let ch = generate_channels(&cfg, &mut r);
    let cc = combined_channel(&ch, &cfg).unwrap();
    let e = sample_impairment(&ImpairmentSpec::new(ImpairmentKind::Type3, 0.6).unwrap(), &cfg, &mut r);
    let s_bar = apply_impairment(&d, &e).unwrap();
    let omega_bar = khatri_rao(&s_bar, d.x()).unwrap().transpose();

    let big = naive_kron(d.omega(), &eye);
    let big_bar = naive_kron(&omega_bar, &eye);

    // Synthesis: y = (Ω̄ ⊗ I) c.
    let y = big_bar.matvec(&cc.c).unwrap();
    let direct = synthesize_rx(&ch, &s_bar, d.x(), &cfg, NoiseSpec::noiseless(), &mut r, false).unwrap();
    assert!(max_diff(&y, &direct.y) < 1e-12);

    // Filter: ĉ = (N̄/T)(Ω ⊗ I)ᴴ y.
    let scale = cfg.nbar as f64 / d.slots() as f64;
    let oracle: Vec<Complex64> = big.adjoint().matvec(&y).unwrap().iter().map(|z| z * scale).collect();
    let est = matched_filter(&ReceivedSignal::new(y.clone(), cfg.m_r).unwrap(), &d).unwrap();
    assert!(max_diff(&oracle, &est.c_hat) < 1e-12);

    // Mismatch: (Ω ⊗ I)ᴴ(Ω̄ ⊗ I) = (ΩᴴΩ̄) ⊗ I.
    let lhs = naive_matmul(&big.adjoint(), &big_bar);
    let rhs = naive_kron(&naive_matmul(&d.omega().adjoint(), &omega_bar), &eye);
    assert!(lhs.max_abs_diff(&rhs) < 1e-12);

    // Hence the noiseless estimate is c scaled entrywise by the impairment
    // entry its training row was distorted with.
    let ev = e.stacked_vec();
    for (p, chunk) in est.c_hat.chunks(cfg.m_r).enumerate() {
        let factor = ev[p / cfg.m_t];
        for (k, z) in chunk.iter().enumerate() {
            assert!((z - factor * cc.c[p * cfg.m_r + k]).norm() < 1e-12);
        }
    }
}

#[test]
fn noiseless_ideal_estimate_is_exact() {
    for nbar in [1, 2, 4, 8] {
        let cfg = SystemConfig::reference(nbar).unwrap();
        let d = build_training(&cfg).unwrap();
        let o = run_trial(&cfg, &d, &ImpairmentSpec::ideal(), NoiseSpec::noiseless(), 3, false).unwrap();
        assert!(o.nmse < 1e-20, "nbar {nbar}: {}", o.nmse);
    }
}

#[test]
fn decoupling_recovers_channels_up_to_scale() {
    let cfg = SystemConfig::reference(4).unwrap();
    let d = build_training(&cfg).unwrap();
    let o = run_trial(&cfg, &d, &ImpairmentSpec::ideal(), NoiseSpec::noiseless(), 0, true).unwrap();
    for (h, g) in o.decoupled.unwrap() {
        assert!(h < 1e-8 && g < 1e-8, "{h} {g}");
    }
}

#[test]
fn noisy_decoupling_residual_is_svd_tail() {
    let cfg = SystemConfig::reference(2).unwrap();
    let d = build_training(&cfg).unwrap();
    let noise = NoiseSpec::new(30.0, NoiseMode::SnrNormalized);
    let o = run_trial(&cfg, &d, &ImpairmentSpec::ideal(), noise, 4, false).unwrap();
    for q in [0, 7, 15] {
        let seg = o.estimate.segment(q);
        let dec = decouple_channels(seg, &cfg).unwrap();
        let outer = vec_kron_map(cfg.m_t, cfg.nbar, cfg.m_r, cfg.nbar)
            .inverse()
            .apply(seg)
            .unwrap();
        let w = unvec(&outer, cfg.m_r * cfg.nbar, cfg.m_t * cfg.nbar).unwrap();
        let s = singular_values(&w);
        let tail = s[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((dec.residual - tail).abs() < 1e-8, "{} vs {tail}", dec.residual);
        assert!((dec.sigma - s[0]).abs() < 1e-8);
        assert!(dec.residual > 0.0);
        // The recovered factors reproduce the rank-1 approximation.
        let approx = naive_kron(&dec.h, &dec.g);
        let r1 = nearest_kron_rank1(&w).unwrap();
        let rebuilt = vec_kron_map(cfg.m_t, cfg.nbar, cfg.m_r, cfg.nbar)
            .apply(r1.to_matrix().as_slice())
            .unwrap();
        assert!(max_diff(approx.as_slice(), &rebuilt) < 1e-10);
    }
}

#[test]
fn type1_is_a_no_op_without_mutual_coupling() {
    let cfg = SystemConfig::reference(1).unwrap();
    let d = build_training(&cfg).unwrap();
    let type1 = ImpairmentSpec::new(ImpairmentKind::Type1, 1.0).unwrap();
    let noise = NoiseSpec::new(5.0, NoiseMode::SnrNormalized);
    for k in 0..3 {
        let a = run_trial(&cfg, &d, &ImpairmentSpec::ideal(), noise, k, false).unwrap();
        let b = run_trial(&cfg, &d, &type1, noise, k, false).unwrap();
        assert_eq!(a.estimate.c_hat, b.estimate.c_hat);
        assert_eq!(a.nmse.to_bits(), b.nmse.to_bits());
    }
}

#[test]
fn dft_pilots_are_the_small_dft() {
    let d = build_training(&SystemConfig::new(2, 1, 2, 1).unwrap()).unwrap();
    let f = dft_matrix(2);
    for t in 0..d.slots() {
        assert_eq!(d.x().column(t), f.column(t % 2));
    }
}
