use pcfec::sim::{csv_string, BerMode, DecoderKind, SimConfig, Simulation, CSV_HEADER};
use statrs::distribution::{ContinuousCDF, Normal};

fn small(decoder: DecoderKind) -> SimConfig {
    SimConfig {
        nu: 5,
        t: 2,
        s: 7,
        decoder,
        w: 3.0,
        max_iters: 5,
        ebn0_grid_db: vec![3.5, 4.5, 5.5],
        min_error_events: 30,
        max_codewords: 400,
        seed: 42,
        ..SimConfig::default()
    }
}

#[test]
fn uncoded_bpsk_threshold_matches_closed_form() {
    // Q(√(2x)) = 1e-3
    let q_inv = -Normal::new(0.0, 1.0).unwrap().inverse_cdf(1e-3);
    let expected = 10.0 * (q_inv * q_inv / 2.0).log10();
    assert!((expected - 6.79).abs() < 0.01);
    let cfg = SimConfig {
        decoder: DecoderKind::Uncoded,
        ebn0_grid_db: vec![5.0, 8.0],
        min_error_events: 200,
        ..SimConfig::default()
    };
    let th = Simulation::<f64>::new(cfg)
        .unwrap()
        .find_threshold(1e-3)
        .unwrap();
    assert!(
        (th.ebn0_db - expected).abs() < 0.05,
        "{} vs {expected}",
        th.ebn0_db
    );
}

#[test]
fn zero_scale_ber_equals_raw_channel_ber() {
    let sr = SimConfig {
        w: 0.0,
        ..small(DecoderKind::IbddSr)
    };
    let a = Simulation::<f64>::new(sr).unwrap().sweep().unwrap();
    let b = Simulation::<f64>::new(small(DecoderKind::Hard))
        .unwrap()
        .sweep()
        .unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(
            (x.bit_errors, x.bits_counted),
            (y.bit_errors, y.bits_counted)
        );
    }
}

#[test]
fn decoding_beats_hard_decisions() {
    let hard = Simulation::<f64>::new(small(DecoderKind::Hard))
        .unwrap()
        .run_point(5.5)
        .unwrap();
    for d in [DecoderKind::Ibdd, DecoderKind::IbddSr] {
        let p = Simulation::<f64>::new(small(d))
            .unwrap()
            .run_point(5.5)
            .unwrap();
        assert!(p.ber < hard.ber / 2.0, "{d}: {} vs {}", p.ber, hard.ber);
        assert!(p.bit_errors <= p.bits_counted);
    }
}

#[test]
fn csv_is_identical_across_worker_counts() {
    let run = |workers| {
        let cfg = SimConfig {
            workers,
            ..small(DecoderKind::IbddSr)
        };
        csv_string(&Simulation::<f64>::new(cfg).unwrap().sweep().unwrap())
    };
    let one = run(1);
    assert!(one.starts_with(CSV_HEADER));
    assert_eq!(one.lines().count(), 4);
    assert_eq!(run(3), one);
}

#[test]
fn all_bits_mode_counts_every_code_bit() {
    let cfg = SimConfig {
        ber_mode: BerMode::AllBits,
        max_codewords: 10,
        ..small(DecoderKind::Ibdd)
    };
    let p = Simulation::<f64>::new(cfg).unwrap().run_point(9.0).unwrap();
    assert_eq!(p.bits_counted, 10 * 24 * 24);
}

#[test]
fn single_precision_path_runs() {
    let p = Simulation::<f32>::new(small(DecoderKind::IbddSr))
        .unwrap()
        .run_point(5.5)
        .unwrap();
    let q = Simulation::<f64>::new(small(DecoderKind::IbddSr))
        .unwrap()
        .run_point(5.5)
        .unwrap();
    assert_eq!(p.codewords, q.codewords);
    assert!(p.ber < 1e-2);
}
