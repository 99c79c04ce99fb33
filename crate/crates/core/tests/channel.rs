use pcfec::channel::{Channel, ChannelConfig, LlrMatrix, Modulation};
use pcfec::BitMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn noise_variance_within_one_percent() {
    // BPSK LLRs are 2y/σ², so the noise sample is recovered exactly from L
    let sigma2 = 0.37;
    let channel = Channel::new(
        Modulation::new(2).unwrap(),
        ChannelConfig::new(sigma2, 5),
        1000,
    )
    .unwrap();
    let zeros = BitMatrix::zeros(1000, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let llrs: LlrMatrix<f64> = channel.transmit(&zeros, &mut rng).unwrap();
    let noise: Vec<f64> = llrs
        .as_slice()
        .iter()
        .map(|l| l * sigma2 / 2.0 + 1.0)
        .collect();
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let var = noise.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (noise.len() - 1) as f64;
    assert_eq!(noise.len(), 1_000_000);
    assert!(mean.abs() < 3e-3, "mean {mean}");
    assert!(
        (var / sigma2 - 1.0).abs() < 0.01,
        "variance {var} vs {sigma2}"
    );
}

#[test]
fn every_constellation_has_unit_energy_and_gray_labels() {
    for order in [2, 16, 64, 256] {
        let m = Modulation::new(order).unwrap();
        assert!((m.average_energy() - 1.0).abs() < 1e-12, "M={order}");
        assert!(m.has_gray_labels(), "M={order}");
    }
    assert!(Modulation::new(32).is_err());
}

#[test]
fn noiseless_transmission_keeps_every_bit() {
    for order in [2, 16, 64, 256] {
        let channel = Channel::new(
            Modulation::new(order).unwrap(),
            ChannelConfig::new(0.01, 9),
            48,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(order as u64);
        let bits = BitMatrix::from_fn(48, 48, |i, j| ((i * 7 + j * 3) % 5 == 0) as u8);
        let llrs: LlrMatrix<f64> = channel.transmit_noiseless(&bits, &mut rng).unwrap();
        assert_eq!(pcfec::channel::hard_decisions(&llrs), bits, "M={order}");
    }
}
