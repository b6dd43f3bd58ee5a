use proptest::prelude::*;
use qkdsim_core::mdi::MdiSessionConfig;
use qkdsim_core::quantum::{ChannelModel, DetectorModel};
use qkdsim_core::relay::{
    otp_forward, rate_scaling_bb84, recover, run_bb84_link, run_trusted_relay, LinkConfig, Party, Relay, RelayError,
    RelayMode, RelayOutcome,
};
use qkdsim_core::rng::seeded;
use qkdsim_core::stats::binomial_sigma;

fn bits(n: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 0..=n)
}

proptest! {
    #[test]
    fn otp_round_trip(pair in (0usize..=10_000).prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)))) {
        let (k_a, k_b) = pair;
        let fwd = otp_forward(&k_a, &k_b);
        prop_assert!(fwd.truncated.is_none());
        prop_assert_eq!(recover(&fwd.ciphertext, &k_b), k_a);
    }

    #[test]
    fn otp_truncates_to_shorter(a in bits(300), b in bits(300)) {
        let fwd = otp_forward(&a, &b);
        let n = a.len().min(b.len());
        prop_assert_eq!(fwd.ciphertext.len(), n);
        prop_assert_eq!(fwd.truncated.is_some(), a.len() != b.len());
        prop_assert_eq!(recover(&fwd.ciphertext, &b), a[..n].to_vec());
    }
}

#[test]
fn kept_fraction_is_half_on_ideal_link() {
    let relay = Relay::new(RelayMode::TrustedBb84);
    let n = 200_000;
    let out = run_bb84_link(Party::Alice, &relay, &LinkConfig::ideal(n), &mut seeded(1)).unwrap();
    assert!((out.kept_fraction - 0.5).abs() < 3.0 * binomial_sigma(0.5, n));
    assert_eq!(out.qber, 0.0);
    assert_eq!(out.user_key.bits, out.relay_key.bits);
}

#[test]
fn lossy_link_keeps_an_eighth() {
    let relay = Relay::new(RelayMode::TrustedBb84);
    let n = 400_000;
    let cfg = LinkConfig {
        rounds: n,
        channel: ChannelModel::ideal().with_transmittance(0.5),
        detector: DetectorModel::default().with_efficiency(0.5),
    };
    let out = run_bb84_link(Party::Bob, &relay, &cfg, &mut seeded(2)).unwrap();
    assert!((out.kept_fraction - 0.125).abs() < 3.0 * binomial_sigma(0.125, n));
}

#[test]
fn misaligned_link_qber() {
    let relay = Relay::new(RelayMode::TrustedBb84);
    let cfg = LinkConfig {
        rounds: 400_000,
        channel: ChannelModel::ideal().with_misalignment(0.05),
        detector: DetectorModel::default(),
    };
    let out = run_bb84_link(Party::Alice, &relay, &cfg, &mut seeded(3)).unwrap();
    assert!((out.qber - 0.05).abs() < 3.0 * binomial_sigma(0.05, out.kept));
}

#[test]
fn end_to_end_recovery_and_truncation() {
    let relay = Relay::new(RelayMode::TrustedBb84);
    let report = run_trusted_relay(&relay, &MdiSessionConfig::ideal(20_000, 7)).unwrap();
    assert!(report.keys_match);
    assert_eq!(report.recovered_key, report.alice_key);
    // Independent links almost never sift to the same length.
    let n = report.recovered_key.len();
    assert!(n > 9_000);
    if let Some(t) = report.truncated {
        assert_eq!(t.message.min(t.pad), n);
    }
}

#[test]
fn mode_switching() {
    let mut relay = Relay::new(RelayMode::UntrustedMdi);
    let cfg = MdiSessionConfig::ideal(2_000, 9);
    assert!(matches!(relay.run(&cfg).unwrap(), RelayOutcome::Mdi(_)));
    assert!(matches!(
        run_bb84_link(Party::Alice, &relay, &LinkConfig::ideal(10), &mut seeded(0)),
        Err(RelayError::WrongMode(RelayMode::UntrustedMdi))
    ));
    relay.toggle();
    assert_eq!(relay.mode(), RelayMode::TrustedBb84);
    assert!(matches!(relay.run(&cfg).unwrap(), RelayOutcome::Trusted(_)));
    relay.switch_mode(RelayMode::UntrustedMdi);
    assert_eq!(relay.mode(), RelayMode::UntrustedMdi);
}

#[test]
fn dead_link_is_an_error() {
    let relay = Relay::new(RelayMode::TrustedBb84);
    let cfg = LinkConfig {
        rounds: 100,
        channel: ChannelModel::ideal().with_transmittance(0.0),
        detector: DetectorModel::default(),
    };
    assert!(matches!(
        run_bb84_link(Party::Alice, &relay, &cfg, &mut seeded(0)),
        Err(RelayError::EmptyKey(Party::Alice))
    ));
}

#[test]
fn kept_fraction_linear_in_efficiency() {
    let pts = rate_scaling_bb84(&LinkConfig::ideal(200_000), 11, &[0.25, 0.5, 1.0]).unwrap();
    for p in &pts {
        assert!((p.rate - 0.5 * p.eta).abs() < 3.0 * binomial_sigma(0.5 * p.eta, 200_000));
    }
}
