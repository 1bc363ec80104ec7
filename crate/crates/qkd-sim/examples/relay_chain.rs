//! Sifted-key shrinkage across a measuring relay chain.
//!
//! When every base station on the path measures in a random basis and
//! re-prepares, a position survives sifting only if all n+2 parties picked
//! the same basis: the sifted fraction is 2^-(n+1) and halves with every
//! added relay. This is the cost the pad-forwarding relay protocol avoids
//! (see the trusted_relay example).
//!
//! Run: cargo run --example relay_chain

use qkd_sim::channel::ChannelParams;
use qkd_sim::network::{
    protocol_a_chain, run_relay_chain, ChainChannels, LinkSpec, NetworkRunConfig, Topology,
};
use qkd_sim::rng::derive_rng;

fn main() {
    let config = NetworkRunConfig {
        n_pulses: 1_000_000,
        distill: false,
        ..NetworkRunConfig::default()
    };

    println!(
        "{:>6} {:>10} {:>16} {:>16}",
        "n_qbs", "detected", "sifted_fraction", "expected 2^-(n+1)"
    );
    for n_qbs in 0usize..=4 {
        let mut rng = derive_rng(3, n_qbs as u64);
        let outcome = if n_qbs == 0 {
            // no base station at all: plain two-party BB84
            let channels = ChainChannels {
                source_to_a: None,
                hops: vec![LinkSpec::clean(ChannelParams::ideal())],
            };
            run_relay_chain(&channels, &config, &mut rng).unwrap()
        } else {
            let topology = Topology::linear_chain(n_qbs, ChannelParams::ideal());
            protocol_a_chain(
                &topology,
                &"alice".into(),
                &"bob".into(),
                n_qbs,
                &config,
                &mut rng,
            )
            .unwrap()
        };
        let t = &outcome.transcript;
        println!(
            "{:>6} {:>10} {:>16.5} {:>16.5}",
            n_qbs, t.detected, t.sifted_fraction, t.expected_sifted_fraction
        );
    }
}
