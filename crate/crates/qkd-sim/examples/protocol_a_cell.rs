//! Three-party key sharing inside one cell.
//!
//! The cell's base station sources one random symbol sequence and sends the
//! same bits and bases to both clients; each measures in random bases. A
//! position yields shared secret key only when all three bases agree (2 of
//! the 8 equally likely triples, so a quarter of detected positions); when
//! the base station agrees with exactly one client the position is only
//! partially useful and is discarded; when the clients agree against the
//! base station nothing survives.
//!
//! Run: cargo run --example protocol_a_cell

use qkd_sim::channel::ChannelParams;
use qkd_sim::network::{protocol_a, NetworkRunConfig, Topology};
use qkd_sim::rng::rng_from_seed;

fn main() {
    let topology = Topology::single_cell(ChannelParams::ideal());
    let config = NetworkRunConfig {
        n_pulses: 1_000_000,
        ..NetworkRunConfig::default()
    };
    let mut rng = rng_from_seed(5);
    let outcome = protocol_a(&topology, &"alice".into(), &"bob".into(), &config, &mut rng)
        .expect("protocol runs");

    let t = &outcome.transcript;
    let tally = t.classification.unwrap();
    let n = t.detected as f64;
    println!("detected positions  : {}", t.detected);
    println!();
    println!("basis-triple classification (client, base station, client):");
    println!(
        "  full agreement    : {:>8} ({:.2}%, expected 25%) -> secret key",
        tally.secret_key,
        100.0 * tally.secret_key as f64 / n
    );
    println!(
        "  one side agrees   : {:>8} ({:.2}%, expected 50%) -> partial, discarded",
        tally.partial_secret_key,
        100.0 * tally.partial_secret_key as f64 / n
    );
    println!(
        "  clients only      : {:>8} ({:.2}%, expected 25%) -> no key",
        tally.no_secret_key,
        100.0 * tally.no_secret_key as f64 / n
    );
    println!();
    println!(
        "sifted fraction     : {:.4} (expected {})",
        t.sifted_fraction, t.expected_sifted_fraction
    );
    println!("measured QBER       : {:.4}", t.measured_qber.unwrap());
    println!("final key           : {} bits", t.stage_lengths.final_len);

    let (alice, bob) = outcome.final_keys.as_ref().unwrap();
    assert_eq!(alice, bob);
    for k in &t.relay_knowledge {
        println!(
            "trust note          : {} knows {:.0}% of the sifted key (it sourced every bit)",
            k.node,
            k.sifted_fraction_known * 100.0
        );
    }
}
