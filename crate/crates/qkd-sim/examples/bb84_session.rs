//! One full BB84 session on the calibrated 25 km link.
//!
//! Streams ten million pulses through the lossy channel, sifts, estimates
//! the QBER from a sacrificial sample, reconciles with block parities and
//! compresses with a Toeplitz hash. Prints the stage-by-stage transcript.
//!
//! Run: cargo run --example bb84_session

use qkd_sim::bb84::session::{run_session, SessionConfig};
use qkd_sim::channel::ChannelParams;
use qkd_sim::rng::rng_from_seed;

fn main() {
    let channel = ChannelParams::reference_25km();
    let config = SessionConfig {
        n_pulses: 10_000_000,
        session_id: "example-25km".to_string(),
        ..SessionConfig::default()
    };
    let mut rng = rng_from_seed(7);
    let outcome = run_session(&channel, &config, &mut rng).expect("session runs");

    let t = &outcome.transcript;
    println!("pulses sent        : {}", t.pulses_sent);
    println!(
        "detected           : {} ({:.4}%)",
        t.detected,
        100.0 * t.detected as f64 / t.pulses_sent as f64
    );
    println!(
        "sifted             : {} (fraction of detected: {:.3})",
        t.stage_lengths.sifted, t.sifted_fraction
    );
    println!(
        "measured QBER      : {:.3}% (calibration target 4.5%)",
        t.measured_qber.unwrap() * 100.0
    );
    println!(
        "corrected          : {} bits, {} parity bits leaked",
        t.stage_lengths.corrected, t.leaked_bits
    );
    println!("final key          : {} bits", t.stage_lengths.final_len);

    match &outcome.final_keys {
        Some((alice, bob)) => {
            assert_eq!(alice, bob, "distilled keys always agree");
            let preview: String = alice
                .bits()
                .iter()
                .take(64)
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            println!("key prefix         : {preview}...");
        }
        None => println!(
            "aborted            : {}",
            t.aborted.as_deref().unwrap_or("?")
        ),
    }

    println!();
    println!("transcript as JSON:");
    println!("{}", t.to_json());
}
