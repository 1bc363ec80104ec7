//! Analytic link budget across fiber length.
//!
//! Evaluates the raw key rate q·μ·ν·η_t·η_d and the expected sifted QBER of
//! the calibrated 25 km operating point, then sweeps the fiber length to
//! show where dark counts take over the error budget.
//!
//! Run: cargo run --example link_budget

use qkd_sim::channel::{transmittance, ChannelParams, DEFAULT_ALPHA_DB_PER_KM};

fn main() {
    let reference = ChannelParams::reference_25km();
    println!("calibrated operating point (25 km, 11 dB):");
    println!("  mu                = {}", reference.mu);
    println!("  nu                = {} Hz", reference.nu_hz);
    println!("  eta_t             = {:.6}", reference.transmittance());
    println!("  eta_d (inverted)  = {:.6}", reference.eta_d);
    println!("  raw key rate      = {:.1} Hz", reference.raw_key_rate());
    println!(
        "  expected QBER     = {:.3}%",
        reference.expected_sifted_qber() * 100.0
    );
    println!();

    println!(
        "{:>10} {:>9} {:>10} {:>12} {:>10}",
        "length_km", "loss_db", "eta_t", "r_raw_hz", "qber_%"
    );
    for length in [
        0.0, 5.0, 10.0, 15.0, 20.0, 22.8, 25.0, 30.0, 40.0, 50.0, 75.0, 100.0,
    ] {
        let link = reference
            .clone()
            .from_fiber(DEFAULT_ALPHA_DB_PER_KM, length, 0.0);
        println!(
            "{:>10} {:>9.2} {:>10.6} {:>12.2} {:>10.3}",
            length,
            link.loss_db,
            link.transmittance(),
            link.raw_key_rate(),
            link.expected_sifted_qber() * 100.0
        );
    }
    println!();

    // transmittance is a plain dB conversion; show a couple of anchors
    for db in [0.0, 3.0103, 11.0] {
        println!(
            "transmittance({db:>7.4} dB) = {:.6}",
            transmittance(db).unwrap()
        );
    }
}
