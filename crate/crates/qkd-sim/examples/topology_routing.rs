//! Topology files and minimal-hop routing.
//!
//! Builds a five-cell ring, routes between cell pairs (breadth-first with a
//! lexicographic tie-break, so routes are deterministic), and shows the
//! versioned TOML round trip that the CLI's [topology] file option uses.
//!
//! Run: cargo run --example topology_routing

use qkd_sim::channel::ChannelParams;
use qkd_sim::network::{route, Topology};

fn main() {
    let mut builder = Topology::builder();
    for i in 1..=5 {
        let qncs: Vec<String> = match i {
            1 => vec!["alice".into()],
            3 => vec!["bob".into()],
            _ => vec![],
        };
        builder = builder.cell(format!("cell-{i}"), format!("qbs-{i}"), qncs);
    }
    for i in 1..=5 {
        let j = i % 5 + 1;
        builder = builder.quantum_link(
            format!("qbs-{i}"),
            format!("qbs-{j}"),
            ChannelParams::ideal(),
            None,
        );
    }
    let topology = builder
        .quantum_link("alice", "qbs-1", ChannelParams::ideal(), None)
        .quantum_link("bob", "qbs-3", ChannelParams::ideal(), None)
        .build()
        .expect("ring is valid");

    println!("five-cell ring, clients in cell-1 and cell-3");
    for (from, to) in [
        ("cell-1", "cell-3"),
        ("cell-1", "cell-4"),
        ("cell-2", "cell-5"),
        ("cell-3", "cell-3"),
    ] {
        let path = route(&topology, &from.into(), &to.into()).unwrap();
        let hops: Vec<&str> = path.iter().map(|n| n.as_str()).collect();
        println!("  {from} -> {to}: {}", hops.join(" -> "));
    }

    println!();
    let text = topology.to_toml_string();
    println!(
        "serialized topology is {} lines of TOML; round-trip intact: {}",
        text.lines().count(),
        Topology::from_toml_str(&text).unwrap() == topology
    );
}
