//! Shared helpers for unit tests: strategies and the fixture networks.

use alloc::vec::Vec;
use proptest::prelude::*;

use crate::topology::Topology;

/// Random valid topology with `1..=max_k` users.
pub fn arb_topology(max_k: usize) -> impl Strategy<Value = Topology> {
    arb_topology_k(1, max_k)
}

pub fn arb_topology_k(min_k: usize, max_k: usize) -> impl Strategy<Value = Topology> {
    (min_k..=max_k).prop_flat_map(|k| {
        prop::collection::vec(0u32..(1 << k), k).prop_map(move |rows| {
            Topology::from_rows(rows.iter().enumerate().map(|(i, r)| r | 1 << i).collect()).unwrap()
        })
    })
}

/// Parses the text topology format (first line `K`, then `K` rows of 0/1).
pub fn parse(text: &str) -> Topology {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let k: usize = lines.next().unwrap().parse().unwrap();
    let rows: Vec<u32> = lines
        .take(k)
        .map(|l| l.bytes().enumerate().fold(0, |m, (j, b)| m | (u32::from(b == b'1') << j)))
        .collect();
    Topology::from_rows(rows).unwrap()
}

pub fn fixture(name: &str) -> Topology {
    let text = match name {
        "pentagon" => include_str!("../fixtures/pentagon.txt"),
        "four_user_chain" => include_str!("../fixtures/four_user_chain.txt"),
        "six_user_repetition" => include_str!("../fixtures/six_user_repetition.txt"),
        "fractional_gap" => include_str!("../fixtures/fractional_gap.txt"),
        "max_gain" => include_str!("../fixtures/max_gain.txt"),
        "wide_gap_a" => include_str!("../fixtures/wide_gap_a.txt"),
        "wide_gap_b" => include_str!("../fixtures/wide_gap_b.txt"),
        _ => panic!("unknown fixture {name}"),
    };
    parse(text)
}
