use topodof::inner::{self, verify_transmission_matrix, TransmissionMatrix};
use topodof::outer::{self, outer_bound, OuterConfig};
use topodof::report::{run_bounds, BoundsConfig};
use topodof::simulate::simulate;
use topodof::{ratio, Topology};

fn fixture(name: &str) -> Topology {
    let path = format!("{}/fixtures/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let k: usize = lines.next().unwrap().parse().unwrap();
    let rows = lines
        .take(k)
        .map(|l| l.bytes().enumerate().fold(0u32, |m, (j, b)| m | (u32::from(b == b'1') << j)))
        .collect();
    Topology::from_rows(rows).unwrap()
}

#[test]
fn pentagon_bounds() {
    let r = run_bounds(&fixture("pentagon"), &BoundsConfig::default()).unwrap();
    assert_eq!((r.outer, r.ia, r.rgc), (ratio(2, 5), ratio(2, 5), ratio(1, 3)));
    assert!(r.tight);
}

#[test]
fn fractional_terms_matter() {
    let t = fixture("fractional_gap");
    let full = outer_bound(&t, &OuterConfig::default());
    let plain = outer_bound(&t, &OuterConfig { fractional: false, ..Default::default() });
    assert_eq!(full.value, ratio(2, 7));
    assert_eq!(plain.value, ratio(1, 3));
    assert_eq!(outer::replay(&t, &full.certificate), Ok(ratio(2, 7)));
}

#[test]
fn four_user_chain() {
    let r = run_bounds(&fixture("four_user_chain"), &BoundsConfig::default()).unwrap();
    assert_eq!((r.rgc.clone(), r.ia), (ratio(1, 3), ratio(1, 4)));
    assert_eq!(r.outer, r.rgc);
}

#[test]
fn repetition_example_and_its_schedule() {
    let t = fixture("six_user_repetition");
    let mut cfg = BoundsConfig::default();
    cfg.inner.src.n_max = Some(7);
    let r = run_bounds(&t, &cfg).unwrap();
    assert_eq!((r.rgc, r.ia, r.src, r.outer), (ratio(1, 4), ratio(1, 4), ratio(1, 3), ratio(1, 3)));

    let tm = TransmissionMatrix::new(1, 3, vec![0b001, 0b010, 0b101, 0b101, 0b011, 0b010]).unwrap();
    assert!(verify_transmission_matrix(&t, &tm).unwrap().ok);
    let s = simulate(&t, &tm, 200, 1);
    assert_eq!((s.successes, s.violations), (200, 0));
}

#[test]
fn gap_network_schedule_beats_coloring() {
    let t = fixture("wide_gap_a");
    let r = run_bounds(&t, &BoundsConfig::default()).unwrap();
    assert!(!r.tight);
    assert_eq!(r.outer, ratio(1, 2));
    assert_eq!(r.src, ratio(3, 7));
    let c = r.certificates.unwrap();
    assert_eq!(c.coloring.chi_f, ratio(5, 2));
    let ia = inner::ia_embedding(&c.coloring, t.k()).unwrap();
    assert!(verify_transmission_matrix(&t, &ia).unwrap().ok);
    assert_eq!(simulate(&t, &c.src, 200, 9).successes, 200);
}
