use dioph_core::bounds::{self, EquationInstance, Verdict};
use dioph_core::scans::{self, ScanConfig};

const QS: [u64; 7] = [3, 5, 7, 11, 13, 17, 19];

#[test]
fn every_listed_pair_appears_below_2_pow_17() {
    let found = scans::theorem2_scan(131_072, &QS, ScanConfig { jobs: 2, shards: 16 }, None).unwrap();
    let pairs: Vec<(u64, u64)> = found.iter().map(|e| (e.q, e.b)).collect();
    assert_eq!(pairs, scans::published_table());
}

#[test]
fn engine_matches_hand_argument_on_its_region() {
    // The per-q argument covers b + 1 < 2^q; check it up to 2^17.
    for q in QS {
        let end = 131_072u64.min((1 << q) - 1);
        for b in (3..end).step_by(2) {
            let d = bounds::prime_chain_decide(&EquationInstance::new(b, q).unwrap()).unwrap();
            let hand = scans::hand_argument_exceptional(q, b).unwrap();
            assert_eq!(d.verdict == Verdict::Exceptional, hand, "q={q} b={b}");
        }
    }
}

#[test]
fn checkpoint_resume_gives_the_same_table() {
    let dir = std::env::temp_dir().join(format!("dioph-table-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scan.json");
    let cfg = ScanConfig::default();
    let first = scans::theorem2_scan(20_000, &[5, 11, 13], cfg, Some(&path)).unwrap();
    let resumed = scans::theorem2_scan(20_000, &[5, 11, 13], cfg, Some(&path)).unwrap();
    assert_eq!(first, resumed);
    assert!(scans::theorem2_scan(30_000, &[5, 11, 13], cfg, Some(&path)).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}
