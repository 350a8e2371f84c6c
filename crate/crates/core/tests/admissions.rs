//! Frozen EXACT explanations of the bundled admissions table (values in
//! units of 1/210, first checked against the brute-force oracle).

use rankshap::{
    explain_all, fixtures, method_fidelity, rank_all, sensitivity, EngineOptions, NeighborKind,
    NeighborSpec, QoiKind, ScoringFunction, SimilarityKind,
};

const SCORE: [[f64; 3]; 8] = [
    [-24.0, 72.0, 72.0],
    [-24.0, 72.0, 72.0],
    [72.0, -24.0, 24.0],
    [-24.0, 72.0, -24.0],
    [72.0, -24.0, -24.0],
    [72.0, -24.0, -72.0],
    [-24.0, -24.0, -24.0],
    [-120.0, -120.0, -24.0],
];

const RANK: [[f64; 3]; 8] = [
    [100.0, -335.0, -365.0],
    [120.0, -285.0, -255.0],
    [-300.0, 105.0, -75.0],
    [105.0, -270.0, 45.0],
    [-220.0, 140.0, 140.0],
    [-205.0, 155.0, 260.0],
    [105.0, 150.0, 135.0],
    [215.0, 260.0, 95.0],
];

/// Mean replacement rank of each applicant, times 7.
const RANK_BASELINE: [f64; 8] = [27.0, 28.0, 30.0, 32.0, 33.0, 35.0, 36.0, 37.0];

const TOP3: [[f64; 3]; 8] = [
    [-20.0, 55.0, 55.0],
    [-20.0, 55.0, 55.0],
    [80.0, -10.0, 20.0],
    [-40.0, 35.0, -55.0],
    [35.0, -55.0, -40.0],
    [20.0, -25.0, -55.0],
    [0.0, -30.0, -30.0],
    [-20.0, -20.0, -20.0],
];

fn check(q: QoiKind, want: &[[f64; 3]; 8]) -> Vec<rankshap::ExplanationVector> {
    let ds = fixtures::admissions();
    let f = ScoringFunction::admissions();
    let got = explain_all(&ds, q, &f, &EngineOptions::exact()).unwrap();
    for (e, w) in got.iter().zip(want) {
        for (c, x) in e.contributions.iter().zip(w) {
            assert!((c - x / 210.0).abs() < 1e-12, "{q} item {}: {c} vs {}", e.subject.item(), x / 210.0);
        }
    }
    got
}

#[test]
fn score_explanations() {
    let e = check(QoiKind::Score, &SCORE);
    assert!((e[0].total() - 0.571_428_571_428_571_4).abs() < 1e-12);
    assert!((e[0].reconstruction - 4.6).abs() < 1e-12);
}

#[test]
fn rank_explanations() {
    let e = check(QoiKind::Rank, &RANK);
    for (i, x) in e.iter().enumerate() {
        assert!((x.baseline - RANK_BASELINE[i] / 7.0).abs() < 1e-12);
        assert!((x.reconstruction - (i + 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn top3_explanations() {
    let e = check(QoiKind::TopK(3), &TOP3);
    for (i, x) in e.iter().enumerate() {
        let want = if i < 3 { 1.0 } else { 0.0 };
        assert!((x.reconstruction - want).abs() < 1e-9);
    }
}

#[test]
fn exact_method_fidelity_is_one() {
    let ds = fixtures::admissions();
    let f = ScoringFunction::admissions();
    for q in [QoiKind::Score, QoiKind::Rank, QoiKind::TopK(3)] {
        let e = explain_all(&ds, q, &f, &EngineOptions::exact()).unwrap();
        assert!((method_fidelity(&e, &ds, q, &f).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sensitivity_fixture() {
    let ds = fixtures::admissions();
    let f = ScoringFunction::admissions();
    let r = rank_all(&f, &ds).unwrap();
    let e = check(QoiKind::Rank, &RANK);
    let nbr = NeighborSpec { kind: NeighborKind::FeatureKnn, count: 2 };
    let (k, triples) = sensitivity(&ds, &e, nbr, SimilarityKind::Kendall, &r).unwrap();
    assert!((k - 7.0 / 12.0).abs() < 1e-12);
    assert_eq!(triples.len(), 16);
    let (j, _) = sensitivity(&ds, &e, nbr, SimilarityKind::JaccardTop2, &r).unwrap();
    assert!((j - 13.0 / 24.0).abs() < 1e-12);
    // Bob and Cal share a feature row and sit next to each other in the ranking.
    let bob_cal = triples.iter().find(|t| t.reference == 0 && t.neighbor == 1).unwrap();
    assert_eq!(bob_cal.feature_distance, 0.0);
    assert_eq!(bob_cal.rank_distance, 1);
}
