//! The fast reduction against the two reference implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topolayer::geometry::pairwise_distances;
use topolayer::persistence::{compute_h0_unionfind, compute_persistence_pruned, reduce_naive, Bar};
use topolayer::{build_rips, compute_persistence, PointCloud};

fn check(cloud: &PointCloud) {
    let d = pairwise_distances(cloud);
    let f = build_rips(&d);
    let fast = compute_persistence(&f);
    let naive = reduce_naive(&f);
    assert_eq!(fast, naive);
    assert_eq!(fast.pairings(), naive.pairings());
    assert_eq!(fast.restricted_to(0), compute_h0_unionfind(&d));

    // pruning drops H1 pairs of zero length and nothing else
    let keep = |b: &&Bar| b.dim == 0 || b.length() > 0.0;
    let pruned = compute_persistence_pruned(&f);
    let full: Vec<Bar> = fast.bars().iter().filter(keep).copied().collect();
    let kept: Vec<Bar> = pruned.bars().iter().filter(keep).copied().collect();
    assert_eq!(full, kept);
    assert!(pruned.bars().len() <= fast.bars().len());
}

#[test]
fn random_real_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    for _ in 0..150 {
        let n = rng.random_range(1..=12);
        let xy: Vec<_> = (0..n).map(|_| (rng.random_range(0.0..27.0), rng.random_range(0.0..27.0))).collect();
        check(&PointCloud::from_xy(&xy).unwrap());
    }
}

#[test]
fn pixel_grid_clouds_with_many_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let n = rng.random_range(2..=14);
        let xy: Vec<_> = (0..n)
            .map(|_| (rng.random_range(0..6) as f64, rng.random_range(0..6) as f64))
            .collect();
        check(&PointCloud::from_xy(&xy).unwrap());
    }
}

#[test]
fn regular_polygons() {
    for n in 3..=16 {
        let xy: Vec<_> = (0..n)
            .map(|k| {
                let t = k as f64 / n as f64 * std::f64::consts::TAU;
                (14.0 + 8.0 * t.cos(), 14.0 + 8.0 * t.sin())
            })
            .collect();
        let cloud = PointCloud::from_xy(&xy).unwrap();
        check(&cloud);
        let bc = compute_persistence(&build_rips(&pairwise_distances(&cloud)));
        if n >= 4 {
            assert_eq!(bc.in_dim(1).filter(|b| b.length() > 1e-9).count(), 1, "{n}-gon");
        }
    }
}
