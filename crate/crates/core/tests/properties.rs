//! Property tests over the geometry and search primitives.

use proptest::prelude::*;

use pointvoxel_core::geom::{cartesian_to_spherical, spherical_to_cartesian};
use pointvoxel_core::knn::interpolate;
use pointvoxel_core::range_image::{
    ball_query, BallQueryRequest, RangeImageSpec, SelectionMode, VirtualRangeImage,
};
use pointvoxel_core::sample::{sample, SampleRequest, Strategy as SampleStrategy};
use pointvoxel_core::voxel::{collapse_height, densify, voxelize, VoxelGridSpec, VoxelReducer};
use pointvoxel_core::{PointCloud, RigidTransform, Vec3};

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (
        -range..range,
        -range..range,
        -range..range,
    )
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #[test]
    fn spherical_round_trip(p in vec3(500.0)) {
        prop_assume!(p.norm() > 1e-12);
        let back = spherical_to_cartesian(cartesian_to_spherical(p));
        prop_assert!(p.distance(back) < 1e-9);
    }

    #[test]
    fn spherical_ranges_hold(p in vec3(500.0)) {
        let s = cartesian_to_spherical(p);
        prop_assert!(s.azimuth > -core::f64::consts::PI && s.azimuth <= core::f64::consts::PI);
        prop_assert!(s.inclination.abs() <= core::f64::consts::FRAC_PI_2);
        prop_assert!(s.range >= 0.0);
    }

    #[test]
    fn rigid_inverse_recovers_points(
        angle in -3.1..3.1f64,
        t in vec3(20.0),
        p in vec3(50.0),
    ) {
        let m = RigidTransform::rotation_z(angle).compose(&RigidTransform::translation(t));
        prop_assert!(m.inverse().apply(m.apply(p)).distance(p) < 1e-9);
    }

    #[test]
    fn interpolation_is_a_convex_combination(
        feats in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..8),
        centers in proptest::collection::vec((0.3..5.0f64, -3.0..3.0f64, -3.0..3.0f64), 8),
    ) {
        let rows: Vec<[f64; 2]> = feats.iter().map(|&(a, b)| [a, b]).collect();
        let neighbors: Vec<(Vec3, &[f64])> = rows
            .iter()
            .zip(&centers)
            .map(|(r, &(x, y, z))| (Vec3::new(x, y, z), &r[..]))
            .collect();
        let out = interpolate(Vec3::ZERO, &neighbors).unwrap();
        for c in 0..2 {
            let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out[c] >= lo - 1e-9 && out[c] <= hi + 1e-9);
        }
    }

    #[test]
    fn csr_buckets_partition_the_cloud(
        pts in proptest::collection::vec((-40.0..40.0f64, -40.0..40.0f64, -6.0..6.0f64), 0..300),
    ) {
        let cloud = PointCloud::new(
            pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect(),
        ).unwrap();
        let spec = RangeImageSpec::new(12, 48, -0.9, 0.9).unwrap();
        let img = VirtualRangeImage::build(&cloud, &RigidTransform::identity(), spec);
        let offs = img.offsets();
        prop_assert_eq!(offs[0], 0);
        prop_assert_eq!(*offs.last().unwrap() as usize, pts.len());
        for w in offs.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let mut seen = vec![false; pts.len()];
        for r in 0..img.spec().rows {
            for c in 0..img.spec().cols {
                let (s, e) = img.pixel_range(r, c);
                for sp in &img.points()[s..e] {
                    prop_assert_eq!(
                        img.spec().pixel_of(&sp.spherical),
                        r * img.spec().cols + c
                    );
                    prop_assert!(!seen[sp.original as usize]);
                    seen[sp.original as usize] = true;
                }
            }
        }
        prop_assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn ball_query_never_violates_the_radius(
        pts in proptest::collection::vec((-25.0..25.0f64, -25.0..25.0f64, -4.0..4.0f64), 1..200),
        q in (-20.0..20.0f64, -20.0..20.0f64, -2.0..2.0f64),
        radius in 0.2..5.0f64,
        kernel in 1usize..9,
        seed in 0u64..1000,
    ) {
        let positions: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let cloud = PointCloud::new(positions.clone()).unwrap();
        let spec = RangeImageSpec::new(16, 64, -0.6, 0.6).unwrap();
        let img = VirtualRangeImage::build(&cloud, &RigidTransform::identity(), spec);
        let query = Vec3::new(q.0, q.1, q.2);
        for mode in [SelectionMode::Random { seed }, SelectionMode::Sequential] {
            let out = ball_query(
                &img,
                &BallQueryRequest::new(
                    vec![cartesian_to_spherical(query)],
                    radius,
                    8,
                    kernel,
                    mode,
                )
                .unwrap(),
            );
            for &i in &out.neighbors[0] {
                prop_assert!(positions[i as usize].distance(query) < radius);
            }
        }
    }

    #[test]
    fn collapse_then_densify_conserves_feature_mass(
        pts in proptest::collection::vec((0.0..8.0f64, 0.0..8.0f64, 0.0..8.0f64), 1..120),
        feats in proptest::collection::vec(0.0..2.0f64, 120),
    ) {
        let positions: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let n = positions.len();
        let features = pointvoxel_core::Matrix::from_vec(n, 1, feats[..n].to_vec()).unwrap();
        let cloud = PointCloud::with_features(positions, features).unwrap();
        let spec = VoxelGridSpec::new(Vec3::ZERO, [1.0, 1.0, 1.0], [8, 8, 8]).unwrap();
        let grid = voxelize(&cloud, &spec, VoxelReducer::Max).unwrap();
        let bev = collapse_height(&grid);
        let map = densify(&bev);
        let sparse: f64 = bev.features().data().iter().sum();
        let dense: f64 = map.data().iter().sum();
        prop_assert!((sparse - dense).abs() < 1e-9);
        prop_assert!(bev.len() <= grid.len());
    }

    #[test]
    fn fps_prefix_property(
        pts in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..40),
        count in 1usize..10,
    ) {
        // every selected point's min distance to earlier selections is the
        // max over the unselected set at that step
        prop_assume!(count <= pts.len());
        let candidates: Vec<Vec3> = pts.iter().map(|&(x, y)| Vec3::new(x, y, 0.0)).collect();
        let scores = vec![1.0; candidates.len()];
        let res = sample(
            &SampleRequest::new(candidates.clone(), scores, count, SampleStrategy::Fps).unwrap(),
        )
        .unwrap();
        for step in 1..res.indices.len() {
            let chosen = res.indices[step];
            let chosen_key: f64 = res.indices[..step]
                .iter()
                .map(|&s| candidates[chosen].distance(candidates[s]))
                .fold(f64::INFINITY, f64::min);
            for i in 0..candidates.len() {
                if res.indices[..step].contains(&i) {
                    continue;
                }
                let key: f64 = res.indices[..step]
                    .iter()
                    .map(|&s| candidates[i].distance(candidates[s]))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(key <= chosen_key + 1e-12);
            }
        }
    }
}
