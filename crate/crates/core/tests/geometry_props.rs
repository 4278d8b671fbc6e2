//! Randomized cross-checks for the geometry layer: cone duality against an
//! independent membership oracle, structured tangent formulas against the
//! numeric distance-quotient fallback, and componentwise-cone stacking.

use invar_core::expr::ScalarField;
use invar_core::geometry::{ccone_contains_points, ClosedSetSpec, ConeSpec};
use invar_core::sample::{dot, sup_norm, BoxRegion};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent membership test `v in cone{gens}` by Caratheodory: some
/// subset of at most `dim` generators combines nonnegatively into `v`.
/// Plain least squares per subset; no shared code with the library paths.
fn cone_member_oracle(gens: &[Vec<f64>], v: &[f64], dim: usize) -> bool {
    if sup_norm(v) <= 1e-9 {
        return true;
    }
    if gens.is_empty() {
        return false;
    }
    let m = gens.len();
    assert!(m <= 16, "oracle is for small generator sets");
    for mask in 1u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if size > dim {
            continue;
        }
        let subset: Vec<&Vec<f64>> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| &gens[i]).collect();
        if let Some(lambda) = nonneg_least_squares(&subset, v) {
            // verify the residual in the original space
            let mut err: f64 = 0.0;
            for d in 0..dim {
                let built: f64 = subset.iter().zip(&lambda).map(|(g, l)| g[d] * l).sum();
                err = err.max((built - v[d]).abs());
            }
            if err <= 1e-7 * (1.0 + sup_norm(v)) {
                return true;
            }
        }
    }
    false
}

/// Solve `min |G l - v|` via normal equations and accept only nonnegative
/// solutions. Returns None for singular subsets (covered by smaller ones).
fn nonneg_least_squares(subset: &[&Vec<f64>], v: &[f64]) -> Option<Vec<f64>> {
    let s = subset.len();
    let mut gram = vec![vec![0.0; s + 1]; s];
    for i in 0..s {
        for j in 0..s {
            gram[i][j] = dot(subset[i], subset[j]);
        }
        gram[i][s] = dot(subset[i], v);
    }
    // gaussian elimination with partial pivoting on the augmented system
    for col in 0..s {
        let piv = (col..s).max_by(|&a, &b| gram[a][col].abs().total_cmp(&gram[b][col].abs()))?;
        if gram[piv][col].abs() <= 1e-10 {
            return None;
        }
        gram.swap(col, piv);
        for row in 0..s {
            if row != col {
                let f = gram[row][col] / gram[col][col];
                for c in col..=s {
                    let sub = f * gram[col][c];
                    gram[row][c] -= sub;
                }
            }
        }
    }
    let lambda: Vec<f64> = (0..s).map(|i| gram[i][s] / gram[i][i]).collect();
    if lambda.iter().all(|&l| l >= -1e-9) {
        Some(lambda)
    } else {
        None
    }
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

#[test]
fn polar_generators_characterize_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0usize;
    for trial in 0..100 {
        let dim = 2 + (trial % 2); // 2 or 3
        let count = 2 + trial % 3;
        let gens: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..dim).map(|_| rng.gen_range(-3i32..=3) as f64).collect())
            .filter(|g: &Vec<f64>| sup_norm(g) > 0.0)
            .collect();
        if gens.is_empty() {
            continue;
        }
        let cone = ConeSpec::from_generators(dim, gens.clone());
        let polar_gens = cone.polar().unwrap().compute_generators().unwrap();

        for _ in 0..20 {
            let v = if rng.gen_bool(0.5) {
                // genuine member: random nonnegative combination
                let mut v = vec![0.0; dim];
                for g in &gens {
                    let l: f64 = rng.gen_range(0.0..2.0);
                    for d in 0..dim {
                        v[d] += l * g[d];
                    }
                }
                v
            } else {
                random_vec(&mut rng, dim, 4.0)
            };
            let by_oracle = cone_member_oracle(&gens, &v, dim);
            let worst = polar_gens
                .iter()
                .map(|p| dot(p, &v))
                .fold(f64::NEG_INFINITY, f64::max);
            let scale = 1.0 + sup_norm(&v);
            if worst.abs() <= 1e-6 * scale {
                continue; // boundary case: both answers are tolerance calls
            }
            let by_polar = polar_gens.is_empty() || worst <= 0.0;
            assert_eq!(
                by_oracle, by_polar,
                "membership mismatch: gens {gens:?} v {v:?} worst {worst}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 500, "only {checked} informative membership checks");
}

#[test]
fn double_polar_returns_the_same_cone() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..100 {
        let dim = 2 + (trial % 2);
        let count = 1 + trial % 4;
        let gens: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..dim).map(|_| rng.gen_range(-3i32..=3) as f64).collect())
            .filter(|g: &Vec<f64>| sup_norm(g) > 0.0)
            .collect();
        if gens.is_empty() {
            continue;
        }
        let cone = ConeSpec::from_generators(dim, gens.clone());
        let pp = cone.polar().unwrap().polar().unwrap();
        for g in &gens {
            assert!(
                pp.contains(g, 1e-7).unwrap(),
                "double polar lost {g:?} from {gens:?}"
            );
        }
        for g in pp.generators().unwrap() {
            assert!(
                cone_member_oracle(&gens, g, dim),
                "double polar gained {g:?} beyond {gens:?}"
            );
        }
    }
}

#[test]
fn generator_enumeration_matches_row_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for trial in 0..60 {
        let dim = 2 + (trial % 3); // up to 4
        let rows: Vec<Vec<f64>> = (0..(1 + trial % 4))
            .map(|_| (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect())
            .filter(|r: &Vec<f64>| sup_norm(r) > 0.0)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let cone = ConeSpec::from_rows(dim, rows.clone());
        let gens = cone.compute_generators().unwrap();
        // soundness: every generator satisfies every row
        for g in &gens {
            for r in &rows {
                assert!(dot(r, g) <= 1e-8, "generator {g:?} violates row {r:?}");
            }
        }
        // completeness: random feasible points are combinations of the output
        let mut found = 0;
        for _ in 0..200 {
            let v = random_vec(&mut rng, dim, 2.0);
            if rows.iter().all(|r| dot(r, &v) <= -1e-3) {
                assert!(
                    cone_member_oracle(&gens, &v, dim),
                    "feasible {v:?} missed by generators {gens:?} of rows {rows:?}"
                );
                found += 1;
            }
        }
        let _ = found;
    }
}

fn agreement_sets() -> Vec<ClosedSetSpec> {
    vec![
        ClosedSetSpec::Box(BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0])),
        ClosedSetSpec::polyhedron(vec![vec![1.0, 1.0], vec![-1.0, 0.0]], vec![1.0, 2.0]),
        ClosedSetSpec::PolyhedralCone(ConeSpec::orthant(2)),
        ClosedSetSpec::sublevel_convex(ScalarField::parse("x1^2 + x2^2 - 1", 2, 0).unwrap()),
    ]
}

#[test]
fn structured_tangent_agrees_with_numeric_fallback() {
    let tol = 1e-3;
    let window = BoxRegion::new(vec![-1.5, -1.5], vec![1.5, 1.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut accepted = 0usize;
    let sets = agreement_sets();
    'outer: for round in 0.. {
        if round > 400 {
            panic!("not enough clear-margin triples accepted: {accepted}");
        }
        for set in &sets {
            let mut points = set.boundary_samples(&window, 6, 100 + round).unwrap();
            points.push(match set {
                ClosedSetSpec::Box(_) => vec![0.2, -0.3],
                ClosedSetSpec::Polyhedron { .. } => vec![-0.5, 0.0],
                ClosedSetSpec::PolyhedralCone(_) => vec![0.7, 0.9],
                _ => vec![0.1, 0.2],
            });
            for x in points {
                if !set.contains(&x, 1e-7).unwrap() {
                    continue;
                }
                let v = random_vec(&mut rng, 2, 1.0);
                if sup_norm(&v) < 0.1 {
                    continue;
                }
                if !clear_margin(set, &x, &v) {
                    continue;
                }
                let structured = set.bouligand_contains(&x, &v, tol).unwrap();
                let numeric = set.bouligand_contains_numeric(&x, &v, tol).unwrap();
                assert_eq!(
                    structured, numeric,
                    "tangent disagreement at x {x:?} v {v:?} in {set:?}"
                );
                accepted += 1;
                if accepted >= 200 {
                    break 'outer;
                }
            }
        }
    }
    assert!(accepted >= 200);
}

/// Skip direction queries whose structured decision sits within 0.05 of the
/// active-constraint boundary; both paths are tolerance calls there.
fn clear_margin(set: &ClosedSetSpec, x: &[f64], v: &[f64]) -> bool {
    let margin = 0.05;
    match set {
        ClosedSetSpec::Box(b) => {
            for i in 0..b.dim() {
                if (x[i] - b.hi[i]).abs() <= 1e-7 && v[i].abs() < margin {
                    return false;
                }
                if (x[i] - b.lo[i]).abs() <= 1e-7 && v[i].abs() < margin {
                    return false;
                }
            }
            true
        }
        ClosedSetSpec::Polyhedron { rows, offsets } => rows
            .iter()
            .zip(offsets)
            .all(|(r, b)| (dot(r, x) - b).abs() > 1e-7 || dot(r, v).abs() >= margin),
        ClosedSetSpec::PolyhedralCone(c) => c
            .active_rows_at(x, 1e-7)
            .unwrap()
            .iter()
            .all(|r| dot(r, v).abs() >= margin),
        ClosedSetSpec::SmoothSublevel { psi, .. } => {
            let val = psi.eval_state(x).unwrap();
            if val < -1e-7 {
                return true;
            }
            let g = psi.gradient(x).unwrap();
            dot(&g, v).abs() >= margin
        }
        ClosedSetSpec::Singleton(_) => true,
    }
}

#[test]
fn tangent_membership_is_positively_homogeneous() {
    let window = BoxRegion::new(vec![-1.5, -1.5], vec![1.5, 1.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for set in agreement_sets() {
        for x in set.boundary_samples(&window, 8, 9).unwrap() {
            for _ in 0..10 {
                let v = random_vec(&mut rng, 2, 1.0);
                if !clear_margin(&set, &x, &v) {
                    continue;
                }
                let base = set.bouligand_contains(&x, &v, 1e-6).unwrap();
                for lambda in [0.5, 2.0] {
                    let scaled: Vec<f64> = v.iter().map(|c| c * lambda).collect();
                    assert_eq!(
                        base,
                        set.bouligand_contains(&x, &scaled, 1e-6).unwrap(),
                        "homogeneity broke at {x:?} {v:?} lambda {lambda}"
                    );
                }
            }
        }
    }
}

#[test]
fn interior_points_accept_every_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let interiors: Vec<(ClosedSetSpec, Vec<f64>)> = vec![
        (
            ClosedSetSpec::Box(BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0])),
            vec![0.3, -0.4],
        ),
        (
            ClosedSetSpec::polyhedron(vec![vec![1.0, 1.0]], vec![1.0]),
            vec![-2.0, 0.5],
        ),
        (
            ClosedSetSpec::PolyhedralCone(ConeSpec::orthant(2)),
            vec![0.5, 0.8],
        ),
        (
            ClosedSetSpec::sublevel_convex(ScalarField::parse("x1^2 + x2^2 - 1", 2, 0).unwrap()),
            vec![0.2, 0.1],
        ),
    ];
    for (set, x) in interiors {
        for _ in 0..50 {
            let v = random_vec(&mut rng, 2, 3.0);
            assert!(
                set.bouligand_contains(&x, &v, 1e-9).unwrap(),
                "interior point {x:?} rejected {v:?}"
            );
        }
    }
}

proptest! {
    /// Members of two componentwise cones stack into a member of the
    /// componentwise cone of the concatenated point set.
    #[test]
    fn ccone_members_stack(
        p1 in proptest::collection::vec(-3.0f64..3.0, 1..3),
        p2 in proptest::collection::vec(-3.0f64..3.0, 1..3),
        l1 in proptest::collection::vec(0.0f64..4.0, 3),
        l2 in proptest::collection::vec(0.0f64..4.0, 3),
    ) {
        let v1: Vec<f64> = p1.iter().zip(&l1).map(|(p, l)| p * l).collect();
        let v2: Vec<f64> = p2.iter().zip(&l2).map(|(p, l)| p * l).collect();
        prop_assert!(ccone_contains_points(&[p1.clone()], &v1, 1e-9));
        prop_assert!(ccone_contains_points(&[p2.clone()], &v2, 1e-9));
        let stacked: Vec<f64> = p1.iter().chain(&p2).copied().collect();
        let joined: Vec<f64> = v1.iter().chain(&v2).copied().collect();
        prop_assert!(ccone_contains_points(&[stacked], &joined, 1e-9));
    }

    /// Scaling a componentwise member by any nonnegative factor per
    /// coordinate keeps it a member.
    #[test]
    fn ccone_closed_under_componentwise_scaling(
        p in proptest::collection::vec(-2.0f64..2.0, 2..4),
        l in proptest::collection::vec(0.0f64..3.0, 4),
        extra in proptest::collection::vec(0.0f64..2.0, 4),
    ) {
        let v: Vec<f64> = p.iter().zip(&l).map(|(a, b)| a * b).collect();
        prop_assume!(ccone_contains_points(&[p.clone()], &v, 1e-9));
        let w: Vec<f64> = v.iter().zip(&extra).map(|(a, b)| a * b).collect();
        prop_assert!(ccone_contains_points(&[p], &w, 1e-9));
    }
}
