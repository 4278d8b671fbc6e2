//! Componentwise cones over finite point sets and box products.
//!
//! `ccone{P} = {q : exists p in P with q_i in cone{p_i} for every i}` picks
//! the scaling per coordinate; `cone{P}` uses one common scaling. On
//! products `P = D_1 x ... x D_n` the componentwise test separates into
//! per-coordinate sign feasibility, while the common-scaling test reduces to
//! intersecting feasible scaling intervals.

use crate::interval::IntervalUnion;

/// `q in ccone{P}` for a finite point set `P`: some `p` matches the sign of
/// `q` in every coordinate (`q_i = 0` is always admissible, `p_i = 0` forces
/// `q_i = 0`).
pub fn ccone_contains_points(points: &[Vec<f64>], q: &[f64], tol: f64) -> bool {
    assert!(!points.is_empty(), "ccone of an empty set");
    points.iter().any(|p| {
        assert_eq!(p.len(), q.len());
        q.iter().zip(p).all(|(qi, pi)| {
            qi.abs() <= tol || (*qi > tol && *pi > tol) || (*qi < -tol && *pi < -tol)
        })
    })
}

/// `q in cone{P}` for a finite point set: some `p` and a single `lambda >= 0`
/// with `q = lambda p`.
pub fn cone_contains_points(points: &[Vec<f64>], q: &[f64], tol: f64) -> bool {
    assert!(!points.is_empty(), "cone of an empty set");
    if q.iter().all(|c| c.abs() <= tol) {
        return true;
    }
    points.iter().any(|p| {
        assert_eq!(p.len(), q.len());
        let (imax, pmax) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("empty point");
        if pmax.abs() <= tol {
            return false; // p ~ 0 generates only 0 and q is not 0
        }
        let lambda = q[imax] / pmax;
        if lambda < -tol {
            return false;
        }
        let lambda = lambda.max(0.0);
        q.iter()
            .zip(p)
            .all(|(qi, pi)| (qi - lambda * pi).abs() <= tol * (1.0 + qi.abs()))
    })
}

/// `q in ccone{D_1 x ... x D_n}`: per coordinate, `q_i = 0` always works and
/// `q_i` of either sign needs the factor to reach into that open half-line.
pub fn ccone_contains_product(parts: &[IntervalUnion], q: &[f64], tol: f64) -> bool {
    assert_eq!(parts.len(), q.len());
    q.iter().zip(parts).all(|(qi, d)| {
        if qi.abs() <= tol {
            true
        } else if *qi > 0.0 {
            d.max() > tol
        } else {
            d.min() < -tol
        }
    })
}

/// `q in cone{D_1 x ... x D_n}`: a single `lambda >= 0` with
/// `q_i / lambda in D_i` for every coordinate. Feasible scalings form a
/// finite union of intervals per coordinate; membership is a nonempty
/// intersection over coordinates.
pub fn cone_contains_product(parts: &[IntervalUnion], q: &[f64], tol: f64) -> bool {
    assert_eq!(parts.len(), q.len());
    if q.iter().all(|c| c.abs() <= tol) {
        return true;
    }
    // feasible lambda > 0 per coordinate, as (lo, hi] intervals with
    // hi = +inf allowed
    let mut feasible: Vec<(f64, f64)> = vec![(0.0, f64::INFINITY)];
    for (qi, d) in q.iter().zip(parts) {
        let mut coord: Vec<(f64, f64)> = Vec::new();
        if qi.abs() <= tol {
            // q_i = 0 under a positive scaling forces p_i = 0
            if d.contains(0.0, tol) {
                coord.push((0.0, f64::INFINITY));
            }
        } else if *qi > 0.0 {
            for part in d.parts() {
                // the sign test uses the raw part so tol cannot manufacture
                // a positive reach out of {0}
                if part.hi > tol {
                    let (a, b) = (part.lo - tol, part.hi + tol);
                    let lo = qi / b;
                    let hi = if a > 0.0 { qi / a } else { f64::INFINITY };
                    coord.push((lo, hi));
                }
            }
        } else {
            for part in d.parts() {
                if part.lo < -tol {
                    let (a, b) = (part.lo - tol, part.hi + tol);
                    let lo = qi / a;
                    let hi = if b < 0.0 { qi / b } else { f64::INFINITY };
                    coord.push((lo, hi));
                }
            }
        }
        if coord.is_empty() {
            return false;
        }
        let mut next = Vec::new();
        for &(flo, fhi) in &feasible {
            for &(clo, chi) in &coord {
                let lo = flo.max(clo);
                let hi = fhi.min(chi);
                if lo <= hi {
                    next.push((lo, hi));
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        feasible = next;
    }
    // a strictly positive scaling must survive
    feasible.iter().any(|&(_, hi)| hi > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;

    fn iu(pairs: &[(f64, f64)]) -> IntervalUnion {
        IntervalUnion::new(pairs.iter().map(|&(a, b)| Interval::new(a, b)).collect())
    }

    #[test]
    fn componentwise_admits_per_coordinate_scaling() {
        let p = vec![vec![2.0, -1.0]];
        assert!(ccone_contains_points(&p, &[1.0, -1.0], 1e-9));
        assert!(!cone_contains_points(&p, &[1.0, -1.0], 1e-9));
    }

    #[test]
    fn zero_is_always_componentwise_member() {
        let p = vec![vec![3.0, -0.5, 0.0]];
        assert!(ccone_contains_points(&p, &[0.0, 0.0, 0.0], 1e-9));
        assert!(cone_contains_points(&p, &[0.0, 0.0, 0.0], 1e-9));
    }

    #[test]
    fn common_scaling_multiple() {
        assert!(cone_contains_points(&[vec![1.0, 2.0]], &[2.0, 4.0], 1e-9));
        assert!(!cone_contains_points(&[vec![1.0, 2.0]], &[2.0, 5.0], 1e-9));
        assert!(!cone_contains_points(&[vec![1.0, 2.0]], &[-1.0, -2.0], 1e-9));
    }

    #[test]
    fn zero_coordinate_pins_member_coordinate() {
        // p2 = 0 forces q2 = 0
        let p = vec![vec![1.0, 0.0]];
        assert!(ccone_contains_points(&p, &[4.0, 0.0], 1e-9));
        assert!(!ccone_contains_points(&p, &[4.0, 0.1], 1e-9));
    }

    #[test]
    fn several_candidates() {
        let p = vec![vec![1.0, 1.0], vec![-1.0, 1.0]];
        assert!(ccone_contains_points(&p, &[-2.0, 3.0], 1e-9));
        assert!(!ccone_contains_points(&p, &[-2.0, -3.0], 1e-9));
        assert!(cone_contains_points(&p, &[-2.0, 2.0], 1e-9));
    }

    #[test]
    fn product_sign_feasibility() {
        let d = vec![iu(&[(-1.0, 1.0)]), iu(&[(2.0, 3.0)])];
        assert!(ccone_contains_product(&d, &[0.0, 5.0], 1e-9));
        assert!(ccone_contains_product(&d, &[-2.0, 1.0], 1e-9));
        assert!(!ccone_contains_product(&d, &[-2.0, -1.0], 1e-9));
    }

    #[test]
    fn product_common_scaling_interval_intersection() {
        let d = vec![iu(&[(1.0, 1.0)]), iu(&[(2.0, 3.0)])];
        // q = (2, 5): lambda = 2 and p = (1, 2.5)
        assert!(cone_contains_product(&d, &[2.0, 5.0], 1e-9));
        // q = (2, 7): lambda = 2 would need p2 = 3.5 outside [2, 3]
        assert!(!cone_contains_product(&d, &[2.0, 7.0], 1e-9));
    }

    #[test]
    fn product_zero_coordinate_needs_zero_in_factor() {
        let d = vec![iu(&[(1.0, 2.0)]), iu(&[(-1.0, 1.0)])];
        assert!(!cone_contains_product(&d, &[0.0, 1.0], 1e-6));
        let d0 = vec![iu(&[(0.0, 2.0)]), iu(&[(-1.0, 1.0)])];
        assert!(cone_contains_product(&d0, &[0.0, 1.0], 1e-9));
    }

    #[test]
    fn product_multi_part_scalings() {
        // D1 = {-1} u {2}: q1 = 4 forces lambda = 2 through the positive part
        let d = vec![iu(&[(-1.0, -1.0), (2.0, 2.0)]), iu(&[(-3.0, -1.0)])];
        assert!(cone_contains_product(&d, &[4.0, -2.0], 1e-9));
        assert!(!cone_contains_product(&d, &[4.0, -8.0], 1e-9));
        assert!(cone_contains_product(&d, &[-1.5, -2.0], 1e-9));
    }

    #[test]
    fn point_products_match_point_sets() {
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![2.0, -1.0], vec![1.0, -1.0]),
            (vec![2.0, -1.0], vec![4.0, -2.0]),
            (vec![1.0, 0.0], vec![0.5, 0.0]),
            (vec![1.0, 3.0], vec![-1.0, -3.0]),
            (vec![0.0, 0.0], vec![0.0, 1.0]),
        ];
        for (p, q) in cases {
            let product: Vec<IntervalUnion> =
                p.iter().map(|&c| IntervalUnion::point(c)).collect();
            assert_eq!(
                ccone_contains_points(&[p.clone()], &q, 1e-9),
                ccone_contains_product(&product, &q, 1e-9),
                "ccone mismatch at p={p:?} q={q:?}"
            );
            assert_eq!(
                cone_contains_points(&[p.clone()], &q, 1e-9),
                cone_contains_product(&product, &q, 1e-9),
                "cone mismatch at p={p:?} q={q:?}"
            );
        }
    }

    #[test]
    fn pair_stacking_preserves_membership() {
        // members of two componentwise cones stack into the product cone
        let p1 = vec![vec![1.0, -2.0]];
        let p2 = vec![vec![3.0]];
        let v1 = [0.5, -7.0];
        let v2 = [0.0];
        assert!(ccone_contains_points(&p1, &v1, 1e-9));
        assert!(ccone_contains_points(&p2, &v2, 1e-9));
        let stacked = vec![vec![1.0, -2.0, 3.0]];
        assert!(ccone_contains_points(&stacked, &[0.5, -7.0, 0.0], 1e-9));
    }
}
