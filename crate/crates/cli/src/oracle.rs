//! Brute-force facial sets of `conv{f(z)}`, independent of the LP route.
//!
//! Every facet of a polytope of dimension `k` is spanned by `k` affinely
//! independent points, so all facets are found by trying the hyperplane
//! through each `k`-subset. The smallest face containing `S` is the
//! intersection of the facets containing `S`.

use nalgebra::DMatrix;

/// Column coordinates in an orthonormal basis of the affine hull.
fn affine_coordinates(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = points[0].len();
    if d == 0 {
        return vec![vec![]; n];
    }
    let diffs = DMatrix::from_fn(d, n, |i, z| points[z][i] - points[0][i]);
    let svd = diffs.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&j| svd.singular_values[j] > 1e-10 * smax.max(1.0)).collect();
    (0..n).map(|z| keep.iter().map(|&j| u.column(j).dot(&diffs.column(z))).collect()).collect()
}

/// The unit normal of the hyperplane through `pts` (k points in `R^k`),
/// if they are affinely independent.
fn normal(pts: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let k = pts.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let m = DMatrix::from_fn(k, k, |i, j| if i + 1 < k { pts[i + 1][j] - pts[0][j] } else { 0.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let s = &svd.singular_values;
    let scale = s.max().max(1.0);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    // rank k-1 exactly: one vanishing singular value
    if s[order[1]] <= 1e-9 * scale {
        return None;
    }
    Some(vt.row(order[0]).iter().copied().collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// All facets of `conv{points}` as sorted index sets.
pub fn facets(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let y = affine_coordinates(points);
    let n = y.len();
    let k = y[0].len();
    if k == 0 {
        return vec![];
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for t in subsets(n, k) {
        let pts: Vec<&Vec<f64>> = t.iter().map(|&z| &y[z]).collect();
        let Some(a) = normal(&pts) else { continue };
        let s: Vec<f64> =
            y.iter().map(|p| a.iter().zip(p.iter().zip(pts[0])).map(|(ai, (x, o))| ai * (x - o)).sum()).collect();
        let tol = 1e-9 * s.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let above = s.iter().all(|&v| v >= -tol);
        let below = s.iter().all(|&v| v <= tol);
        if above || below {
            let face: Vec<usize> = (0..n).filter(|&z| s[z].abs() <= tol).collect();
            if !out.contains(&face) {
                out.push(face);
            }
        }
    }
    out.sort();
    out
}

/// Smallest face of `conv{points}` containing the points indexed by `subset`.
pub fn brute_force_facial_set(points: &[Vec<f64>], subset: &[usize]) -> Vec<usize> {
    let mut face: Vec<usize> = (0..points.len()).collect();
    for g in facets(points) {
        if subset.iter().all(|z| g.contains(z)) {
            face.retain(|z| g.contains(z));
        }
    }
    face
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(rows: &[&[f64]]) -> Vec<Vec<f64>> {
        (0..rows[0].len()).map(|z| rows.iter().map(|r| r[z]).collect()).collect()
    }

    #[test]
    fn square() {
        let p = cols(&[&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0, 0.0, 1.0]]);
        assert_eq!(facets(&p), vec![vec![0, 1], vec![0, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(brute_force_facial_set(&p, &[0]), vec![0]);
        assert_eq!(brute_force_facial_set(&p, &[0, 3]), vec![0, 1, 2, 3]);
        assert_eq!(brute_force_facial_set(&p, &[0, 1]), vec![0, 1]);
    }

    #[test]
    fn segment_with_interior_and_repeated_points() {
        // points 0, 2, 1, 2 on a line embedded in the plane
        let p = cols(&[&[0.0, 2.0, 1.0, 2.0], &[0.0, 4.0, 2.0, 4.0]]);
        assert_eq!(facets(&p), vec![vec![0], vec![1, 3]]);
        assert_eq!(brute_force_facial_set(&p, &[2]), vec![0, 1, 2, 3]);
        assert_eq!(brute_force_facial_set(&p, &[1]), vec![1, 3]);
    }

    #[test]
    fn single_point_hull() {
        let p = cols(&[&[1.0, 1.0, 1.0]]);
        assert!(facets(&p).is_empty());
        assert_eq!(brute_force_facial_set(&p, &[1]), vec![0, 1, 2]);
    }
}
