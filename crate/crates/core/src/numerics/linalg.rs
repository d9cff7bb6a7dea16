use nalgebra::DMatrix;

use super::{dot, norm2};

/// Relative threshold below which a Gram-Schmidt residual counts as dependent.
const RANK_RTOL: f64 = 1e-10;

fn subtract_projections(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, bi)| *x -= c * bi);
        }
    }
}

/// Orthonormal basis (as rows) of the span of `vectors`, all of length `n`.
pub fn orthonormal_span(vectors: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| norm2(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    for v in vectors {
        debug_assert_eq!(v.len(), n);
        let mut w = v.clone();
        subtract_projections(&mut w, &basis);
        let nw = norm2(&w);
        if nw > RANK_RTOL * scale {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    basis
}

/// Numerical rank of a set of vectors of length `n`.
pub fn rank(vectors: &[Vec<f64>], n: usize) -> usize {
    orthonormal_span(vectors, n).len()
}

/// Rows form an orthonormal basis of the orthogonal complement of
/// `span(vectors)` in `R^n`; the row count is `n - rank`.
pub fn orthocomplement_basis(vectors: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let span = orthonormal_span(vectors, n);
    let target = n - span.len();
    let mut all = span.clone();
    let mut comp: Vec<Vec<f64>> = Vec::with_capacity(target);
    while comp.len() < target {
        // greedily complete with the unit vector that has the largest residual
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            subtract_projections(&mut e, &all);
            let ne = norm2(&e);
            if best.as_ref().is_none_or(|(b, _)| ne > *b) {
                best = Some((ne, e));
            }
        }
        let (ne, mut e) = best.expect("n > 0 when the complement is nonempty");
        e.iter_mut().for_each(|x| *x /= ne);
        all.push(e.clone());
        comp.push(e);
    }
    DMatrix::from_fn(comp.len(), n, |i, j| comp[i][j])
}
