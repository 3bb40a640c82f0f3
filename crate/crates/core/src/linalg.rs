use nalgebra::DMatrix;

/// Minimum-norm least-squares solution of `a x = b`.
///
/// `a` is reduced to its triangular factor by Householder QR first and the
/// SVD is taken of the small `p x p` factor, which stays accurate when `a`
/// is exactly rank-deficient. Singular values at or below
/// `rel_tol * max_singular_value` are treated as zero. Also returns whether
/// all singular values cleared that threshold.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, bool) {
    let (n, p) = a.shape();
    // Zero rows do not change the problem and make the QR factor square.
    let (a, b) = if n < p {
        (a.clone().resize_vertically(p, 0.0), b.clone().resize_vertically(p, 0.0))
    } else {
        (a.clone(), b.clone())
    };
    let qr = a.qr();
    let r = qr.r();
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let qtb = qtb.rows(0, p).into_owned();
    let svd = r.svd(true, true);
    let max_sv = svd.singular_values.max();
    let cutoff = rel_tol * max_sv;
    let full_rank = max_sv > 0.0 && svd.singular_values.iter().all(|&s| s > cutoff);
    let x = if max_sv == 0.0 {
        DMatrix::zeros(p, qtb.ncols())
    } else {
        svd.solve(&qtb, cutoff).expect("both SVD factors computed")
    };
    (x, full_rank)
}
