//! Dense linear algebra: matrices, eigensolvers, least squares, conditioning.

mod eig;
mod eigh;
mod mat;
mod quadrature;
mod solve;
mod svd;

pub use eig::{eig_general, eig_vectors};
pub use eigh::sym_eigh;
pub use mat::{axpy, dot, format_complex, norm, parse_complex, CMat, Mat};
pub use quadrature::gauss_legendre_unit;
pub use solve::{cholesky, cholesky_solve, lstsq, lstsq_rank, lu_solve, ridge_solve};
pub use svd::{cond2, cond2_complex, singular_values, svd};

/// Project onto the Euclidean ball of radius `d`.
pub fn project_fro_ball(theta: &mut [f64], d: f64) {
    let n = norm(theta);
    if n > d && n > 0.0 {
        let s = d / n;
        for x in theta.iter_mut() {
            *x *= s;
        }
    }
}
