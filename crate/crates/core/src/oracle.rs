//! Exact Schmidt decomposition from the reshaped coefficient matrix.
//!
//! The amplitudes are laid out as the `d_a x d_b` matrix `c[a][b]` and
//! decomposed with a one-sided (Hestenes) Jacobi SVD. The sweep order is
//! fixed, so results are deterministic.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{vdot, vnorm, CMatrix};
use crate::statevec::PureState;

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct ExactSchmidt {
    /// Singular values in descending order, `min(d_a, d_b)` of them.
    pub values: Vec<f64>,
    /// `|u_i>_A`, one per singular value.
    #[serde(skip)]
    pub left_vectors: Vec<Vec<Complex64>>,
    /// `|v_i>_B`, one per singular value.
    #[serde(skip)]
    pub right_vectors: Vec<Vec<Complex64>>,
    pub entropy_bits: f64,
}

impl ExactSchmidt {
    pub fn squared(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    /// `sum_i lambda_i |u_i> ⊗ |v_i>` as a state with the original split.
    pub fn reconstruct(&self, n_a: usize) -> crate::Result<PureState> {
        let da = self.left_vectors.first().map_or(0, Vec::len);
        let db = self.right_vectors.first().map_or(0, Vec::len);
        let mut amps = vec![Complex64::new(0.0, 0.0); da * db];
        for ((lam, u), v) in self.values.iter().zip(&self.left_vectors).zip(&self.right_vectors) {
            for (b, vb) in v.iter().enumerate() {
                for (a, ua) in u.iter().enumerate() {
                    amps[a | (b << n_a)] += ua * vb * *lam;
                }
            }
        }
        PureState::from_amplitudes(amps, n_a, true)
    }
}

/// `d_a x d_b` coefficient matrix, row = A index, column = B index.
pub fn coefficient_matrix(state: &PureState) -> CMatrix {
    CMatrix::from_fn(state.dim_a(), state.dim_b(), |a, b| state.coefficient(a, b))
}

/// Thin SVD `m = sum_i s_i u_i w_i^H` for `rows >= cols`.
/// Returns `(s, u, w)` sorted by descending `s`, ties by column index.
fn jacobi_svd_tall(m: &CMatrix) -> (Vec<f64>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let rows = m.rows();
    let cols = m.cols();
    debug_assert!(rows >= cols);
    let mut work: Vec<Vec<Complex64>> = (0..cols).map(|j| m.col(j).to_vec()).collect();
    let mut right: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| {
            let mut v = vec![Complex64::new(0.0, 0.0); cols];
            v[j] = Complex64::new(1.0, 0.0);
            v
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = vnorm(&work[p]).powi(2);
                let beta = vnorm(&work[q]).powi(2);
                let gamma = vdot(&work[p], &work[q]);
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotate in the plane spanned by a_p and e^{-i phi} a_q, where
                // the overlap becomes real.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for vecs in [&mut work, &mut right] {
                    let (lo, hi) = vecs.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let yq = *xq * phase.conj();
                        let np = *xp * c - yq * s;
                        let nq = *xp * s + yq * c;
                        *xp = np;
                        *xq = nq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = work.iter().map(|w| vnorm(w)).enumerate().collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

    let scale = order.first().map_or(0.0, |o| o.1);
    let mut values = Vec::with_capacity(cols);
    let mut left: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    let mut right_sorted = Vec::with_capacity(cols);
    for &(j, s) in &order {
        values.push(s);
        right_sorted.push(right[j].clone());
        if s > 1e-13 * scale.max(f64::MIN_POSITIVE) {
            left.push(work[j].iter().map(|x| x / s).collect());
        } else {
            left.push(complete_basis_vector(&left, rows));
        }
    }
    (values, left, right_sorted)
}

/// A unit vector orthogonal to every vector in `basis` (Gram-Schmidt over
/// the standard basis).
fn complete_basis_vector(basis: &[Vec<Complex64>], dim: usize) -> Vec<Complex64> {
    for k in 0..dim {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[k] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis {
                let ov = vdot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= ov * y;
                }
            }
        }
        let n = vnorm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
    unreachable!("basis already spans the space")
}

/// Exact Schmidt decomposition of `state` across its bipartition.
pub fn exact_schmidt(state: &PureState) -> ExactSchmidt {
    let c = coefficient_matrix(state);
    // c = sum_i s_i u_i w_i^H, so psi = sum_i s_i |u_i> ⊗ |conj(w_i)>.
    let (values, left_vectors, right_vectors) = if c.rows() >= c.cols() {
        let (s, u, w) = jacobi_svd_tall(&c);
        let v = w.into_iter().map(|w| w.into_iter().map(|x| x.conj()).collect()).collect();
        (s, u, v)
    } else {
        // c^H = sum_i s_i u_i w_i^H  =>  c = sum_i s_i w_i u_i^H
        let (s, u, w) = jacobi_svd_tall(&c.adjoint());
        let v = u.into_iter().map(|u| u.into_iter().map(|x| x.conj()).collect()).collect();
        (s, w, v)
    };
    let squared: Vec<f64> = values.iter().map(|v| v * v).collect();
    ExactSchmidt { entropy_bits: von_neumann_bits(&squared), values, left_vectors, right_vectors }
}

/// Von Neumann entropy `-sum_i p_i log2 p_i` of the Schmidt weights `p_i =
/// lambda_i^2`, with `0 log 0 = 0`.
pub fn exact_entropy(state: &PureState) -> f64 {
    exact_schmidt(state).entropy_bits
}

pub fn von_neumann_bits(weights: &[f64]) -> f64 {
    let h: f64 = weights.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    h.max(0.0)
}

/// Rényi entropy of order `q` in bits. `q = 1` is the von Neumann limit and
/// `q = inf` the min-entropy.
pub fn renyi_bits(weights: &[f64], q: f64) -> f64 {
    if (q - 1.0).abs() < 1e-12 {
        return von_neumann_bits(weights);
    }
    if q.is_infinite() {
        let max = weights.iter().cloned().fold(0.0, f64::max);
        return if max > 0.0 { -max.log2() } else { 0.0 };
    }
    let s: f64 = weights.iter().filter(|&&p| p > 0.0).map(|&p| p.powf(q)).sum();
    (s.log2() / (1.0 - q)).max(0.0)
}
