//! Slice-level kernels shared by the encoders and losses. Matrices are
//! row-major with `cols` columns.

use super::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

/// `y += alpha * x`
pub fn axpy<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// `out = W x`
pub fn gemv<F: Scalar>(w: &[F], cols: usize, x: &[F], out: &mut [F]) {
    debug_assert_eq!(w.len(), cols * out.len());
    debug_assert_eq!(x.len(), cols);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o = dot(row, x);
    }
}

/// `out += W x`
pub fn gemv_acc<F: Scalar>(w: &[F], cols: usize, x: &[F], out: &mut [F]) {
    debug_assert_eq!(w.len(), cols * out.len());
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `dx += Wᵀ dy`
pub fn gemv_t_acc<F: Scalar>(w: &[F], cols: usize, dy: &[F], dx: &mut [F]) {
    debug_assert_eq!(w.len(), cols * dy.len());
    debug_assert_eq!(dx.len(), cols);
    for (g, row) in dy.iter().zip(w.chunks_exact(cols)) {
        if *g != F::zero() {
            axpy(*g, row, dx);
        }
    }
}

/// `dW += dy xᵀ`
pub fn outer_acc<F: Scalar>(dw: &mut [F], dy: &[F], x: &[F]) {
    debug_assert_eq!(dw.len(), dy.len() * x.len());
    for (g, row) in dy.iter().zip(dw.chunks_exact_mut(x.len())) {
        if *g != F::zero() {
            axpy(*g, x, row);
        }
    }
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either side has zero norm.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> F {
    let d = norm(a) * norm(b);
    if d == F::zero() {
        F::zero()
    } else {
        dot(a, b) / d
    }
}
