//! One LSTM direction over a padded, time-major batch.
//!
//! Rows of every `(T·B) × dim` matrix are indexed `t * B + b`. Padded
//! positions (mask 0) carry the previous state through unchanged, so a
//! sequence's state never sees its padding in either direction.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct DirCache {
    /// Activated gates `i, f, o, g` per row.
    pub gates: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    /// `tanh` of the unmasked new cell.
    pub tanh_c: Array2<f64>,
    /// Output state per row (held through padding).
    pub h: Array2<f64>,
}

pub struct Shape {
    pub steps: usize,
    pub batch: usize,
}

impl Shape {
    fn time(&self, s: usize, reverse: bool) -> usize {
        if reverse {
            self.steps - 1 - s
        } else {
            s
        }
    }
}

pub fn forward(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    u: ArrayView2<f64>,
    b: &[f64],
    mask: &[f64],
    shape: &Shape,
    reverse: bool,
) -> DirCache {
    let hs = u.ncols();
    let bs = shape.batch;
    let rows = shape.steps * bs;
    let mut pre = Array2::<f64>::zeros((rows, 4 * hs));
    general_mat_mul(1.0, &x, &w.t(), 0.0, &mut pre);
    for mut row in pre.rows_mut() {
        row.iter_mut().zip(b).for_each(|(r, b)| *r += b);
    }
    let mut cache = DirCache {
        gates: Array2::zeros((rows, 4 * hs)),
        h_prev: Array2::zeros((rows, hs)),
        c_prev: Array2::zeros((rows, hs)),
        tanh_c: Array2::zeros((rows, hs)),
        h: Array2::zeros((rows, hs)),
    };
    let mut h = Array2::<f64>::zeros((bs, hs));
    let mut c = Array2::<f64>::zeros((bs, hs));
    let mut z = Array2::<f64>::zeros((bs, 4 * hs));
    for s in 0..shape.steps {
        let t = shape.time(s, reverse);
        let r0 = t * bs;
        cache.h_prev.slice_mut(s![r0..r0 + bs, ..]).assign(&h);
        cache.c_prev.slice_mut(s![r0..r0 + bs, ..]).assign(&c);
        z.assign(&pre.slice(s![r0..r0 + bs, ..]));
        general_mat_mul(1.0, &h, &u.t(), 1.0, &mut z);
        for bi in 0..bs {
            let m = mask[r0 + bi];
            let zr = z.row(bi);
            let zr = zr.as_slice().expect("contiguous");
            let mut gr = cache.gates.row_mut(r0 + bi);
            let gr = gr.as_slice_mut().expect("contiguous");
            let mut tr = cache.tanh_c.row_mut(r0 + bi);
            let tr = tr.as_slice_mut().expect("contiguous");
            let mut hr = h.row_mut(bi);
            let hr = hr.as_slice_mut().expect("contiguous");
            let mut cr = c.row_mut(bi);
            let cr = cr.as_slice_mut().expect("contiguous");
            for j in 0..hs {
                let i = sigmoid(zr[j]);
                let f = sigmoid(zr[hs + j]);
                let o = sigmoid(zr[2 * hs + j]);
                let g = zr[3 * hs + j].tanh();
                let cn = f * cr[j] + i * g;
                let tc = cn.tanh();
                gr[j] = i;
                gr[hs + j] = f;
                gr[2 * hs + j] = o;
                gr[3 * hs + j] = g;
                tr[j] = tc;
                cr[j] = m * cn + (1.0 - m) * cr[j];
                hr[j] = m * o * tc + (1.0 - m) * hr[j];
            }
        }
        cache.h.slice_mut(s![r0..r0 + bs, ..]).assign(&h);
    }
    cache
}

/// Backpropagates `dh` (gradient w.r.t. each row's output state) through
/// the direction; accumulates parameter gradients and returns the gradient
/// w.r.t. the input rows.
#[allow(clippy::too_many_arguments)]
pub fn backward(
    cache: &DirCache,
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    u: ArrayView2<f64>,
    mask: &[f64],
    dh: ArrayView2<f64>,
    shape: &Shape,
    reverse: bool,
    mut gw: ArrayViewMut2<f64>,
    mut gu: ArrayViewMut2<f64>,
    gb: &mut [f64],
) -> Array2<f64> {
    let hs = u.ncols();
    let bs = shape.batch;
    let rows = shape.steps * bs;
    let mut dz = Array2::<f64>::zeros((rows, 4 * hs));
    let mut dh_carry = Array2::<f64>::zeros((bs, hs));
    let mut dc_carry = Array2::<f64>::zeros((bs, hs));
    for s in (0..shape.steps).rev() {
        let t = shape.time(s, reverse);
        let r0 = t * bs;
        for bi in 0..bs {
            let r = r0 + bi;
            let m = mask[r];
            let g = cache.gates.row(r);
            let g = g.as_slice().expect("contiguous");
            let tcr = cache.tanh_c.row(r);
            let tcr = tcr.as_slice().expect("contiguous");
            let cp = cache.c_prev.row(r);
            let cp = cp.as_slice().expect("contiguous");
            let mut dzr = dz.row_mut(r);
            let dzr = dzr.as_slice_mut().expect("contiguous");
            for j in 0..hs {
                let dh_total = dh[[r, j]] + dh_carry[[bi, j]];
                let dc = dc_carry[[bi, j]];
                let (i, f, o, gg) = (g[j], g[hs + j], g[2 * hs + j], g[3 * hs + j]);
                let tc = tcr[j];
                let dht = m * dh_total;
                let dct = m * dc + dht * o * (1.0 - tc * tc);
                dc_carry[[bi, j]] = (1.0 - m) * dc + dct * f;
                dh_carry[[bi, j]] = (1.0 - m) * dh_total;
                dzr[j] = dct * gg * i * (1.0 - i);
                dzr[hs + j] = dct * cp[j] * f * (1.0 - f);
                dzr[2 * hs + j] = dht * tc * o * (1.0 - o);
                dzr[3 * hs + j] = dct * i * (1.0 - gg * gg);
            }
        }
        general_mat_mul(1.0, &dz.slice(s![r0..r0 + bs, ..]), &u, 1.0, &mut dh_carry);
    }
    general_mat_mul(1.0, &dz.t(), &x, 1.0, &mut gw);
    general_mat_mul(1.0, &dz.t(), &cache.h_prev, 1.0, &mut gu);
    for row in dz.rows() {
        gb.iter_mut().zip(row).for_each(|(g, d)| *g += d);
    }
    let mut dx = Array2::<f64>::zeros((rows, x.ncols()));
    general_mat_mul(1.0, &dz, &w, 0.0, &mut dx);
    dx
}
