//! Layer primitives with explicit forward/backward passes.
//!
//! Convolutions are stride-1 with same-padding, lowered to GEMM via im2col.
//! Batch items are processed in parallel; gradient reduction over the batch
//! happens in fixed sample order, so results are bit-deterministic regardless
//! of thread scheduling.

use ndarray::{Array1, Array2, Array3, Array4, ArrayView2, ArrayView3, Axis};
use rayon::prelude::*;

use super::scalar::Scalar;

/// Lowers one `(C, H, W)` sample to a `(C*k*k, H*W)` column matrix.
/// Row order matches a row-major `(O, C, k, k)` kernel flattened per filter.
pub(crate) fn im2col<T: Scalar>(x: &ArrayView3<'_, T>, k: usize) -> Array2<T> {
    let (c, h, w) = x.dim();
    let pad = (k - 1) / 2;
    let mut cols = Array2::zeros((c * k * k, h * w));
    for ch in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                for y in 0..h {
                    let sy = y as isize + ky as isize - pad as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for xx in 0..w {
                        let sx = xx as isize + kx as isize - pad as isize;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        cols[(row, y * w + xx)] = x[(ch, sy as usize, sx as usize)];
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-adds a column-matrix gradient back to `(C, H, W)`.
pub(crate) fn col2im<T: Scalar>(cols: &Array2<T>, c: usize, h: usize, w: usize, k: usize) -> Array3<T> {
    let pad = (k - 1) / 2;
    let mut out = Array3::zeros((c, h, w));
    for ch in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ch * k + ky) * k + kx;
                for y in 0..h {
                    let sy = y as isize + ky as isize - pad as isize;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for xx in 0..w {
                        let sx = xx as isize + kx as isize - pad as isize;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        out[(ch, sy as usize, sx as usize)] =
                            out[(ch, sy as usize, sx as usize)] + cols[(row, y * w + xx)];
                    }
                }
            }
        }
    }
    out
}

/// Same-padding stride-1 convolution over `(N, C, H, W)`, optional fused ReLU.
///
/// `weight` is `(O, C*k*k)`, `bias` is `(O)`.
pub fn conv2d_forward<T: Scalar>(
    x: &Array4<T>,
    weight: &ArrayView2<'_, T>,
    bias: &Array1<T>,
    k: usize,
    relu: bool,
) -> Array4<T> {
    let (n, _c, h, w) = x.dim();
    let o = weight.nrows();
    let per_sample: Vec<Array3<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cols = im2col(&x.index_axis(Axis(0), i), k);
            let mut out = weight.dot(&cols); // (O, H*W)
            for (mut row, &b) in out.axis_iter_mut(Axis(0)).zip(bias.iter()) {
                row.mapv_inplace(|v| {
                    let v = v + b;
                    if relu {
                        v.max(T::zero())
                    } else {
                        v
                    }
                });
            }
            out.into_shape_with_order((o, h, w)).expect("conv output shape")
        })
        .collect();
    let mut y = Array4::zeros((n, o, h, w));
    for (i, s) in per_sample.into_iter().enumerate() {
        y.index_axis_mut(Axis(0), i).assign(&s);
    }
    y
}

pub struct ConvGrads<T> {
    pub dx: Array4<T>,
    pub dweight: Array2<T>,
    pub dbias: Array1<T>,
}

/// Backward pass matching [`conv2d_forward`]. `y` is the forward output
/// (used as the ReLU mask when `relu` is set).
pub fn conv2d_backward<T: Scalar>(
    x: &Array4<T>,
    weight: &ArrayView2<'_, T>,
    y: &Array4<T>,
    dy: &Array4<T>,
    k: usize,
    relu: bool,
) -> ConvGrads<T> {
    let (n, c, h, w) = x.dim();
    let o = weight.nrows();
    let parts: Vec<(Array3<T>, Array2<T>, Array1<T>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dout = dy
                .index_axis(Axis(0), i)
                .to_owned()
                .into_shape_with_order((o, h * w))
                .expect("dy shape");
            if relu {
                let mask = y
                    .index_axis(Axis(0), i)
                    .to_owned()
                    .into_shape_with_order((o, h * w))
                    .expect("y shape");
                ndarray::Zip::from(&mut dout).and(&mask).for_each(|d, &m| {
                    if m <= T::zero() {
                        *d = T::zero();
                    }
                });
            }
            let cols = im2col(&x.index_axis(Axis(0), i), k);
            let dw = dout.dot(&cols.t()); // (O, C*k*k)
            let db = dout.sum_axis(Axis(1));
            let dcols = weight.t().dot(&dout); // (C*k*k, H*W)
            let dx = col2im(&dcols, c, h, w, k);
            (dx, dw, db)
        })
        .collect();

    let mut dx = Array4::zeros((n, c, h, w));
    let mut dweight = Array2::zeros(weight.dim());
    let mut dbias = Array1::zeros(o);
    for (i, (dx_s, dw_s, db_s)) in parts.into_iter().enumerate() {
        dx.index_axis_mut(Axis(0), i).assign(&dx_s);
        dweight += &dw_s;
        dbias += &db_s;
    }
    ConvGrads { dx, dweight, dbias }
}

/// 2x2 max pooling with stride 2. Returns the pooled map and, per output
/// cell, the winning position code `dy*2+dx` for backward routing.
pub fn maxpool2_forward<T: Scalar>(x: &Array4<T>) -> (Array4<T>, Array4<u8>) {
    let (n, c, h, w) = x.dim();
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Array4::zeros((n, c, oh, ow));
    let mut argmax = Array4::zeros((n, c, oh, ow));
    for i in 0..n {
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = x[(i, ch, oy * 2, ox * 2)];
                    let mut code = 0u8;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let v = x[(i, ch, oy * 2 + dy, ox * 2 + dx)];
                            if v > best {
                                best = v;
                                code = (dy * 2 + dx) as u8;
                            }
                        }
                    }
                    y[(i, ch, oy, ox)] = best;
                    argmax[(i, ch, oy, ox)] = code;
                }
            }
        }
    }
    (y, argmax)
}

pub fn maxpool2_backward<T: Scalar>(
    dy: &Array4<T>,
    argmax: &Array4<u8>,
    in_h: usize,
    in_w: usize,
) -> Array4<T> {
    let (n, c, oh, ow) = dy.dim();
    let mut dx = Array4::zeros((n, c, in_h, in_w));
    for i in 0..n {
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let code = argmax[(i, ch, oy, ox)] as usize;
                    let (dy_off, dx_off) = (code / 2, code % 2);
                    dx[(i, ch, oy * 2 + dy_off, ox * 2 + dx_off)] = dy[(i, ch, oy, ox)];
                }
            }
        }
    }
    dx
}

/// Fully-connected layer `y = x W^T + b` over `(N, F)`, optional fused ReLU.
pub fn dense_forward<T: Scalar>(
    x: &Array2<T>,
    weight: &ArrayView2<'_, T>,
    bias: &Array1<T>,
    relu: bool,
) -> Array2<T> {
    let mut y = x.dot(&weight.t());
    for (mut row, _) in y.axis_iter_mut(Axis(0)).zip(0..) {
        row += bias;
    }
    if relu {
        y.mapv_inplace(|v| v.max(T::zero()));
    }
    y
}

pub struct DenseGrads<T> {
    pub dx: Array2<T>,
    pub dweight: Array2<T>,
    pub dbias: Array1<T>,
}

pub fn dense_backward<T: Scalar>(
    x: &Array2<T>,
    weight: &ArrayView2<'_, T>,
    y: &Array2<T>,
    dy: &Array2<T>,
    relu: bool,
) -> DenseGrads<T> {
    let mut dout = dy.clone();
    if relu {
        ndarray::Zip::from(&mut dout).and(y).for_each(|d, &m| {
            if m <= T::zero() {
                *d = T::zero();
            }
        });
    }
    let dweight = dout.t().dot(x);
    let dbias = dout.sum_axis(Axis(0));
    let dx = dout.dot(weight);
    DenseGrads { dx, dweight, dbias }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, Array4};

    fn fill_seq(shape: (usize, usize, usize, usize), scale: f64) -> Array4<f64> {
        let mut a = Array4::zeros(shape);
        for (i, v) in a.iter_mut().enumerate() {
            *v = ((i as f64 * 0.7).sin()) * scale;
        }
        a
    }

    #[test]
    fn conv_identity_kernel_passes_input_through() {
        // single 3x3 filter with a 1 in the center reproduces the input
        let x = fill_seq((2, 1, 4, 4), 1.0);
        let mut w = Array2::zeros((1, 9));
        w[(0, 4)] = 1.0;
        let b = arr1(&[0.0]);
        let y = conv2d_forward(&x, &w.view(), &b, 3, false);
        assert_eq!(x, y);
    }

    #[test]
    fn conv_matches_direct_convolution() {
        // independent direct-summation route
        let x = fill_seq((1, 2, 5, 5), 1.0);
        let mut w4 = ndarray::Array4::zeros((3, 2, 3, 3));
        for (i, v) in w4.iter_mut().enumerate() {
            *v = ((i as f64) * 0.13).cos() * 0.5;
        }
        let b = arr1(&[0.1, -0.2, 0.3]);
        let w2 = w4
            .view()
            .into_shape_with_order((3, 18))
            .unwrap()
            .to_owned();
        let y = conv2d_forward(&x, &w2.view(), &b, 3, false);
        for o in 0..3 {
            for yy in 0..5usize {
                for xx in 0..5usize {
                    let mut acc = b[o];
                    for c in 0..2 {
                        for ky in 0..3usize {
                            for kx in 0..3usize {
                                let sy = yy as isize + ky as isize - 1;
                                let sx = xx as isize + kx as isize - 1;
                                if sy < 0 || sx < 0 || sy >= 5 || sx >= 5 {
                                    continue;
                                }
                                acc += w4[(o, c, ky, kx)] * x[(0, c, sy as usize, sx as usize)];
                            }
                        }
                    }
                    let got = y[(0, o, yy, xx)];
                    assert!((got - acc).abs() < 1e-12, "{got} vs {acc}");
                }
            }
        }
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let x = fill_seq((2, 2, 4, 4), 0.5);
        let mut w = Array2::zeros((3, 18));
        for (i, v) in w.iter_mut().enumerate() {
            *v = ((i as f64) * 0.31).sin() * 0.4;
        }
        let b = arr1(&[0.05, -0.1, 0.2]);

        let loss = |w: &Array2<f64>, b: &Array1<f64>, x: &Array4<f64>| -> f64 {
            let y = conv2d_forward(x, &w.view(), b, 3, true);
            y.iter().map(|v| v * v).sum::<f64>()
        };

        let y = conv2d_forward(&x, &w.view(), &b, 3, true);
        let dy = y.mapv(|v| 2.0 * v);
        let grads = conv2d_backward(&x, &w.view(), &y, &dy, 3, true);

        let h = 1e-6;
        // a few probes of each tensor
        for &(r, c) in &[(0usize, 0usize), (1, 7), (2, 17)] {
            let mut wp = w.clone();
            wp[(r, c)] += h;
            let mut wm = w.clone();
            wm[(r, c)] -= h;
            let fd = (loss(&wp, &b, &x) - loss(&wm, &b, &x)) / (2.0 * h);
            let an = grads.dweight[(r, c)];
            assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "dW {fd} vs {an}");
        }
        for idx in [(0usize, 0usize, 1usize, 2usize), (1, 1, 3, 0)] {
            let mut xp = x.clone();
            xp[idx] += h;
            let mut xm = x.clone();
            xm[idx] -= h;
            let fd = (loss(&w, &b, &xp) - loss(&w, &b, &xm)) / (2.0 * h);
            let an = grads.dx[idx];
            assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "dx {fd} vs {an}");
        }
        for o in 0..3 {
            let mut bp = b.clone();
            bp[o] += h;
            let mut bm = b.clone();
            bm[o] -= h;
            let fd = (loss(&w, &bp, &x) - loss(&w, &bm, &x)) / (2.0 * h);
            let an = grads.dbias[o];
            assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "db {fd} vs {an}");
        }
    }

    #[test]
    fn pooling_halves_and_routes_gradient_to_argmax() {
        let mut x = Array4::zeros((1, 1, 4, 4));
        x[(0, 0, 0, 1)] = 5.0;
        x[(0, 0, 3, 3)] = 2.0;
        let (y, argmax) = maxpool2_forward(&x);
        assert_eq!(y.dim(), (1, 1, 2, 2));
        assert_eq!(y[(0, 0, 0, 0)], 5.0);
        assert_eq!(y[(0, 0, 1, 1)], 2.0);
        let mut dy = Array4::zeros((1, 1, 2, 2));
        dy[(0, 0, 0, 0)] = 1.0;
        dy[(0, 0, 1, 1)] = 3.0;
        let dx = maxpool2_backward(&dy, &argmax, 4, 4);
        assert_eq!(dx[(0, 0, 0, 1)], 1.0);
        assert_eq!(dx[(0, 0, 3, 3)], 3.0);
        assert_eq!(dx.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn dense_matches_manual_matmul_and_gradients() {
        let x = arr2(&[[1.0, 2.0], [0.5, -1.0]]);
        let w = arr2(&[[0.3, -0.2], [0.1, 0.4], [-0.5, 0.6]]);
        let b = arr1(&[0.01, 0.02, 0.03]);
        let y = dense_forward(&x, &w.view(), &b, false);
        assert!((y[(0, 0)] - (1.0 * 0.3 + 2.0 * -0.2 + 0.01)).abs() < 1e-12);
        assert!((y[(1, 2)] - (0.5 * -0.5 + -1.0 * 0.6 + 0.03)).abs() < 1e-12);

        let dy = arr2(&[[1.0, 0.0, -1.0], [0.5, 2.0, 0.0]]);
        let g = dense_backward(&x, &w.view(), &y, &dy, false);
        // dW = dy^T x
        assert!((g.dweight[(0, 0)] - (1.0 * 1.0 + 0.5 * 0.5)).abs() < 1e-12);
        // dx = dy W
        assert!((g.dx[(0, 0)] - (1.0 * 0.3 + 0.0 * 0.1 + -1.0 * -0.5)).abs() < 1e-12);
        assert!((g.dbias[1] - 2.0).abs() < 1e-12);
    }
}
