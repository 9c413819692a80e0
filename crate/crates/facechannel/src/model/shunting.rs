//! Shunting inhibition: `S = u / (max(a, eps) + I)`.
//!
//! `u` is the post-ReLU excitatory activation, `I` the post-ReLU inhibitory
//! activation, and `a` a learned passive decay, one scalar per filter shared
//! across all spatial positions. The `max(a, eps)` clamp keeps the divisor
//! strictly positive while `a` itself trains freely.

use ndarray::{Array1, Array4, Axis};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Elementwise shunting division over `(N, C, H, W)` maps; `a` has length `C`.
pub fn shunting_forward<T: Scalar>(
    u: &Array4<T>,
    inhibition: &Array4<T>,
    a: &Array1<T>,
    eps: T,
) -> Result<Array4<T>> {
    if u.dim() != inhibition.dim() {
        return Err(Error::Shape {
            expected: format!("{:?}", u.dim()),
            got: format!("{:?}", inhibition.dim()),
        });
    }
    let channels = u.dim().1;
    if a.len() != channels {
        return Err(Error::Shape {
            expected: format!("decay of length {channels}"),
            got: format!("length {}", a.len()),
        });
    }
    let mut s = Array4::zeros(u.dim());
    for c in 0..channels {
        let decay = a[c].max(eps);
        let u_c = u.index_axis(Axis(1), c);
        let i_c = inhibition.index_axis(Axis(1), c);
        let mut s_c = s.index_axis_mut(Axis(1), c);
        ndarray::Zip::from(&mut s_c)
            .and(&u_c)
            .and(&i_c)
            .for_each(|out, &uv, &iv| {
                *out = uv / (decay + iv);
            });
    }
    Ok(s)
}

pub struct ShuntingGrads<T> {
    pub du: Array4<T>,
    pub dinhibition: Array4<T>,
    /// One entry per filter, summed over batch and spatial positions.
    pub da: Array1<T>,
}

/// Gradients of the shunting division given upstream `ds`.
///
/// With `d = max(a, eps) + I`: `dS/du = 1/d`, `dS/dI = -u/d^2`, and
/// `dS/da = -u/d^2` wherever `a > eps` (zero where the clamp is active).
pub fn shunting_backward<T: Scalar>(
    u: &Array4<T>,
    inhibition: &Array4<T>,
    a: &Array1<T>,
    eps: T,
    ds: &Array4<T>,
) -> ShuntingGrads<T> {
    let channels = u.dim().1;
    let mut du = Array4::zeros(u.dim());
    let mut dinh = Array4::zeros(u.dim());
    let mut da = Array1::zeros(channels);
    for c in 0..channels {
        let decay = a[c].max(eps);
        let clamp_open = a[c] > eps;
        let u_c = u.index_axis(Axis(1), c);
        let i_c = inhibition.index_axis(Axis(1), c);
        let ds_c = ds.index_axis(Axis(1), c);
        let mut du_c = du.index_axis_mut(Axis(1), c);
        let mut dinh_c = dinh.index_axis_mut(Axis(1), c);
        let mut da_c = T::zero();
        ndarray::Zip::from(&mut du_c)
            .and(&mut dinh_c)
            .and(&u_c)
            .and(&i_c)
            .and(&ds_c)
            .for_each(|du_v, dinh_v, &uv, &iv, &dsv| {
                let denom = decay + iv;
                *du_v = dsv / denom;
                let shared = -dsv * uv / (denom * denom);
                *dinh_v = shared;
                if clamp_open {
                    da_c = da_c + shared;
                }
            });
        da[c] = da_c;
    }
    ShuntingGrads {
        du,
        dinhibition: dinh,
        da,
    }
}
