//! Pixel-level primitives shared by the dataset, masking, and saliency paths.
//!
//! Images are `Array3<f32>` in `(height, width, channels)` layout with values
//! in `[0, 1]`. All resampling is bilinear with pixel-center alignment, so
//! resizing to the same size reproduces the input exactly.

use std::path::Path;

use image::GenericImageView;
use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

pub fn u8_to_unit(v: u8) -> f32 {
    f32::from(v) / 255.0
}

pub fn unit_to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Decodes an image file into an `(H, W, 3)` RGB buffer in `[0, 1]`.
pub fn load_rgb(path: &Path) -> Result<Array3<f32>> {
    let img = image::open(path).map_err(|e| Error::ImageDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = img.dimensions();
    let rgb = img.to_rgb8();
    let mut out = Array3::zeros((h as usize, w as usize, 3));
    for (x, y, p) in rgb.enumerate_pixels() {
        for c in 0..3 {
            out[(y as usize, x as usize, c)] = u8_to_unit(p.0[c]);
        }
    }
    Ok(out)
}

/// Decodes an image file into an `(H, W, 4)` RGBA buffer in `[0, 1]`.
pub fn load_rgba(path: &Path) -> Result<Array3<f32>> {
    let img = image::open(path).map_err(|e| Error::ImageDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = img.dimensions();
    let rgba = img.to_rgba8();
    let mut out = Array3::zeros((h as usize, w as usize, 4));
    for (x, y, p) in rgba.enumerate_pixels() {
        for c in 0..4 {
            out[(y as usize, x as usize, c)] = u8_to_unit(p.0[c]);
        }
    }
    Ok(out)
}

/// Writes a 1-, 3- or 4-channel buffer as a PNG.
pub fn save_png(path: &Path, img: &Array3<f32>) -> Result<()> {
    let (h, w, c) = img.dim();
    let to_io = |e: image::ImageError| Error::ImageDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    match c {
        1 => {
            let buf = image::GrayImage::from_fn(w as u32, h as u32, |x, y| {
                image::Luma([unit_to_u8(img[(y as usize, x as usize, 0)])])
            });
            buf.save_with_format(path, image::ImageFormat::Png)
                .map_err(to_io)
        }
        3 => {
            let buf = image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
                let p = |ch| unit_to_u8(img[(y as usize, x as usize, ch)]);
                image::Rgb([p(0), p(1), p(2)])
            });
            buf.save_with_format(path, image::ImageFormat::Png)
                .map_err(to_io)
        }
        4 => {
            let buf = image::RgbaImage::from_fn(w as u32, h as u32, |x, y| {
                let p = |ch| unit_to_u8(img[(y as usize, x as usize, ch)]);
                image::Rgba([p(0), p(1), p(2), p(3)])
            });
            buf.save_with_format(path, image::ImageFormat::Png)
                .map_err(to_io)
        }
        other => Err(Error::Shape {
            expected: "1, 3 or 4 channels".into(),
            got: format!("{other} channels"),
        }),
    }
}

/// Collapses RGB to a single luma channel; 1-channel inputs pass through.
pub fn to_grayscale(img: &Array3<f32>) -> Array3<f32> {
    let (h, w, c) = img.dim();
    if c == 1 {
        return img.clone();
    }
    let mut out = Array3::zeros((h, w, 1));
    for y in 0..h {
        for x in 0..w {
            let mut v = 0.0;
            for ch in 0..3 {
                v += LUMA_WEIGHTS[ch] * img[(y, x, ch)];
            }
            out[(y, x, 0)] = v;
        }
    }
    out
}

/// Bilinear resize with pixel-center alignment. Same-size calls return a copy
/// with identical values.
pub fn resize_bilinear(img: &Array3<f32>, out_h: usize, out_w: usize) -> Array3<f32> {
    let (h, w, c) = img.dim();
    let mut out = Array3::zeros((out_h, out_w, c));
    let sy = h as f32 / out_h as f32;
    let sx = w as f32 / out_w as f32;
    for oy in 0..out_h {
        let fy = (oy as f32 + 0.5) * sy - 0.5;
        let y0 = fy.floor();
        let ty = fy - y0;
        let y0i = (y0 as isize).clamp(0, h as isize - 1) as usize;
        let y1i = (y0 as isize + 1).clamp(0, h as isize - 1) as usize;
        for ox in 0..out_w {
            let fx = (ox as f32 + 0.5) * sx - 0.5;
            let x0 = fx.floor();
            let tx = fx - x0;
            let x0i = (x0 as isize).clamp(0, w as isize - 1) as usize;
            let x1i = (x0 as isize + 1).clamp(0, w as isize - 1) as usize;
            for ch in 0..c {
                let v00 = img[(y0i, x0i, ch)];
                let v01 = img[(y0i, x1i, ch)];
                let v10 = img[(y1i, x0i, ch)];
                let v11 = img[(y1i, x1i, ch)];
                let top = v00 + (v01 - v00) * tx;
                let bot = v10 + (v11 - v10) * tx;
                out[(oy, ox, ch)] = top + (bot - top) * ty;
            }
        }
    }
    out
}

/// Bilinear upsample of a single-channel map (used for saliency).
pub fn resize_bilinear_2d(map: &Array2<f32>, out_h: usize, out_w: usize) -> Array2<f32> {
    let with_c = map
        .view()
        .insert_axis(ndarray::Axis(2))
        .to_owned();
    let resized = resize_bilinear(&with_c, out_h, out_w);
    resized.index_axis(ndarray::Axis(2), 0).to_owned()
}

/// Samples an RGBA buffer at a fractional position. Positions outside the
/// buffer contribute fully transparent pixels, so warps never invent content.
pub fn sample_rgba_bilinear(img: &Array3<f32>, x: f32, y: f32) -> [f32; 4] {
    let (h, w, _) = img.dim();
    let fetch = |yi: isize, xi: isize| -> [f32; 4] {
        if yi < 0 || xi < 0 || yi >= h as isize || xi >= w as isize {
            [0.0; 4]
        } else {
            let (yi, xi) = (yi as usize, xi as usize);
            [
                img[(yi, xi, 0)],
                img[(yi, xi, 1)],
                img[(yi, xi, 2)],
                img[(yi, xi, 3)],
            ]
        }
    };
    let x0 = x.floor();
    let y0 = y.floor();
    let tx = x - x0;
    let ty = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let mut out = [0.0f32; 4];
    for c in 0..4 {
        let v00 = fetch(y0, x0)[c];
        let v01 = fetch(y0, x0 + 1)[c];
        let v10 = fetch(y0 + 1, x0)[c];
        let v11 = fetch(y0 + 1, x0 + 1)[c];
        let top = v00 + (v01 - v00) * tx;
        let bot = v10 + (v11 - v10) * tx;
        out[c] = top + (bot - top) * ty;
    }
    out
}

/// Jet-style colormap used for heatmap export.
pub fn heat_color(v: f32) -> [f32; 3] {
    let v = v.clamp(0.0, 1.0);
    let r = (1.5 - (4.0 * v - 3.0).abs()).clamp(0.0, 1.0);
    let g = (1.5 - (4.0 * v - 2.0).abs()).clamp(0.0, 1.0);
    let b = (1.5 - (4.0 * v - 1.0).abs()).clamp(0.0, 1.0);
    [r, g, b]
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn same_size_resize_is_identity() {
        let mut img = Array3::zeros((5, 7, 3));
        for (i, v) in img.iter_mut().enumerate() {
            *v = (i as f32 * 0.37).sin().abs();
        }
        let out = resize_bilinear(&img, 5, 7);
        for (a, b) in img.iter().zip(out.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn constant_image_stays_constant_after_resize() {
        let img = Array3::from_elem((8, 8, 1), 0.625f32);
        let out = resize_bilinear(&img, 3, 5);
        for v in out.iter() {
            assert_eq!(*v, 0.625);
        }
    }

    #[test]
    fn grayscale_uses_rec601_weights() {
        let mut img = Array3::zeros((1, 1, 3));
        img[(0, 0, 0)] = 1.0;
        let g = to_grayscale(&img);
        assert_eq!(g[(0, 0, 0)], 0.299);
    }

    #[test]
    fn u8_round_trip_is_exact() {
        for v in 0..=255u8 {
            assert_eq!(unit_to_u8(u8_to_unit(v)), v);
        }
    }

    #[test]
    fn out_of_bounds_samples_are_transparent() {
        let img = Array3::from_elem((4, 4, 4), 1.0f32);
        let s = sample_rgba_bilinear(&img, -5.0, 2.0);
        assert_eq!(s, [0.0; 4]);
    }
}
