use super::{Grid, MotionField};
use crate::error::{config_err, dim_err, Result};
use crate::scalar::Scalar;

/// Sub-pixel rearrangement: `(c·r² + dy·r + dx, y, x)` → `(c, r·y + dy, r·x + dx)`.
pub fn pixel_shuffle_up<S: Scalar>(input: &Grid<S>, factor: usize) -> Result<Grid<S>> {
    let rr = factor * factor;
    if factor == 0 || !input.channels().is_multiple_of(rr) {
        return Err(config_err!(
            "pixel shuffle by {factor} needs channels divisible by {rr}, got {}",
            input.channels()
        ));
    }
    let (c, h, w) = input.shape();
    let (oc, oh, ow) = (c / rr, h * factor, w * factor);
    let mut out = vec![S::zero(); oc * oh * ow];
    for co in 0..oc {
        for dy in 0..factor {
            for dx in 0..factor {
                let src = input.plane(co * rr + dy * factor + dx);
                for y in 0..h {
                    let row = &mut out[(co * oh + y * factor + dy) * ow..][..ow];
                    for x in 0..w {
                        row[x * factor + dx] = src[y * w + x];
                    }
                }
            }
        }
    }
    Grid::new(oc, oh, ow, out)
}

/// Backward warp: `out(c, y, x) = source(c, y + dy(y, x), x + dx(y, x))`, bilinear
/// interpolation, out-of-range taps replicate the nearest edge sample.
pub fn bilinear_warp<S: Scalar>(source: &Grid<S>, flow: &MotionField<S>) -> Result<Grid<S>> {
    let f = flow.as_grid();
    if !source.same_spatial(f) {
        return Err(config_err!(
            "warp flow {}x{} does not match source {}x{}",
            f.height(),
            f.width(),
            source.height(),
            source.width()
        ));
    }
    let (c, h, w) = source.shape();
    let hw = h * w;
    // Per-pixel taps and weights are shared by all channels.
    let mut taps = Vec::with_capacity(hw);
    let (fy, fx) = (f.plane(0), f.plane(1));
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let sy = y as f64 + fy[i].widen();
            let sx = x as f64 + fx[i].widen();
            let (y0, wy) = split(sy);
            let (x0, wx) = split(sx);
            let ya = clamp_index(y0, h);
            let yb = clamp_index(y0 + 1, h);
            let xa = clamp_index(x0, w);
            let xb = clamp_index(x0 + 1, w);
            taps.push(([ya * w + xa, ya * w + xb, yb * w + xa, yb * w + xb], wy, wx));
        }
    }
    let mut out = vec![S::zero(); c * hw];
    for ch in 0..c {
        let src = source.plane(ch);
        let dst = &mut out[ch * hw..(ch + 1) * hw];
        for (d, &(idx, wy, wx)) in dst.iter_mut().zip(&taps) {
            // lerp form keeps constants exact
            let top = lerp(src[idx[0]].widen(), src[idx[1]].widen(), wx);
            let bottom = lerp(src[idx[2]].widen(), src[idx[3]].widen(), wx);
            *d = S::narrow(lerp(top, bottom, wy));
        }
    }
    Grid::new(c, h, w, out)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

#[inline]
fn split(v: f64) -> (i64, f64) {
    let base = v.floor();
    (base as i64, v - base)
}

#[inline]
fn clamp_index(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// Half-resolution bilinear reduction: each output is the mean of its 2×2 input block.
pub fn bilinear_downsample<S: Scalar>(input: &Grid<S>) -> Result<Grid<S>> {
    let (c, h, w) = input.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(dim_err!("bilinear downsample needs even dims, got {h}x{w}"));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let p = input.plane(ch);
        for y in 0..oh {
            let r0 = &p[2 * y * w..][..w];
            let r1 = &p[(2 * y + 1) * w..][..w];
            for x in 0..ow {
                let s = r0[2 * x].widen() + r0[2 * x + 1].widen() + r1[2 * x].widen() + r1[2 * x + 1].widen();
                out.push(S::narrow(s * 0.25));
            }
        }
    }
    Grid::new(c, oh, ow, out)
}
