use crate::error::{dim_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Grid;

/// Per-scale exponents of the five-scale MS-SSIM.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn check_shapes<S: Scalar>(a: &Grid<S>, b: &Grid<S>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(dim_err!("frames {:?} and {:?} differ", a.shape(), b.shape()));
    }
    Ok(())
}

/// Mean squared error over every channel and pixel.
pub fn mse<S: Scalar>(a: &Grid<S>, b: &Grid<S>) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| {
            let d = x.widen() - y.widen();
            d * d
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// `10·log10(peak² / MSE)`; identical inputs give `+∞`.
pub fn psnr<S: Scalar>(a: &Grid<S>, b: &Grid<S>, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 { f64::INFINITY } else { 10.0 * (peak * peak / m).log10() })
}

/// Scales usable for an image whose smaller side is `side`: each extra scale
/// halves the image and the 11-tap window must still fit with room to spare.
pub fn ms_ssim_scales(side: usize) -> usize {
    (1..=MS_SSIM_WEIGHTS.len())
        .rev()
        .find(|&n| side > (WINDOW - 1) << (n - 1))
        .unwrap_or(0)
}

fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let centre = (WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - centre;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Separable valid-mode Gaussian filter of one plane.
fn filter(plane: &[f64], h: usize, w: usize, win: &[f64; WINDOW]) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h - WINDOW + 1, w - WINDOW + 1);
    let mut rows = vec![0.0; oh * w];
    for y in 0..oh {
        for x in 0..w {
            rows[y * w + x] = (0..WINDOW).map(|k| win[k] * plane[(y + k) * w + x]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|k| win[k] * rows[y * w + x + k]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM and mean contrast-structure term of one plane pair.
fn ssim_cs(a: &[f64], b: &[f64], h: usize, w: usize, win: &[f64; WINDOW]) -> (f64, f64) {
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let sq = |p: &[f64]| p.iter().map(|v| v * v).collect::<Vec<_>>();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let (mu1, oh, ow) = filter(a, h, w, win);
    let (mu2, ..) = filter(b, h, w, win);
    let (e11, ..) = filter(&sq(a), h, w, win);
    let (e22, ..) = filter(&sq(b), h, w, win);
    let (e12, ..) = filter(&ab, h, w, win);
    let n = (oh * ow) as f64;
    let (mut ssim, mut cs) = (0.0, 0.0);
    for i in 0..oh * ow {
        let s11 = e11[i] - mu1[i] * mu1[i];
        let s22 = e22[i] - mu2[i] * mu2[i];
        let s12 = e12[i] - mu1[i] * mu2[i];
        let cs_i = (2.0 * s12 + c2) / (s11 + s22 + c2);
        let lum = (2.0 * mu1[i] * mu2[i] + c1) / (mu1[i] * mu1[i] + mu2[i] * mu2[i] + c1);
        cs += cs_i;
        ssim += lum * cs_i;
    }
    (ssim / n, cs / n)
}

/// 2×2 average pool; odd sides are zero-padded by one on both ends and the
/// padding counts toward the mean.
fn pool(plane: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (py, px) = (h % 2, w % 2);
    let oh = (h + 2 * py - 2) / 2 + 1;
    let ow = (w + 2 * px - 2) / 2 + 1;
    let at = |y: isize, x: isize| {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            plane[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let (y0, x0) = (2 * y as isize - py as isize, 2 * x as isize - px as isize);
            out[y * ow + x] = (at(y0, x0) + at(y0, x0 + 1) + at(y0 + 1, x0) + at(y0 + 1, x0 + 1)) / 4.0;
        }
    }
    (out, oh, ow)
}

/// Multi-scale SSIM for values in `[0, 1]`, averaged over channels.
///
/// Images too small for five scales use as many as fit, with the leading
/// weights renormalized to sum to one.
pub fn ms_ssim<S: Scalar>(a: &Grid<S>, b: &Grid<S>) -> Result<f64> {
    check_shapes(a, b)?;
    let scales = ms_ssim_scales(a.height().min(a.width()));
    if scales == 0 {
        return Err(Error::Eval(format!(
            "{}×{} is too small for an {WINDOW}-tap window",
            a.height(),
            a.width()
        )));
    }
    let weights = &MS_SSIM_WEIGHTS[..scales];
    // The standard weights are used as published (they sum to 1.0001).
    let total: f64 = if scales == MS_SSIM_WEIGHTS.len() { 1.0 } else { weights.iter().sum() };
    let win = gaussian_window();
    let mut sum = 0.0;
    for c in 0..a.channels() {
        let mut pa: Vec<f64> = a.plane(c).iter().map(|v| v.widen()).collect();
        let mut pb: Vec<f64> = b.plane(c).iter().map(|v| v.widen()).collect();
        let (mut h, mut w) = (a.height(), a.width());
        let mut value = 1.0;
        for (s, &wt) in weights.iter().enumerate() {
            let (ssim, cs) = ssim_cs(&pa, &pb, h, w, &win);
            let term = if s + 1 < scales { cs } else { ssim };
            value *= term.max(0.0).powf(wt / total);
            if s + 1 < scales {
                let (na, nh, nw) = pool(&pa, h, w);
                pa = na;
                pb = pool(&pb, h, w).0;
                (h, w) = (nh, nw);
            }
        }
        sum += value;
    }
    Ok(sum / a.channels() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_closed_forms() {
        let a = Grid::<f64>::zeros(1, 2, 2);
        let b = Grid::<f64>::filled(1, 2, 2, 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let c = Grid::<f64>::filled(1, 2, 2, 1.0);
        assert!((psnr(&a, &c, 255.0).unwrap() - 48.130803608679).abs() < 1e-9);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn scale_counts() {
        assert_eq!(ms_ssim_scales(192), 5);
        assert_eq!(ms_ssim_scales(160), 4);
        assert_eq!(ms_ssim_scales(64), 3);
        assert_eq!(ms_ssim_scales(11), 1);
        assert_eq!(ms_ssim_scales(10), 0);
    }

    #[test]
    fn identical_is_one_and_different_is_less() {
        let a = Grid::<f32>::from_fn(3, 64, 64, |c, y, x| ((c * 13 + y * 7 + x * 3) % 17) as f32 / 17.0);
        assert_eq!(ms_ssim(&a, &a).unwrap(), 1.0);
        let b = a.map(|v| (v * 0.9 + 0.03).min(1.0));
        let v = ms_ssim(&a, &b).unwrap();
        assert!(v < 1.0 && v > 0.0);
        assert_eq!(v, ms_ssim(&b, &a).unwrap());
    }

    #[test]
    fn odd_pooling_pads_both_ends() {
        let (p, h, w) = pool(&[1.0, 2.0, 3.0], 1, 3);
        assert_eq!((h, w), (1, 2));
        assert_eq!(p, vec![0.25, 1.25]);
    }
}
