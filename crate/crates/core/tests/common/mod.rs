//! Brute-force reference kernels and synthetic inputs shared by the
//! integration tests. Everything here works on plain `f64` vectors and never
//! calls the crate's kernels.

#![allow(dead_code)]

use rand::Rng;
use tcmc::tensor::{Activation, ConvSpec, ResidualBlock};
use tcmc::{Frame, Grid};

/// `channels × height × width` in channel-major order.
#[derive(Clone, Debug)]
pub struct Planes {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub v: Vec<f64>,
}

impl Planes {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w, v: vec![0.0; c * h * w] }
    }
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.v[(c * self.h + y) * self.w + x]
    }
    pub fn set(&mut self, c: usize, y: usize, x: usize, val: f64) {
        self.v[(c * self.h + y) * self.w + x] = val;
    }
    pub fn from_grid<S: tcmc::Scalar>(g: &Grid<S>) -> Self {
        Self { c: g.channels(), h: g.height(), w: g.width(), v: g.as_slice().iter().map(|s| s.widen()).collect() }
    }
    pub fn max_abs_diff<S: tcmc::Scalar>(&self, g: &Grid<S>) -> f64 {
        assert_eq!((self.c, self.h, self.w), g.shape(), "shape mismatch");
        self.v.iter().zip(g.as_slice()).map(|(a, b)| (a - b.widen()).abs()).fold(0.0, f64::max)
    }
}

pub fn random_grid(rng: &mut impl Rng, c: usize, h: usize, w: usize, amp: f32) -> Grid {
    Grid::from_fn(c, h, w, |_, _, _| rng.gen_range(-amp..amp))
}

pub fn random_conv(rng: &mut impl Rng, k: usize, cin: usize, cout: usize, stride: usize, act: Activation) -> ConvSpec {
    let bound = (3.0 / (cin * k * k) as f32).sqrt();
    let w = (0..cout * cin * k * k).map(|_| rng.gen_range(-bound..bound)).collect();
    let b = (0..cout).map(|_| rng.gen_range(-0.2..0.2)).collect();
    ConvSpec::new(k, cin, cout, stride, w, b, act).unwrap()
}

pub fn random_residual(rng: &mut impl Rng, channels: usize, mid: Option<usize>) -> ResidualBlock {
    let m = mid.unwrap_or(channels);
    let c1 = random_conv(rng, 3, channels, m, 1, Activation::Leaky);
    let c2 = random_conv(rng, 3, m, channels, 1, Activation::None);
    match mid {
        Some(_) => ResidualBlock::bottleneck(c1, c2).unwrap(),
        None => ResidualBlock::plain(c1, c2).unwrap(),
    }
}

fn leaky(v: f64) -> f64 {
    if v < 0.0 {
        0.01 * v
    } else {
        v
    }
}

/// Zero-padded convolution summed term by term, with the layer's activation.
pub fn conv(input: &Planes, spec: &ConvSpec) -> Planes {
    conv_with(input, spec, spec.activation())
}

pub fn conv_with(input: &Planes, spec: &ConvSpec, act: Activation) -> Planes {
    let k = spec.kernel_size();
    let s = spec.stride();
    let p = (k / 2) as isize;
    let oh = input.h.div_ceil(s);
    let ow = input.w.div_ceil(s);
    let mut out = Planes::zeros(spec.out_channels(), oh, ow);
    for o in 0..spec.out_channels() {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = spec.bias()[o] as f64;
                for i in 0..spec.in_channels() {
                    for ky in 0..k {
                        for kx in 0..k {
                            let sy = (y * s + ky) as isize - p;
                            let sx = (x * s + kx) as isize - p;
                            if sy < 0 || sx < 0 || sy >= input.h as isize || sx >= input.w as isize {
                                continue;
                            }
                            acc += spec.weight(o, i, ky, kx) as f64 * input.at(i, sy as usize, sx as usize);
                        }
                    }
                }
                let v = match act {
                    Activation::Leaky => leaky(acc),
                    Activation::None => acc,
                };
                out.set(o, y, x, v);
            }
        }
    }
    out
}

pub fn residual(input: &Planes, block: &ResidualBlock) -> Planes {
    let hidden = conv_with(input, block.conv1(), Activation::Leaky);
    let r = conv_with(&hidden, block.conv2(), Activation::None);
    Planes { v: input.v.iter().zip(&r.v).map(|(a, b)| a + b).collect(), ..input.clone() }
}

/// Output pixel `(Y, X)` of channel `c` reads input channel `c·r² + (Y mod r)·r + (X mod r)` at `(Y / r, X / r)`.
pub fn shuffle(input: &Planes, r: usize) -> Planes {
    let mut out = Planes::zeros(input.c / (r * r), input.h * r, input.w * r);
    for c in 0..out.c {
        for y in 0..out.h {
            for x in 0..out.w {
                out.set(c, y, x, input.at(c * r * r + (y % r) * r + x % r, y / r, x / r));
            }
        }
    }
    out
}

pub fn downsample(input: &Planes) -> Planes {
    let mut out = Planes::zeros(input.c, input.h / 2, input.w / 2);
    for c in 0..out.c {
        for y in 0..out.h {
            for x in 0..out.w {
                let sum: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)]
                    .iter()
                    .map(|&(dy, dx)| input.at(c, 2 * y + dy, 2 * x + dx))
                    .sum();
                out.set(c, y, x, sum / 4.0);
            }
        }
    }
    out
}

/// Bilinear sampling of `source` at `(y + flow_y, x + flow_x)`, clamping taps to the border.
pub fn warp(source: &Planes, flow: &Planes) -> Planes {
    let mut out = Planes::zeros(source.c, source.h, source.w);
    let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
    for y in 0..source.h {
        for x in 0..source.w {
            let sy = y as f64 + flow.at(0, y, x);
            let sx = x as f64 + flow.at(1, y, x);
            let (fy, fx) = (sy.floor(), sx.floor());
            let (ay, ax) = (sy - fy, sx - fx);
            let (y0, y1) = (clamp(fy, source.h), clamp(fy + 1.0, source.h));
            let (x0, x1) = (clamp(fx, source.w), clamp(fx + 1.0, source.w));
            for c in 0..source.c {
                let v = (1.0 - ay) * (1.0 - ax) * source.at(c, y0, x0)
                    + (1.0 - ay) * ax * source.at(c, y0, x1)
                    + ay * (1.0 - ax) * source.at(c, y1, x0)
                    + ay * ax * source.at(c, y1, x1);
                out.set(c, y, x, v);
            }
        }
    }
    out
}

pub fn concat(a: &Planes, b: &Planes) -> Planes {
    assert_eq!((a.h, a.w), (b.h, b.w));
    let mut v = a.v.clone();
    v.extend_from_slice(&b.v);
    Planes { c: a.c + b.c, h: a.h, w: a.w, v }
}

pub fn add(a: &Planes, b: &Planes) -> Planes {
    Planes { v: a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect(), ..a.clone() }
}

/// Integer hash mapped to `[0, 1)`; shared with the fixture generator script.
pub fn hash_unit(i: u64, seed: u64) -> f64 {
    let v = (i.wrapping_mul(2654435761) + seed * 40503 + 12345) % (1u64 << 32);
    let v = v.wrapping_mul(2246822519) % (1u64 << 32);
    v as f64 / (1u64 << 32) as f64
}

/// The `(a, b)` pair of the MS-SSIM reference fixture for `seed`.
pub fn ms_ssim_pair(seed: u64, c: usize, h: usize, w: usize) -> (Frame, Frame) {
    let n = c * h * w;
    let strength = 0.1 + 0.15 * (seed % 5) as f64;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for idx in 0..n {
        let (yy, xx) = ((idx / w) % h, idx % w);
        let smooth = ((xx + 2 * yy) % 97) as f64 / 97.0;
        let av = 0.5 * hash_unit(idx as u64, seed) + 0.5 * smooth;
        let bv = (av + strength * (hash_unit(idx as u64, seed + 1000) - 0.5)).clamp(0.0, 1.0);
        a.push(av as f32);
        b.push(bv as f32);
    }
    (Grid::new(c, h, w, a).unwrap(), Grid::new(c, h, w, b).unwrap())
}

/// Three synthetic motion patterns: a panning texture, a drifting blob over a
/// gradient, and a texture that accelerates diagonally.
pub fn synthetic_video(kind: usize, frames: usize, h: usize, w: usize) -> Vec<Frame> {
    (0..frames)
        .map(|t| {
            let t = t as f64;
            Grid::from_fn(3, h, w, |c, y, x| {
                let (yf, xf) = (y as f64, x as f64);
                let v = match kind % 3 {
                    0 => {
                        let sx = xf + 1.5 * t;
                        0.5 + 0.3 * (sx * 0.31 + c as f64).sin() * (yf * 0.23).cos()
                            + 0.1 * hash_unit(((y * 997 + (sx as usize) % w) * 3 + c) as u64, 7)
                    }
                    1 => {
                        let (cy, cx) = (20.0 + 0.8 * t, 18.0 + 1.2 * t);
                        let d2 = (yf - cy).powi(2) + (xf - cx).powi(2);
                        0.2 + 0.5 * (xf + yf) / (h + w) as f64 + 0.4 * (-d2 / 80.0).exp() * (1.0 - 0.3 * c as f64)
                    }
                    _ => {
                        let s = 0.1 * t * t;
                        let (sy, sx) = (yf + s, xf + s);
                        0.5 + 0.25 * ((sy * 0.5).sin() + (sx * 0.37 + c as f64 * 0.7).cos())
                    }
                };
                v.clamp(0.0, 1.0) as f32
            })
        })
        .collect()
}
