use super::kernel::{self, ConvPlan};
use super::Grid;
use crate::error::{config_err, Result};
use crate::scalar::Scalar;

/// Negative-side slope of the leaky activation.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    None,
    Leaky,
}

impl Activation {
    #[inline(always)]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::None => v,
            Activation::Leaky if v < 0.0 => v * LEAKY_SLOPE,
            Activation::Leaky => v,
        }
    }
}

/// A square convolution layer: `(kernel, in, out, stride)` plus weights and bias.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvSpec<S: Scalar = f32> {
    kernel_size: usize,
    in_channels: usize,
    out_channels: usize,
    stride: usize,
    weights: Vec<S>,
    bias: Vec<S>,
    activation: Activation,
}

impl<S: Scalar> ConvSpec<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        weights: Vec<S>,
        bias: Vec<S>,
        activation: Activation,
    ) -> Result<Self> {
        if kernel_size == 0 || kernel_size.is_multiple_of(2) {
            return Err(config_err!("kernel size must be odd and positive, got {kernel_size}"));
        }
        if stride != 1 && stride != 2 {
            return Err(config_err!("stride must be 1 or 2, got {stride}"));
        }
        if in_channels == 0 || out_channels == 0 {
            return Err(config_err!("conv channel counts must be positive"));
        }
        let expected = out_channels * in_channels * kernel_size * kernel_size;
        if weights.len() != expected {
            return Err(config_err!(
                "conv ({kernel_size}, {in_channels}, {out_channels}, {stride}) needs {expected} weights, got {}",
                weights.len()
            ));
        }
        if bias.len() != out_channels {
            return Err(config_err!("conv bias needs {out_channels} values, got {}", bias.len()));
        }
        Ok(Self { kernel_size, in_channels, out_channels, stride, weights, bias, activation })
    }

    pub fn zeros(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        activation: Activation,
    ) -> Result<Self> {
        let n = out_channels * in_channels * kernel_size * kernel_size;
        Self::new(
            kernel_size,
            in_channels,
            out_channels,
            stride,
            vec![S::zero(); n],
            vec![S::zero(); out_channels],
            activation,
        )
    }

    /// `k × k` convolution that copies channel `c` to channel `c` through the kernel centre.
    pub fn identity(channels: usize, kernel_size: usize) -> Result<Self> {
        let mut spec = Self::zeros(kernel_size, channels, channels, 1, Activation::None)?;
        let kk = kernel_size * kernel_size;
        let centre = (kernel_size / 2) * kernel_size + kernel_size / 2;
        for c in 0..channels {
            spec.weights[(c * channels + c) * kk + centre] = S::one();
        }
        Ok(spec)
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }
    pub fn in_channels(&self) -> usize {
        self.in_channels
    }
    pub fn out_channels(&self) -> usize {
        self.out_channels
    }
    pub fn stride(&self) -> usize {
        self.stride
    }
    pub fn activation(&self) -> Activation {
        self.activation
    }
    pub fn weights(&self) -> &[S] {
        &self.weights
    }
    pub fn bias(&self) -> &[S] {
        &self.bias
    }
    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    /// Weight at `[out][in][ky][kx]`.
    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> S {
        let k = self.kernel_size;
        self.weights[((o * self.in_channels + i) * k + ky) * k + kx]
    }

    pub fn padding(&self) -> usize {
        (self.kernel_size - 1) / 2
    }

    pub fn output_dims(&self, height: usize, width: usize) -> (usize, usize) {
        (height.div_ceil(self.stride), width.div_ceil(self.stride))
    }

    pub fn cast<T: Scalar>(&self) -> ConvSpec<T> {
        ConvSpec {
            kernel_size: self.kernel_size,
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            stride: self.stride,
            weights: self.weights.iter().map(|&v| T::narrow(v.widen())).collect(),
            bias: self.bias.iter().map(|&v| T::narrow(v.widen())).collect(),
            activation: self.activation,
        }
    }
}

/// Zero-padded direct convolution; output is `ceil(h/stride) × ceil(w/stride)`.
pub fn conv2d<S: Scalar>(input: &Grid<S>, spec: &ConvSpec<S>) -> Result<Grid<S>> {
    if input.channels() != spec.in_channels {
        return Err(config_err!(
            "conv expects {} input channels, got {}",
            spec.in_channels,
            input.channels()
        ));
    }
    let (h, w) = (input.height(), input.width());
    let k = spec.kernel_size;
    let pad = spec.padding();
    let (oh, ow) = spec.output_dims(h, w);
    let (hp, wp) = (h + 2 * pad, w + 2 * pad);
    let cin = spec.in_channels;

    let mut padded = vec![0.0f64; cin * hp * wp];
    for c in 0..cin {
        let plane = input.plane(c);
        for y in 0..h {
            let dst = &mut padded[(c * hp + y + pad) * wp + pad..][..w];
            for (d, s) in dst.iter_mut().zip(&plane[y * w..(y + 1) * w]) {
                *d = s.widen();
            }
        }
    }

    let mut taps = Vec::with_capacity(cin * k * k);
    let (src, row_step) = if spec.stride == 1 {
        for c in 0..cin {
            for ky in 0..k {
                for kx in 0..k {
                    taps.push((c * hp + ky) * wp + kx);
                }
            }
        }
        (padded, wp)
    } else {
        // Column-gather per kx so that the strided reads become contiguous.
        let s = spec.stride;
        let mut cols = vec![0.0f64; cin * k * hp * ow];
        for c in 0..cin {
            for kx in 0..k {
                for yp in 0..hp {
                    let src_row = &padded[(c * hp + yp) * wp..][..wp];
                    let dst = &mut cols[((c * k + kx) * hp + yp) * ow..][..ow];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        *d = src_row[ox * s + kx];
                    }
                }
            }
        }
        for c in 0..cin {
            for ky in 0..k {
                for kx in 0..k {
                    taps.push(((c * k + kx) * hp + ky) * ow);
                }
            }
        }
        (cols, s * ow)
    };

    let weights: Vec<f64> = spec.weights.iter().map(|v| v.widen()).collect();
    let plan = ConvPlan {
        src: &src,
        taps: &taps,
        row_step,
        out_h: oh,
        out_w: ow,
        out_channels: spec.out_channels,
        weights: &weights,
    };
    let mut sums = vec![0.0f64; spec.out_channels * oh * ow];
    kernel::accumulate(&plan, &mut sums);

    let plane = oh * ow;
    let data = sums
        .iter()
        .enumerate()
        .map(|(i, &acc)| S::narrow(spec.activation.apply(acc + spec.bias[i / plane].widen())))
        .collect();
    Grid::new(spec.out_channels, oh, ow, data)
}
