use crate::error::{dim_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Grid;

/// Smallest Laplace scale any model may use.
pub const SCALE_FLOOR: f64 = 0.11;
/// Lower clamp on coding probabilities (2⁻¹⁶).
pub const P_MIN: f64 = 1.0 / 65536.0;

/// Per-element Laplace location and scale for a latent tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyParameters<S: Scalar = f32> {
    mean: Grid<S>,
    scale: Grid<S>,
}

impl<S: Scalar> EntropyParameters<S> {
    /// Pairs `mean` with `scale`, raising every scale to at least [`SCALE_FLOOR`].
    pub fn new(mean: Grid<S>, scale: Grid<S>) -> Result<Self> {
        if mean.shape() != scale.shape() {
            return Err(dim_err!("mean {:?} and scale {:?} differ", mean.shape(), scale.shape()));
        }
        let floor = S::narrow(SCALE_FLOOR);
        let scale = scale.map(|s| if s.is_nan() || s < floor { floor } else { s });
        Ok(Self { mean, scale })
    }

    pub fn mean(&self) -> &Grid<S> {
        &self.mean
    }
    pub fn scale(&self) -> &Grid<S> {
        &self.scale
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        self.mean.shape()
    }
}

/// Laplace(0, b) mass on `[lo, hi]`, evaluated from whichever tail keeps precision.
pub fn laplace_interval_mass(lo: f64, hi: f64, scale: f64) -> f64 {
    debug_assert!(lo <= hi);
    let tail = |x: f64| 0.5 * libm::exp(-x.abs() / scale);
    if hi <= 0.0 {
        tail(hi) - tail(lo)
    } else if lo >= 0.0 {
        tail(lo) - tail(hi)
    } else {
        1.0 - tail(lo) - tail(hi)
    }
}

/// Lower tail `P(X ≤ x)` of Laplace(0, b).
pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    let t = 0.5 * libm::exp(-x.abs() / scale);
    if x < 0.0 {
        t
    } else {
        1.0 - t
    }
}

/// Unclamped mass of the unit bin centred on `symbol` under Laplace(`mean`, `scale`).
pub fn laplace_bin_mass(symbol: f64, mean: f64, scale: f64) -> f64 {
    let scale = scale.max(SCALE_FLOOR);
    let d = symbol - mean;
    laplace_interval_mass(d - 0.5, d + 0.5, scale)
}

/// Coding probability of `symbol`: the bin mass, floored at [`P_MIN`].
pub fn laplace_bin_probability(symbol: f64, mean: f64, scale: f64) -> f64 {
    laplace_bin_mass(symbol, mean, scale).max(P_MIN)
}

/// Ideal code length of `symbols` under `params`, in bits.
pub fn estimate_rate_bits<S: Scalar>(symbols: &Grid<S>, params: &EntropyParameters<S>) -> Result<f64> {
    if symbols.shape() != params.shape() {
        return Err(dim_err!(
            "symbols {:?} and parameters {:?} differ",
            symbols.shape(),
            params.shape()
        ));
    }
    let bits = symbols
        .as_slice()
        .iter()
        .zip(params.mean.as_slice().iter().zip(params.scale.as_slice()))
        .map(|(&s, (&m, &b))| -laplace_bin_probability(s.widen(), m.widen(), b.widen()).log2())
        .sum();
    Ok(bits)
}
