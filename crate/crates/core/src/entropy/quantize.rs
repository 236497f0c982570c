use crate::error::{dim_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Grid;

/// Integer symbols and the values they dequantize to.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantized<S: Scalar = f32> {
    /// `round(y)` or, with a mean, `round(y − μ)`.
    pub symbols: Vec<i32>,
    /// `symbol` or `symbol + μ`.
    pub values: Grid<S>,
}

/// Rounds half away from zero, optionally around a per-element mean.
pub fn quantize<S: Scalar>(latent: &Grid<S>, mean: Option<&Grid<S>>) -> Result<Quantized<S>> {
    latent.check_finite("latent")?;
    if let Some(m) = mean {
        if m.shape() != latent.shape() {
            return Err(dim_err!("mean {:?} vs latent {:?}", m.shape(), latent.shape()));
        }
        m.check_finite("mean")?;
    }
    let mut symbols = Vec::with_capacity(latent.len());
    for (i, &y) in latent.as_slice().iter().enumerate() {
        let mu = mean.map_or(0.0, |m| m.as_slice()[i].widen());
        let k = (y.widen() - mu).round();
        if k.abs() > i32::MAX as f64 / 2.0 {
            return Err(Error::Numeric(format!("latent value {k} too large to code")));
        }
        symbols.push(k as i32);
    }
    let values = dequantize(&symbols, latent.shape(), mean)?;
    Ok(Quantized { symbols, values })
}

/// Inverse of [`quantize`] given the same mean.
pub fn dequantize<S: Scalar>(
    symbols: &[i32],
    shape: (usize, usize, usize),
    mean: Option<&Grid<S>>,
) -> Result<Grid<S>> {
    let data = match mean {
        Some(m) => {
            if m.shape() != shape {
                return Err(dim_err!("mean {:?} vs symbols {:?}", m.shape(), shape));
            }
            symbols
                .iter()
                .zip(m.as_slice())
                .map(|(&k, &mu)| S::narrow(k as f64 + mu.widen()))
                .collect()
        }
        None => symbols.iter().map(|&k| S::narrow(k as f64)).collect(),
    };
    Grid::new(shape.0, shape.1, shape.2, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f32]) -> Grid<f32> {
        Grid::new(1, 1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn nearest_with_ties_away_from_zero() {
        let q = quantize(&row(&[0.4, -0.4, 1.5, -1.5, 2.5, -0.5]), None).unwrap();
        assert_eq!(q.symbols, vec![0, 0, 2, -2, 3, -1]);
        assert_eq!(q.values.as_slice(), &[0.0, 0.0, 2.0, -2.0, 3.0, -1.0]);
    }

    #[test]
    fn mean_offset() {
        let q = quantize(&row(&[3.2]), Some(&row(&[0.7]))).unwrap();
        assert_eq!(q.symbols, vec![3]);
        assert_eq!(q.values.as_slice(), &[3.7f32]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(quantize(&row(&[f32::INFINITY]), None), Err(Error::Numeric(_))));
        assert!(quantize(&row(&[1.0]), Some(&row(&[1.0, 2.0]))).is_err());
    }
}
