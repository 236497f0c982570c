use crate::error::{dim_err, Error, Result};
use crate::scalar::Scalar;

/// A `channels × height × width` block of values, channel-major then row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S: Scalar = f32> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<S>,
}

impl<S: Scalar> Grid<S> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<S>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(dim_err!("grid dims must be positive, got {channels}x{height}x{width}"));
        }
        if data.len() != channels * height * width {
            return Err(dim_err!(
                "grid {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            ));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, S::zero())
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: S) -> Self {
        assert!(channels > 0 && height > 0 && width > 0, "grid dims must be positive");
        Self { channels, height, width, data: vec![value; channels * height * width] }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> S,
    ) -> Self {
        assert!(channels > 0 && height > 0 && width > 0, "grid dims must be positive");
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self { channels, height, width, data }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    #[inline]
    fn index(&self, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        (c * self.height + y) * self.width + x
    }
    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> S {
        self.data[self.index(c, y, x)]
    }
    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: S) {
        let i = self.index(c, y, x);
        self.data[i] = v;
    }

    pub fn plane(&self, c: usize) -> &[S] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [S] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_spatial(&self, other: &Grid<impl Scalar>) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Fails with a numeric error if any value is NaN or infinite.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(format!("{what} contains non-finite values")))
        }
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> Grid<T> {
        Grid {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| T::narrow(v.widen())).collect(),
        }
    }

    /// Element-wise sum; shapes must match.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(dim_err!("cannot add {:?} and {:?}", self.shape(), other.shape()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Self { channels: self.channels, height: self.height, width: self.width, data })
    }

    /// Copies channels `start..end` into a new grid.
    pub fn channel_range(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.channels {
            return Err(dim_err!("channel range {start}..{end} out of 0..{}", self.channels));
        }
        let n = self.plane_len();
        Ok(Self {
            channels: end - start,
            height: self.height,
            width: self.width,
            data: self.data[start * n..end * n].to_vec(),
        })
    }

    /// Stacks grids along the channel axis.
    pub fn concat(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| dim_err!("concat of zero grids"))?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::with_capacity(parts.iter().map(|g| g.len()).sum());
        let mut channels = 0;
        for g in parts {
            if g.height != h || g.width != w {
                return Err(dim_err!(
                    "concat spatial mismatch: {}x{} vs {}x{}",
                    g.height,
                    g.width,
                    h,
                    w
                ));
            }
            channels += g.channels;
            data.extend_from_slice(&g.data);
        }
        Ok(Self { channels, height: h, width: w, data })
    }

    /// Bitwise equality, distinguishing signed zeros and NaN payloads.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.widen().to_bits() == b.widen().to_bits())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.widen() - b.widen()).abs())
            .fold(0.0, f64::max)
    }
}

impl Grid<f32> {
    /// Little-endian bytes of every value in storage order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths() {
        assert!(Grid::<f32>::new(2, 2, 2, vec![0.0; 7]).is_err());
        assert!(Grid::<f32>::new(0, 2, 2, vec![]).is_err());
        assert!(Grid::<f32>::new(2, 2, 2, vec![0.0; 8]).is_ok());
    }

    #[test]
    fn indexing_is_channel_major() {
        let g = Grid::<f32>::from_fn(2, 3, 4, |c, y, x| (c * 100 + y * 10 + x) as f32);
        assert_eq!(g.get(1, 2, 3), 123.0);
        assert_eq!(g.as_slice()[12], 100.0);
        assert_eq!(g.plane(1)[0], 100.0);
    }

    #[test]
    fn concat_and_split() {
        let a = Grid::<f32>::filled(1, 2, 2, 1.0);
        let b = Grid::<f32>::filled(2, 2, 2, 2.0);
        let c = Grid::concat(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), (3, 2, 2));
        assert_eq!(c.channel_range(1, 3).unwrap(), b);
        let d = Grid::<f32>::filled(1, 3, 2, 0.0);
        assert!(Grid::concat(&[&a, &d]).is_err());
    }

    #[test]
    fn finiteness_check() {
        let mut g = Grid::<f32>::zeros(1, 1, 2);
        assert!(g.check_finite("g").is_ok());
        g.set(0, 0, 1, f32::NAN);
        assert!(matches!(g.check_finite("g"), Err(Error::Numeric(_))));
    }
}
