use super::cdf::{build_cdf_table, CdfTable};
use crate::error::{config_err, Result};

/// Fully factorized prior: one static Laplace per channel, shared by every
/// spatial position of that channel.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizedPrior {
    loc: Vec<f32>,
    scale: Vec<f32>,
}

impl FactorizedPrior {
    pub fn new(loc: Vec<f32>, scale: Vec<f32>) -> Result<Self> {
        if loc.len() != scale.len() || loc.is_empty() {
            return Err(config_err!(
                "factorized prior needs matching non-empty loc/scale, got {} and {}",
                loc.len(),
                scale.len()
            ));
        }
        Ok(Self { loc, scale })
    }

    pub fn channels(&self) -> usize {
        self.loc.len()
    }

    pub fn loc(&self, channel: usize) -> f64 {
        self.loc[channel] as f64
    }

    pub fn scale(&self, channel: usize) -> f64 {
        self.scale[channel] as f64
    }

    pub fn table(&self, channel: usize, s_min: i32, s_max: i32) -> Result<CdfTable> {
        build_cdf_table(self.loc(channel), self.scale(channel), s_min, s_max)
    }

    /// One table per channel over a shared symbol range.
    pub fn tables(&self, s_min: i32, s_max: i32) -> Result<Vec<CdfTable>> {
        (0..self.channels()).map(|c| self.table(c, s_min, s_max)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_channel_same_table() {
        let p = FactorizedPrior::new(vec![0.0, 0.5, 0.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.table(1, -5, 5).unwrap(), p.table(1, -5, 5).unwrap());
        assert_eq!(p.table(0, -5, 5).unwrap(), p.table(2, -5, 5).unwrap());
        assert_ne!(p.table(0, -5, 5).unwrap(), p.table(1, -5, 5).unwrap());
        assert!(FactorizedPrior::new(vec![0.0], vec![]).is_err());
    }
}
