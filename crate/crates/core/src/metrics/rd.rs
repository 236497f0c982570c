use crate::error::{Error, Result};

/// `λ·D + (R_v + R_f) / pixels`.
pub fn rd_loss(distortion: f64, mv_bits: f64, content_bits: f64, lambda: f64, pixels: usize) -> f64 {
    lambda * distortion + (mv_bits + content_bits) / pixels as f64
}

/// Mean of the first-`frames` per-frame losses; the list must have exactly that length.
pub fn cascaded_loss(losses: &[f64], frames: usize) -> Result<f64> {
    if frames == 0 || losses.len() != frames {
        return Err(Error::Eval(format!("cascaded loss over {frames} frames given {} losses", losses.len())));
    }
    Ok(losses.iter().sum::<f64>() / frames as f64)
}

pub fn bpp(total_bits: u64, width: usize, height: usize, frames: usize) -> f64 {
    total_bits as f64 / (width * height * frames) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_arithmetic() {
        let pixels = 64 * 64;
        let bits = 0.1 * pixels as f64;
        assert!((rd_loss(0.01, bits, 0.0, 256.0, pixels) - 2.66).abs() < 1e-12);
        assert_eq!(rd_loss(0.0, 0.0, 0.0, 256.0, pixels), 0.0);
        assert_eq!(cascaded_loss(&[1.0, 2.0, 3.0, 4.0], 4).unwrap(), 2.5);
        assert_eq!(cascaded_loss(&[7.0], 1).unwrap(), 7.0);
        assert!(cascaded_loss(&[1.0, 2.0], 4).is_err());
    }

    #[test]
    fn bpp_cases() {
        assert_eq!(bpp(8000, 100, 80, 1), 1.0);
        assert_eq!(bpp(0, 100, 80, 1), 0.0);
        assert_eq!(bpp(8000, 100, 80, 2), 0.5);
    }
}
