use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// Bits per pixel.
    pub rate: f64,
    /// PSNR in dB or MS-SSIM.
    pub quality: f64,
}

/// At least four points with distinct positive rates, sorted by rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

pub const MIN_CURVE_POINTS: usize = 4;

impl RdCurve {
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < MIN_CURVE_POINTS {
            return Err(Error::Eval(format!(
                "a curve needs at least {MIN_CURVE_POINTS} points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !(p.rate > 0.0) || !p.rate.is_finite() || !p.quality.is_finite()) {
            return Err(Error::Eval("curve points need finite quality and positive finite rate".into()));
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        if points.windows(2).any(|w| w[0].rate == w[1].rate) {
            return Err(Error::Eval("curve rates must be distinct".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    /// Reads `rate,quality` CSV with a header line.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let points = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<RdPoint>, _>>()
            .map_err(|e| Error::Format(format!("bad curve CSV: {e}")))?;
        Self::new(points)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    fn quality_range(&self) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.quality), hi.max(p.quality))
        })
    }
}

/// Least-squares cubic `log10(rate) ≈ Σ cₖ·uᵏ` with `u = (quality − centre) / spread`.
fn fit_log_rate(curve: &RdCurve, centre: f64, spread: f64) -> Result<[f64; 4]> {
    let n = curve.points.len();
    let a = DMatrix::from_fn(n, 4, |i, k| ((curve.points[i].quality - centre) / spread).powi(k as i32));
    let b = DVector::from_iterator(n, curve.points.iter().map(|p| p.rate.log10()));
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Eval(format!("cubic fit failed: {e}")))?;
    if svd.rank(1e-12) < 4 {
        return Err(Error::Eval("curve qualities do not determine a cubic".into()));
    }
    Ok([c[0], c[1], c[2], c[3]])
}

fn integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let prim = |u: f64| c[0] * u + c[1] * u * u / 2.0 + c[2] * u.powi(3) / 3.0 + c[3] * u.powi(4) / 4.0;
    prim(hi) - prim(lo)
}

/// Average rate difference of `test` against `anchor` at equal quality, in percent.
pub fn bd_rate(test: &RdCurve, anchor: &RdCurve) -> Result<f64> {
    let (tl, th) = test.quality_range();
    let (al, ah) = anchor.quality_range();
    let (lo, hi) = (tl.max(al), th.min(ah));
    if !(hi > lo) {
        return Err(Error::Eval(format!(
            "quality ranges [{tl}, {th}] and [{al}, {ah}] do not overlap"
        )));
    }
    let centre = 0.5 * (lo + hi);
    let spread = 0.5 * (hi - lo);
    let ct = fit_log_rate(test, centre, spread)?;
    let ca = fit_log_rate(anchor, centre, spread)?;
    let (ul, uh) = ((lo - centre) / spread, (hi - centre) / spread);
    let delta = (integral(&ct, ul, uh) - integral(&ca, ul, uh)) / (uh - ul);
    Ok((10f64.powf(delta) - 1.0) * 100.0)
}
