use super::laplace::{laplace_interval_mass, SCALE_FLOOR};
use crate::error::{config_err, Error, Result};

pub const PRECISION_BITS: u32 = 16;
/// Total frequency of every table.
pub const TOTAL_FREQ: u32 = 1 << PRECISION_BITS;

/// Integer cumulative frequencies over the symbols `s_min..=s_max`.
///
/// `cdf[i]` is the start of symbol `s_min + i`; `cdf[0] == 0` and the last
/// entry is [`TOTAL_FREQ`]. Every symbol has frequency at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdfTable {
    s_min: i32,
    s_max: i32,
    cdf: Vec<u32>,
}

impl CdfTable {
    /// Builds a table from per-symbol frequencies that already sum to [`TOTAL_FREQ`].
    pub fn from_frequencies(s_min: i32, freqs: &[u32]) -> Result<Self> {
        if freqs.len() < 2 {
            return Err(config_err!("a table needs at least two symbols"));
        }
        if freqs.contains(&0) {
            return Err(config_err!("every symbol needs a non-zero frequency"));
        }
        let mut cdf = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u64;
        cdf.push(0);
        for &f in freqs {
            acc += f as u64;
            if acc > TOTAL_FREQ as u64 {
                break;
            }
            cdf.push(acc as u32);
        }
        if acc != TOTAL_FREQ as u64 {
            return Err(config_err!("frequencies sum to {acc}, expected {TOTAL_FREQ}"));
        }
        Ok(Self { s_min, s_max: s_min + freqs.len() as i32 - 1, cdf })
    }

    /// Uniform table over `s_min..=s_max`; the alphabet size must divide [`TOTAL_FREQ`].
    pub fn uniform(s_min: i32, s_max: i32) -> Result<Self> {
        let n = (s_max - s_min + 1) as u32;
        if n < 2 || !TOTAL_FREQ.is_multiple_of(n) {
            return Err(config_err!("uniform table over {n} symbols does not divide {TOTAL_FREQ}"));
        }
        Self::from_frequencies(s_min, &vec![TOTAL_FREQ / n; n as usize])
    }

    pub fn s_min(&self) -> i32 {
        self.s_min
    }
    pub fn s_max(&self) -> i32 {
        self.s_max
    }
    pub fn len(&self) -> usize {
        self.cdf.len() - 1
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn cdf(&self) -> &[u32] {
        &self.cdf
    }

    pub fn frequency(&self, symbol: i32) -> Option<u32> {
        self.interval(symbol).map(|(_, f)| f)
    }

    /// `(start, frequency)` of `symbol`, if it is in range.
    pub fn interval(&self, symbol: i32) -> Option<(u32, u32)> {
        if symbol < self.s_min || symbol > self.s_max {
            return None;
        }
        let i = (symbol - self.s_min) as usize;
        Some((self.cdf[i], self.cdf[i + 1] - self.cdf[i]))
    }

    /// Symbol whose interval contains `target` (< [`TOTAL_FREQ`]), with its interval.
    pub fn lookup(&self, target: u32) -> (i32, u32, u32) {
        debug_assert!(target < TOTAL_FREQ);
        // first index with cdf[i] > target, minus one
        let i = self.cdf.partition_point(|&c| c <= target) - 1;
        (self.s_min + i as i32, self.cdf[i], self.cdf[i + 1] - self.cdf[i])
    }

    /// Code length of `symbol` under the integerized frequencies, in bits.
    pub fn bits(&self, symbol: i32) -> Option<f64> {
        self.frequency(symbol)
            .map(|f| PRECISION_BITS as f64 - (f as f64).log2())
    }

    /// Checks monotonicity, endpoints and the minimum bin width.
    pub fn validate(&self) -> Result<()> {
        let ok = self.cdf.first() == Some(&0)
            && self.cdf.last() == Some(&TOTAL_FREQ)
            && self.cdf.windows(2).all(|w| w[1] > w[0]);
        if ok {
            Ok(())
        } else {
            Err(Error::Config("malformed cdf table".into()))
        }
    }
}

/// Probabilities of each bin in `s_min..=s_max` under Laplace(`mean`, `scale`), with
/// the two end bins absorbing the tails so that the masses sum to one.
pub fn laplace_table_masses(mean: f64, scale: f64, s_min: i32, s_max: i32) -> Vec<f64> {
    let b = scale.max(SCALE_FLOOR);
    (s_min..=s_max)
        .map(|s| {
            let d = s as f64 - mean;
            let lo = if s == s_min { f64::NEG_INFINITY } else { d - 0.5 };
            let hi = if s == s_max { f64::INFINITY } else { d + 0.5 };
            laplace_interval_mass(lo, hi, b)
        })
        .collect()
}

/// Quantizes a discrete Laplace distribution into a [`CdfTable`] with 16-bit precision.
pub fn build_cdf_table(mean: f64, scale: f64, s_min: i32, s_max: i32) -> Result<CdfTable> {
    if s_min >= s_max {
        return Err(config_err!("empty symbol range [{s_min}, {s_max}]"));
    }
    let n = (s_max as i64 - s_min as i64 + 1) as usize;
    if n > TOTAL_FREQ as usize {
        return Err(config_err!("symbol range of {n} bins exceeds {TOTAL_FREQ}"));
    }
    if !mean.is_finite() || !scale.is_finite() {
        return Err(Error::Numeric(format!("non-finite laplace parameters ({mean}, {scale})")));
    }
    let masses = laplace_table_masses(mean, scale, s_min, s_max);
    Ok(integerize(s_min, &masses))
}

/// Largest-remainder apportionment of `TOTAL_FREQ` with a minimum of one per bin.
pub(crate) fn integerize(s_min: i32, masses: &[f64]) -> CdfTable {
    let total = TOTAL_FREQ as f64;
    let mut freqs = Vec::with_capacity(masses.len());
    let mut rem = Vec::with_capacity(masses.len());
    for &p in masses {
        let raw = p.max(0.0) * total;
        let fl = raw.floor();
        freqs.push((fl as u32).max(1));
        rem.push(raw - fl);
    }
    let assigned: i64 = freqs.iter().map(|&f| f as i64).sum();
    let mut diff = TOTAL_FREQ as i64 - assigned;
    if diff > 0 {
        let mut order: Vec<usize> = (0..freqs.len()).collect();
        order.sort_by(|&a, &b| rem[b].total_cmp(&rem[a]).then(a.cmp(&b)));
        for &i in order.iter().cycle() {
            if diff == 0 {
                break;
            }
            freqs[i] += 1;
            diff -= 1;
        }
    } else if diff < 0 {
        let mut order: Vec<usize> = (0..freqs.len()).collect();
        order.sort_by(|&a, &b| freqs[b].cmp(&freqs[a]).then(a.cmp(&b)));
        while diff < 0 {
            for &i in &order {
                if diff == 0 {
                    break;
                }
                if freqs[i] > 1 {
                    freqs[i] -= 1;
                    diff += 1;
                }
            }
        }
    }
    CdfTable::from_frequencies(s_min, &freqs).expect("apportionment sums to TOTAL_FREQ")
}
