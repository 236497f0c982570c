//! Inner loop of the direct convolution.
//!
//! Every output element is the sum over taps in `(in_channel, ky, kx)` order,
//! starting from zero and accumulated with fused multiply-add in `f64`. The
//! tiled paths vectorize across output columns and output channels only, so
//! the per-element operation sequence is the same on every code path and
//! every target: results are bit-identical whichever variant runs.

pub(crate) struct ConvPlan<'a> {
    /// Gathered source values; tap `t` for output `(oy, ox)` lives at
    /// `oy * row_step + taps[t] + ox`.
    pub src: &'a [f64],
    pub taps: &'a [usize],
    pub row_step: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub out_channels: usize,
    /// `[out_channel][tap]`.
    pub weights: &'a [f64],
}

/// Writes the un-biased tap sums into `out` (`[out_channel][oy][ox]`).
pub(crate) fn accumulate(plan: &ConvPlan<'_>, out: &mut [f64]) {
    assert_eq!(out.len(), plan.out_channels * plan.out_h * plan.out_w);
    assert_eq!(plan.weights.len(), plan.out_channels * plan.taps.len());

    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") && std::arch::is_x86_feature_detected!("fma")
        {
            // SAFETY: the required target features were detected at runtime.
            unsafe { accumulate_avx512(plan, out) };
            return;
        }
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: the required target features were detected at runtime.
            unsafe { accumulate_avx2(plan, out) };
            return;
        }
    }
    tiled::<4, 8>(plan, out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,fma")]
unsafe fn accumulate_avx512(plan: &ConvPlan<'_>, out: &mut [f64]) {
    avx512::tiled::<AVX512_CO, AVX512_V>(plan, out)
}

#[cfg(target_arch = "x86_64")]
const AVX512_CO: usize = 8;
#[cfg(target_arch = "x86_64")]
const AVX512_V: usize = 2;

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use super::{single, ConvPlan};
    use std::arch::x86_64::*;

    /// `CO` output channels × `V` vectors of 8 columns, accumulators held in registers.
    #[inline]
    #[target_feature(enable = "avx512f,fma")]
    pub(super) unsafe fn tiled<const CO: usize, const V: usize>(plan: &ConvPlan<'_>, out: &mut [f64]) {
        let x_tile = 8 * V;
        let nt = plan.taps.len();
        let (oh, ow) = (plan.out_h, plan.out_w);
        let hw = oh * ow;
        let blocks = plan.out_channels / CO;
        let src = plan.src;
        let last = src.len();
        // [block][tap][channel]
        let mut packed = vec![0.0f64; blocks * nt * CO];
        for b in 0..blocks {
            for t in 0..nt {
                for c in 0..CO {
                    packed[(b * nt + t) * CO + c] = plan.weights[(b * CO + c) * nt + t];
                }
            }
        }

        for oy in 0..oh {
            let row = oy * plan.row_step;
            for b in 0..blocks {
                let wb = packed.as_ptr().add(b * nt * CO);
                let mut ox = 0;
                while ox + x_tile <= ow {
                    let mut acc = [[_mm512_setzero_pd(); V]; CO];
                    for (t, &off) in plan.taps.iter().enumerate() {
                        let s = row + off + ox;
                        assert!(s + x_tile <= last);
                        let p = src.as_ptr().add(s);
                        let mut inp = [_mm512_setzero_pd(); V];
                        for v in 0..V {
                            inp[v] = _mm512_loadu_pd(p.add(8 * v));
                        }
                        let w = wb.add(t * CO);
                        for c in 0..CO {
                            let wc = _mm512_set1_pd(*w.add(c));
                            for v in 0..V {
                                acc[c][v] = _mm512_fmadd_pd(inp[v], wc, acc[c][v]);
                            }
                        }
                    }
                    for (c, lanes) in acc.iter().enumerate() {
                        let o = (b * CO + c) * hw + oy * ow + ox;
                        assert!(o + x_tile <= out.len());
                        for v in 0..V {
                            _mm512_storeu_pd(out.as_mut_ptr().add(o + 8 * v), lanes[v]);
                        }
                    }
                    ox += x_tile;
                }
                for ox in ox..ow {
                    for c in 0..CO {
                        let co = b * CO + c;
                        out[co * hw + oy * ow + ox] = single(plan, co, row + ox);
                    }
                }
            }
        }
        for co in blocks * CO..plan.out_channels {
            for oy in 0..oh {
                for ox in 0..ow {
                    out[co * hw + oy * ow + ox] = single(plan, co, oy * plan.row_step + ox);
                }
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn accumulate_avx2(plan: &ConvPlan<'_>, out: &mut [f64]) {
    tiled::<4, 8>(plan, out)
}

#[inline(always)]
fn single(plan: &ConvPlan<'_>, co: usize, base: usize) -> f64 {
    let nt = plan.taps.len();
    let w = &plan.weights[co * nt..(co + 1) * nt];
    let mut acc = 0.0f64;
    for (t, &off) in plan.taps.iter().enumerate() {
        acc = plan.src[base + off].mul_add(w[t], acc);
    }
    acc
}

#[inline(always)]
fn tiled<const CO: usize, const X: usize>(plan: &ConvPlan<'_>, out: &mut [f64]) {
    let nt = plan.taps.len();
    let (oh, ow) = (plan.out_h, plan.out_w);
    let hw = oh * ow;
    let blocks = plan.out_channels / CO;
    let mut packed = vec![0.0f64; nt * CO];

    for b in 0..blocks {
        for t in 0..nt {
            for c in 0..CO {
                packed[t * CO + c] = plan.weights[(b * CO + c) * nt + t];
            }
        }
        for oy in 0..oh {
            let row = oy * plan.row_step;
            let mut ox = 0;
            while ox + X <= ow {
                let mut acc = [[0.0f64; X]; CO];
                for (t, &off) in plan.taps.iter().enumerate() {
                    let s = row + off + ox;
                    let inp: &[f64; X] = plan.src[s..s + X].try_into().unwrap();
                    let w: &[f64; CO] = packed[t * CO..t * CO + CO].try_into().unwrap();
                    for c in 0..CO {
                        for x in 0..X {
                            acc[c][x] = inp[x].mul_add(w[c], acc[c][x]);
                        }
                    }
                }
                for (c, lane) in acc.iter().enumerate() {
                    let o = (b * CO + c) * hw + oy * ow + ox;
                    out[o..o + X].copy_from_slice(lane);
                }
                ox += X;
            }
            for ox in ox..ow {
                for c in 0..CO {
                    let co = b * CO + c;
                    out[co * hw + oy * ow + ox] = single(plan, co, row + ox);
                }
            }
        }
    }
    for co in blocks * CO..plan.out_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                out[co * hw + oy * ow + ox] = single(plan, co, oy * plan.row_step + ox);
            }
        }
    }
}
