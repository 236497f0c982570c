//! Coarse-to-fine block matching under the sum of absolute differences.
//!
//! The returned field follows the warp convention: pixel `(y, x)` of the
//! current frame is predicted from `reference(y + dy, x + dx)`.

use crate::error::{config_err, dim_err, Result};
use crate::scalar::Scalar;
use crate::tensor::{bilinear_downsample, Grid, MotionField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowConfig {
    pub search_radius: usize,
    pub block: usize,
    pub pyramid_levels: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { search_radius: 4, block: 8, pyramid_levels: 3 }
    }
}

impl FlowConfig {
    /// Largest vector component, in full-resolution pixels, the search can return.
    pub fn max_displacement(&self) -> i64 {
        (self.search_radius << (self.pyramid_levels - 1)) as i64
    }
}

fn sad<S: Scalar>(cur: &Grid<S>, reference: &Grid<S>, by: usize, bx: usize, block: usize, dy: i64, dx: i64) -> f64 {
    let (h, w) = (cur.height() as i64, cur.width() as i64);
    let mut total = 0.0;
    for c in 0..cur.channels() {
        let cp = cur.plane(c);
        let rp = reference.plane(c);
        for y in by..by + block {
            let ry = (y as i64 + dy).clamp(0, h - 1) as usize;
            let crow = &cp[y * w as usize..];
            let rrow = &rp[ry * w as usize..];
            for x in bx..bx + block {
                let rx = (x as i64 + dx).clamp(0, w - 1) as usize;
                total += (crow[x].widen() - rrow[rx].widen()).abs();
            }
        }
    }
    total
}

pub fn estimate_flow<S: Scalar>(current: &Grid<S>, reference: &Grid<S>, config: &FlowConfig) -> Result<MotionField<S>> {
    let FlowConfig { search_radius: r, block, pyramid_levels: levels } = *config;
    if block == 0 || levels == 0 {
        return Err(config_err!("block size and pyramid depth must be positive"));
    }
    if current.shape() != reference.shape() {
        return Err(dim_err!("frames {:?} and {:?} differ", current.shape(), reference.shape()));
    }
    let unit = block << (levels - 1);
    let (h, w) = (current.height(), current.width());
    if h % unit != 0 || w % unit != 0 {
        return Err(dim_err!("{h}×{w} is not a multiple of {unit}; pad the frames first"));
    }

    let mut cur_pyr = vec![current.clone()];
    let mut ref_pyr = vec![reference.clone()];
    for l in 1..levels {
        cur_pyr.push(bilinear_downsample(&cur_pyr[l - 1])?);
        ref_pyr.push(bilinear_downsample(&ref_pyr[l - 1])?);
    }

    // Per-block vectors at the current level, row-major over blocks.
    let mut vectors: Vec<(i64, i64)> = Vec::new();
    let mut prev_cols = 0;
    for l in (0..levels).rev() {
        let (cur, reference) = (&cur_pyr[l], &ref_pyr[l]);
        let rows = cur.height() / block;
        let cols = cur.width() / block;
        let bound = (r << (levels - 1 - l)) as i64;
        let mut next = Vec::with_capacity(rows * cols);
        for br in 0..rows {
            for bc in 0..cols {
                let (py, px) = if vectors.is_empty() {
                    (0, 0)
                } else {
                    let (vy, vx) = vectors[(br / 2) * prev_cols + bc / 2];
                    (2 * vy, 2 * vx)
                };
                let (by, bx) = (br * block, bc * block);
                let ri = r as i64;
                let mut best = (0, 0);
                let mut best_cost = sad(cur, reference, by, bx, block, 0, 0);
                // Windows around zero and around the coarse prediction.
                let centres: &[(i64, i64)] = if (py, px) == (0, 0) { &[(0, 0)] } else { &[(0, 0), (py, px)] };
                for &(cy, cx) in centres {
                    for dy in (cy - ri).max(-bound)..=(cy + ri).min(bound) {
                        for dx in (cx - ri).max(-bound)..=(cx + ri).min(bound) {
                            let cost = sad(cur, reference, by, bx, block, dy, dx);
                            if cost < best_cost {
                                best_cost = cost;
                                best = (dy, dx);
                            }
                        }
                    }
                }
                next.push(best);
            }
        }
        vectors = next;
        prev_cols = cols;
    }

    let mut field = Grid::zeros(2, h, w);
    for y in 0..h {
        for x in 0..w {
            let (dy, dx) = vectors[(y / block) * prev_cols + x / block];
            field.set(0, y, x, S::narrow(dy as f64));
            field.set(1, y, x, S::narrow(dx as f64));
        }
    }
    MotionField::from_grid(field)
}
