use super::Grid;
use crate::error::{dim_err, Result};
use crate::scalar::Scalar;

/// Per-pixel displacement in pixels: channel 0 is `dy`, channel 1 is `dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionField<S: Scalar = f32>(Grid<S>);

impl<S: Scalar> MotionField<S> {
    pub fn from_grid(grid: Grid<S>) -> Result<Self> {
        if grid.channels() != 2 {
            return Err(dim_err!("motion field needs 2 channels, got {}", grid.channels()));
        }
        Ok(Self(grid))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(Grid::zeros(2, height, width))
    }

    pub fn constant(height: usize, width: usize, dy: S, dx: S) -> Self {
        Self(Grid::from_fn(2, height, width, |c, _, _| if c == 0 { dy } else { dx }))
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }
    pub fn width(&self) -> usize {
        self.0.width()
    }
    pub fn dy(&self, y: usize, x: usize) -> S {
        self.0.get(0, y, x)
    }
    pub fn dx(&self, y: usize, x: usize) -> S {
        self.0.get(1, y, x)
    }
    pub fn as_grid(&self) -> &Grid<S> {
        &self.0
    }
    pub fn into_grid(self) -> Grid<S> {
        self.0
    }

    /// Largest absolute component over the whole field.
    pub fn max_component(&self) -> f64 {
        self.0.as_slice().iter().map(|v| v.widen().abs()).fold(0.0, f64::max)
    }
}
