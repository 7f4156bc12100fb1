use crate::error::{Error, Result};

pub const GRID_ROWS: usize = 32;
pub const GRID_COLS: usize = 24;

/// A sentence embedding laid out row-major as a 32x24 image.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceGrid {
    data: Vec<f64>,
}

impl SentenceGrid {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * GRID_COLS + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn flatten(self) -> Vec<f64> {
        self.data
    }
}

/// `grid[r][c] == vector[r * 24 + c]`.
pub fn reshape_to_grid(vector: &[f64]) -> Result<SentenceGrid> {
    if vector.len() != GRID_ROWS * GRID_COLS {
        return Err(Error::shape(format!(
            "a {GRID_ROWS}x{GRID_COLS} grid needs {} values, got {}",
            GRID_ROWS * GRID_COLS,
            vector.len()
        )));
    }
    Ok(SentenceGrid {
        data: vector.to_vec(),
    })
}
