//! Sentence embedding storage, the 32x24 grid view, and synthetic providers.

pub mod format;
pub mod grid;
pub mod synthetic;
pub mod table;

pub use format::{read_table, read_table_with_dim, write_sidecar, write_table};
pub use grid::{reshape_to_grid, SentenceGrid, GRID_COLS, GRID_ROWS};
pub use synthetic::{
    embed_all, synthetic_embed, SubspaceMode, SyntheticEmbedderConfig, SUBSPACE_WIDTH,
};
pub use table::{EmbeddingTable, EMBEDDING_DIM};
