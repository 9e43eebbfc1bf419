//! Matrix files, column batches, and CSV/SVG output.

mod batches;
mod emit;
mod matrix_file;

pub use batches::{read_batches, BatchSource};
pub use emit::{
    align_signs, compare_modes, emit_comparison, emit_iteration_history, emit_mode_plot,
    emit_modes, emit_singular_values, format_real, read_modes, ModeComparison,
};
pub use matrix_file::{file_len, read_matrix, write_matrix, MatrixFileReader, HEADER_BYTES, MAGIC};
