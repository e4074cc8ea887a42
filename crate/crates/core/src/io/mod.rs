//! Text formats shared by simulated, chamber and field data.
//!
//! The column names and manifest keys are documented in `docs/formats.md`
//! and pinned by the golden files under `tests/fixtures`.

mod dump;
mod records;
mod table;

pub use dump::{
    is_dump, read_dump, write_dump, Diagnostic, Dump, Manifest, Strictness, DUMP_VERSION_TAG,
};
pub use records::{read_estimates, write_estimates, write_positions, EstimateRecord};
pub use table::{read_profile_table, write_profile_table, ProfileTable};

/// Shortest decimal form that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
