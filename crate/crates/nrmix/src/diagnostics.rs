//! Chain diagnostics (to be filled in).
