//! Empty library crate; the interesting content lives under `benches/`.
