//! The user guide.
//!
//! Each module embeds one chapter of `book/` so that every code snippet in
//! the guide compiles and runs under `cargo test --doc`.

// Chapters are wired in as the book is written.
