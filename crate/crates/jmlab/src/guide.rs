//! The narrative guide, compiled.
//!
//! Each chapter of `book/` is included as the documentation of an empty
//! module, so `cargo test --doc` builds and runs every code block in the
//! book. A book that cannot drift from the library beats a book that reads
//! well.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/joint-povms.md")]
pub mod joint_povms {}

#[doc = include_str!("../../../book/src/processes.md")]
pub mod processes {}

#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}

#[doc = include_str!("../../../book/src/relations.md")]
pub mod relations {}

#[doc = include_str!("../../../book/src/gallery.md")]
pub mod gallery {}

#[doc = include_str!("../../../book/src/search.md")]
pub mod search {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
