//! Compiled companion to the guide in `book/`.
//!
//! Each chapter of the mdbook is included here verbatim as module
//! documentation, so every ```rust code block in the book is built and run
//! by `cargo test -p spinlight-book --doc`. If a snippet in the book rots,
//! this crate's doc-tests fail — the book cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/gaussian-states.md")]
pub mod gaussian_states {}

#[doc = include_str!("../../../book/src/probe-cycle.md")]
pub mod probe_cycle {}

#[doc = include_str!("../../../book/src/continuous-limit.md")]
pub mod continuous_limit {}

#[doc = include_str!("../../../book/src/decoherence.md")]
pub mod decoherence {}

#[doc = include_str!("../../../book/src/entanglement.md")]
pub mod entanglement {}

#[doc = include_str!("../../../book/src/trajectories.md")]
pub mod trajectories {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
