//! Violation tracking, fix-pattern mining and pattern-based patch generation.

pub mod abstraction;
pub mod ast;
pub mod cluster;
pub mod corpus;
pub mod diff;
pub mod embed;
pub mod features;
pub mod patterns;
pub mod stats;
pub mod tracker;

// The guide's snippets run as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/corpus.md")]
mod book_corpus {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/tracking.md")]
mod book_tracking {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/trees.md")]
mod book_trees {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/edit-scripts.md")]
mod book_edit_scripts {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/features.md")]
mod book_features {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/patterns.md")]
mod book_patterns {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/statistics.md")]
mod book_statistics {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/pipeline.md")]
mod book_pipeline {}
