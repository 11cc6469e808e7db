//! Mining corpora, code and fix patterns, pattern matching and patch
//! generation.
//!
//! The flow for fixed violations is: [`build_fix_candidate`] gathers the
//! facts of one fixed violation, [`filter_fix_corpus`] drops unusable fixes,
//! [`extract_fix_instance`] focuses the fix on the statements it changes and
//! computes its edit script, and [`mine_fix_pattern`] picks the most common
//! abstract script of a cluster. Unfixed violations are located with
//! [`ViolationInstance::locate`], ranked against a pattern library with
//! [`match_fix_patterns`] and patched with [`generate_patch_candidate`].

mod apply;
mod filter;
mod instance;
mod library;
mod mine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::AstError;
use crate::cluster::ClusterError;
use crate::diff::DiffError;
use crate::embed::EmbedError;
use crate::features::FeatureError;

pub use apply::{
    generate_patch_candidate, match_fix_patterns, unify, FeatureSpace, Patch, RankedCandidates,
    RankedPattern,
};
pub use filter::{
    filter_code_corpus, filter_fix_corpus, filter_fix_corpus_ordered, is_test_path, CodeItem,
    FilterConfig, FIX_FILTERS,
};
pub use instance::{
    build_fix_candidate, extract_fix_instance, record_id, FixCandidate, FixInstance,
    ViolationInstance,
};
pub use library::{mine_code_library, mine_fix_library, CodeLibrary, FixLibrary, MiningParams};
pub use mine::{
    abstract_fix, abstract_fragment, fix_form_frequencies, mine_code_pattern, mine_fix_pattern,
    AbstractFix, CodePattern, FixMember, FixPattern,
};

#[derive(Debug, thiserror::Error)]
pub enum PatternError {
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("{0}: source not available")]
    MissingSource(String),
    #[error("{0}: violation is not inside a method")]
    NoMethod(String),
    #[error("{0}: fix leaves the method unchanged")]
    NoChange(String),
    #[error("{0}: fix changes code outside any statement of the method")]
    NonLocal(String),
    #[error("cannot mine a pattern from an empty cluster")]
    EmptyCluster,
    #[error("pattern library is empty")]
    EmptyLibrary,
    #[error("violation has {tokens} tokens, the feature space holds at most {max}")]
    Untokenizable { tokens: usize, max: usize },
    #[error("patch verification failed: {0}")]
    Verification(String),
}

/// One dropped item and the first filter that rejected it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport<T> {
    pub kept: Vec<T>,
    pub excluded: Vec<Exclusion>,
    /// Items rejected by each filter; an item failing several filters is
    /// counted under each of them.
    pub counters: BTreeMap<String, usize>,
}

impl<T> Default for FilterReport<T> {
    fn default() -> Self {
        FilterReport {
            kept: Vec::new(),
            excluded: Vec::new(),
            counters: BTreeMap::new(),
        }
    }
}
