use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    abstract_fix, mine_code_pattern, mine_fix_pattern, CodePattern, FeatureSpace, FixInstance,
    FixMember, FixPattern, PatternError, ViolationInstance,
};
use crate::ast::TokenSequence;
use crate::cluster::{xmeans, XmeansParams};
use crate::embed::EmbedParams;
use crate::features::{CnnConfig, Objective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningParams {
    pub embed: EmbedParams,
    pub cnn: CnnConfig,
    pub xmeans: XmeansParams,
    /// Cluster the items of each violation type separately instead of all
    /// items together.
    pub per_type: bool,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            embed: EmbedParams::default(),
            cnn: CnnConfig::default(),
            xmeans: XmeansParams::default(),
            per_type: true,
        }
    }
}

impl MiningParams {
    /// The configured objective, or autoencoding when the labels cannot
    /// be told apart.
    fn cnn_for(&self, labels: &[String]) -> CnnConfig {
        let distinct: BTreeSet<&String> = labels.iter().collect();
        let mut cnn = self.cnn.clone();
        if distinct.len() < 2 {
            cnn.objective = Objective::Autoencode;
        }
        cnn
    }
}

fn train_space(
    sequences: &[TokenSequence],
    labels: &[String],
    params: &MiningParams,
) -> Result<FeatureSpace, PatternError> {
    FeatureSpace::train(sequences, labels, &params.embed, &params.cnn_for(labels))
}

/// Item indices of each non-empty cluster, per violation type in type
/// order when `params.per_type` is set.
fn cluster(
    features: &[Vec<f64>],
    labels: &[String],
    params: &MiningParams,
) -> Result<Vec<Vec<usize>>, PatternError> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        let key = if params.per_type { l.as_str() } else { "" };
        groups.entry(key).or_default().push(i);
    }
    let mut clusters = Vec::new();
    for items in groups.values() {
        let points: Vec<Vec<f64>> = items.iter().map(|&i| features[i].clone()).collect();
        let model = xmeans(&points, &params.xmeans)?;
        for c in 0..model.k() {
            let members: Vec<usize> = model.members(c).iter().map(|&j| items[j]).collect();
            if !members.is_empty() {
                clusters.push(members);
            }
        }
    }
    Ok(clusters)
}

/// Fix patterns mined from a fix corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FixLibrary {
    /// One pattern per cluster, in cluster order.
    pub patterns: Vec<FixPattern>,
    /// Instance indices of each cluster.
    pub clusters: Vec<Vec<usize>>,
    /// Feature space of buggy code, used to match new violations.
    pub code_space: FeatureSpace,
    /// Feature space of abstract fix tokens, used for clustering.
    pub fix_space: FeatureSpace,
}

/// Learn features of the fixes, cluster them and mine one pattern per
/// cluster. Labels for the feature extractor are the violation types.
/// Features are learned over all instances, whatever `params.per_type` says.
pub fn mine_fix_library(
    instances: &[FixInstance],
    params: &MiningParams,
) -> Result<FixLibrary, PatternError> {
    if instances.is_empty() {
        return Err(PatternError::EmptyCluster);
    }
    let labels: Vec<String> = instances.iter().map(|i| i.violation_type.clone()).collect();
    let fix_tokens: Vec<TokenSequence> =
        instances.iter().map(|i| abstract_fix(i).tokens()).collect();
    let code_tokens: Vec<TokenSequence> = instances.iter().map(|i| i.code_tokens.clone()).collect();
    let fix_space = train_space(&fix_tokens, &labels, params)?;
    let code_space = train_space(&code_tokens, &labels, params)?;
    let patch_features = fix_tokens
        .iter()
        .map(|t| fix_space.features(t))
        .collect::<Result<Vec<_>, _>>()?;
    let code_features = code_tokens
        .iter()
        .map(|t| code_space.features(t))
        .collect::<Result<Vec<_>, _>>()?;
    let clusters = cluster(&patch_features, &labels, params)?;
    let mut patterns = Vec::new();
    for members in &clusters {
        let fm: Vec<FixMember<'_>> = members
            .iter()
            .map(|&i| FixMember {
                instance: &instances[i],
                patch_features: &patch_features[i],
                code_features: &code_features[i],
            })
            .collect();
        patterns.push(mine_fix_pattern(&fm)?);
    }
    Ok(FixLibrary {
        patterns,
        clusters,
        code_space,
        fix_space,
    })
}

/// Code patterns mined from located violations.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeLibrary {
    pub patterns: Vec<CodePattern>,
    pub clusters: Vec<Vec<usize>>,
    pub space: FeatureSpace,
}

pub fn mine_code_library(
    violations: &[ViolationInstance],
    params: &MiningParams,
) -> Result<CodeLibrary, PatternError> {
    if violations.is_empty() {
        return Err(PatternError::EmptyCluster);
    }
    let labels: Vec<String> = violations
        .iter()
        .map(|v| v.record.violation_type.clone())
        .collect();
    let tokens: Vec<TokenSequence> = violations.iter().map(|v| v.tokens.clone()).collect();
    let space = train_space(&tokens, &labels, params)?;
    let features = tokens
        .iter()
        .map(|t| space.features(t))
        .collect::<Result<Vec<_>, _>>()?;
    let clusters = cluster(&features, &labels, params)?;
    let mut patterns = Vec::new();
    for members in &clusters {
        let fragments: Vec<_> = members.iter().map(|&i| violations[i].fragment()).collect();
        patterns.push(mine_code_pattern(&fragments)?);
    }
    Ok(CodeLibrary {
        patterns,
        clusters,
        space,
    })
}
