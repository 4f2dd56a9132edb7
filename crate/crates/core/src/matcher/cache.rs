use crate::corpus::LabelTaxonomy;
use crate::error::{Error, Result};
use crate::numeric::RealMatrix;

use super::model::ModelState;

/// Label vectors frozen for inference, keyed by taxonomy hash.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelCache {
    pub taxonomy_hash: String,
    pub taxonomy: LabelTaxonomy,
    /// One row per tagging label in canonical order.
    pub matrix: RealMatrix,
    /// Creation metadata as `key = value` pairs.
    pub metadata: Vec<(String, String)>,
}

/// Encodes the model's current label list once. `metadata` is stored
/// verbatim.
pub fn build_label_cache(m: &ModelState, metadata: Vec<(String, String)>) -> Result<LabelCache> {
    let matrix = m.label_matrix()?;
    if matrix.rows() != m.taxonomy.num_tagging_labels() {
        return Err(Error::Taxonomy(format!(
            "{} label rows for {} tagging labels",
            matrix.rows(),
            m.taxonomy.num_tagging_labels()
        )));
    }
    Ok(LabelCache {
        taxonomy_hash: m.taxonomy.hash(),
        taxonomy: m.taxonomy.clone(),
        matrix,
        metadata,
    })
}
