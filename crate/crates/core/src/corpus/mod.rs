//! BIO corpora, label taxonomies, span extraction, and corpus transforms.

mod conll;
mod spans;
mod taxonomy;
mod transform;

pub use conll::{
    conll_string, parse_conll, parse_conll_str, read_token_sentences, tags, write_conll, Dataset,
    DatasetRole, Sentence, Tag,
};
pub use spans::{extract_spans, is_well_formed, repair_bio, EntitySpan};
pub use taxonomy::{
    conll2003_taxonomy, expand_tag_labels, LabelKind, LabelTaxonomy, TaggingLabel, TaxonomyEntry,
    BEGIN_WORD, INSIDE_WORD, OTHER_NATURAL, OTHER_ORIGINAL,
};
pub use transform::{
    derangement, filter_coarse_type, rename_taxonomy, RenameMode, COARSE_SEPARATOR,
};
