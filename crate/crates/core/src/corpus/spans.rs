use super::Tag;

/// Half-open token range `[start, end)` carrying an entity type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub entity_type: String,
    pub start: usize,
    pub end: usize,
}

impl EntitySpan {
    pub fn new(entity_type: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            entity_type: entity_type.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Maximal B-then-I runs become spans. An `I-X` that does not continue a
/// span of type X starts a new one.
pub fn extract_spans(tags: &[Tag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::Outside => {
                if let Some((ty, start)) = open.take() {
                    spans.push(EntitySpan::new(ty, start, i));
                }
            }
            Tag::Begin(ty) => {
                if let Some((prev, start)) = open.take() {
                    spans.push(EntitySpan::new(prev, start, i));
                }
                open = Some((ty.clone(), i));
            }
            Tag::Inside(ty) => match &open {
                Some((prev, _)) if prev == ty => {}
                _ => {
                    if let Some((prev, start)) = open.take() {
                        spans.push(EntitySpan::new(prev, start, i));
                    }
                    open = Some((ty.clone(), i));
                }
            },
        }
    }
    if let Some((ty, start)) = open {
        spans.push(EntitySpan::new(ty, start, tags.len()));
    }
    spans
}

/// Rewrites every orphan `I-X` to `B-X`. Returns the repaired tags and the
/// number of rewrites.
pub fn repair_bio(tags: &[Tag]) -> (Vec<Tag>, usize) {
    let mut out = Vec::with_capacity(tags.len());
    let mut violations = 0;
    let mut prev: Option<&str> = None;
    for tag in tags {
        match tag {
            Tag::Inside(ty) if prev != Some(ty.as_str()) => {
                violations += 1;
                out.push(Tag::Begin(ty.clone()));
            }
            other => out.push(other.clone()),
        }
        prev = tag.entity_type();
    }
    (out, violations)
}

/// True when no `I-X` appears without a preceding `B-X` or `I-X`.
pub fn is_well_formed(tags: &[Tag]) -> bool {
    repair_bio(tags).1 == 0
}
