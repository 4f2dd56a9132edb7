use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::matrix::RealMatrix;

/// Handle to a [`ParamGroup`] inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(pub usize);

/// A named trainable matrix with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGroup {
    pub name: String,
    pub values: RealMatrix,
    pub gradient: RealMatrix,
}

impl ParamGroup {
    pub fn new(name: impl Into<String>, values: RealMatrix) -> Self {
        let gradient = RealMatrix::zeros(values.rows(), values.cols());
        Self {
            name: name.into(),
            values,
            gradient,
        }
    }

    /// SHA-256 over the little-endian value bytes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.values.rows() as u64).to_le_bytes());
        h.update((self.values.cols() as u64).to_le_bytes());
        for v in self.values.data() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Ordered set of uniquely named parameter groups.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    groups: Vec<ParamGroup>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, values: RealMatrix) -> Result<GroupId> {
        let name = name.into();
        if self.find(&name).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter group `{name}`"
            )));
        }
        self.groups.push(ParamGroup::new(name, values));
        Ok(GroupId(self.groups.len() - 1))
    }

    pub fn find(&self, name: &str) -> Option<GroupId> {
        self.groups.iter().position(|g| g.name == name).map(GroupId)
    }

    pub fn id(&self, name: &str) -> Result<GroupId> {
        self.find(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter group `{name}`")))
    }

    #[inline]
    pub fn get(&self, id: GroupId) -> &ParamGroup {
        &self.groups[id.0]
    }

    #[inline]
    pub fn get_mut(&mut self, id: GroupId) -> &mut ParamGroup {
        &mut self.groups[id.0]
    }

    #[inline]
    pub fn values(&self, id: GroupId) -> &RealMatrix {
        &self.groups[id.0].values
    }

    pub fn groups(&self) -> &[ParamGroup] {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut [ParamGroup] {
        &mut self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.groups {
            g.gradient.fill(0.0);
        }
    }

    pub fn num_values(&self) -> usize {
        self.groups.iter().map(|g| g.values.data().len()).sum()
    }

    /// Per-group digests, in insertion order.
    pub fn digests(&self) -> Vec<(String, String)> {
        self.groups
            .iter()
            .map(|g| (g.name.clone(), g.digest()))
            .collect()
    }
}
