//! Corpus records, manifest entries and query objects.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;

/// Whether an image is searched or used to build a null distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Role {
    Target,
    Reference,
}

/// Ground truth: does the image contain the query object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Positive,
    Negative,
    Unknown,
}

impl Label {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Label::Positive => Some(true),
            Label::Negative => Some(false),
            Label::Unknown => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Target => "target",
            Role::Reference => "reference",
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Unknown => "unknown",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "target" => Ok(Role::Target),
            "reference" => Ok(Role::Reference),
            other => Err(alloc::format!("unknown role {other:?}")),
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            "unknown" => Ok(Label::Unknown),
            other => Err(alloc::format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub role: Role,
    pub label: Label,
}

/// Validated list of corpus entries, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Checks id uniqueness and that at least one target is present.
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateId(dup[0].into()));
        }
        if !entries.iter().any(|e| e.role == Role::Target) {
            return Err(Error::NoTargets);
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn targets(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Target)
    }

    pub fn references(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Reference)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A decoded corpus image with its identity and role.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub source_path: String,
    pub role: Role,
    pub label: Label,
    pub image: Image,
}

impl ImageRecord {
    pub fn new(id: impl Into<String>, image: Image) -> Self {
        Self {
            id: id.into(),
            source_path: String::new(),
            role: Role::Target,
            label: Label::Unknown,
            image,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub fn with_source(mut self, path: impl Into<String>) -> Self {
        self.source_path = path.into();
        self
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum QueryKind {
    Image,
    Text,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Image => "image",
            QueryKind::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryPayload {
    Image(Image),
    Text(String),
}

/// The object to look for: a reference crop or a text description.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryObject {
    pub name: String,
    pub payload: QueryPayload,
}

impl QueryObject {
    pub fn image(name: impl Into<String>, image: Image) -> Self {
        Self {
            name: name.into(),
            payload: QueryPayload::Image(image),
        }
    }

    pub fn text(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            payload: QueryPayload::Text(text.into()),
        }
    }

    pub fn kind(&self) -> QueryKind {
        match self.payload {
            QueryPayload::Image(_) => QueryKind::Image,
            QueryPayload::Text(_) => QueryKind::Text,
        }
    }

    pub fn as_image(&self) -> Option<&Image> {
        match &self.payload {
            QueryPayload::Image(img) => Some(img),
            QueryPayload::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match &self.payload {
            QueryPayload::Text(t) => Some(t),
            QueryPayload::Image(_) => None,
        }
    }

    /// What a results row shows in its text column: the prompt for text
    /// queries, the query name otherwise.
    pub fn display_text(&self) -> &str {
        self.as_text().unwrap_or(&self.name)
    }
}
