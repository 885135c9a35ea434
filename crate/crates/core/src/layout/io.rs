use std::fs;
use std::path::Path;

use super::{validate_layout, Layout};
use crate::error::{Error, Result};

/// Parses and validates a layout from JSON text.
pub fn from_json_str(text: &str) -> Result<Layout> {
    let layout: Layout = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate_layout(&layout)?;
    Ok(layout)
}

/// Canonical JSON text: object keys sorted, two-space indent, trailing newline.
pub fn to_json_string(layout: &Layout) -> String {
    crate::to_canonical_json(layout)
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<Layout> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json_str(&text)
}

pub fn save_layout(layout: &Layout, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json_string(layout)).map_err(|e| Error::io(path, e))
}
