//! The preferences file (`key = value` lines, like catalogs) and the
//! language resolution order: flag, then TMA_LANG, then the file, then
//! English.

use std::io;
use std::path::{Path, PathBuf};

use tma_core::i18n::{parse_catalog, Catalogs, ENGLISH};

pub fn preferences_path() -> PathBuf {
    if let Some(p) = std::env::var_os("TMA_CONFIG") {
        return PathBuf::from(p);
    }
    let home = std::env::var_os("HOME")
        .map(PathBuf::from)
        .unwrap_or_default();
    home.join(".tma")
}

fn stored_language(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    parse_catalog(&text).ok()?.remove("language")
}

/// Rewrites the `language` entry and keeps the rest of the file.
pub fn store_language(path: &Path, tag: &str) -> io::Result<()> {
    let old = std::fs::read_to_string(path).unwrap_or_default();
    let mut lines: Vec<String> = old
        .lines()
        .filter(|l| {
            l.split_once('=')
                .is_none_or(|(k, _)| k.trim() != "language")
        })
        .map(str::to_string)
        .collect();
    lines.push(format!("language = {tag}"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, lines.join("\n") + "\n")
}

/// The language to use, plus the requested tag when it had to be
/// replaced by English for lack of a catalog.
pub fn resolve_language(flag: Option<&str>, catalogs: &Catalogs) -> (String, Option<String>) {
    let wanted = flag
        .map(str::to_string)
        .or_else(|| std::env::var("TMA_LANG").ok().filter(|s| !s.is_empty()))
        .or_else(|| stored_language(&preferences_path()));
    match wanted {
        Some(tag) if catalogs.has_language(&tag) => (tag, None),
        Some(tag) => (ENGLISH.to_string(), Some(tag)),
        None => (ENGLISH.to_string(), None),
    }
}
