//! Language catalogs and proof templates. English is bundled and defines
//! the key universe; other languages are discovered in a directory as
//! `<tag>.lang` files with templates under `templates/<tag>/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub const ENGLISH: &str = "en";
pub const CATALOG_EXTENSION: &str = "lang";
pub const TEMPLATE_EXTENSION: &str = "tpl";

const EN_CATALOG: &str = include_str!("../resources/lang/en.lang");

/// Bundled English templates by name.
const EN_TEMPLATES: &[(&str, &str)] = &[
    (
        "initial",
        include_str!("../resources/templates/en/initial.tpl"),
    ),
    (
        "conclusion-proved",
        include_str!("../resources/templates/en/conclusion-proved.tpl"),
    ),
    (
        "conclusion-failed",
        include_str!("../resources/templates/en/conclusion-failed.tpl"),
    ),
    (
        "goal-true",
        include_str!("../resources/templates/en/goal-true.tpl"),
    ),
    (
        "goal-in-kb",
        include_str!("../resources/templates/en/goal-in-kb.tpl"),
    ),
    (
        "kb-contradiction",
        include_str!("../resources/templates/en/kb-contradiction.tpl"),
    ),
    (
        "impl-goal-direct",
        include_str!("../resources/templates/en/impl-goal-direct.tpl"),
    ),
    (
        "and-goal-split",
        include_str!("../resources/templates/en/and-goal-split.tpl"),
    ),
    (
        "iff-goal-split",
        include_str!("../resources/templates/en/iff-goal-split.tpl"),
    ),
    (
        "and-kb-split",
        include_str!("../resources/templates/en/and-kb-split.tpl"),
    ),
    (
        "or-kb-split",
        include_str!("../resources/templates/en/or-kb-split.tpl"),
    ),
    (
        "not-goal",
        include_str!("../resources/templates/en/not-goal.tpl"),
    ),
    (
        "or-goal",
        include_str!("../resources/templates/en/or-goal.tpl"),
    ),
    (
        "impl-goal-contrapose",
        include_str!("../resources/templates/en/impl-goal-contrapose.tpl"),
    ),
    (
        "forall-goal-intro",
        include_str!("../resources/templates/en/forall-goal-intro.tpl"),
    ),
    (
        "forall-goal-intro-cases",
        include_str!("../resources/templates/en/forall-goal-intro-cases.tpl"),
    ),
    (
        "exists-goal-instantiate",
        include_str!("../resources/templates/en/exists-goal-instantiate.tpl"),
    ),
    (
        "forall-kb-instantiate",
        include_str!("../resources/templates/en/forall-kb-instantiate.tpl"),
    ),
    (
        "modus-ponens",
        include_str!("../resources/templates/en/modus-ponens.tpl"),
    ),
    (
        "expand-definition",
        include_str!("../resources/templates/en/expand-definition.tpl"),
    ),
    (
        "expand-definition-kb",
        include_str!("../resources/templates/en/expand-definition-kb.tpl"),
    ),
    (
        "builtin-simplify-goal",
        include_str!("../resources/templates/en/builtin-simplify-goal.tpl"),
    ),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogWarning {
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    UnknownKey {
        language: String,
        key: String,
    },
    Unreadable {
        path: PathBuf,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum I18nError {
    #[error("unknown catalog key {0:?}")]
    UnknownKey(String),
    #[error("no catalog for language {0:?}")]
    UnknownLanguage(String),
    #[error("no template {name:?} in language {language:?} or English")]
    MissingTemplate { name: String, language: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    pub language: String,
    pub entries: BTreeMap<String, String>,
    pub source: Option<PathBuf>,
}

/// Parses `key = value` lines. `#` starts a comment line; `\n` in a value
/// is a line break.
pub fn parse_catalog(text: &str) -> Result<BTreeMap<String, String>, (usize, String)> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err((i + 1, "missing '='".into()));
        };
        let key = key.trim();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err((i + 1, "bad key".into()));
        }
        if out
            .insert(key.to_string(), value.trim().replace("\\n", "\n"))
            .is_some()
        {
            return Err((i + 1, format!("duplicate key {key}")));
        }
    }
    Ok(out)
}

/// Language tags look like `de` or `pt-BR`.
pub fn is_language_tag(s: &str) -> bool {
    let mut parts = s.split('-');
    let first = parts.next().unwrap_or("");
    (2..=3).contains(&first.len())
        && first.chars().all(|c| c.is_ascii_lowercase())
        && parts
            .all(|p| !p.is_empty() && p.len() <= 8 && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

/// Replaces `{name}` placeholders; unknown names become empty.
pub fn fill(template: &str, args: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close)
                if after[..close]
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_') =>
            {
                let name = &after[..close];
                if let Some((_, v)) = args.iter().find(|(k, _)| *k == name) {
                    out.push_str(v);
                }
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone)]
pub struct Catalogs {
    english: Catalog,
    others: BTreeMap<String, Catalog>,
    templates: BTreeMap<String, BTreeMap<String, String>>,
    warnings: Vec<CatalogWarning>,
    dir: Option<PathBuf>,
}

impl Default for Catalogs {
    fn default() -> Self {
        Self::english_only()
    }
}

impl Catalogs {
    pub fn english_only() -> Self {
        let entries = parse_catalog(EN_CATALOG).expect("bundled English catalog is well formed");
        let templates = EN_TEMPLATES
            .iter()
            .map(|(k, v)| (k.to_string(), v.trim_end().to_string()))
            .collect();
        Catalogs {
            english: Catalog {
                language: ENGLISH.to_string(),
                entries,
                source: None,
            },
            others: BTreeMap::new(),
            templates: BTreeMap::from([(ENGLISH.to_string(), templates)]),
            warnings: Vec::new(),
            dir: None,
        }
    }

    /// Bundled English plus every well-formed catalog in `dir`.
    pub fn load(dir: Option<&Path>) -> Self {
        let mut cats = Self::english_only();
        if let Some(dir) = dir {
            cats.dir = Some(dir.to_path_buf());
            cats.load_dir(dir);
        }
        cats
    }

    /// Reloads from the same directory.
    pub fn reload(&mut self) {
        *self = Self::load(self.dir.clone().as_deref());
    }

    fn load_dir(&mut self, dir: &Path) {
        let Ok(read) = fs::read_dir(dir) else {
            self.warnings.push(CatalogWarning::Unreadable {
                path: dir.to_path_buf(),
                error: "not a readable directory".into(),
            });
            return;
        };
        let mut files: Vec<PathBuf> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == CATALOG_EXTENSION))
            .collect();
        files.sort();
        for path in files {
            let Some(tag) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .map(str::to_string)
            else {
                continue;
            };
            if !is_language_tag(&tag) {
                self.warnings.push(CatalogWarning::Malformed {
                    path: path.clone(),
                    line: 0,
                    reason: "file name is not a language tag".into(),
                });
                continue;
            }
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    self.warnings.push(CatalogWarning::Unreadable {
                        path: path.clone(),
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            let entries = match parse_catalog(&text) {
                Ok(e) => e,
                Err((line, reason)) => {
                    self.warnings
                        .push(CatalogWarning::Malformed { path, line, reason });
                    continue;
                }
            };
            let mut kept = BTreeMap::new();
            for (k, v) in entries {
                if self.english.entries.contains_key(&k) {
                    kept.insert(k, v);
                } else {
                    self.warnings.push(CatalogWarning::UnknownKey {
                        language: tag.clone(),
                        key: k,
                    });
                }
            }
            if tag == ENGLISH {
                self.english.entries.extend(kept);
                self.english.source = Some(path);
            } else {
                self.others.insert(
                    tag.clone(),
                    Catalog {
                        language: tag.clone(),
                        entries: kept,
                        source: Some(path),
                    },
                );
            }
            self.load_templates(dir, &tag);
        }
    }

    fn load_templates(&mut self, dir: &Path, tag: &str) {
        let tdir = dir.join("templates").join(tag);
        let Ok(read) = fs::read_dir(&tdir) else {
            return;
        };
        let mut found = BTreeMap::new();
        for e in read.flatten() {
            let path = e.path();
            if path.extension().is_none_or(|x| x != TEMPLATE_EXTENSION) {
                continue;
            }
            let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            match fs::read_to_string(&path) {
                Ok(text) => {
                    found.insert(name.to_string(), text.trim_end().to_string());
                }
                Err(e) => self.warnings.push(CatalogWarning::Unreadable {
                    path,
                    error: e.to_string(),
                }),
            }
        }
        self.templates
            .entry(tag.to_string())
            .or_default()
            .extend(found);
    }

    pub fn warnings(&self) -> &[CatalogWarning] {
        &self.warnings
    }

    /// English first, then the others in tag order.
    pub fn available_languages(&self) -> Vec<String> {
        std::iter::once(ENGLISH.to_string())
            .chain(self.others.keys().cloned())
            .collect()
    }

    pub fn has_language(&self, tag: &str) -> bool {
        tag == ENGLISH || self.others.contains_key(tag)
    }

    pub fn english(&self) -> &Catalog {
        &self.english
    }

    pub fn catalog(&self, tag: &str) -> Option<&Catalog> {
        if tag == ENGLISH {
            Some(&self.english)
        } else {
            self.others.get(tag)
        }
    }

    /// The entry in `language`, else the English one.
    pub fn lookup(&self, key: &str, language: &str) -> Result<&str, I18nError> {
        let english = self
            .english
            .entries
            .get(key)
            .ok_or_else(|| I18nError::UnknownKey(key.to_string()))?;
        Ok(self
            .others
            .get(language)
            .and_then(|c| c.entries.get(key))
            .unwrap_or(english))
    }

    /// Looks up and fills a message. Unknown keys are programming errors;
    /// they come back verbatim so that nothing is lost.
    pub fn tr(&self, key: &str, language: &str, args: &[(&str, &str)]) -> String {
        match self.lookup(key, language) {
            Ok(t) => fill(t, args),
            Err(_) => {
                debug_assert!(false, "unknown catalog key {key}");
                key.to_string()
            }
        }
    }

    pub fn missing_keys(&self, language: &str) -> Result<Vec<String>, I18nError> {
        if language == ENGLISH {
            return Ok(Vec::new());
        }
        let cat = self
            .others
            .get(language)
            .ok_or_else(|| I18nError::UnknownLanguage(language.to_string()))?;
        Ok(self
            .english
            .entries
            .keys()
            .filter(|k| !cat.entries.contains_key(*k))
            .cloned()
            .collect())
    }

    /// A template in `language`, falling back to English.
    pub fn template(&self, name: &str, language: &str) -> Result<&str, I18nError> {
        self.templates
            .get(language)
            .and_then(|t| t.get(name))
            .or_else(|| self.templates.get(ENGLISH).and_then(|t| t.get(name)))
            .map(String::as_str)
            .ok_or_else(|| I18nError::MissingTemplate {
                name: name.to_string(),
                language: language.to_string(),
            })
    }

    pub fn has_own_template(&self, name: &str, language: &str) -> bool {
        self.templates
            .get(language)
            .is_some_and(|t| t.contains_key(name))
    }

    pub fn template_names(&self) -> Vec<&str> {
        EN_TEMPLATES.iter().map(|(k, _)| *k).collect()
    }
}

/// Tags of the well-formed catalogs in `dir`, English first.
pub fn available_languages(dir: &Path) -> Vec<String> {
    Catalogs::load(Some(dir)).available_languages()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_lines() {
        let c = parse_catalog("# c\n\na = b\nx.y= two words \nm = one\\ntwo\n").unwrap();
        assert_eq!(c["a"], "b");
        assert_eq!(c["x.y"], "two words");
        assert_eq!(c["m"], "one\ntwo");
        assert!(parse_catalog("novalue\n").is_err());
        assert!(parse_catalog("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn fill_placeholders() {
        assert_eq!(fill("{a} and {b}", &[("a", "1"), ("b", "2")]), "1 and 2");
        assert_eq!(fill("{missing}!", &[]), "!");
        assert_eq!(fill("set {1, 2}", &[]), "set {1, 2}");
    }

    #[test]
    fn tags() {
        for ok in ["en", "de", "pt-BR", "zh-Hans"] {
            assert!(is_language_tag(ok), "{ok}");
        }
        for bad in ["", "e", "EN", "deutsch", "de_DE", "de-"] {
            assert!(!is_language_tag(bad), "{bad}");
        }
    }

    #[test]
    fn directory_discovery() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(available_languages(dir.path()), ["en"]);
        let some_key = Catalogs::english_only()
            .english()
            .entries
            .keys()
            .next()
            .unwrap()
            .clone();
        fs::write(
            dir.path().join("de.lang"),
            format!("{some_key} = Hallo\nbogus.key = x\n"),
        )
        .unwrap();
        fs::write(dir.path().join("fr.lang"), "broken line\n").unwrap();
        let cats = Catalogs::load(Some(dir.path()));
        assert_eq!(cats.available_languages(), ["en", "de"]);
        assert_eq!(cats.lookup(&some_key, "de").unwrap(), "Hallo");
        assert!(cats
            .warnings()
            .iter()
            .any(|w| matches!(w, CatalogWarning::Malformed { .. })));
        assert!(cats
            .warnings()
            .iter()
            .any(|w| matches!(w, CatalogWarning::UnknownKey { key, .. } if key == "bogus.key")));
        let missing = cats.missing_keys("de").unwrap();
        assert_eq!(missing.len(), cats.english().entries.len() - 1);
    }

    #[test]
    fn fallback_and_unknown() {
        let cats = Catalogs::english_only();
        let (k, v) = cats.english().entries.iter().next().unwrap();
        assert_eq!(cats.lookup(k, "de").unwrap(), v);
        assert!(matches!(
            cats.lookup("no.such.key", "en"),
            Err(I18nError::UnknownKey(_))
        ));
        assert_eq!(cats.missing_keys("en").unwrap(), Vec::<String>::new());
    }

    #[test]
    fn bundled_templates_cover_every_rule() {
        let cats = Catalogs::english_only();
        for r in crate::prover::RULES {
            assert!(cats.template(r.id, "en").is_ok(), "{}", r.id);
            assert!(cats.lookup(&r.description_key(), "en").is_ok(), "{}", r.id);
        }
    }
}
