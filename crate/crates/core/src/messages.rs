//! Localized messages for errors and warnings shown to users.

use crate::document::DocumentError;
use crate::formula::ParseError;
use crate::i18n::{CatalogWarning, Catalogs};
use crate::prover::{ComputeError, ProverError, SimplifyNote};
use crate::session::{SessionError, Warning};

pub fn parse_error(c: &Catalogs, lang: &str, e: &ParseError) -> String {
    let end_of_input = c.tr("error.parse.end", lang, &[]);
    let found = e.found.clone().unwrap_or(end_of_input);
    c.tr(
        "error.parse",
        lang,
        &[
            ("start", &e.start.to_string()),
            ("end", &e.end.to_string()),
            ("expected", &e.expected.join(", ")),
            ("found", &found),
        ],
    )
}

pub fn document_error(c: &Catalogs, lang: &str, e: &DocumentError) -> String {
    match e {
        DocumentError::Io { path, source } => c.tr(
            "error.io",
            lang,
            &[
                ("path", &path.display().to_string()),
                ("reason", &source.to_string()),
            ],
        ),
        DocumentError::Format(reason) => c.tr("error.document_format", lang, &[("reason", reason)]),
        DocumentError::UnknownCellId(id) | DocumentError::UnknownGroup(id) => {
            c.tr("error.unknown_cell", lang, &[("key", &id.to_string())])
        }
        other => c.tr("error.document", lang, &[("reason", &other.to_string())]),
    }
}

pub fn session_error(c: &Catalogs, lang: &str, e: &SessionError) -> String {
    match e {
        SessionError::Document(d) => document_error(c, lang, d),
        SessionError::UnknownDocument(p) => c.tr(
            "error.unknown_document",
            lang,
            &[("path", &p.display().to_string())],
        ),
        SessionError::UnknownCellId(k) => {
            c.tr("error.unknown_cell", lang, &[("key", &k.to_string())])
        }
        SessionError::NotAFormulaCell(k) => {
            c.tr("error.not_formula", lang, &[("key", &k.to_string())])
        }
        SessionError::Parse { origin, error } => {
            format!("{origin}: {}", parse_error(c, lang, error))
        }
        SessionError::UnknownUnit => c.tr("error.unknown_unit", lang, &[]),
        SessionError::EmptySelection => c.tr("error.empty_selection", lang, &[]),
        SessionError::ArchiveFormat(reason) => {
            c.tr("error.archive_format", lang, &[("reason", reason)])
        }
        SessionError::VersionMismatch { found, .. } => c.tr(
            "error.archive_version",
            lang,
            &[("found", &found.to_string())],
        ),
        SessionError::Io { path, source } => c.tr(
            "error.io",
            lang,
            &[
                ("path", &path.display().to_string()),
                ("reason", &source.to_string()),
            ],
        ),
    }
}

pub fn prover_error(c: &Catalogs, lang: &str, e: &ProverError) -> String {
    match e {
        ProverError::InvalidSnapshot(reason) => {
            c.tr("error.invalid_settings", lang, &[("reason", reason)])
        }
        ProverError::UnknownStrategy(id) => c.tr("error.unknown_strategy", lang, &[("id", id)]),
        ProverError::UnknownRule(id) => c.tr("error.unknown_rule", lang, &[("id", id)]),
        ProverError::UnknownBuiltin(id) => c.tr("error.unknown_builtin", lang, &[("id", id)]),
        ProverError::PriorityOutOfRange { rule, priority } => c.tr(
            "error.priority",
            lang,
            &[("id", rule), ("priority", &priority.to_string())],
        ),
        ProverError::NoGoal => c.tr("error.no_goal", lang, &[]),
    }
}

pub fn compute_error(c: &Catalogs, lang: &str, e: &ComputeError) -> String {
    let ComputeError::StepLimitExceeded { limit, partial } = e;
    c.tr(
        "error.step_limit",
        lang,
        &[
            ("limit", &limit.to_string()),
            ("result", &partial.result.to_string()),
        ],
    )
}

pub fn warning(c: &Catalogs, lang: &str, w: &Warning) -> String {
    match w {
        Warning::DuplicateLabel { label, existing } => c.tr(
            "warning.duplicate_label",
            lang,
            &[("label", label), ("key", &existing.to_string())],
        ),
    }
}

pub fn catalog_warning(c: &Catalogs, lang: &str, w: &CatalogWarning) -> String {
    match w {
        CatalogWarning::Malformed { path, line, reason } => c.tr(
            "warning.catalog_malformed",
            lang,
            &[
                ("path", &path.display().to_string()),
                ("line", &line.to_string()),
                ("reason", reason),
            ],
        ),
        CatalogWarning::UnknownKey { language, key } => c.tr(
            "warning.catalog_unknown_key",
            lang,
            &[("lang", language), ("key", key)],
        ),
        CatalogWarning::Unreadable { path, error } => c.tr(
            "warning.catalog_unreadable",
            lang,
            &[("path", &path.display().to_string()), ("reason", error)],
        ),
    }
}

pub fn simplify_note(c: &Catalogs, lang: &str, n: &SimplifyNote) -> String {
    match n {
        SimplifyNote::DivisionByZero { term } => {
            c.tr("warning.division_by_zero", lang, &[("term", term)])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    #[test]
    fn parse_error_is_localized_with_span() {
        let c = Catalogs::english_only();
        let e = parse_formula("p +").unwrap_err();
        let m = parse_error(&c, "en", &e);
        assert!(m.starts_with("Syntax error at 3-3"), "{m}");
        assert!(m.ends_with("found end of input."), "{m}");
    }

    #[test]
    fn prover_errors_name_the_culprit() {
        let c = Catalogs::english_only();
        let m = prover_error(&c, "en", &ProverError::UnknownRule("nope".into()));
        assert_eq!(m, "Unknown rule nope.");
    }
}
