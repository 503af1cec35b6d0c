use std::io::BufRead;

use thiserror::Error;

/// One raw log line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawLogRecord {
    pub query_text: String,
    pub doc_title: String,
    pub clicked: bool,
}

/// Column layout of a click log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogFormat {
    pub delimiter: char,
    pub columns: usize,
    pub query_col: usize,
    pub title_col: usize,
    pub clicked_col: usize,
}

impl Default for LogFormat {
    fn default() -> Self {
        Self {
            delimiter: '\t',
            columns: 3,
            query_col: 0,
            title_col: 1,
            clicked_col: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MalformedPolicy {
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LineErrorKind {
    #[error("expected {expected} columns, found {found}")]
    ColumnCount { expected: usize, found: usize },
    #[error("empty query")]
    EmptyQuery,
    #[error("empty title")]
    EmptyTitle,
    #[error("clicked flag must be 0 or 1, found {0:?}")]
    BadFlag(String),
    #[error("unreadable line: {0}")]
    Io(String),
}

/// A recoverable per-line failure; `line` is 1-based.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct LineError {
    pub line: usize,
    pub kind: LineErrorKind,
}

pub fn parse_line(line: &str, line_no: usize, format: &LogFormat) -> Result<RawLogRecord, LineError> {
    let err = |kind| LineError { line: line_no, kind };
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split(format.delimiter).collect();
    if fields.len() != format.columns {
        return Err(err(LineErrorKind::ColumnCount {
            expected: format.columns,
            found: fields.len(),
        }));
    }
    let query = fields[format.query_col].trim();
    let title = fields[format.title_col].trim();
    if query.is_empty() {
        return Err(err(LineErrorKind::EmptyQuery));
    }
    if title.is_empty() {
        return Err(err(LineErrorKind::EmptyTitle));
    }
    let clicked = match fields[format.clicked_col].trim() {
        "1" => true,
        "0" => false,
        other => return Err(err(LineErrorKind::BadFlag(other.to_string()))),
    };
    Ok(RawLogRecord {
        query_text: query.to_string(),
        doc_title: title.to_string(),
        clicked,
    })
}

/// Lazily parses a line-oriented log. Blank lines are ignored; every other
/// line yields either a record or a [`LineError`], in input order.
pub fn parse_log<R: BufRead>(
    input: R,
    format: LogFormat,
) -> impl Iterator<Item = Result<RawLogRecord, LineError>> {
    input
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Ok(line) if line.trim().is_empty() => None,
            Ok(line) => Some(parse_line(&line, i + 1, &format)),
            Err(e) => Some(Err(LineError {
                line: i + 1,
                kind: LineErrorKind::Io(e.to_string()),
            })),
        })
}

/// Result of draining a parser under a [`MalformedPolicy`].
#[derive(Debug, Default)]
pub struct ParsedLog {
    pub records: Vec<RawLogRecord>,
    pub skipped: Vec<LineError>,
}

pub fn collect_records<I>(parsed: I, policy: MalformedPolicy) -> Result<ParsedLog, LineError>
where
    I: IntoIterator<Item = Result<RawLogRecord, LineError>>,
{
    let mut out = ParsedLog::default();
    for item in parsed {
        match item {
            Ok(rec) => out.records.push(rec),
            Err(e) if policy == MalformedPolicy::Skip => {
                log::warn!("skipping malformed log {e}");
                out.skipped.push(e);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
