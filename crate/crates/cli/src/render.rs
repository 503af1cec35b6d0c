//! Output shapes shared by the CLI and the HTTP service.

use std::fmt::Write as _;

use qsuggest_core::suggest::{SuggestWarning, SuggestionList};
use serde::{Deserialize, Serialize};
use unicode_width::UnicodeWidthStr;

/// Formats `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("round trip");
        trim_zeros(&format!("{rounded:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to what [`sig6`] prints.
pub fn round6(x: f64) -> f64 {
    sig6(x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub text: String,
    pub score: f64,
}

/// One answered query, as returned over HTTP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub query: String,
    pub class: String,
    pub long_tail: bool,
    pub via: String,
    pub suggestions: Vec<Scored>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub similar: Vec<Scored>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl From<&SuggestionList> for Report {
    fn from(list: &SuggestionList) -> Self {
        let scored = |text: &str, score: f64| Scored {
            text: text.to_string(),
            score: round6(score),
        };
        Report {
            query: list.source_query.clone(),
            class: list.class.kind.as_str().to_string(),
            long_tail: list.class.long_tail,
            via: list.via.as_str().to_string(),
            suggestions: list.items.iter().map(|s| scored(&s.query_key, s.score)).collect(),
            similar: list.similar.iter().map(|(k, s)| scored(k, *s)).collect(),
            warning: list.warning.map(|w| match w {
                SuggestWarning::NoCoverage => "no-coverage".to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    /// Aligned, human-readable text.
    #[default]
    Text,
    /// One tab-separated record per line.
    Records,
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => render_text(report),
        OutputFormat::Records => render_records(report),
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let tail = if r.long_tail { ", long-tail" } else { "" };
    let route = match r.via.as_str() {
        "graph" => "click graph",
        _ => "embedding bridge",
    };
    let _ = writeln!(out, "query: {}", r.query);
    let _ = writeln!(out, "class: click-{}{tail} (via {route})", r.class);
    let width = r
        .similar
        .iter()
        .chain(&r.suggestions)
        .map(|s| s.text.width())
        .max()
        .unwrap_or(0);
    let mut block = |title: &str, rows: &[Scored]| {
        let _ = writeln!(out, "{title}:");
        for (i, s) in rows.iter().enumerate() {
            let pad = width - s.text.width();
            let _ = writeln!(out, "  {:>3}  {}{}  {}", i + 1, s.text, " ".repeat(pad), sig6(s.score));
        }
    };
    if !r.similar.is_empty() {
        block("similar queries", &r.similar);
    }
    if r.suggestions.is_empty() {
        match &r.warning {
            Some(w) => {
                let _ = writeln!(out, "no suggestions ({w})");
            }
            None => out.push_str("no suggestions\n"),
        }
    } else {
        block("suggestions", &r.suggestions);
    }
    out
}

fn render_records(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "query\t{}", r.query);
    let _ = writeln!(out, "class\t{}", r.class);
    let _ = writeln!(out, "long_tail\t{}", r.long_tail);
    let _ = writeln!(out, "via\t{}", r.via);
    for (i, s) in r.similar.iter().enumerate() {
        let _ = writeln!(out, "similar\t{}\t{}\t{}", i + 1, s.text, sig6(s.score));
    }
    for (i, s) in r.suggestions.iter().enumerate() {
        let _ = writeln!(out, "suggestion\t{}\t{}\t{}", i + 1, s.text, sig6(s.score));
    }
    if r.suggestions.is_empty() {
        let _ = writeln!(out, "no_suggestions\t{}", r.warning.as_deref().unwrap_or("no-candidates"));
    }
    out
}

/// Inverse of the records format.
pub fn parse_records(text: &str) -> Result<Report, String> {
    let mut report = Report {
        query: String::new(),
        class: String::new(),
        long_tail: false,
        via: String::new(),
        suggestions: Vec::new(),
        similar: Vec::new(),
        warning: None,
    };
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        let scored = || -> Result<Scored, String> {
            match fields.as_slice() {
                [_, _, text, score] => Ok(Scored {
                    text: text.to_string(),
                    score: score.parse().map_err(|_| format!("bad score in {line:?}"))?,
                }),
                _ => Err(format!("bad record {line:?}")),
            }
        };
        match fields[0] {
            "query" => report.query = fields.get(1).unwrap_or(&"").to_string(),
            "class" => report.class = fields.get(1).unwrap_or(&"").to_string(),
            "long_tail" => report.long_tail = fields.get(1) == Some(&"true"),
            "via" => report.via = fields.get(1).unwrap_or(&"").to_string(),
            "similar" => report.similar.push(scored()?),
            "suggestion" => report.suggestions.push(scored()?),
            "no_suggestions" => {
                report.warning = fields.get(1).filter(|w| **w != "no-candidates").map(|w| w.to_string())
            }
            other => return Err(format!("unknown record {other:?}")),
        }
    }
    Ok(report)
}
