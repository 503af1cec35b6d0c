//! The subcommands, callable without going through argument parsing.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use qsuggest_core::embeddings::{CbowConfig, CentroidMode};
use qsuggest_core::eval::{
    aggregate, parse_annotations, render_worksheet, sample_eval_queries, worksheet_entries, AnnotationRecord,
    EvalSummary,
};
use qsuggest_core::ingest::{
    aggregate_pairs, collect_records, compute_stats, parse_log, read_pairs, write_pairs, DatasetStats,
    LogFormat, LongTailRule, MalformedPolicy, NormalizationRules, PairsFileError, StopWords,
};
use qsuggest_core::pipeline::{build_engine, BuildConfig};
use qsuggest_core::store::{load_engine, save_engine, sha256_hex, ArtifactManifest, BuildMeta, LoadedEngine};
use qsuggest_core::suggest::{SuggestError, SuggestOptions};
use qsuggest_core::QueryKind;

use crate::args::{
    AggregateArgs, BuildArgs, CbowArgs, CentroidArg, ClassArg, IngestArgs, NormArgs, QueryOptions, SampleArgs,
    SuggestArgs,
};
use crate::error::CliError;
use crate::render::{render, Report};

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn normalization_rules(args: &NormArgs) -> Result<NormalizationRules, CliError> {
    if args.no_stop_words {
        return Ok(NormalizationRules::without_stop_words());
    }
    let mut rules = NormalizationRules::default();
    if let Some(path) = &args.stop_words {
        rules.latin_stop_words = StopWords::from_file(path).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &args.cjk_stop_words {
        rules.cjk_stop_words = StopWords::from_file(path).map_err(|e| CliError::io(path, e))?;
    }
    Ok(rules)
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub stats: DatasetStats,
    pub skipped_lines: usize,
    pub dropped_records: usize,
}

pub fn cmd_ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<IngestOutcome, CliError> {
    let rules = normalization_rules(&args.norm)?;
    let cols = [args.query_col, args.title_col, args.clicked_col];
    if cols.iter().any(|&c| c >= args.columns) || cols[0] == cols[1] || cols[1] == cols[2] || cols[0] == cols[2] {
        return Err(CliError::Usage(format!(
            "column indices {cols:?} must be distinct and below --columns {}",
            args.columns
        )));
    }
    let format = LogFormat {
        delimiter: args.delimiter,
        columns: args.columns,
        query_col: args.query_col,
        title_col: args.title_col,
        clicked_col: args.clicked_col,
    };
    let file = fs::File::open(&args.log).map_err(|e| CliError::io(&args.log, e))?;
    let policy = if args.strict { MalformedPolicy::Abort } else { MalformedPolicy::Skip };
    let parsed = collect_records(parse_log(BufReader::new(file), format), policy)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.log.display())))?;
    let agg = aggregate_pairs(&parsed.records, &rules);
    if agg.dropped.total() > 0 {
        log::warn!(
            "dropped {} records that normalize to nothing ({} empty queries, {} empty titles, {} clicks lost)",
            agg.dropped.total(),
            agg.dropped.empty_query,
            agg.dropped.empty_title,
            agg.dropped.dropped_clicks
        );
    }

    let mut buf = Vec::new();
    write_pairs(&mut buf, &agg.pairs).map_err(|e| CliError::io(&args.pairs, e))?;
    fs::write(&args.pairs, buf).map_err(|e| CliError::io(&args.pairs, e))?;

    let stats = compute_stats(&agg, LongTailRule::default());
    let outcome = IngestOutcome {
        stats,
        skipped_lines: parsed.skipped.len(),
        dropped_records: agg.dropped.total(),
    };
    let w = |e| CliError::io(Path::new("<stdout>"), e);
    writeln!(out, "{stats}").map_err(w)?;
    writeln!(out, "skipped lines:         {}", outcome.skipped_lines).map_err(w)?;
    writeln!(out, "dropped records:       {}", outcome.dropped_records).map_err(w)?;
    write!(out, "{}", stats.to_records()).map_err(w)?;
    writeln!(out, "skipped_lines={}", outcome.skipped_lines).map_err(w)?;
    writeln!(out, "dropped_records={}", outcome.dropped_records).map_err(w)?;
    Ok(outcome)
}

pub fn cbow_config(args: &CbowArgs) -> Result<CbowConfig, CliError> {
    let mut cfg = match &args.cbow_config {
        Some(path) => {
            let text = String::from_utf8(read_file(path)?)
                .map_err(|_| CliError::Data(format!("{}: not UTF-8", path.display())))?;
            CbowConfig::from_key_values(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => CbowConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { cfg.$field = v; })* };
    }
    apply!(dim, window, negatives, epochs, seed, min_count, learning_rate, workers);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn check_counts(k: usize, m: usize) -> Result<(), CliError> {
    if k == 0 || m == 0 {
        return Err(CliError::Usage("--k and --m must be at least 1".into()));
    }
    Ok(())
}

pub fn cmd_build(args: &BuildArgs, out: &mut dyn Write) -> Result<ArtifactManifest, CliError> {
    check_counts(args.k, args.m)?;
    let rules = normalization_rules(&args.norm)?;
    let cbow = cbow_config(&args.cbow)?;
    let bytes = read_file(&args.pairs)?;
    let pairs = read_pairs(bytes.as_slice()).map_err(|e| match e {
        PairsFileError::Io(io) => CliError::io(&args.pairs, io),
        other => CliError::Data(format!("{}: {other}", args.pairs.display())),
    })?;
    let config = BuildConfig {
        cbow,
        centroid_mode: match args.centroid {
            CentroidArg::Mean => CentroidMode::Mean,
            CentroidArg::Sum => CentroidMode::Sum,
        },
        options: SuggestOptions {
            m: args.m,
            k: args.k,
            enrich_long_tail: args.enrich_long_tail,
        },
        long_tail: LongTailRule::default(),
    };
    let built = build_engine(&pairs, rules, &config)
        .map_err(|e| CliError::Data(format!("build failed in the {} stage: {e}", e.stage())))?;
    let meta = BuildMeta {
        source_log_digest: sha256_hex(&bytes),
        options: config.options,
        cbow: config.cbow.clone(),
        uncovered_graph_queries: built.uncovered_graph_queries.len(),
    };
    let manifest = save_engine(&built.engine, &built.table, &meta, &args.artifacts)
        .map_err(|e| CliError::store("save", e))?;

    let graph = &built.engine.graph;
    let w = |e| CliError::io(Path::new("<stdout>"), e);
    writeln!(
        out,
        "graph: {} queries, {} documents, {} edges",
        graph.num_queries(),
        graph.num_docs(),
        graph.num_edges()
    )
    .map_err(w)?;
    writeln!(
        out,
        "embeddings: {} tokens x {} dims, final epoch loss {:.4}",
        built.engine.model.vocab().len(),
        built.engine.model.dim(),
        built.training.epoch_losses.last().copied().unwrap_or(f64::NAN)
    )
    .map_err(w)?;
    writeln!(
        out,
        "suggestion table: {} queries ({} click-absent); {} graph queries without embedding",
        built.table.len(),
        built.absent_queries.len(),
        built.uncovered_graph_queries.len()
    )
    .map_err(w)?;
    writeln!(out, "artifacts written to {}", args.artifacts.display()).map_err(w)?;
    Ok(manifest)
}

pub fn open_artifacts(dir: &Path) -> Result<LoadedEngine, CliError> {
    load_engine(dir).map_err(|e| CliError::store("load", e))
}

/// Request options: explicit values first, then what the artifacts were built with.
pub fn resolve_options(opts: &QueryOptions, built: SuggestOptions) -> Result<SuggestOptions, CliError> {
    let resolved = SuggestOptions {
        k: opts.k.unwrap_or(built.k),
        m: opts.m.unwrap_or(built.m),
        enrich_long_tail: opts.enrich_long_tail || built.enrich_long_tail,
    };
    check_counts(resolved.k, resolved.m)?;
    Ok(resolved)
}

/// Answers `text`; shared by the CLI and the service.
pub fn answer(loaded: &LoadedEngine, text: &str, opts: SuggestOptions) -> Result<Report, SuggestError> {
    loaded.engine.suggest(text, opts).map(|list| Report::from(&list))
}

pub fn cmd_suggest(args: &SuggestArgs, out: &mut dyn Write) -> Result<Report, CliError> {
    let loaded = open_artifacts(&args.artifacts)?;
    let opts = resolve_options(&args.options, loaded.manifest.settings.options)?;
    let report = answer(&loaded, &args.query, opts).map_err(|e| match e {
        SuggestError::Unclassifiable => CliError::Data(format!("{:?} has no searchable terms", args.query)),
        other => CliError::Data(other.to_string()),
    })?;
    out.write_all(render(&report, args.format).as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(report)
}

pub fn cmd_eval_sample(args: &SampleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let loaded = open_artifacts(&args.artifacts)?;
    let sample = sample_eval_queries(&loaded.table, args.n, args.seed);
    for (kind, available) in &sample.shortfall {
        eprintln!(
            "warning: only {available} click-{} queries available, {} requested",
            kind.as_str(),
            args.n
        );
    }
    let queries: Vec<String> = sample.existing.iter().chain(&sample.absent).cloned().collect();
    let sheet = render_worksheet(&worksheet_entries(&loaded.table, &queries), args.seed);
    match &args.out {
        Some(path) => {
            let mut f = BufWriter::new(fs::File::create(path).map_err(|e| CliError::io(path, e))?);
            f.write_all(sheet.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| CliError::io(path, e))?;
            writeln!(
                out,
                "sampled {} click-existing and {} click-absent queries into {}",
                sample.existing.len(),
                sample.absent.len(),
                path.display()
            )
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
        None => out
            .write_all(sheet.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

pub fn cmd_eval_aggregate(args: &AggregateArgs, out: &mut dyn Write) -> Result<Vec<EvalSummary>, CliError> {
    let bytes = read_file(&args.scores)?;
    let records =
        parse_annotations(bytes.as_slice()).map_err(|e| CliError::Data(format!("{}: {e}", args.scores.display())))?;
    let mut groups: Vec<(QueryKind, Vec<AnnotationRecord>)> = Vec::new();
    match (args.class, &args.artifacts) {
        (Some(class), _) => {
            let kind = match class {
                ClassArg::Existing => QueryKind::ClickExisting,
                ClassArg::Absent => QueryKind::ClickAbsent,
            };
            groups.push((kind, records));
        }
        (None, Some(dir)) => {
            let loaded = open_artifacts(dir)?;
            let (mut existing, mut absent) = (Vec::new(), Vec::new());
            for r in records {
                match loaded.engine.classify_text(&r.query) {
                    Ok((_, class)) if class.kind == QueryKind::ClickExisting => existing.push(r),
                    Ok(_) => absent.push(r),
                    Err(_) => return Err(CliError::Data(format!("query {:?} has no searchable terms", r.query))),
                }
            }
            for (kind, recs) in [(QueryKind::ClickExisting, existing), (QueryKind::ClickAbsent, absent)] {
                if !recs.is_empty() {
                    groups.push((kind, recs));
                }
            }
        }
        (None, None) => return Err(CliError::Usage("give --class or --artifacts".into())),
    }
    let mut summaries = Vec::new();
    for (kind, recs) in &groups {
        summaries.push(aggregate(recs, *kind).map_err(|e| CliError::Data(format!("{}: {e}", args.scores.display())))?);
    }
    if summaries.is_empty() {
        return Err(CliError::Data(format!("{}: no score records", args.scores.display())));
    }
    let w = |e| CliError::io(Path::new("<stdout>"), e);
    for s in &summaries {
        writeln!(out, "{s}").map_err(w)?;
    }
    for s in &summaries {
        write!(out, "{}", s.to_records()).map_err(w)?;
    }
    Ok(summaries)
}
