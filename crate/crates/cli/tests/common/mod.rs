#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOPICS: &[&[&str]] = &[
    &["java", "api", "jvm", "thread", "heap", "garbage", "collector", "spring", "maven", "bean"],
    &["svn", "commit", "branch", "merge", "repository", "checkout", "revert", "tag", "trunk", "hook"],
    &["linux", "kernel", "module", "driver", "boot", "grub", "systemd", "mount", "disk", "swap"],
    &["oracle", "database", "index", "table", "query", "backup", "restore", "schema", "tablespace", "sql"],
    &["printer", "driver", "toner", "queue", "scan", "duplex", "network", "paper", "jam", "tray"],
    &["安装", "配置", "服务器", "数据库", "网络", "驱动", "备份", "升级", "系统", "日志"],
];

const FILLER: &[&str] = &["how", "to", "the", "for", "guide", "error", "fix", "windows", "setup"];

fn phrase(rng: &mut ChaCha8Rng, topic: &[&str], len: usize) -> Vec<String> {
    topic.choose_multiple(rng, len).map(|s| s.to_string()).collect()
}

/// A deterministic click log in the default `query<TAB>title<TAB>clicked` layout.
pub fn synthetic_log(lines: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let titles: Vec<Vec<String>> = TOPICS
        .iter()
        .map(|t| {
            (0..6)
                .map(|_| {
                    let len = rng.random_range(2..=4);
                    let mut words = phrase(&mut rng, t, len);
                    words.push(["guide", "manual", "faq", "notes"].choose(&mut rng).unwrap().to_string());
                    words.join(" ")
                })
                .collect()
        })
        .collect();
    // a fixed population of queries, so pairs repeat
    let queries: Vec<(usize, String, bool)> = (0..lines / 8 + 10)
        .map(|i| {
            let ti = rng.random_range(0..TOPICS.len());
            let len = rng.random_range(1..=5);
            let mut words = phrase(&mut rng, TOPICS[ti], len);
            if rng.random_bool(0.3) {
                words.insert(0, FILLER.choose(&mut rng).unwrap().to_string());
            }
            let sep = if ti == 5 { "" } else { " " };
            // roughly one query in six is never clicked
            (ti, words.join(sep), i % 6 == 5)
        })
        .collect();
    let mut out = String::new();
    for _ in 0..lines {
        let (ti, q, never) = queries.choose(&mut rng).unwrap();
        let topic = if rng.random_bool(0.9) { *ti } else { rng.random_range(0..TOPICS.len()) };
        let title = titles[topic].choose(&mut rng).unwrap();
        let clicked = !never && rng.random_bool(0.6);
        let _ = writeln!(out, "{q}\t{title}\t{}", u8::from(clicked));
    }
    out
}

pub fn run_cli(args: &[&str]) -> (u8, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["qsuggest"];
    argv.extend_from_slice(args);
    let code = qsuggest_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a log, ingests it and builds artifacts with small, fast settings.
pub fn build_fixture(dir: &Path, lines: usize, seed: u64) {
    let log = dir.join("log.tsv");
    std::fs::write(&log, synthetic_log(lines, seed)).unwrap();
    let pairs = dir.join("pairs.tsv");
    let art = dir.join("art");
    let (code, _, err) = run_cli(&["ingest", "--log", path_str(&log), "--pairs", path_str(&pairs)]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = run_cli(&[
        "build",
        "--pairs",
        path_str(&pairs),
        "--artifacts",
        path_str(&art),
        "--dim",
        "24",
        "--epochs",
        "10",
        "--min-count",
        "1",
    ]);
    assert_eq!(code, 0, "{err}");
}
