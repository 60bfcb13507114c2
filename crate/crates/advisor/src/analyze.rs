//! File handling around [`AnalysisReport`].

use std::path::Path;

use advisor_core::analysis::{parse_jsonl, AnalysisReport, Annotation, Questionnaire};
use advisor_core::Transcript;
use anyhow::{Context, Result};

/// Reads every `*.jsonl` transcript in `dir`, sorted by file name.
pub fn load_transcripts(dir: &Path) -> Result<Vec<Transcript>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Transcript::from_jsonl(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

pub fn build_report(
    transcripts_dir: &Path,
    annotations: &Path,
    questionnaires: &Path,
    restatement_threshold: f64,
) -> Result<AnalysisReport> {
    let transcripts = load_transcripts(transcripts_dir)?;
    let annotations: Vec<Annotation> = parse_jsonl(
        &std::fs::read_to_string(annotations)
            .with_context(|| format!("reading {}", annotations.display()))?,
    )
    .with_context(|| format!("parsing {}", annotations.display()))?;
    let questionnaires: Vec<Questionnaire> = parse_jsonl(
        &std::fs::read_to_string(questionnaires)
            .with_context(|| format!("reading {}", questionnaires.display()))?,
    )
    .with_context(|| format!("parsing {}", questionnaires.display()))?;
    Ok(AnalysisReport::build(
        &transcripts,
        &annotations,
        &questionnaires,
        restatement_threshold,
    )?)
}
