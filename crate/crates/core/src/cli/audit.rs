use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::commands::AnnotationSummary;
use super::report::{fmt_opt, to_json, Outputs, RunMeta};
use super::{AuditArgs, CliError, MissingGender, RunConfig};
use crate::corpus::{parse_records, TextRecord};
use crate::models::DiffModel;
use crate::sensitivity::{evaluate_variant, Lexicon, PsmAggregation, SubstitutionMap, Variant, VariantContext};
use crate::stats::{bootstrap_significance, mutual_information, point_biserial, AnnotationSet, StatsError};

#[derive(Serialize)]
struct AuditRow {
    id: String,
    /// Aligned with the report's `variants`; `null` when excluded.
    scores: Vec<Option<f64>>,
    unknown_tokens: usize,
    /// Variants for which the record had no gendered tokens or an all-zero `v`.
    missing: Vec<Variant>,
}

#[derive(Serialize)]
struct VariantSummary {
    variant: Variant,
    n: usize,
    mean: Option<f64>,
    point_biserial: Option<f64>,
    mutual_information: Option<f64>,
    /// One-sided bootstrap p-value of this variant against CF.
    p_value_vs_cf: Option<f64>,
}

#[derive(Serialize)]
struct AuditReport {
    meta: RunMeta,
    variants: Vec<Variant>,
    on_missing_gender: MissingGender,
    rows: Vec<AuditRow>,
    summary: Vec<VariantSummary>,
    annotations: Option<AnnotationSummary>,
}

fn load_model(meta: &mut RunMeta, role: &str, path: &std::path::Path) -> Result<DiffModel, CliError> {
    let model = DiffModel::from_model_str(&meta.read_text(role, path)?)?;
    meta.add_model(role, model.fingerprint()?);
    Ok(model)
}

pub(super) fn audit(cfg: &RunConfig, a: &AuditArgs) -> Result<Outputs, CliError> {
    let variants = &a.variants;
    if variants.is_empty() {
        return Err(CliError::Usage("no variants requested".into()));
    }
    if variants.iter().collect::<BTreeSet<_>>().len() != variants.len() {
        return Err(CliError::Usage("a variant is listed twice".into()));
    }
    if a.annotations.is_some() {
        if a.mi_bins < 2 {
            return Err(CliError::Usage(format!("--mi-bins must be at least 2, got {}", a.mi_bins)));
        }
        if a.resamples < 100 {
            return Err(CliError::Usage(format!("--resamples must be at least 100, got {}", a.resamples)));
        }
    }

    let mut meta = RunMeta::new(cfg);
    let task = load_model(&mut meta, "task", &a.model)?;
    if !task.is_text() {
        return Err(CliError::Data(format!("{} is not a text model", a.model.display())));
    }
    let psm = a.psm.as_ref().map(|p| load_model(&mut meta, "psm", p)).transpose()?;
    let lexicon = match &a.lexicon {
        Some(p) => Lexicon::parse(&meta.read_text("lexicon", p)?)?,
        None => Lexicon::gendered_default(),
    };
    let substitutions = match &a.substitutions {
        Some(p) => SubstitutionMap::parse(&meta.read_text("substitutions", p)?)?,
        None => SubstitutionMap::gendered_default(),
    };
    let ctx = VariantContext {
        psm: psm.as_ref(),
        lexicon: Some(&lexicon),
        substitutions: Some(&substitutions),
        aggregation: a.psm_row.map_or(PsmAggregation::AllRows, PsmAggregation::Row),
    };
    for &v in variants {
        ctx.check(v).map_err(|e| CliError::Usage(format!("{e} (pass --psm)")))?;
    }

    let records = parse_records(&meta.read_text("data", &a.data)?)?;
    let annotations = a
        .annotations
        .as_ref()
        .map(|p| Ok::<_, CliError>(AnnotationSet::parse(&meta.read_text("annotations", p)?)?))
        .transpose()?;
    let labels = match &annotations {
        Some(set) => {
            let by_id = set.majority_by_id();
            let labels = records
                .iter()
                .map(|r| {
                    by_id
                        .get(r.id.as_str())
                        .map(|v| v.biased)
                        .ok_or_else(|| CliError::Data(format!("record {} has no annotation", r.id)))
                })
                .collect::<Result<Vec<bool>, _>>()?;
            Some(labels)
        }
        None => None,
    };

    let rows = records
        .par_iter()
        .map(|r| score_record(&task, &ctx, variants, a.on_missing_gender, r))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let cf_index = variants.iter().position(|&v| v == Variant::CF);
    let summary = variants
        .iter()
        .enumerate()
        .map(|(vi, &variant)| summarize(&rows, vi, variant, labels.as_deref(), cf_index, a))
        .collect::<Result<Vec<_>, _>>()?;
    let annotation_summary = annotations.as_ref().map(AnnotationSummary::new).transpose()?;

    let text = render_text(&meta, variants, a.on_missing_gender, &rows, &summary, annotation_summary.as_ref());
    let report = AuditReport {
        meta,
        variants: variants.clone(),
        on_missing_gender: a.on_missing_gender,
        rows,
        summary,
        annotations: annotation_summary,
    };
    let mut out = Outputs::default();
    out.push(".txt", text);
    out.push(".json", to_json(&report));
    Ok(out)
}

fn score_record(
    task: &DiffModel,
    ctx: &VariantContext<'_>,
    variants: &[Variant],
    policy: MissingGender,
    r: &TextRecord,
) -> Result<AuditRow, CliError> {
    let x = task.embed(&r.tokens)?;
    let mut scores = Vec::with_capacity(variants.len());
    let mut missing = Vec::new();
    for &v in variants {
        let score = match evaluate_variant(v, ctx, task, &x) {
            Ok(res) if res.substitutions == Some(0) => None,
            Ok(res) => Some(res.value),
            Err(e) if e.is_signal() => None,
            Err(e) => return Err(CliError::from(e)),
        };
        if score.is_none() {
            missing.push(v);
        }
        scores.push(match (score, policy) {
            (Some(s), _) => Some(s),
            (None, MissingGender::Zero) => Some(0.0),
            (None, MissingGender::Exclude) => None,
        });
    }
    Ok(AuditRow { id: r.id.clone(), scores, unknown_tokens: x.unknown_count(), missing })
}

/// `None` for statistics that are undefined on this sample (one label class,
/// constant scores, fewer samples than bins).
fn defined<T>(r: Result<T, StatsError>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(StatsError::InvalidParameter(p)) => Err(CliError::Usage(p)),
        Err(_) => Ok(None),
    }
}

fn summarize(
    rows: &[AuditRow],
    vi: usize,
    variant: Variant,
    labels: Option<&[bool]>,
    cf_index: Option<usize>,
    a: &AuditArgs,
) -> Result<VariantSummary, CliError> {
    let present: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].scores[vi].is_some()).collect();
    let scores: Vec<f64> = present.iter().map(|&i| rows[i].scores[vi].expect("present")).collect();
    let mean = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
    let mut s = VariantSummary {
        variant,
        n: scores.len(),
        mean,
        point_biserial: None,
        mutual_information: None,
        p_value_vs_cf: None,
    };
    let Some(labels) = labels else { return Ok(s) };

    let l: Vec<bool> = present.iter().map(|&i| labels[i]).collect();
    s.point_biserial = defined(point_biserial(&l, &scores))?;
    s.mutual_information = defined(mutual_information(&l, &scores, a.mi_bins))?;
    if let Some(ci) = cf_index.filter(|&ci| ci != vi) {
        let paired: Vec<usize> = present.iter().copied().filter(|&i| rows[i].scores[ci].is_some()).collect();
        let pl: Vec<bool> = paired.iter().map(|&i| labels[i]).collect();
        let pa: Vec<f64> = paired.iter().map(|&i| rows[i].scores[vi].expect("present")).collect();
        let pb: Vec<f64> = paired.iter().map(|&i| rows[i].scores[ci].expect("paired")).collect();
        s.p_value_vs_cf = defined(bootstrap_significance(&pl, &pa, &pb, a.resamples, a.seed))?.map(|o| o.p_value);
    }
    Ok(s)
}

fn render_text(
    meta: &RunMeta,
    variants: &[Variant],
    policy: MissingGender,
    rows: &[AuditRow],
    summary: &[VariantSummary],
    annotations: Option<&AnnotationSummary>,
) -> String {
    let names: Vec<String> = variants.iter().map(Variant::to_string).collect();
    let mut out = meta.text_header("sensitivity audit");
    out.push_str(&format!("records\t{}\nmissing gender policy\t{policy:?}\n\n", rows.len()));

    out.push_str("variant\tn\tmean\tcorr\tmi\tp_vs_CF\n");
    for s in summary {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            s.variant,
            s.n,
            fmt_opt(s.mean),
            fmt_opt(s.point_biserial),
            fmt_opt(s.mutual_information),
            fmt_opt(s.p_value_vs_cf)
        ));
    }
    if let Some(ann) = annotations {
        out.push('\n');
        out.push_str(&ann.text());
    }

    out.push_str(&format!("\nid\t{}\tunknown\tmissing\n", names.join("\t")));
    for r in rows {
        let cells: Vec<String> = r.scores.iter().map(|&s| fmt_opt(s)).collect();
        let missing: Vec<String> = r.missing.iter().map(Variant::to_string).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.id,
            cells.join("\t"),
            r.unknown_tokens,
            if missing.is_empty() { "-".to_string() } else { missing.join(",") }
        ));
    }
    out
}
