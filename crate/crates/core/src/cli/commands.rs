use serde::Serialize;

use super::report::{fmt_f, fmt_opt, to_json, Outputs, RunMeta};
use super::{CliError, CorpusArgs, LipschitzArgs, ParityArgs, RunConfig, Target, TrainArgs};
use crate::corpus::{
    downsample_protected, gen_toy_corpus, parse_records, records_to_jsonl, simulate_annotations, TextRecord,
    ToyCorpusSpec,
};
use crate::models::{train_classifier, train_psm, LabeledExample, TrainConfig, TrainSummary};
use crate::stats::{fleiss_kappa, AnnotationSet};
use crate::synthetic::{
    default_bounds, gen_hiring, gen_threshold, least_squares_slope, lipschitz_sweep, run_parity_cases,
    sweep_table, ParityConfig, PartialSampling, SweepPoint,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub(super) struct AnnotationSummary {
    pub examples: usize,
    pub raters: usize,
    pub fleiss_kappa: Option<f64>,
    pub majority_biased: usize,
    /// Even splits, resolved as biased.
    pub ties: usize,
}

impl AnnotationSummary {
    pub fn new(set: &AnnotationSet) -> Result<Self, CliError> {
        let votes = set.majority();
        let fleiss_kappa = if set.raters() >= 2 && !set.is_empty() {
            Some(fleiss_kappa(&set.category_counts(), set.raters())?)
        } else {
            None
        };
        Ok(Self {
            examples: set.len(),
            raters: set.raters(),
            fleiss_kappa,
            majority_biased: votes.iter().filter(|v| v.biased).count(),
            ties: votes.iter().filter(|v| v.tie).count(),
        })
    }

    pub fn text(&self) -> String {
        format!(
            "annotations\t{} examples, {} raters\nfleiss kappa\t{}\nmajority biased\t{}\nties resolved as biased\t{}\n",
            self.examples,
            self.raters,
            fmt_opt(self.fleiss_kappa),
            self.majority_biased,
            self.ties
        )
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &std::path::Path) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", what.display())))
}

#[derive(Serialize)]
struct PlantedStats {
    token: String,
    records: usize,
    /// Share of those records whose protected label is the token's class.
    in_protected_class: Option<f64>,
}

#[derive(Serialize)]
struct CorpusReport {
    meta: RunMeta,
    spec: ToyCorpusSpec,
    records: usize,
    label_counts: Vec<usize>,
    biased: usize,
    planted: Vec<PlantedStats>,
    annotations: AnnotationSummary,
}

pub(super) fn corpus(cfg: &RunConfig, a: &CorpusArgs) -> Result<Outputs, CliError> {
    let mut meta = RunMeta::new(cfg);
    let mut spec: ToyCorpusSpec = match &a.spec {
        Some(p) => parse_json(&meta.read_text("spec", p)?, p)?,
        None => ToyCorpusSpec::default(),
    };
    spec.seed = a.seed;
    spec.n = a.n.unwrap_or(spec.n);
    spec.bias_rate = a.bias_rate.unwrap_or(spec.bias_rate);
    spec.ambiguous_rate = a.ambiguous_rate.unwrap_or(spec.ambiguous_rate);

    let records = gen_toy_corpus(&spec)?;
    let annotations = simulate_annotations(&records, a.raters, a.rater_noise, a.seed.wrapping_add(1))?;
    let summary = AnnotationSummary::new(&annotations)?;

    let mut label_counts = vec![0; spec.classes];
    for r in &records {
        label_counts[r.label] += 1;
    }
    let planted = spec
        .planted
        .iter()
        .map(|p| {
            let with: Vec<&TextRecord> = records.iter().filter(|r| r.tokens.contains(&p.token)).collect();
            let same = with.iter().filter(|r| r.protected == p.protected_class).count();
            PlantedStats {
                token: p.token.clone(),
                records: with.len(),
                in_protected_class: (!with.is_empty()).then(|| same as f64 / with.len() as f64),
            }
        })
        .collect::<Vec<_>>();
    let biased = records.iter().filter(|r| r.biased == Some(true)).count();

    let mut text = meta.text_header("toy corpus");
    text.push_str(&format!("records\t{}\nlabel counts\t{:?}\nbiased\t{biased}\n", records.len(), label_counts));
    for p in &planted {
        text.push_str(&format!("planted {}\t{} records\tin protected class {}\n", p.token, p.records, fmt_opt(p.in_protected_class)));
    }
    text.push_str(&summary.text());

    let report = CorpusReport { meta, spec, records: records.len(), label_counts, biased, planted, annotations: summary };
    let mut out = Outputs::default();
    out.push(".jsonl", records_to_jsonl(&records));
    out.push(".annotations.tsv", annotations.to_text());
    out.push(".txt", text);
    out.push(".json", to_json(&report));
    Ok(out)
}

#[derive(Serialize)]
struct TrainReport {
    meta: RunMeta,
    target: Target,
    train_config: TrainConfig,
    records: usize,
    dropped: usize,
    summary: TrainSummary,
}

pub(super) fn train(cfg: &RunConfig, a: &TrainArgs) -> Result<Outputs, CliError> {
    let mut meta = RunMeta::new(cfg);
    let mut tc: TrainConfig = match &a.config {
        Some(p) => parse_json(&meta.read_text("config", p)?, p)?,
        None => TrainConfig::default(),
    };
    tc.seed = a.seed;
    tc.epochs = a.epochs.unwrap_or(tc.epochs);
    tc.learning_rate = a.learning_rate.unwrap_or(tc.learning_rate);
    tc.batch_size = a.batch_size.unwrap_or(tc.batch_size);
    tc.validate()?;

    let all = parse_records(&meta.read_text("data", &a.data)?)?;
    let records = match a.downsample_protected {
        Some(class) => downsample_protected(&all, class, a.downsample_fraction, a.seed)?,
        None => all.clone(),
    };
    let data: Vec<LabeledExample> = records.iter().map(TextRecord::to_example).collect();
    let model = match a.target {
        Target::Task => train_classifier(&data, &tc)?,
        Target::Protected => train_psm(&data, &tc)?,
    };
    let model_text = model.to_model_string()?;
    meta.add_model("trained", model.fingerprint()?);

    let s = model.summary().clone();
    let mut text = meta.text_header("training summary");
    text.push_str(&format!(
        "target\t{:?}\nrecords\t{}\ndropped\t{}\nepochs\t{}\nlearning rate\t{}\nbatch size\t{}\n",
        a.target,
        records.len(),
        all.len() - records.len(),
        tc.epochs,
        tc.learning_rate,
        tc.batch_size
    ));
    text.push_str(&format!(
        "train accuracy\t{}\nvalidation accuracy\t{}\nfinal loss\t{}\n",
        fmt_f(s.train_accuracy),
        fmt_opt(s.validation_accuracy),
        fmt_f(s.final_loss)
    ));
    for (c, acc) in s.per_class_accuracy.iter().enumerate() {
        text.push_str(&format!("class {c} accuracy\t{}\n", fmt_f(*acc)));
    }
    for w in &s.warnings {
        text.push_str(&format!("warning\t{w}\n"));
    }

    let report = TrainReport {
        meta,
        target: a.target,
        train_config: tc,
        records: records.len(),
        dropped: all.len() - records.len(),
        summary: s,
    };
    let mut out = Outputs::default();
    out.push(".model.json", model_text);
    out.push(".txt", text);
    out.push(".json", to_json(&report));
    Ok(out)
}

#[derive(Serialize)]
struct ParityReport {
    meta: RunMeta,
    n: usize,
    hair_wrt_gender: f64,
    education_wrt_gender: f64,
    education_wrt_hair: f64,
    probe: [f64; 3],
    case1: f64,
    case2: f64,
    case1_v: Vec<f64>,
    case2_v: Vec<f64>,
}

pub(super) fn parity(cfg: &RunConfig, a: &ParityArgs) -> Result<Outputs, CliError> {
    let meta = RunMeta::new(cfg);
    let data = gen_hiring(a.n, a.seed)?;
    let pc = ParityConfig {
        sampling: PartialSampling { points: None, pairs_per_point: (a.pairs > 0).then_some(a.pairs), seed: a.seed },
    };
    let r = run_parity_cases(&data, &pc)?;

    let mut text = meta.text_header("statistical parity cases");
    text.push_str(&format!(
        "records\t{}\nd hair / d gender\t{}\nd education / d gender\t{}\nd education / d hair\t{}\n",
        a.n,
        fmt_f(r.hair_wrt_gender),
        fmt_f(r.education_wrt_gender),
        fmt_f(r.education_wrt_hair)
    ));
    text.push_str(&format!(
        "probe\t{}\t{}\t{}\ncase 1 P\t{}\ncase 2 P\t{}\n",
        fmt_f(r.probe[0]),
        fmt_f(r.probe[1]),
        fmt_f(r.probe[2]),
        fmt_f(r.case1),
        fmt_f(r.case2)
    ));

    let report = ParityReport {
        meta,
        n: a.n,
        hair_wrt_gender: r.hair_wrt_gender,
        education_wrt_gender: r.education_wrt_gender,
        education_wrt_hair: r.education_wrt_hair,
        probe: r.probe,
        case1: r.case1,
        case2: r.case2,
        case1_v: r.case1_v.entries().to_vec(),
        case2_v: r.case2_v.entries().to_vec(),
    };
    let mut out = Outputs::default();
    out.push(".txt", text);
    out.push(".json", to_json(&report));
    Ok(out)
}

#[derive(Serialize)]
struct LipschitzReport {
    meta: RunMeta,
    n: usize,
    probe_x: f64,
    unconstrained_theta: f64,
    points: Vec<SweepPoint>,
    all_within_bound: bool,
}

pub(super) fn lipschitz(cfg: &RunConfig, a: &LipschitzArgs) -> Result<Outputs, CliError> {
    if a.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let meta = RunMeta::new(cfg);
    let data = gen_threshold(a.n, a.seed)?;
    let bounds = default_bounds(a.points, a.max_bound);
    let probe_x = 1.0;
    let points = lipschitz_sweep(&bounds, &data, probe_x)?;
    let theta_star = least_squares_slope(&data);
    let all_within_bound = points.iter().all(|p| p.sensitivity <= p.bound + 1e-9);

    let mut text = meta.text_header("Lipschitz sweep");
    text.push_str(&format!(
        "records\t{}\nprobe x\t{probe_x}\nunconstrained theta\t{}\nall P <= L\t{all_within_bound}\n\nL\ttheta\tP\n",
        a.n,
        fmt_f(theta_star)
    ));
    for p in &points {
        text.push_str(&format!("{}\t{}\t{}\n", fmt_f(p.bound), fmt_f(p.theta), fmt_f(p.sensitivity)));
    }

    let table = sweep_table(&points);
    let report = LipschitzReport { meta, n: a.n, probe_x, unconstrained_theta: theta_star, points, all_within_bound };
    let mut out = Outputs::default();
    out.push(".tsv", table);
    out.push(".txt", text);
    out.push(".json", to_json(&report));
    Ok(out)
}
