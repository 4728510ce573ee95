//! Run configuration and the end-to-end experiment: generate, render,
//! extract, relate, reason and score, writing every artifact to a directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foa::{build_covers, covers_to_json, reason_over_covers, FoAParams};
use crate::geometry::GeomParams;
use crate::graph::GraphError;
use crate::hash::stage_seed;
use crate::percept::{extract_rects, recovered, write_pgm, HoughParams, DEFAULT_EPS_CORNER};
use crate::reasoner::{beliefs_to_jsonl, classify, ExpertAxioms, Reasoner, ReasonerBudget, DEFAULT_THETA};
use crate::scene::{Label, Scene, SceneError, SceneRect};
use crate::semantics::{build_l1, emit_premises, premises_to_string, SemanticsError};
use crate::synthlab::{
    apply_relation_noise, format_table, generate_scene, render_scene, score, GenerateError, MetricsReport, SceneSpec,
    ScoreError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// One experiment. Every random choice derives from `seed`; the scene spec's
/// own seed is replaced by a stage seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scene: SceneSpec,
    pub geom: GeomParams,
    pub budget: ReasonerBudget,
    pub foa: FoAParams,
    pub hough: HoughParams,
    pub theta: f64,
    /// Reason with focus of attention; the other mode is run as a baseline.
    pub use_foa: bool,
    pub expert_axioms_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            scene: SceneSpec::default(),
            geom: GeomParams::default(),
            budget: ReasonerBudget::default(),
            foa: FoAParams::default(),
            hough: HoughParams::default(),
            theta: DEFAULT_THETA,
            use_foa: true,
            expert_axioms_path: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.scene.validate()?;
        let checks = [
            self.geom.validate(),
            self.budget.validate(),
            self.foa.validate(),
            self.hough.validate(),
        ];
        for c in checks {
            c.map_err(PipelineError::Config)?;
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(PipelineError::Config(format!("theta must be in [0, 1], got {}", self.theta)));
        }
        Ok(())
    }
}

pub fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn labels_to_json(labels: &BTreeMap<String, Label>) -> String {
    serde_json::to_string_pretty(labels).expect("labels serialize")
}

pub fn labels_from_json(text: &str) -> Result<BTreeMap<String, Label>, serde_json::Error> {
    serde_json::from_str(text)
}

/// How many generated rects the percept front-end found again.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PerceptReport {
    pub rendered: usize,
    pub extracted: usize,
    pub recovered: usize,
    pub tolerance_px: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub n_rects: usize,
    pub n_edges: usize,
    pub n_premise_lines: usize,
    pub n_covers: usize,
    pub with_foa: MetricsReport,
    pub without_foa: MetricsReport,
    pub percept: PerceptReport,
}

/// Run all stages and write artifacts into `out_dir`:
///
/// `scene.json`, `scene.pgm`, `extracted.json`, `percept.json`, `graph.json`,
/// `premises.nal`, `covers.json`, `beliefs.jsonl`, `labels.json`,
/// `metrics.json`, `labels_baseline.json`, `metrics_baseline.json`,
/// `table.txt`.
///
/// `labels.json` and `metrics.json` follow `use_foa`; the baseline files
/// hold the other mode. Reasoning runs on the generated geometry; the image
/// round trip is scored separately in `percept.json`.
pub fn run_pipeline(
    cfg: &RunConfig,
    axioms: Option<ExpertAxioms>,
    out_dir: &Path,
) -> Result<PipelineSummary, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let out = |name: &str| out_dir.join(name);

    let spec = SceneSpec {
        seed: stage_seed(cfg.seed, "generate"),
        ..cfg.scene.clone()
    };
    let mut scene = generate_scene(&spec)?;
    scene.params = Some(cfg.geom);
    write_file(&out("scene.json"), scene.to_json())?;

    let img = render_scene(&scene)?;
    write_file(&out("scene.pgm"), write_pgm(&img))?;
    let rects = scene.rects()?;
    let found = extract_rects(&img, &cfg.hough, DEFAULT_EPS_CORNER, stage_seed(cfg.seed, "percept"));
    let tol = 2.0;
    let percept = PerceptReport {
        rendered: rects.len(),
        extracted: found.len(),
        recovered: rects.iter().filter(|r| recovered(r, &found, tol)).count(),
        tolerance_px: tol,
    };
    let extracted = Scene {
        rects: found.iter().map(|r| SceneRect::from_rect(r, None)).collect(),
        params: None,
    };
    write_file(&out("extracted.json"), extracted.to_json())?;
    write_file(
        &out("percept.json"),
        serde_json::to_string_pretty(&percept).expect("report serializes"),
    )?;

    let clean = build_l1(&rects, &cfg.geom)?;
    let g = apply_relation_noise(&clean, cfg.scene.relation_noise, stage_seed(cfg.seed, "noise"))?;
    write_file(&out("graph.json"), g.to_json())?;
    let premises = emit_premises(&g);
    write_file(&out("premises.nal"), premises_to_string(&premises))?;

    let reasoner = Reasoner::new(cfg.budget).with_axioms(axioms);
    let ids = || rects.iter().map(|r| r.id.as_str());
    let covers = build_covers(&rects, &g, &cfg.foa);
    write_file(&out("covers.json"), covers_to_json(&covers))?;
    let foa_beliefs = reason_over_covers(&g, &covers, &reasoner);
    let whole_beliefs = reasoner.infer(&g).beliefs;
    let foa_labels = classify(&foa_beliefs, ids(), cfg.theta);
    let whole_labels = classify(&whole_beliefs, ids(), cfg.theta);

    let truth = scene.labels();
    let with_foa = score(&foa_labels, &truth)?;
    let without_foa = score(&whole_labels, &truth)?;

    let (main, base) = if cfg.use_foa {
        ((&foa_beliefs, &foa_labels, &with_foa), (&whole_labels, &without_foa))
    } else {
        ((&whole_beliefs, &whole_labels, &without_foa), (&foa_labels, &with_foa))
    };
    write_file(&out("beliefs.jsonl"), beliefs_to_jsonl(main.0))?;
    write_file(&out("labels.json"), labels_to_json(main.1))?;
    write_file(&out("metrics.json"), main.2.to_json())?;
    write_file(&out("labels_baseline.json"), labels_to_json(base.0))?;
    write_file(&out("metrics_baseline.json"), base.1.to_json())?;
    write_file(
        &out("table.txt"),
        format_table(&[("without FoA", &without_foa), ("with FoA", &with_foa)]),
    )?;

    Ok(PipelineSummary {
        n_rects: rects.len(),
        n_edges: g.edge_count(),
        n_premise_lines: premises.len(),
        n_covers: covers.len(),
        with_foa,
        without_foa,
        percept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_unknown_keys() {
        let cfg = RunConfig::from_json(r#"{"seed": 3, "budget": {"wm_capacity": 50}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.budget.wm_capacity, 50);
        assert_eq!(cfg.budget.max_iterations, 8);
        assert!(RunConfig::from_json(r#"{"sed": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"budget": {"wm_capacity": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"foa": {"max_cover_size": 1, "min_cover_size": 2}}"#).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let labels: BTreeMap<String, Label> = [("a".to_string(), Label::Shelf), ("b".to_string(), Label::Other)].into();
        assert_eq!(labels_from_json(&labels_to_json(&labels)).unwrap(), labels);
    }

    #[test]
    fn small_pipeline_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            seed: 5,
            scene: SceneSpec {
                n_bays: 1,
                n_shelf_rows: 2,
                n_distractors: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        let summary = run_pipeline(&cfg, None, dir.path()).unwrap();
        for f in [
            "scene.json",
            "scene.pgm",
            "extracted.json",
            "percept.json",
            "graph.json",
            "premises.nal",
            "covers.json",
            "beliefs.jsonl",
            "labels.json",
            "metrics.json",
            "labels_baseline.json",
            "metrics_baseline.json",
            "table.txt",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(summary.with_foa.accuracy, 100.0);
        let metrics = MetricsReport::from_json(&read_file(&dir.path().join("metrics.json")).unwrap()).unwrap();
        assert_eq!(metrics, summary.with_foa);
    }
}
