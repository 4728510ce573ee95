use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use strata_core::foa::{covers_to_json, reason_with_foa};
use strata_core::percept::{extract_rects, load_pgm, write_pgm, DEFAULT_EPS_CORNER};
use strata_core::pipeline::{labels_from_json, labels_to_json, read_file, run_pipeline, write_file, RunConfig};
use strata_core::reasoner::{beliefs_to_jsonl, classify, DEFAULT_THETA};
use strata_core::scene::SceneRect;
use strata_core::semantics::{build_l1, emit_premises, premises_to_string, rects_from_graph};
use strata_core::synthlab::{apply_relation_noise, format_table, generate_scene, render_scene, score};
use strata_core::{ExpertAxioms, FoAParams, HoughParams, LayeredGraph, Reasoner, ReasonerBudget, Scene, SceneSpec};

#[derive(Parser)]
#[command(name = "strata", version, about = "Label shelf-scene rectangles by layered evidential reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic scene.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write an outline image (binary PGM).
        #[arg(long)]
        render: Option<PathBuf>,
    },
    /// Detect rectangles in a PGM image.
    Extract {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hough parameters as JSON.
        #[arg(long)]
        hough: Option<PathBuf>,
    },
    /// Build the L1 relation graph of a scene.
    Relate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        premises: Option<PathBuf>,
        /// Fraction of edges to drop or flip.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Infer shelf/product/other labels from a graph.
    Reason(ReasonArgs),
    /// Score predicted labels against a labeled scene.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print the results table.
        #[arg(long)]
        table: bool,
    },
    /// Run every stage from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a graph as Graphviz DOT.
    Export {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        dot: PathBuf,
    },
}

#[derive(Args)]
struct ReasonArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, conflicts_with = "no_foa")]
    foa: bool,
    #[arg(long = "no-foa")]
    no_foa: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    covers: Option<PathBuf>,
    /// Dump merged beliefs as JSON lines.
    #[arg(long)]
    beliefs: Option<PathBuf>,
    /// Expert axioms (symmetry and inverse declarations).
    #[arg(long)]
    axioms: Option<PathBuf>,
    #[arg(long)]
    wm_capacity: Option<usize>,
    /// No working-memory cap.
    #[arg(long, conflicts_with = "wm_capacity")]
    unbounded: bool,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[arg(long)]
    max_cover_size: Option<usize>,
}

fn read(path: &Path) -> Result<String> {
    Ok(read_file(path)?)
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    Ok(write_file(path, text)?)
}

fn load_graph(path: &Path) -> Result<LayeredGraph> {
    LayeredGraph::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn load_scene(path: &Path) -> Result<Scene> {
    Scene::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn load_axioms(path: &Path) -> Result<ExpertAxioms> {
    ExpertAxioms::from_json(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn reason(a: &ReasonArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let rects = rects_from_graph(&g)?;
    let mut budget = if a.unbounded {
        ReasonerBudget::unbounded()
    } else {
        ReasonerBudget::default()
    };
    if let Some(n) = a.wm_capacity {
        budget.wm_capacity = n;
    }
    budget.validate().map_err(anyhow::Error::msg)?;
    let mut foa = FoAParams::default();
    if let Some(n) = a.max_cover_size {
        foa.max_cover_size = n;
        foa.min_cover_size = foa.min_cover_size.min(n);
    }
    foa.validate().map_err(anyhow::Error::msg)?;
    let axioms = a.axioms.as_deref().map(load_axioms).transpose()?;
    let reasoner = Reasoner::new(budget).with_axioms(axioms);

    let (labels, beliefs) = if !a.no_foa {
        let out = reason_with_foa(&rects, &g, &reasoner, &foa, a.theta);
        if let Some(p) = &a.covers {
            write(p, covers_to_json(&out.covers))?;
        }
        (out.labels, out.beliefs)
    } else {
        if a.covers.is_some() {
            bail!("--covers requires FoA reasoning");
        }
        let beliefs = reasoner.infer(&g).beliefs;
        (classify(&beliefs, rects.iter().map(|r| r.id.as_str()), a.theta), beliefs)
    };
    if let Some(p) = &a.beliefs {
        write(p, beliefs_to_jsonl(&beliefs))?;
    }
    write(&a.out, labels_to_json(&labels))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spec, out, render } => {
            let spec: SceneSpec =
                serde_json::from_str(&read(&spec)?).with_context(|| format!("{}", spec.display()))?;
            let scene = generate_scene(&spec)?;
            write(&out, scene.to_json())?;
            if let Some(p) = render {
                write(&p, write_pgm(&render_scene(&scene)?))?;
            }
        }
        Command::Extract { image, out, seed, hough } => {
            let bytes = std::fs::read(&image).with_context(|| format!("{}", image.display()))?;
            let img = load_pgm(&bytes).with_context(|| format!("{}", image.display()))?;
            let params = match hough {
                Some(p) => serde_json::from_str::<HoughParams>(&read(&p)?).with_context(|| format!("{}", p.display()))?,
                None => HoughParams::default(),
            };
            params.validate().map_err(anyhow::Error::msg)?;
            let rects = extract_rects(&img, &params, DEFAULT_EPS_CORNER, seed);
            let scene = Scene {
                rects: rects.iter().map(|r| SceneRect::from_rect(r, None)).collect(),
                params: None,
            };
            write(&out, scene.to_json())?;
        }
        Command::Relate {
            scene,
            out,
            premises,
            noise,
            seed,
        } => {
            if !(0.0..=1.0).contains(&noise) {
                bail!("--noise must be in [0, 1], got {noise}");
            }
            let scene = load_scene(&scene)?;
            let g = build_l1(&scene.rects()?, &scene.geom_params())?;
            let g = apply_relation_noise(&g, noise, seed)?;
            write(&out, g.to_json())?;
            if let Some(p) = premises {
                write(&p, premises_to_string(&emit_premises(&g)))?;
            }
        }
        Command::Reason(a) => reason(&a)?,
        Command::Eval { pred, truth, out, table } => {
            let predicted = labels_from_json(&read(&pred)?).with_context(|| format!("{}", pred.display()))?;
            let truth = load_scene(&truth)?.labels();
            let metrics = score(&predicted, &truth)?;
            write(&out, metrics.to_json())?;
            if table {
                print!("{}", format_table(&[("result", &metrics)]));
            }
        }
        Command::Pipeline { config, out_dir } => {
            let cfg = RunConfig::from_json(&read(&config)?).with_context(|| format!("{}", config.display()))?;
            let axioms = match &cfg.expert_axioms_path {
                // relative paths resolve against the config file
                Some(p) => Some(load_axioms(&config.parent().unwrap_or(Path::new(".")).join(p))?),
                None => None,
            };
            let s = run_pipeline(&cfg, axioms, &out_dir)?;
            println!(
                "rects {} edges {} premise lines {} covers {}; accuracy with FoA {:.2}%, without {:.2}%",
                s.n_rects, s.n_edges, s.n_premise_lines, s.n_covers, s.with_foa.accuracy, s.without_foa.accuracy
            );
        }
        Command::Export { graph, dot } => {
            write(&dot, load_graph(&graph)?.to_dot())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
