//! Experiment orchestration: repeated private and non-private searches over a
//! fixed population, discovery curves, regime labels and output files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{risk_multiplier, Epsilon, NoiseSource, PrivacyLedger};
use crate::error::{Error, Result};
use crate::graph::{
    load_edge_list, read_partition, sparsify_by_weight, targeted_components, Graph, IdMap,
    LoadedGraph, Population, VertexId,
};
use crate::infection::{infect, InfectionConfig};
use crate::proximity::{Sop, SopDescriptor};
use crate::search::{ptarget, target, NoiseMode, SearchParams, SearchTrace};

/// Where the targeted population comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationSource {
    /// Simulate an infection from the seed vertex.
    Infection {
        p: f64,
        q: f64,
        rounds: usize,
        rng_seed: u64,
        #[serde(default = "default_true")]
        protect_seed: bool,
    },
    /// Targeted labels, one per line.
    Partition(PathBuf),
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: PathBuf,
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub sparsify_min_weight: Option<u64>,
    /// Label of the seed vertex in the graph file.
    pub seed_vertex: String,
    pub population: PopulationSource,
    #[serde(flatten)]
    pub sop: Sop,
    /// Number of components to search for.
    pub components: usize,
    pub stop_threshold: usize,
    pub epsilon: Epsilon,
    #[serde(default)]
    pub mode: NoiseMode,
    #[serde(default)]
    pub delta: Option<f64>,
    pub trials: usize,
    pub budget_cap: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for trials; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Read a JSON config. Relative paths inside it are taken relative to the
    /// config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        if self.graph.is_relative() {
            self.graph = base.join(&self.graph);
        }
        if let PopulationSource::Partition(p) = &mut self.population {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let config = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return config("trials must be at least 1".into());
        }
        if self.budget_cap == 0 {
            return config("budget_cap must be at least 1".into());
        }
        if self.components == 0 || self.stop_threshold == 0 {
            return config("components and stop_threshold must be at least 1".into());
        }
        if self.workers == Some(0) {
            return config("workers must be at least 1".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return config(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        if self.sparsify_min_weight.is_some() && !self.weighted {
            return config("sparsify_min_weight needs a weighted graph".into());
        }
        self.sop
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !self.graph.is_file() {
            return config(format!("graph file {} not found", self.graph.display()));
        }
        if let PopulationSource::Partition(p) = &self.population {
            if !p.is_file() {
                return config(format!("partition file {} not found", p.display()));
            }
        }
        Ok(())
    }
}

pub fn load_graph_file(path: &Path, weighted: bool) -> Result<LoadedGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_edge_list(BufReader::new(file), weighted)
}

pub fn load_partition_file(path: &Path, ids: &IdMap) -> Result<Population> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_partition(BufReader::new(file), ids)
}

/// Graph, population and seed resolved from a config.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: Graph,
    pub ids: IdMap,
    pub population: Population,
    pub seed: VertexId,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Instance> {
    cfg.validate()?;
    let loaded = load_graph_file(&cfg.graph, cfg.weighted)?;
    let graph = match cfg.sparsify_min_weight {
        Some(w) => sparsify_by_weight(&loaded.graph, w)?,
        None => loaded.graph,
    };
    let seed = loaded
        .ids
        .id(&cfg.seed_vertex)
        .ok_or_else(|| Error::Config(format!("seed vertex {:?} not in graph", cfg.seed_vertex)))?;
    let population = match &cfg.population {
        PopulationSource::Partition(path) => load_partition_file(path, &loaded.ids)?,
        &PopulationSource::Infection {
            p,
            q,
            rounds,
            rng_seed,
            protect_seed,
        } => {
            let icfg = InfectionConfig {
                seed_vertex: seed,
                p,
                q,
                rounds,
                rng_seed,
                protect_seed,
            };
            icfg.validate(&graph)
                .map_err(|e| Error::Config(e.to_string()))?;
            infect(&graph, &icfg)?
        }
    };
    if !population.is_targeted(seed) {
        return Err(Error::InvalidSeed(seed));
    }
    Ok(Instance {
        graph,
        ids: loaded.ids,
        population,
        seed,
    })
}

/// Qualitative shape of the targeted population.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(into = "u8")]
pub enum Regime {
    /// One component holds most targeted vertices.
    Dominant = 1,
    Mixed = 2,
    /// Only tiny components.
    Fragmented = 3,
}

impl From<Regime> for u8 {
    fn from(r: Regime) -> u8 {
        r as u8
    }
}

/// Regime 1 if the largest component holds more than half of the targeted
/// vertices, 3 if it holds less than 5%, else 2.
pub fn classify_regime(component_sizes: &[usize]) -> Regime {
    let total: usize = component_sizes.iter().sum();
    let largest = component_sizes.iter().copied().max().unwrap_or(0);
    if 2 * largest > total {
        Regime::Dominant
    } else if 20 * largest < total {
        Regime::Fragmented
    } else {
        Regime::Mixed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub budget: usize,
    pub nonprivate: usize,
    pub private_mean: f64,
    /// Population standard deviation over trials.
    pub private_std: f64,
    pub epsilon: f64,
    pub risk_multiplier: f64,
    pub advanced_epsilon: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub targeted_count: usize,
    pub component_sizes: Vec<usize>,
    pub regime: Regime,
    pub nonprivate: SearchTrace,
    pub trials: Vec<SearchTrace>,
    pub curve: Vec<CurvePoint>,
}

/// Run the non-private search once and the private search `trials` times.
///
/// Trial `t` draws noise from stream `t` of the master seed, so results do not
/// depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let inst = prepare(cfg)?;
    run_on_instance(cfg, &inst)
}

pub fn run_on_instance(cfg: &ExperimentConfig, inst: &Instance) -> Result<ExperimentResult> {
    let sop = SopDescriptor::for_graph(cfg.sop, &inst.graph)?;
    let params = SearchParams::new(sop, cfg.components, cfg.stop_threshold)
        .with_epsilon(cfg.epsilon)
        .with_mode(cfg.mode)
        .with_max_queries(cfg.budget_cap);
    let nonprivate = target(&inst.graph, &inst.population, inst.seed, &params)?;

    let run_trial = |t: usize| {
        let mut src = NoiseSource::new(cfg.seed, t as u64);
        ptarget(&inst.graph, &inst.population, inst.seed, &params, &mut src)
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let trials: Vec<SearchTrace> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(run_trial)
            .collect::<Result<_>>()
    })?;

    let mut component_sizes: Vec<usize> = targeted_components(&inst.graph, &inst.population)
        .iter()
        .map(Vec::len)
        .collect();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let curve = aggregate(&nonprivate, &trials, cfg.budget_cap, cfg.delta);
    Ok(ExperimentResult {
        config: cfg.clone(),
        targeted_count: inst.population.targeted_count(),
        regime: classify_regime(&component_sizes),
        component_sizes,
        nonprivate,
        trials,
        curve,
    })
}

/// Ledger as it stood at the last component event within `budget`.
fn ledger_within(trace: &SearchTrace, budget: usize) -> PrivacyLedger {
    trace
        .component_events
        .iter()
        .take_while(|e| e.budget_index <= budget)
        .last()
        .map_or(PrivacyLedger::new(trace.ledger.per_round_epsilon), |e| {
            e.ledger
        })
}

/// Curve points for budgets `1..=cap`, using only queries up to each budget.
pub fn aggregate(
    nonprivate: &SearchTrace,
    trials: &[SearchTrace],
    cap: usize,
    delta: Option<f64>,
) -> Vec<CurvePoint> {
    let n = trials.len() as f64;
    (1..=cap)
        .map(|b| {
            let found: Vec<f64> = trials
                .iter()
                .map(|t| t.discovered_within(b) as f64)
                .collect();
            let mean = found.iter().sum::<f64>() / n;
            let var = found.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let eps: Vec<f64> = trials.iter().map(|t| t.epsilon_within(b)).collect();
            let advanced = delta.map(|d| {
                trials
                    .iter()
                    .map(|t| {
                        ledger_within(t, b)
                            .with_delta(d)
                            .advanced()
                            .expect("delta validated")
                    })
                    .sum::<f64>()
                    / n
            });
            CurvePoint {
                budget: b,
                nonprivate: nonprivate.discovered_within(b),
                private_mean: mean,
                private_std: var.sqrt(),
                epsilon: eps.iter().sum::<f64>() / n,
                risk_multiplier: eps.iter().map(|&e| risk_multiplier(e)).sum::<f64>() / n,
                advanced_epsilon: advanced,
            }
        })
        .collect()
}

pub const RESULTS_CSV: &str = "results.csv";
pub const CURVE_CSV: &str = "curve.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const CURVES_SVG: &str = "curves.svg";

/// One row per (trial, budget), then `np` rows for the non-private run.
pub fn results_csv(result: &ExperimentResult) -> String {
    let cap = result.config.budget_cap;
    let mut out =
        String::from("trial,budget,discovered,components_found,epsilon,risk_multiplier\n");
    let mut rows = |label: &str, trace: &SearchTrace| {
        for b in 1..=cap {
            let eps = trace.epsilon_within(b);
            writeln!(
                out,
                "{label},{b},{},{},{eps},{}",
                trace.discovered_within(b),
                trace.components_within(b),
                risk_multiplier(eps)
            )
            .expect("writing to a String cannot fail");
        }
    };
    for (t, trace) in result.trials.iter().enumerate() {
        rows(&t.to_string(), trace);
    }
    rows("np", &result.nonprivate);
    out
}

/// The aggregate curve, one row per budget.
pub fn curve_csv(result: &ExperimentResult) -> String {
    let mut out =
        String::from("budget,nonprivate,private_mean,private_std,epsilon,risk_multiplier\n");
    for p in &result.curve {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.budget, p.nonprivate, p.private_mean, p.private_std, p.epsilon, p.risk_multiplier
        )
        .expect("writing to a String cannot fail");
    }
    out
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Discovery curves: non-private line, private mean with a ±1σ band, risk
/// multiplier on a right-hand axis and markers at non-private component events.
pub fn curves_svg(result: &ExperimentResult) -> String {
    let cap = result.config.budget_cap.max(1) as f64;
    let y_max = result
        .curve
        .iter()
        .map(|p| (p.private_mean + p.private_std).max(p.nonprivate as f64))
        .fold(1.0, f64::max);
    let rm_max = result
        .curve
        .iter()
        .map(|p| p.risk_multiplier)
        .filter(|r| r.is_finite())
        .fold(1.0, f64::max);
    let w = SVG_WIDTH - 2.0 * MARGIN;
    let h = SVG_HEIGHT - 2.0 * MARGIN;
    let x = |b: f64| MARGIN + w * b / cap;
    let y = |v: f64| SVG_HEIGHT - MARGIN - h * v / y_max;
    // Risk multiplier mapped from [1, rm_max] onto the plot height.
    let y_rm = |r: f64| {
        let r = if r.is_finite() { r } else { rm_max };
        let span = (rm_max - 1.0).max(1e-9);
        SVG_HEIGHT - MARGIN - h * (r - 1.0) / span
    };
    let points = |f: &dyn Fn(&CurvePoint) -> (f64, f64)| {
        result
            .curve
            .iter()
            .map(|p| {
                let (px, py) = f(p);
                format!("{px:.2},{py:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, SVG_HEIGHT - MARGIN, SVG_WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0} L{x1},{y1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">budget</text>"#,
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">targeted found</text>"#,
        SVG_HEIGHT / 2.0,
        SVG_HEIGHT / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{}" text-anchor="middle">0</text><text x="{x1}" y="{}" text-anchor="middle">{cap}</text>"#,
        y0 + 18.0,
        y0 + 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{y1}" text-anchor="end">{y_max}</text>"#,
        x0 - 6.0
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{y1}">{rm_max:.3}</text>"#, x1 + 6.0);

    let upper = points(&|p| (x(p.budget as f64), y(p.private_mean + p.private_std)));
    let lower: Vec<String> = result
        .curve
        .iter()
        .rev()
        .map(|p| {
            format!(
                "{:.2},{:.2}",
                x(p.budget as f64),
                y((p.private_mean - p.private_std).max(0.0))
            )
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<polygon class="band" points="{upper} {}" fill="steelblue" fill-opacity="0.2" stroke="none"/>"#,
        lower.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<polyline class="nonprivate" points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        points(&|p| (x(p.budget as f64), y(p.nonprivate as f64)))
    );
    let _ = writeln!(
        svg,
        r#"<polyline class="private" points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points(&|p| (x(p.budget as f64), y(p.private_mean)))
    );
    let _ = writeln!(
        svg,
        r#"<polyline class="risk" points="{}" fill="none" stroke="firebrick" stroke-dasharray="6 4"/>"#,
        points(&|p| (x(p.budget as f64), y_rm(p.risk_multiplier)))
    );
    for e in &result.nonprivate.component_events {
        if e.budget_index > result.config.budget_cap {
            continue;
        }
        let found = result.nonprivate.discovered_within(e.budget_index) as f64;
        let _ = writeln!(
            svg,
            r#"<circle class="event" cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            x(e.budget_index as f64),
            y(found)
        );
    }
    let legend = [
        ("black", "non-private"),
        ("steelblue", "private mean ± 1σ"),
        ("firebrick", "risk multiplier"),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}">{label}</text>"#,
            MARGIN + 10.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write results.csv, curve.csv, results.json and curves.svg into `dir`.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (RESULTS_CSV, results_csv(result)),
        (CURVE_CSV, curve_csv(result)),
        (RESULTS_JSON, serde_json::to_string_pretty(result)? + "\n"),
        (CURVES_SVG, curves_svg(result)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
