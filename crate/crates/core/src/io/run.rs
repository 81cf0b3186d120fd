//! Batch pipeline: read, build the chain, dispatch, report.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::direct::{kemeny_direct_with, kemeny_eig, DirectOptions, N_DENSE};
use crate::dnc::{kemeny_dnc_auto, DncConfig};
use crate::error::{KemenyError, Result};
use crate::hutch::{kemeny_hutchpp_walk, HutchConfig};
use crate::io::mtx::read_matrix_market;
use crate::linalg::sparse::CsrMatrix;
use crate::markov::{check_irreducible, random_walk, symmetric_walk, BlockPartition, StochasticMatrix, SymmetricWalk};
use crate::result::{KemenyResult, Method};
use crate::structured::{constant_rowsums, detect_periodic, kemeny_constant_rowsum, kemeny_periodic};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// Graph adjacency; normalized into a random walk.
    #[default]
    Adjacency,
    /// Row-stochastic transition matrix.
    Transition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    Row,
    #[value(alias = "symmetric")]
    Sym,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Direct,
    Eig,
    Dnc,
    Hutchpp,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Human,
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub kind: InputKind,
    pub normalize: Normalization,
    pub method: MethodChoice,
    pub dnc: DncConfig,
    pub hutch: HutchConfig,
    pub format: OutputFormat,
    pub largest_scc: bool,
    /// Keep adjacency weights instead of reducing to the 0/1 pattern.
    pub keep_weights: bool,
    /// Let `auto` pick Hutch++ for large symmetric inputs.
    pub coarse: bool,
    /// Largest n solved with dense linear algebra.
    pub n_dense: usize,
    /// Include wall-clock times in JSON and CSV output.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            kind: InputKind::default(),
            normalize: Normalization::default(),
            method: MethodChoice::default(),
            dnc: DncConfig::default(),
            hutch: HutchConfig::default(),
            format: OutputFormat::default(),
            largest_scc: false,
            keep_weights: false,
            coarse: false,
            n_dense: N_DENSE,
            timing: false,
        }
    }
}

/// Present when the chain was cut down to its largest strongly connected
/// component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SccReduction {
    pub original_n: usize,
    pub components: usize,
}

/// The chain a run works on.
#[derive(Clone, Debug)]
pub struct PreparedChain {
    pub p: StochasticMatrix,
    /// Symmetric form, when the input is an undirected graph in symmetric mode.
    pub walk: Option<SymmetricWalk>,
    pub scc: Option<SccReduction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub kappa: f64,
    pub method: Method,
    pub n: usize,
    pub nnz: usize,
    pub diagnostics: crate::result::Diagnostics,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub largest_scc: Option<SccReduction>,
}

impl Report {
    pub fn new(result: KemenyResult, config: &RunConfig, scc: Option<SccReduction>) -> Self {
        let mut diagnostics = result.diagnostics;
        if !config.timing {
            diagnostics.elapsed_secs = 0.0;
        }
        Self {
            schema_version: SCHEMA_VERSION,
            kappa: result.kappa,
            method: result.method,
            n: result.n,
            nnz: result.nnz,
            diagnostics,
            config: config.clone(),
            largest_scc: scc,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn to_csv(&self) -> String {
        let d = &self.diagnostics;
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "kappa,method,n,nnz,elapsed_secs,depth,samples,seed,formula,largest_scc\n{:e},{},{},{},{},{},{},{},{},{}\n",
            self.kappa,
            self.method,
            self.n,
            self.nnz,
            d.elapsed_secs,
            opt(d.depth.map(|v| v.to_string())),
            opt(d.samples.map(|v| v.to_string())),
            opt(d.seed.map(|v| v.to_string())),
            opt(d.formula.clone()),
            self.largest_scc.is_some(),
        )
    }

    pub fn to_human(&self, elapsed: f64) -> String {
        let d = &self.diagnostics;
        let mut s = String::new();
        let mark = if self.largest_scc.is_some() { " (largest component)" } else { "" };
        let _ = writeln!(s, "kappa   {:.12e}", self.kappa);
        let _ = writeln!(s, "method  {}", self.method);
        let _ = writeln!(s, "n       {}{mark}", self.n);
        let _ = writeln!(s, "nnz     {}", self.nnz);
        if let Some(r) = &self.largest_scc {
            let _ = writeln!(s, "input   {} states, {} components", r.original_n, r.components);
        }
        if let Some(f) = &d.formula {
            let _ = writeln!(s, "formula {f}");
        }
        if let (Some(depth), Some(leaves)) = (d.depth, d.leaves) {
            let _ = writeln!(s, "tree    depth {depth}, {leaves} leaves");
        }
        if let Some(l) = d.samples {
            let _ = writeln!(s, "queries {l} (seed {})", d.seed.unwrap_or_default());
        }
        if let Some(r) = d.max_residual {
            let _ = writeln!(s, "resid   {r:.2e}");
        }
        for note in &d.notes {
            let _ = writeln!(s, "note    {note}");
        }
        let _ = writeln!(s, "time    {elapsed:.3} s");
        s
    }

    pub fn render(&self, elapsed: f64) -> String {
        match self.config.format {
            OutputFormat::Human => self.to_human(elapsed),
            OutputFormat::Json => self.to_json() + "\n",
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

/// Builds the chain from a raw matrix: binarize, restrict to the largest
/// component if asked, normalize.
pub fn prepare(a: CsrMatrix, cfg: &RunConfig) -> Result<PreparedChain> {
    if !a.is_square() {
        return Err(KemenyError::DimensionMismatch(format!("matrix is {}×{}, not square", a.nrows(), a.ncols())));
    }
    let mut a = a.prune(0.0);
    if cfg.kind == InputKind::Adjacency && !cfg.keep_weights {
        let t: Vec<_> = a.iter().map(|(i, j, _)| (i, j, 1.0)).collect();
        a = CsrMatrix::from_triplets(a.nrows(), a.ncols(), &t)?;
    }
    let report = check_irreducible(&a);
    let mut scc = None;
    if !report.irreducible {
        if !cfg.largest_scc {
            return Err(KemenyError::Reducible { components: report.components });
        }
        scc = Some(SccReduction { original_n: a.nrows(), components: report.components });
        a = a.select(&report.largest_component());
        if a.nrows() < 1 {
            return Err(KemenyError::InvalidInput("empty chain".into()));
        }
    }
    let (p, walk) = match (cfg.kind, cfg.normalize) {
        (InputKind::Transition, _) => (StochasticMatrix::new(a)?, None),
        (InputKind::Adjacency, Normalization::Row) => (random_walk(&a)?, None),
        (InputKind::Adjacency, Normalization::Sym) => {
            let w = symmetric_walk(&a)?;
            (w.random_walk(), Some(w))
        }
    };
    Ok(PreparedChain { p, walk, scc })
}

/// Method `auto` resolves to.
pub fn auto_dispatch(chain: &PreparedChain, cfg: &RunConfig) -> MethodChoice {
    let p = &chain.p;
    let n = p.dim();
    if n >= 2 {
        let halves = BlockPartition::halving(n).ok();
        let rowsum = halves.is_some_and(|s| constant_rowsums(p, s).is_some());
        if rowsum || detect_periodic(p).is_some() {
            return MethodChoice::ClosedForm;
        }
    }
    if n <= cfg.n_dense {
        return MethodChoice::Direct;
    }
    if cfg.coarse && symmetric_form(chain).is_ok() {
        return MethodChoice::Hutchpp;
    }
    MethodChoice::Dnc
}

fn symmetric_form(chain: &PreparedChain) -> Result<SymmetricWalk> {
    match &chain.walk {
        Some(w) => Ok(w.clone()),
        None => SymmetricWalk::from_reversible(&chain.p),
    }
}

fn closed_form(p: &StochasticMatrix) -> Result<KemenyResult> {
    if let Some((chain, _)) = detect_periodic(p) {
        return kemeny_periodic(&chain);
    }
    if p.dim() >= 2 {
        let split = BlockPartition::halving(p.dim())?;
        if constant_rowsums(p, split).is_some() {
            return Ok(kemeny_constant_rowsum(p, split)?.result);
        }
    }
    Err(KemenyError::Precondition(
        "no closed form applies: chain is aperiodic and the halves lack constant row sums".into(),
    ))
}

/// Runs one method on a prepared chain.
pub fn solve(chain: &PreparedChain, cfg: &RunConfig) -> Result<KemenyResult> {
    let method = match cfg.method {
        MethodChoice::Auto => auto_dispatch(chain, cfg),
        m => m,
    };
    let p = &chain.p;
    let mut r = match method {
        MethodChoice::Direct => kemeny_direct_with(p, &DirectOptions { n_dense: cfg.n_dense, ..Default::default() })?,
        MethodChoice::Eig => kemeny_eig(p)?,
        MethodChoice::Dnc => {
            let dnc = DncConfig { n_dense: cfg.n_dense, ..cfg.dnc.clone() };
            dnc.validate()?;
            kemeny_dnc_auto(p, &dnc)?
        }
        MethodChoice::Hutchpp => {
            cfg.hutch.validate()?;
            let walk = symmetric_form(chain)?;
            let mut r = kemeny_hutchpp_walk(&walk, &cfg.hutch)?;
            r.nnz = p.nnz();
            r
        }
        MethodChoice::ClosedForm => closed_form(p)?,
        MethodChoice::Auto => unreachable!("resolved above"),
    };
    if cfg.method == MethodChoice::Auto {
        r.diagnostics.notes.push(format!("auto selected {}", r.method));
    }
    Ok(r)
}

/// Runs the pipeline on an in-memory matrix.
pub fn run_matrix(a: CsrMatrix, cfg: &RunConfig) -> Result<Report> {
    let chain = prepare(a, cfg)?;
    let result = solve(&chain, cfg)?;
    Ok(Report::new(result, cfg, chain.scc))
}

/// Reads `cfg.input` and runs the pipeline.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    run_matrix(read_matrix_market(&cfg.input)?, cfg)
}

/// Applies `KEMENY_THREADS` (0 or unset: one thread per core) to the global
/// thread pool. Returns the thread count that was set.
pub fn init_threads_from_env() -> Result<Option<usize>> {
    let Ok(v) = std::env::var("KEMENY_THREADS") else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| KemenyError::InvalidInput(format!("KEMENY_THREADS must be a non-negative integer, got '{v}'")))?;
    if n == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| KemenyError::InvalidInput(format!("thread pool: {e}")))?;
    Ok(Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_bipartite, grid_graph, random_irreducible};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_adjacency(n: usize) -> CsrMatrix {
        let t: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j, 1.0))).collect();
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn uniform_auto_is_exact() {
        let r = run_matrix(uniform_adjacency(100), &RunConfig::default()).unwrap();
        assert!((r.kappa - 99.0).abs() < 1e-10, "{}", r.kappa);
        assert_eq!(r.method, Method::ClosedForm);
    }

    #[test]
    fn dispatch_choices() {
        let cfg = RunConfig::default();
        let bip = prepare(complete_bipartite(3, 5), &cfg).unwrap();
        assert_eq!(auto_dispatch(&bip, &cfg), MethodChoice::ClosedForm);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_irreducible(100, 0.05, &mut rng);
        let cfg_t = RunConfig { kind: InputKind::Transition, ..Default::default() };
        let chain = prepare(p.matrix().clone(), &cfg_t).unwrap();
        assert_eq!(auto_dispatch(&chain, &cfg_t), MethodChoice::Direct);
        let small = RunConfig { n_dense: 50, ..cfg_t.clone() };
        assert_eq!(auto_dispatch(&chain, &small), MethodChoice::Dnc);
        let grid = RunConfig { n_dense: 50, coarse: true, normalize: Normalization::Sym, ..Default::default() };
        // A diagonal edge makes the grid non-bipartite.
        let mut t: Vec<_> = grid_graph(8, 8).iter().collect();
        t.extend([(0, 9, 1.0), (9, 0, 1.0)]);
        let g = prepare(CsrMatrix::from_triplets(64, 64, &t).unwrap(), &grid).unwrap();
        assert_eq!(auto_dispatch(&g, &grid), MethodChoice::Hutchpp);
    }

    #[test]
    fn reducible_needs_flag() {
        // Two disjoint triangles plus an edge into the second.
        let mut t = Vec::new();
        for base in [0, 3] {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        t.push((base + i, base + j, 1.0));
                    }
                }
            }
        }
        t.push((0, 4, 1.0));
        let a = CsrMatrix::from_triplets(6, 6, &t).unwrap();
        let err = run_matrix(a.clone(), &RunConfig::default()).unwrap_err();
        assert!(matches!(err, KemenyError::Reducible { components: 2 }));
        let cfg = RunConfig { largest_scc: true, ..Default::default() };
        let r = run_matrix(a, &cfg).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.largest_scc, Some(SccReduction { original_n: 6, components: 2 }));
        assert!((r.kappa - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_are_binarized_by_default() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 5.0), (1, 0, 1.0), (0, 0, 5.0), (1, 1, 1.0)]).unwrap();
        let r = run_matrix(a.clone(), &RunConfig { method: MethodChoice::Direct, ..Default::default() }).unwrap();
        assert!((r.kappa - 1.0).abs() < 1e-12);
        let keep = RunConfig { method: MethodChoice::Direct, keep_weights: true, ..Default::default() };
        let r = run_matrix(a, &keep).unwrap();
        // P = [[½, ½], [½, ½]] either way for these weights.
        assert!((r.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hutchpp_on_asymmetric_input_explains() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_irreducible(30, 0.1, &mut rng);
        let cfg = RunConfig { kind: InputKind::Transition, method: MethodChoice::Hutchpp, ..Default::default() };
        let err = run_matrix(p.matrix().clone(), &cfg).unwrap_err();
        assert!(err.to_string().contains("reversible"), "{err}");
    }

    #[test]
    fn json_is_deterministic() {
        let cfg = RunConfig {
            method: MethodChoice::Hutchpp,
            normalize: Normalization::Sym,
            format: OutputFormat::Json,
            ..Default::default()
        };
        let a = run_matrix(grid_graph(8, 8), &cfg).unwrap().to_json();
        let b = run_matrix(grid_graph(8, 8), &cfg).unwrap().to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["method"], "hutchpp");
        assert!(v["config"]["hutch"]["delta"].is_number());
    }
}
