//! TOML scenario files.
//!
//! ```toml
//! seed = 7
//! replications = 200
//! n_agents = 1000
//!
//! [dist_a]
//! pieces = [[0.0, 1.0, 1.0]]      # (lo, hi, weight)
//! [dist_b]
//! pieces = [[0.0, 0.5, 1.0]]
//!
//! [graph]
//! kind = "bounded-degree"
//! cap = 7
//!
//! [mechanism]
//! kind = "medium"
//! alpha = 0.3
//! ```
//!
//! Unknown keys are rejected so a typo never silently falls back to a
//! default.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use socex_core::agent::AuditParams;
use socex_core::distribution::{Piece, PiecewiseDistribution};
use socex_core::mechanism::MechanismKind;
use socex_core::network::{GraphSpec, RegimeSpec, VisibilityGraph};
use socex_core::partition::ReplicaMode;
use socex_core::sim::{ArrivalOrder, GraphSource, Scenario};

use crate::edges::read_edge_list;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    /// Required unless the graph is given by edges.
    pub n_agents: Option<usize>,
    #[serde(default)]
    pub arrival: Arrival,
    /// Used with `arrival = "permutation"`; 0-based agent ids in arrival order.
    pub permutation: Option<Vec<usize>>,
    /// Agents that best-respond instead of complying.
    #[serde(default)]
    pub best_responders: Vec<usize>,
    pub dist_a: DistConfig,
    pub dist_b: DistConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub mechanism: MechanismConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Directory of the config file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Arrival {
    #[default]
    Identity,
    Permutation,
    SeededShuffle,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub pieces: Vec<(f64, f64, f64)>,
}

impl DistConfig {
    pub fn build(&self, field: &str) -> CliResult<PiecewiseDistribution> {
        let pieces = self.pieces.iter().map(|&(lo, hi, w)| Piece::new(lo, hi, w)).collect();
        PiecewiseDistribution::new(pieces).map_err(|e| CliError::Config(format!("{field}: {e}")))
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    #[default]
    Empty,
    Complete,
    Star,
    Path,
    BoundedDegree,
    TwoTier,
    /// `edges = [[i, j], ...]` in the config.
    Inline,
    /// Whitespace-separated `i j` lines in the file at `path`.
    EdgeList,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default)]
    pub kind: GraphKind,
    /// Star center; defaults to the last agent.
    pub center: Option<usize>,
    /// Degree cap for `bounded-degree`; defaults to `floor(N^alpha)`.
    pub cap: Option<usize>,
    /// Target mean degree for random graphs; defaults to half the cap.
    pub mean_degree: Option<f64>,
    /// Hub degree for `two-tier`.
    pub hub_degree: Option<usize>,
    pub edges: Option<Vec<(usize, usize)>>,
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismName {
    #[default]
    NoVisibility,
    Medium,
    High,
    Threshold,
}

impl From<MechanismName> for MechanismKind {
    fn from(m: MechanismName) -> Self {
        match m {
            MechanismName::NoVisibility => MechanismKind::NoVisibility,
            MechanismName::Medium => MechanismKind::Medium,
            MechanismName::High => MechanismKind::High,
            MechanismName::Threshold => MechanismKind::Threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ReplicaModeName {
    #[default]
    RandomTag,
    Comb,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    #[serde(default)]
    pub kind: MechanismName,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Number of `D_0` replicas; defaults to `floor(N^beta) + 1`.
    pub replicas: Option<usize>,
    #[serde(default)]
    pub replica_mode: ReplicaModeName,
    /// Micro-cells per replica for the comb split.
    #[serde(default = "default_granularity")]
    pub comb_granularity: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// 0-based arrival positions of the no-visibility test agents.
    pub test_positions: Option<Vec<usize>>,
}

fn default_alpha() -> f64 {
    0.3
}
fn default_beta() -> f64 {
    0.2
}
fn default_granularity() -> usize {
    512
}
fn default_tol() -> f64 {
    1e-9
}

impl MechanismConfig {
    pub fn replica_mode(&self) -> ReplicaMode {
        match self.replica_mode {
            ReplicaModeName::RandomTag => ReplicaMode::RandomTag,
            ReplicaModeName::Comb => ReplicaMode::Comb { granularity: self.comb_granularity },
        }
    }
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            kind: MechanismName::default(),
            alpha: default_alpha(),
            beta: default_beta(),
            replicas: None,
            replica_mode: ReplicaModeName::default(),
            comb_granularity: default_granularity(),
            tol: default_tol(),
            test_positions: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMethod {
    Exact,
    MonteCarlo,
    #[default]
    Both,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub method: AuditMethod,
    /// Monte Carlo runs; defaults to `replications`.
    pub runs: Option<u64>,
    #[serde(default = "default_min_matched")]
    pub min_matched: u64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Restrict the audit to these agents.
    pub agents: Option<Vec<usize>>,
}

fn default_min_matched() -> u64 {
    200
}
fn default_sigma() -> f64 {
    3.0
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            method: AuditMethod::default(),
            runs: None,
            min_matched: default_min_matched(),
            sigma: default_sigma(),
            agents: None,
        }
    }
}

impl AuditConfig {
    pub fn params(&self) -> AuditParams {
        AuditParams { min_matched: self.min_matched, sigma: self.sigma }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    /// Defaults to the mechanism's alpha.
    pub alpha_grid: Option<Vec<f64>>,
    /// Defaults to the mechanism's beta.
    pub beta_grid: Option<Vec<f64>>,
    /// Replications per cell; defaults to `replications`.
    pub replications: Option<usize>,
}

fn default_n_grid() -> Vec<usize> {
    vec![100, 1000, 10_000]
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { n_grid: default_n_grid(), alpha_grid: None, beta_grid: None, replications: None }
    }
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Config> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Config::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn regime(&self) -> RegimeSpec {
        RegimeSpec { alpha: self.mechanism.alpha, beta: self.mechanism.beta }
    }

    /// Graph for `n` agents (overriding `n_agents`) under `regime`.
    pub fn graph_source(&self, n: Option<usize>, regime: RegimeSpec) -> CliResult<GraphSource> {
        let g = &self.graph;
        let explicit = |edges: Vec<(usize, usize)>| -> CliResult<GraphSource> {
            let max_id = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
            let n = n.or(self.n_agents).unwrap_or(max_id);
            if n < max_id {
                return Err(CliError::Config(format!("graph: edge endpoint {} outside n_agents = {n}", max_id - 1)));
            }
            let graph = VisibilityGraph::from_edges(n, edges).map_err(|e| CliError::Config(format!("graph: {e}")))?;
            Ok(GraphSource::Explicit(graph))
        };
        match g.kind {
            GraphKind::Inline => {
                let edges = g.edges.clone().ok_or_else(|| missing("graph.edges", "kind = \"inline\""))?;
                return explicit(edges);
            }
            GraphKind::EdgeList => {
                let path = g.path.as_ref().ok_or_else(|| missing("graph.path", "kind = \"edge-list\""))?;
                return explicit(read_edge_list(&self.base_dir.join(path))?);
            }
            _ => {}
        }
        let n = n.or(self.n_agents).ok_or_else(|| missing("n_agents", "generated graphs"))?;
        let cap = || g.cap.unwrap_or_else(|| socex_core::network::power_floor(n, regime.alpha).max(1));
        let mean = |cap: usize| g.mean_degree.unwrap_or(cap as f64 / 2.0);
        let spec = match g.kind {
            GraphKind::Empty => GraphSpec::Empty { n },
            GraphKind::Complete => GraphSpec::Complete { n },
            GraphKind::Star => GraphSpec::Star { n, center: g.center.unwrap_or(n.saturating_sub(1)) },
            GraphKind::Path => GraphSpec::Path { n },
            GraphKind::BoundedDegree => {
                let cap = cap();
                GraphSpec::BoundedDegree { n, cap, mean_degree: mean(cap) }
            }
            GraphKind::TwoTier => GraphSpec::TwoTier {
                n,
                alpha: regime.alpha,
                beta: regime.beta,
                mean_degree: mean(cap()),
                hub_degree: g.hub_degree,
            },
            GraphKind::Inline | GraphKind::EdgeList => unreachable!(),
        };
        Ok(GraphSource::Generated(spec))
    }

    /// Scenario with `n` agents and `regime` overriding the config.
    pub fn scenario_with(&self, n: Option<usize>, regime: RegimeSpec) -> CliResult<Scenario> {
        let va = self.dist_a.build("dist_a")?;
        let vb = self.dist_b.build("dist_b")?;
        let mut s = Scenario::new(va, vb, self.graph_source(n, regime)?, self.mechanism.kind.into());
        s.seed = self.seed;
        s.replications = self.replications;
        s.best_responders = self.best_responders.clone();
        s.arrival = match self.arrival {
            Arrival::Identity => ArrivalOrder::Identity,
            Arrival::SeededShuffle => ArrivalOrder::SeededShuffle,
            Arrival::Permutation => ArrivalOrder::Permutation(
                self.permutation.clone().ok_or_else(|| missing("permutation", "arrival = \"permutation\""))?,
            ),
        };
        let m = &mut s.mechanism;
        m.regime = regime;
        m.replicas = self.mechanism.replicas;
        m.replica_mode = self.mechanism.replica_mode();
        m.tol = self.mechanism.tol;
        m.test_positions = self.mechanism.test_positions.clone();
        Ok(s)
    }

    pub fn scenario(&self) -> CliResult<Scenario> {
        self.scenario_with(None, self.regime())
    }
}

fn missing(field: &str, context: &str) -> CliError {
    CliError::Config(format!("missing field `{field}` (required for {context})"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = r#"
        n_agents = 20
        [dist_a]
        pieces = [[0.0, 1.0, 1.0]]
        [dist_b]
        pieces = [[0.0, 0.5, 1.0]]
    "#;

    #[test]
    fn defaults_fill_in() {
        let cfg = Config::parse(UNIT).unwrap();
        assert_eq!(cfg.replications, 1);
        assert_eq!(cfg.mechanism.kind, MechanismName::NoVisibility);
        assert_eq!(cfg.audit.min_matched, 200);
        let s = cfg.scenario().unwrap();
        assert_eq!(s.n_agents, 20);
        s.prepare().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = Config::parse(&format!("{UNIT}\n[mechanism]\nalhpa = 0.2\n")).unwrap_err();
        assert!(err.to_string().contains("alhpa"), "{err}");
    }

    #[test]
    fn missing_distribution_is_named() {
        let err = Config::parse("n_agents = 3\n[dist_a]\npieces = [[0.0, 1.0, 1.0]]\n").unwrap_err();
        assert!(err.to_string().contains("dist_b"), "{err}");
    }

    #[test]
    fn inline_edges_set_the_size() {
        let text = r#"
            [dist_a]
            pieces = [[0.0, 1.0, 1.0]]
            [dist_b]
            pieces = [[0.0, 0.5, 1.0]]
            [graph]
            kind = "inline"
            edges = [[0, 1], [1, 4]]
        "#;
        let s = Config::parse(text).unwrap().scenario().unwrap();
        assert_eq!(s.n_agents, 5);
    }

    #[test]
    fn generated_graph_needs_size() {
        let text = "[dist_a]\npieces = [[0.0, 1.0, 1.0]]\n[dist_b]\npieces = [[0.0, 0.5, 1.0]]\n";
        let err = Config::parse(text).unwrap().scenario().unwrap_err();
        assert!(err.to_string().contains("n_agents"));
    }
}
