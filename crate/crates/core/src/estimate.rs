//! One entry point for every solution-probability estimator.

use crate::baselines::{build_spanning_forest, mst_estimate, sink_ordering, sst_estimate, up_all, up_pass, ForestStrategy};
use crate::csp::{CspInstance, Var};
use crate::error::{Error, Result};
use crate::pac::{propagate, Mode, PropagationConfig, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sst,
    Up,
    Mst,
    Pac,
    Peleg,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Pac, Method::Sst, Method::Up, Method::Mst, Method::Peleg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sst => "sst",
            Method::Up => "up",
            Method::Mst => "mst",
            Method::Pac => "pac",
            Method::Peleg => "peleg",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sst" => Ok(Method::Sst),
            "up" => Ok(Method::Up),
            "mst" => Ok(Method::Mst),
            "pac" => Ok(Method::Pac),
            "peleg" => Ok(Method::Peleg),
            _ => Err(Error::InvalidConfig(format!("unknown estimation method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOptions {
    /// Propagation settings for `pac` and `peleg` (the mode is overridden).
    pub propagation: PropagationConfig,
    /// Defaults to max-tightness for `sst` and edge-partition for `mst`.
    pub forest_strategy: Option<ForestStrategy>,
    pub seed: u64,
    /// Root recorded for `sst`.
    pub root: Option<Var>,
    /// Explicit `up` ordering; without one every variable is the sink of
    /// its own distance ordering.
    pub ordering: Option<Vec<Var>>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            propagation: PropagationConfig::default(),
            forest_strategy: None,
            seed: 0,
            root: None,
            ordering: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub method: Method,
    pub beliefs: Vec<Vec<f64>>,
    /// Propagation status for `pac` and `peleg`.
    pub status: Option<Status>,
    pub iterations: usize,
    pub metadata: Vec<(String, String)>,
}

impl EstimateReport {
    /// Some variable was left with no mass.
    pub fn has_zero_vector(&self) -> bool {
        self.status == Some(Status::Wipeout) || self.beliefs.iter().any(|v| v.iter().all(|&p| p == 0.0))
    }

    /// Status text used in CSV headers.
    pub fn status_text(&self) -> String {
        match self.status {
            Some(s) => s.to_string(),
            None if self.has_zero_vector() => "wipeout".to_string(),
            None => "exact-pass".to_string(),
        }
    }
}

pub fn estimate(inst: &CspInstance, method: Method, opts: &EstimateOptions) -> Result<EstimateReport> {
    let mut metadata = Vec::new();
    let (beliefs, status, iterations) = match method {
        Method::Pac | Method::Peleg => {
            let mode = if method == Method::Pac { Mode::Standard } else { Mode::Peleg };
            let cfg = opts.propagation.with_mode(mode);
            let res = propagate(inst, &cfg)?;
            metadata.push(("epsilon".into(), cfg.epsilon.to_string()));
            metadata.push(("max_iter".into(), cfg.max_iter.to_string()));
            metadata.push(("min_mass".into(), res.min_mass.to_string()));
            (res.beliefs, Some(res.status), res.iterations)
        }
        Method::Sst => {
            let strategy = opts.forest_strategy.unwrap_or(ForestStrategy::MaxTightness);
            let forest = build_spanning_forest(inst, strategy, opts.seed);
            // SST uses a single tree: the first of the forest
            let mut tree = forest.into_iter().next().expect("at least one forest");
            if let Some(r) = opts.root {
                tree = tree.rerooted(inst, r)?;
            }
            metadata.push(("tree_edges".into(), format_edges(&tree.edges)));
            metadata.push(("root".into(), tree.root.to_string()));
            (sst_estimate(inst, &tree)?, None, 0)
        }
        Method::Up => match &opts.ordering {
            Some(order) => {
                metadata.push(("ordering".into(), format_vars(order)));
                (up_pass(inst, order)?, None, 0)
            }
            None => {
                metadata.push(("ordering".into(), "per-sink distance ordering".into()));
                if inst.num_vars() > 0 {
                    metadata.push(("ordering_example".into(), format_vars(&sink_ordering(inst, 0)?)));
                }
                (up_all(inst)?, None, 0)
            }
        },
        Method::Mst => {
            let strategy = opts.forest_strategy.unwrap_or(ForestStrategy::EdgePartition);
            let forest = build_spanning_forest(inst, strategy, opts.seed);
            metadata.push(("trees".into(), forest.len().to_string()));
            for (i, t) in forest.iter().enumerate() {
                metadata.push((format!("tree{i}"), format_edges(&t.edges)));
            }
            (mst_estimate(inst, &forest)?, None, 0)
        }
    };
    Ok(EstimateReport {
        method,
        beliefs,
        status,
        iterations,
        metadata,
    })
}

fn format_edges(edges: &[(Var, Var)]) -> String {
    edges.iter().map(|(x, y)| format!("{x}-{y}")).collect::<Vec<_>>().join(" ")
}

fn format_vars(vars: &[Var]) -> String {
    vars.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::fixtures::chain_le_3;

    #[test]
    fn every_method_is_exact_on_the_chain() {
        let expected = [[0.75, 0.25], [0.5, 0.5], [0.25, 0.75]];
        for method in [Method::Pac, Method::Sst, Method::Up, Method::Mst] {
            let r = estimate(&chain_le_3(), method, &EstimateOptions::default()).unwrap();
            for (x, e) in expected.iter().enumerate() {
                for i in 0..2 {
                    assert!((r.beliefs[x][i] - e[i]).abs() < 1e-12, "{method} var {x}");
                }
            }
            assert!(!r.has_zero_vector());
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("dmst".parse::<Method>().is_err());
    }

    #[test]
    fn explicit_up_ordering() {
        let opts = EstimateOptions {
            ordering: Some(vec![0, 1, 2]),
            ..Default::default()
        };
        let r = estimate(&chain_le_3(), Method::Up, &opts).unwrap();
        assert!((r.beliefs[2][1] - 0.75).abs() < 1e-15);
        let bad = EstimateOptions {
            ordering: Some(vec![0, 1]),
            ..Default::default()
        };
        assert!(matches!(estimate(&chain_le_3(), Method::Up, &bad), Err(Error::InvalidOrdering(_))));
    }
}
