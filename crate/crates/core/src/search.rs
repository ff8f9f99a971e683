//! Chronological backtracking with pluggable variable and value orderings.
//!
//! A backtrack is counted each time a variable runs out of candidate values
//! and the search retracts the variable assigned before it. Values are only
//! checked against already-assigned neighbors; there is no look-ahead unless
//! a dynamic belief source finds the current partial assignment arc
//! inconsistent.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ac3::{ac3, Ac3Status, DomainSet};
use crate::csp::{CspInstance, Var};
use crate::error::{Error, Result};
use crate::estimate::{estimate, EstimateOptions, EstimateReport, Method};
use crate::generator::substream;
use crate::pac::{propagate, Mode, PropagationConfig, Status};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarRule {
    Lex,
    FirstFail,
    Brelaz,
    MaxBelief,
    Random(u64),
    /// A fixed order of all variables.
    Fixed(Vec<Var>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRule {
    Lex,
    MaxBelief,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeliefSource {
    None,
    /// Estimates computed once, before search.
    Static(EstimateReport),
    /// Estimates recomputed on the conditioned instance before every
    /// variable selection.
    Dynamic { method: Method, options: EstimateOptions },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicSpec {
    pub var_rule: VarRule,
    pub value_rule: ValueRule,
    pub beliefs: BeliefSource,
}

impl HeuristicSpec {
    pub fn lex() -> Self {
        HeuristicSpec {
            var_rule: VarRule::Lex,
            value_rule: ValueRule::Lex,
            beliefs: BeliefSource::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needs = self.var_rule == VarRule::MaxBelief || self.value_rule == ValueRule::MaxBelief;
        if needs && self.beliefs == BeliefSource::None {
            return Err(Error::InvalidConfig("max-belief ordering needs a belief source".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Limits {
    pub max_backtracks: Option<u64>,
    pub max_nodes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solution(Vec<usize>),
    Unsatisfiable,
    LimitReached,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Solution(_) => "solution",
            Outcome::Unsatisfiable => "unsatisfiable",
            Outcome::LimitReached => "limit",
        }
    }

    pub fn is_solution(&self) -> bool {
        matches!(self, Outcome::Solution(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub backtracks: u64,
    /// Value assignments attempted, consistent or not.
    pub nodes: u64,
    /// Propagation rounds spent computing beliefs.
    pub propagation_rounds: u64,
    pub notes: String,
}

/// Unassigned variable with the fewest values consistent with the partial
/// assignment; ties go to the lowest index.
pub fn first_fail_order(inst: &CspInstance, partial: &[Option<usize>]) -> Option<Var> {
    (0..inst.num_vars())
        .filter(|&x| partial[x].is_none())
        .min_by_key(|&x| {
            let live = (0..inst.domain_size(x)).filter(|&v| inst.consistent_with(x, v, partial)).count();
            (live, x)
        })
}

/// Unassigned variable with the most assigned neighbors, then the most
/// unassigned neighbors, then the lowest index.
pub fn brelaz_order(inst: &CspInstance, partial: &[Option<usize>]) -> Option<Var> {
    (0..inst.num_vars()).filter(|&x| partial[x].is_none()).min_by_key(|&x| {
        let assigned = inst.adjacent(x).iter().filter(|&&(y, _)| partial[y].is_some()).count();
        let open = inst.degree(x) - assigned;
        (std::cmp::Reverse(assigned), std::cmp::Reverse(open), x)
    })
}

/// Unassigned variable whose most likely value is most likely.
fn max_belief_var(beliefs: &[Vec<f64>], partial: &[Option<usize>]) -> Option<Var> {
    let mut best: Option<(Var, f64)> = None;
    for (x, b) in beliefs.iter().enumerate() {
        if partial[x].is_some() {
            continue;
        }
        let top = b.iter().copied().fold(0.0, f64::max);
        if best.is_none_or(|(_, t)| top > t) {
            best = Some((x, top));
        }
    }
    best.map(|(x, _)| x)
}

/// Values by nonincreasing belief, ties by ascending index.
pub fn max_belief_values(belief: &[f64]) -> Vec<usize> {
    let mut values: Vec<usize> = (0..belief.len()).collect();
    values.sort_by(|&a, &b| belief[b].total_cmp(&belief[a]).then(a.cmp(&b)));
    values
}

struct Frame {
    var: Var,
    candidates: Vec<usize>,
    next: usize,
}

enum Beliefs {
    Absent,
    Ready(Vec<Vec<f64>>),
    /// The partial assignment is arc inconsistent.
    DeadEnd,
}

struct Searcher<'a> {
    inst: &'a CspInstance,
    spec: &'a HeuristicSpec,
    rng: ChaCha8Rng,
    propagation_rounds: u64,
    dead_ends: u64,
}

impl<'a> Searcher<'a> {
    fn beliefs(&mut self, partial: &[Option<usize>]) -> Result<Beliefs> {
        match &self.spec.beliefs {
            BeliefSource::None => Ok(Beliefs::Absent),
            BeliefSource::Static(report) => Ok(Beliefs::Ready(report.beliefs.clone())),
            BeliefSource::Dynamic { method, options } => {
                let cond = self.inst.condition_partial(partial)?;
                let report = estimate(&cond, *method, options)?;
                self.propagation_rounds += report.status.map_or(0, |_| report.iterations as u64 + 1);
                if report.has_zero_vector() {
                    // zeros are only trusted when arc consistency agrees
                    let ac = ac3(&cond, DomainSet::full(&cond))?;
                    if matches!(ac.status, Ac3Status::Wipeout(_)) {
                        self.dead_ends += 1;
                        return Ok(Beliefs::DeadEnd);
                    }
                }
                Ok(Beliefs::Ready(report.beliefs))
            }
        }
    }

    fn select_var(&mut self, partial: &[Option<usize>], beliefs: Option<&[Vec<f64>]>) -> Option<Var> {
        let inst = self.inst;
        match &self.spec.var_rule {
            VarRule::Lex => partial.iter().position(Option::is_none),
            VarRule::FirstFail => first_fail_order(inst, partial),
            VarRule::Brelaz => brelaz_order(inst, partial),
            VarRule::MaxBelief => max_belief_var(beliefs.expect("validated"), partial),
            VarRule::Random(_) => {
                let open: Vec<Var> = (0..inst.num_vars()).filter(|&x| partial[x].is_none()).collect();
                (!open.is_empty()).then(|| open[self.rng.gen_range(0..open.len())])
            }
            VarRule::Fixed(order) => order.iter().copied().find(|&x| partial[x].is_none()),
        }
    }

    fn order_values(&mut self, x: Var, beliefs: Option<&[Vec<f64>]>) -> Vec<usize> {
        let m = self.inst.domain_size(x);
        match self.spec.value_rule {
            ValueRule::Lex => (0..m).collect(),
            ValueRule::MaxBelief => max_belief_values(&beliefs.expect("validated")[x]),
            ValueRule::Random(_) => {
                let mut v: Vec<usize> = (0..m).collect();
                v.shuffle(&mut self.rng);
                v
            }
        }
    }
}

pub fn solve(inst: &CspInstance, spec: &HeuristicSpec, limits: Limits) -> Result<SearchResult> {
    spec.validate()?;
    if let VarRule::Fixed(order) = &spec.var_rule {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..inst.num_vars()).collect::<Vec<_>>() {
            return Err(Error::InvalidOrdering(format!("{order:?} is not a permutation")));
        }
    }
    let seed = match (&spec.var_rule, spec.value_rule) {
        (VarRule::Random(a), ValueRule::Random(b)) => a ^ b.rotate_left(32),
        (VarRule::Random(s), _) => *s,
        (_, ValueRule::Random(s)) => s,
        _ => 0,
    };
    let mut searcher = Searcher {
        inst,
        spec,
        rng: substream(seed, &[0x5ea7c4]),
        propagation_rounds: 0,
        dead_ends: 0,
    };
    let n = inst.num_vars();
    let mut partial: Vec<Option<usize>> = vec![None; n];
    let mut stack: Vec<Frame> = Vec::with_capacity(n);
    let (mut backtracks, mut nodes) = (0u64, 0u64);

    let finish = |outcome, backtracks, nodes, s: &Searcher| {
        if let Outcome::Solution(a) = &outcome {
            assert!(inst.is_solution(a), "search returned a non-solution");
        }
        Ok(SearchResult {
            outcome,
            backtracks,
            nodes,
            propagation_rounds: s.propagation_rounds,
            notes: if s.dead_ends > 0 {
                format!("arc-inconsistent dead ends: {}", s.dead_ends)
            } else {
                String::new()
            },
        })
    };

    // `descend` selects a new variable; otherwise the top frame tries its next value.
    let mut descend = true;
    loop {
        if descend {
            if stack.len() == n {
                let solution = partial.iter().map(|v| v.expect("complete")).collect();
                return finish(Outcome::Solution(solution), backtracks, nodes, &searcher);
            }
            match searcher.beliefs(&partial)? {
                Beliefs::DeadEnd => {
                    match stack.last() {
                        Some(top) => partial[top.var] = None,
                        None => return finish(Outcome::Unsatisfiable, backtracks, nodes, &searcher),
                    }
                    descend = false;
                    continue;
                }
                beliefs => {
                    let b = match &beliefs {
                        Beliefs::Ready(b) => Some(b.as_slice()),
                        _ => None,
                    };
                    let var = searcher.select_var(&partial, b).expect("an unassigned variable remains");
                    let candidates = searcher.order_values(var, b);
                    stack.push(Frame { var, candidates, next: 0 });
                }
            }
        }

        let top = stack.last_mut().expect("non-empty stack");
        let mut placed = false;
        while top.next < top.candidates.len() {
            let v = top.candidates[top.next];
            top.next += 1;
            nodes += 1;
            if limits.max_nodes.is_some_and(|m| nodes > m) {
                return finish(Outcome::LimitReached, backtracks, nodes, &searcher);
            }
            if inst.consistent_with(top.var, v, &partial) {
                partial[top.var] = Some(v);
                placed = true;
                break;
            }
        }
        if placed {
            descend = true;
            continue;
        }
        stack.pop();
        match stack.last() {
            None => return finish(Outcome::Unsatisfiable, backtracks, nodes, &searcher),
            Some(prev) => {
                partial[prev.var] = None;
                backtracks += 1;
                if limits.max_backtracks.is_some_and(|m| backtracks > m) {
                    return finish(Outcome::LimitReached, backtracks, nodes, &searcher);
                }
            }
        }
        descend = false;
    }
}

/// Runs Peleg relaxation and decodes its beliefs when every variable has
/// (numerically) a single remaining value; otherwise searches with the
/// relaxed beliefs as a static value order.
pub fn peleg_solve(inst: &CspInstance, cfg: &PropagationConfig, limits: Limits) -> Result<SearchResult> {
    let cfg = cfg.with_mode(Mode::Peleg);
    let res = propagate(inst, &cfg)?;
    let rounds = res.iterations as u64 + 1;

    if res.status == Status::Wipeout {
        let ac = ac3(inst, DomainSet::full(inst))?;
        if matches!(ac.status, Ac3Status::Wipeout(_)) {
            return Ok(SearchResult {
                outcome: Outcome::Unsatisfiable,
                backtracks: 0,
                nodes: 0,
                propagation_rounds: rounds,
                notes: "peleg wipeout confirmed by arc consistency".into(),
            });
        }
    } else if let Some(assignment) = decode_indicator(&res.beliefs, 1e-6) {
        if inst.is_solution(&assignment) {
            return Ok(SearchResult {
                outcome: Outcome::Solution(assignment),
                backtracks: 0,
                nodes: inst.num_vars() as u64,
                propagation_rounds: rounds,
                notes: "peleg direct decode".into(),
            });
        }
    }

    let report = EstimateReport {
        method: Method::Peleg,
        beliefs: res.beliefs,
        status: Some(res.status),
        iterations: res.iterations,
        metadata: Vec::new(),
    };
    let spec = HeuristicSpec {
        var_rule: VarRule::Lex,
        value_rule: ValueRule::MaxBelief,
        beliefs: BeliefSource::Static(report),
    };
    let mut out = solve(inst, &spec, limits)?;
    out.propagation_rounds += rounds;
    out.notes = "peleg fallback search".into();
    Ok(out)
}

/// Argmax assignment when every vector is within `tol` of an indicator.
fn decode_indicator(beliefs: &[Vec<f64>], tol: f64) -> Option<Vec<usize>> {
    beliefs
        .iter()
        .map(|b| {
            let best = max_belief_values(b)[0];
            let near = b.iter().enumerate().all(|(i, &p)| {
                let target = if i == best { 1.0 } else { 0.0 };
                (p - target).abs() <= tol
            });
            near.then_some(best)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::fixtures::*;
    use crate::csp::AllowMatrix;
    use crate::generator::{generate, GenSpec};
    use crate::oracle::enumerate;

    fn all_specs(inst: &CspInstance) -> Vec<HeuristicSpec> {
        let pac = estimate(inst, Method::Pac, &EstimateOptions::default()).unwrap();
        let dynamic = BeliefSource::Dynamic {
            method: Method::Pac,
            options: EstimateOptions {
                propagation: PropagationConfig::relaxed(),
                ..Default::default()
            },
        };
        vec![
            HeuristicSpec::lex(),
            HeuristicSpec { var_rule: VarRule::FirstFail, ..HeuristicSpec::lex() },
            HeuristicSpec { var_rule: VarRule::Brelaz, ..HeuristicSpec::lex() },
            HeuristicSpec { var_rule: VarRule::Random(3), value_rule: ValueRule::Random(4), beliefs: BeliefSource::None },
            HeuristicSpec { var_rule: VarRule::Lex, value_rule: ValueRule::MaxBelief, beliefs: BeliefSource::Static(pac) },
            HeuristicSpec { var_rule: VarRule::MaxBelief, value_rule: ValueRule::MaxBelief, beliefs: dynamic },
        ]
    }

    #[test]
    fn chain_is_backtrack_free() {
        let chain = chain_le_3();
        for spec in all_specs(&chain) {
            let r = solve(&chain, &spec, Limits::default()).unwrap();
            assert!(r.outcome.is_solution());
            assert_eq!(r.backtracks, 0, "{spec:?}");
        }
    }

    #[test]
    fn single_dead_end() {
        let dead = CspInstance::new(vec![1, 1], vec![(0, 1, AllowMatrix::empty(1, 1))]).unwrap();
        let r = solve(&dead, &HeuristicSpec::lex(), Limits::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Unsatisfiable);
        assert_eq!(r.backtracks, 1);
        assert_eq!(r.nodes, 2);
    }

    #[test]
    fn max_belief_requires_source() {
        let spec = HeuristicSpec { value_rule: ValueRule::MaxBelief, ..HeuristicSpec::lex() };
        assert!(matches!(solve(&chain_le_3(), &spec, Limits::default()), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn first_fail_examples() {
        // domain sizes 3, 1, 2
        let inst = CspInstance::new(vec![3, 1, 2], vec![]).unwrap();
        assert_eq!(first_fail_order(&inst, &[None, None, None]), Some(1));
        let eq = CspInstance::from_pairs(3, 2, &[]).unwrap();
        assert_eq!(first_fail_order(&eq, &[None, None, None]), Some(0));
        // assigning X0 = 1 leaves one consistent value for X1 in the chain
        let chain = chain_le_3();
        assert_eq!(first_fail_order(&chain, &[Some(1), None, None]), Some(1));
        let direct = (0..2).filter(|&v| chain.consistent_with(1, v, &[Some(1), None, None])).count();
        assert_eq!(direct, 1);
    }

    #[test]
    fn brelaz_examples() {
        let full = vec![(0, 0)];
        // star centred on 2
        let star = CspInstance::from_pairs(4, 1, &[(2, 0, full.clone()), (2, 1, full.clone()), (2, 3, full.clone())]).unwrap();
        assert_eq!(brelaz_order(&star, &[None; 4]), Some(2));
        assert_eq!(brelaz_order(&star, &[None, None, Some(0), None]), Some(0));
        let path = CspInstance::from_pairs(3, 1, &[(0, 1, full.clone()), (1, 2, full)]).unwrap();
        assert_eq!(brelaz_order(&path, &[Some(0), None, None]), Some(1));
    }

    #[test]
    fn max_belief_value_order() {
        assert_eq!(max_belief_values(&[0.2, 0.5, 0.0, 0.3]), vec![1, 3, 0, 2]);
        assert_eq!(max_belief_values(&[0.25; 4]), vec![0, 1, 2, 3]);
        assert_eq!(max_belief_values(&[0.0, 0.5, 0.5]), vec![1, 2, 0]);
    }

    #[test]
    fn limits() {
        let inst = complete(6, 4, |i, j| i != j);
        let r = solve(&inst, &HeuristicSpec::lex(), Limits { max_backtracks: Some(3), max_nodes: None }).unwrap();
        assert_eq!(r.outcome, Outcome::LimitReached);
        assert_eq!(r.backtracks, 4);
        let r = solve(&inst, &HeuristicSpec::lex(), Limits { max_backtracks: None, max_nodes: Some(5) }).unwrap();
        assert_eq!(r.outcome, Outcome::LimitReached);
    }

    #[test]
    fn verdicts_match_oracle() {
        for seed in 0..25 {
            let inst = generate(&GenSpec { n: 7, m: 3, p1: 0.6, p2: 0.35, seed }).unwrap();
            let sat = enumerate(&inst, None).is_satisfiable();
            for spec in all_specs(&inst) {
                let r = solve(&inst, &spec, Limits::default()).unwrap();
                assert_eq!(r.outcome.is_solution(), sat, "seed {seed} {spec:?}");
                let again = solve(&inst, &spec, Limits::default()).unwrap();
                assert_eq!(r, again);
            }
        }
    }

    #[test]
    fn peleg_on_chain_and_dead_instance() {
        let r = peleg_solve(&chain_le_3(), &PropagationConfig::default(), Limits::default()).unwrap();
        assert!(r.outcome.is_solution());
        assert_eq!(r.backtracks, 0);

        let dead = CspInstance::new(vec![2, 2], vec![(0, 1, AllowMatrix::empty(2, 2))]).unwrap();
        let r = peleg_solve(&dead, &PropagationConfig::default(), Limits::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Unsatisfiable);
    }

    #[test]
    fn decode_needs_indicators() {
        assert_eq!(decode_indicator(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-6), Some(vec![1, 0]));
        assert_eq!(decode_indicator(&[vec![0.5, 0.5]], 1e-6), None);
    }
}
