//! Probabilistic arc consistency: synchronous support/belief/message rounds.
//!
//! For a constrained pair `(X, Y)`:
//!
//! * the support `S_{X<-Y}(i) = sum_j C_XY(i, j) * M_{Y->X}(j)`, a vector over `D_X`;
//! * the belief `F_X(i) = alpha * prod_Y S_{X<-Y}(i)`, normalized to sum to one;
//! * the message `M_{X->Y}(i) = F_X(i) / S_{X<-Y}(i)` (zero where the support is zero).
//!
//! Messages start at one. All supports of a round are computed from the
//! previous round's messages, so the result does not depend on visiting order.
//! Sums run over ascending value index and products over ascending neighbor
//! index. On singly-connected instances the beliefs become the exact
//! solution frequencies after at most `diameter` rounds.

use crate::ac3::DomainSet;
use crate::csp::{CspInstance, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Solution-probability estimation.
    #[default]
    Standard,
    /// `(or, and)` instead of `(+, *)`; the fixpoint is arc consistency.
    Boolean,
    /// Peleg's relaxation: each new belief is also multiplied by the previous one.
    Peleg,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Boolean => "boolean",
            Mode::Peleg => "peleg",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" | "pac" => Ok(Mode::Standard),
            "boolean" => Ok(Mode::Boolean),
            "peleg" => Ok(Mode::Peleg),
            _ => Err(Error::InvalidConfig(format!("unknown propagation mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    /// Convergence threshold on `max_X sum_i (F_new(i) - F_old(i))^2`.
    pub epsilon: f64,
    pub max_iter: usize,
    pub mode: Mode,
    /// Consecutive rounds of period-2 behaviour before declaring oscillation.
    pub oscillation_window: usize,
    pub record_history: bool,
    /// A variable whose belief moved by at most `delta` (squared L2) keeps
    /// its previous outgoing messages. Zero recomputes every message.
    pub delta: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            epsilon: 1e-5,
            max_iter: 1000,
            mode: Mode::Standard,
            oscillation_window: 10,
            record_history: false,
            delta: 0.0,
        }
    }
}

impl PropagationConfig {
    /// The cheap budget used when beliefs are recomputed during search.
    pub fn relaxed() -> Self {
        PropagationConfig {
            epsilon: 0.1,
            max_iter: 50,
            ..Default::default()
        }
    }

    pub fn with_mode(self, mode: Mode) -> Self {
        PropagationConfig { mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidConfig(format!("delta must be non-negative, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// `F^(k)` was within epsilon of `F^(k-1)`.
    Converged(usize),
    MaxIterReached,
    /// Beliefs alternate with the given period.
    Oscillating(usize),
    Wipeout,
}

impl Status {
    pub fn is_converged(&self) -> bool {
        matches!(self, Status::Converged(_))
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Converged(k) => write!(f, "converged {k}"),
            Status::MaxIterReached => write!(f, "max-iter"),
            Status::Oscillating(p) => write!(f, "oscillating {p}"),
            Status::Wipeout => write!(f, "wipeout"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub k: usize,
    /// `residual(F^(k), F^(k-1))`.
    pub residual: Option<f64>,
    /// `residual(F^(k), F^(k-2))`.
    pub residual_two_step: Option<f64>,
    /// Smallest unnormalized belief mass of the round.
    pub min_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub status: Status,
    pub mode: Mode,
    pub beliefs: Vec<Vec<f64>>,
    /// Beliefs of the round before the last one (the other pole when oscillating).
    pub previous: Vec<Vec<f64>>,
    /// Index `k` of the final belief state.
    pub iterations: usize,
    pub history: Option<Vec<RoundRecord>>,
    /// Smallest unnormalized belief mass seen during the run.
    pub min_mass: f64,
    /// The first wiped-out variable when the status is `Wipeout`.
    pub wiped: Option<Var>,
}

/// `S(i) = sum_j C_XY(i, j) * M(j)` for the support of `x` from neighbor `y`,
/// where `message` is indexed by `y`'s values.
pub fn support_sum(inst: &CspInstance, x: Var, y: Var, message: &[f64], mode: Mode) -> Result<Vec<f64>> {
    let arc = inst.arc_between(x, y)?;
    if message.len() != arc.cols() {
        return Err(Error::LengthMismatch {
            expected: arc.cols(),
            got: message.len(),
        });
    }
    Ok((0..arc.rows())
        .map(|i| {
            let s: f64 = (0..arc.cols()).filter(|&j| arc.allows(i, j)).map(|j| message[j]).sum();
            match mode {
                Mode::Boolean => indicator(s > 0.0),
                _ => s,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefUpdate {
    pub belief: Vec<f64>,
    pub wiped: bool,
    /// Unnormalized mass before normalization.
    pub mass: f64,
}

/// Combines the supports of one variable into its new belief. `unary` masks
/// disallowed values; `prior` multiplies in the previous belief (Peleg mode).
/// With no supports the result is uniform over the unary mask.
pub fn belief_update(unary: &[bool], supports: &[&[f64]], prior: Option<&[f64]>, mode: Mode) -> Result<BeliefUpdate> {
    let m = unary.len();
    for s in supports.iter().copied().chain(prior) {
        if s.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: s.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
    }
    let mut belief = vec![0.0; m];
    for (i, b) in belief.iter_mut().enumerate() {
        if !unary[i] {
            continue;
        }
        let mut p = prior.map_or(1.0, |f| f[i]);
        for s in supports {
            p *= s[i];
        }
        *b = match mode {
            Mode::Boolean => indicator(p > 0.0),
            _ => p,
        };
    }
    let mass: f64 = belief.iter().sum();
    if !mass.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if mass == 0.0 {
        return Ok(BeliefUpdate { belief, wiped: true, mass });
    }
    if mode != Mode::Boolean {
        for b in &mut belief {
            *b /= mass;
        }
    }
    Ok(BeliefUpdate { belief, wiped: false, mass })
}

/// `M(i) = F(i) / S(i)` where `S(i) > 0`, else zero.
pub fn message_update(belief: &[f64], support: &[f64]) -> Result<Vec<f64>> {
    if belief.len() != support.len() {
        return Err(Error::LengthMismatch {
            expected: belief.len(),
            got: support.len(),
        });
    }
    belief
        .iter()
        .zip(support)
        .map(|(&f, &s)| {
            if !f.is_finite() || !s.is_finite() {
                Err(Error::NonFiniteInput)
            } else if s > 0.0 {
                Ok(f / s)
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// Per-variable squared L2 distance and its maximum.
pub fn residual(new: &[Vec<f64>], old: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if new.len() != old.len() {
        return Err(Error::LengthMismatch {
            expected: old.len(),
            got: new.len(),
        });
    }
    let mut per_var = Vec::with_capacity(new.len());
    for (a, b) in new.iter().zip(old) {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: b.len(),
                got: a.len(),
            });
        }
        per_var.push(squared_distance(a, b));
    }
    let max = per_var.iter().copied().fold(0.0, f64::max);
    Ok((per_var, max))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn max_residual(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| squared_distance(x, y)).fold(0.0, f64::max)
}

/// Rescaling step for long products.
const TINY: f64 = 1e-150;

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Support sets of a Boolean-mode run; everything is dead after a wipeout.
pub fn boolean_support_sets(result: &PropagationResult) -> DomainSet {
    let wiped = result.status == Status::Wipeout;
    DomainSet::from_masks(
        result
            .beliefs
            .iter()
            .map(|f| f.iter().map(|&v| !wiped && v > 0.0).collect())
            .collect(),
    )
}

/// Directed-arc layout shared by every round. Arc `offsets[x] + p` is the
/// `p`-th neighbor of `x` in ascending order.
#[derive(Debug, Clone)]
struct Topology {
    offsets: Vec<usize>,
    /// Variable at the near end of each arc.
    owner: Vec<Var>,
    /// The same edge seen from the other endpoint.
    reverse: Vec<usize>,
    /// Row-major allow bits seen from `owner`.
    allow: Vec<Vec<bool>>,
    /// Domain size of the far endpoint.
    far_size: Vec<usize>,
}

impl Topology {
    fn new(inst: &CspInstance) -> Self {
        let n = inst.num_vars();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        for x in 0..n {
            offsets.push(total);
            total += inst.degree(x);
        }
        offsets.push(total);
        let mut owner = Vec::with_capacity(total);
        let mut reverse = Vec::with_capacity(total);
        let mut allow = Vec::with_capacity(total);
        let mut far_size = Vec::with_capacity(total);
        for x in 0..n {
            for &(y, e) in inst.adjacent(x) {
                let q = inst
                    .adjacent(y)
                    .binary_search_by_key(&x, |&(v, _)| v)
                    .expect("adjacency is symmetric");
                owner.push(x);
                reverse.push(offsets[y] + q);
                allow.push(inst.arc(x, e).to_matrix_bits());
                far_size.push(inst.domain_size(y));
            }
        }
        Topology {
            offsets,
            owner,
            reverse,
            allow,
            far_size,
        }
    }

    fn arcs_of(&self, x: Var) -> std::ops::Range<usize> {
        self.offsets[x]..self.offsets[x + 1]
    }

    fn num_arcs(&self) -> usize {
        self.owner.len()
    }
}

impl crate::csp::ArcView<'_> {
    fn to_matrix_bits(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                bits.push(self.allows(i, j));
            }
        }
        bits
    }
}

/// Mutable state of one propagation run.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    /// Current beliefs (the prior before the first round).
    pub beliefs: Vec<Vec<f64>>,
    /// Per arc `(x, y)`: the message `x` sends to `y`, over `D_x`.
    messages: Vec<Vec<f64>>,
    /// Per arc `(x, y)`: the support of `x` from `y`, over `D_x`.
    supports: Vec<Vec<f64>>,
    /// Index of the current beliefs; `None` before the first round.
    k: Option<usize>,
}

impl BeliefState {
    pub fn iteration(&self) -> Option<usize> {
        self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub wiped: Option<Var>,
    pub min_mass: f64,
}

/// A propagation engine bound to one instance.
pub struct Propagator<'a> {
    inst: &'a CspInstance,
    cfg: PropagationConfig,
    topo: Topology,
}

impl<'a> Propagator<'a> {
    pub fn new(inst: &'a CspInstance, cfg: PropagationConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Propagator {
            inst,
            cfg,
            topo: Topology::new(inst),
        })
    }

    pub fn config(&self) -> &PropagationConfig {
        &self.cfg
    }

    /// Unit messages and uniform prior beliefs.
    pub fn initial_state(&self) -> BeliefState {
        let n = self.inst.num_vars();
        let beliefs = (0..n)
            .map(|x| {
                let u = self.inst.unary(x);
                let live = u.iter().filter(|&&b| b).count().max(1) as f64;
                u.iter().map(|&b| indicator(b) / live).collect()
            })
            .collect();
        let messages = (0..self.topo.num_arcs())
            .map(|a| vec![1.0; self.inst.domain_size(self.topo.owner[a])])
            .collect();
        let supports = (0..self.topo.num_arcs())
            .map(|a| vec![0.0; self.inst.domain_size(self.topo.owner[a])])
            .collect();
        BeliefState {
            beliefs,
            messages,
            supports,
            k: None,
        }
    }

    /// A state holding the given beliefs, with each variable sending its
    /// belief as its message. Its index is 0.
    pub fn state_from_beliefs(&self, beliefs: Vec<Vec<f64>>) -> Result<BeliefState> {
        if beliefs.len() != self.inst.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.inst.num_vars(),
                got: beliefs.len(),
            });
        }
        for (x, f) in beliefs.iter().enumerate() {
            if f.len() != self.inst.domain_size(x) {
                return Err(Error::LengthMismatch {
                    expected: self.inst.domain_size(x),
                    got: f.len(),
                });
            }
        }
        let mut state = self.initial_state();
        for a in 0..self.topo.num_arcs() {
            state.messages[a] = beliefs[self.topo.owner[a]].clone();
        }
        state.beliefs = beliefs;
        state.k = Some(0);
        Ok(state)
    }

    /// Message `sender` currently sends to `receiver`, over the sender's domain.
    pub fn message<'s>(&self, state: &'s BeliefState, sender: Var, receiver: Var) -> Result<&'s [f64]> {
        Ok(&state.messages[self.arc_index(sender, receiver)?])
    }

    pub fn scale_message(&self, state: &mut BeliefState, sender: Var, receiver: Var, factor: f64) -> Result<()> {
        let a = self.arc_index(sender, receiver)?;
        for v in &mut state.messages[a] {
            *v *= factor;
        }
        Ok(())
    }

    fn arc_index(&self, x: Var, y: Var) -> Result<usize> {
        self.inst.check_var(x)?;
        self.inst.check_var(y)?;
        self.inst
            .adjacent(x)
            .binary_search_by_key(&y, |&(v, _)| v)
            .map(|p| self.topo.offsets[x] + p)
            .map_err(|_| Error::NoSuchEdge(x, y))
    }

    /// One synchronous round: supports from the current messages, beliefs
    /// from the supports, then new messages.
    pub fn round(&self, state: &mut BeliefState) -> Result<RoundOutcome> {
        let mode = self.cfg.mode;
        let topo = &self.topo;
        for a in 0..topo.num_arcs() {
            let incoming = &state.messages[topo.reverse[a]];
            let cols = topo.far_size[a];
            let bits = &topo.allow[a];
            let support = &mut state.supports[a];
            for (i, s) in support.iter_mut().enumerate() {
                let row = &bits[i * cols..(i + 1) * cols];
                let mut sum = 0.0;
                for (j, &ok) in row.iter().enumerate() {
                    if ok {
                        sum += incoming[j];
                    }
                }
                *s = match mode {
                    Mode::Boolean => indicator(sum > 0.0),
                    _ => sum,
                };
            }
        }

        let n = self.inst.num_vars();
        let k = state.k.map_or(0, |k| k + 1);
        let mut wiped = None;
        let mut min_mass = f64::INFINITY;
        let mut new_beliefs = Vec::with_capacity(n);
        for x in 0..n {
            let supports: Vec<&[f64]> = topo.arcs_of(x).map(|a| state.supports[a].as_slice()).collect();
            let prior = (mode == Mode::Peleg).then(|| state.beliefs[x].as_slice());
            let update = belief_update(self.inst.unary(x), &supports, prior, mode).map_err(|_| Error::NonFiniteState(k))?;
            min_mass = min_mass.min(update.mass);
            if update.wiped && wiped.is_none() {
                wiped = Some(x);
            }
            new_beliefs.push(update.belief);
        }

        for x in 0..n {
            let send = self.cfg.delta <= 0.0
                || state.k.is_none()
                || squared_distance(&new_beliefs[x], &state.beliefs[x]) > self.cfg.delta;
            if !send {
                continue;
            }
            let unary = self.inst.unary(x);
            let prior = (mode == Mode::Peleg).then(|| state.beliefs[x].as_slice());
            for a in topo.arcs_of(x) {
                // F(i) / S(i) up to a constant, formed as the product of the
                // other supports so that tiny supports cannot overflow it
                let mut msg = vec![0.0; unary.len()];
                let mut scale = vec![0i32; unary.len()];
                for i in 0..unary.len() {
                    if !unary[i] || state.supports[a][i] <= 0.0 {
                        continue;
                    }
                    let (mut p, mut e) = (prior.map_or(1.0, |f| f[i]), 0);
                    for b in topo.arcs_of(x).filter(|&b| b != a) {
                        p *= state.supports[b][i];
                        if p != 0.0 && p < TINY {
                            p /= TINY;
                            e -= 1;
                        }
                    }
                    msg[i] = p;
                    scale[i] = e;
                }
                let top = scale.iter().zip(&msg).filter(|(_, &p)| p > 0.0).map(|(&e, _)| e).max();
                if let Some(top) = top {
                    for (p, &e) in msg.iter_mut().zip(&scale).filter(|(p, _)| **p > 0.0) {
                        *p *= TINY.powi(top - e);
                    }
                }
                let total: f64 = msg.iter().sum();
                if !total.is_finite() {
                    return Err(Error::NonFiniteState(k));
                }
                match mode {
                    Mode::Boolean => msg.iter_mut().for_each(|p| *p = indicator(*p > 0.0)),
                    _ if total > 0.0 => msg.iter_mut().for_each(|p| *p /= total),
                    _ => {}
                }
                state.messages[a] = msg;
            }
        }
        state.beliefs = new_beliefs;
        state.k = Some(k);
        Ok(RoundOutcome { wiped, min_mass })
    }

    /// Iterates rounds from `state` until convergence, oscillation, wipeout
    /// or the iteration cap.
    pub fn run(&self, mut state: BeliefState) -> Result<PropagationResult> {
        let cfg = &self.cfg;
        let mut history = cfg.record_history.then(Vec::new);
        let mut min_mass = f64::INFINITY;
        let fresh = state.k.is_none();

        let finish = |status, state: BeliefState, previous, history, min_mass, wiped| PropagationResult {
            status,
            mode: cfg.mode,
            iterations: state.k.unwrap_or(0),
            beliefs: state.beliefs,
            previous,
            history,
            min_mass,
            wiped,
        };

        if fresh {
            let prior = state.beliefs.clone();
            let out = self.round(&mut state)?;
            min_mass = min_mass.min(out.min_mass);
            if let Some(h) = history.as_mut() {
                h.push(RoundRecord {
                    k: 0,
                    residual: None,
                    residual_two_step: None,
                    min_mass: out.min_mass,
                });
            }
            if out.wiped.is_some() {
                return Ok(finish(Status::Wipeout, state, prior, history, min_mass, out.wiped));
            }
        }

        // beliefs two rounds back, once they exist
        let mut older: Option<Vec<Vec<f64>>> = None;
        let mut period_two_streak = 0;
        loop {
            let k = state.k.expect("at least one round completed");
            if k >= cfg.max_iter {
                let previous = older.unwrap_or_else(|| state.beliefs.clone());
                return Ok(finish(Status::MaxIterReached, state, previous, history, min_mass, None));
            }
            let last = state.beliefs.clone();
            let out = self.round(&mut state)?;
            min_mass = min_mass.min(out.min_mass);
            let r1 = max_residual(&state.beliefs, &last);
            let r2 = older.as_ref().map(|o| max_residual(&state.beliefs, o));
            if let Some(h) = history.as_mut() {
                h.push(RoundRecord {
                    k: k + 1,
                    residual: Some(r1),
                    residual_two_step: r2,
                    min_mass: out.min_mass,
                });
            }
            if out.wiped.is_some() {
                return Ok(finish(Status::Wipeout, state, last, history, min_mass, out.wiped));
            }
            if !r1.is_finite() {
                return Err(Error::NonFiniteState(k + 1));
            }
            if r1 <= cfg.epsilon {
                return Ok(finish(Status::Converged(k + 1), state, last, history, min_mass, None));
            }
            match r2 {
                Some(r2) if r2 <= cfg.epsilon => period_two_streak += 1,
                _ => period_two_streak = 0,
            }
            if cfg.oscillation_window > 0 && period_two_streak >= cfg.oscillation_window {
                return Ok(finish(Status::Oscillating(2), state, last, history, min_mass, None));
            }
            older = Some(last);
        }
    }
}

/// Runs propagation from unit messages and a uniform prior.
pub fn propagate(inst: &CspInstance, cfg: &PropagationConfig) -> Result<PropagationResult> {
    let prop = Propagator::new(inst, *cfg)?;
    let state = prop.initial_state();
    prop.run(state)
}
