//! AC-3 arc consistency over a [`DomainSet`] overlay.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::csp::{CspInstance, Var};
use crate::error::{Error, Result};
use crate::generator::substream;

/// Live-value masks, one per variable. The instance itself is never mutated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DomainSet {
    live: Vec<Vec<bool>>,
}

impl DomainSet {
    /// Every value allowed by the instance's unary masks is live.
    pub fn full(inst: &CspInstance) -> Self {
        DomainSet {
            live: (0..inst.num_vars()).map(|x| inst.unary(x).to_vec()).collect(),
        }
    }

    pub fn from_masks(live: Vec<Vec<bool>>) -> Self {
        DomainSet { live }
    }

    pub fn live(&self, x: Var) -> &[bool] {
        &self.live[x]
    }

    pub fn is_live(&self, x: Var, i: usize) -> bool {
        self.live[x][i]
    }

    pub fn remove(&mut self, x: Var, i: usize) {
        self.live[x][i] = false;
    }

    pub fn size(&self, x: Var) -> usize {
        self.live[x].iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self, x: Var) -> bool {
        !self.live[x].iter().any(|&b| b)
    }

    pub fn values(&self, x: Var) -> impl Iterator<Item = usize> + '_ {
        self.live[x].iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.live
    }

    pub fn num_vars(&self) -> usize {
        self.live.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ac3Status {
    Consistent,
    /// The first variable whose domain was emptied.
    Wipeout(Var),
}

/// Order in which queued arcs are selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueDiscipline {
    #[default]
    Fifo,
    Lifo,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ac3Outcome {
    pub domains: DomainSet,
    pub status: Ac3Status,
    pub removals: usize,
    pub revisions: usize,
}

/// Removes from `D_i` every value without a live supporter in `D_j`.
/// Returns whether anything was removed.
pub fn revise(inst: &CspInstance, doms: &mut DomainSet, i: Var, j: Var) -> Result<bool> {
    let arc = inst.arc_between(i, j)?;
    let mut changed = false;
    for x in 0..inst.domain_size(i) {
        if doms.live[i][x] && !(0..inst.domain_size(j)).any(|y| doms.live[j][y] && arc.allows(x, y)) {
            doms.live[i][x] = false;
            changed = true;
        }
    }
    Ok(changed)
}

struct ArcQueue {
    items: VecDeque<(Var, Var)>,
    discipline: QueueDiscipline,
    rng: Option<ChaCha8Rng>,
}

impl ArcQueue {
    fn new(discipline: QueueDiscipline) -> Self {
        let rng = match discipline {
            QueueDiscipline::Random(seed) => Some(substream(seed, &[0xac3])),
            _ => None,
        };
        ArcQueue {
            items: VecDeque::new(),
            discipline,
            rng,
        }
    }

    fn push(&mut self, arc: (Var, Var)) {
        self.items.push_back(arc);
    }

    fn pop(&mut self) -> Option<(Var, Var)> {
        match self.discipline {
            QueueDiscipline::Fifo => self.items.pop_front(),
            QueueDiscipline::Lifo => self.items.pop_back(),
            QueueDiscipline::Random(_) => {
                if self.items.is_empty() {
                    return None;
                }
                let k = self.rng.as_mut().expect("seeded").gen_range(0..self.items.len());
                self.items.swap_remove_back(k)
            }
        }
    }
}

pub fn ac3(inst: &CspInstance, doms: DomainSet) -> Result<Ac3Outcome> {
    ac3_with(inst, doms, QueueDiscipline::Fifo)
}

pub fn ac3_with(inst: &CspInstance, mut doms: DomainSet, discipline: QueueDiscipline) -> Result<Ac3Outcome> {
    if doms.num_vars() != inst.num_vars() {
        return Err(Error::LengthMismatch {
            expected: inst.num_vars(),
            got: doms.num_vars(),
        });
    }
    for x in 0..inst.num_vars() {
        if doms.live[x].len() != inst.domain_size(x) {
            return Err(Error::LengthMismatch {
                expected: inst.domain_size(x),
                got: doms.live[x].len(),
            });
        }
    }
    let before: usize = (0..inst.num_vars()).map(|x| doms.size(x)).sum();
    let finish = |doms: DomainSet, status, revisions| {
        let after: usize = (0..inst.num_vars()).map(|x| doms.size(x)).sum();
        Ok(Ac3Outcome {
            domains: doms,
            status,
            removals: before - after,
            revisions,
        })
    };
    if let Some(x) = (0..inst.num_vars()).find(|&x| doms.is_empty(x)) {
        return finish(doms, Ac3Status::Wipeout(x), 0);
    }

    let n = inst.num_vars();
    // queue membership, keyed by (variable, position in its adjacency list)
    let mut queued: Vec<Vec<bool>> = (0..n).map(|x| vec![false; inst.degree(x)]).collect();
    let mut queue = ArcQueue::new(discipline);
    for x in 0..n {
        for (p, &(y, _)) in inst.adjacent(x).iter().enumerate() {
            queued[x][p] = true;
            queue.push((x, y));
        }
    }
    let position = |x: Var, y: Var| {
        inst.adjacent(x)
            .binary_search_by_key(&y, |&(v, _)| v)
            .expect("arc endpoints are adjacent")
    };

    let mut revisions = 0;
    while let Some((k, m)) = queue.pop() {
        queued[k][position(k, m)] = false;
        revisions += 1;
        if revise(inst, &mut doms, k, m)? {
            if doms.is_empty(k) {
                return finish(doms, Ac3Status::Wipeout(k), revisions);
            }
            for &(i, _) in inst.adjacent(k) {
                if i != m {
                    let p = position(i, k);
                    if !queued[i][p] {
                        queued[i][p] = true;
                        queue.push((i, k));
                    }
                }
            }
        }
    }
    finish(doms, Ac3Status::Consistent, revisions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::fixtures::*;
    use crate::csp::AllowMatrix;
    use crate::generator::{generate, GenSpec};

    /// Direct support check per value, independent of `revise`.
    fn supported(inst: &CspInstance, doms: &DomainSet, i: Var, j: Var, x: usize) -> bool {
        let arc = inst.arc_between(i, j).unwrap();
        doms.values(j).any(|y| arc.allows(x, y))
    }

    /// Fixpoint by repeated full sweeps over all directed arcs.
    fn sweep_fixpoint(inst: &CspInstance) -> Option<DomainSet> {
        let mut doms = DomainSet::full(inst);
        loop {
            let mut changed = false;
            for e in inst.edges() {
                for (i, j) in [(e.x, e.y), (e.y, e.x)] {
                    for x in 0..inst.domain_size(i) {
                        if doms.is_live(i, x) && !supported(inst, &doms, i, j, x) {
                            doms.remove(i, x);
                            changed = true;
                        }
                    }
                }
            }
            if (0..inst.num_vars()).any(|x| doms.is_empty(x)) {
                return None;
            }
            if !changed {
                return Some(doms);
            }
        }
    }

    #[test]
    fn revise_less_than() {
        let inst = lt_chain();
        let mut doms = DomainSet::full(&inst);
        assert!(revise(&inst, &mut doms, 0, 1).unwrap());
        assert_eq!(doms.live(0), &[true, true, false]);
        assert_eq!(doms.live(1), &[true, true, true]);
        for x in doms.values(0).collect::<Vec<_>>() {
            assert!(supported(&inst, &doms, 0, 1, x));
        }
    }

    #[test]
    fn revise_edge_cases() {
        let inst = complete(2, 3, |_, _| true);
        let mut doms = DomainSet::full(&inst);
        assert!(!revise(&inst, &mut doms, 0, 1).unwrap());
        assert_eq!(doms, DomainSet::full(&inst));

        doms.live[1] = vec![false; 3];
        assert!(revise(&inst, &mut doms, 0, 1).unwrap());
        assert!(doms.is_empty(0));

        let chain = chain_le_3();
        let mut doms = DomainSet::full(&chain);
        assert_eq!(revise(&chain, &mut doms, 0, 2), Err(Error::NoSuchEdge(0, 2)));
    }

    #[test]
    fn ac3_on_lt_chain() {
        let inst = lt_chain();
        let out = ac3(&inst, DomainSet::full(&inst)).unwrap();
        assert_eq!(out.status, Ac3Status::Consistent);
        assert_eq!(out.domains.values(0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(out.domains.values(1).collect::<Vec<_>>(), vec![1]);
        assert_eq!(out.domains.values(2).collect::<Vec<_>>(), vec![2]);
        assert_eq!(Some(out.domains), sweep_fixpoint(&inst));
    }

    #[test]
    fn ac3_trivial_cases() {
        let inst = complete(4, 3, |_, _| true);
        let out = ac3(&inst, DomainSet::full(&inst)).unwrap();
        assert_eq!(out.status, Ac3Status::Consistent);
        assert_eq!(out.removals, 0);

        let dead = CspInstance::new(vec![2, 2], vec![(0, 1, AllowMatrix::empty(2, 2))]).unwrap();
        let out = ac3(&dead, DomainSet::full(&dead)).unwrap();
        assert_eq!(out.status, Ac3Status::Wipeout(0));
    }

    #[test]
    fn fixpoint_is_sound_and_order_independent() {
        for seed in 0..60 {
            let inst = generate(&GenSpec { n: 8, m: 4, p1: 0.5, p2: 0.45, seed }).unwrap();
            let fifo = ac3(&inst, DomainSet::full(&inst)).unwrap();
            let expected = sweep_fixpoint(&inst);
            match fifo.status {
                Ac3Status::Consistent => {
                    assert_eq!(Some(fifo.domains.clone()), expected);
                    for e in inst.edges() {
                        let mut d = fifo.domains.clone();
                        assert!(!revise(&inst, &mut d, e.x, e.y).unwrap());
                        assert!(!revise(&inst, &mut d, e.y, e.x).unwrap());
                    }
                }
                Ac3Status::Wipeout(_) => assert_eq!(expected, None),
            }
            for q in [QueueDiscipline::Lifo, QueueDiscipline::Random(seed)] {
                let other = ac3_with(&inst, DomainSet::full(&inst), q).unwrap();
                assert_eq!(
                    matches!(other.status, Ac3Status::Consistent),
                    matches!(fifo.status, Ac3Status::Consistent)
                );
                if fifo.status == Ac3Status::Consistent {
                    assert_eq!(other.domains, fifo.domains);
                }
            }
        }
    }

    #[test]
    fn respects_unary_masks() {
        let inst = chain_le_3().condition(&[(2, 0)]).unwrap();
        let out = ac3(&inst, DomainSet::full(&inst)).unwrap();
        assert_eq!(out.status, Ac3Status::Consistent);
        for x in 0..3 {
            assert_eq!(out.domains.values(x).collect::<Vec<_>>(), vec![0]);
        }
    }
}
