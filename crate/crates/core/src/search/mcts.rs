use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Incumbent, Observer, SearchConfig, SearchHistory, SearchOutcome};
use crate::design::{canonical_key, DesignGraph, DesignKey};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::grammar::{open_design, successor, successor_count, GenParams};

/// A construction prefix. The root's actions pick a palm layout from the
/// pool; every other node's actions finalize its next open finger.
struct Node {
    design: Option<DesignGraph>,
    /// Fingers already finalized.
    depth: usize,
    visits: u32,
    best: f64,
    children: Vec<usize>,
    untried: Vec<usize>,
}

impl Node {
    fn new<R: Rng + ?Sized>(design: Option<DesignGraph>, depth: usize, actions: usize, rng: &mut R) -> Node {
        let mut untried: Vec<usize> = (0..actions).collect();
        untried.shuffle(rng);
        Node { design, depth, visits: 0, best: f64::NEG_INFINITY, children: Vec::new(), untried }
    }

    fn is_terminal(&self) -> bool {
        self.design.as_ref().is_some_and(|d| self.depth == d.finger_count())
    }
}

struct Tree {
    nodes: Vec<Node>,
    by_key: HashMap<DesignKey, usize>,
    palms: Vec<DesignGraph>,
    options: usize,
}

impl Tree {
    fn child_design(&self, parent: usize, action: usize, gen: &GenParams) -> Result<DesignGraph> {
        let p = &self.nodes[parent];
        match &p.design {
            None => Ok(self.palms[action].clone()),
            Some(d) => successor(d, p.depth, action, gen),
        }
    }

    fn expand<R: Rng + ?Sized>(&mut self, parent: usize, action: usize, gen: &GenParams, rng: &mut R) -> Result<usize> {
        let design = self.child_design(parent, action, gen)?;
        let key = canonical_key(&design)?;
        let id = match self.by_key.get(&key) {
            Some(&id) => id,
            None => {
                let depth = design.fingers.iter().filter(|f| f.terminal).count();
                let actions = if depth == design.finger_count() { 0 } else { self.options };
                self.nodes.push(Node::new(Some(design), depth, actions, rng));
                self.by_key.insert(key, self.nodes.len() - 1);
                self.nodes.len() - 1
            }
        };
        if !self.nodes[parent].children.contains(&id) {
            self.nodes[parent].children.push(id);
        }
        Ok(id)
    }

    fn select(&self, node: usize, c: f64) -> usize {
        let n = &self.nodes[node];
        let ln_n = f64::from(n.visits.max(1)).ln();
        let uct = |id: usize| {
            let ch = &self.nodes[id];
            ch.best + c * (ln_n / f64::from(ch.visits.max(1))).sqrt()
        };
        let mut best = n.children[0];
        for &id in &n.children[1..] {
            if uct(id) > uct(best) {
                best = id;
            }
        }
        best
    }
}

fn rollout<R: Rng + ?Sized>(node: &Node, gen: &GenParams, options: usize, rng: &mut R) -> Result<DesignGraph> {
    let mut d = node.design.clone().expect("rollouts start below the root");
    for finger in node.depth..d.finger_count() {
        d = successor(&d, finger, rng.random_range(0..options), gen)?;
    }
    Ok(d)
}

pub fn mcts_run(config: &SearchConfig, gen: &GenParams, evaluator: &dyn Evaluator) -> Result<SearchOutcome> {
    mcts_run_observed(config, gen, evaluator, &mut |_| Ok(()))
}

/// UCT over the finger-by-finger construction process with uniform random
/// rollouts. Nodes are shared between prefixes with equal effective keys and
/// back up the maximum score seen below them.
pub fn mcts_run_observed(
    config: &SearchConfig,
    gen: &GenParams,
    evaluator: &dyn Evaluator,
    observer: &mut Observer,
) -> Result<SearchOutcome> {
    config.check()?;
    gen.check()?;
    let budget = config.budget();
    if budget == 0 {
        return Err(Error::EmptyBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let palms = (0..config.mcts_palms).map(|_| open_design(gen, &mut rng)).collect::<Result<Vec<_>>>()?;
    let root = Node::new(None, 0, palms.len(), &mut rng);
    let mut tree = Tree { nodes: vec![root], by_key: HashMap::new(), palms, options: successor_count(gen) };
    let mut incumbent = Incumbent::default();
    let mut history = SearchHistory::default();

    for eval in 0..budget {
        let mut path = vec![0];
        let mut node = 0;
        while tree.nodes[node].untried.is_empty() && !tree.nodes[node].children.is_empty() {
            node = tree.select(node, config.mcts_exploration);
            path.push(node);
        }
        if let Some(action) = tree.nodes[node].untried.pop() {
            node = tree.expand(node, action, gen, &mut rng)?;
            path.push(node);
        }
        let design = if tree.nodes[node].is_terminal() {
            tree.nodes[node].design.clone().expect("terminal nodes hold a design")
        } else {
            rollout(&tree.nodes[node], gen, tree.options, &mut rng)?
        };
        let score = evaluator.score(&design)?;
        incumbent.offer(&design, score);
        for &id in &path {
            let n = &mut tree.nodes[id];
            n.visits += 1;
            n.best = n.best.max(score);
        }
        if (eval + 1) % config.candidates == 0 {
            let record = incumbent.record(eval / config.candidates, None, None);
            observer(&record)?;
            history.records.push(record);
        }
    }
    log::debug!("mcts: {} nodes after {budget} evaluations", tree.nodes.len());
    incumbent.finish(history, None, None)
}
