//! History tree arena: observation nodes (histories ending in an
//! observation) alternate with action nodes.

use std::fmt::Write as _;

use crate::pomdp::{Belief, Observation};
use crate::strips::{ActionId, Domain};

pub type ObsId = usize;
pub type ActId = usize;

#[derive(Clone, Debug)]
pub struct ObsNode {
    /// `N(h)`.
    pub visits: u64,
    /// `G(h)`: plans generated from this node.
    pub plans: u64,
    /// `V(h)`.
    pub value: f64,
    pub meaningful: bool,
    pub belief: Belief,
    /// Sorted by action id.
    pub children: Vec<ActId>,
    pub parent: Option<ActId>,
}

#[derive(Clone, Debug)]
pub struct ActNode {
    pub action: ActionId,
    pub visits: u64,
    pub value: f64,
    pub children: Vec<(Observation, ObsId)>,
    pub parent: ObsId,
}

#[derive(Clone, Debug)]
pub struct Tree {
    obs: Vec<ObsNode>,
    act: Vec<ActNode>,
    root: ObsId,
}

impl Tree {
    /// A single meaningful root holding `belief`.
    pub fn new(belief: Belief) -> Self {
        Tree {
            obs: vec![ObsNode {
                visits: 0,
                plans: 0,
                value: 0.0,
                meaningful: true,
                belief,
                children: Vec::new(),
                parent: None,
            }],
            act: Vec::new(),
            root: 0,
        }
    }

    pub fn root(&self) -> ObsId {
        self.root
    }

    pub fn obs(&self, id: ObsId) -> &ObsNode {
        &self.obs[id]
    }

    pub fn obs_mut(&mut self, id: ObsId) -> &mut ObsNode {
        &mut self.obs[id]
    }

    pub fn act(&self, id: ActId) -> &ActNode {
        &self.act[id]
    }

    pub fn act_mut(&mut self, id: ActId) -> &mut ActNode {
        &mut self.act[id]
    }

    pub fn obs_count(&self) -> usize {
        self.obs.len()
    }

    pub fn act_count(&self) -> usize {
        self.act.len()
    }

    pub fn child_action(&self, h: ObsId, action: ActionId) -> Option<ActId> {
        let children = &self.obs[h].children;
        children
            .binary_search_by_key(&action, |a| self.act[*a].action)
            .ok()
            .map(|i| children[i])
    }

    pub fn add_action(&mut self, h: ObsId, action: ActionId) -> ActId {
        let id = self.act.len();
        self.act.push(ActNode { action, visits: 0, value: 0.0, children: Vec::new(), parent: h });
        let pos = self.obs[h]
            .children
            .binary_search_by_key(&action, |a| self.act[*a].action)
            .expect_err("action child already present");
        self.obs[h].children.insert(pos, id);
        id
    }

    pub fn child_obs(&self, a: ActId, observation: &Observation) -> Option<ObsId> {
        self.act[a].children.iter().find(|(o, _)| o == observation).map(|(_, id)| *id)
    }

    /// Adds an empty observation child under `a`, initialized with
    /// [`Tree::approx`].
    pub fn add_obs(&mut self, a: ActId, observation: Observation, meaningful: bool) -> ObsId {
        let id = self.obs.len();
        self.obs.push(ObsNode {
            visits: 0,
            plans: 0,
            value: 0.0,
            meaningful,
            belief: Belief::new(),
            children: Vec::new(),
            parent: Some(a),
        });
        self.act[a].children.push((observation, id));
        self.obs[id].value = self.approx(id);
        id
    }

    /// Value estimate for a childless observation node: the mean value of
    /// its sibling observation nodes under the same action, or zero when it
    /// has none.
    pub fn approx(&self, node: ObsId) -> f64 {
        let Some(parent) = self.obs[node].parent else { return 0.0 };
        let (sum, n) = self.act[parent]
            .children
            .iter()
            .filter(|(_, id)| *id != node)
            .fold((0.0, 0usize), |(s, n), (_, id)| (s + self.obs[*id].value, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// `max_b V(hb)`, or `None` for a leaf.
    pub fn best_child_value(&self, h: ObsId) -> Option<f64> {
        self.obs[h].children.iter().map(|a| self.act[*a].value).reduce(f64::max)
    }

    /// Child action with maximal value; ties go to the canonically first
    /// action.
    pub fn best_action(&self, h: ObsId) -> Option<ActionId> {
        let mut best: Option<&ActNode> = None;
        for a in &self.obs[h].children {
            let node = &self.act[*a];
            if best.is_none_or(|b| node.value > b.value) {
                best = Some(node);
            }
        }
        best.map(|b| b.action)
    }

    /// Makes observation node `id` the root, dropping everything outside its
    /// subtree.
    pub fn promote(&mut self, id: ObsId) {
        let mut obs: Vec<ObsNode> = Vec::new();
        let mut act: Vec<ActNode> = Vec::new();
        // (old observation id, new parent action id, slot in its children)
        let mut stack = vec![(id, None::<(ActId, usize)>)];
        // Copy in depth-first order, remapping ids as we go.
        while let Some((old, parent)) = stack.pop() {
            let new_id = obs.len();
            let mut node = self.obs[old].clone();
            node.parent = parent.map(|(p, _)| p);
            let old_children = std::mem::take(&mut node.children);
            obs.push(node);
            if let Some((p, slot)) = parent {
                act[p].children[slot].1 = new_id;
            }
            for a_old in old_children {
                let a_new = act.len();
                let mut a_node = self.act[a_old].clone();
                a_node.parent = new_id;
                let grandchildren: Vec<ObsId> = a_node.children.iter().map(|(_, o)| *o).collect();
                act.push(a_node);
                obs[new_id].children.push(a_new);
                for (slot, g) in grandchildren.into_iter().enumerate().rev() {
                    stack.push((g, Some((a_new, slot))));
                }
            }
        }
        obs[0].meaningful = true;
        self.obs = obs;
        self.act = act;
        self.root = 0;
    }

    /// Checks the structural invariants of the tree and returns one message
    /// per violation:
    /// - every observation node with children has `V(h) = max_b V(hb)`;
    /// - meaningful nodes satisfy `G(h) <= k * N(h)^alpha + 1`;
    /// - non-meaningful nodes never generated a plan;
    /// - child beliefs never hold more particles than their parent.
    pub fn audit(&self, k: f64, alpha: f64) -> Vec<String> {
        let mut violations = Vec::new();
        for (id, node) in self.obs.iter().enumerate() {
            if let Some(best) = self.best_child_value(id) {
                if node.value != best {
                    violations.push(format!("obs {id}: V={} but max child V={best}", node.value));
                }
            }
            if node.meaningful {
                let bound = k * (node.visits as f64).powf(alpha) + 1.0;
                if node.plans as f64 > bound {
                    violations.push(format!("obs {id}: G={} exceeds {bound}", node.plans));
                }
            } else if node.plans > 0 {
                violations.push(format!("obs {id}: non-meaningful node generated {} plans", node.plans));
            }
            if node.plans > node.visits {
                violations.push(format!("obs {id}: G={} > N={}", node.plans, node.visits));
            }
            for a in &node.children {
                let held: u64 = self.act[*a].children.iter().map(|(_, o)| self.obs[*o].belief.len()).sum();
                if held > node.belief.len() {
                    violations.push(format!(
                        "act {a}: children hold {held} particles, parent {}",
                        node.belief.len()
                    ));
                }
            }
        }
        violations
    }

    /// Indented text snapshot with N/G/V/meaningful per node.
    pub fn dump(&self, domain: &Domain) -> String {
        let mut out = String::new();
        self.dump_obs(domain, self.root, "root", 0, &mut out);
        out
    }

    fn dump_obs(&self, domain: &Domain, id: ObsId, label: &str, depth: usize, out: &mut String) {
        let n = &self.obs[id];
        let _ = writeln!(
            out,
            "{:indent$}{label} N={} G={} V={:.6} M={} B={}",
            "",
            n.visits,
            n.plans,
            n.value,
            u8::from(n.meaningful),
            n.belief.len(),
            indent = depth * 2
        );
        for a in &n.children {
            let act = &self.act[*a];
            let _ = writeln!(
                out,
                "{:indent$}{} N={} V={:.6}",
                "",
                domain.action(act.action),
                act.visits,
                act.value,
                indent = depth * 2 + 2
            );
            for (o, child) in &act.children {
                self.dump_obs(domain, *child, &o.render(domain), depth + 2, out);
            }
        }
    }
}
