use crate::strips::{ActionId, AtomId, Domain, WorldState};

/// Per-step reward shaping.
///
/// The plan-seeded search uses a flat per-action cost. POMCP instead earns
/// a subgoal bonus whenever an uncertain entity is found or a landmark (a
/// goal atom) becomes true, plus a small bonus for every search.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardScheme {
    pub per_action: f64,
    pub find_bonus: f64,
    pub landmark_bonus: f64,
    pub search_bonus: f64,
    pub landmarks: Vec<AtomId>,
}

/// Landmarks already paid for in the current episode (bit `i` for
/// `landmarks[i]`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaidLandmarks(pub u64);

impl RewardScheme {
    pub fn constant(per_action: f64) -> Self {
        RewardScheme {
            per_action,
            find_bonus: 0.0,
            landmark_bonus: 0.0,
            search_bonus: 0.0,
            landmarks: Vec::new(),
        }
    }

    /// Shaped scheme with the domain's goal atoms as landmarks.
    pub fn shaped(domain: &Domain, subgoal: f64, search: f64) -> Self {
        assert!(domain.goal().len() <= 64, "at most 64 landmarks supported");
        RewardScheme {
            per_action: 0.0,
            find_bonus: subgoal,
            landmark_bonus: subgoal,
            search_bonus: search,
            landmarks: domain.goal().to_vec(),
        }
    }

    fn base(&self, domain: &Domain, prev: &WorldState, action: ActionId, next: &WorldState) -> f64 {
        let mut r = self.per_action;
        if domain.search_cell(action).is_some() {
            r += self.search_bonus;
        }
        if self.find_bonus != 0.0 {
            let found = (0..domain.entities().len())
                .filter(|e| prev.contains(domain.hidden_atom(*e)) && next.contains(domain.revealed_atom(*e)))
                .count();
            r += self.find_bonus * found as f64;
        }
        r
    }

    /// Reward for one transition, counting every landmark that becomes true.
    pub fn reward_of(&self, domain: &Domain, prev: &WorldState, action: ActionId, next: &WorldState) -> f64 {
        let newly = self
            .landmarks
            .iter()
            .filter(|l| !prev.contains(**l) && next.contains(**l))
            .count();
        self.base(domain, prev, action, next) + self.landmark_bonus * newly as f64
    }

    /// Like [`RewardScheme::reward_of`], but each landmark pays at most once
    /// per `paid` ledger.
    pub fn reward_tracked(
        &self,
        domain: &Domain,
        prev: &WorldState,
        action: ActionId,
        next: &WorldState,
        paid: &mut PaidLandmarks,
    ) -> f64 {
        let mut r = self.base(domain, prev, action, next);
        for (i, l) in self.landmarks.iter().enumerate() {
            let bit = 1u64 << i;
            if paid.0 & bit == 0 && !prev.contains(*l) && next.contains(*l) {
                paid.0 |= bit;
                r += self.landmark_bonus;
            }
        }
        r
    }

    /// Landmarks already true in `state`, which pay nothing when kept.
    pub fn already_paid(&self, state: &WorldState) -> PaidLandmarks {
        let mut paid = PaidLandmarks::default();
        for (i, l) in self.landmarks.iter().enumerate() {
            if state.contains(*l) {
                paid.0 |= 1 << i;
            }
        }
        paid
    }
}
