use thiserror::Error;

use crate::planner::{Plan, Planner};
use crate::pomdp::{expected_history, filter_belief, Belief, EmptyBelief, Observation};
use crate::strips::{ActionId, Domain, WorldState};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FfReplanError {
    #[error("no particle in the belief admits a plan")]
    Unsolvable,
    #[error(transparent)]
    EmptyBelief(#[from] EmptyBelief),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplanReason {
    /// No plan yet.
    Initial,
    /// The real observation differed from the expected one.
    Mismatch,
    /// The plan ran out without reaching the goal.
    Exhausted,
}

/// One planning event, tagged with the number of real steps taken so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplanEvent {
    pub step: usize,
    pub reason: ReplanReason,
}

/// FF-Replan for POMDPs: plan on the most probable particle and follow the
/// plan until the world disagrees with what that particle predicted.
pub struct FfReplan<'d> {
    domain: &'d Domain,
    planner: Planner<'d>,
    belief: Belief,
    plan: Vec<ActionId>,
    expected: Vec<Observation>,
    cursor: usize,
    stale: Option<ReplanReason>,
    steps: usize,
    events: Vec<ReplanEvent>,
    determinized: Option<WorldState>,
}

impl<'d> FfReplan<'d> {
    pub fn new(domain: &'d Domain, belief: Belief) -> Self {
        FfReplan {
            domain,
            planner: Planner::new(domain),
            belief,
            plan: Vec::new(),
            expected: Vec::new(),
            cursor: 0,
            stale: Some(ReplanReason::Initial),
            steps: 0,
            events: Vec::new(),
            determinized: None,
        }
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn events(&self) -> &[ReplanEvent] {
        &self.events
    }

    pub fn plans_generated(&self) -> u64 {
        self.events.len() as u64
    }

    /// The particle the current plan was made for.
    pub fn determinized(&self) -> Option<&WorldState> {
        self.determinized.as_ref()
    }

    /// Remaining actions of the current plan.
    pub fn remaining_plan(&self) -> &[ActionId] {
        &self.plan[self.cursor.min(self.plan.len())..]
    }

    /// Observation the current plan predicts for its next action.
    pub fn expected_observation(&self) -> Option<&Observation> {
        self.expected.get(self.cursor)
    }

    pub fn next_action(&mut self) -> Result<ActionId, FfReplanError> {
        if self.cursor >= self.plan.len() && self.stale.is_none() {
            self.stale = Some(ReplanReason::Exhausted);
        }
        if let Some(reason) = self.stale.take() {
            self.replan(reason)?;
        }
        Ok(self.plan[self.cursor])
    }

    fn replan(&mut self, reason: ReplanReason) -> Result<(), FfReplanError> {
        if self.belief.is_empty() {
            return Err(EmptyBelief.into());
        }
        self.events.push(ReplanEvent { step: self.steps, reason });
        let candidates: Vec<WorldState> = self.belief.ranked().into_iter().map(|(s, _)| s.clone()).collect();
        for particle in candidates {
            let Ok(plan) = self.planner.plan(&particle, self.domain.goal()) else { continue };
            if plan.is_empty() {
                continue;
            }
            let Ok(history) = expected_history(self.domain, &particle, &plan) else { continue };
            let Plan { actions } = plan;
            self.expected = history.steps().iter().map(|(_, o)| o.clone()).collect();
            self.plan = actions;
            self.cursor = 0;
            self.determinized = Some(particle);
            return Ok(());
        }
        self.stale = Some(reason);
        Err(FfReplanError::Unsolvable)
    }

    /// Records the real outcome of the action last returned by
    /// [`FfReplan::next_action`].
    pub fn observe(&mut self, action: ActionId, observation: &Observation) -> Result<(), EmptyBelief> {
        self.steps += 1;
        let on_plan = self.plan.get(self.cursor) == Some(&action);
        let matched = on_plan && self.expected.get(self.cursor) == Some(observation);
        if matched {
            self.cursor += 1;
        } else {
            self.stale = Some(ReplanReason::Mismatch);
        }
        match filter_belief(self.domain, &self.belief, action, observation) {
            Ok(b) => {
                self.belief = b;
                Ok(())
            }
            Err(e) => {
                self.belief = Belief::new();
                Err(e)
            }
        }
    }

    /// Replaces the belief (after recovery) and forces a replan.
    pub fn reset_belief(&mut self, belief: Belief) {
        self.belief = belief;
        self.stale = Some(ReplanReason::Mismatch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::execute;
    use crate::scenarios::build_fig1_micro;

    fn micro() -> Domain {
        Domain::new(&build_fig1_micro())
    }

    #[test]
    fn plans_for_the_modal_particle_and_replans_on_mismatch() {
        let d = micro();
        let mut ff = FfReplan::new(&d, Belief::enumerate(&d, 10).unwrap());
        let mut truth = d.world_with(&[d.cell_id("kitchen").unwrap()]);
        let mut steps = 0;
        while !d.goal_satisfied(&truth) {
            let a = ff.next_action().unwrap();
            let (next, o) = execute(&d, &truth, a).unwrap();
            truth = next;
            ff.observe(a, &o).unwrap();
            steps += 1;
        }
        // Walk to the bathroom (8), search (1), then the 5-step kitchen plan
        // from the bathroom: 8 moves back to living first.
        assert_eq!(steps, 8 + 1 + 8 + 5);
        let reasons: Vec<ReplanReason> = ff.events().iter().map(|e| e.reason).collect();
        assert_eq!(reasons, [ReplanReason::Initial, ReplanReason::Mismatch]);
        assert_eq!(ff.events()[1].step, 9);
        assert_eq!(ff.plans_generated(), 2);
        assert_eq!(ff.belief().distinct(), 1);
    }

    #[test]
    fn matching_observations_never_replan() {
        let d = micro();
        let mut ff = FfReplan::new(&d, Belief::enumerate(&d, 10).unwrap());
        let mut truth = d.world_with(&[d.cell_id("bathroom").unwrap()]);
        while !d.goal_satisfied(&truth) {
            let a = ff.next_action().unwrap();
            assert_eq!(Some(&a), ff.remaining_plan().first());
            let expected = ff.expected_observation().cloned().unwrap();
            let (next, o) = execute(&d, &truth, a).unwrap();
            assert_eq!(o, expected);
            truth = next;
            ff.observe(a, &o).unwrap();
        }
        assert_eq!(ff.plans_generated(), 1);
    }

    #[test]
    fn empty_beliefs_are_reported() {
        let d = micro();
        let mut ff = FfReplan::new(&d, Belief::new());
        assert_eq!(ff.next_action(), Err(FfReplanError::EmptyBelief(EmptyBelief)));
    }
}
