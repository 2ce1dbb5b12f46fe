//! Weight-level interventions on detected modules and the action statistics
//! of the resulting greedy policy.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::env::{axis_groups, group_list, AxisGroup, Cause, EnvConfig, EnvState};
use crate::mlp::{ForwardCache, NeuronId, SpatialMlp};
use crate::modules::Partition;
use crate::ppo::{episode_seed, policy};
use crate::{Error, Result};

pub const SATURATION: f64 = -50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Saturate,
    Negate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Saturate => "saturate",
            Mode::Negate => "negate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Mode::Saturate, Mode::Negate].into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterventionSpec {
    pub community: usize,
    pub mode: Mode,
    pub saturation: f64,
    /// Also target weights with only one endpoint in the community.
    pub incident: bool,
}

impl InterventionSpec {
    pub fn new(community: usize, mode: Mode) -> Self {
        Self { community, mode, saturation: SATURATION, incident: false }
    }
}

/// Copy of `net` with the spec's parameters edited: live weights inside the
/// community (or touching it, with `incident`) and the biases of its
/// non-input neurons.
pub fn apply_intervention(net: &SpatialMlp, partition: &Partition, spec: &InterventionSpec) -> Result<SpatialMlp> {
    if spec.community >= partition.community_count() {
        return Err(Error::UnknownCommunity(spec.community));
    }
    let inside = |id: NeuronId| partition.label_of(id) == Some(spec.community);
    let edit = |v: f64| match spec.mode {
        Mode::Saturate => spec.saturation,
        Mode::Negate => -v,
    };
    let mut out = net.clone();
    let mut touched = 0usize;
    for l in 0..net.depth() {
        let cols = net.sizes()[l + 1];
        for (idx, &w) in net.weights(l).iter().enumerate() {
            let (i, j) = (idx / cols, idx % cols);
            if !net.is_weight_live(l, i, j) {
                continue;
            }
            let (a, b) = (inside(NeuronId::new(l, i)), inside(NeuronId::new(l + 1, j)));
            if (a && b) || (spec.incident && (a || b)) {
                out.set_weight(l, i, j, edit(w));
                touched += 1;
            }
        }
    }
    for id in partition.members(spec.community) {
        if id.layer > 0 && net.is_neuron_live(id) {
            out.set_bias(id, edit(net.biases(id.layer)[id.index]));
            touched += 1;
        }
    }
    if touched == 0 {
        return Err(Error::EmptyTarget);
    }
    Ok(out)
}

/// Raw counts from greedy episodes; merge tallies of disjoint episode
/// ranges in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTally {
    /// Per action: `[failure, success, continue]`.
    pub outcomes: Vec<[u64; 3]>,
    pub episodes: usize,
    pub return_sum: f64,
}

impl ActionTally {
    pub fn new(actions: usize) -> Self {
        Self { outcomes: vec![[0; 3]; actions], episodes: 0, return_sum: 0.0 }
    }

    pub fn merge(&mut self, other: &ActionTally) {
        for (a, b) in self.outcomes.iter_mut().zip(&other.outcomes) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
        self.episodes += other.episodes;
        self.return_sum += other.return_sum;
    }
}

/// Runs episodes `range` of the seeded evaluation sequence. Only the last
/// action of an episode is a success (goal reached) or failure (any other
/// ending); every earlier action is a continuation.
pub fn tally_episodes(net: &SpatialMlp, env: &EnvConfig, range: Range<usize>, seed: u64) -> Result<ActionTally> {
    let mut tally = ActionTally::new(env.action_count());
    let mut cache = ForwardCache::new(net);
    let mut obs = Vec::new();
    for i in range {
        let mut state = EnvState::reset(env, episode_seed(seed, i));
        loop {
            state.observe_into(&mut obs);
            net.forward_cached(&obs, &mut cache)?;
            let a = policy::argmax(cache.logits());
            let out = state.step(a)?;
            tally.return_sum += out.reward;
            let slot = match (out.done, out.cause) {
                (false, _) => 2,
                (true, Cause::Goal) => 1,
                (true, _) => 0,
            };
            tally.outcomes[a][slot] += 1;
            if out.done {
                break;
            }
        }
        tally.episodes += 1;
    }
    Ok(tally)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub group: AxisGroup,
    pub actions: u64,
    pub freq_pct: f64,
    /// Outcome shares of this group's actions; all 0 when it never acted.
    pub failure_pct: f64,
    pub success_pct: f64,
    pub continue_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionReport {
    pub groups: Vec<GroupStats>,
    pub mean_return: f64,
    pub episodes: usize,
}

impl InterventionReport {
    pub fn from_tally(env: &EnvConfig, tally: &ActionTally) -> Self {
        let groups_of = axis_groups(env.kind);
        let total: u64 = tally.outcomes.iter().flatten().sum();
        let groups = group_list(env.kind)
            .into_iter()
            .map(|g| {
                let mut c = [0u64; 3];
                for (a, o) in tally.outcomes.iter().enumerate() {
                    if groups_of[a] == g {
                        for k in 0..3 {
                            c[k] += o[k];
                        }
                    }
                }
                let n: u64 = c.iter().sum();
                let pct = |x: u64, of: u64| if of == 0 { 0.0 } else { 100.0 * x as f64 / of as f64 };
                GroupStats {
                    group: g,
                    actions: n,
                    freq_pct: pct(n, total),
                    failure_pct: pct(c[0], n),
                    success_pct: pct(c[1], n),
                    continue_pct: pct(c[2], n),
                }
            })
            .collect();
        let mean_return = if tally.episodes == 0 { 0.0 } else { tally.return_sum / tally.episodes as f64 };
        Self { groups, mean_return, episodes: tally.episodes }
    }

    pub fn group(&self, g: AxisGroup) -> Option<&GroupStats> {
        self.groups.iter().find(|s| s.group == g)
    }
}

pub fn run_intervention_eval(
    net: &SpatialMlp,
    env: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<InterventionReport> {
    let tally = tally_episodes(net, env, 0..episodes, seed)?;
    Ok(InterventionReport::from_tally(env, &tally))
}

/// One row of an intervention comparison; `None` marks the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionRow {
    pub target: Option<(usize, Mode)>,
    pub report: InterventionReport,
}

/// Every intervention to run for a comparison: baseline first, then
/// saturate and negate for each community.
pub fn comparison_plan(partition: &Partition, incident: bool) -> Vec<Option<InterventionSpec>> {
    let mut plan = vec![None];
    for c in 0..partition.community_count() {
        for mode in [Mode::Saturate, Mode::Negate] {
            plan.push(Some(InterventionSpec { incident, ..InterventionSpec::new(c, mode) }));
        }
    }
    plan
}

pub fn run_plan_entry(
    net: &SpatialMlp,
    partition: &Partition,
    spec: Option<&InterventionSpec>,
    env: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<InterventionRow> {
    let edited;
    let target = match spec {
        Some(s) => {
            edited = apply_intervention(net, partition, s)?;
            &edited
        }
        None => net,
    };
    Ok(InterventionRow {
        target: spec.map(|s| (s.community, s.mode)),
        report: run_intervention_eval(target, env, episodes, seed)?,
    })
}

/// Baseline plus saturation and negation of every community, all evaluated
/// on the same episode seeds.
pub fn compare_interventions(
    net: &SpatialMlp,
    partition: &Partition,
    env: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<InterventionRow>> {
    comparison_plan(partition, false)
        .iter()
        .map(|spec| run_plan_entry(net, partition, spec.as_ref(), env, episodes, seed))
        .collect()
}
