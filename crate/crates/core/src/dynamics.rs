//! News exposure, reshare cascades and affect updates.
//!
//! One step of the process:
//!
//! 1. every delivery queued during the previous step is consumed; the
//!    receiver updates its affect and, if the item's slant matches its party
//!    and it has not reshared that item before, reshares with probability
//!    `p_r`. A reshare forwards the item along each out-edge independently
//!    with probability `p_re`, to be delivered in the next step;
//! 2. every agent independently meets a fresh item from the news sources with
//!    probability `p_e` (slant is a fair coin) and reacts the same way;
//! 3. the clock advances.

use fixedbitset::FixedBitSet;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Vertex};
use crate::metrics::{RunTimeSeries, Snapshot};
use crate::population::{AgentState, Party};
use crate::scalar::{fifty, hundred, Scalar};

/// How a single exposure moves the two thermometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Pro-attitudinal content raises in-party affect only; counter-attitudinal
    /// content lowers out-party affect only. Saturates at 100 and 0.
    #[default]
    Selective,
    /// Adds the increment to both thermometers, clamped to their ranges.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsParams<T> {
    /// Per-agent, per-step probability of a source exposure.
    pub p_e: f64,
    /// Reshare probability for slant-matched content.
    pub p_r: f64,
    /// Per-out-edge probability that a reshare reaches the follower.
    pub p_re: f64,
    /// Affective asymmetry, at least 1.
    pub alpha: T,
    #[serde(default)]
    pub rule: UpdateRule,
    /// Swap Left and Right on every source slant draw. Together with swapped
    /// party labels this yields the exact mirror image of a run.
    #[serde(default)]
    pub mirror_slants: bool,
}

impl<T: Scalar> DynamicsParams<T> {
    pub fn new(p_e: f64, p_r: f64, p_re: f64, alpha: T) -> Self {
        DynamicsParams {
            p_e,
            p_r,
            p_re,
            alpha,
            rule: UpdateRule::Selective,
            mirror_slants: false,
        }
    }

    /// Exposure 0.01, reshare 1, retweet exposure 0.5.
    pub fn with_alpha(alpha: T) -> Self {
        Self::new(0.01, 1.0, 0.5, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_e", self.p_e), ("p_r", self.p_r), ("p_re", self.p_re)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !self.alpha.is_finite() || self.alpha < T::one() {
            return Err(Error::Config(format!(
                "alpha must be a finite value >= 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NewsItem {
    pub id: u64,
    pub slant: Party,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PendingDelivery {
    pub item: NewsItem,
    pub target: Vertex,
}

/// Signed thermometer increment `alpha - 3 alpha |x - s|`: `+alpha` when the
/// slant matches the party, `-2 alpha` otherwise.
pub fn affect_delta<T: Scalar>(party: Party, slant: Party, alpha: T) -> T {
    let distance = T::from_u8(party.code().abs_diff(slant.code())).unwrap();
    alpha - T::from_u8(3).unwrap() * alpha * distance
}

pub fn apply_exposure<T: Scalar>(agent: AgentState<T>, slant: Party, params: &DynamicsParams<T>) -> AgentState<T> {
    let delta = affect_delta(agent.party, slant, params.alpha);
    let mut next = agent;
    match params.rule {
        UpdateRule::Selective => {
            if delta > T::zero() {
                next.ipa = (agent.ipa + delta).min(hundred());
            } else if delta < T::zero() {
                next.opa = (agent.opa + delta).max(T::zero());
            }
        }
        UpdateRule::Joint => {
            next.ipa = (agent.ipa + delta).max(fifty()).min(hundred());
            next.opa = (agent.opa + delta).max(T::zero()).min(fifty());
        }
    }
    next
}

/// Where this step's source exposures come from.
#[derive(Debug, Clone, Copy)]
pub enum Sources<'a> {
    /// Each agent is exposed with probability `p_e`, slant a fair coin.
    Random,
    /// Exactly these `(agent, slant)` exposures, in order; no random draws
    /// for exposure or slant.
    Scripted(&'a [(Vertex, Party)]),
}

/// What happened during one step, for inspection and tests.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepTrace {
    /// `(item id, receiver)` for every delivery consumed this step.
    pub delivered: Vec<(u64, Vertex)>,
    /// `(item id, agent)` for every fresh source exposure.
    pub exposed: Vec<(u64, Vertex)>,
    /// `(item id, agent)` for every reshare.
    pub reshared: Vec<(u64, Vertex)>,
}

/// Bernoulli trial on 32 random bits (probability resolution 2^-32).
/// Certain outcomes consume no randomness.
#[derive(Debug, Clone, Copy)]
struct Coin(u64);

impl Coin {
    const SCALE: f64 = 4_294_967_296.0;

    fn new(p: f64) -> Self {
        Coin((p * Self::SCALE).round() as u64)
    }

    #[inline]
    fn flip(self, rng: &mut ChaCha8Rng) -> bool {
        match self.0 {
            0 => false,
            t if t >= 1 << 32 => true,
            t => u64::from(rng.next_u32()) < t,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Coins {
    expose: Coin,
    reshare: Coin,
    forward: Coin,
    right_slant: Coin,
}

impl Coins {
    fn of<T>(params: &DynamicsParams<T>) -> Self {
        Coins {
            expose: Coin::new(params.p_e),
            reshare: Coin::new(params.p_r),
            forward: Coin::new(params.p_re),
            right_slant: Coin::new(0.5),
        }
    }
}

/// An item in flight: who already reshared it and who receives it next step.
#[derive(Debug, Clone)]
struct Cascade {
    item: NewsItem,
    reshared: FixedBitSet,
    targets: Vec<Vertex>,
}

#[derive(Debug, Clone)]
pub struct SimState<T> {
    t: usize,
    agents: Vec<AgentState<T>>,
    queue: Vec<Cascade>,
    next_item: u64,
    rng: ChaCha8Rng,
}

impl<T: Scalar> SimState<T> {
    pub fn new(agents: Vec<AgentState<T>>, seed: u64) -> Self {
        SimState {
            t: 0,
            agents,
            queue: Vec::new(),
            next_item: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn agents(&self) -> &[AgentState<T>] {
        &self.agents
    }

    /// Deliveries waiting for the next step.
    pub fn pending(&self) -> impl Iterator<Item = PendingDelivery> + '_ {
        self.queue.iter().flat_map(|c| {
            c.targets
                .iter()
                .map(move |&target| PendingDelivery { item: c.item, target })
        })
    }

    /// Agents that have reshared `item` so far, if it is still in flight.
    pub fn reshared_by(&self, item: u64) -> Option<Vec<Vertex>> {
        self.queue
            .iter()
            .find(|c| c.item.id == item)
            .map(|c| c.reshared.ones().map(|v| v as Vertex).collect())
    }

    pub fn step(&mut self, g: &DirectedGraph, params: &DynamicsParams<T>) {
        self.advance(g, params, Sources::Random, None);
    }

    pub fn step_traced(&mut self, g: &DirectedGraph, params: &DynamicsParams<T>, sources: Sources<'_>) -> StepTrace {
        let mut trace = StepTrace::default();
        self.advance(g, params, sources, Some(&mut trace));
        trace
    }

    fn advance(
        &mut self,
        g: &DirectedGraph,
        params: &DynamicsParams<T>,
        sources: Sources<'_>,
        mut trace: Option<&mut StepTrace>,
    ) {
        let coins = Coins::of(params);
        let current = std::mem::take(&mut self.queue);
        for mut cascade in current {
            let item = cascade.item;
            let mut forward = Vec::new();
            for &target in &cascade.targets {
                if let Some(tr) = trace.as_deref_mut() {
                    tr.delivered.push((item.id, target));
                }
                self.expose(target, item.slant, params);
                if self.agents[target as usize].party == item.slant
                    && !cascade.reshared.contains(target as usize)
                    && coins.reshare.flip(&mut self.rng)
                {
                    cascade.reshared.insert(target as usize);
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.reshared.push((item.id, target));
                    }
                    self.forward(g, target, coins.forward, &mut forward);
                }
            }
            if !forward.is_empty() {
                cascade.targets = forward;
                self.queue.push(cascade);
            }
        }

        match sources {
            Sources::Random => {
                for v in 0..self.agents.len() as Vertex {
                    if !coins.expose.flip(&mut self.rng) {
                        continue;
                    }
                    let mut slant = if coins.right_slant.flip(&mut self.rng) {
                        Party::Right
                    } else {
                        Party::Left
                    };
                    if params.mirror_slants {
                        slant = slant.opposite();
                    }
                    self.source_exposure(g, v, slant, params, coins, trace.as_deref_mut());
                }
            }
            Sources::Scripted(list) => {
                for &(v, slant) in list {
                    self.source_exposure(g, v, slant, params, coins, trace.as_deref_mut());
                }
            }
        }
        self.t += 1;
    }

    fn source_exposure(
        &mut self,
        g: &DirectedGraph,
        v: Vertex,
        slant: Party,
        params: &DynamicsParams<T>,
        coins: Coins,
        trace: Option<&mut StepTrace>,
    ) {
        let item = NewsItem {
            id: self.next_item,
            slant,
        };
        self.next_item += 1;
        self.expose(v, slant, params);
        let reshares = self.agents[v as usize].party == slant && coins.reshare.flip(&mut self.rng);
        if let Some(tr) = trace {
            tr.exposed.push((item.id, v));
            if reshares {
                tr.reshared.push((item.id, v));
            }
        }
        if !reshares {
            return;
        }
        let mut reshared = FixedBitSet::with_capacity(self.agents.len());
        reshared.insert(v as usize);
        let mut targets = Vec::new();
        self.forward(g, v, coins.forward, &mut targets);
        if !targets.is_empty() {
            self.queue.push(Cascade {
                item,
                reshared,
                targets,
            });
        }
    }

    fn forward(&mut self, g: &DirectedGraph, from: Vertex, coin: Coin, out: &mut Vec<Vertex>) {
        for &w in g.out_neighbors(from) {
            if coin.flip(&mut self.rng) {
                out.push(w);
            }
        }
    }

    #[inline]
    fn expose(&mut self, v: Vertex, slant: Party, params: &DynamicsParams<T>) {
        let agent = &mut self.agents[v as usize];
        *agent = apply_exposure(*agent, slant, params);
    }
}

/// Runs `t_f` steps from the given initial states and records population
/// means at every `t` in `0..=t_f`.
pub fn run<T: Scalar>(
    g: &DirectedGraph,
    initial: Vec<AgentState<T>>,
    params: &DynamicsParams<T>,
    t_f: usize,
    seed: u64,
) -> Result<RunTimeSeries<T>> {
    run_observed(g, initial, params, t_f, seed, |_, _| {})
}

/// Like [`run`], calling `observe(t, agents)` on every recorded state.
pub fn run_observed<T: Scalar, F>(
    g: &DirectedGraph,
    initial: Vec<AgentState<T>>,
    params: &DynamicsParams<T>,
    t_f: usize,
    seed: u64,
    mut observe: F,
) -> Result<RunTimeSeries<T>>
where
    F: FnMut(usize, &[AgentState<T>]),
{
    params.validate()?;
    if initial.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            got: initial.len(),
        });
    }
    if initial.is_empty() {
        return Err(Error::Empty("run over an empty population".into()));
    }
    let mut state = SimState::new(initial, seed);
    let mut series = RunTimeSeries::with_capacity(t_f + 1);
    observe(0, state.agents());
    series.push(Snapshot::of(state.agents())?);
    for _ in 0..t_f {
        state.step(g, params);
        observe(state.t(), state.agents());
        series.push(Snapshot::of(state.agents())?);
    }
    Ok(series)
}
