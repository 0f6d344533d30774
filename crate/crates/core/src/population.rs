//! Partisan labels, affect initialization and neighborhood similarity.

use std::fmt;

use rand::distr::{Distribution, Open01, StandardUniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Vertex};
use crate::scalar::{fifty, hundred, Scalar};

/// Party affiliation. The numeric codes enter the affect response through
/// `|x - s|`, so they are fixed at 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Party {
    Left = 1,
    Right = 2,
}

impl Party {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn opposite(self) -> Party {
        match self {
            Party::Left => Party::Right,
            Party::Right => Party::Left,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Left => f.write_str("Left"),
            Party::Right => f.write_str("Right"),
        }
    }
}

/// Per-agent affect on the 0-100 feeling thermometer.
///
/// In-party affect lives in `[50, 100]`, out-party affect in `[0, 50]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState<T> {
    pub party: Party,
    pub ipa: T,
    pub opa: T,
}

impl<T: Scalar> AgentState<T> {
    pub fn new(party: Party, ipa: T, opa: T) -> Self {
        AgentState { party, ipa, opa }
    }

    pub fn in_bounds(&self) -> bool {
        let (lo_ipa, hi) = (fifty::<T>(), hundred::<T>());
        self.ipa >= lo_ipa && self.ipa <= hi && self.opa >= T::zero() && self.opa <= fifty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    /// Share of Right-leaning agents among non-elites.
    pub p_b: f64,
    /// Share of Right-leaning agents among elites.
    pub p_eb: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_b", self.p_b), ("p_eb", self.p_eb)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Number of Right-leaning members in a stratum of `size` agents: `p * size`
/// rounded to the nearest integer.
///
/// Exact halves round toward `size / 2`, so that `right_count(p, s) +
/// right_count(1 - p, s) == s` whenever `p != 1/2` and mirrored compositions
/// are exact mirrors. At exactly `size / 2` the half rounds up.
pub fn right_count(p: f64, size: usize) -> usize {
    let x = p * size as f64;
    let floor = x.floor();
    let k = match (x - floor).partial_cmp(&0.5) {
        Some(std::cmp::Ordering::Less) => floor,
        Some(std::cmp::Ordering::Greater) => floor + 1.0,
        _ if 2.0 * x > size as f64 => floor,
        _ => floor + 1.0,
    };
    (k as usize).min(size)
}

/// Assigns fixed party labels stratum by stratum.
///
/// Exactly `round(p_eb * |elites|)` elites and `round(p_b * |non-elites|)`
/// non-elites are Right; which ones is a seeded uniform shuffle inside each
/// stratum. `elites` must be vertex ids of `g`.
pub fn assign_parties(g: &DirectedGraph, elites: &[Vertex], spec: &PopulationSpec) -> Result<Vec<Party>> {
    spec.validate()?;
    let (elite, rest) = strata(g.n(), elites)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parties = vec![Party::Left; g.n()];
    for (mut members, p) in [(elite, spec.p_eb), (rest, spec.p_b)] {
        members.shuffle(&mut rng);
        label_stratum(&mut parties, &members, p);
    }
    Ok(parties)
}

fn strata(n: usize, elites: &[Vertex]) -> Result<(Vec<Vertex>, Vec<Vertex>)> {
    let mut is_elite = vec![false; n];
    for &v in elites {
        let slot = is_elite
            .get_mut(v as usize)
            .ok_or(Error::VertexOutOfRange { vertex: v as usize, n })?;
        *slot = true;
    }
    let (elite, rest): (Vec<Vertex>, Vec<Vertex>) = (0..n as Vertex).partition(|&v| is_elite[v as usize]);
    Ok((elite, rest))
}

/// The first `right_count(p, len)` members of the shuffled order are Right.
fn label_stratum(parties: &mut [Party], order: &[Vertex], p: f64) {
    let k = right_count(p, order.len());
    for (i, &v) in order.iter().enumerate() {
        parties[v as usize] = if i < k { Party::Right } else { Party::Left };
    }
}

/// Draws initial affects: in-party uniform on `[50, 100)`, out-party uniform
/// on `(0, 50)`, independently per agent.
pub fn init_affect<T: Scalar>(parties: &[Party], seed: u64) -> Vec<AgentState<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (fifty::<T>(), hundred::<T>());
    parties
        .iter()
        .map(|&party| {
            // redraw when narrowing to T lands on an excluded endpoint
            let ipa = loop {
                let u: f64 = StandardUniform.sample(&mut rng);
                let x = T::from_f64_lossy(50.0 + 50.0 * u);
                if x >= lo && x < hi {
                    break x;
                }
            };
            let opa = loop {
                let u: f64 = Open01.sample(&mut rng);
                let x = T::from_f64_lossy(50.0 * u);
                if x > T::zero() && x < lo {
                    break x;
                }
            };
            AgentState::new(party, ipa, opa)
        })
        .collect()
}

/// Fraction of `v`'s in-neighbors that share its party; `None` when `v`
/// has no in-neighbors.
pub fn similarity(g: &DirectedGraph, parties: &[Party], v: Vertex) -> Result<Option<f64>> {
    let nbrs = g.in_neighbors(v)?;
    if nbrs.is_empty() {
        return Ok(None);
    }
    let own = parties[v as usize];
    let same = nbrs.iter().filter(|&&u| parties[u as usize] == own).count();
    Ok(Some(same as f64 / nbrs.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    All,
    Elites,
    NonElites,
    Party(Party),
}

/// Mean similarity over a subset, skipping vertices without in-neighbors.
pub fn mean_similarity(g: &DirectedGraph, parties: &[Party], elites: &[Vertex], subset: Subset) -> Result<f64> {
    let mut is_elite = vec![false; g.n()];
    for &v in elites {
        is_elite[v as usize] = true;
    }
    let members = (0..g.n() as Vertex).filter(|&v| match subset {
        Subset::All => true,
        Subset::Elites => is_elite[v as usize],
        Subset::NonElites => !is_elite[v as usize],
        Subset::Party(p) => parties[v as usize] == p,
    });
    mean_similarity_over(g, parties, members)
}

pub fn mean_similarity_over(
    g: &DirectedGraph,
    parties: &[Party],
    members: impl IntoIterator<Item = Vertex>,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in members {
        if let Some(s) = similarity(g, parties, v)? {
            sum += s;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Empty(
            "mean similarity over a subset with no in-neighbors".into(),
        ));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{elite_set, generate_scale_free, GraphSpec};

    fn star_into(v: Vertex, from: &[Vertex], n: usize) -> DirectedGraph {
        DirectedGraph::from_edges(n, from.iter().map(|&u| (u, v)).collect()).unwrap()
    }

    #[test]
    fn similarity_by_substitution() {
        use Party::*;
        let g = star_into(0, &[1, 2, 3, 4], 5);
        let parties = [Left, Left, Left, Left, Right];
        assert_eq!(similarity(&g, &parties, 0).unwrap(), Some(0.75));
        let all_same = [Left; 5];
        assert_eq!(similarity(&g, &all_same, 0).unwrap(), Some(1.0));
        let none_same = [Left, Right, Right, Right, Right];
        assert_eq!(similarity(&g, &none_same, 0).unwrap(), Some(0.0));
        assert_eq!(similarity(&g, &parties, 1).unwrap(), None);
        assert!(similarity(&g, &parties, 9).is_err());
    }

    #[test]
    fn mean_similarity_empty_subset() {
        let g = star_into(0, &[1, 2], 3);
        let parties = [Party::Left; 3];
        let err = mean_similarity(&g, &parties, &[], Subset::Elites).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
        assert_eq!(mean_similarity(&g, &parties, &[], Subset::All).unwrap(), 1.0);
    }

    #[test]
    fn exact_stratum_counts() {
        let g = generate_scale_free(&GraphSpec::new(1000, 8000, 5)).unwrap();
        let elites = elite_set(&g).unwrap();
        let spec = PopulationSpec {
            p_b: 0.75,
            p_eb: 0.5,
            seed: 9,
        };
        let parties = assign_parties(&g, &elites, &spec).unwrap();
        let (e, r) = strata(g.n(), &elites).unwrap();
        let rights = |s: &[Vertex]| s.iter().filter(|&&v| parties[v as usize] == Party::Right).count();
        assert_eq!(rights(&e), right_count(0.5, e.len()));
        assert_eq!(rights(&r), right_count(0.75, r.len()));
    }

    #[test]
    fn stratum_count_examples() {
        assert_eq!(right_count(0.5, 1000), 500);
        assert_eq!(right_count(0.75, 9000), 6750);
        assert_eq!(right_count(0.0, 9000), 0);
        assert_eq!(right_count(1.0, 9000), 9000);
    }

    #[test]
    fn halves_round_toward_balance() {
        assert_eq!((right_count(0.25, 198), right_count(0.75, 198)), (50, 148));
        assert_eq!((right_count(0.25, 2), right_count(0.75, 2)), (1, 1));
        assert_eq!(right_count(0.5, 7), 4);
        for s in 0..500 {
            for p in [0.0625, 0.125, 0.25, 0.375] {
                assert_eq!(right_count(p, s) + right_count(1.0 - p, s), s, "p={p} s={s}");
            }
        }
    }

    #[test]
    fn zero_bias_is_all_left() {
        let g = generate_scale_free(&GraphSpec::new(200, 1000, 1)).unwrap();
        let elites = elite_set(&g).unwrap();
        let parties = assign_parties(
            &g,
            &elites,
            &PopulationSpec {
                p_b: 0.0,
                p_eb: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        assert!(parties.iter().all(|&p| p == Party::Left));
    }

    #[test]
    fn invalid_bias_rejected() {
        let g = generate_scale_free(&GraphSpec::new(20, 40, 1)).unwrap();
        let bad = PopulationSpec {
            p_b: 1.5,
            p_eb: 0.5,
            seed: 0,
        };
        assert!(assign_parties(&g, &[], &bad).is_err());
        assert!(assign_parties(
            &g,
            &[99],
            &PopulationSpec {
                p_b: 0.5,
                p_eb: 0.5,
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn mirrored_shuffle_swaps_labels_exactly() {
        // reversing the shuffled order and complementing p flips every label
        let order: Vec<Vertex> = vec![4, 0, 7, 2, 9, 1, 3, 8, 6, 5];
        for p in [0.0, 0.3, 0.6, 1.0] {
            let mut a = vec![Party::Left; 10];
            label_stratum(&mut a, &order, p);
            let reversed: Vec<_> = order.iter().rev().copied().collect();
            let mut b = vec![Party::Left; 10];
            label_stratum(&mut b, &reversed, 1.0 - p);
            let flipped: Vec<_> = a.iter().map(|x| x.opposite()).collect();
            assert_eq!(flipped, b, "p={p}");
        }
    }

    #[test]
    fn initial_affect_ranges_and_mean() {
        let parties = vec![Party::Left; 20_000];
        let agents: Vec<AgentState<f64>> = init_affect(&parties, 11);
        assert!(agents
            .iter()
            .all(|a| a.ipa >= 50.0 && a.ipa < 100.0 && a.opa > 0.0 && a.opa < 50.0));
        let mean_ad = agents.iter().map(|a| a.ipa - a.opa).sum::<f64>() / agents.len() as f64;
        // sd of one AD is sqrt(2 * 50^2 / 12) ~ 20.4, so the mean's sd is ~0.14
        assert!((mean_ad - 50.0).abs() < 0.7, "{mean_ad}");
        let again: Vec<AgentState<f64>> = init_affect(&parties, 11);
        assert_eq!(agents, again);
        let narrow: Vec<AgentState<f32>> = init_affect(&parties, 11);
        assert!(narrow
            .iter()
            .all(|a| a.ipa >= 50.0 && a.ipa < 100.0 && a.opa > 0.0 && a.opa < 50.0));
    }
}
