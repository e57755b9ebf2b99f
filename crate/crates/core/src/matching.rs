//! MIMO-Mate matching.
//!
//! Pairing leads with followers is a bipartite maximum-weight
//! maximum-cardinality matching: every present edge is offset by a constant
//! `C` larger than the sum of all edge weights, so an exact maximum-weight
//! assignment first maximizes the number of matched pairs and then their
//! total weight. Larger APs are handled layer by layer, each layer extending
//! the chains built by the previous one.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::channel::{zf_sic_snr_chain, ChannelVector, ClientId};
use crate::error::{Error, Result};
use crate::rate::RateTable;

/// Follower throughputs indexed by (lead, follower); `0` marks an absent edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    leads: Vec<ClientId>,
    followers: Vec<ClientId>,
    weights: Vec<Vec<f64>>,
}

impl WeightMatrix {
    /// Builds a bipartite weight matrix. `weight(u, v)` returning `None` or a
    /// non-positive value leaves the edge absent; self edges are always absent.
    pub fn bipartite<F>(leads: &[ClientId], followers: &[ClientId], mut weight: F) -> Result<Self>
    where
        F: FnMut(ClientId, ClientId) -> Result<Option<f64>>,
    {
        let mut leads = leads.to_vec();
        let mut followers = followers.to_vec();
        leads.sort_unstable();
        followers.sort_unstable();
        if leads.windows(2).any(|w| w[0] == w[1]) || followers.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("duplicate client id in weight matrix"));
        }
        let mut weights = Vec::with_capacity(leads.len());
        for &u in &leads {
            let mut row = Vec::with_capacity(followers.len());
            for &v in &followers {
                let w = if u == v { None } else { weight(u, v)? };
                let w = match w {
                    Some(w) if !w.is_finite() => {
                        return Err(Error::config(format!("non-finite weight on edge ({u}, {v})")))
                    }
                    Some(w) if w > 0.0 => w,
                    _ => 0.0,
                };
                row.push(w);
            }
            weights.push(row);
        }
        Ok(WeightMatrix { leads, followers, weights })
    }

    /// Same client set on both sides.
    pub fn square<F>(clients: &[ClientId], weight: F) -> Result<Self>
    where
        F: FnMut(ClientId, ClientId) -> Result<Option<f64>>,
    {
        Self::bipartite(clients, clients, weight)
    }

    /// Square matrix from a dense row-major table (`table[i][j]` for clients `0..n`).
    pub fn from_dense(table: &[Vec<f64>]) -> Result<Self> {
        let ids: Vec<ClientId> = (0..table.len()).collect();
        Self::square(&ids, |u, v| Ok(table[u].get(v).copied()))
    }

    pub fn leads(&self) -> &[ClientId] {
        &self.leads
    }

    pub fn followers(&self) -> &[ClientId] {
        &self.followers
    }

    pub fn weight(&self, u: ClientId, v: ClientId) -> Option<f64> {
        let i = self.leads.binary_search(&u).ok()?;
        let j = self.followers.binary_search(&v).ok()?;
        let w = self.weights[i][j];
        (w > 0.0).then_some(w)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().flatten().filter(|w| **w > 0.0).count()
    }

    fn dense(&self) -> &[Vec<f64>] {
        &self.weights
    }
}

/// Ordered MIMO-Mate tuples; the first client of each tuple leads.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MateSet {
    relations: Vec<Vec<ClientId>>,
}

impl MateSet {
    pub fn new(mut relations: Vec<Vec<ClientId>>) -> Self {
        relations.sort();
        MateSet { relations }
    }

    pub fn relations(&self) -> &[Vec<ClientId>] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn relation_led_by(&self, lead: ClientId) -> Option<&[ClientId]> {
        self.relations.iter().find(|r| r.first() == Some(&lead)).map(Vec::as_slice)
    }

    /// Number of tuples of exactly `len` clients.
    pub fn count_of_len(&self, len: usize) -> usize {
        self.relations.iter().filter(|r| r.len() == len).count()
    }

    pub fn pairs(&self) -> Vec<(ClientId, ClientId)> {
        self.relations.iter().filter(|r| r.len() >= 2).map(|r| (r[0], r[1])).collect()
    }

    /// Structural audit: tuple sizes, distinct clients within a tuple, and no
    /// client holding the same position in two tuples.
    pub fn check_structure(&self, n_antennas: usize) -> Result<()> {
        let mut per_position: Vec<HashSet<ClientId>> = vec![HashSet::new(); n_antennas];
        for r in &self.relations {
            if r.len() < 2 || r.len() > n_antennas {
                return Err(Error::Precondition(format!("tuple {r:?} has invalid length")));
            }
            let distinct: HashSet<_> = r.iter().collect();
            if distinct.len() != r.len() {
                return Err(Error::Precondition(format!("tuple {r:?} repeats a client")));
            }
            for (pos, c) in r.iter().enumerate() {
                if !per_position[pos].insert(*c) {
                    return Err(Error::Precondition(format!("client {c} holds position {} twice", pos + 1)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchingConfig {
    /// Offset added to every present edge; `None` picks `1 + Σ weights`.
    pub big_constant: Option<f64>,
    pub n_antennas: usize,
    pub legacy_ids: BTreeSet<ClientId>,
}

impl MatchingConfig {
    pub fn new(n_antennas: usize) -> Self {
        MatchingConfig { big_constant: None, n_antennas, legacy_ids: BTreeSet::new() }
    }

    pub fn with_legacy(mut self, legacy: impl IntoIterator<Item = ClientId>) -> Self {
        self.legacy_ids.extend(legacy);
        self
    }
}

/// Exact maximum-weight assignment on a rectangular non-negative matrix.
///
/// Returns the column chosen for every row (`None` when the row falls onto
/// padding). Shortest augmenting path formulation with dual potentials,
/// `O(n³)` in the padded size.
pub(crate) fn max_weight_assignment(w: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return vec![None; rows];
    }
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -w[i][j]
        } else {
            0.0
        }
    };
    // 1-indexed; row/column 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            assign[i - 1] = Some(j - 1);
        }
    }
    assign
}

fn assignment_value(w: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    let sub: Vec<Vec<f64>> = rows.iter().map(|&i| cols.iter().map(|&j| w[i][j]).collect()).collect();
    max_weight_assignment(&sub)
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| sub[r][c]))
        .sum()
}

/// Maximum-weight maximum-cardinality matching over positive edges.
///
/// Among equally good matchings the one that is lexicographically smallest in
/// (lead id, follower id) is returned, with "unmatched" ordered after every
/// follower.
pub fn mwmcm_bipartite(weights: &WeightMatrix, config: &MatchingConfig) -> Result<MateSet> {
    let total = weights.total_weight();
    let c = match config.big_constant {
        None => 1.0 + total,
        Some(c) if c > total && c.is_finite() => c,
        Some(c) => {
            return Err(Error::config(format!("offset {c} must exceed the total edge weight {total}")));
        }
    };
    let dense = weights.dense();
    let offset: Vec<Vec<f64>> =
        dense.iter().map(|row| row.iter().map(|&w| if w > 0.0 { w + c } else { 0.0 }).collect()).collect();

    let rows: Vec<usize> = (0..weights.leads.len()).collect();
    let all_cols: Vec<usize> = (0..weights.followers.len()).collect();
    let optimum = assignment_value(&offset, &rows, &all_cols);
    let tol = 1e-9 * optimum.abs().max(1.0);

    let mut fixed_value = 0.0;
    let mut free_cols: BTreeSet<usize> = all_cols.iter().copied().collect();
    let mut pairs = Vec::new();
    for (pos, &i) in rows.iter().enumerate() {
        let later = &rows[pos + 1..];
        let candidates: Vec<usize> = free_cols.iter().copied().filter(|&j| offset[i][j] > 0.0).collect();
        for j in candidates {
            let rest: Vec<usize> = free_cols.iter().copied().filter(|&x| x != j).collect();
            let value = fixed_value + offset[i][j] + assignment_value(&offset, later, &rest);
            if value >= optimum - tol {
                fixed_value += offset[i][j];
                free_cols.remove(&j);
                pairs.push(vec![weights.leads[i], weights.followers[j]]);
                break;
            }
        }
    }
    Ok(MateSet::new(pairs))
}

/// Throughput of `candidate` when it joins after `lead_chain`; `None` when it
/// would be undecodable.
pub fn follower_weight(
    lead_chain: &[&ChannelVector],
    candidate: &ChannelVector,
    candidate_snr_db: f64,
    table: &RateTable,
) -> Result<Option<f64>> {
    let n = candidate.n_antennas();
    if lead_chain.len() >= n {
        return Err(Error::DegreesOfFreedomExceeded { len: lead_chain.len() + 1, n_antennas: n });
    }
    let mut chain: Vec<(&ChannelVector, f64)> = lead_chain.iter().map(|h| (*h, 0.0)).collect();
    chain.push((candidate, candidate_snr_db));
    let snrs = zf_sic_snr_chain(&chain, n)?;
    Ok(table.snr_to_rate(snrs[snrs.len() - 1]))
}

struct ClientIndex<'a> {
    by_id: BTreeMap<ClientId, (&'a ChannelVector, f64)>,
}

impl<'a> ClientIndex<'a> {
    fn new(channels: &'a [ChannelVector], snrs_db: &[f64]) -> Result<Self> {
        if channels.len() != snrs_db.len() {
            return Err(Error::config("channels and SNRs differ in length"));
        }
        let mut by_id = BTreeMap::new();
        for (h, &snr) in channels.iter().zip(snrs_db) {
            if by_id.insert(h.client_id, (h, snr)).is_some() {
                return Err(Error::config(format!("duplicate client id {}", h.client_id)));
            }
        }
        Ok(ClientIndex { by_id })
    }

    fn ids(&self) -> Vec<ClientId> {
        self.by_id.keys().copied().collect()
    }

    fn get(&self, id: ClientId) -> (&'a ChannelVector, f64) {
        self.by_id[&id]
    }

    fn chain(&self, ids: &[ClientId]) -> Vec<&'a ChannelVector> {
        ids.iter().map(|&id| self.get(id).0).collect()
    }

    fn follower_rate(&self, chain: &[ClientId], candidate: ClientId, table: &RateTable) -> Result<Option<f64>> {
        if chain.contains(&candidate) {
            return Ok(None);
        }
        let (h, snr) = self.get(candidate);
        follower_weight(&self.chain(chain), h, snr, table)
    }
}

/// Pairwise follower throughputs `r(u, v)` of every ordered client pair.
pub fn pair_weights(channels: &[ChannelVector], snrs_db: &[f64], table: &RateTable) -> Result<WeightMatrix> {
    let index = ClientIndex::new(channels, snrs_db)?;
    let ids = index.ids();
    WeightMatrix::square(&ids, |u, v| index.follower_rate(&[u], v, table))
}

/// Optimal lead/follower pairing for a 2-antenna AP.
pub fn two_mimomate(channels: &[ChannelVector], snrs_db: &[f64], table: &RateTable) -> Result<MateSet> {
    let weights = pair_weights(channels, snrs_db, table)?;
    let n = channels.first().map_or(2, ChannelVector::n_antennas);
    mwmcm_bipartite(&weights, &MatchingConfig::new(n))
}

/// Layered matching for an `N`-antenna AP.
///
/// Layer `k` matches position-`k` clients to position-`k+1` candidates. A
/// position-`k` client (k > 1) only has outgoing edges when an earlier layer
/// gave it a predecessor, and the edge weight is the candidate's throughput
/// after the whole chain. Legacy clients only ever appear at position 1.
pub fn n_mimomate(
    channels: &[ChannelVector],
    snrs_db: &[f64],
    table: &RateTable,
    config: &MatchingConfig,
) -> Result<MateSet> {
    let n = config.n_antennas;
    if n < 2 {
        return Err(Error::config("layered matching needs at least 2 antennas"));
    }
    let index = ClientIndex::new(channels, snrs_db)?;
    let all = index.ids();
    let modern: Vec<ClientId> = all.iter().copied().filter(|c| !config.legacy_ids.contains(c)).collect();

    let mut relations: Vec<Vec<ClientId>> = Vec::new();
    for k in 1..n {
        let left: &[ClientId] = if k == 1 { &all } else { &modern };
        let tails: BTreeMap<ClientId, usize> =
            relations.iter().enumerate().filter(|(_, r)| r.len() == k).map(|(i, r)| (r[k - 1], i)).collect();
        let weights = WeightMatrix::bipartite(left, &modern, |u, v| {
            if k == 1 {
                index.follower_rate(&[u], v, table)
            } else if let Some(&ri) = tails.get(&u) {
                index.follower_rate(&relations[ri], v, table)
            } else {
                Ok(None)
            }
        })?;
        let layer = mwmcm_bipartite(&weights, config)?;
        if k == 1 {
            relations = layer.relations().to_vec();
        } else {
            for pair in layer.relations() {
                let ri = tails[&pair[0]];
                relations[ri].push(pair[1]);
            }
        }
    }
    Ok(MateSet::new(relations))
}

/// Follower throughputs of every position ≥ 2 in every tuple.
pub fn follower_rates(
    mates: &MateSet,
    channels: &[ChannelVector],
    snrs_db: &[f64],
    table: &RateTable,
) -> Result<Vec<Vec<Option<f64>>>> {
    let index = ClientIndex::new(channels, snrs_db)?;
    mates
        .relations()
        .iter()
        .map(|r| (1..r.len()).map(|k| index.follower_rate(&r[..k], r[k], table)).collect())
        .collect()
}

/// Total follower throughput of a mate set; `None` if some follower is undecodable.
pub fn mate_set_weight(
    mates: &MateSet,
    channels: &[ChannelVector],
    snrs_db: &[f64],
    table: &RateTable,
) -> Result<Option<f64>> {
    let rates = follower_rates(mates, channels, snrs_db, table)?;
    Ok(rates.into_iter().flatten().sum::<Option<f64>>())
}
