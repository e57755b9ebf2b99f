//! Exhaustive reference solvers used to check the matcher, and the
//! matching-versus-fair-contention throughput comparison.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{place_clients, sample_channel, ChannelVector, ClientId, PathLoss};
use crate::error::{Error, Result};
use crate::matching::{follower_weight, mwmcm_bipartite, n_mimomate, MateSet, MatchingConfig, WeightMatrix};
use crate::rate::RateTable;

pub const PAIR_LIMIT: usize = 8;
pub const TRIPLE_LIMIT: usize = 7;

const REL_TOL: f64 = 1e-9;

fn better(card: usize, weight: f64, best_card: usize, best_weight: f64) -> bool {
    card > best_card || (card == best_card && weight > best_weight + REL_TOL * best_weight.abs().max(1.0))
}

/// Optimal pairing by enumerating every injective partial follower map over
/// positive edges. Ties resolve exactly like [`mwmcm_bipartite`].
pub fn brute_force_two_mimomate(weights: &WeightMatrix) -> Result<MateSet> {
    let size = weights.leads().len().max(weights.followers().len());
    if size > PAIR_LIMIT {
        return Err(Error::InstanceTooLarge { size, limit: PAIR_LIMIT });
    }
    struct Search<'a> {
        w: &'a WeightMatrix,
        current: Vec<Option<ClientId>>,
        best: Vec<Option<ClientId>>,
        best_card: usize,
        best_weight: f64,
        first: bool,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, card: usize, weight: f64) {
            let leads = self.w.leads();
            if i == leads.len() {
                if self.first || better(card, weight, self.best_card, self.best_weight) {
                    self.first = false;
                    self.best = self.current.clone();
                    self.best_card = card;
                    self.best_weight = weight;
                }
                return;
            }
            let u = leads[i];
            for &v in self.w.followers() {
                if self.current.contains(&Some(v)) {
                    continue;
                }
                if let Some(r) = self.w.weight(u, v) {
                    self.current[i] = Some(v);
                    self.go(i + 1, card + 1, weight + r);
                    self.current[i] = None;
                }
            }
            self.go(i + 1, card, weight);
        }
    }
    let n = weights.leads().len();
    let mut s = Search {
        w: weights,
        current: vec![None; n],
        best: vec![None; n],
        best_card: 0,
        best_weight: 0.0,
        first: true,
    };
    s.go(0, 0, 0.0);
    let relations = weights
        .leads()
        .iter()
        .zip(&s.best)
        .filter_map(|(&u, v)| v.map(|v| vec![u, v]))
        .collect();
    Ok(MateSet::new(relations))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleOptimum {
    pub mates: MateSet,
    pub cardinality: usize,
    pub weight: f64,
}

/// Optimal 3-antenna mate set: maximum number of ordered triples, then
/// maximum follower throughput.
///
/// `weight(u, v, w)` returns the throughputs of `v` and `w` in the triple, or
/// `None` when either is undecodable. The search runs over every family of
/// triples with distinct clients per triple and per position, memoizing on
/// the set of clients already used at positions 2 and 3.
pub fn brute_force_three_mimomate<F>(clients: &[ClientId], weight: F) -> Result<TripleOptimum>
where
    F: Fn(ClientId, ClientId, ClientId) -> Option<(f64, f64)>,
{
    let mut ids = clients.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let n = ids.len();
    if n > TRIPLE_LIMIT {
        return Err(Error::InstanceTooLarge { size: n, limit: TRIPLE_LIMIT });
    }
    let mut table = vec![None; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a != b && b != c && a != c {
                    table[(a * n + b) * n + c] = weight(ids[a], ids[b], ids[c])
                        .filter(|&(rv, rw)| rv > 0.0 && rw > 0.0)
                        .map(|(rv, rw)| rv + rw);
                }
            }
        }
    }

    type Key = (usize, u16, u16);
    type Entry = (usize, f64, Option<(usize, usize)>);
    fn solve(i: usize, m2: u16, m3: u16, n: usize, table: &[Option<f64>], memo: &mut HashMap<Key, Entry>) -> Entry {
        if i == n {
            return (0, 0.0, None);
        }
        if let Some(e) = memo.get(&(i, m2, m3)) {
            return *e;
        }
        let mut best: Option<Entry> = None;
        for b in 0..n {
            if m2 & (1 << b) != 0 {
                continue;
            }
            for c in 0..n {
                if m3 & (1 << c) != 0 {
                    continue;
                }
                if let Some(w) = table[(i * n + b) * n + c] {
                    let (card, rest, _) = solve(i + 1, m2 | (1 << b), m3 | (1 << c), n, table, memo);
                    let cand = (card + 1, w + rest, Some((b, c)));
                    if best.is_none_or(|(bc, bw, _)| better(cand.0, cand.1, bc, bw)) {
                        best = Some(cand);
                    }
                }
            }
        }
        let (card, rest, _) = solve(i + 1, m2, m3, n, table, memo);
        let skip = (card, rest, None);
        let best = match best {
            Some(b) if !better(skip.0, skip.1, b.0, b.1) => b,
            _ => skip,
        };
        memo.insert((i, m2, m3), best);
        best
    }

    let mut memo = HashMap::new();
    let (cardinality, weight, _) = solve(0, 0, 0, n, &table, &mut memo);
    let mut relations = Vec::new();
    let (mut m2, mut m3) = (0u16, 0u16);
    for i in 0..n {
        let (_, _, choice) = solve(i, m2, m3, n, &table, &mut memo);
        if let Some((b, c)) = choice {
            relations.push(vec![ids[i], ids[b], ids[c]]);
            m2 |= 1 << b;
            m3 |= 1 << c;
        }
    }
    Ok(TripleOptimum { mates: MateSet::new(relations), cardinality, weight })
}

/// Probability that each client follows each other client.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentMatrix {
    pub clients: Vec<ClientId>,
    /// `p[i][j]`: probability that `clients[j]` follows `clients[i]`.
    pub p: Vec<Vec<f64>>,
}

impl AssignmentMatrix {
    pub fn uniform(clients: &[ClientId]) -> Self {
        let n = clients.len();
        let q = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
        let p = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { q }).collect()).collect();
        AssignmentMatrix { clients: clients.to_vec(), p }
    }

    pub fn from_mates(clients: &[ClientId], mates: &MateSet) -> Self {
        let pos = |c: ClientId| clients.iter().position(|&x| x == c).expect("client in set");
        let n = clients.len();
        let mut p = vec![vec![0.0; n]; n];
        for (u, v) in mates.pairs() {
            p[pos(u)][pos(v)] = 1.0;
        }
        AssignmentMatrix { clients: clients.to_vec(), p }
    }

    /// Mean follower throughput when every client is equally likely to win
    /// the first stream.
    pub fn average_throughput(&self, weights: &WeightMatrix) -> f64 {
        let n = self.clients.len() as f64;
        let mut sum = 0.0;
        for (i, &u) in self.clients.iter().enumerate() {
            for (j, &v) in self.clients.iter().enumerate() {
                if self.p[i][j] > 0.0 {
                    sum += self.p[i][j] * weights.weight(u, v).unwrap_or(0.0);
                }
            }
        }
        sum / n
    }

    /// Rows sum to one, no self assignment, entries in `[0, 1]`, and every
    /// client is equally likely to follow (column sums equal and at most one).
    pub fn check_fair(&self) -> Result<()> {
        const TOL: f64 = 1e-12;
        let n = self.clients.len();
        for i in 0..n {
            if self.p[i][i] != 0.0 {
                return Err(Error::Precondition(format!("client {} follows itself", self.clients[i])));
            }
            if self.p[i].iter().any(|&x| !(-TOL..=1.0 + TOL).contains(&x)) {
                return Err(Error::Precondition("probability outside [0, 1]".into()));
            }
            let row: f64 = self.p[i].iter().sum();
            if (row - 1.0).abs() > TOL * n as f64 {
                return Err(Error::Precondition(format!("row {i} sums to {row}")));
            }
        }
        let cols: Vec<f64> = (0..n).map(|j| (0..n).map(|i| self.p[i][j]).sum()).collect();
        if let Some(&c0) = cols.first() {
            if cols.iter().any(|&c| (c - c0).abs() > TOL * n as f64) || c0 > 1.0 + TOL * n as f64 {
                return Err(Error::Precondition(format!("column sums {cols:?} are not fair")));
            }
        }
        Ok(())
    }
}

fn require_all_positive(weights: &WeightMatrix) -> Result<Vec<ClientId>> {
    if weights.leads() != weights.followers() {
        return Err(Error::Precondition("fair assignments need the same client set on both sides".into()));
    }
    let clients = weights.leads().to_vec();
    if clients.len() < 2 {
        return Err(Error::Precondition("need at least two clients".into()));
    }
    for &u in &clients {
        for &v in &clients {
            if u != v && weights.weight(u, v).is_none() {
                return Err(Error::Precondition(format!("throughput of {v} after {u} is not positive")));
            }
        }
    }
    Ok(clients)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairAssignment {
    pub assignment: AssignmentMatrix,
    pub average_throughput: f64,
}

/// Best average follower throughput over all fair probabilistic assignments.
///
/// Fair assignments are doubly stochastic with an empty diagonal, so the
/// linear objective peaks at a vertex: a permutation without fixed points.
/// Enumerates all of them.
pub fn best_fair_assignment(weights: &WeightMatrix) -> Result<FairAssignment> {
    let clients = require_all_positive(weights)?;
    let n = clients.len();
    if n > PAIR_LIMIT {
        return Err(Error::InstanceTooLarge { size: n, limit: PAIR_LIMIT });
    }
    let w: Vec<Vec<f64>> = clients
        .iter()
        .map(|&u| clients.iter().map(|&v| weights.weight(u, v).unwrap_or(0.0)).collect())
        .collect();

    fn go(i: usize, n: usize, w: &[Vec<f64>], used: &mut [bool], cur: &mut Vec<usize>, sum: f64, best: &mut (f64, Vec<usize>)) {
        if i == n {
            if sum > best.0 {
                *best = (sum, cur.clone());
            }
            return;
        }
        for j in 0..n {
            if j != i && !used[j] {
                used[j] = true;
                cur.push(j);
                go(i + 1, n, w, used, cur, sum + w[i][j], best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    go(0, n, &w, &mut vec![false; n], &mut Vec::with_capacity(n), 0.0, &mut best);

    let mut p = vec![vec![0.0; n]; n];
    for (i, &j) in best.1.iter().enumerate() {
        p[i][j] = 1.0;
    }
    Ok(FairAssignment { assignment: AssignmentMatrix { clients, p }, average_throughput: best.0 / n as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    /// Average follower throughput of the optimal matching.
    pub t_m: f64,
    /// Best average over fair probabilistic assignments.
    pub t_r: f64,
    /// Average under uniformly random follower contention.
    pub t_uniform: f64,
    /// `t_m >= t_r` and `t_m >= t_uniform`.
    pub verdict: bool,
}

impl TheoremReport {
    pub fn matches_fair_optimum(&self) -> bool {
        (self.t_m - self.t_r).abs() <= REL_TOL * self.t_r.abs().max(1.0)
    }

    pub fn uniform_margin(&self) -> f64 {
        self.t_m - self.t_uniform
    }
}

pub fn verify_theorems(weights: &WeightMatrix) -> Result<TheoremReport> {
    let clients = require_all_positive(weights)?;
    let mates = mwmcm_bipartite(weights, &MatchingConfig::new(2))?;
    let p_m = AssignmentMatrix::from_mates(&clients, &mates);
    p_m.check_fair()?;
    let t_m = p_m.average_throughput(weights);
    let t_r = best_fair_assignment(weights)?.average_throughput;
    let t_uniform = AssignmentMatrix::uniform(&clients).average_throughput(weights);
    let tol = REL_TOL * t_m.abs().max(1.0);
    Ok(TheoremReport { t_m, t_r, t_uniform, verdict: t_m + tol >= t_r && t_m + tol >= t_uniform })
}

/// All-positive weights on a 2^-10 grid below 1024, so sums are exact.
pub fn random_positive_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> WeightMatrix {
    let table: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|v| if u == v { 0.0 } else { rng.random_range(1u32..(1 << 20)) as f64 / 1024.0 })
                .collect()
        })
        .collect();
    WeightMatrix::from_dense(&table).expect("square table")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub instances: usize,
    pub max_clients: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { instances: 1000, max_clients: 7, seed: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub instances: usize,
    /// Matcher and pair enumeration disagree on cardinality or weight.
    pub matcher_mismatches: usize,
    /// `T_M` below the best fair assignment or below uniform contention.
    pub theorem_violations: usize,
    /// Layered 3-antenna matchings audited on random cells.
    pub layered_instances: usize,
    pub layered_structure_violations: usize,
    /// Cells where the layered matcher found fewer full triples than exist.
    pub layered_short_of_optimum: usize,
    pub layered_weight_ratio_mean: f64,
}

impl SweepReport {
    /// The checks that are guaranteed to hold; the layered matcher's
    /// cardinality gap is reported, not judged.
    pub fn passed(&self) -> bool {
        self.matcher_mismatches == 0 && self.theorem_violations == 0 && self.layered_structure_violations == 0
    }
}

/// Runs the matcher and the fair-assignment comparison on random
/// all-positive instances with 3..=`max_clients` clients, and audits the
/// layered matcher on random 3-antenna cells.
pub fn run_sweep(options: &SweepOptions) -> Result<SweepReport> {
    let hi = options.max_clients;
    if !(3..=PAIR_LIMIT).contains(&hi) {
        return Err(Error::config(format!("max_clients must lie in 3..={PAIR_LIMIT}, got {hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut report = SweepReport { instances: options.instances, ..SweepReport::default() };
    for _ in 0..options.instances {
        let n = rng.random_range(3..=hi);
        let w = random_positive_weights(&mut rng, n);
        let fast = mwmcm_bipartite(&w, &MatchingConfig::new(2))?;
        let slow = brute_force_two_mimomate(&w)?;
        let total = |m: &MateSet| m.pairs().iter().map(|&(u, v)| w.weight(u, v).unwrap_or(0.0)).sum::<f64>();
        if fast.len() != slow.len() || total(&fast) != total(&slow) {
            report.matcher_mismatches += 1;
        }
        let t = verify_theorems(&w)?;
        if !t.verdict || !t.matches_fair_optimum() {
            report.theorem_violations += 1;
        }
    }

    let table = RateTable::simulation();
    let mut ratio_sum = 0.0;
    let mut ratio_n = 0usize;
    for _ in 0..options.instances / 2 {
        let n = rng.random_range(3..=hi.min(TRIPLE_LIMIT));
        let placements = place_clients(&mut rng, n, 100.0, &PathLoss::default());
        let channels: Vec<ChannelVector> =
            placements.iter().map(|p| sample_channel(&mut rng, p, 3)).collect::<Result<_>>()?;
        let snrs: Vec<f64> = channels.iter().map(ChannelVector::snr_db).collect();
        let mates = n_mimomate(&channels, &snrs, &table, &MatchingConfig::new(3))?;
        report.layered_instances += 1;
        if mates.check_structure(3).is_err() {
            report.layered_structure_violations += 1;
        }
        let triple = |u: ClientId, v: ClientId, x: ClientId| {
            let rv = follower_weight(&[&channels[u]], &channels[v], snrs[v], &table).ok()??;
            let rx = follower_weight(&[&channels[u], &channels[v]], &channels[x], snrs[x], &table).ok()??;
            Some((rv, rx))
        };
        let ids: Vec<ClientId> = (0..n).collect();
        let best = brute_force_three_mimomate(&ids, triple)?;
        if mates.count_of_len(3) < best.cardinality {
            report.layered_short_of_optimum += 1;
        } else if best.weight > 0.0 {
            let got: f64 = mates
                .relations()
                .iter()
                .filter(|r| r.len() == 3)
                .filter_map(|r| triple(r[0], r[1], r[2]).map(|(a, b)| a + b))
                .sum();
            ratio_sum += got / best.weight;
            ratio_n += 1;
        }
    }
    report.layered_weight_ratio_mean = if ratio_n > 0 { ratio_sum / ratio_n as f64 } else { 1.0 };
    Ok(report)
}
