use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    place_clients, projected_snr, sample_channel, subspace_angle, ChannelVector, ClientId, ClientPlacement,
};
use crate::contention::{resolve_contention, BackoffState, ContentionResult, Outcome, Participation};
use crate::error::{Error, Result};
use crate::matching::{n_mimomate, MateSet, MatchingConfig};
use crate::metrics::summarize;
use crate::rate::stream_bits;

use super::{
    ClientLayout, FailureCause, MatchEvent, PacketSize, Protocol, RoundRecord, SimConfig, SimulationRun,
    StreamRecord, TrafficState,
};

const CHANNEL_STREAM: u64 = 0;
const CONTENTION_STREAM: u64 = 1;
const TRAFFIC_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `config.rounds` rounds of the configured protocol.
///
/// Placement and channel draws use their own random stream, so every
/// protocol sees the same channels for a given seed.
pub fn run_simulation(config: &SimConfig) -> Result<SimulationRun> {
    config.validate()?;
    let mut engine = Engine::new(config)?;
    while engine.records.len() < config.rounds as usize {
        engine.round()?;
    }
    let summary = summarize(config, &engine.records, engine.matchings.len() as u64);
    Ok(SimulationRun {
        config: config.clone(),
        placements: engine.placements,
        records: engine.records,
        matchings: engine.matchings,
        summary,
    })
}

/// A stream scheduled in the current round.
#[derive(Debug, Clone)]
struct Planned {
    client: ClientId,
    rate: Option<f64>,
    snr_db: f64,
    /// Start of the stream's preamble.
    start_us: f64,
}

#[derive(Debug, Clone)]
struct Lead {
    client: ClientId,
    rate: f64,
    bits: u64,
    start_us: f64,
    end_data_us: f64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    channel_rng: ChaCha8Rng,
    contention_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    placements: Vec<ClientPlacement>,
    channels: Vec<ChannelVector>,
    snrs: Vec<f64>,
    eligible: Vec<bool>,
    backoff: Vec<BackoffState>,
    traffic: TrafficState,
    mates: MateSet,
    /// Channel time charged to the next round for a matching announcement.
    pending_announce_us: f64,
    records: Vec<RoundRecord>,
    matchings: Vec<MatchEvent>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        let mut channel_rng = rng_for(cfg.seed, CHANNEL_STREAM);
        let mut traffic_rng = rng_for(cfg.seed, TRAFFIC_STREAM);
        let placements = match &cfg.clients {
            ClientLayout::Random { count, radius_m } => place_clients(&mut channel_rng, *count, *radius_m, &cfg.path_loss),
            ClientLayout::Explicit { placements } => placements.clone(),
        };
        let n = placements.len();
        let traffic = TrafficState::new(cfg.traffic, n, &mut traffic_rng);
        Ok(Engine {
            cfg,
            channel_rng,
            contention_rng: rng_for(cfg.seed, CONTENTION_STREAM),
            traffic_rng,
            placements,
            channels: Vec::new(),
            snrs: Vec::new(),
            eligible: Vec::new(),
            backoff: vec![BackoffState::new(cfg.n_antennas, cfg.contention); n],
            traffic,
            mates: MateSet::default(),
            pending_announce_us: 0.0,
            records: Vec::new(),
            matchings: Vec::new(),
        })
    }

    fn n(&self) -> usize {
        self.cfg.n_antennas
    }

    fn is_legacy(&self, c: ClientId) -> bool {
        self.cfg.legacy_ids.contains(&c)
    }

    fn redraw_channels(&mut self) -> Result<()> {
        let n = self.n();
        self.channels = self
            .placements
            .iter()
            .map(|p| sample_channel(&mut self.channel_rng, p, n))
            .collect::<Result<_>>()?;
        self.snrs = self.channels.iter().map(ChannelVector::snr_db).collect();
        let table = &self.cfg.rate_table;
        self.eligible = self.snrs.iter().map(|&s| table.snr_to_rate(s).is_some()).collect();
        if !self.eligible.iter().any(|&e| e) {
            return Err(Error::config(format!(
                "round {}: no client reaches the AP above the {} dB floor",
                self.records.len(),
                table.floor_snr_db()
            )));
        }
        if self.cfg.protocol.uses_matching() {
            self.rematch()?;
        }
        Ok(())
    }

    fn rematch(&mut self) -> Result<()> {
        self.mates = if self.n() < 2 {
            MateSet::default()
        } else {
            let ids: Vec<usize> = (0..self.channels.len()).filter(|&c| self.eligible[c]).collect();
            let channels: Vec<ChannelVector> = ids.iter().map(|&c| self.channels[c].clone()).collect();
            let snrs: Vec<f64> = ids.iter().map(|&c| self.snrs[c]).collect();
            let config = MatchingConfig::new(self.n()).with_legacy(self.cfg.legacy_ids.iter().copied());
            n_mimomate(&channels, &snrs, &self.cfg.rate_table, &config)?
        };
        if !self.mates.is_empty() {
            let ids: usize = self.mates.relations().iter().map(Vec::len).sum();
            self.pending_announce_us = self.cfg.contention.difs_us + self.cfg.timing.announce_us(ids);
            self.matchings.push(MatchEvent { round: self.records.len() as u64, mates: self.mates.clone() });
        }
        Ok(())
    }

    fn backlogged(&self, c: ClientId) -> bool {
        self.eligible[c] && self.traffic.has_traffic(c)
    }

    fn contenders(&self) -> Vec<ClientId> {
        (0..self.channels.len()).filter(|&c| self.backlogged(c)).collect()
    }

    fn packet_bits(&mut self) -> u64 {
        let bytes = match self.cfg.packet {
            PacketSize::Fixed { bytes } => bytes,
            PacketSize::Uniform { min_bytes, max_bytes } => self.traffic_rng.random_range(min_bytes..=max_bytes),
        };
        8 * bytes as u64
    }

    fn capped(&self, c: ClientId, bits: u64) -> u64 {
        self.traffic.available_bits(c).map_or(bits, |b| b.min(bits))
    }

    fn standalone_rate(&self, c: ClientId) -> f64 {
        self.cfg.rate_table.snr_to_rate(self.snrs[c]).expect("eligible clients are decodable")
    }

    fn round(&mut self) -> Result<()> {
        let index = self.records.len() as u64;
        let redraw_every = self.cfg.rematch_every.unwrap_or(self.cfg.rounds);
        if self.channels.is_empty() || index.is_multiple_of(redraw_every) {
            self.redraw_channels()?;
        }
        // Bursty idle periods produce no record.
        while self.contenders().is_empty() {
            let wait = self.traffic.time_to_next_arrival_us();
            self.traffic.step(wait, &mut self.traffic_rng);
        }
        let packet = self.packet_bits();
        let all_legacy = self.contenders().iter().all(|&c| self.is_legacy(c));
        let record = match self.cfg.protocol {
            _ if all_legacy => self.legacy_round(index, packet),
            Protocol::Legacy80211 => self.legacy_round(index, packet),
            Protocol::Mimomate | Protocol::MimomateAngle => self.mimomate_round(index, packet)?,
            Protocol::Sam => self.sam_round(index, packet)?,
            Protocol::Mrc => self.mrc_round(index, packet)?,
            Protocol::MaxThroughputFirst | Protocol::MaxAngleFirst => self.greedy_round(index, packet)?,
        };
        self.traffic.step(record.duration_us(), &mut self.traffic_rng);
        self.records.push(record);
        Ok(())
    }

    /// A fresh stream-1 backoff for every candidate, as in each offline
    /// contention round of the testbed.
    fn dcf_draws(&mut self, candidates: &[ClientId]) -> Vec<(ClientId, u32)> {
        candidates.iter().map(|&c| (c, self.backoff[c].draw_backoff(1, &mut self.contention_rng))).collect()
    }

    /// Stream-1 DCF among all backlogged clients. Collisions are resolved
    /// inside the round: the colliders' frames are lost, their windows
    /// double, and everyone draws again until one client wins alone.
    ///
    /// Returns the winner and the channel time spent before its preamble.
    fn first_stream(&mut self, packet: u64) -> (ClientId, f64) {
        let p = self.cfg.contention;
        let t = self.cfg.timing;
        let mut elapsed = std::mem::take(&mut self.pending_announce_us);
        loop {
            let contenders = self.contenders();
            let draws = self.dcf_draws(&contenders);
            match resolve_contention(&draws).expect("at least one contender") {
                ContentionResult::Winner { client, slots } => {
                    elapsed += p.difs_us + slots as f64 * p.slot_us;
                    for &c in &contenders {
                        if c != client {
                            self.backoff[c].record(1, Outcome::Deferred);
                        }
                    }
                    return (client, elapsed);
                }
                ContentionResult::Collision { clients, slots } => {
                    let longest = clients
                        .iter()
                        .map(|&c| t.frame_us(self.capped(c, packet), self.standalone_rate(c)))
                        .fold(0.0, f64::max);
                    elapsed += p.difs_us + slots as f64 * p.slot_us + longest + p.sifs_us + t.ack_us();
                    for &c in &clients {
                        self.backoff[c].record(1, Outcome::Collision);
                        let lost = self.capped(c, packet);
                        self.traffic.consume(c, lost);
                    }
                    if self.contenders().is_empty() {
                        // Every backlogged client lost its last packet; wait for more.
                        self.traffic.step(elapsed, &mut self.traffic_rng);
                        let wait = self.traffic.time_to_next_arrival_us();
                        self.traffic.step(wait, &mut self.traffic_rng);
                        elapsed = 0.0;
                    }
                }
            }
        }
    }

    fn lead(&mut self, packet: u64) -> Lead {
        let (client, start_us) = self.first_stream(packet);
        let rate = self.standalone_rate(client);
        let bits = self.capped(client, packet);
        let end_data_us = start_us + self.cfg.timing.frame_us(bits, rate);
        Lead { client, rate, bits, start_us, end_data_us }
    }

    fn lead_planned(&self, lead: &Lead) -> Planned {
        Planned { client: lead.client, rate: Some(lead.rate), snr_db: self.snrs[lead.client], start_us: lead.start_us }
    }

    /// Payload time left to a stream that starts its preamble at `start_us`.
    fn room(&self, lead: &Lead, start_us: f64, rate: Option<f64>) -> f64 {
        let t = &self.cfg.timing;
        let rate = rate.unwrap_or_else(|| self.cfg.rate_table.base_rate());
        lead.end_data_us - start_us - t.plcp_us - t.mac_header_us(rate)
    }

    fn fits(&self, lead: &Lead, start_us: f64, rate: Option<f64>) -> bool {
        self.room(lead, start_us, rate) >= self.cfg.timing.min_fragment_us
    }

    /// Projected SNR, rate and angle of `c` joining after `chain`.
    fn join_metrics(&self, chain: &[ClientId], c: ClientId) -> Result<(f64, Option<f64>, f64)> {
        let ongoing: Vec<&ChannelVector> = chain.iter().map(|&o| &self.channels[o]).collect();
        let theta = subspace_angle(&self.channels[c], &ongoing)?;
        let snr = projected_snr(self.snrs[c], theta)?;
        Ok((snr, self.cfg.rate_table.snr_to_rate(snr), theta))
    }

    /// Modern backlogged clients not yet transmitting in this round.
    fn joiners(&self, plan: &[Planned]) -> Vec<ClientId> {
        self.contenders()
            .into_iter()
            .filter(|&c| !self.is_legacy(c) && plan.iter().all(|s| s.client != c))
            .collect()
    }

    fn legacy_round(&mut self, index: u64, packet: u64) -> RoundRecord {
        let lead = self.lead(packet);
        let plan = vec![self.lead_planned(&lead)];
        self.finalize(index, &lead, plan, FailureCause::None)
    }

    fn mimomate_round(&mut self, index: u64, packet: u64) -> Result<RoundRecord> {
        let lead = self.lead(packet);
        let mut plan = vec![self.lead_planned(&lead)];
        let mut cause = FailureCause::None;
        let followers: Vec<ClientId> =
            self.mates.relation_led_by(lead.client).map(|r| r[1..].to_vec()).unwrap_or_default();
        for f in followers {
            if !self.backlogged(f) {
                continue;
            }
            let chain: Vec<ClientId> = plan.iter().map(|s| s.client).collect();
            let (snr, rate, _) = self.join_metrics(&chain, f)?;
            if rate.is_none() {
                // Without its skipped predecessor the follower's projection can fall below the floor.
                continue;
            }
            // Followers count preambles and start right after the previous one.
            let start = lead.start_us + plan.len() as f64 * self.cfg.timing.plcp_us;
            if !self.fits(&lead, start, rate) {
                cause = FailureCause::InsufficientAirtime;
                break;
            }
            plan.push(Planned { client: f, rate, snr_db: snr, start_us: start });
        }
        if self.cfg.protocol == Protocol::MimomateAngle && cause == FailureCause::None {
            cause = self.contend_joins(&lead, &mut plan, true)?;
        }
        Ok(self.finalize(index, &lead, plan, cause))
    }

    fn sam_round(&mut self, index: u64, packet: u64) -> Result<RoundRecord> {
        let lead = self.lead(packet);
        let mut plan = vec![self.lead_planned(&lead)];
        let cause = self.contend_joins(&lead, &mut plan, false)?;
        Ok(self.finalize(index, &lead, plan, cause))
    }

    /// Per-stream contention during the ongoing transmission, for positions
    /// `plan.len() + 1 ..= N`. Plain DCF windows for SAM, angle-scaled
    /// windows when `angle_scaled`. Any tie collides the whole round.
    fn contend_joins(&mut self, lead: &Lead, plan: &mut Vec<Planned>, angle_scaled: bool) -> Result<FailureCause> {
        let p = self.cfg.contention;
        let floor = self.cfg.rate_table.floor_snr_db();
        while plan.len() < self.n() {
            let k = plan.len() + 1;
            let prev_start = plan.last().expect("lead present").start_us;
            // Nobody starts a contention that cannot end in time.
            let earliest = prev_start + self.cfg.timing.plcp_us + p.difs_us + p.slot_us;
            if !self.fits(lead, earliest, Some(self.cfg.rate_table.top_rate())) {
                return Ok(FailureCause::None);
            }
            let chain: Vec<ClientId> = plan.iter().map(|s| s.client).collect();
            let mut draws = Vec::new();
            let mut metrics = Vec::new();
            for c in self.joiners(plan) {
                let (snr, rate, theta) = self.join_metrics(&chain, c)?;
                let slots = if angle_scaled {
                    match self.backoff[c].angle_cw_update(k, theta, snr, floor)? {
                        Participation::GiveUp => continue,
                        Participation::Contend => self.backoff[c].draw_current(k, &mut self.contention_rng),
                    }
                } else {
                    // Rate adaptation knows the post-projection SNR and stays silent below the floor.
                    if rate.is_none() {
                        continue;
                    }
                    self.backoff[c].draw_backoff(k, &mut self.contention_rng)
                };
                draws.push((c, slots));
                metrics.push((c, snr, rate));
            }
            if draws.is_empty() {
                return Ok(FailureCause::None);
            }
            let lookup = |c: ClientId| metrics.iter().find(|m| m.0 == c).copied().expect("drawn client");
            match resolve_contention(&draws)? {
                ContentionResult::Winner { client, slots } => {
                    for &(c, _) in &draws {
                        if c != client {
                            self.backoff[c].record(k, Outcome::Deferred);
                        }
                    }
                    let (_, snr, rate) = lookup(client);
                    let start = prev_start + self.cfg.timing.plcp_us + p.difs_us + slots as f64 * p.slot_us;
                    if !self.fits(lead, start, rate) {
                        self.backoff[client].record(k, Outcome::Deferred);
                        return Ok(FailureCause::InsufficientAirtime);
                    }
                    self.backoff[client].record(k, Outcome::Success);
                    plan.push(Planned { client, rate, snr_db: snr, start_us: start });
                }
                ContentionResult::Collision { mut clients, slots } => {
                    let start = prev_start + self.cfg.timing.plcp_us + p.difs_us + slots as f64 * p.slot_us;
                    for &(c, _) in &draws {
                        let outcome = if clients.contains(&c) { Outcome::Collision } else { Outcome::Deferred };
                        self.backoff[c].record(k, outcome);
                    }
                    clients.shuffle(&mut self.contention_rng);
                    for c in clients {
                        let (_, snr, rate) = lookup(c);
                        plan.push(Planned { client: c, rate, snr_db: snr, start_us: start });
                    }
                    return Ok(FailureCause::Collision);
                }
            }
        }
        Ok(FailureCause::None)
    }

    fn greedy_round(&mut self, index: u64, packet: u64) -> Result<RoundRecord> {
        let lead = self.lead(packet);
        let mut plan = vec![self.lead_planned(&lead)];
        let mut cause = FailureCause::None;
        let by_angle = self.cfg.protocol == Protocol::MaxAngleFirst;
        while plan.len() < self.n() {
            let chain: Vec<ClientId> = plan.iter().map(|s| s.client).collect();
            // (client, snr, rate, theta)
            let mut best: Option<(ClientId, f64, f64, f64)> = None;
            for c in self.joiners(&plan) {
                let (snr, rate, theta) = self.join_metrics(&chain, c)?;
                let Some(rate) = rate else { continue };
                let better = match best {
                    None => true,
                    Some((_, _, _, bt)) if by_angle => theta > bt,
                    Some((_, _, br, bt)) => rate > br || (rate == br && theta > bt),
                };
                if better {
                    best = Some((c, snr, rate, theta));
                }
            }
            let Some((client, snr, rate, _)) = best else { break };
            let start = lead.start_us + plan.len() as f64 * self.cfg.timing.plcp_us;
            if !self.fits(&lead, start, Some(rate)) {
                cause = FailureCause::InsufficientAirtime;
                break;
            }
            plan.push(Planned { client, rate: Some(rate), snr_db: snr, start_us: start });
        }
        Ok(self.finalize(index, &lead, plan, cause))
    }

    /// `N` RTS rounds, then one CTS listing the admitted clients, then
    /// concurrent data. A round in which more RTSs arrive than the AP has
    /// degrees of freedom left loses all of them.
    fn mrc_round(&mut self, index: u64, packet: u64) -> Result<RoundRecord> {
        let p = self.cfg.contention;
        let t = self.cfg.timing;
        let n = self.n();
        let mut elapsed = std::mem::take(&mut self.pending_announce_us);
        let mut admitted: Vec<Planned> = Vec::new();
        while admitted.is_empty() {
            for _ in 0..n {
                let remaining = n - admitted.len();
                let candidates: Vec<ClientId> = self
                    .contenders()
                    .into_iter()
                    .filter(|&c| admitted.iter().all(|a| a.client != c))
                    .filter(|&c| !(self.is_legacy(c) && !admitted.is_empty()))
                    .collect();
                if remaining == 0 || candidates.is_empty() {
                    elapsed += p.difs_us + t.rts_us();
                    continue;
                }
                let draws = self.dcf_draws(&candidates);
                let min = draws.iter().map(|d| d.1).min().expect("non-empty");
                elapsed += p.difs_us + min as f64 * p.slot_us + t.rts_us();
                let mut senders: Vec<ClientId> = draws.iter().filter(|d| d.1 == min).map(|d| d.0).collect();
                for &(c, s) in &draws {
                    if s != min {
                        self.backoff[c].record(1, Outcome::Deferred);
                    }
                }
                if senders.len() > remaining {
                    for &c in &senders {
                        self.backoff[c].record(1, Outcome::Collision);
                    }
                    continue;
                }
                senders.shuffle(&mut self.contention_rng);
                // A legacy sender can only lead.
                senders.sort_by_key(|&c| !self.is_legacy(c));
                for c in senders {
                    let chain: Vec<ClientId> = admitted.iter().map(|a| a.client).collect();
                    let (snr, rate, _) = self.join_metrics(&chain, c)?;
                    let legacy_blocked = self.is_legacy(c) && !admitted.is_empty();
                    if rate.is_none() || legacy_blocked {
                        self.backoff[c].record(1, Outcome::Deferred);
                        continue;
                    }
                    self.backoff[c].record(1, Outcome::Success);
                    admitted.push(Planned { client: c, rate, snr_db: snr, start_us: 0.0 });
                }
            }
        }
        elapsed += p.sifs_us + t.cts_us() + p.sifs_us;
        for a in &mut admitted {
            a.start_us = elapsed;
        }
        let first = admitted[0].client;
        let rate = admitted[0].rate.expect("admitted streams are decodable");
        let bits = self.capped(first, packet);
        let lead = Lead { client: first, rate, bits, start_us: elapsed, end_data_us: elapsed + t.frame_us(bits, rate) };
        Ok(self.finalize(index, &lead, admitted, FailureCause::None))
    }

    /// Turns a plan into a record: payload times, SIC cascade, delivered
    /// bits, the shared ACK, and backlog bookkeeping.
    fn finalize(&mut self, index: u64, lead: &Lead, plan: Vec<Planned>, cause: FailureCause) -> RoundRecord {
        let t = self.cfg.timing;
        let p = self.cfg.contention;
        let duration = lead.end_data_us + p.sifs_us + t.ack_us();
        let collided = cause == FailureCause::Collision;
        // Streams are decoded last-joined first; an undecodable stream
        // leaves interference on every stream that joined before it.
        let cascade_to = plan.iter().rposition(|s| s.rate.is_none()).map(|i| i + 1).unwrap_or(0);
        let cause = if !collided && cascade_to > 0 { FailureCause::SicCascade } else { cause };
        let mut streams = Vec::with_capacity(plan.len());
        for (i, s) in plan.iter().enumerate() {
            let data_us = if i == 0 {
                lead.bits as f64 / lead.rate
            } else {
                self.room(lead, s.start_us, s.rate).max(0.0)
            };
            let attempted = if i == 0 {
                lead.bits
            } else {
                self.capped(s.client, s.rate.map_or(0, |r| stream_bits(r, data_us)))
            };
            let decoded = !collided && i + 1 > cascade_to;
            self.traffic.consume(s.client, attempted);
            streams.push(StreamRecord {
                position: i + 1,
                client_id: s.client,
                rate_mbps: s.rate.unwrap_or(0.0),
                effective_snr_db: s.snr_db,
                data_us,
                overhead_us: duration - data_us,
                bits: if decoded { attempted } else { 0 },
                decoded,
            });
        }
        // The first stream's window learns from whether its ACK came back.
        let outcome = if streams[0].decoded { Outcome::Success } else { Outcome::Collision };
        self.backoff[lead.client].record(1, outcome);
        RoundRecord { round: index, protocol: self.cfg.protocol, streams, failure_cause: cause }
    }
}
