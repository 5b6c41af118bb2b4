//! Routing latency in a UAV ad-hoc network with an optional HAPS relay.
//!
//! A packet crosses a disc of UAVs by greedy forwarding. Each UAV-UAV hop is
//! LoS or obstructed (OLoS, +20 dB) with probability decaying in hop length.
//! When a HAPS is available, an obstructed hop can be replaced by the detour
//! `current -> HAPS -> receiver`, which ends the route.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioOutput;
use crate::channel::{
    Blockage, BlockageModel, BandKind, ErgodicCapacity, LinkBudget, LinkGeometry, LosState, RadioTable,
    SPEED_OF_LIGHT,
};
use crate::channel::capacity::snr_db;
use crate::error::{Error, Result};
use crate::geometry::{disc_points, PlatformKind, Point3};
use crate::harness::table::fmt;
use crate::harness::{run_trials, Parallelism, ResultTable, Stream, TrialContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Forward to the in-range node closest to the receiver.
    LongHop,
    /// Forward to the nearest node inside a cone toward the receiver.
    ShortHop,
    /// Send straight up to the HAPS and down to the receiver.
    HapsRelay,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::LongHop => "long_hop",
            Strategy::ShortHop => "short_hop",
            Strategy::HapsRelay => "haps_relay",
        }
    }
}

/// When an obstructed hop is handed to the HAPS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapsFallback {
    /// Only when the detour is faster than the obstructed hop itself.
    WhenFaster,
    /// On every obstructed hop.
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdhocConfig {
    pub trials: u64,
    pub n_uav: usize,
    pub disc_radius_km: f64,
    pub comm_range_km: f64,
    /// LoS probability decay rate, per km.
    pub beta: f64,
    pub olos_penalty_db: f64,
    pub short_hop_half_angle_deg: f64,
    pub max_hops: usize,
    pub haps_fallback: HapsFallback,
    /// Fading draws behind each ergodic-capacity table.
    pub fading_draws: usize,
    pub distances_km: Vec<f64>,
}

impl Default for AdhocConfig {
    fn default() -> Self {
        AdhocConfig {
            trials: 2000,
            n_uav: 1000,
            disc_radius_km: 20.0,
            comm_range_km: 10.0,
            beta: 0.08,
            olos_penalty_db: 20.0,
            short_hop_half_angle_deg: 30.0,
            max_hops: 200,
            haps_fallback: HapsFallback::WhenFaster,
            fading_draws: 10_000,
            distances_km: (1..=15).map(|k| 2.0 * k as f64).collect(),
        }
    }
}

impl AdhocConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("adhoc.trials", "need at least one trial"));
        }
        if !(self.disc_radius_km > 0.0) || !self.disc_radius_km.is_finite() {
            return Err(Error::config("adhoc.disc_radius_km", "must be finite and positive"));
        }
        if !(self.comm_range_km > 0.0) || self.comm_range_km > 2.0 * self.disc_radius_km {
            return Err(Error::config("adhoc.comm_range_km", "must be positive and at most the disc diameter"));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::config("adhoc.beta", "must be finite and non-negative"));
        }
        if !(self.olos_penalty_db >= 0.0) || !self.olos_penalty_db.is_finite() {
            return Err(Error::config("adhoc.olos_penalty_db", "must be finite and non-negative"));
        }
        if !(self.short_hop_half_angle_deg > 0.0 && self.short_hop_half_angle_deg <= 180.0) {
            return Err(Error::config("adhoc.short_hop_half_angle_deg", "must be in (0, 180]"));
        }
        if self.max_hops == 0 {
            return Err(Error::config("adhoc.max_hops", "must be at least 1"));
        }
        if self.fading_draws == 0 {
            return Err(Error::config("adhoc.fading_draws", "need at least one fading draw"));
        }
        if self.distances_km.is_empty() {
            return Err(Error::config("adhoc.distances_km", "need at least one distance"));
        }
        for &d in &self.distances_km {
            if !(d >= 0.0) || d > 2.0 * self.disc_radius_km {
                return Err(Error::config(
                    "adhoc.distances_km",
                    format!("distance {d} km is outside [0, disc diameter]"),
                ));
            }
        }
        Ok(())
    }

    pub fn blockage(&self) -> Blockage {
        Blockage {
            model: BlockageModel::ExpDistance { beta_per_km: self.beta },
            excess_loss_db: self.olos_penalty_db,
        }
    }
}

/// Link budgets and capacity tables for one run.
#[derive(Debug, Clone)]
pub struct AdhocLinks {
    pub uav_uav: LinkBudget,
    pub uav_haps: LinkBudget,
    pub haps_uav: LinkBudget,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub packet_bits: f64,
    pub blockage: Blockage,
    pub haps: Point3,
    pub uav_altitude_m: f64,
    uav_fading: ErgodicCapacity,
    haps_fading: ErgodicCapacity,
}

impl AdhocLinks {
    pub fn new<R: Rng + ?Sized>(cfg: &AdhocConfig, radio: &RadioTable, rng: &mut R) -> Result<Self> {
        let band = BandKind::Rf;
        let f = radio.carrier_hz(band);
        let p = |k| radio.tx_power_dbm(k);
        let g = |k| radio.gain_dbi(k);
        let (uav, haps) = (PlatformKind::Uav, PlatformKind::Haps);
        Ok(AdhocLinks {
            uav_uav: LinkBudget::new(p(uav), g(uav), g(uav), f),
            uav_haps: LinkBudget::new(p(uav), g(uav), g(haps), f),
            haps_uav: LinkBudget::new(p(haps), g(haps), g(uav), f),
            noise_dbm: radio.noise_dbm(band),
            bandwidth_hz: radio.bandwidth_hz(band),
            packet_bits: radio.packet_size_bits(),
            blockage: cfg.blockage(),
            haps: Point3::new(0.0, 0.0, radio.altitude_m(haps)),
            uav_altitude_m: radio.altitude_m(uav),
            uav_fading: ErgodicCapacity::tabulate(&radio.nakagami(), cfg.fading_draws, rng)?,
            haps_fading: ErgodicCapacity::tabulate(&radio.shadowed_rician(), cfg.fading_draws, rng)?,
        })
    }

    /// Average capacity of a UAV-UAV hop in the given state.
    pub fn uav_capacity(&self, distance_m: f64, state: LosState) -> Result<f64> {
        let snr = snr_db(&self.uav_uav, distance_m, self.blockage.penalty_db(state), self.noise_dbm)?;
        Ok(self.uav_fading.capacity_bps(self.bandwidth_hz, snr))
    }

    fn haps_capacity(&self, budget: &LinkBudget, distance_m: f64) -> Result<f64> {
        let snr = snr_db(budget, distance_m, 0.0, self.noise_dbm)?;
        Ok(self.haps_fading.capacity_bps(self.bandwidth_hz, snr))
    }

    /// The two hops `from -> HAPS -> to`; both always LoS.
    pub fn haps_detour(&self, from: Point3, to: Point3) -> Result<[Hop; 2]> {
        let up = from.distance(&self.haps);
        let down = self.haps.distance(&to);
        Ok([
            Hop {
                from,
                to: self.haps,
                distance_m: up,
                los_state: LosState::Los,
                capacity_bps: self.haps_capacity(&self.uav_haps, up)?,
                via_haps: true,
            },
            Hop {
                from: self.haps,
                to,
                distance_m: down,
                los_state: LosState::Los,
                capacity_bps: self.haps_capacity(&self.haps_uav, down)?,
                via_haps: true,
            },
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub from: Point3,
    pub to: Point3,
    pub distance_m: f64,
    pub los_state: LosState,
    pub capacity_bps: f64,
    pub via_haps: bool,
}

impl Hop {
    pub fn propagation_s(&self) -> f64 {
        self.distance_m / SPEED_OF_LIGHT
    }

    pub fn transmission_s(&self, packet_bits: f64) -> f64 {
        packet_bits / self.capacity_bps
    }

    pub fn latency_s(&self, packet_bits: f64) -> f64 {
        self.propagation_s() + self.transmission_s(packet_bits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    pub hops: Vec<Hop>,
    pub propagation_s: f64,
    pub transmission_s: f64,
    pub total_s: f64,
    pub used_haps: bool,
}

impl RouteResult {
    fn from_hops(hops: Vec<Hop>, packet_bits: f64) -> Self {
        let propagation_s: f64 = hops.iter().map(Hop::propagation_s).sum();
        let transmission_s: f64 = hops.iter().map(|h| h.transmission_s(packet_bits)).sum();
        let used_haps = hops.iter().any(|h| h.via_haps);
        RouteResult {
            hops,
            propagation_s,
            transmission_s,
            total_s: propagation_s + transmission_s,
            used_haps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextHop {
    Receiver,
    Relay(usize),
}

fn usable(visited: &[bool], i: usize) -> bool {
    !visited.get(i).copied().unwrap_or(false)
}

/// Greedy long-hop rule: the receiver if in range, else the in-range unvisited
/// candidate closest to the receiver.
pub fn next_hop_long(
    current: &Point3,
    receiver: &Point3,
    candidates: &[Point3],
    visited: &[bool],
    comm_range_m: f64,
) -> Option<NextHop> {
    if current.distance(receiver) <= comm_range_m {
        return Some(NextHop::Receiver);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if !usable(visited, i) || c == current || current.distance(c) > comm_range_m {
            continue;
        }
        let to_rx = c.distance(receiver);
        if best.is_none_or(|(_, b)| to_rx < b) {
            best = Some((i, to_rx));
        }
    }
    best.map(|(i, _)| NextHop::Relay(i))
}

/// Short-hop rule: the nearest in-range unvisited node inside the cone of
/// `half_angle_deg` around the direction to the receiver. The receiver
/// itself lies on the cone axis and wins when it is the nearest.
pub fn next_hop_short(
    current: &Point3,
    receiver: &Point3,
    candidates: &[Point3],
    visited: &[bool],
    half_angle_deg: f64,
    comm_range_m: f64,
) -> Option<NextHop> {
    let axis = receiver.sub(current);
    let axis_len = axis.norm();
    let cos_half = half_angle_deg.to_radians().cos();
    let mut best: Option<(NextHop, f64)> = None;
    if axis_len <= comm_range_m {
        best = Some((NextHop::Receiver, axis_len));
    }
    for (i, c) in candidates.iter().enumerate() {
        if !usable(visited, i) {
            continue;
        }
        let v = c.sub(current);
        let d = v.norm();
        if d == 0.0 || d > comm_range_m {
            continue;
        }
        if axis_len > 0.0 && v.dot(&axis) < cos_half * d * axis_len {
            continue;
        }
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((NextHop::Relay(i), d));
        }
    }
    best.map(|(n, _)| n)
}

/// UAV-only hop sequence; the HAPS is applied afterwards by [`resolve`].
#[derive(Debug)]
pub struct Trace {
    pub receiver: Point3,
    pub hops: Vec<Hop>,
    /// Why forwarding stopped early, if it did.
    pub failure: Option<Error>,
}

/// Forward hop by hop over the UAVs, drawing one uniform per hop for its
/// blockage state.
pub fn trace<R: Rng + ?Sized>(
    cfg: &AdhocConfig,
    links: &AdhocLinks,
    strategy: Strategy,
    tx: Point3,
    rx: Point3,
    uavs: &[Point3],
    rng: &mut R,
) -> Result<Trace> {
    let range = cfg.comm_range_km * 1e3;
    let mut visited = vec![false; uavs.len()];
    let mut hops = Vec::new();
    let mut current = tx;
    while current != rx {
        if hops.len() >= cfg.max_hops {
            return Ok(Trace {
                receiver: rx,
                hops,
                failure: Some(Error::RouteLoop { cap: cfg.max_hops }),
            });
        }
        let next = match strategy {
            Strategy::LongHop => next_hop_long(&current, &rx, uavs, &visited, range),
            Strategy::ShortHop => next_hop_short(&current, &rx, uavs, &visited, cfg.short_hop_half_angle_deg, range),
            Strategy::HapsRelay => {
                return Ok(Trace {
                    receiver: rx,
                    hops: links.haps_detour(tx, rx)?.to_vec(),
                    failure: None,
                })
            }
        };
        let to = match next {
            Some(NextHop::Receiver) => rx,
            Some(NextHop::Relay(i)) => {
                visited[i] = true;
                uavs[i]
            }
            None => {
                let n = hops.len();
                return Ok(Trace {
                    receiver: rx,
                    hops,
                    failure: Some(Error::RouteStuck { hops: n }),
                });
            }
        };
        let distance_m = current.distance(&to);
        let geo = LinkGeometry {
            distance_m,
            elevation_deg: 0.0,
        };
        let los_state = links.blockage.model.state_from_uniform(&geo, rng.random::<f64>());
        hops.push(Hop {
            from: current,
            to,
            distance_m,
            los_state,
            capacity_bps: links.uav_capacity(distance_m, los_state)?,
            via_haps: false,
        });
        current = to;
    }
    Ok(Trace {
        receiver: rx,
        hops,
        failure: None,
    })
}

/// Latency of a traced route with or without the HAPS fallback.
pub fn resolve(trace: &Trace, links: &AdhocLinks, haps_available: bool, fallback: HapsFallback) -> Result<RouteResult> {
    let packet = links.packet_bits;
    let mut hops = Vec::with_capacity(trace.hops.len() + 1);
    for hop in &trace.hops {
        if haps_available && !hop.via_haps && !hop.los_state.is_los() {
            let detour = links.haps_detour(hop.from, trace.receiver)?;
            let detour_s: f64 = detour.iter().map(|h| h.latency_s(packet)).sum();
            if fallback == HapsFallback::Always || detour_s < hop.latency_s(packet) {
                hops.extend(detour);
                return Ok(RouteResult::from_hops(hops, packet));
            }
        }
        hops.push(*hop);
    }
    match &trace.failure {
        Some(Error::RouteStuck { hops }) => Err(Error::RouteStuck { hops: *hops }),
        Some(Error::RouteLoop { cap }) => Err(Error::RouteLoop { cap: *cap }),
        Some(other) => Err(Error::domain(other.to_string())),
        None => Ok(RouteResult::from_hops(hops, packet)),
    }
}

/// Full route: trace over the UAVs, then apply the HAPS fallback.
#[allow(clippy::too_many_arguments)]
pub fn route<R: Rng + ?Sized>(
    cfg: &AdhocConfig,
    links: &AdhocLinks,
    strategy: Strategy,
    haps_available: bool,
    tx: Point3,
    rx: Point3,
    uavs: &[Point3],
    rng: &mut R,
) -> Result<RouteResult> {
    let t = trace(cfg, links, strategy, tx, rx, uavs, rng)?;
    resolve(&t, links, haps_available, cfg.haps_fallback)
}

/// The five latency curves, in output order.
pub const CURVES: [(Strategy, bool); 5] = [
    (Strategy::LongHop, false),
    (Strategy::ShortHop, false),
    (Strategy::LongHop, true),
    (Strategy::ShortHop, true),
    (Strategy::HapsRelay, true),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteSummary {
    pub propagation_s: f64,
    pub transmission_s: f64,
    pub hops: usize,
}

/// Per-trial outcome: `[distance][curve]`, `None` for stuck routes.
pub type TrialRoutes = Vec<[Option<RouteSummary>; 5]>;

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyPoint {
    pub strategy: Strategy,
    pub haps_available: bool,
    pub distance_km: f64,
    pub mean_total_s: f64,
    pub mean_prop_s: f64,
    pub mean_tx_s: f64,
    pub stuck_rate: f64,
    pub trials: u64,
    /// Trials that produced a route.
    pub routed: u64,
}

fn summary(r: &RouteResult) -> RouteSummary {
    RouteSummary {
        propagation_s: r.propagation_s,
        transmission_s: r.transmission_s,
        hops: r.hops.len(),
    }
}

/// One trial: a fresh UAV deployment shared by every distance and strategy.
pub fn simulate_trial(cfg: &AdhocConfig, links: &AdhocLinks, ctx: &TrialContext) -> Result<TrialRoutes> {
    let alt = links.uav_altitude_m;
    let uavs = disc_points(&mut ctx.rng(Stream::DEPLOYMENT), cfg.n_uav, cfg.disc_radius_km * 1e3, alt);
    let mut out = Vec::with_capacity(cfg.distances_km.len());
    for (di, &d_km) in cfg.distances_km.iter().enumerate() {
        let half = d_km * 1e3 / 2.0;
        let (tx, rx) = (Point3::new(-half, 0.0, alt), Point3::new(half, 0.0, alt));
        let mut row = [None; 5];
        for (si, strategy) in [Strategy::LongHop, Strategy::ShortHop].into_iter().enumerate() {
            let mut rng = ctx.rng(Stream::BLOCKAGE.child((di * 2 + si) as u64));
            let t = trace(cfg, links, strategy, tx, rx, &uavs, &mut rng)?;
            row[si] = resolve(&t, links, false, cfg.haps_fallback).ok().map(|r| summary(&r));
            row[si + 2] = resolve(&t, links, true, cfg.haps_fallback).ok().map(|r| summary(&r));
        }
        let relay = trace(cfg, links, Strategy::HapsRelay, tx, rx, &uavs, &mut ctx.rng(Stream::BLOCKAGE))?;
        row[4] = resolve(&relay, links, true, cfg.haps_fallback).ok().map(|r| summary(&r));
        out.push(row);
    }
    Ok(out)
}

/// Mean latencies per (strategy, HAPS availability, distance) over trials.
pub fn sweep_latency(
    cfg: &AdhocConfig,
    radio: &RadioTable,
    seed: u64,
    parallelism: Parallelism,
) -> Result<(Vec<LatencyPoint>, usize)> {
    cfg.validate()?;
    radio.validate()?;
    let links = AdhocLinks::new(cfg, radio, &mut crate::harness::trials::stream_rng(seed, Stream::TABLES, 0))?;
    let outcomes = run_trials(seed, cfg.trials, parallelism, |ctx| simulate_trial(cfg, &links, ctx))?;
    let mut trials_ok: Vec<&TrialRoutes> = Vec::new();
    for r in outcomes.results.iter().flatten() {
        match r {
            Ok(t) => trials_ok.push(t),
            Err(e) => return Err(Error::domain(e.to_string())),
        }
    }
    let mut points = Vec::new();
    for (ci, &(strategy, haps_available)) in CURVES.iter().enumerate() {
        for (di, &distance_km) in cfg.distances_km.iter().enumerate() {
            let (mut prop, mut tx, mut n) = (0.0, 0.0, 0u64);
            for t in &trials_ok {
                if let Some(s) = t[di][ci] {
                    prop += s.propagation_s;
                    tx += s.transmission_s;
                    n += 1;
                }
            }
            let ran = trials_ok.len() as u64;
            let (mean_prop_s, mean_tx_s) = if n > 0 {
                (prop / n as f64, tx / n as f64)
            } else {
                (f64::NAN, f64::NAN)
            };
            points.push(LatencyPoint {
                strategy,
                haps_available,
                distance_km,
                mean_total_s: mean_prop_s + mean_tx_s,
                mean_prop_s,
                mean_tx_s,
                stuck_rate: if ran > 0 { (ran - n) as f64 / ran as f64 } else { f64::NAN },
                trials: ran,
                routed: n,
            });
        }
    }
    Ok((points, outcomes.failures))
}

pub const COLUMNS: [&str; 8] = [
    "strategy",
    "haps_available",
    "distance_km",
    "mean_total_s",
    "mean_prop_s",
    "mean_tx_s",
    "stuck_rate",
    "trials",
];

pub fn run(cfg: &AdhocConfig, radio: &RadioTable, seed: u64, parallelism: Parallelism) -> Result<ScenarioOutput> {
    let (points, failures) = sweep_latency(cfg, radio, seed, parallelism)?;
    let mut table = ResultTable::new(COLUMNS);
    for p in &points {
        table.push(vec![
            p.strategy.as_str().into(),
            p.haps_available.to_string(),
            fmt(p.distance_km),
            fmt(p.mean_total_s),
            fmt(p.mean_prop_s),
            fmt(p.mean_tx_s),
            fmt(p.stuck_rate),
            p.trials.to_string(),
        ])?;
    }
    Ok(ScenarioOutput {
        main: table,
        extras: Vec::new(),
        failed_trials: failures,
    })
}
