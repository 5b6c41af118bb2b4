//! HAPS-based integrated access and backhaul.
//!
//! Rings of HAPS form a tree rooted at a macro base station (MBS) at the
//! disc center. Every node splits its spectrum between access for the users
//! in its cell and backhaul to its children. Shares are sized so that every
//! user in the region can get the same target rate, the largest one the most
//! loaded node can sustain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioOutput;
use crate::channel::capacity::snr_db;
use crate::channel::{
    linear_to_db, BandKind, Blockage, BlockageModel, ErgodicCapacity, LinkBudget, LinkGeometry, RadioTable,
};
use crate::error::{Error, Result};
use crate::geometry::{elevation_angle, ppp_disc_points, PlatformKind, Point3};
use crate::harness::table::fmt;
use crate::harness::trials::stream_rng;
use crate::harness::{run_trials, Parallelism, ResultTable, Stream, TrialContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IabConfig {
    /// User drops for the uplink aggregates; the downlink map is deterministic.
    pub trials: u64,
    pub disc_radius_km: f64,
    pub layer_counts: Vec<usize>,
    pub ring_radii_km: Vec<f64>,
    pub mbs_height_m: f64,
    /// With `false` only the MBS serves the region.
    pub haps_enabled: bool,
    pub grid_step_km: f64,
    pub user_density_per_km2: f64,
    pub active_fraction: f64,
    pub sigmoid_a: f64,
    pub sigmoid_b: f64,
    pub nlos_excess_db: f64,
    pub fading_draws: usize,
}

impl Default for IabConfig {
    fn default() -> Self {
        IabConfig {
            trials: 1,
            disc_radius_km: 50.0,
            layer_counts: vec![4, 8, 16],
            ring_radii_km: vec![12.5, 25.0, 37.5],
            mbs_height_m: 10.0,
            haps_enabled: true,
            grid_step_km: 1.0,
            user_density_per_km2: 1.0,
            active_fraction: 0.1,
            sigmoid_a: 9.61,
            sigmoid_b: 0.16,
            nlos_excess_db: 20.0,
            fading_draws: 10_000,
        }
    }
}

impl IabConfig {
    pub fn validate(&self) -> Result<()> {
        let k = |name: &str| format!("iab.{name}");
        if self.trials == 0 {
            return Err(Error::config(k("trials"), "need at least one trial"));
        }
        if !(self.disc_radius_km > 0.0) || !self.disc_radius_km.is_finite() {
            return Err(Error::config(k("disc_radius_km"), "must be finite and positive"));
        }
        if self.layer_counts.len() != self.ring_radii_km.len() {
            return Err(Error::config(k("ring_radii_km"), "need one radius per layer"));
        }
        if self.layer_counts.contains(&0) {
            return Err(Error::config(k("layer_counts"), "every layer needs at least one HAPS"));
        }
        if self.ring_radii_km.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::config(k("ring_radii_km"), "radii must be finite and positive"));
        }
        if self.ring_radii_km.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(k("ring_radii_km"), "radii must be strictly increasing"));
        }
        if !(self.mbs_height_m >= 0.0) || !self.mbs_height_m.is_finite() {
            return Err(Error::config(k("mbs_height_m"), "must be finite and non-negative"));
        }
        if !(self.grid_step_km > 0.0) || !self.grid_step_km.is_finite() {
            return Err(Error::config(k("grid_step_km"), "must be finite and positive"));
        }
        if !(self.user_density_per_km2 >= 0.0) || !self.user_density_per_km2.is_finite() {
            return Err(Error::config(k("user_density_per_km2"), "must be finite and non-negative"));
        }
        if !(self.active_fraction > 0.0 && self.active_fraction <= 1.0) {
            return Err(Error::config(k("active_fraction"), "must be in (0, 1]"));
        }
        self.blockage()
            .validate()
            .map_err(|e| Error::config(k("sigmoid_a"), e.to_string()))?;
        if self.fading_draws == 0 {
            return Err(Error::config(k("fading_draws"), "need at least one fading draw"));
        }
        Ok(())
    }

    pub fn blockage(&self) -> Blockage {
        Blockage {
            model: BlockageModel::ElevationSigmoid {
                a: self.sigmoid_a,
                b: self.sigmoid_b,
            },
            excess_loss_db: self.nlos_excess_db,
        }
    }

    fn active_density(&self) -> f64 {
        self.user_density_per_km2 * self.active_fraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IabNode {
    pub id: usize,
    /// 0 for the MBS.
    pub layer: usize,
    pub position: Point3,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IabTopology {
    pub nodes: Vec<IabNode>,
}

impl IabTopology {
    pub fn children(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(move |n| n.parent == Some(id)).map(|n| n.id)
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.layer).max().unwrap_or(0)
    }

    /// Hops from `id` up to the MBS.
    pub fn path_to_root(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            if path.len() > self.nodes.len() {
                break;
            }
            path.push(p);
            cur = p;
        }
        path
    }

    /// Nodes ordered so that every child comes after its parent.
    fn top_down(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| (self.nodes[i].layer, i));
        order
    }
}

/// MBS at the center and equally spaced HAPS rings. Rings after the first
/// are rotated by half their own spacing; each HAPS hangs off the nearest node
/// of the layer inside it.
pub fn build_topology(cfg: &IabConfig, haps_altitude_m: f64) -> Result<IabTopology> {
    cfg.validate()?;
    let mut nodes = vec![IabNode {
        id: 0,
        layer: 0,
        position: Point3::new(0.0, 0.0, cfg.mbs_height_m),
        parent: None,
    }];
    if !cfg.haps_enabled {
        return Ok(IabTopology { nodes });
    }
    let mut inner: Vec<usize> = vec![0];
    for (li, (&count, &radius_km)) in cfg.layer_counts.iter().zip(&cfg.ring_radii_km).enumerate() {
        let layer = li + 1;
        let step = std::f64::consts::TAU / count as f64;
        let offset = if layer == 1 { 0.0 } else { step / 2.0 };
        let mut this = Vec::with_capacity(count);
        for i in 0..count {
            let a = offset + step * i as f64;
            let position = Point3::new(radius_km * 1e3 * a.cos(), radius_km * 1e3 * a.sin(), haps_altitude_m);
            let parent = inner
                .iter()
                .copied()
                .min_by(|&x, &y| {
                    nodes[x]
                        .position
                        .distance(&position)
                        .total_cmp(&nodes[y].position.distance(&position))
                })
                .expect("inner layer is never empty");
            let id = nodes.len();
            nodes.push(IabNode {
                id,
                layer,
                position,
                parent: Some(parent),
            });
            this.push(id);
        }
        inner = this;
    }
    Ok(IabTopology { nodes })
}

/// Radio constants for one run.
#[derive(Debug, Clone)]
pub struct IabLinks {
    pub node_tx_dbm: f64,
    pub node_gain_dbi: f64,
    pub user_tx_dbm: f64,
    pub user_gain_dbi: f64,
    pub user_altitude_m: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub blockage: Blockage,
    haps_fading: ErgodicCapacity,
    mbs_fading: ErgodicCapacity,
}

impl IabLinks {
    pub fn new<R: Rng + ?Sized>(cfg: &IabConfig, radio: &RadioTable, rng: &mut R) -> Result<Self> {
        let band = BandKind::MmWave;
        Ok(IabLinks {
            // the MBS has HAPS-grade power and gain
            node_tx_dbm: radio.tx_power_dbm(PlatformKind::Haps),
            node_gain_dbi: radio.gain_dbi(PlatformKind::Haps),
            user_tx_dbm: radio.tx_power_dbm(PlatformKind::User),
            user_gain_dbi: radio.gain_dbi(PlatformKind::User),
            user_altitude_m: radio.altitude_m(PlatformKind::User),
            carrier_hz: radio.carrier_hz(band),
            bandwidth_hz: radio.bandwidth_hz(band),
            noise_dbm: radio.noise_dbm(band),
            blockage: cfg.blockage(),
            haps_fading: ErgodicCapacity::tabulate(&radio.shadowed_rician(), cfg.fading_draws, rng)?,
            mbs_fading: ErgodicCapacity::tabulate(&radio.nakagami(), cfg.fading_draws, rng)?,
        })
    }

    fn geometry(&self, node: &IabNode, user: &Point3) -> LinkGeometry {
        LinkGeometry {
            distance_m: node.position.distance(user).max(1e-3),
            elevation_deg: elevation_angle(user, &node.position).unwrap_or(90.0),
        }
    }

    fn budget(&self, downlink: bool) -> LinkBudget {
        let tx = if downlink { self.node_tx_dbm } else { self.user_tx_dbm };
        LinkBudget::new(tx, self.node_gain_dbi, self.user_gain_dbi, self.carrier_hz)
    }

    /// Mean received power at `user` from `node`, blockage and fading averaged.
    pub fn mean_rx_dbm(&self, node: &IabNode, user: &Point3) -> Result<f64> {
        let geo = self.geometry(node, user);
        let rx = self.budget(true).rx_dbm(geo.distance_m)?;
        Ok(if node.layer == 0 {
            rx + linear_to_db(self.blockage.mean_power_factor(&geo)) + linear_to_db(self.mbs_fading.fading().mean_power())
        } else {
            rx + linear_to_db(self.haps_fading.fading().mean_power())
        })
    }

    /// Average spectral efficiency between `node` and `user`.
    pub fn access_se(&self, node: &IabNode, user: &Point3, downlink: bool) -> Result<f64> {
        let geo = self.geometry(node, user);
        let snr = snr_db(&self.budget(downlink), geo.distance_m, 0.0, self.noise_dbm)?;
        Ok(if node.layer == 0 {
            let p = self.blockage.model.los_probability(&geo);
            p * self.mbs_fading.spectral_efficiency(snr)
                + (1.0 - p) * self.mbs_fading.spectral_efficiency(snr - self.blockage.excess_loss_db)
        } else {
            self.haps_fading.spectral_efficiency(snr)
        })
    }

    /// Spectral efficiency of the backhaul link between two nodes.
    pub fn backhaul_se(&self, a: &IabNode, b: &IabNode) -> Result<f64> {
        let budget = LinkBudget::new(self.node_tx_dbm, self.node_gain_dbi, self.node_gain_dbi, self.carrier_hz);
        let snr = snr_db(&budget, a.position.distance(&b.position), 0.0, self.noise_dbm)?;
        Ok(self.haps_fading.spectral_efficiency(snr))
    }

    /// Node with the strongest mean received power at `user`.
    pub fn serving_node(&self, topo: &IabTopology, user: &Point3) -> Result<usize> {
        let mut best = (0, f64::NEG_INFINITY);
        for n in &topo.nodes {
            let p = self.mean_rx_dbm(n, user)?;
            if p > best.1 {
                best = (n.id, p);
            }
        }
        Ok(best.0)
    }
}

/// Ground points of a square grid inside the disc.
pub fn grid_points(cfg: &IabConfig, altitude_m: f64) -> Vec<Point3> {
    let step = cfg.grid_step_km * 1e3;
    let r = cfg.disc_radius_km * 1e3;
    let n = (r / step).floor() as i64;
    let mut pts = Vec::new();
    for ix in -n..=n {
        for iy in -n..=n {
            let (x, y) = (ix as f64 * step, iy as f64 * step);
            if x * x + y * y <= r * r * (1.0 + 1e-12) {
                pts.push(Point3::new(x, y, altitude_m));
            }
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub position: Point3,
    pub serving: usize,
    /// Downlink spectral efficiency from the serving node.
    pub se: f64,
}

/// Spectrum shares and the common per-user target rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceAllocation {
    /// Per-user downlink rate the allocation supports, bit/s.
    pub target_rate_bps: f64,
    /// Expected active users in each node's cell.
    pub demand: Vec<f64>,
    /// Fraction of each node's spectrum spent on its own users.
    pub access_share: Vec<f64>,
    /// Fraction of the parent's spectrum spent on the backhaul into each node.
    pub backhaul_share: Vec<f64>,
    /// Backhaul spectral efficiency into each node (0 for the MBS).
    pub backhaul_se: Vec<f64>,
    /// Users in each node's subtree.
    pub subtree_demand: Vec<f64>,
    /// Node whose band is fully used at the target rate.
    pub bottleneck: Option<usize>,
}

impl ResourceAllocation {
    /// Total share used at node `id`: its access plus backhaul to its children.
    pub fn node_share(&self, topo: &IabTopology, id: usize) -> f64 {
        self.access_share[id] + topo.children(id).map(|c| self.backhaul_share[c]).sum::<f64>()
    }

    /// Downlink rate carried by the backhaul into `id`.
    pub fn backhaul_rate_bps(&self, id: usize, bandwidth_hz: f64) -> f64 {
        self.backhaul_share[id] * bandwidth_hz * self.backhaul_se[id]
    }
}

/// Closed-form equal-rate allocation.
///
/// Node `n` needs `R * H_n / B` of its band for access, where `H_n` sums
/// `users / SE` over its cell, plus `R * T_c / (B * SE_c)` for each child `c`
/// whose subtree holds `T_c` users. The common rate `R` is the largest that
/// keeps every node within its band.
pub fn allocate_resources(
    topo: &IabTopology,
    links: &IabLinks,
    cells: &[GridCell],
    users_per_cell: f64,
) -> Result<ResourceAllocation> {
    let n = topo.nodes.len();
    let b = links.bandwidth_hz;
    let mut demand = vec![0.0; n];
    let mut inv_se = vec![0.0; n];
    for c in cells {
        demand[c.serving] += users_per_cell;
        inv_se[c.serving] += if c.se > 0.0 { users_per_cell / c.se } else { f64::INFINITY };
    }
    let mut backhaul_se = vec![0.0; n];
    for node in &topo.nodes {
        if let Some(p) = node.parent {
            backhaul_se[node.id] = links.backhaul_se(&topo.nodes[p], node)?;
        }
    }
    let mut subtree_demand = demand.clone();
    for &id in topo.top_down().iter().rev() {
        if let Some(p) = topo.nodes[id].parent {
            subtree_demand[p] += subtree_demand[id];
        }
    }
    let mut rate = f64::INFINITY;
    let mut bottleneck = None;
    for node in &topo.nodes {
        let load = inv_se[node.id] / b
            + topo
                .children(node.id)
                .map(|c| subtree_demand[c] / (b * backhaul_se[c]))
                .sum::<f64>();
        if load > 0.0 && 1.0 / load < rate {
            rate = 1.0 / load;
            bottleneck = Some(node.id);
        }
    }
    if !rate.is_finite() {
        rate = 0.0;
    }
    let access_share = inv_se.iter().map(|h| if *h > 0.0 { rate * h / b } else { 0.0 }).collect();
    let backhaul_share = (0..n)
        .map(|id| {
            if topo.nodes[id].parent.is_some() && subtree_demand[id] > 0.0 {
                rate * subtree_demand[id] / (b * backhaul_se[id])
            } else {
                0.0
            }
        })
        .collect();
    Ok(ResourceAllocation {
        target_rate_bps: rate,
        demand,
        access_share,
        backhaul_share,
        backhaul_se,
        subtree_demand,
        bottleneck,
    })
}

/// Downlink rate of a user in `cell`: an equal time share of the serving
/// node's access band, capped at the backhaul-provisioned per-user rate.
pub fn point_capacity(topo: &IabTopology, alloc: &ResourceAllocation, cell: &GridCell, bandwidth_hz: f64) -> f64 {
    let n = cell.serving;
    if alloc.demand[n] <= 0.0 {
        return 0.0;
    }
    let access = alloc.access_share[n] * bandwidth_hz * cell.se / alloc.demand[n];
    if topo.nodes[n].parent.is_some() {
        access.min(alloc.target_rate_bps)
    } else {
        access
    }
}

pub fn associate_grid(cfg: &IabConfig, topo: &IabTopology, links: &IabLinks) -> Result<Vec<GridCell>> {
    grid_points(cfg, links.user_altitude_m)
        .into_iter()
        .map(|position| {
            let serving = links.serving_node(topo, &position)?;
            let se = links.access_se(&topo.nodes[serving], &position, true)?;
            Ok(GridCell { position, serving, se })
        })
        .collect()
}

/// Per-node uplink aggregates for one user drop.
///
/// A node's own users share its access band equally in time; the node then
/// forwards its own traffic plus its children's, up to the capacity of its
/// backhaul share.
pub fn uplink_aggregate(
    topo: &IabTopology,
    links: &IabLinks,
    alloc: &ResourceAllocation,
    users: &[Point3],
) -> Result<Vec<f64>> {
    let n = topo.nodes.len();
    let mut se_sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for u in users {
        let s = links.serving_node(topo, u)?;
        se_sum[s] += links.access_se(&topo.nodes[s], u, false)?;
        count[s] += 1;
    }
    let b = links.bandwidth_hz;
    let mut agg: Vec<f64> = (0..n)
        .map(|i| {
            if count[i] == 0 {
                0.0
            } else {
                alloc.access_share[i] * b * se_sum[i] / count[i] as f64
            }
        })
        .collect();
    for &id in topo.top_down().iter().rev() {
        if let Some(p) = topo.nodes[id].parent {
            agg[id] = agg[id].min(alloc.backhaul_rate_bps(id, b));
            agg[p] += agg[id];
        }
    }
    Ok(agg)
}

#[derive(Debug, Clone)]
pub struct IabResult {
    pub topology: IabTopology,
    pub cells: Vec<GridCell>,
    pub capacity_bps: Vec<f64>,
    pub allocation: ResourceAllocation,
    /// Mean over user drops.
    pub uplink_bps: Vec<f64>,
    pub total_downlink_bps: f64,
    pub total_uplink_bps: f64,
}

impl IabResult {
    pub fn coefficient_of_variation(&self) -> f64 {
        let (mean, _) = crate::harness::stats::mean_and_se(&self.capacity_bps);
        let n = self.capacity_bps.len() as f64;
        let var = self.capacity_bps.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }

    pub fn median_capacity_bps(&self) -> Result<f64> {
        Ok(crate::harness::empirical_cdf(&self.capacity_bps)?.quantile(0.5))
    }
}

pub fn simulate_iab(cfg: &IabConfig, radio: &RadioTable, seed: u64, parallelism: Parallelism) -> Result<(IabResult, usize)> {
    cfg.validate()?;
    radio.validate()?;
    let links = IabLinks::new(cfg, radio, &mut stream_rng(seed, Stream::TABLES, 0))?;
    let topology = build_topology(cfg, radio.altitude_m(PlatformKind::Haps))?;
    let cells = associate_grid(cfg, &topology, &links)?;
    let per_cell = cfg.active_density() * cfg.grid_step_km * cfg.grid_step_km;
    let allocation = allocate_resources(&topology, &links, &cells, per_cell)?;
    let capacity_bps: Vec<f64> = cells
        .iter()
        .map(|c| point_capacity(&topology, &allocation, c, links.bandwidth_hz))
        .collect();
    let total_downlink_bps = capacity_bps.iter().sum::<f64>() * per_cell;

    let r = cfg.disc_radius_km * 1e3;
    let outcomes = run_trials(seed, cfg.trials, parallelism, |ctx: &TrialContext| -> Result<Vec<f64>> {
        let mut rng = ctx.rng(Stream::USERS);
        let users: Vec<Point3> = ppp_disc_points(&mut rng, cfg.user_density_per_km2, r, links.user_altitude_m)?
            .into_iter()
            .filter(|_| rng.random::<f64>() < cfg.active_fraction)
            .collect();
        uplink_aggregate(&topology, &links, &allocation, &users)
    })?;
    let mut uplink_bps = vec![0.0; topology.nodes.len()];
    let mut drops = 0usize;
    for r in outcomes.results.iter().flatten() {
        let agg = r.as_ref().map_err(|e| Error::domain(e.to_string()))?;
        for (acc, v) in uplink_bps.iter_mut().zip(agg) {
            *acc += v;
        }
        drops += 1;
    }
    if drops > 0 {
        uplink_bps.iter_mut().for_each(|v| *v /= drops as f64);
    }
    let total_uplink_bps = uplink_bps[0];
    Ok((
        IabResult {
            topology,
            cells,
            capacity_bps,
            allocation,
            uplink_bps,
            total_downlink_bps,
            total_uplink_bps,
        },
        outcomes.failures,
    ))
}

pub const COLUMNS: [&str; 4] = ["x_km", "y_km", "capacity_mbps", "serving_node"];
pub const NODE_COLUMNS: [&str; 4] = ["node_id", "layer", "uplink_mbps", "downlink_share"];

pub fn run(cfg: &IabConfig, radio: &RadioTable, seed: u64, parallelism: Parallelism) -> Result<ScenarioOutput> {
    let (res, failures) = simulate_iab(cfg, radio, seed, parallelism)?;
    let mut heat = ResultTable::new(COLUMNS);
    for (c, cap) in res.cells.iter().zip(&res.capacity_bps) {
        heat.push(vec![
            fmt(c.position.x / 1e3),
            fmt(c.position.y / 1e3),
            fmt(cap / 1e6),
            c.serving.to_string(),
        ])?;
    }
    let mut nodes = ResultTable::new(NODE_COLUMNS);
    for n in &res.topology.nodes {
        nodes.push(vec![
            n.id.to_string(),
            n.layer.to_string(),
            fmt(res.uplink_bps[n.id] / 1e6),
            fmt(res.allocation.node_share(&res.topology, n.id)),
        ])?;
    }
    heat.meta("target_rate_mbps", fmt(res.allocation.target_rate_bps / 1e6));
    if let Some(b) = res.allocation.bottleneck {
        heat.meta("saturated_node", b.to_string());
    }
    heat.meta("total_downlink_mbps", fmt(res.total_downlink_bps / 1e6));
    heat.meta("total_uplink_mbps", fmt(res.total_uplink_bps / 1e6));
    Ok(ScenarioOutput {
        main: heat,
        extras: vec![("nodes".into(), nodes)],
        failed_trials: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> IabConfig {
        IabConfig {
            grid_step_km: 5.0,
            fading_draws: 2000,
            ..IabConfig::default()
        }
    }

    fn links(cfg: &IabConfig) -> IabLinks {
        IabLinks::new(cfg, &RadioTable::default(), &mut stream_rng(3, Stream::TABLES, 0)).unwrap()
    }

    #[test]
    fn topology_is_a_layered_tree() {
        let topo = build_topology(&IabConfig::default(), 20e3).unwrap();
        assert_eq!(topo.nodes.len(), 29);
        assert_eq!(topo.depth(), 3);
        for n in &topo.nodes[1..] {
            let p = n.parent.unwrap();
            assert_eq!(topo.nodes[p].layer + 1, n.layer);
            assert_eq!(*topo.path_to_root(n.id).last().unwrap(), 0);
            assert_eq!(topo.path_to_root(n.id).len(), n.layer + 1);
        }
        assert_eq!(topo.children(0).count(), 4);
        assert!((1..=4).all(|i| topo.children(i).count() == 2));
        assert!((5..=12).all(|i| topo.children(i).count() == 2));
    }

    #[test]
    fn outer_ring_parents_are_nearest_inner_ring_nodes() {
        let topo = build_topology(&IabConfig::default(), 20e3).unwrap();
        for n in topo.nodes.iter().filter(|n| n.layer == 3) {
            let mut best = (usize::MAX, f64::INFINITY);
            for m in topo.nodes.iter().filter(|m| m.layer == 2) {
                let d = ((m.position.x - n.position.x).powi(2) + (m.position.y - n.position.y).powi(2)).sqrt();
                if d < best.1 {
                    best = (m.id, d);
                }
            }
            assert_eq!(n.parent, Some(best.0));
            let r = topo.nodes[best.0].position.x.hypot(topo.nodes[best.0].position.y);
            assert!((r - 25e3).abs() < 1e-6);
        }
    }

    #[test]
    fn shares_are_even_within_a_layer() {
        let cfg = IabConfig {
            fading_draws: 2000,
            ..IabConfig::default()
        };
        let (res, _) = simulate_iab(&cfg, &RadioTable::default(), 5, Parallelism::Sequential).unwrap();
        let topo = &res.topology;
        for layer in 1..=3 {
            let shares: Vec<f64> = topo
                .nodes
                .iter()
                .filter(|n| n.layer == layer)
                .map(|n| res.allocation.node_share(topo, n.id))
                .collect();
            let mean = shares.iter().sum::<f64>() / shares.len() as f64;
            // the square grid only approximates the ring symmetry
            assert!(shares.iter().all(|s| (s / mean - 1.0).abs() < 0.1), "layer {layer}: {shares:?}");
        }
    }

    #[test]
    fn without_haps_only_the_mbs_remains() {
        let cfg = IabConfig {
            haps_enabled: false,
            ..IabConfig::default()
        };
        let topo = build_topology(&cfg, 20e3).unwrap();
        assert_eq!(topo.nodes.len(), 1);
    }

    #[test]
    fn ring_nodes_are_symmetric() {
        let cfg = small();
        let l = links(&cfg);
        let topo = build_topology(&cfg, 20e3).unwrap();
        let a = l.backhaul_se(&topo.nodes[0], &topo.nodes[1]).unwrap();
        for i in 2..=4 {
            assert!((l.backhaul_se(&topo.nodes[0], &topo.nodes[i]).unwrap() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_point_at_mbs_is_served_by_mbs() {
        let cfg = small();
        let l = links(&cfg);
        let topo = build_topology(&cfg, 20e3).unwrap();
        assert_eq!(l.serving_node(&topo, &Point3::new(0.0, 0.0, 0.0)).unwrap(), 0);
        let below_haps = topo.nodes[13].position;
        let p = Point3::new(below_haps.x, below_haps.y, 0.0);
        assert_eq!(l.serving_node(&topo, &p).unwrap(), 13);
    }

    #[test]
    fn shares_fit_in_every_band_and_one_node_is_saturated() {
        let cfg = small();
        let (res, _) = simulate_iab(&cfg, &RadioTable::default(), 5, Parallelism::Sequential).unwrap();
        let topo = &res.topology;
        let shares: Vec<f64> = (0..topo.nodes.len()).map(|i| res.allocation.node_share(topo, i)).collect();
        assert!(shares.iter().all(|s| *s <= 1.0 + 1e-9), "{shares:?}");
        assert!(shares.iter().any(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn backhaul_carries_the_whole_subtree() {
        let cfg = small();
        let (res, _) = simulate_iab(&cfg, &RadioTable::default(), 5, Parallelism::Sequential).unwrap();
        let b = RadioTable::default().bandwidth_hz(BandKind::MmWave);
        let topo = &res.topology;
        for n in &topo.nodes[1..] {
            let into = res.allocation.backhaul_rate_bps(n.id, b);
            let onward: f64 = topo.children(n.id).map(|c| res.allocation.backhaul_rate_bps(c, b)).sum();
            assert!(into >= onward * (1.0 - 1e-12));
        }
        for (id, up) in res.uplink_bps.iter().enumerate().skip(1) {
            assert!(*up <= res.allocation.backhaul_rate_bps(id, b) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_users_give_zero_shares() {
        let cfg = IabConfig {
            user_density_per_km2: 0.0,
            ..small()
        };
        let (res, _) = simulate_iab(&cfg, &RadioTable::default(), 5, Parallelism::Sequential).unwrap();
        assert_eq!(res.allocation.target_rate_bps, 0.0);
        assert!(res.allocation.access_share.iter().all(|s| *s == 0.0));
        assert!(res.uplink_bps.iter().all(|s| *s == 0.0));
        assert!(res.capacity_bps.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn bad_layers_rejected() {
        let cfg = IabConfig {
            ring_radii_km: vec![25.0, 12.5, 37.5],
            ..IabConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("iab.ring_radii_km"));
        let cfg = IabConfig {
            layer_counts: vec![4, 8],
            ..IabConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
