//! Energy efficiency of cellular and cell-free UAV access with HAPS backhaul.
//!
//! Active users pick a serving UAV either by distance (cellular) or by mean
//! received power (cell-free). Each serving UAV backhauls to its nearest
//! HAPS. The end-to-end efficiency of a user link combines the access and
//! backhaul efficiencies as `a * b / (a + b)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioOutput;
use crate::channel::{
    dbm_to_mw, linear_to_db, Antenna, BandKind, BlockageModel, ErgodicCapacity, LinkBudget, LinkGeometry,
    RadioTable,
};
use crate::error::{Error, Result};
use crate::geometry::{cos_angle_at, disc_points, elevation_angle, ppp_disc_points, PlatformKind, Point3};
use crate::harness::stats::{log_space, EmpiricalCdf};
use crate::harness::table::fmt;
use crate::harness::trials::stream_rng;
use crate::harness::{run_trials, Parallelism, ResultTable, Stream, TrialContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    /// Closest UAV, blocked or not.
    Cellular,
    /// UAV with the strongest mean received power.
    CellFree,
}

impl Association {
    pub const ALL: [Association; 2] = [Association::Cellular, Association::CellFree];

    pub fn as_str(self) -> &'static str {
        match self {
            Association::Cellular => "cellular",
            Association::CellFree => "cell_free",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellfreeConfig {
    pub trials: u64,
    pub disc_radius_km: f64,
    pub n_uav: usize,
    pub haps_counts: Vec<usize>,
    pub user_density_per_km2: f64,
    pub active_fraction: f64,
    pub sub_bands: usize,
    pub sigmoid_a: f64,
    pub sigmoid_b: f64,
    pub nlos_excess_db: f64,
    pub fading_draws: usize,
    /// Log-spaced efficiency grid for the CDF table, in Mb/J.
    pub cdf_min_mbj: f64,
    pub cdf_max_mbj: f64,
    pub cdf_points: usize,
}

impl Default for CellfreeConfig {
    fn default() -> Self {
        CellfreeConfig {
            trials: 14,
            disc_radius_km: 50.0,
            n_uav: 100,
            haps_counts: vec![4, 8, 16],
            user_density_per_km2: 1.0,
            active_fraction: 0.1,
            sub_bands: 10,
            sigmoid_a: 9.61,
            sigmoid_b: 0.16,
            nlos_excess_db: 20.0,
            fading_draws: 10_000,
            cdf_min_mbj: 0.01,
            cdf_max_mbj: 10_000.0,
            cdf_points: 121,
        }
    }
}

impl CellfreeConfig {
    pub fn validate(&self) -> Result<()> {
        let k = |name: &str| format!("cellfree.{name}");
        if self.trials == 0 {
            return Err(Error::config(k("trials"), "need at least one trial"));
        }
        if !(self.disc_radius_km > 0.0) || !self.disc_radius_km.is_finite() {
            return Err(Error::config(k("disc_radius_km"), "must be finite and positive"));
        }
        if self.n_uav == 0 {
            return Err(Error::config(k("n_uav"), "need at least one UAV"));
        }
        if self.haps_counts.is_empty() || self.haps_counts.contains(&0) {
            return Err(Error::config(k("haps_counts"), "need one or more positive HAPS counts"));
        }
        if !(self.user_density_per_km2 >= 0.0) || !self.user_density_per_km2.is_finite() {
            return Err(Error::config(k("user_density_per_km2"), "must be finite and non-negative"));
        }
        if !(self.active_fraction > 0.0 && self.active_fraction <= 1.0) {
            return Err(Error::config(k("active_fraction"), "must be in (0, 1]"));
        }
        if self.sub_bands == 0 {
            return Err(Error::config(k("sub_bands"), "need at least one sub-band"));
        }
        self.blockage_model().validate().map_err(|e| Error::config(k("sigmoid_a"), e.to_string()))?;
        if !(self.nlos_excess_db >= 0.0) || !self.nlos_excess_db.is_finite() {
            return Err(Error::config(k("nlos_excess_db"), "must be finite and non-negative"));
        }
        if self.fading_draws == 0 {
            return Err(Error::config(k("fading_draws"), "need at least one fading draw"));
        }
        if !(self.cdf_min_mbj > 0.0 && self.cdf_max_mbj > self.cdf_min_mbj) || self.cdf_points < 2 {
            return Err(Error::config(k("cdf_min_mbj"), "need 0 < cdf_min_mbj < cdf_max_mbj and cdf_points >= 2"));
        }
        Ok(())
    }

    pub fn blockage_model(&self) -> BlockageModel {
        BlockageModel::ElevationSigmoid {
            a: self.sigmoid_a,
            b: self.sigmoid_b,
        }
    }
}

/// Efficiencies of one user link, in Mb/J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub ee_access: f64,
    pub ee_backhaul: f64,
    pub ee_total: f64,
}

/// `a * b / (a + b)`; zero when both are zero.
pub fn ee_total(ee_access: f64, ee_backhaul: f64) -> f64 {
    if ee_access <= 0.0 && ee_backhaul <= 0.0 {
        return 0.0;
    }
    if ee_access.is_infinite() {
        return ee_backhaul;
    }
    if ee_backhaul.is_infinite() {
        return ee_access;
    }
    ee_access * ee_backhaul / (ee_access + ee_backhaul)
}

/// Capacity per transmit watt, in Mb/J.
pub fn energy_efficiency(capacity_bps: f64, tx_power_watts: f64) -> Result<f64> {
    if !(tx_power_watts > 0.0) {
        return Err(Error::domain(format!("transmit power must be positive, got {tx_power_watts} W")));
    }
    Ok(capacity_bps / tx_power_watts / 1e6)
}

/// Index of the serving UAV given per-UAV distances and mean received powers.
pub fn associate(mode: Association, distances: &[f64], mean_rx_dbm: &[f64]) -> Result<usize> {
    if distances.is_empty() {
        return Err(Error::config("cellfree.n_uav", "no UAV to associate with"));
    }
    let (values, sign) = match mode {
        Association::Cellular => (distances, 1.0),
        Association::CellFree => (mean_rx_dbm, -1.0),
    };
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if sign * v < sign * values[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Radio constants for one run.
#[derive(Debug, Clone)]
pub struct CellfreeLinks {
    pub uav_antenna: Antenna,
    pub haps_antenna: Antenna,
    pub user_gain_dbi: f64,
    pub uav_tx_dbm: f64,
    pub uav_tx_watts: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub nlos_excess_db: f64,
    pub user_altitude_m: f64,
    pub uav_altitude_m: f64,
    pub haps_altitude_m: f64,
    access_fading: ErgodicCapacity,
    backhaul_fading: ErgodicCapacity,
}

impl CellfreeLinks {
    pub fn new<R: Rng + ?Sized>(cfg: &CellfreeConfig, radio: &RadioTable, rng: &mut R) -> Result<Self> {
        let band = BandKind::MmWave;
        let shape = radio.cosine_pattern();
        let uav = radio.params(PlatformKind::Uav, band);
        Ok(CellfreeLinks {
            uav_antenna: Antenna::directional(radio.gain_dbi(PlatformKind::Uav), shape),
            haps_antenna: Antenna::directional(radio.gain_dbi(PlatformKind::Haps), shape),
            user_gain_dbi: radio.gain_dbi(PlatformKind::User),
            uav_tx_dbm: uav.tx_power_dbm,
            uav_tx_watts: uav.tx_power_watts(),
            carrier_hz: uav.carrier_frequency_hz,
            bandwidth_hz: uav.bandwidth_hz,
            noise_dbm: uav.noise_dbm(),
            nlos_excess_db: cfg.nlos_excess_db,
            user_altitude_m: radio.altitude_m(PlatformKind::User),
            uav_altitude_m: radio.altitude_m(PlatformKind::Uav),
            haps_altitude_m: radio.altitude_m(PlatformKind::Haps),
            access_fading: ErgodicCapacity::tabulate(&radio.nakagami(), cfg.fading_draws, rng)?,
            backhaul_fading: ErgodicCapacity::tabulate(&radio.shadowed_rician(), cfg.fading_draws, rng)?,
        })
    }

    fn path_loss(&self, a: &Point3, b: &Point3) -> f64 {
        // every node pair here is vertically separated, so the distance is positive
        crate::channel::fspl_unchecked(a.distance(b).max(1e-3), self.carrier_hz)
    }
}

/// One trial's deployment, shared by both association modes and all HAPS
/// counts.
#[derive(Debug, Clone)]
pub struct CellfreeDrop {
    pub users: Vec<Point3>,
    pub uavs: Vec<Point3>,
    /// The largest HAPS set; smaller counts use a prefix.
    pub haps: Vec<Point3>,
    pub sub_band: Vec<usize>,
    /// `los[u][k]`: user `u` sees UAV `k` in line of sight.
    pub los: Vec<Vec<bool>>,
}

impl CellfreeDrop {
    pub fn sample(cfg: &CellfreeConfig, links: &CellfreeLinks, ctx: &TrialContext) -> Result<Self> {
        let r = cfg.disc_radius_km * 1e3;
        let mut urng = ctx.rng(Stream::USERS);
        let all = ppp_disc_points(&mut urng, cfg.user_density_per_km2, r, links.user_altitude_m)?;
        let users: Vec<Point3> = all
            .into_iter()
            .filter(|_| urng.random::<f64>() < cfg.active_fraction)
            .collect();
        let uavs = disc_points(&mut ctx.rng(Stream::DEPLOYMENT), cfg.n_uav, r, links.uav_altitude_m);
        let n_haps = cfg.haps_counts.iter().copied().max().unwrap_or(0);
        let haps = disc_points(&mut ctx.rng(Stream::HAPS), n_haps, r, links.haps_altitude_m);
        let mut brng = ctx.rng(Stream::SUB_BANDS);
        let sub_band = users.iter().map(|_| brng.random_range(0..cfg.sub_bands)).collect();
        let model = cfg.blockage_model();
        let mut lrng = ctx.rng(Stream::BLOCKAGE);
        let los = users
            .iter()
            .map(|u| {
                uavs.iter()
                    .map(|k| {
                        let geo = LinkGeometry {
                            distance_m: u.distance(k),
                            elevation_deg: elevation_angle(u, k).unwrap_or(90.0),
                        };
                        model.state_from_uniform(&geo, lrng.random::<f64>()).is_los()
                    })
                    .collect()
            })
            .collect();
        Ok(CellfreeDrop {
            users,
            uavs,
            haps,
            sub_band,
            los,
        })
    }

    fn penalty(&self, links: &CellfreeLinks, u: usize, k: usize) -> f64 {
        if self.los[u][k] {
            0.0
        } else {
            links.nlos_excess_db
        }
    }

    /// Mean received power at user `u` from UAV `k` beaming straight at it.
    pub fn mean_rx_dbm(&self, links: &CellfreeLinks, u: usize, k: usize) -> f64 {
        links.uav_tx_dbm + links.uav_antenna.peak_gain_dbi + links.user_gain_dbi
            - links.path_loss(&self.users[u], &self.uavs[k])
            - self.penalty(links, u, k)
    }
}

/// Serving UAV per user and the beam target of each (UAV, sub-band).
#[derive(Debug, Clone)]
pub struct AccessPlan {
    pub serving: Vec<usize>,
    /// `beam[s][k]`: user that UAV `k` points at on sub-band `s`, if any.
    pub beam: Vec<Vec<Option<usize>>>,
}

pub fn plan_access(cfg: &CellfreeConfig, links: &CellfreeLinks, drop: &CellfreeDrop, mode: Association) -> Result<AccessPlan> {
    let mut serving = Vec::with_capacity(drop.users.len());
    let mut beam = vec![vec![None; drop.uavs.len()]; cfg.sub_bands];
    let mut dist = vec![0.0; drop.uavs.len()];
    let mut power = vec![0.0; drop.uavs.len()];
    for (u, user) in drop.users.iter().enumerate() {
        for (k, uav) in drop.uavs.iter().enumerate() {
            dist[k] = user.distance(uav);
            power[k] = drop.mean_rx_dbm(links, u, k);
        }
        let k = associate(mode, &dist, &power)?;
        serving.push(k);
        let slot = &mut beam[drop.sub_band[u]][k];
        if slot.is_none() {
            *slot = Some(u);
        }
    }
    Ok(AccessPlan { serving, beam })
}

/// UAVs other than `serving` transmitting on sub-band `s`.
pub fn co_band_interferers(plan: &AccessPlan, s: usize, serving: usize) -> impl Iterator<Item = usize> + '_ {
    plan.beam[s]
        .iter()
        .enumerate()
        .filter(move |&(k, b)| k != serving && b.is_some())
        .map(|(k, _)| k)
}

fn nearest(points: &[Point3], to: &Point3) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        if p.distance(to) < points[best].distance(to) {
            best = i;
        }
    }
    best
}

/// Efficiency records of every active user for one mode, per HAPS count.
pub fn simulate_drop(
    cfg: &CellfreeConfig,
    links: &CellfreeLinks,
    drop: &CellfreeDrop,
    mode: Association,
) -> Result<Vec<Vec<EnergyRecord>>> {
    let plan = plan_access(cfg, links, drop, mode)?;
    let noise_mw = dbm_to_mw(links.noise_dbm);
    let uav_ant = &links.uav_antenna;

    // access
    let mut ee_access = Vec::with_capacity(drop.users.len());
    for (u, user) in drop.users.iter().enumerate() {
        let k = plan.serving[u];
        let s = drop.sub_band[u];
        let signal = dbm_to_mw(drop.mean_rx_dbm(links, u, k));
        let mut interference = 0.0;
        for j in co_band_interferers(&plan, s, k) {
            let target = drop.users[plan.beam[s][j].expect("transmitting UAV has a beam")];
            let g = uav_ant.gain_dbi_from_cos(cos_angle_at(&drop.uavs[j], &target, user));
            interference += dbm_to_mw(
                links.uav_tx_dbm + g + links.user_gain_dbi
                    - links.path_loss(user, &drop.uavs[j])
                    - drop.penalty(links, u, j),
            );
        }
        let sinr_db = linear_to_db(signal / (interference + noise_mw));
        let c = links.access_fading.capacity_bps(links.bandwidth_hz, sinr_db);
        ee_access.push(energy_efficiency(c, links.uav_tx_watts)?);
    }

    // backhaul, one pass per HAPS count
    let mut out = Vec::with_capacity(cfg.haps_counts.len());
    for &n in &cfg.haps_counts {
        let haps = &drop.haps[..n.min(drop.haps.len())];
        let parent: Vec<usize> = drop.uavs.iter().map(|k| nearest(haps, k)).collect();
        let mut ee_bh = vec![vec![f64::NAN; drop.uavs.len()]; cfg.sub_bands];
        let mut records = Vec::with_capacity(drop.users.len());
        for (u, &acc) in ee_access.iter().enumerate() {
            let k = plan.serving[u];
            let s = drop.sub_band[u];
            if ee_bh[s][k].is_nan() {
                let h = &haps[parent[k]];
                let budget = LinkBudget::new(
                    links.uav_tx_dbm,
                    uav_ant.peak_gain_dbi,
                    links.haps_antenna.peak_gain_dbi,
                    links.carrier_hz,
                );
                let signal = dbm_to_mw(budget.rx_dbm(drop.uavs[k].distance(h))?);
                let mut interference = 0.0;
                for j in co_band_interferers(&plan, s, k) {
                    let uj = &drop.uavs[j];
                    let tx_g = uav_ant.gain_dbi_from_cos(cos_angle_at(uj, &haps[parent[j]], h));
                    let rx_g = links
                        .haps_antenna
                        .gain_dbi_from_cos(cos_angle_at(h, &drop.uavs[k], uj));
                    interference += dbm_to_mw(links.uav_tx_dbm + tx_g + rx_g - links.path_loss(uj, h));
                }
                let sinr_db = linear_to_db(signal / (interference + noise_mw));
                let c = links.backhaul_fading.capacity_bps(links.bandwidth_hz, sinr_db);
                ee_bh[s][k] = energy_efficiency(c, links.uav_tx_watts)?;
            }
            let b = ee_bh[s][k];
            records.push(EnergyRecord {
                ee_access: acc,
                ee_backhaul: b,
                ee_total: ee_total(acc, b),
            });
        }
        out.push(records);
    }
    Ok(out)
}

/// Pooled samples for one (mode, HAPS count).
#[derive(Debug, Clone)]
pub struct EeSeries {
    pub mode: Association,
    pub n_haps: usize,
    pub records: Vec<EnergyRecord>,
}

impl EeSeries {
    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ee_total).collect()
    }

    pub fn cdf(&self) -> Result<EmpiricalCdf> {
        EmpiricalCdf::new(&self.totals())
    }
}

/// All (mode, HAPS count) series pooled over trials.
pub fn simulate_ee(
    cfg: &CellfreeConfig,
    radio: &RadioTable,
    seed: u64,
    parallelism: Parallelism,
) -> Result<(Vec<EeSeries>, usize)> {
    cfg.validate()?;
    radio.validate()?;
    let links = CellfreeLinks::new(cfg, radio, &mut stream_rng(seed, Stream::TABLES, 0))?;
    let outcomes = run_trials(seed, cfg.trials, parallelism, |ctx| -> Result<Vec<Vec<Vec<EnergyRecord>>>> {
        let drop = CellfreeDrop::sample(cfg, &links, ctx)?;
        Association::ALL
            .iter()
            .map(|&mode| simulate_drop(cfg, &links, &drop, mode))
            .collect()
    })?;
    let mut series: Vec<EeSeries> = Association::ALL
        .iter()
        .flat_map(|&mode| {
            cfg.haps_counts.iter().map(move |&n_haps| EeSeries {
                mode,
                n_haps,
                records: Vec::new(),
            })
        })
        .collect();
    for trial in outcomes.results.iter().flatten() {
        let trial = trial.as_ref().map_err(|e| Error::domain(e.to_string()))?;
        for (mi, per_mode) in trial.iter().enumerate() {
            for (hi, recs) in per_mode.iter().enumerate() {
                series[mi * cfg.haps_counts.len() + hi].records.extend_from_slice(recs);
            }
        }
    }
    Ok((series, outcomes.failures))
}

pub const COLUMNS: [&str; 4] = ["mode", "n_haps", "ee_mbj", "cdf_value"];

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "mode",
    "n_haps",
    "samples",
    "mean_ee_mbj",
    "cdf_at_40_mbj",
    "frac_at_least_40_mbj",
    "q25_mbj",
    "q50_mbj",
    "q75_mbj",
];

pub fn run(cfg: &CellfreeConfig, radio: &RadioTable, seed: u64, parallelism: Parallelism) -> Result<ScenarioOutput> {
    let (series, failures) = simulate_ee(cfg, radio, seed, parallelism)?;
    let grid = log_space(cfg.cdf_min_mbj, cfg.cdf_max_mbj, cfg.cdf_points);
    let mut main = ResultTable::new(COLUMNS);
    let mut summary = ResultTable::new(SUMMARY_COLUMNS);
    for s in &series {
        if s.records.is_empty() {
            summary.push(vec![
                s.mode.as_str().into(),
                s.n_haps.to_string(),
                "0".into(),
                fmt(f64::NAN),
                fmt(f64::NAN),
                fmt(f64::NAN),
                fmt(f64::NAN),
                fmt(f64::NAN),
                fmt(f64::NAN),
            ])?;
            continue;
        }
        let cdf = s.cdf()?;
        for &x in &grid {
            main.push(vec![s.mode.as_str().into(), s.n_haps.to_string(), fmt(x), fmt(cdf.eval(x))])?;
        }
        let below_40 = s.records.iter().filter(|r| r.ee_total < 40.0).count() as f64;
        summary.push(vec![
            s.mode.as_str().into(),
            s.n_haps.to_string(),
            cdf.len().to_string(),
            fmt(cdf.mean()),
            fmt(cdf.eval(40.0)),
            fmt(1.0 - below_40 / cdf.len() as f64),
            fmt(cdf.quantile(0.25)),
            fmt(cdf.quantile(0.5)),
            fmt(cdf.quantile(0.75)),
        ])?;
    }
    Ok(ScenarioOutput {
        main,
        extras: vec![("summary".into(), summary)],
        failed_trials: failures,
    })
}

/// Received power for a fixed serving choice, for comparisons between modes.
pub fn serving_rx_dbm(links: &CellfreeLinks, drop: &CellfreeDrop, u: usize, k: usize) -> f64 {
    drop.mean_rx_dbm(links, u, k)
}
