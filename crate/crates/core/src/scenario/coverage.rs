//! Coverage of a ground user by LEO satellites, directly or through a HAPS.
//!
//! Direct: the user is served by its highest visible satellite and hears
//! co-band satellites above the horizon as interference. Relayed: the user is
//! served by its strongest HAPS, which in turn is fed by its nearest visible
//! satellite over a free-space link. A relayed user is covered only when both
//! hops clear the threshold.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::ScenarioOutput;
use crate::channel::{dbm_to_mw, fspl_unchecked, linear_to_db, Antenna, BandKind, FadingModel, RadioTable};
use crate::error::{Error, Result};
use crate::geometry::{cos_angle_at, disc_point, disc_points, earth_center, elevation_angle_curved, sphere_points};
use crate::geometry::{PlatformKind, Point3};
use crate::harness::stats::wilson_interval;
use crate::harness::table::fmt;
use crate::harness::{run_trials, Parallelism, ResultTable, Stream, TrialContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    Direct,
    Relayed,
}

impl CoverageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverageMode::Direct => "direct",
            CoverageMode::Relayed => "relayed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageConfig {
    pub trials: u64,
    pub satellite_counts: Vec<usize>,
    pub haps_counts: Vec<usize>,
    pub disc_radius_km: f64,
    /// Minimum elevation of a serving satellite.
    pub min_elevation_deg: f64,
    pub sub_bands: usize,
    pub thresholds_db: Vec<f64>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            trials: 10_000,
            satellite_counts: vec![100, 200],
            haps_counts: vec![8, 16],
            disc_radius_km: 50.0,
            min_elevation_deg: 10.0,
            sub_bands: 10,
            thresholds_db: (-30..=30).map(f64::from).collect(),
        }
    }
}

impl CoverageConfig {
    pub fn validate(&self) -> Result<()> {
        let k = |name: &str| format!("coverage.{name}");
        if self.trials == 0 {
            return Err(Error::config(k("trials"), "need at least one trial"));
        }
        if self.satellite_counts.is_empty() || self.satellite_counts.contains(&0) {
            return Err(Error::config(k("satellite_counts"), "need one or more positive satellite counts"));
        }
        if self.haps_counts.is_empty() || self.haps_counts.contains(&0) {
            return Err(Error::config(k("haps_counts"), "need one or more positive HAPS counts"));
        }
        if !(self.disc_radius_km > 0.0) || !self.disc_radius_km.is_finite() {
            return Err(Error::config(k("disc_radius_km"), "must be finite and positive"));
        }
        if !(-90.0..90.0).contains(&self.min_elevation_deg) {
            return Err(Error::config(k("min_elevation_deg"), "must be in [-90, 90)"));
        }
        if self.sub_bands == 0 {
            return Err(Error::config(k("sub_bands"), "need at least one sub-band"));
        }
        if self.thresholds_db.is_empty() || self.thresholds_db.iter().any(|t| !t.is_finite()) {
            return Err(Error::config(k("thresholds_db"), "need one or more finite thresholds"));
        }
        Ok(())
    }
}

/// Radio constants for one run.
#[derive(Debug, Clone)]
pub struct CoverageLinks {
    pub sat_tx_dbm: f64,
    pub sat_antenna: Antenna,
    pub haps_tx_dbm: f64,
    pub haps_antenna: Antenna,
    pub user_gain_dbi: f64,
    pub carrier_hz: f64,
    pub noise_dbm: f64,
    pub min_elevation_deg: f64,
    pub user_altitude_m: f64,
    pub haps_altitude_m: f64,
    pub sat_altitude_m: f64,
    /// Satellite-user and HAPS-user small-scale fading.
    pub fading: FadingModel,
}

impl CoverageLinks {
    pub fn new(cfg: &CoverageConfig, radio: &RadioTable) -> Self {
        let band = BandKind::MmWave;
        let shape = radio.cosine_pattern();
        CoverageLinks {
            sat_tx_dbm: radio.tx_power_dbm(PlatformKind::Satellite),
            sat_antenna: Antenna::directional(radio.gain_dbi(PlatformKind::Satellite), shape),
            haps_tx_dbm: radio.tx_power_dbm(PlatformKind::Haps),
            haps_antenna: Antenna::directional(radio.gain_dbi(PlatformKind::Haps), shape),
            user_gain_dbi: radio.gain_dbi(PlatformKind::User),
            carrier_hz: radio.carrier_hz(band),
            noise_dbm: radio.noise_dbm(band),
            min_elevation_deg: cfg.min_elevation_deg,
            user_altitude_m: radio.altitude_m(PlatformKind::User),
            haps_altitude_m: radio.altitude_m(PlatformKind::Haps),
            sat_altitude_m: radio.altitude_m(PlatformKind::Satellite),
            fading: radio.shadowed_rician(),
        }
    }

    fn path_loss(&self, a: &Point3, b: &Point3) -> f64 {
        fspl_unchecked(a.distance(b).max(1e-3), self.carrier_hz)
    }

    /// Gain of a nadir-pointing satellite beam toward `target`.
    fn nadir_gain(&self, sat: &Point3, target: &Point3) -> f64 {
        self.sat_antenna.gain_dbi_from_cos(cos_angle_at(sat, &earth_center(), target))
    }
}

/// A satellite as seen by one ground user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatLink {
    pub position: Point3,
    pub sub_band: usize,
    /// Small-scale power gain of the satellite-user channel.
    pub fading: f64,
}

/// SINR at `user` from `serving` with the given co-band interferers, in dB.
/// The serving beam points at the user; interferer beams point at nadir.
pub fn link_sinr_satellite_user(links: &CoverageLinks, user: &Point3, serving: &SatLink, interferers: &[SatLink]) -> f64 {
    let rx = |s: &SatLink, gain: f64| {
        dbm_to_mw(links.sat_tx_dbm + gain + links.user_gain_dbi - links.path_loss(&s.position, user)) * s.fading
    };
    let signal = rx(serving, links.sat_antenna.peak_gain_dbi);
    let interference: f64 = interferers
        .iter()
        .map(|s| rx(s, links.nadir_gain(&s.position, user)))
        .sum();
    linear_to_db(signal / (interference + dbm_to_mw(links.noise_dbm)))
}

fn elevation(from: &Point3, to: &Point3) -> f64 {
    elevation_angle_curved(from, to).unwrap_or(90.0)
}

/// Index of the highest satellite above the mask seen from `ground`.
pub fn serving_satellite(links: &CoverageLinks, ground: &Point3, sats: &[Point3]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in sats.iter().enumerate() {
        let el = elevation(ground, s);
        if el > links.min_elevation_deg && best.is_none_or(|(_, b)| el > b) {
            best = Some((i, el));
        }
    }
    best.map(|(i, _)| i)
}

/// Direct satellite-user SINR; `-inf` with no visible satellite.
pub fn direct_sinr(links: &CoverageLinks, user: &Point3, sats: &[SatLink]) -> f64 {
    let positions: Vec<Point3> = sats.iter().map(|s| s.position).collect();
    let Some(k) = serving_satellite(links, user, &positions) else {
        return f64::NEG_INFINITY;
    };
    let serving = sats[k];
    let interferers: Vec<SatLink> = sats
        .iter()
        .enumerate()
        .filter(|&(i, s)| i != k && s.sub_band == serving.sub_band && elevation(user, &s.position) > 0.0)
        .map(|(_, s)| *s)
        .collect();
    link_sinr_satellite_user(links, user, &serving, &interferers)
}

/// Free-space satellite-to-HAPS SINR; `-inf` with no visible satellite.
pub fn satellite_haps_sinr(links: &CoverageLinks, haps: &Point3, sats: &[SatLink]) -> f64 {
    let positions: Vec<Point3> = sats.iter().map(|s| s.position).collect();
    let Some(k) = serving_satellite(links, haps, &positions) else {
        return f64::NEG_INFINITY;
    };
    let serving = &sats[k];
    let signal = dbm_to_mw(
        links.sat_tx_dbm + links.sat_antenna.peak_gain_dbi + links.haps_antenna.peak_gain_dbi
            - links.path_loss(&serving.position, haps),
    );
    let mut interference = 0.0;
    for (i, s) in sats.iter().enumerate() {
        if i == k || s.sub_band != serving.sub_band || elevation(haps, &s.position) <= 0.0 {
            continue;
        }
        let rx_gain = links
            .haps_antenna
            .gain_dbi_from_cos(cos_angle_at(haps, &serving.position, &s.position));
        interference += dbm_to_mw(
            links.sat_tx_dbm + links.nadir_gain(&s.position, haps) + rx_gain - links.path_loss(&s.position, haps),
        );
    }
    linear_to_db(signal / (interference + dbm_to_mw(links.noise_dbm)))
}

/// HAPS-user SINR from the strongest (nearest) HAPS; `-inf` with no HAPS.
/// HAPS downlinks use separate sub-bands and narrow beams, so the link is
/// noise-limited.
pub fn haps_user_sinr(links: &CoverageLinks, user: &Point3, haps: &[Point3], fading: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<usize> = None;
    for (i, h) in haps.iter().enumerate() {
        if best.is_none_or(|b| h.distance(user) < haps[b].distance(user)) {
            best = Some(i);
        }
    }
    let b = best?;
    let rx_dbm = links.haps_tx_dbm + links.haps_antenna.peak_gain_dbi + links.user_gain_dbi
        - links.path_loss(&haps[b], user);
    Some((b, rx_dbm + linear_to_db(fading[b]) - links.noise_dbm))
}

/// End-to-end relayed SINR, the weaker of the two hops.
pub fn relayed_sinr(links: &CoverageLinks, user: &Point3, haps: &[Point3], haps_fading: &[f64], sats: &[SatLink]) -> f64 {
    match haps_user_sinr(links, user, haps, haps_fading) {
        None => f64::NEG_INFINITY,
        Some((b, access)) => access.min(satellite_haps_sinr(links, &haps[b], sats)),
    }
}

pub fn relayed_coverage(
    links: &CoverageLinks,
    user: &Point3,
    haps: &[Point3],
    haps_fading: &[f64],
    sats: &[SatLink],
    threshold_db: f64,
) -> bool {
    relayed_sinr(links, user, haps, haps_fading, sats) > threshold_db
}

/// One curve's identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveKey {
    pub mode: CoverageMode,
    pub n_haps: usize,
    pub n_sats: usize,
}

pub fn curve_keys(cfg: &CoverageConfig) -> Vec<CurveKey> {
    let mut keys: Vec<CurveKey> = cfg
        .satellite_counts
        .iter()
        .map(|&n_sats| CurveKey {
            mode: CoverageMode::Direct,
            n_haps: 0,
            n_sats,
        })
        .collect();
    for &n_haps in &cfg.haps_counts {
        for &n_sats in &cfg.satellite_counts {
            keys.push(CurveKey {
                mode: CoverageMode::Relayed,
                n_haps,
                n_sats,
            });
        }
    }
    keys
}

/// One typical-user drop: SINR for every curve. Satellite and HAPS sets are
/// nested prefixes of one draw, so curves share random numbers.
pub fn simulate_trial(cfg: &CoverageConfig, links: &CoverageLinks, ctx: &TrialContext) -> Result<Vec<f64>> {
    let r = cfg.disc_radius_km * 1e3;
    let user = disc_point(&mut ctx.rng(Stream::USERS), r, links.user_altitude_m);
    let n_sats = cfg.satellite_counts.iter().copied().max().unwrap_or(0);
    let n_haps = cfg.haps_counts.iter().copied().max().unwrap_or(0);
    let positions = sphere_points(&mut ctx.rng(Stream::SATELLITES), n_sats, links.sat_altitude_m);
    let mut brng = ctx.rng(Stream::SUB_BANDS);
    let mut frng = ctx.rng(Stream::FADING);
    let sampler = links.fading.sampler()?;
    let sats: Vec<SatLink> = positions
        .into_iter()
        .map(|position| SatLink {
            position,
            sub_band: brng.random_range(0..cfg.sub_bands),
            fading: sampler.sample(&mut frng),
        })
        .collect();
    let haps = disc_points(&mut ctx.rng(Stream::HAPS), n_haps, r, links.haps_altitude_m);
    let mut hrng = ctx.rng(Stream::FADING.child(1));
    let haps_fading: Vec<f64> = (0..n_haps).map(|_| sampler.sample(&mut hrng)).collect();
    Ok(curve_keys(cfg)
        .iter()
        .map(|key| match key.mode {
            CoverageMode::Direct => direct_sinr(links, &user, &sats[..key.n_sats]),
            CoverageMode::Relayed => relayed_sinr(
                links,
                &user,
                &haps[..key.n_haps],
                &haps_fading[..key.n_haps],
                &sats[..key.n_sats],
            ),
        })
        .collect())
}

/// Coverage estimate at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    pub key: CurveKey,
    pub threshold_db: f64,
    pub coverage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

const Z_95: f64 = 1.959_963_984_540_054;

/// Coverage curves with Wilson 95% intervals. Each trial's SINR is compared
/// against every threshold.
pub fn sweep_coverage(
    cfg: &CoverageConfig,
    radio: &RadioTable,
    seed: u64,
    parallelism: Parallelism,
) -> Result<(Vec<CoveragePoint>, usize)> {
    cfg.validate()?;
    radio.validate()?;
    let links = CoverageLinks::new(cfg, radio);
    let outcomes = run_trials(seed, cfg.trials, parallelism, |ctx| simulate_trial(cfg, &links, ctx))?;
    let mut sinrs: Vec<&Vec<f64>> = Vec::new();
    for r in outcomes.results.iter().flatten() {
        sinrs.push(r.as_ref().map_err(|e| Error::domain(e.to_string()))?);
    }
    let n = sinrs.len() as u64;
    let mut points = Vec::new();
    for (ci, key) in curve_keys(cfg).into_iter().enumerate() {
        for &threshold_db in &cfg.thresholds_db {
            let covered = sinrs.iter().filter(|s| s[ci] > threshold_db).count() as u64;
            let (ci_low, ci_high) = wilson_interval(covered, n, Z_95);
            points.push(CoveragePoint {
                key,
                threshold_db,
                coverage: if n > 0 { covered as f64 / n as f64 } else { f64::NAN },
                ci_low,
                ci_high,
                trials: n,
            });
        }
    }
    Ok((points, outcomes.failures))
}

pub const COLUMNS: [&str; 8] = [
    "mode",
    "n_haps",
    "n_sats",
    "threshold_db",
    "coverage",
    "ci_low",
    "ci_high",
    "trials",
];

pub fn run(cfg: &CoverageConfig, radio: &RadioTable, seed: u64, parallelism: Parallelism) -> Result<ScenarioOutput> {
    let (points, failures) = sweep_coverage(cfg, radio, seed, parallelism)?;
    let mut table = ResultTable::new(COLUMNS);
    for p in &points {
        table.push(vec![
            p.key.mode.as_str().into(),
            p.key.n_haps.to_string(),
            p.key.n_sats.to_string(),
            fmt(p.threshold_db),
            fmt(p.coverage),
            fmt(p.ci_low),
            fmt(p.ci_high),
            p.trials.to_string(),
        ])?;
    }
    Ok(ScenarioOutput {
        main: table,
        extras: Vec::new(),
        failed_trials: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EARTH_RADIUS_M;
    use crate::channel::db_to_linear;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn links() -> CoverageLinks {
        CoverageLinks::new(&CoverageConfig::default(), &RadioTable::default())
    }

    fn zenith_sat(l: &CoverageLinks) -> Point3 {
        Point3::new(0.0, 0.0, l.sat_altitude_m)
    }

    /// Satellite on the shell at `deg` of central angle from the zenith.
    fn shell_sat(l: &CoverageLinks, deg: f64) -> Point3 {
        let r = EARTH_RADIUS_M + l.sat_altitude_m;
        let a = deg.to_radians();
        earth_center().add(&Point3::new(r * a.sin(), 0.0, r * a.cos()))
    }

    #[test]
    fn zenith_snr_is_link_budget() {
        let l = links();
        let sat = SatLink {
            position: zenith_sat(&l),
            sub_band: 0,
            fading: 1.0,
        };
        let snr = direct_sinr(&l, &Point3::ORIGIN, &[sat]);
        let expect = 45.0 + 50.0 + 3.0 - crate::channel::fspl(550e3, 28e9).unwrap() - (-94.0);
        assert!((snr - expect).abs() < 1e-9, "{snr} vs {expect}");

        // fading-averaged linear SNR scales by the mean fading power
        let sampler = l.fading.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let s = SatLink {
                    fading: sampler.sample(&mut rng),
                    ..sat
                };
                10f64.powf(direct_sinr(&l, &Point3::ORIGIN, &[s]) / 10.0)
            })
            .sum::<f64>()
            / n as f64;
        let expect_lin = 10f64.powf(expect / 10.0) * l.fading.mean_power();
        assert!((mean / expect_lin - 1.0).abs() < 0.01);
    }

    #[test]
    fn no_visible_satellite_is_outage() {
        let l = links();
        let below = SatLink {
            position: shell_sat(&l, 60.0),
            sub_band: 0,
            fading: 1.0,
        };
        assert_eq!(direct_sinr(&l, &Point3::ORIGIN, &[below]), f64::NEG_INFINITY);
        assert_eq!(direct_sinr(&l, &Point3::ORIGIN, &[]), f64::NEG_INFINITY);
        let visible = SatLink {
            position: zenith_sat(&l),
            ..below
        };
        assert!(direct_sinr(&l, &Point3::ORIGIN, &[visible]) > f64::NEG_INFINITY);
    }

    #[test]
    fn equal_co_band_satellites_give_zero_db() {
        let l = links();
        let user = Point3::ORIGIN;
        let a = SatLink {
            position: zenith_sat(&l),
            sub_band: 0,
            fading: 1.0,
        };
        // an interferer of equal received power: S / (S + N)
        let b = SatLink { fading: 1.0, ..a };
        let snr = db_to_linear(link_sinr_satellite_user(&l, &user, &a, &[]));
        let s = link_sinr_satellite_user(&l, &user, &a, &[b]);
        let expect = -linear_to_db(1.0 + 1.0 / snr);
        assert!((s - expect).abs() < 1e-9, "{s} vs {expect}");
        assert!(s < 0.0 && s > -3.02);
    }

    #[test]
    fn relayed_min_rule_and_empty_relay_set() {
        let l = links();
        let user = Point3::ORIGIN;
        let sats = [SatLink {
            position: zenith_sat(&l),
            sub_band: 0,
            fading: 1.0,
        }];
        let haps = [Point3::new(0.0, 0.0, 20e3)];
        let (_, access) = haps_user_sinr(&l, &user, &haps, &[1.0]).unwrap();
        let feeder = satellite_haps_sinr(&l, &haps[0], &sats);
        let both = relayed_sinr(&l, &user, &haps, &[1.0], &sats);
        assert_eq!(both, access.min(feeder));
        assert!(relayed_coverage(&l, &user, &haps, &[1.0], &sats, both - 1.0));
        assert!(!relayed_coverage(&l, &user, &haps, &[1.0], &sats, both));
        // deep fade on the access hop alone breaks coverage
        assert!(!relayed_coverage(&l, &user, &haps, &[1e-9], &sats, feeder - 1.0));
        assert!(!relayed_coverage(&l, &user, &[], &[], &sats, -1e9));
    }

    #[test]
    fn curves_are_monotone_and_nested_haps_help() {
        let cfg = CoverageConfig {
            trials: 300,
            ..CoverageConfig::default()
        };
        let (points, failures) = sweep_coverage(&cfg, &RadioTable::default(), 5, Parallelism::Sequential).unwrap();
        assert_eq!(failures, 0);
        let keys = curve_keys(&cfg);
        let nt = cfg.thresholds_db.len();
        for (ci, _) in keys.iter().enumerate() {
            let curve = &points[ci * nt..(ci + 1) * nt];
            for w in curve.windows(2) {
                assert!(w[1].coverage <= w[0].coverage);
            }
            for p in curve {
                assert!(p.ci_low <= p.coverage && p.coverage <= p.ci_high);
            }
        }
        let at = |mode, n_haps, n_sats, t: f64| {
            points
                .iter()
                .find(|p| p.key == CurveKey { mode, n_haps, n_sats } && p.threshold_db == t)
                .unwrap()
                .coverage
        };
        for t in [-10.0, 0.0, 10.0] {
            assert!(at(CoverageMode::Relayed, 16, 100, t) >= at(CoverageMode::Relayed, 8, 100, t));
        }
    }
}
