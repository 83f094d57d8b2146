//! Sweeps over (L_B, t, k) with seeded, parallel realization averaging and
//! versioned CSV output.
//!
//! Each realization is evolved once from t = 0 to t_max; the projected
//! ensemble is analysed at every integer t on the way. Per-realization values
//! are stored by realization index and reduced in that order, so results do
//! not depend on the worker count. Rows for one L_B are appended in a single
//! write after all of its realizations finish; on resume, (L_B, t) points
//! already on disk are not recomputed (their states are still re-evolved).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::haar;
use crate::projected::{self, ProjectedMatrix};
use crate::seed;
use crate::statevector::{self, Boundary, Geometry, Placement, Statevector};
use crate::stats::SampleMean;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "schema_version,q,L_A,L_B,geometry,boundary,t,k,observable,mean,sem,n_realizations,excluded_mass_max,master_seed";

pub const REALIZATION_HEADER: &str =
    "schema_version,q,L_A,L_B,geometry,boundary,t,k,realization,F,F_H,delta2,purity,excluded_mass,master_seed";

/// Mean of F^(k) over realizations.
pub const OBS_FRAME: &str = "F_k";
/// Δ² of the mean frame potential, F̄/F_H − 1.
pub const OBS_DELTA2: &str = "delta2";
/// Mean over realizations of the per-realization Δ².
pub const OBS_DELTA2_PER_REALIZATION: &str = "delta2_per_realization_mean";
/// Mean of 𝒫^k.
pub const OBS_PURITY_MOMENT: &str = "purity_moment";

const SIMULATED_OBSERVABLES: [&str; 4] = [OBS_FRAME, OBS_DELTA2, OBS_DELTA2_PER_REALIZATION, OBS_PURITY_MOMENT];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub q: usize,
    pub len_a: usize,
    pub len_b: Vec<usize>,
    pub t_max: u64,
    pub k_list: Vec<usize>,
    pub realizations: usize,
    pub master_seed: u64,
    pub placement: Placement,
    pub boundary: Boundary,
    /// Aggregated CSV; `None` keeps results in memory only. Per-realization
    /// rows go to `<output>.realizations.csv`, the manifest to
    /// `<output>.manifest`.
    pub output: Option<PathBuf>,
    pub resume: bool,
    /// 0 uses the global thread pool.
    pub workers: usize,
    pub max_amplitudes: u128,
}

impl ExperimentConfig {
    pub fn new(q: usize, len_a: usize, len_b: Vec<usize>, t_max: u64, k_list: Vec<usize>, realizations: usize) -> Self {
        Self {
            q,
            len_a,
            len_b,
            t_max,
            k_list,
            realizations,
            master_seed: 0,
            placement: Placement::Edge,
            boundary: Boundary::Open,
            output: None,
            resume: false,
            workers: 0,
            max_amplitudes: statevector::DEFAULT_MAX_AMPLITUDES,
        }
    }

    /// Parses the flat `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            if seen.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
        }
        let take = |seen: &mut BTreeMap<String, String>, key: &str| seen.remove(key);
        let required = |seen: &mut BTreeMap<String, String>, key: &str| {
            take(seen, key).ok_or_else(|| Error::Config(format!("missing required key {key}")))
        };
        let q = parse_scalar(&required(&mut seen, "q")?, "q")?;
        let len_a = parse_scalar(&required(&mut seen, "L_A")?, "L_A")?;
        let len_b = parse_list(&required(&mut seen, "L_B")?, "L_B")?;
        let t_max = parse_scalar(&required(&mut seen, "t_max")?, "t_max")?;
        let k_list = parse_list(&required(&mut seen, "k")?, "k")?;
        let realizations = parse_scalar(&required(&mut seen, "realizations")?, "realizations")?;
        let mut cfg = Self::new(q, len_a, len_b, t_max, k_list, realizations);
        cfg.master_seed = parse_scalar(&required(&mut seen, "master_seed")?, "master_seed")?;
        if let Some(v) = take(&mut seen, "geometry") {
            cfg.placement = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(v) = take(&mut seen, "boundary") {
            cfg.boundary = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        }
        if let Some(v) = take(&mut seen, "output") {
            cfg.output = Some(PathBuf::from(v));
        }
        if let Some(v) = take(&mut seen, "resume") {
            cfg.resume = parse_scalar(&v, "resume")?;
        }
        if let Some(v) = take(&mut seen, "workers") {
            cfg.workers = parse_scalar(&v, "workers")?;
        }
        if let Some(v) = take(&mut seen, "max_amplitudes") {
            cfg.max_amplitudes = parse_scalar(&v, "max_amplitudes")?;
        }
        if let Some(key) = seen.keys().next() {
            return Err(Error::Config(format!("unknown key {key}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Checks ranges, geometry and the memory budget before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Config(format!("q must be >= 2, got {}", self.q)));
        }
        if self.len_a < 1 {
            return Err(Error::Config("L_A must be >= 1".into()));
        }
        if self.len_b.is_empty() || self.len_b.contains(&0) {
            return Err(Error::Config("L_B must list at least one positive size".into()));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return Err(Error::Config("k must list at least one order >= 1".into()));
        }
        let distinct: BTreeSet<_> = self.k_list.iter().collect();
        if distinct.len() != self.k_list.len() {
            return Err(Error::Config("k contains duplicates".into()));
        }
        if self.realizations < 1 {
            return Err(Error::Config("realizations must be >= 1".into()));
        }
        for &lb in &self.len_b {
            Geometry::new(self.boundary, self.placement, self.len_a, lb).map_err(|e| Error::Config(e.to_string()))?;
        }
        let largest = self.len_a + self.len_b.iter().max().unwrap();
        let amps = (self.q as u128).checked_pow(largest as u32).unwrap_or(u128::MAX);
        if amps > self.max_amplitudes {
            return Err(Error::OverBudget {
                what: format!("statevector of {largest} sites at q = {}", self.q),
                required: amps,
                limit: self.max_amplitudes,
            });
        }
        Ok(())
    }

    pub fn geometry(&self, len_b: usize) -> Result<Geometry> {
        Geometry::new(self.boundary, self.placement, self.len_a, len_b)
    }

    /// The config in the same `key = value` format [`parse`](Self::parse) reads.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "L_A = {}", self.len_a);
        let _ = writeln!(s, "L_B = {}", list(&self.len_b));
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "k = {}", list(&self.k_list));
        let _ = writeln!(s, "realizations = {}", self.realizations);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "geometry = {}", self.placement.as_str());
        let _ = writeln!(s, "boundary = {}", self.boundary.as_str());
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = {}", p.display());
        }
        let _ = writeln!(s, "resume = {}", self.resume);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "max_amplitudes = {}", self.max_amplitudes);
        s
    }
}

fn parse_scalar<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("cannot parse {key} = {v:?}")))
}

fn parse_list(v: &str, key: &str) -> Result<Vec<usize>> {
    v.split(',').map(|x| parse_scalar(x, key)).collect()
}

/// One aggregated row of the sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub q: usize,
    pub len_a: usize,
    pub len_b: usize,
    pub placement: Placement,
    pub boundary: Boundary,
    pub t: u64,
    pub k: usize,
    pub observable: String,
    pub mean: f64,
    /// `None` with fewer than two realizations, and for closed-form rows.
    pub sem: Option<f64>,
    pub n_realizations: usize,
    pub excluded_mass_max: f64,
    pub master_seed: u64,
}

impl ResultRecord {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            SCHEMA_VERSION,
            self.q,
            self.len_a,
            self.len_b,
            self.placement.as_str(),
            self.boundary.as_str(),
            self.t,
            self.k,
            self.observable,
            self.mean,
            self.sem.map(|s| s.to_string()).unwrap_or_default(),
            self.n_realizations,
            self.excluded_mass_max,
            self.master_seed
        )
    }

    pub fn from_csv(line: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(format!("expected 14 fields, found {}", f.len()));
        }
        let num = |i: usize| -> std::result::Result<f64, String> {
            f[i].parse::<f64>().map_err(|_| format!("bad number {:?} in column {}", f[i], i + 1))
        };
        let int = |i: usize| -> std::result::Result<u64, String> {
            f[i].parse::<u64>().map_err(|_| format!("bad integer {:?} in column {}", f[i], i + 1))
        };
        if int(0)? != SCHEMA_VERSION as u64 {
            return Err(format!("unsupported schema version {}", f[0]));
        }
        Ok(Self {
            q: int(1)? as usize,
            len_a: int(2)? as usize,
            len_b: int(3)? as usize,
            placement: f[4].parse().map_err(|e: Error| e.to_string())?,
            boundary: f[5].parse().map_err(|e: Error| e.to_string())?,
            t: int(6)?,
            k: int(7)? as usize,
            observable: f[8].to_string(),
            mean: num(9)?,
            sem: if f[10].is_empty() { None } else { Some(num(10)?) },
            n_realizations: int(11)? as usize,
            excluded_mass_max: num(12)?,
            master_seed: int(13)?,
        })
    }
}

/// One realization's values at one (L_B, t, k).
#[derive(Clone, Debug, PartialEq)]
pub struct RealizationRecord {
    pub len_b: usize,
    pub t: u64,
    pub k: usize,
    pub realization: usize,
    pub frame_potential: f64,
    pub haar_value: f64,
    pub delta2: f64,
    pub purity: f64,
    pub excluded_mass: f64,
}

impl RealizationRecord {
    fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            SCHEMA_VERSION,
            cfg.q,
            cfg.len_a,
            self.len_b,
            cfg.placement.as_str(),
            cfg.boundary.as_str(),
            self.t,
            self.k,
            self.realization,
            self.frame_potential,
            self.haar_value,
            self.delta2,
            self.purity,
            self.excluded_mass,
            cfg.master_seed
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    /// Rows computed by this run, in file order.
    pub records: Vec<ResultRecord>,
    pub realizations: Vec<RealizationRecord>,
    /// (L_B, t) points skipped because the output already held them.
    pub resumed_points: Vec<(usize, u64)>,
}

impl SweepOutput {
    pub fn find(&self, len_b: usize, t: u64, k: usize, observable: &str) -> Option<&ResultRecord> {
        self.records.iter().find(|r| r.len_b == len_b && r.t == t && r.k == k && r.observable == observable)
    }

    pub fn realizations_at(&self, len_b: usize, k: usize) -> Vec<&RealizationRecord> {
        self.realizations.iter().filter(|r| r.len_b == len_b && r.k == k).collect()
    }
}

/// Values of one realization at one time.
#[derive(Clone, Debug)]
struct PointValues {
    frame: Vec<f64>,
    purity: f64,
    excluded: f64,
}

fn simulate_realization(
    cfg: &ExperimentConfig,
    geometry: &Geometry,
    r: usize,
    wanted: &[bool],
) -> Result<Vec<Option<PointValues>>> {
    let rseed = seed::realization_seed(cfg.master_seed, r as u64);
    let mut state = Statevector::product_state_with_budget(geometry.sites(), cfg.q, cfg.max_amplitudes)?;
    let mut out = Vec::with_capacity(wanted.len());
    for t in 0..=cfg.t_max {
        if t > 0 {
            statevector::apply_time_step(&mut state, t, geometry, rseed)?;
        }
        if !wanted[t as usize] {
            out.push(None);
            continue;
        }
        let proj = ProjectedMatrix::from_state(&state, geometry)?;
        let frames = projected::frame_potentials(&proj, &cfg.k_list)?;
        out.push(Some(PointValues {
            frame: frames.iter().map(|f| f.value).collect(),
            purity: proj.purity(),
            excluded: frames[0].excluded_mass,
        }));
    }
    Ok(out)
}

fn aggregate(
    cfg: &ExperimentConfig,
    len_b: usize,
    t: u64,
    per_realization: &[&PointValues],
) -> (Vec<ResultRecord>, Vec<RealizationRecord>) {
    let excluded_mass_max = per_realization.iter().map(|p| p.excluded).fold(0.0, f64::max);
    let base = |k: usize, observable: &str, m: SampleMean| ResultRecord {
        q: cfg.q,
        len_a: cfg.len_a,
        len_b,
        placement: cfg.placement,
        boundary: cfg.boundary,
        t,
        k,
        observable: observable.to_string(),
        mean: m.mean,
        sem: m.sem,
        n_realizations: m.count,
        excluded_mass_max,
        master_seed: cfg.master_seed,
    };
    let mut rows = Vec::new();
    let mut reals = Vec::new();
    for (ki, &k) in cfg.k_list.iter().enumerate() {
        let haar_value = haar::haar_frame_potential_f64(cfg.q, cfg.len_a, k);
        let frames: Vec<f64> = per_realization.iter().map(|p| p.frame[ki]).collect();
        let deltas: Vec<f64> = frames.iter().map(|&f| projected::delta_squared_from(f, haar_value)).collect();
        let purities: Vec<f64> = per_realization.iter().map(|p| p.purity).collect();
        let fm = SampleMean::from_values(&frames);
        let of_mean = SampleMean {
            mean: projected::delta_squared_from(fm.mean, haar_value),
            sem: fm.sem.map(|s| s / haar_value),
            count: fm.count,
        };
        rows.push(base(k, OBS_FRAME, fm));
        rows.push(base(k, OBS_DELTA2, of_mean));
        rows.push(base(k, OBS_DELTA2_PER_REALIZATION, SampleMean::from_values(&deltas)));
        rows.push(base(k, OBS_PURITY_MOMENT, projected::purity_moment(&purities, k).expect("k >= 1")));
        for (r, p) in per_realization.iter().enumerate() {
            reals.push(RealizationRecord {
                len_b,
                t,
                k,
                realization: r,
                frame_potential: frames[r],
                haar_value,
                delta2: deltas[r],
                purity: p.purity,
                excluded_mass: p.excluded,
            });
        }
    }
    (rows, reals)
}

fn realization_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".realizations.csv");
    PathBuf::from(s)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Reads an aggregated CSV written by [`run_sweep`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let corrupt = |reason: String| Error::CorruptOutput { path: path.to_path_buf(), reason };
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    match lines.next().transpose()? {
        Some(h) if h == CSV_HEADER => {}
        Some(_) => return Err(corrupt("header does not match the expected schema".into())),
        None => return Ok(Vec::new()),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        out.push(ResultRecord::from_csv(&line).map_err(|e| corrupt(format!("line {}: {e}", i + 2)))?);
    }
    Ok(out)
}

/// (L_B, t) points fully present in `existing` for this config.
fn completed_points(cfg: &ExperimentConfig, existing: &[ResultRecord], path: &Path) -> Result<BTreeSet<(usize, u64)>> {
    let mut counts: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    for r in existing {
        let same = r.q == cfg.q
            && r.len_a == cfg.len_a
            && r.placement == cfg.placement
            && r.boundary == cfg.boundary
            && r.master_seed == cfg.master_seed
            && r.n_realizations == cfg.realizations;
        if !same {
            return Err(Error::CorruptOutput {
                path: path.to_path_buf(),
                reason: "existing rows belong to a different sweep configuration".into(),
            });
        }
        if cfg.k_list.contains(&r.k) && SIMULATED_OBSERVABLES.contains(&r.observable.as_str()) {
            *counts.entry((r.len_b, r.t)).or_default() += 1;
        }
    }
    let full = cfg.k_list.len() * SIMULATED_OBSERVABLES.len();
    Ok(counts.into_iter().filter(|&(_, c)| c == full).map(|(p, _)| p).collect())
}

struct Sinks {
    aggregated: File,
    per_realization: File,
}

fn open_sinks(cfg: &ExperimentConfig, out: &Path) -> Result<(Sinks, BTreeSet<(usize, u64)>)> {
    let real_path = realization_path(out);
    let exists = out.exists() && fs::metadata(out)?.len() > 0;
    let mut done = BTreeSet::new();
    if exists {
        if !cfg.resume {
            return Err(Error::Config(format!("{} already exists; pass resume to continue it", out.display())));
        }
        let existing = read_results(out)?;
        done = completed_points(cfg, &existing, out)?;
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut aggregated = OpenOptions::new().create(true).append(true).open(out)?;
    if !exists {
        writeln!(aggregated, "{CSV_HEADER}")?;
    }
    let real_exists = real_path.exists() && fs::metadata(&real_path)?.len() > 0;
    let mut per_realization = OpenOptions::new().create(true).append(true).open(&real_path)?;
    if !real_exists {
        writeln!(per_realization, "{REALIZATION_HEADER}")?;
    }
    Ok((Sinks { aggregated, per_realization }, done))
}

/// Runs the sweep and, if an output path is configured, appends its rows.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let (mut sinks, done) = match &cfg.output {
        Some(out) => {
            let (s, d) = open_sinks(cfg, out)?;
            (Some(s), d)
        }
        None => (None, BTreeSet::new()),
    };
    let pool = if cfg.workers > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?,
        )
    } else {
        None
    };
    let mut output = SweepOutput::default();
    for &len_b in &cfg.len_b {
        let geometry = cfg.geometry(len_b)?;
        let wanted: Vec<bool> = (0..=cfg.t_max).map(|t| !done.contains(&(len_b, t))).collect();
        output.resumed_points.extend((0..=cfg.t_max).filter(|&t| !wanted[t as usize]).map(|t| (len_b, t)));
        if !wanted.iter().any(|&w| w) {
            continue;
        }
        let job = || -> Result<Vec<Vec<Option<PointValues>>>> {
            (0..cfg.realizations).into_par_iter().map(|r| simulate_realization(cfg, &geometry, r, &wanted)).collect()
        };
        let per_real = match &pool {
            Some(p) => p.install(job)?,
            None => job()?,
        };
        let mut block = String::new();
        let mut real_block = String::new();
        for t in 0..=cfg.t_max {
            if !wanted[t as usize] {
                continue;
            }
            let values: Vec<&PointValues> = per_real.iter().map(|v| v[t as usize].as_ref().expect("wanted point")).collect();
            let (rows, reals) = aggregate(cfg, len_b, t, &values);
            for r in &rows {
                block.push_str(&r.to_csv());
                block.push('\n');
            }
            for r in &reals {
                real_block.push_str(&r.to_csv(cfg));
                real_block.push('\n');
            }
            output.records.extend(rows);
            output.realizations.extend(reals);
        }
        if let Some(s) = sinks.as_mut() {
            s.per_realization.write_all(real_block.as_bytes())?;
            s.per_realization.sync_data()?;
            s.aggregated.write_all(block.as_bytes())?;
            s.aggregated.sync_data()?;
        }
    }
    if let Some(out) = &cfg.output {
        let mut m = cfg.to_text();
        let _ = writeln!(m, "schema_version = {SCHEMA_VERSION}");
        let _ = writeln!(m, "code_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "wall_clock_seconds = {:.3}", started.elapsed().as_secs_f64());
        let _ = writeln!(m, "computed_points = {}", output.records.len() / (cfg.k_list.len() * SIMULATED_OBSERVABLES.len()));
        let _ = writeln!(m, "resumed_points = {}", output.resumed_points.len());
        fs::write(manifest_path(out), m)?;
    }
    Ok(output)
}

/// First time the Δ² curve reaches ε².
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Crossing {
    /// Interpolated crossing time (0 if the first sample is already below).
    At(f64),
    /// No sample at or below ε² up to the last time.
    Censored,
}

/// Linear interpolation of ln Δ² between the last sample above ε² and the
/// first at or below it. A Δ² of exactly zero falls back to linear
/// interpolation in Δ² itself.
pub fn crossing_time(times: &[f64], delta2: &[f64], epsilon: f64) -> Crossing {
    let target = epsilon * epsilon;
    let Some(i) = delta2.iter().position(|&d| d <= target) else {
        return Crossing::Censored;
    };
    if i == 0 {
        return Crossing::At(times[0]);
    }
    let (t0, t1, d0, d1) = (times[i - 1], times[i], delta2[i - 1], delta2[i]);
    let frac = if d1 > 0.0 {
        (d0.ln() - target.ln()) / (d0.ln() - d1.ln())
    } else {
        (d0 - target) / (d0 - d1)
    };
    Crossing::At(t0 + frac * (t1 - t0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignTimeEstimate {
    pub k: usize,
    pub epsilon: f64,
    pub t_hat: Crossing,
    /// 2.5% and 97.5% bootstrap quantiles over uncensored resamples.
    pub ci: Option<(f64, f64)>,
    pub censored_fraction: f64,
}

/// Design-time estimate for one L_B from per-realization records, using Δ²
/// of the mean frame potential. The confidence interval resamples
/// realizations with replacement.
pub fn estimate_design_time(
    rows: &[&RealizationRecord],
    k: usize,
    epsilon: f64,
    bootstrap: usize,
    bootstrap_seed: u64,
) -> Result<DesignTimeEstimate> {
    let rows: Vec<&RealizationRecord> = rows.iter().copied().filter(|r| r.k == k).collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!("no records for k = {k}")));
    }
    if rows.iter().any(|r| r.len_b != rows[0].len_b) {
        return Err(Error::InvalidArgument("records mix several L_B values".into()));
    }
    let times: Vec<u64> = rows.iter().map(|r| r.t).collect::<BTreeSet<_>>().into_iter().collect();
    let n_real = rows.iter().map(|r| r.realization).max().unwrap() + 1;
    let mut grid = vec![vec![f64::NAN; n_real]; times.len()];
    for r in &rows {
        let ti = times.binary_search(&r.t).unwrap();
        grid[ti][r.realization] = r.frame_potential;
    }
    if grid.iter().flatten().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("every realization needs a record at every time".into()));
    }
    let haar_value = rows[0].haar_value;
    let tf: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let curve = |weights: &[usize]| -> Crossing {
        let d: Vec<f64> = grid
            .iter()
            .map(|row| {
                let mean = weights.iter().map(|&r| row[r]).sum::<f64>() / weights.len() as f64;
                projected::delta_squared_from(mean, haar_value)
            })
            .collect();
        crossing_time(&tf, &d, epsilon)
    };
    let all: Vec<usize> = (0..n_real).collect();
    let t_hat = curve(&all);
    let mut rng = seed::rng_from_seed(bootstrap_seed);
    let mut samples = Vec::new();
    let mut censored = 0usize;
    for _ in 0..bootstrap {
        let pick: Vec<usize> = (0..n_real).map(|_| rng.random_range(0..n_real)).collect();
        match curve(&pick) {
            Crossing::At(t) => samples.push(t),
            Crossing::Censored => censored += 1,
        }
    }
    samples.sort_by(f64::total_cmp);
    let ci = (!samples.is_empty()).then(|| {
        let q = |p: f64| samples[((samples.len() - 1) as f64 * p).round() as usize];
        (q(0.025), q(0.975))
    });
    Ok(DesignTimeEstimate {
        k,
        epsilon,
        t_hat,
        ci,
        censored_fraction: if bootstrap > 0 { censored as f64 / bootstrap as f64 } else { 0.0 },
    })
}

/// Markov bound (F̄^(k) − F_H^(k))/ε on Prob(F^(k)_U − F_H^(k) > ε).
pub fn markov_tail_bound(record: &ResultRecord, epsilon: f64) -> Result<f64> {
    if record.observable != OBS_FRAME {
        return Err(Error::InvalidArgument(format!("expected a {OBS_FRAME} row, got {}", record.observable)));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let haar_value = haar::haar_frame_potential_f64(record.q, record.len_a, record.k);
    Ok(((record.mean - haar_value) / epsilon).max(0.0))
}

/// Fraction of realizations with F^(k)_U − F_H^(k) > ε.
pub fn empirical_exceedance(rows: &[&RealizationRecord], epsilon: f64) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.frame_potential - r.haar_value > epsilon).count() as f64 / rows.len() as f64
}
