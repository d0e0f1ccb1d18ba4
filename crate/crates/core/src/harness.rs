//! Finite-length Monte Carlo experiments and figure data.
//!
//! A BER sweep runs codewords in fixed-size batches; every finished batch is
//! appended to `<label>.progress.csv` so an interrupted sweep resumes where
//! it stopped. Codeword `c` at sweep value `v` draws its source and channel
//! noise from seeds derived from `(seed, v, c)` only, so resumed and
//! uninterrupted runs see the same data. CADE thresholds behind the C1
//! figures are cached the same way, one row per finished point.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cade::{threshold_search, write_threshold_csv, CadeConfig, ThresholdResult, ThresholdRow};
use crate::channels::{rate_limits, sample_source_and_side, transmit};
use crate::decoder::{bit_errors, BpDecoder, DecoderInput};
use crate::encoder::build_encoder;
use crate::ensemble::{self, EnsembleSpec, ValidationMode};
use crate::error::{Error, Result};
use crate::graph::sample_graph;
use crate::optimizer::{rate_bracket, Axis, DesignPoint, ThresholdSettings};
use crate::rng::{derive_seed, derive_seed_path};

/// One BER sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// File stem of everything this sweep writes.
    pub label: String,
    /// Built-in ensemble name or path to an ensemble file.
    pub ensemble: String,
    pub k: usize,
    pub seed: u64,
    /// Settings of everything but the swept parameter.
    pub point: DesignPoint,
    pub axis: Axis,
    /// Ascending sweep values.
    pub values: Vec<f64>,
    #[serde(default = "default_min_codewords")]
    pub min_codewords: u64,
    /// Source-bit budget per sweep value; defaults to `min_codewords·k`.
    #[serde(default)]
    pub max_source_bits: Option<u64>,
    #[serde(default = "default_min_bit_errors")]
    pub min_bit_errors: u64,
    #[serde(default = "default_near_lossless")]
    pub near_lossless_ber: f64,
    #[serde(default = "default_bp_iters")]
    pub max_bp_iters: usize,
    /// Codewords per persisted batch.
    #[serde(default = "default_batch")]
    pub batch: u64,
}

fn default_min_codewords() -> u64 {
    200
}
fn default_min_bit_errors() -> u64 {
    100
}
fn default_near_lossless() -> f64 {
    1e-5
}
fn default_bp_iters() -> usize {
    200
}
fn default_batch() -> u64 {
    10
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.min_codewords == 0 {
            return bad("min_codewords must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("sweep values must be strictly ascending");
        }
        if self.label.is_empty() || self.label.contains(['/', '\\']) {
            return bad("label must be a plain file stem");
        }
        Ok(())
    }

    fn budget(&self) -> u64 {
        self.max_source_bits.unwrap_or(self.min_codewords * self.k as u64)
    }

    fn done(&self, c: &Counters) -> bool {
        c.codewords >= self.min_codewords
            && (c.bit_errors >= self.min_bit_errors || c.source_bits >= self.budget())
    }
}

/// Outcome at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub sweep_value: f64,
    pub r_th: f64,
    /// `R_c - R_Th` at this sweep value.
    pub gap_bits: f64,
    pub codewords: u64,
    pub source_bits: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub mean_iterations: f64,
    pub wallclock_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Counters {
    codewords: u64,
    source_bits: u64,
    bit_errors: u64,
    block_errors: u64,
    iteration_sum: u64,
    wallclock_s: f64,
}

impl Counters {
    fn merge(&mut self, o: &Counters) {
        self.codewords += o.codewords;
        self.source_bits += o.source_bits;
        self.bit_errors += o.bit_errors;
        self.block_errors += o.block_errors;
        self.iteration_sum += o.iteration_sum;
        self.wallclock_s += o.wallclock_s;
    }
}

/// A persisted batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct BatchRow {
    sweep_value: f64,
    first_codeword: u64,
    codewords: u64,
    source_bits: u64,
    bit_errors: u64,
    block_errors: u64,
    iteration_sum: u64,
    wallclock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    config: ExperimentConfig,
    graph_seed: u64,
    rate: f64,
}

pub fn graph_seed(seed: u64) -> u64 {
    derive_seed(seed, 0)
}

pub fn records_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}.csv"))
}

fn progress_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}.progress.csv"))
}

fn sidecar_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{label}.json"))
}

fn read_progress(path: &Path) -> Result<BTreeMap<u64, Counters>> {
    let mut out: BTreeMap<u64, Counters> = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let mut r = csv::Reader::from_path(path)?;
    for row in r.deserialize() {
        let b: BatchRow = row?;
        let c = out.entry(b.sweep_value.to_bits()).or_default();
        if b.first_codeword != c.codewords {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                reason: format!("batch at {} starts at codeword {} after {}", b.sweep_value, b.first_codeword, c.codewords),
            });
        }
        c.merge(&Counters {
            codewords: b.codewords,
            source_bits: b.source_bits,
            bit_errors: b.bit_errors,
            block_errors: b.block_errors,
            iteration_sum: b.iteration_sum,
            wallclock_s: b.wallclock_s,
        });
    }
    Ok(out)
}

fn append_batch(path: &Path, row: &BatchRow) -> Result<()> {
    let fresh = !path.exists();
    let f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

pub fn write_records_csv(path: &Path, records: &[BerRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Runs (or resumes) a sweep. With `out_dir` the batches, a sidecar with the
/// configuration and the final records are written there.
pub fn run_ber_sweep(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Vec<BerRecord>> {
    config.check()?;
    let spec = ensemble::resolve(&config.ensemble)?;
    let violations = spec.validate(ValidationMode::Published);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Infeasible(list.join("; ")));
    }
    let rate = spec.design_rate()?;
    let gseed = graph_seed(config.seed);

    let mut done = BTreeMap::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let side = Sidecar {
            config: config.clone(),
            graph_seed: gseed,
            rate,
        };
        let sp = sidecar_path(dir, &config.label);
        if sp.exists() {
            let old: Sidecar = serde_json::from_str(&fs::read_to_string(&sp)?)?;
            if old != side {
                return Err(Error::InvalidParameter(format!(
                    "{} belongs to a different experiment; use another label or directory",
                    sp.display()
                )));
            }
        } else {
            fs::write(&sp, serde_json::to_string_pretty(&side)?)?;
        }
        done = read_progress(&progress_path(dir, &config.label))?;
    }

    let g = sample_graph(&spec, config.k, gseed)?;
    let enc = build_encoder(&g).map_err(|e| Error::Construction {
        seed: gseed,
        reason: e.to_string(),
    })?;
    let dec = BpDecoder::new(&g);

    let mut records = Vec::with_capacity(config.values.len());
    for &v in &config.values {
        let p = config.point.with(config.axis, v);
        let (model, ch) = (p.model()?, p.channel()?);
        let mut acc = done.get(&v.to_bits()).copied().unwrap_or_default();
        while !config.done(&acc) {
            let first = acc.codewords;
            let start = Instant::now();
            let per_word: Vec<Counters> = (first..first + config.batch)
                .into_par_iter()
                .map(|c| -> Result<Counters> {
                    let (x, y) = sample_source_and_side(&model, config.k, derive_seed_path(config.seed, &[1, v.to_bits(), c]));
                    let z = enc.encode(&x)?;
                    let zh = transmit(&ch, &z, derive_seed_path(config.seed, &[2, v.to_bits(), c]));
                    let input = DecoderInput {
                        side_info: &y,
                        received_parity: &zh,
                        model: &model,
                        channel: &ch,
                    };
                    let r = dec.decode(&input, config.max_bp_iters)?;
                    let errors = bit_errors(&x, &r.x_hat)? as u64;
                    Ok(Counters {
                        codewords: 1,
                        source_bits: config.k as u64,
                        bit_errors: errors,
                        block_errors: u64::from(errors > 0),
                        iteration_sum: r.iterations_used as u64,
                        wallclock_s: 0.0,
                    })
                })
                .collect::<Result<_>>()?;
            let mut batch = Counters::default();
            for c in &per_word {
                batch.merge(c);
            }
            batch.wallclock_s = start.elapsed().as_secs_f64();
            if let Some(dir) = out_dir {
                append_batch(
                    &progress_path(dir, &config.label),
                    &BatchRow {
                        sweep_value: v,
                        first_codeword: first,
                        codewords: batch.codewords,
                        source_bits: batch.source_bits,
                        bit_errors: batch.bit_errors,
                        block_errors: batch.block_errors,
                        iteration_sum: batch.iteration_sum,
                        wallclock_s: batch.wallclock_s,
                    },
                )?;
            }
            acc.merge(&batch);
        }
        let r_th = rate_limits(&model, &ch).r_th;
        records.push(BerRecord {
            sweep_value: v,
            r_th,
            gap_bits: rate - r_th,
            codewords: acc.codewords,
            source_bits: acc.source_bits,
            bit_errors: acc.bit_errors,
            block_errors: acc.block_errors,
            ber: acc.bit_errors as f64 / acc.source_bits.max(1) as f64,
            fer: acc.block_errors as f64 / acc.codewords.max(1) as f64,
            mean_iterations: acc.iteration_sum as f64 / acc.codewords.max(1) as f64,
            wallclock_s: acc.wallclock_s,
        });
        if let Some(dir) = out_dir {
            write_records_csv(&records_path(dir, &config.label), &records)?;
        }
    }
    Ok(records)
}

/// Most degraded sweep value whose BER is below the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearLossless {
    pub value: f64,
    /// Log-linear interpolation of the crossing between `value` and the next
    /// more degraded point.
    pub interpolated: Option<f64>,
    /// False when every point is below the target.
    pub bracketed: bool,
}

fn log_ber(r: &BerRecord) -> f64 {
    // Zero-error points count as half an error.
    let floor = 0.5 / r.source_bits.max(1) as f64;
    r.ber.max(floor).log10()
}

/// Sweep value where BER crosses `level`, interpolating `log10(BER)`
/// linearly between the last point below and the next point.
pub fn near_lossless_threshold(records: &[BerRecord], level: f64) -> Result<NearLossless> {
    let mut sorted: Vec<&BerRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value));
    let last_good = sorted
        .iter()
        .rposition(|r| r.ber < level)
        .ok_or(Error::NoCrossing { level })?;
    let good = sorted[last_good];
    let Some(bad) = sorted.get(last_good + 1) else {
        return Ok(NearLossless {
            value: good.sweep_value,
            interpolated: None,
            bracketed: false,
        });
    };
    let (la, lb, lt) = (log_ber(good), log_ber(bad), level.log10());
    let interpolated = (lb > la).then(|| {
        let t = ((lt - la) / (lb - la)).clamp(0.0, 1.0);
        good.sweep_value + t * (bad.sweep_value - good.sweep_value)
    });
    Ok(NearLossless {
        value: good.sweep_value,
        interpolated,
        bracketed: true,
    })
}

/// Gap `R_c - R_Th` where BER crosses `level`, interpolated like
/// [`near_lossless_threshold`] but on the gap axis.
pub fn crossing_gap(records: &[BerRecord], level: f64) -> Result<f64> {
    let as_gap: Vec<BerRecord> = records
        .iter()
        .map(|r| BerRecord {
            sweep_value: -r.gap_bits,
            ..r.clone()
        })
        .collect();
    let nl = near_lossless_threshold(&as_gap, level)?;
    Ok(-nl.interpolated.unwrap_or(nl.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::InvalidParameter(format!("unknown scale {s:?}"))),
        }
    }
}

impl Scale {
    pub fn k(self) -> usize {
        match self {
            Scale::Desk => 20_000,
            Scale::Full => 80_000,
        }
    }

    pub fn codewords(self) -> u64 {
        match self {
            Scale::Desk => 200,
            Scale::Full => 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            _ => Err(Error::InvalidParameter(format!("unknown figure {s:?}"))),
        }
    }
}

/// Knobs shared by the figure runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOptions {
    pub scale: Scale,
    pub seed: u64,
    pub cade: CadeConfig,
    pub resolution: f64,
    /// Overrides of the built-in grids.
    #[serde(default)]
    pub curves: Option<Vec<f64>>,
    #[serde(default)]
    pub gaps: Option<Vec<f64>>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub codewords: Option<u64>,
}

impl FigureOptions {
    pub fn new(scale: Scale, seed: u64) -> Self {
        Self {
            scale,
            seed,
            cade: CadeConfig::default(),
            resolution: 1e-4,
            curves: None,
            gaps: None,
            k: None,
            codewords: None,
        }
    }

    fn k(&self) -> usize {
        self.k.unwrap_or(self.scale.k())
    }

    fn codewords(&self) -> u64 {
        self.codewords.unwrap_or(self.scale.codewords())
    }
}

/// Files written by [`reproduce_figure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FigureOutput {
    pub csv: Vec<PathBuf>,
    pub script: PathBuf,
}

/// Setting of the C1 experiments: `p_s(0) = 0.1`, `Ch_tr = (0.2, 0.01)`.
pub fn c1_point(eps01: f64) -> DesignPoint {
    DesignPoint {
        p_source_zero: 0.1,
        eps01,
        eps10: 0.4,
        eps01z: 0.2,
        eps10z: 0.01,
        p_p_zero: 0.5,
    }
}

/// Setting of the C2/C3 experiments; `ε01z` is swept.
pub fn c2_point() -> DesignPoint {
    DesignPoint {
        p_source_zero: 0.1,
        eps01: 0.2,
        eps10: 0.4,
        eps01z: 0.2,
        eps10z: 0.01,
        p_p_zero: 0.5,
    }
}

/// CADE threshold along `axis`, first within a narrow bracket of gaps
/// `(0.12, 0.02)` around the expected value, then over the full range.
pub fn locate_threshold(
    spec: &EnsembleSpec,
    point: &DesignPoint,
    axis: Axis,
    config: &CadeConfig,
    resolution: f64,
) -> Result<ThresholdResult> {
    let rate = spec.design_rate()?;
    let fam = point.family(axis);
    let narrow = ThresholdSettings {
        axis,
        range: point.axis_range(axis),
        bracket_gap: 0.12,
        resolution,
    };
    let (good, _) = rate_bracket(point, rate, &narrow)?;
    let (bad, _) = rate_bracket(point, rate, &ThresholdSettings { bracket_gap: 0.02, ..narrow })?;
    match threshold_search(spec, &fam, good, bad, point.p_p_zero, config, resolution) {
        Err(Error::NotBracketed { .. }) => {
            let (good, bad) = rate_bracket(point, rate, &ThresholdSettings { bracket_gap: 0.4, ..narrow })?;
            threshold_search(spec, &fam, good, bad, point.p_p_zero, config, resolution)
        }
        r => r,
    }
}

/// Sweep values along `axis` at which `R_c - R_Th` takes each of `gaps`,
/// ascending; gaps out of reach are dropped.
pub fn values_at_gaps(point: &DesignPoint, axis: Axis, rate: f64, gaps: &[f64]) -> Result<Vec<f64>> {
    let fam = point.family(axis);
    let (lo, hi) = point.axis_range(axis);
    let mut v = Vec::new();
    for &gap in gaps {
        if let Some(t) = crate::cade::theta_at_gap(&fam, rate, gap, lo, hi)? {
            // Round so labels and seeds stay stable across platforms.
            v.push((t * 1e6).round() / 1e6);
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn fig2(opts: &FigureOptions, out: &Path) -> Result<FigureOutput> {
    let spec = ensemble::c1();
    let eps01: Vec<f64> = opts
        .curves
        .clone()
        .unwrap_or_else(|| (1..=10).map(|i| i as f64 * 0.05).collect());
    let rows = c1_thresholds(opts, out, &eps01)?;
    let csv = out.join("fig2.csv");
    write_threshold_csv(&csv, &rows)?;
    let script = out.join("fig2.gp");
    let rate = spec.design_rate()?;
    fs::write(
        &script,
        format!(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set terminal pngcairo size 800,600\n\
             set output 'fig2.png'\n\
             set xlabel 'eps01'\n\
             set ylabel 'rate (bits)'\n\
             plot 'fig2.csv' using 1:3 with linespoints title 'R_Th at threshold', \\\n\
             \x20    '' using 1:4 with linespoints title 'R_symm at threshold', \\\n\
             \x20    {rate} with lines title 'R_c'\n"
        ),
    )?;
    Ok(FigureOutput { csv: vec![csv], script })
}

/// Settings a cached threshold row depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ThresholdCacheKey {
    cade: CadeConfig,
    resolution: f64,
}

const C1_CACHE: &str = "c1_thresholds";

/// C1 thresholds along `eps10` for each `eps01`. Every finished row is
/// appended to `c1_thresholds.progress.csv` in `out` and reused by later runs
/// with the same CADE settings.
fn c1_thresholds(opts: &FigureOptions, out: &Path, eps01: &[f64]) -> Result<Vec<ThresholdRow>> {
    let key = ThresholdCacheKey {
        cade: opts.cade,
        resolution: opts.resolution,
    };
    let sp = sidecar_path(out, C1_CACHE);
    let pp = progress_path(out, C1_CACHE);
    if sp.exists() {
        let old: ThresholdCacheKey = serde_json::from_str(&fs::read_to_string(&sp)?)?;
        if old != key {
            return Err(Error::InvalidParameter(format!(
                "{} holds thresholds for other CADE settings; use another directory",
                sp.display()
            )));
        }
    } else {
        fs::write(&sp, serde_json::to_string_pretty(&key)?)?;
        if pp.exists() {
            fs::remove_file(&pp)?;
        }
    }
    let cached: Vec<ThresholdRow> = if pp.exists() {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(&pp)?;
        r.deserialize().collect::<std::result::Result<_, _>>()?
    } else {
        Vec::new()
    };
    let log = Mutex::new(csv::WriterBuilder::new().has_headers(false).from_writer(
        OpenOptions::new().create(true).append(true).open(&pp)?,
    ));
    let spec = ensemble::c1();
    eps01
        .par_iter()
        .map(|&e| {
            if let Some(r) = cached.iter().find(|r| (r.sweep_param - e).abs() < 1e-12) {
                return Ok(*r);
            }
            let r = locate_threshold(&spec, &c1_point(e), Axis::Eps10, &opts.cade, opts.resolution)?;
            let row = ThresholdRow::new(e, &r);
            let mut w = log.lock().expect("threshold log poisoned");
            w.serialize(row)?;
            w.flush()?;
            Ok(row)
        })
        .collect()
}

const RECORD_HEADER: [&str; 11] = [
    "sweep_value",
    "r_th",
    "gap_bits",
    "codewords",
    "source_bits",
    "bit_errors",
    "block_errors",
    "ber",
    "fer",
    "mean_iterations",
    "wallclock_s",
];

fn record_fields(r: &BerRecord) -> [String; 11] {
    [
        r.sweep_value.to_string(),
        r.r_th.to_string(),
        r.gap_bits.to_string(),
        r.codewords.to_string(),
        r.source_bits.to_string(),
        r.bit_errors.to_string(),
        r.block_errors.to_string(),
        r.ber.to_string(),
        r.fer.to_string(),
        r.mean_iterations.to_string(),
        r.wallclock_s.to_string(),
    ]
}

/// Long-format CSV: a `curve` column followed by the record columns.
fn write_curves(path: &Path, curves: &[(String, Vec<BerRecord>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(std::iter::once("curve").chain(RECORD_HEADER))?;
    for (name, records) in curves {
        for r in records {
            w.write_record(std::iter::once(name.clone()).chain(record_fields(r)))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn ber_script(stem: &str, curves: &[String], xlabel: &str) -> String {
    let mut s = format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output '{stem}.png'\n\
         set logscale y\n\
         set format y '10^{{%L}}'\n\
         set xlabel '{xlabel}'\n\
         set ylabel 'BER'\n\
         set xrange [*:*] reverse\n\
         plot "
    );
    for (i, c) in curves.iter().enumerate() {
        if i > 0 {
            s.push_str(", \\\n     ");
        }
        let _ = write!(s, "'{stem}.csv' skip 1 using (strcol(1) eq '{c}' ? $4 : 1/0):9 with linespoints title '{c}'");
    }
    s.push('\n');
    s
}

fn fig3(opts: &FigureOptions, out: &Path) -> Result<FigureOutput> {
    let spec = ensemble::c1();
    let rate = spec.design_rate()?;
    let eps01 = opts.curves.clone().unwrap_or_else(|| match opts.scale {
        Scale::Desk => vec![0.2, 0.4],
        Scale::Full => vec![0.1, 0.2, 0.3, 0.4, 0.5],
    });
    let gaps = opts.gaps.clone().unwrap_or_else(|| match opts.scale {
        Scale::Desk => vec![0.16, 0.13, 0.10, 0.08, 0.06, 0.04],
        Scale::Full => vec![0.16, 0.14, 0.12, 0.10, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04],
    });
    let mut curves = Vec::new();
    for &e in &eps01 {
        let point = c1_point(e);
        let config = ExperimentConfig {
            label: format!("fig3_eps01_{e:.3}"),
            ensemble: "C1".into(),
            k: opts.k(),
            seed: opts.seed,
            point,
            axis: Axis::Eps10,
            values: values_at_gaps(&point, Axis::Eps10, rate, &gaps)?,
            min_codewords: opts.codewords(),
            max_source_bits: None,
            min_bit_errors: default_min_bit_errors(),
            near_lossless_ber: default_near_lossless(),
            max_bp_iters: default_bp_iters(),
            batch: default_batch(),
        };
        let records = run_ber_sweep(&config, Some(out))?;
        curves.push((format!("eps01={e}"), records));
    }
    let csv = out.join("fig3.csv");
    write_curves(&csv, &curves)?;
    let thresholds = c1_thresholds(opts, out, &eps01)?;
    let tcsv = out.join("fig3_thresholds.csv");
    write_threshold_csv(&tcsv, &thresholds)?;
    let names: Vec<String> = curves.iter().map(|c| c.0.clone()).collect();
    let script = out.join("fig3.gp");
    fs::write(&script, ber_script("fig3", &names, "R_c - R_Th (bits)"))?;
    Ok(FigureOutput {
        csv: vec![csv, tcsv],
        script,
    })
}

/// Near-lossless summary row of one code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeSummary {
    pub near_lossless_value: f64,
    pub near_lossless_gap: f64,
    pub bracketed: bool,
}

fn fig4(opts: &FigureOptions, out: &Path) -> Result<FigureOutput> {
    let point = c2_point();
    let gaps = opts.gaps.clone().unwrap_or_else(|| match opts.scale {
        Scale::Desk => vec![0.40, 0.34, 0.28, 0.22, 0.16, 0.10, 0.06],
        Scale::Full => vec![0.40, 0.36, 0.32, 0.28, 0.24, 0.20, 0.16, 0.13, 0.10, 0.08, 0.06],
    });
    let mut curves = Vec::new();
    let mut summary = csv::Writer::from_path(out.join("fig4_summary.csv"))?;
    summary.write_record(["code", "near_lossless_eps01z", "near_lossless_gap", "bracketed"])?;
    for name in ["C2", "C3"] {
        let spec = ensemble::resolve(name)?;
        let rate = spec.design_rate()?;
        let config = ExperimentConfig {
            label: format!("fig4_{}", name.to_lowercase()),
            ensemble: name.into(),
            k: opts.k(),
            seed: opts.seed,
            point,
            axis: Axis::Eps01z,
            values: values_at_gaps(&point, Axis::Eps01z, rate, &gaps)?,
            min_codewords: opts.codewords(),
            max_source_bits: None,
            min_bit_errors: default_min_bit_errors(),
            near_lossless_ber: default_near_lossless(),
            max_bp_iters: default_bp_iters(),
            batch: default_batch(),
        };
        let records = run_ber_sweep(&config, Some(out))?;
        match near_lossless_threshold(&records, config.near_lossless_ber) {
            Ok(nl) => {
                let v = nl.interpolated.unwrap_or(nl.value);
                let lim = rate_limits(&point.with(Axis::Eps01z, v).model()?, &point.with(Axis::Eps01z, v).channel()?);
                summary.write_record([
                    name.to_string(),
                    v.to_string(),
                    (rate - lim.r_th).to_string(),
                    nl.bracketed.to_string(),
                ])?;
            }
            Err(Error::NoCrossing { .. }) => {
                summary.write_record([name.to_string(), "nan".into(), "nan".into(), "false".into()])?;
            }
            Err(e) => return Err(e),
        }
        curves.push((name.to_string(), records));
    }
    summary.flush()?;
    let csv = out.join("fig4.csv");
    write_curves(&csv, &curves)?;
    let names: Vec<String> = curves.iter().map(|c| c.0.clone()).collect();
    let script = out.join("fig4.gp");
    fs::write(&script, ber_script("fig4", &names, "R_c - R_Th (bits)"))?;
    Ok(FigureOutput {
        csv: vec![csv, out.join("fig4_summary.csv")],
        script,
    })
}

/// Writes the data behind a figure and a gnuplot script reading it.
pub fn reproduce_figure(fig: Figure, opts: &FigureOptions, out: &Path) -> Result<FigureOutput> {
    fs::create_dir_all(out)?;
    match fig {
        Figure::Fig2 => fig2(opts, out),
        Figure::Fig3 => fig3(opts, out),
        Figure::Fig4 => fig4(opts, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: f64, ber: f64, bits: u64) -> BerRecord {
        BerRecord {
            sweep_value: v,
            r_th: 0.0,
            gap_bits: -v,
            codewords: 1,
            source_bits: bits,
            bit_errors: (ber * bits as f64).round() as u64,
            block_errors: 0,
            ber,
            fer: 0.0,
            mean_iterations: 0.0,
            wallclock_s: 0.0,
        }
    }

    fn small(label: &str) -> ExperimentConfig {
        ExperimentConfig {
            label: label.into(),
            ensemble: "C1".into(),
            k: 400,
            seed: 11,
            point: c1_point(0.2),
            axis: Axis::Eps10,
            values: vec![0.2, 0.35],
            min_codewords: 6,
            max_source_bits: None,
            min_bit_errors: 1_000_000,
            near_lossless_ber: 1e-5,
            max_bp_iters: 50,
            batch: 2,
        }
    }

    #[test]
    fn interpolates_in_log_domain() {
        let r = vec![rec(0.1, 1e-6, 1_000_000), rec(0.2, 1e-4, 1_000_000)];
        let nl = near_lossless_threshold(&r, 1e-5).unwrap();
        assert!(nl.bracketed);
        assert!((nl.interpolated.unwrap() - 0.15).abs() < 1e-9);
    }

    #[test]
    fn zero_error_points_use_floor() {
        let r = vec![rec(0.1, 0.0, 100_000), rec(0.2, 5e-3, 100_000)];
        let nl = near_lossless_threshold(&r, 1e-5).unwrap();
        assert_eq!(nl.value, 0.1);
        let v = nl.interpolated.unwrap();
        assert!(v > 0.1 && v < 0.2);
    }

    #[test]
    fn reports_missing_crossing() {
        let r = vec![rec(0.1, 1e-3, 1000)];
        assert!(matches!(near_lossless_threshold(&r, 1e-5), Err(Error::NoCrossing { .. })));
        let all_good = vec![rec(0.1, 0.0, 1_000_000)];
        assert!(!near_lossless_threshold(&all_good, 1e-5).unwrap().bracketed);
    }

    #[test]
    fn rejects_unsorted_values() {
        let mut c = small("x");
        c.values = vec![0.3, 0.2];
        assert!(c.check().is_err());
    }

    #[test]
    fn resumed_sweep_matches_fresh_run() {
        let dir = tempfile::tempdir().unwrap();
        let fresh = run_ber_sweep(&small("a"), Some(dir.path())).unwrap();

        // Interrupt after the first value by truncating the sweep.
        let mut partial = small("b");
        partial.values.truncate(1);
        partial.min_codewords = 4;
        run_ber_sweep(&partial, Some(dir.path())).unwrap();
        let side = sidecar_path(dir.path(), "b");
        fs::remove_file(&side).unwrap();
        let resumed = run_ber_sweep(&small("b"), Some(dir.path())).unwrap();

        assert_eq!(fresh.len(), resumed.len());
        for (a, b) in fresh.iter().zip(&resumed) {
            assert_eq!(a.codewords, b.codewords);
            assert_eq!(a.bit_errors, b.bit_errors);
            assert_eq!(a.block_errors, b.block_errors);
            assert_eq!(a.mean_iterations, b.mean_iterations);
        }
        assert_eq!(read_records_csv(&records_path(dir.path(), "a")).unwrap().len(), 2);
    }

    #[test]
    fn refuses_foreign_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small("s");
        c.values.truncate(1);
        c.min_codewords = 2;
        run_ber_sweep(&c, Some(dir.path())).unwrap();
        c.seed += 1;
        assert!(matches!(run_ber_sweep(&c, Some(dir.path())), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn noisier_points_have_more_errors() {
        let r = run_ber_sweep(&small("n"), None).unwrap();
        assert!(r[0].gap_bits > r[1].gap_bits);
        assert!(r[0].bit_errors <= r[1].bit_errors);
    }
}
