//! Beat-tracking scores: one-to-one matching inside a tolerance window,
//! F-measure with and without a discarded head, dataset aggregation and the
//! particle-count sweep.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frontend::read_activation_stream;
use crate::inference::{Tracker, TrackerConfig};

pub const DEFAULT_TOLERANCE_S: f64 = 0.07;
pub const DEFAULT_SKIP_S: f64 = 5.0;

// absorbs decimal round-off in annotation files at the window edge
const WINDOW_SLACK: f64 = 1e-9;

/// Reference beat times in seconds, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatAnnotations {
    pub times_s: Vec<f64>,
}

impl BeatAnnotations {
    /// Parses one beat per line, taking the first whitespace-separated token
    /// and ignoring blank and `#` lines.
    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let err = |message: String| Error::Annotation { path: path.to_path_buf(), message };
        let mut times_s: Vec<f64> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let Some(token) = line.split_whitespace().next() else { continue };
            if token.starts_with('#') {
                continue;
            }
            let t: f64 = token
                .parse()
                .map_err(|_| err(format!("line {}: not a number: {token:?}", i + 1)))?;
            if !(t >= 0.0 && t.is_finite()) {
                return Err(err(format!("line {}: negative or non-finite time {t}", i + 1)));
            }
            if times_s.last().is_some_and(|&prev| t <= prev) {
                return Err(err(format!("line {}: times must be strictly increasing", i + 1)));
            }
            times_s.push(t);
        }
        Ok(Self { times_s })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(BufReader::new(File::open(path)?), path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub matched: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Greedy one-to-one matching: references are visited in time order and each
/// takes the nearest still-unmatched estimate within `tol_s`, preferring the
/// earlier estimate on a tie.
pub fn match_beats(est: &[f64], reference: &[f64], tol_s: f64) -> MatchCounts {
    let tol = tol_s + WINDOW_SLACK;
    let mut used = vec![false; est.len()];
    let mut matched = 0;
    for &r in reference {
        let lo = est.partition_point(|&e| e < r - tol);
        let mut best: Option<(usize, f64)> = None;
        for (j, &e) in est.iter().enumerate().skip(lo) {
            let d = (e - r).abs();
            if e > r + tol {
                break;
            }
            if used[j] || d > tol {
                continue;
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
            matched += 1;
        }
    }
    MatchCounts {
        matched,
        false_positives: est.len() - matched,
        false_negatives: reference.len() - matched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub f_measure: f64,
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub skip_s: f64,
}

/// F-measure after discarding estimates and references earlier than
/// `skip_s`. Two empty lists score a vacuous 1.
pub fn score(est: &[f64], reference: &[f64], tol_s: f64, skip_s: f64) -> ScoreReport {
    let est: Vec<f64> = est.iter().copied().filter(|&t| t >= skip_s).collect();
    let reference: Vec<f64> = reference.iter().copied().filter(|&t| t >= skip_s).collect();
    let counts = match_beats(&est, &reference, tol_s);

    let (precision, recall, f_measure) = if est.is_empty() && reference.is_empty() {
        (1.0, 1.0, 1.0)
    } else {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let p = ratio(counts.matched, est.len());
        let r = ratio(counts.matched, reference.len());
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        (p, r, f)
    };
    ScoreReport {
        f_measure,
        precision,
        recall,
        matched: counts.matched,
        false_positives: counts.false_positives,
        false_negatives: counts.false_negatives,
        skip_s,
    }
}

/// Scoring settings shared by dataset evaluation and sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub tolerance_s: f64,
    pub skip_s: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { tolerance_s: DEFAULT_TOLERANCE_S, skip_s: DEFAULT_SKIP_S }
    }
}

/// One evaluation item already loaded into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub name: String,
    pub activations: Vec<f64>,
    pub reference: Vec<f64>,
    /// Frame rate declared by the activation source, overriding the
    /// tracker configuration for this item.
    pub frame_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemReport {
    pub name: String,
    pub seed: u64,
    pub frames: usize,
    pub estimated_beats: usize,
    pub no_skip: ScoreReport,
    pub with_skip: ScoreReport,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanScores {
    pub f_measure: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetReport {
    pub items: Vec<ItemReport>,
    /// `(item name, reason)` for items that could not be evaluated.
    pub skipped: Vec<(String, String)>,
    pub settings: Option<EvalSettings>,
}

impl DatasetReport {
    fn mean(&self, pick: impl Fn(&ItemReport) -> &ScoreReport) -> Option<MeanScores> {
        if self.items.is_empty() {
            return None;
        }
        let n = self.items.len() as f64;
        let sum = |f: &dyn Fn(&ScoreReport) -> f64| self.items.iter().map(|i| f(pick(i))).sum::<f64>() / n;
        Some(MeanScores {
            f_measure: sum(&|s| s.f_measure),
            precision: sum(&|s| s.precision),
            recall: sum(&|s| s.recall),
        })
    }

    pub fn mean_no_skip(&self) -> Option<MeanScores> {
        self.mean(|i| &i.no_skip)
    }

    pub fn mean_with_skip(&self) -> Option<MeanScores> {
        self.mean(|i| &i.with_skip)
    }

    pub fn total_runtime_s(&self) -> f64 {
        self.items.iter().map(|i| i.runtime_s).sum()
    }

    /// Per-item rows followed by a `MEAN` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "item,seed,frames,estimated_beats,f_noskip,p_noskip,r_noskip,f_skip,p_skip,r_skip,skip_s,runtime_s\n",
        );
        for i in &self.items {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
                i.name,
                i.seed,
                i.frames,
                i.estimated_beats,
                i.no_skip.f_measure,
                i.no_skip.precision,
                i.no_skip.recall,
                i.with_skip.f_measure,
                i.with_skip.precision,
                i.with_skip.recall,
                i.with_skip.skip_s,
                i.runtime_s
            );
        }
        if let (Some(a), Some(b)) = (self.mean_no_skip(), self.mean_with_skip()) {
            let _ = writeln!(
                s,
                "MEAN,,,,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},,{:.6}",
                a.f_measure,
                a.precision,
                a.recall,
                b.f_measure,
                b.precision,
                b.recall,
                self.total_runtime_s() / self.items.len() as f64
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let skip = self.settings.map_or(DEFAULT_SKIP_S, |s| s.skip_s);
        let mut s = format!(
            "{:<24} {:>8} {:>8} {:>8} {:>8} {:>10}\n",
            "item", "F", "F(skip)", "P", "R", "time[ms]"
        );
        for i in &self.items {
            let _ = writeln!(
                s,
                "{:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10.1}",
                i.name,
                i.no_skip.f_measure,
                i.with_skip.f_measure,
                i.no_skip.precision,
                i.no_skip.recall,
                i.runtime_s * 1e3
            );
        }
        if let (Some(a), Some(b)) = (self.mean_no_skip(), self.mean_with_skip()) {
            let _ = writeln!(
                s,
                "{:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                "mean", a.f_measure, b.f_measure, a.precision, a.recall
            );
        }
        let _ = writeln!(s, "F(skip) discards the first {skip} s; items empty after the skip score 1.");
        for (name, reason) in &self.skipped {
            let _ = writeln!(s, "skipped {name}: {reason}");
        }
        s
    }
}

/// Activation/annotation file pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub name: String,
    pub activations: PathBuf,
    pub annotations: PathBuf,
}

/// Pairs `<stem>.txt` or `<stem>.bact` with `<stem>.beats` in `dir`, sorted by
/// stem. `.bact` wins when both activation files exist.
pub fn discover_dataset(dir: &Path) -> Result<Vec<DatasetEntry>> {
    let mut entries = Vec::new();
    let mut stems: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "beats"))
        .collect();
    stems.sort();
    for beats in stems {
        let bact = beats.with_extension("bact");
        let txt = beats.with_extension("txt");
        let activations = if bact.is_file() {
            bact
        } else if txt.is_file() {
            txt
        } else {
            continue;
        };
        let name = beats.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        entries.push(DatasetEntry { name, activations, annotations: beats });
    }
    Ok(entries)
}

fn load_entry(entry: &DatasetEntry) -> Result<EvalItem> {
    let stream = read_activation_stream(BufReader::new(File::open(&entry.activations)?))?;
    if stream.clamped > 0 {
        log::warn!("{}: {} activations clamped into [0, 1]", entry.name, stream.clamped);
    }
    let reference = BeatAnnotations::read(&entry.annotations)?.times_s;
    Ok(EvalItem {
        name: entry.name.clone(),
        activations: stream.values,
        reference,
        frame_rate: stream.frame_rate.map(f64::from),
    })
}

/// Loads every entry in parallel. Returns the readable items in order and
/// the name and reason of each entry that could not be read.
pub fn load_dataset(entries: &[DatasetEntry]) -> (Vec<EvalItem>, Vec<(String, String)>) {
    let loaded: Vec<Result<EvalItem>> = entries.par_iter().map(load_entry).collect();
    let mut items = Vec::with_capacity(entries.len());
    let mut skipped = Vec::new();
    for (entry, r) in entries.iter().zip(loaded) {
        match r {
            Ok(item) => items.push(item),
            Err(e) => skipped.push((entry.name.clone(), e.to_string())),
        }
    }
    (items, skipped)
}

fn evaluate_item(item: &EvalItem, cfg: &TrackerConfig, seed: u64, settings: EvalSettings) -> Result<ItemReport> {
    let mut cfg = TrackerConfig { seed, ..cfg.clone() };
    if let Some(rate) = item.frame_rate {
        cfg.state_space.frame_period_s = 1.0 / rate;
    }
    let start = Instant::now();
    let events = Tracker::new(cfg)?.run(&item.activations)?;
    let runtime_s = start.elapsed().as_secs_f64();
    let est: Vec<f64> = events.iter().map(|e| e.time_s).collect();
    Ok(ItemReport {
        name: item.name.clone(),
        seed,
        frames: item.activations.len(),
        estimated_beats: est.len(),
        no_skip: score(&est, &item.reference, settings.tolerance_s, 0.0),
        with_skip: score(&est, &item.reference, settings.tolerance_s, settings.skip_s),
        runtime_s,
    })
}

/// Tracks and scores every item in parallel. Item `i` runs with seed
/// `cfg.seed + i`, so results do not depend on scheduling.
pub fn evaluate_items(items: &[EvalItem], cfg: &TrackerConfig, settings: EvalSettings) -> Result<DatasetReport> {
    cfg.validate()?;
    let results: Vec<Result<ItemReport>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| evaluate_item(item, cfg, cfg.seed.wrapping_add(i as u64), settings))
        .collect();
    let mut report = DatasetReport { settings: Some(settings), ..Default::default() };
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(ir) => report.items.push(ir),
            Err(e) => report.skipped.push((item.name.clone(), e.to_string())),
        }
    }
    Ok(report)
}

/// Loads and evaluates file pairs. Unreadable items are listed as skipped;
/// seeds follow the position in `entries` whether or not an item loads.
pub fn evaluate_dataset(entries: &[DatasetEntry], cfg: &TrackerConfig, settings: EvalSettings) -> Result<DatasetReport> {
    cfg.validate()?;
    let loaded: Vec<(usize, Result<EvalItem>)> =
        entries.par_iter().map(load_entry).enumerate().collect();
    let mut report = DatasetReport { settings: Some(settings), ..Default::default() };
    let mut ok = Vec::new();
    for (i, r) in loaded {
        match r {
            Ok(item) => ok.push((i, item)),
            Err(e) => report.skipped.push((entries[i].name.clone(), e.to_string())),
        }
    }
    let results: Vec<Result<ItemReport>> = ok
        .par_iter()
        .map(|(i, item)| evaluate_item(item, cfg, cfg.seed.wrapping_add(*i as u64), settings))
        .collect();
    for ((_, item), r) in ok.iter().zip(results) {
        match r {
            Ok(ir) => report.items.push(ir),
            Err(e) => report.skipped.push((item.name.clone(), e.to_string())),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n_particles: usize,
    pub mean_f_no_skip: f64,
    pub mean_f_with_skip: f64,
    pub items: usize,
    pub mean_runtime_s: f64,
}

/// Mean F-measure of the dataset at each particle count.
pub fn particle_sweep(
    items: &[EvalItem],
    n_values: &[usize],
    cfg: &TrackerConfig,
    settings: EvalSettings,
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::InvalidArgument("particle sweep needs at least one N".into()));
    }
    n_values
        .iter()
        .map(|&n| {
            let cfg = TrackerConfig { n_particles: n, ..cfg.clone() };
            let report = evaluate_items(items, &cfg, settings)?;
            let count = report.items.len();
            Ok(SweepRow {
                n_particles: n,
                mean_f_no_skip: report.mean_no_skip().map_or(0.0, |m| m.f_measure),
                mean_f_with_skip: report.mean_with_skip().map_or(0.0, |m| m.f_measure),
                items: count,
                mean_runtime_s: if count > 0 { report.total_runtime_s() / count as f64 } else { 0.0 },
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "n_particles,items,mean_f_noskip,mean_f_skip,mean_runtime_s")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            r.n_particles, r.items, r.mean_f_no_skip, r.mean_f_with_skip, r.mean_runtime_s
        )?;
    }
    out.flush()
}
