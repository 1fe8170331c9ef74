//! File formats: pattern grids (plain and PBM), the memory store document,
//! trajectory and report CSV tables.
//!
//! Plain grid format:
//!
//! ```text
//! L 3
//! 101
//! 010
//! 101
//! ```
//!
//! Lines starting with `#` are ignored. PBM `P1` files are accepted as well
//! (square images only, `1` = on).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annealing::Weights;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::field::OrderParameter;
use crate::lattice::LatticeConfig;
use crate::memory::{MemoryRecord, MemoryStore, NetParams};
use crate::pattern::Pattern;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, config hash and seed; enough to reproduce an output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance { version: VERSION.to_string(), config_hash: config_hash.into(), seed }
    }

    /// `# qnet <version> config=<hash> seed=<seed>`
    pub fn comment(&self) -> String {
        format!("# qnet {} config={} seed={}", self.version, self.config_hash, self.seed)
    }
}

pub fn parse_pattern(text: &str) -> Result<Pattern> {
    let body = text.trim_start_matches('\u{feff}');
    if body.trim_start().starts_with("P1") {
        parse_pbm(body)
    } else {
        parse_grid(body)
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_grid(text: &str) -> Result<Pattern> {
    let mut lines = content_lines(text);
    let (_, header) = lines.next().ok_or_else(|| Error::BadHeader("empty input".into()))?;
    let size = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["L", n] => n.parse::<usize>().ok().filter(|&n| n > 0),
        _ => None,
    }
    .ok_or_else(|| Error::BadHeader(format!("expected `L <size>` or `P1`, got `{header}`")))?;

    let mut bits = Vec::with_capacity(size * size);
    let mut rows = 0;
    for (line_no, line) in lines {
        let row = line.trim_start();
        let offset = line.len() - row.len();
        let mut width = 0;
        for (i, ch) in row.chars().enumerate() {
            match ch {
                '0' | '1' => bits.push(u8::from(ch == '1')),
                _ => return Err(Error::BadCharacter { ch, line: line_no, column: offset + i + 1 }),
            }
            width += 1;
        }
        if width != size {
            return Err(Error::BadDimensions(format!("line {line_no} has {width} cells, expected {size}")));
        }
        rows += 1;
    }
    if rows != size {
        return Err(Error::BadDimensions(format!("{rows} rows, expected {size}")));
    }
    Pattern::new(size, bits)
}

fn parse_pbm(text: &str) -> Result<Pattern> {
    // Tokens with their positions; `#` starts a comment running to end of line.
    let mut header: Vec<(String, usize, usize)> = Vec::new();
    let mut pixels: Vec<(char, usize, usize)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut col = 0;
        for word in line.split_whitespace() {
            let start = line[col..].find(word).map_or(col, |p| col + p);
            col = start + word.len();
            if header.len() < 3 {
                header.push((word.to_string(), i + 1, start + 1));
            } else {
                pixels.extend(word.chars().enumerate().map(|(k, ch)| (ch, i + 1, start + k + 1)));
            }
        }
    }
    if header.len() < 3 || header[0].0 != "P1" {
        return Err(Error::BadHeader("PBM needs `P1 <width> <height>`".into()));
    }
    let dim = |k: usize| {
        header[k].0.parse::<usize>().map_err(|_| Error::BadHeader(format!("bad PBM dimension `{}`", header[k].0)))
    };
    let (width, height) = (dim(1)?, dim(2)?);
    if width != height || width == 0 {
        return Err(Error::BadDimensions(format!("{width}x{height} image; patterns are square")));
    }
    if let Some(&(ch, line, column)) = pixels.iter().find(|(c, _, _)| *c != '0' && *c != '1') {
        return Err(Error::BadCharacter { ch, line, column });
    }
    if pixels.len() != width * height {
        return Err(Error::BadDimensions(format!("{} pixels, expected {}", pixels.len(), width * height)));
    }
    Pattern::new(width, pixels.iter().map(|&(c, _, _)| u8::from(c == '1')).collect())
}

pub fn format_pattern(pattern: &Pattern) -> String {
    let mut out = format!("L {}\n", pattern.size());
    for row in pattern_rows(pattern) {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn pattern_rows(pattern: &Pattern) -> Vec<String> {
    pattern
        .bits()
        .chunks(pattern.size())
        .map(|row| row.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect())
        .collect()
}

fn rows_to_pattern(size: usize, rows: &[String]) -> Result<Pattern> {
    if rows.len() != size {
        return Err(Error::BadDimensions(format!("{} rows, expected {size}", rows.len())));
    }
    let mut text = format!("L {size}\n");
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    parse_grid(&text)
}

pub fn read_pattern(path: impl AsRef<Path>) -> Result<Pattern> {
    parse_pattern(&read(path.as_ref())?)
}

pub fn write_pattern(path: impl AsRef<Path>, pattern: &Pattern) -> Result<()> {
    write(path.as_ref(), &format_pattern(pattern))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    lattice: LatticeConfig,
    params: NetParams,
    /// `[i, j, w]` for every nearest-neighbor bond.
    weights: Vec<(usize, usize, f64)>,
    records: Vec<RecordDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    code: OrderParameter,
    snapshot: Vec<String>,
    mirror: Vec<String>,
    written_at: usize,
}

pub fn store_to_json(store: &MemoryStore, provenance: Option<&Provenance>) -> Result<String> {
    let w = store.weights();
    let doc = StoreDoc {
        provenance: provenance.cloned(),
        lattice: *store.lattice(),
        params: *store.params(),
        weights: w.bonds().pairs().iter().zip(w.values()).map(|(&(i, j), &v)| (i, j, v)).collect(),
        records: store
            .records()
            .iter()
            .map(|r| RecordDoc {
                code: r.code,
                snapshot: pattern_rows(&r.snapshot),
                mirror: pattern_rows(&r.mirror),
                written_at: r.written_at,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn store_from_json(text: &str) -> Result<MemoryStore> {
    let doc: StoreDoc = serde_json::from_str(text)?;
    let size = doc.lattice.size();
    let mut weights = Weights::zeros(&doc.lattice);
    for &(i, j, w) in &doc.weights {
        weights.set(i, j, w)?;
    }
    let records = doc
        .records
        .into_iter()
        .map(|r| {
            let snapshot = rows_to_pattern(size, &r.snapshot)?;
            let mirror = rows_to_pattern(size, &r.mirror)?;
            Ok(MemoryRecord { code: r.code, snapshot, mirror, written_at: r.written_at })
        })
        .collect::<Result<Vec<_>>>()?;
    MemoryStore::from_parts(doc.lattice, doc.params, weights, records)
}

/// Provenance embedded in a store document, if any.
pub fn store_provenance(text: &str) -> Result<Option<Provenance>> {
    let doc: StoreDoc = serde_json::from_str(text)?;
    Ok(doc.provenance)
}

pub fn save_store(path: impl AsRef<Path>, store: &MemoryStore, provenance: Option<&Provenance>) -> Result<()> {
    write(path.as_ref(), &store_to_json(store, provenance)?)
}

pub fn load_store(path: impl AsRef<Path>) -> Result<MemoryStore> {
    store_from_json(&read(path.as_ref())?)
}

pub const TRAJECTORY_COLUMNS: &str = "t,M,norm,mx,my,mz";

pub fn trajectory_csv(traj: &Trajectory, provenance: &Provenance) -> String {
    let mut out = format!("{}\n{TRAJECTORY_COLUMNS}\n", provenance.comment());
    for i in 0..traj.len() {
        let m = &traj.net_mags[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            traj.times[i], traj.m_values[i].value, traj.norms[i], m.mx, m.my, m.mz
        );
    }
    out
}

pub const REPORT_COLUMNS: &str = "kind,seed,grid_param,grid_value,memory_index,selected,overlap,M_code,success,wall_ms";

/// One report line: a single recall of one memory at one (seed, grid point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: String,
    pub seed: u64,
    pub grid_param: String,
    pub grid_value: f64,
    pub memory_index: usize,
    /// `None` when recall was refused (gate, ambiguity) or the write failed.
    pub selected: Option<usize>,
    /// Probe overlap with the target memory; `None` when no recall ran.
    pub overlap: Option<f64>,
    pub m_code: Option<f64>,
    pub success: bool,
    pub wall_ms: f64,
}

pub fn report_csv(rows: &[ReportRow], provenance: &Provenance) -> String {
    let mut out = format!("{}\n{REPORT_COLUMNS}\n", provenance.comment());
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3}",
            r.kind,
            r.seed,
            r.grid_param,
            r.grid_value,
            r.memory_index,
            r.selected.map_or(String::new(), |s| s.to_string()),
            r.overlap.map_or(String::new(), |q| q.to_string()),
            r.m_code.map_or(String::new(), |m| m.to_string()),
            u8::from(r.success),
            r.wall_ms,
        );
    }
    out
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path.as_ref(), &text)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
