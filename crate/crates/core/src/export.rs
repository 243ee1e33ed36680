//! Artifact files: CSV tables, node-link JSON networks and the run manifest.
//!
//! Floats in CSV use fixed 9-decimal formatting and LF line endings so that a
//! run's artifacts can be compared by hash.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::engine::RunArtifacts;
use crate::error::{Result, SimError};
use crate::metrics::{MetricsLog, MetricsRow};
use crate::model::EmotionVector;
use crate::network::Graph;

pub const TIMESERIES_HEADER: &str = "iteration,avg_opinion,avg_trust,avg_joy,avg_trust_e,avg_fear,\
avg_surprise,avg_sadness,avg_disgust,avg_anger,avg_anticipation";

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const EMOTION_HEATMAP_FILE: &str = "emotion_heatmap.csv";
pub const FRIENDSHIP_FILE: &str = "friendship.json";
pub const INFLUENCE_FILE: &str = "influence.json";
pub const MANIFEST_FILE: &str = "run_manifest.json";

pub fn trust_snapshot_file(iteration: u64) -> String {
    format!("trust_snapshot_{iteration}.csv")
}

pub fn allocation_file(iteration: u64) -> String {
    format!("allocation_{iteration}.csv")
}

/// Fixed 9-decimal rendering; negative zero prints as zero.
pub fn fmt9(v: f64) -> String {
    format!("{:.9}", v + 0.0)
}

fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9 + 0.0
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| SimError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(SimError::MissingArtifact(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| SimError::io(path, e))
}

fn malformed(path: &Path, message: impl Into<String>) -> SimError {
    SimError::Artifact {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn timeseries_csv(log: &MetricsLog) -> String {
    let mut out = String::with_capacity(128 * (log.rows.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for row in &log.rows {
        write!(out, "{}", row.iteration).unwrap();
        for v in row.values() {
            out.push(',');
            out.push_str(&fmt9(v));
        }
        out.push('\n');
    }
    out
}

pub fn write_timeseries(log: &MetricsLog, path: &Path) -> Result<()> {
    write_file(path, timeseries_csv(log).as_bytes())
}

pub fn read_timeseries(path: &Path) -> Result<MetricsLog> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(path, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != TIMESERIES_HEADER {
        return Err(malformed(path, "unexpected header"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        let iteration: u64 = record[0]
            .parse()
            .map_err(|_| malformed(path, format!("bad iteration {:?}", &record[0])))?;
        let mut v = [0.0; 10];
        for (slot, field) in v.iter_mut().zip(record.iter().skip(1)) {
            *slot = field
                .parse()
                .map_err(|_| malformed(path, format!("bad number {field:?}")))?;
        }
        let mut e = [0.0; 8];
        e.copy_from_slice(&v[2..]);
        rows.push(MetricsRow {
            iteration,
            avg_opinion: v[0],
            avg_trust: v[1],
            emotions: EmotionVector::from_array(e),
        });
    }
    Ok(MetricsLog { rows })
}

/// Row-major numeric CSV. Panics on a ragged grid.
pub fn matrix_csv(grid: &[Vec<f64>]) -> String {
    let width = grid.first().map_or(0, Vec::len);
    let mut out = String::new();
    for row in grid {
        assert_eq!(row.len(), width, "ragged grid");
        let line: Vec<String> = row.iter().map(|&v| fmt9(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_snapshot(grid: &[Vec<f64>], path: &Path) -> Result<()> {
    write_file(path, matrix_csv(grid).as_bytes())
}

pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut grid = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| malformed(path, format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        grid.push(row);
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub reputation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Node-link network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
}

impl NetworkDocument {
    /// Unweighted edges export with weight 1.0.
    pub fn new(graph: &Graph, reputations: &[f64]) -> Self {
        let nodes = (0..graph.n())
            .map(|id| NodeRecord {
                id,
                reputation: round9(reputations.get(id).copied().unwrap_or(0.0)),
            })
            .collect();
        let links = graph
            .edges()
            .map(|(source, target, w)| LinkRecord {
                source,
                target,
                weight: round9(w.unwrap_or(1.0)),
            })
            .collect();
        Self { nodes, links }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network serializes");
        s.push('\n');
        s
    }
}

pub fn write_network(graph: &Graph, reputations: &[f64], path: &Path) -> Result<()> {
    write_file(
        path,
        NetworkDocument::new(graph, reputations)
            .to_json()
            .as_bytes(),
    )
}

pub fn read_network(path: &Path) -> Result<NetworkDocument> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|source| SimError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub sha256: String,
    pub layout: String,
}

/// Written last; describes and fingerprints every other artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = read_file(&path)?;
        serde_json::from_str(&text).map_err(|source| SimError::Json { path, source })
    }

    /// Iteration whose trust snapshot stands for the run: the earliest one.
    pub fn trust_snapshot_iteration(&self) -> Option<u64> {
        self.config.snapshot_iterations.iter().copied().min()
    }

    /// Iteration whose allocation map stands for the run: the latest one.
    pub fn allocation_snapshot_iteration(&self) -> Option<u64> {
        self.config.snapshot_iterations.iter().copied().max()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WriteOptions {
    /// Records wall-clock time in the manifest. Breaks byte-identity between runs.
    pub timestamps: bool,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artifact of `run` under `dir` and returns the written paths.
pub fn write_run(run: &RunArtifacts, dir: &Path, opts: WriteOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let n = run.config.n_agents;

    let mut files: Vec<(String, String, String)> = vec![
        (
            TIMESERIES_FILE.into(),
            timeseries_csv(&run.log),
            "one row per iteration from 0; population means".into(),
        ),
        (
            EMOTION_HEATMAP_FILE.into(),
            matrix_csv(&run.emotion_table()),
            "row = emotion (joy, trust_e, fear, surprise, sadness, disgust, anger, anticipation), \
             column = iteration from 0; mean intensity"
                .into(),
        ),
    ];
    for snap in &run.snapshots {
        files.push((
            trust_snapshot_file(snap.iteration),
            matrix_csv(&snap.trust),
            format!("row = trustor agent id, column = trustee agent id ({n} x {n}); diagonal pinned at 1"),
        ));
        files.push((
            allocation_file(snap.iteration),
            matrix_csv(&snap.allocation.values),
            format!(
                "row = area, column = agent id ({} x {n}); resource units",
                run.config.n_areas
            ),
        ));
    }
    let reputations: Vec<f64> = run
        .final_state
        .agents
        .iter()
        .map(|a| a.reputation)
        .collect();
    files.push((
        FRIENDSHIP_FILE.into(),
        NetworkDocument::new(&run.friendship, &reputations).to_json(),
        "node-link friendship graph; unweighted edges carry weight 1".into(),
    ));
    files.push((
        INFLUENCE_FILE.into(),
        NetworkDocument::new(&run.influence.graph, &run.influence.reputations).to_json(),
        "node-link influence graph at the final iteration; weight = mean mutual trust, \
         edges below 0.05 omitted"
            .into(),
    ));

    let mut written = Vec::with_capacity(files.len() + 1);
    let mut artifacts = BTreeMap::new();
    for (name, body, layout) in files {
        let path = dir.join(&name);
        write_file(&path, body.as_bytes())?;
        artifacts.insert(
            name,
            ArtifactEntry {
                sha256: sha256_hex(body.as_bytes()),
                layout,
            },
        );
        written.push(path);
    }

    let timestamp_unix = opts.timestamps.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let manifest = RunManifest {
        seed: run.config.seed,
        config: run.config.clone(),
        artifacts,
        timestamp_unix,
    };
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    let path = dir.join(MANIFEST_FILE);
    write_file(&path, body.as_bytes())?;
    written.push(path);
    Ok(written)
}
