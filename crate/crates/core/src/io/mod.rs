//! Trajectory files and report writers.
//!
//! A trajectory is stored as three files sharing a stem:
//!
//! * `<stem>.jsonl`: one snapshot per line,
//!   `{"t": .., "curves": [[[x, y], ..], ..], "end_tags": [[a, b], ..], "junctions": {"id": [x, y]}}`
//! * `<stem>.events.jsonl`: one `{"t": .., "kind": .., "data": ..}` record per line
//! * `<stem>.meta.json`: `{"forcing": ..}`
//!
//! Only the snapshot file is required when reading. Floats are written in
//! shortest round-trip form, so a write/read cycle is bit-exact.

mod report;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowsim::{EventRecord, FlowTrajectory, ForcingField, Snapshot};
use crate::netgeom::{Curve, EndTag, JunctionId, Network, Point2};

pub use report::{
    write_classification_csv, DiagnosticsReport, ReportRow, ReportValue, CLASSIFICATION_HEADER,
    REPORT_HEADER,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotLine {
    t: f64,
    curves: Vec<Vec<Point2>>,
    end_tags: Vec<[EndTag; 2]>,
    junctions: BTreeMap<JunctionId, Point2>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    forcing: ForcingField,
}

/// One snapshot as a single JSON line (no trailing newline).
pub fn snapshot_to_json(snap: &Snapshot) -> String {
    let line = SnapshotLine {
        t: snap.t,
        curves: snap.net.curves.iter().map(|c| c.nodes.clone()).collect(),
        end_tags: snap.net.curves.iter().map(|c| c.ends).collect(),
        junctions: snap.net.junctions.clone(),
    };
    serde_json::to_string(&line).expect("snapshot serializes")
}

pub fn snapshot_from_json(text: &str) -> std::result::Result<Snapshot, String> {
    let line: SnapshotLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if line.curves.len() != line.end_tags.len() {
        return Err(format!(
            "{} curves but {} end tag pairs",
            line.curves.len(),
            line.end_tags.len()
        ));
    }
    let mut curves = Vec::with_capacity(line.curves.len());
    for (i, (nodes, ends)) in line.curves.into_iter().zip(line.end_tags).enumerate() {
        if nodes.len() < 2 {
            return Err(format!(
                "curve {i} has {} node(s), need at least 2",
                nodes.len()
            ));
        }
        if let Some(p) = nodes.iter().find(|p| !p.is_finite()) {
            return Err(format!("curve {i} has a non-finite node {p:?}"));
        }
        for id in ends.iter().filter_map(|e| e.junction()) {
            if !line.junctions.contains_key(&id) {
                return Err(format!("curve {i} refers to missing junction {id}"));
            }
        }
        curves.push(Curve::new(nodes, ends));
    }
    if !line.t.is_finite() {
        return Err("non-finite time".into());
    }
    Ok(Snapshot {
        t: line.t,
        net: Network::new(curves, line.junctions),
    })
}

fn parse_lines<T>(
    reader: impl BufRead,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?);
    }
    Ok(out)
}

pub fn write_snapshots<W: Write>(mut w: W, snaps: &[Snapshot]) -> Result<()> {
    for s in snaps {
        writeln!(w, "{}", snapshot_to_json(s))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads snapshot lines; blank lines are skipped and errors carry the
/// 1-based line number.
pub fn read_snapshots<R: BufRead>(r: R) -> Result<Vec<Snapshot>> {
    parse_lines(r, snapshot_from_json)
}

pub fn write_events<W: Write>(mut w: W, events: &[EventRecord]) -> Result<()> {
    for e in events {
        writeln!(w, "{}", serde_json::to_string(e).expect("event serializes"))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<EventRecord>> {
    parse_lines(r, |s| serde_json::from_str(s).map_err(|e| e.to_string()))
}

/// Paths of the files making up one stored trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryFiles {
    pub snapshots: PathBuf,
    pub events: PathBuf,
    pub meta: PathBuf,
}

impl TrajectoryFiles {
    pub fn new(dir: &Path, stem: &str) -> Self {
        TrajectoryFiles {
            snapshots: dir.join(format!("{stem}.jsonl")),
            events: dir.join(format!("{stem}.events.jsonl")),
            meta: dir.join(format!("{stem}.meta.json")),
        }
    }

    /// The sidecar files next to a snapshot file `<stem>.jsonl`.
    pub fn beside(snapshots: &Path) -> Self {
        let dir = snapshots.parent().unwrap_or(Path::new(""));
        let name = snapshots
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let stem = name.strip_suffix(".jsonl").unwrap_or(&name);
        TrajectoryFiles {
            snapshots: snapshots.to_path_buf(),
            ..TrajectoryFiles::new(dir, stem)
        }
    }
}

fn at_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    at_path(
        path,
        File::create(path).map(BufWriter::new).map_err(Error::from),
    )
}

fn open(path: &Path) -> Result<BufReader<File>> {
    at_path(
        path,
        File::open(path).map(BufReader::new).map_err(Error::from),
    )
}

pub fn save_trajectory(traj: &FlowTrajectory, files: &TrajectoryFiles) -> Result<()> {
    at_path(
        &files.snapshots,
        write_snapshots(create(&files.snapshots)?, traj.snapshots()),
    )?;
    at_path(
        &files.events,
        write_events(create(&files.events)?, &traj.events),
    )?;
    let meta = Meta {
        forcing: traj.forcing.clone(),
    };
    let mut w = create(&files.meta)?;
    at_path(
        &files.meta,
        serde_json::to_writer_pretty(&mut w, &meta)
            .map_err(|e| Error::Io(e.into()))
            .and_then(|_| writeln!(w).and_then(|_| w.flush()).map_err(Error::from)),
    )
}

/// Loads `<stem>.jsonl` with whichever sidecars exist; a missing meta file
/// means zero forcing.
pub fn load_trajectory(snapshots: &Path) -> Result<FlowTrajectory> {
    let files = TrajectoryFiles::beside(snapshots);
    let snaps = at_path(&files.snapshots, read_snapshots(open(&files.snapshots)?))?;
    let events = if files.events.exists() {
        at_path(&files.events, read_events(open(&files.events)?))?
    } else {
        Vec::new()
    };
    let forcing = if files.meta.exists() {
        let meta: Meta = at_path(
            &files.meta,
            serde_json::from_reader(open(&files.meta)?).map_err(|e| Error::Parse {
                line: e.line(),
                message: e.to_string(),
            }),
        )?;
        meta.forcing
    } else {
        ForcingField::zero()
    };
    at_path(
        &files.snapshots,
        FlowTrajectory::with_events(snaps, forcing, events),
    )
}
