use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::PredictError;
use crate::geom::Vector2;

/// Id used for vehicle rows in trajectory files.
pub const VEHICLE_ROW_ID: &str = "vehicle";

const TRAJECTORY_HEADER: [&str; 4] = ["ped_id", "frame", "x", "y"];
const GOAL_HEADER: [&str; 3] = ["ped_id", "goal_x", "goal_y"];

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: String,
    /// Strictly increasing frame indices.
    pub frames: Vec<i64>,
    pub positions: Vec<Vector2>,
}

impl Track {
    pub fn new(id: impl Into<String>) -> Self {
        Track {
            id: id.into(),
            frames: Vec::new(),
            positions: Vec::new(),
        }
    }

    /// Position at `frame`, if recorded.
    pub fn at(&self, frame: i64) -> Option<Vector2> {
        self.frames
            .binary_search(&frame)
            .ok()
            .map(|i| self.positions[i])
    }

    pub fn index_of(&self, frame: i64) -> Option<usize> {
        self.frames.binary_search(&frame).ok()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDataset {
    /// Seconds between consecutive frames.
    pub frame_interval: f64,
    /// Pedestrian tracks in order of first appearance in the file.
    pub pedestrians: Vec<Track>,
    pub vehicle: Option<Track>,
    pub goals: BTreeMap<String, Vector2>,
}

impl TrajectoryDataset {
    pub fn new(frame_interval: f64) -> Self {
        TrajectoryDataset {
            frame_interval,
            pedestrians: Vec::new(),
            vehicle: None,
            goals: BTreeMap::new(),
        }
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> PredictError {
    PredictError::Parse {
        line,
        message: message.into(),
    }
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<(), PredictError> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

fn parse_f64(field: &str, line: u64, name: &str) -> Result<f64, PredictError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{name} `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{name} must be finite")));
    }
    Ok(v)
}

/// Reads `ped_id,frame,x,y` rows. Rows of one track may interleave with
/// other tracks but their frames must increase.
pub fn load_trajectories<R: Read>(
    input: R,
    frame_interval: f64,
) -> Result<TrajectoryDataset, PredictError> {
    if !(frame_interval > 0.0 && frame_interval.is_finite()) {
        return Err(PredictError::Invalid(format!(
            "frame interval must be positive, got {frame_interval}"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut dataset = TrajectoryDataset::new(frame_interval);
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut records = reader.records();
    match records.next() {
        None => return Ok(dataset),
        Some(header) => {
            let header = header.map_err(|e| parse_err(1, e.to_string()))?;
            check_header(&header, &TRAJECTORY_HEADER)?;
        }
    }
    for record in records {
        let record =
            record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(parse_err(
                line,
                format!("expected 4 fields, found {}", record.len()),
            ));
        }
        let id = record[0].trim().to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty ped_id"));
        }
        let frame: i64 = record[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("frame `{}` is not an integer", &record[1])))?;
        let position = Vector2::new(
            parse_f64(&record[2], line, "x")?,
            parse_f64(&record[3], line, "y")?,
        );
        let track = if id == VEHICLE_ROW_ID {
            dataset
                .vehicle
                .get_or_insert_with(|| Track::new(VEHICLE_ROW_ID))
        } else {
            let i = *index.entry(id.clone()).or_insert_with(|| {
                dataset.pedestrians.push(Track::new(id.clone()));
                dataset.pedestrians.len() - 1
            });
            &mut dataset.pedestrians[i]
        };
        if let Some(&last) = track.frames.last() {
            if frame <= last {
                return Err(parse_err(
                    line,
                    format!("frame {frame} for `{id}` does not follow frame {last}"),
                ));
            }
        }
        track.frames.push(frame);
        track.positions.push(position);
    }
    Ok(dataset)
}

/// Reads `ped_id,goal_x,goal_y` rows.
pub fn load_goals<R: Read>(input: R) -> Result<BTreeMap<String, Vector2>, PredictError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut goals = BTreeMap::new();
    let mut records = reader.records();
    match records.next() {
        None => return Ok(goals),
        Some(header) => {
            let header = header.map_err(|e| parse_err(1, e.to_string()))?;
            check_header(&header, &GOAL_HEADER)?;
        }
    }
    for record in records {
        let record =
            record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let id = record[0].trim().to_string();
        let goal = Vector2::new(
            parse_f64(&record[1], line, "goal_x")?,
            parse_f64(&record[2], line, "goal_y")?,
        );
        if goals.insert(id.clone(), goal).is_some() {
            return Err(parse_err(line, format!("duplicate goal for `{id}`")));
        }
    }
    Ok(goals)
}

/// Writes tracks frame by frame, vehicle rows first within a frame.
pub fn write_trajectories<W: Write>(
    out: W,
    dataset: &TrajectoryDataset,
) -> Result<(), PredictError> {
    let mut rows: Vec<(i64, usize, &str, Vector2)> = Vec::new();
    if let Some(v) = &dataset.vehicle {
        rows.extend(
            v.frames
                .iter()
                .zip(&v.positions)
                .map(|(f, p)| (*f, 0, v.id.as_str(), *p)),
        );
    }
    for (i, t) in dataset.pedestrians.iter().enumerate() {
        rows.extend(
            t.frames
                .iter()
                .zip(&t.positions)
                .map(|(f, p)| (*f, i + 1, t.id.as_str(), *p)),
        );
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut writer = csv::Writer::from_writer(out);
    let io = |e: csv::Error| PredictError::Write(e.to_string());
    writer.write_record(TRAJECTORY_HEADER).map_err(io)?;
    for (frame, _, id, p) in rows {
        writer
            .write_record([
                id.to_string(),
                frame.to_string(),
                p.x.to_string(),
                p.y.to_string(),
            ])
            .map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| PredictError::Write(e.to_string()))
}

pub fn write_goals<W: Write>(
    out: W,
    goals: &BTreeMap<String, Vector2>,
) -> Result<(), PredictError> {
    let mut writer = csv::Writer::from_writer(out);
    let io = |e: csv::Error| PredictError::Write(e.to_string());
    writer.write_record(GOAL_HEADER).map_err(io)?;
    for (id, g) in goals {
        writer
            .write_record([id.clone(), g.x.to_string(), g.y.to_string()])
            .map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| PredictError::Write(e.to_string()))
}
