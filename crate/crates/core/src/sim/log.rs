//! Line-delimited JSON trajectory logs and a minimal SVG renderer.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::vehicle::Action;
use super::world::World;
use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedestrianRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// State after one step, with the action that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub time: f64,
    pub vehicle: VehicleRecord,
    pub action: Action,
    pub pedestrians: Vec<PedestrianRecord>,
}

impl LogRecord {
    pub fn capture(world: &World, action: Action) -> Self {
        LogRecord {
            step: world.step,
            time: world.time,
            vehicle: VehicleRecord {
                x: world.vehicle.position.x,
                y: world.vehicle.position.y,
                heading: world.vehicle.heading,
                speed: world.vehicle.speed,
            },
            action,
            pedestrians: world
                .pedestrians
                .iter()
                .map(|p| PedestrianRecord {
                    id: p.agent.id,
                    x: p.agent.position.x,
                    y: p.agent.position.y,
                    vx: p.agent.velocity.x,
                    vy: p.agent.velocity.y,
                })
                .collect(),
        }
    }
}

pub fn write_log<W: Write>(out: &mut W, records: &[LogRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<LogRecord>, SimError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| SimError::Log {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| SimError::Log {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Trajectories of the vehicle and every pedestrian with final positions
/// drawn as discs.
pub fn render_svg(records: &[LogRecord], vehicle_radius: f64, pedestrian_radius: f64) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        xs.push(r.vehicle.x);
        ys.push(r.vehicle.y);
        for p in &r.pedestrians {
            xs.push(p.x);
            ys.push(p.y);
        }
    }
    let pad = vehicle_radius + 1.0;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1, y0, y1) = if xs.is_empty() {
        (-1.0, 1.0, -1.0, 1.0)
    } else {
        (
            min(&xs) - pad,
            max(&xs) + pad,
            min(&ys) - pad,
            max(&ys) + pad,
        )
    };
    let scale = 40.0;
    let width = (x1 - x0) * scale;
    let height = (y1 - y0) * scale;
    let tx = |x: f64| (x - x0) * scale;
    let ty = |y: f64| (y1 - y) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );

    let mut ids: Vec<u32> = records
        .iter()
        .flat_map(|r| r.pedestrians.iter().map(|p| p.id))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    for id in ids {
        let pts: Vec<String> = records
            .iter()
            .filter_map(|r| r.pedestrians.iter().find(|p| p.id == id))
            .map(|p| format!("{:.1},{:.1}", tx(p.x), ty(p.y)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#3b7dd8" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }
    let vpts: Vec<String> = records
        .iter()
        .map(|r| format!("{:.1},{:.1}", tx(r.vehicle.x), ty(r.vehicle.y)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#d83b3b" stroke-width="2.5"/>"##,
        vpts.join(" ")
    );
    if let Some(last) = records.last() {
        for p in &last.pedestrians {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="#3b7dd8" fill-opacity="0.5"/>"##,
                tx(p.x),
                ty(p.y),
                pedestrian_radius * scale
            );
        }
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="#d83b3b" fill-opacity="0.4"/>"##,
            tx(last.vehicle.x),
            ty(last.vehicle.y),
            vehicle_radius * scale
        );
        let _ = writeln!(
            svg,
            r##"<text x="8" y="20" font-family="monospace" font-size="14">t = {:.2} s, step {}</text>"##,
            last.time, last.step
        );
    }
    svg.push_str("</svg>\n");
    svg
}
