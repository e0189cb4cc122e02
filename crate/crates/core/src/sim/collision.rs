use serde::Serialize;

use crate::agent::OccupancyRecord;
use crate::graph::VertexId;

/// Two agents on the same vertex at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collision {
    pub agents: (usize, usize),
    pub vertex: VertexId,
    /// Start of the overlap.
    pub time: f64,
}

/// Flags every vertex occupied by two different agents over overlapping
/// `[enter, exit)` intervals. An agent crossing an edge occupies both
/// endpoints, so this is the conservative reading of "collision".
pub fn detect_collision(records: &[OccupancyRecord]) -> Vec<Collision> {
    let mut sorted: Vec<&OccupancyRecord> = records.iter().filter(|r| r.exit > r.enter).collect();
    sorted.sort_by(|a, b| a.vertex.cmp(&b.vertex).then(a.enter.total_cmp(&b.enter)));
    let mut out = Vec::new();
    for (idx, a) in sorted.iter().enumerate() {
        for b in &sorted[idx + 1..] {
            // later records on this vertex enter even later
            if b.vertex != a.vertex || b.enter >= a.exit {
                break;
            }
            if a.agent != b.agent {
                let pair = (a.agent.min(b.agent), a.agent.max(b.agent));
                out.push(Collision {
                    agents: pair,
                    vertex: a.vertex,
                    time: b.enter.max(a.enter),
                });
            }
        }
    }
    out.sort_by(|x, y| {
        x.time
            .total_cmp(&y.time)
            .then(x.vertex.cmp(&y.vertex))
            .then(x.agents.cmp(&y.agents))
    });
    out.dedup();
    out
}
