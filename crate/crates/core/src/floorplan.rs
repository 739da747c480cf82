//! Wall geometry and landmarks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkKind {
    Corner,
    Door,
    CorridorEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub position: Point,
    pub kind: LandmarkKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    pub walls: Vec<Segment>,
    pub landmarks: Vec<Landmark>,
    pub bounds: Rect,
}

#[derive(Serialize, Deserialize)]
struct LandmarkDoc {
    x: f64,
    y: f64,
    kind: LandmarkKind,
}

#[derive(Serialize, Deserialize)]
struct FloorPlanDoc {
    walls: Vec<[f64; 4]>,
    #[serde(default)]
    landmarks: Vec<LandmarkDoc>,
    bounds: [f64; 4],
}

impl FloorPlan {
    pub fn new(walls: Vec<Segment>, landmarks: Vec<Landmark>, bounds: Rect) -> Result<Self> {
        let plan = FloorPlan { walls, landmarks, bounds };
        plan.validate()?;
        Ok(plan)
    }

    /// A plan with no walls or landmarks; tracking on it is pure dead reckoning.
    pub fn open(bounds: Rect) -> Self {
        FloorPlan { walls: Vec::new(), landmarks: Vec::new(), bounds }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if ![b.min.x, b.min.y, b.max.x, b.max.y].iter().all(|v| v.is_finite()) || b.width() < 0.0 || b.height() < 0.0 {
            return Err(Error::param("floorplan bounds must be finite with min ≤ max"));
        }
        for (i, w) in self.walls.iter().enumerate() {
            if ![w.a.x, w.a.y, w.b.x, w.b.y].iter().all(|v| v.is_finite()) {
                return Err(Error::param(format!("wall {i} has non-finite coordinates")));
            }
            if w.length() == 0.0 {
                return Err(Error::param(format!("wall {i} is degenerate")));
            }
        }
        for (i, l) in self.landmarks.iter().enumerate() {
            if !self.bounds.contains(&l.position) {
                return Err(Error::param(format!("landmark {i} lies outside the bounds")));
            }
        }
        Ok(())
    }

    /// True when the closed segment `a → b` touches any wall.
    pub fn crosses_wall(&self, a: &Point, b: &Point) -> bool {
        let s = Segment::new(*a, *b);
        self.walls.iter().any(|w| w.intersects(&s))
    }

    /// Nearest corner or door within `radius` of `p`.
    pub fn nearest_turn_landmark(&self, p: &Point, radius: f64) -> Option<&Landmark> {
        self.landmarks
            .iter()
            .filter(|l| matches!(l.kind, LandmarkKind::Corner | LandmarkKind::Door))
            .map(|l| ((l.position - p).norm(), l))
            .filter(|(d, _)| *d <= radius)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, l)| l)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FloorPlanDoc = serde_json::from_str(text)?;
        let walls = doc
            .walls
            .iter()
            .map(|w| Segment::new(Point::new(w[0], w[1]), Point::new(w[2], w[3])))
            .collect();
        let landmarks = doc
            .landmarks
            .iter()
            .map(|l| Landmark { position: Point::new(l.x, l.y), kind: l.kind })
            .collect();
        let [x0, y0, x1, y1] = doc.bounds;
        FloorPlan::new(walls, landmarks, Rect::new(x0, y0, x1, y1))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = FloorPlanDoc {
            walls: self.walls.iter().map(|w| [w.a.x, w.a.y, w.b.x, w.b.y]).collect(),
            landmarks: self
                .landmarks
                .iter()
                .map(|l| LandmarkDoc { x: l.position.x, y: l.position.y, kind: l.kind })
                .collect(),
            bounds: [self.bounds.min.x, self.bounds.min.y, self.bounds.max.x, self.bounds.max.y],
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        FloorPlan::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "walls": [[0,0,10,0],[0,2,8,2],[8,2,8,10],[10,0,10,10]],
        "landmarks": [{"x":9,"y":1,"kind":"corner"},{"x":9,"y":10,"kind":"corridor_end"}],
        "bounds": [0,0,10,10]
    }"#;

    #[test]
    fn parse_and_query() {
        let plan = FloorPlan::from_json(DOC).unwrap();
        assert_eq!(plan.walls.len(), 4);
        assert_eq!(plan.landmarks[1].kind, LandmarkKind::CorridorEnd);
        assert!(!plan.crosses_wall(&Point::new(1.0, 1.0), &Point::new(9.0, 1.0)));
        assert!(plan.crosses_wall(&Point::new(5.0, 1.0), &Point::new(5.0, 3.0)));
        let lm = plan.nearest_turn_landmark(&Point::new(8.6, 1.2), 2.0).unwrap();
        assert_eq!(lm.position, Point::new(9.0, 1.0));
        assert!(plan.nearest_turn_landmark(&Point::new(9.0, 9.5), 2.0).is_none());
        let again = FloorPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(again, plan);
    }

    #[test]
    fn invalid_plans() {
        let degenerate = r#"{"walls":[[1,1,1,1]],"bounds":[0,0,5,5]}"#;
        assert!(FloorPlan::from_json(degenerate).is_err());
        let outside = r#"{"walls":[],"landmarks":[{"x":7,"y":1,"kind":"door"}],"bounds":[0,0,5,5]}"#;
        assert!(FloorPlan::from_json(outside).is_err());
        assert!(FloorPlan::from_json("{\"walls\":[]}").is_err());
    }
}
