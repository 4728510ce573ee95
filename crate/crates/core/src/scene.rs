//! Scene files: a list of rectangles with optional ground-truth labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeomParams, GeometryError, Rect};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("duplicate rect id `{0}`")]
    DuplicateId(String),
    #[error("invalid rect id `{0}` (allowed: letters, digits, `_`, `-`, `.`, `:`)")]
    InvalidId(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid scene params: {0}")]
    Params(String),
    #[error("scene json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Product,
    Shelf,
    Other,
}

impl Label {
    /// Row order of the results table.
    pub const ALL: [Label; 3] = [Label::Product, Label::Shelf, Label::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Product => "product",
            Label::Shelf => "shelf",
            Label::Other => "other",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRect {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl SceneRect {
    pub fn from_rect(r: &Rect, label: Option<Label>) -> Self {
        SceneRect {
            id: r.id.clone(),
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            label,
        }
    }

    pub fn rect(&self) -> Result<Rect, GeometryError> {
        Rect::new(self.id.clone(), self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub rects: Vec<SceneRect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GeomParams>,
}

pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'))
}

/// Reject duplicate or malformed ids.
pub fn check_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<(), SceneError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !valid_id(id) {
            return Err(SceneError::InvalidId(id.to_string()));
        }
        if !seen.insert(id) {
            return Err(SceneError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

impl Scene {
    pub fn from_labeled(rects: &[(Rect, Label)]) -> Self {
        Scene {
            rects: rects
                .iter()
                .map(|(r, l)| SceneRect::from_rect(r, Some(*l)))
                .collect(),
            params: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        check_ids(self.rects.iter().map(|r| r.id.as_str()))?;
        for r in &self.rects {
            r.rect()?;
        }
        if let Some(p) = &self.params {
            p.validate().map_err(SceneError::Params)?;
        }
        Ok(())
    }

    pub fn rects(&self) -> Result<Vec<Rect>, SceneError> {
        Ok(self
            .rects
            .iter()
            .map(SceneRect::rect)
            .collect::<Result<_, _>>()?)
    }

    pub fn geom_params(&self) -> GeomParams {
        self.params.unwrap_or_default()
    }

    /// Ground-truth labels of the labeled rects.
    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.rects
            .iter()
            .filter_map(|r| r.label.map(|l| (r.id.clone(), l)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_partial_params() {
        let text = r#"{"rects":[{"id":"r1","x":0,"y":0,"w":4,"h":2,"label":"shelf"},
                                 {"id":"r2","x":1,"y":1,"w":1,"h":1}],
                       "params":{"neighbor_gap":10}}"#;
        let s = Scene::from_json(text).unwrap();
        assert_eq!(s.geom_params().neighbor_gap, 10.0);
        assert_eq!(s.geom_params().eps_align, 4.0);
        assert_eq!(s.labels().len(), 1);
        assert_eq!(Scene::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn rejects_duplicates_and_unknown_keys() {
        let dup = r#"{"rects":[{"id":"a","x":0,"y":0,"w":1,"h":1},{"id":"a","x":0,"y":0,"w":1,"h":1}]}"#;
        assert!(matches!(Scene::from_json(dup), Err(SceneError::DuplicateId(_))));
        let bad_id = r#"{"rects":[{"id":"a b","x":0,"y":0,"w":1,"h":1}]}"#;
        assert!(matches!(Scene::from_json(bad_id), Err(SceneError::InvalidId(_))));
        let extra = r#"{"rects":[],"colour":1}"#;
        assert!(Scene::from_json(extra).is_err());
    }
}
