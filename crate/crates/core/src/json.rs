//! Frame files: JSON with 0-based pair lists and optional closure flags.
//!
//! ```json
//! {"worlds": 4, "labels": ["a","b","c","d"],
//!  "R": [[0,1],[1,2]], "E": [[0,3]],
//!  "close_R": true, "close_E": true}
//! ```
//!
//! With `close_R` the reflexive-transitive closure is taken before
//! validation; `close_E` takes the equivalence closure. Two-equivalence
//! frames use `E1`/`E2` with `close_E1`/`close_E2`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FrameError, Ms4Frame, Relation, S52Frame};

#[derive(Debug, Error)]
pub enum FrameFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pair ({0}, {1}) out of range for {2} worlds")]
    PairOutOfRange(usize, usize, usize),
    #[error("labels must match world count")]
    LabelCount,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ms4FrameFile {
    pub worlds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(rename = "R")]
    pub r: Vec<(usize, usize)>,
    #[serde(rename = "E")]
    pub e: Vec<(usize, usize)>,
    #[serde(default, rename = "close_R")]
    pub close_r: bool,
    #[serde(default, rename = "close_E")]
    pub close_e: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct S52FrameFile {
    pub worlds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(rename = "E1")]
    pub e1: Vec<(usize, usize)>,
    #[serde(rename = "E2")]
    pub e2: Vec<(usize, usize)>,
    #[serde(default, rename = "close_E1")]
    pub close_e1: bool,
    #[serde(default, rename = "close_E2")]
    pub close_e2: bool,
}

fn relation_from_pairs(
    worlds: usize,
    pairs: &[(usize, usize)],
) -> Result<Relation, FrameFileError> {
    let mut rel = Relation::empty(worlds);
    for &(x, y) in pairs {
        if x >= worlds || y >= worlds {
            return Err(FrameFileError::PairOutOfRange(x, y, worlds));
        }
        rel.set(x, y);
    }
    Ok(rel)
}

impl Ms4FrameFile {
    pub fn into_frame(self) -> Result<Ms4Frame, FrameFileError> {
        let mut r = relation_from_pairs(self.worlds, &self.r)?;
        let mut e = relation_from_pairs(self.worlds, &self.e)?;
        if self.close_r {
            r = r.quasi_order_closure();
        }
        if self.close_e {
            e = e.equivalence_closure();
        }
        let frame = Ms4Frame::validate(r, e)?;
        match self.labels {
            None => Ok(frame),
            Some(labels) => {
                if labels.len() != frame.size() {
                    return Err(FrameFileError::LabelCount);
                }
                Ok(frame.with_labels(labels))
            }
        }
    }

    pub fn from_frame(frame: &Ms4Frame) -> Ms4FrameFile {
        Ms4FrameFile {
            worlds: frame.size(),
            labels: frame.labels().map(|ls| ls.to_vec()),
            r: frame.r().pairs(),
            e: frame.e().pairs(),
            close_r: false,
            close_e: false,
        }
    }
}

impl S52FrameFile {
    pub fn into_frame(self) -> Result<S52Frame, FrameFileError> {
        let mut e1 = relation_from_pairs(self.worlds, &self.e1)?;
        let mut e2 = relation_from_pairs(self.worlds, &self.e2)?;
        if self.close_e1 {
            e1 = e1.equivalence_closure();
        }
        if self.close_e2 {
            e2 = e2.equivalence_closure();
        }
        let frame = S52Frame::validate(e1, e2)?;
        match self.labels {
            None => Ok(frame),
            Some(labels) => {
                if labels.len() != frame.size() {
                    return Err(FrameFileError::LabelCount);
                }
                Ok(frame.with_labels(labels))
            }
        }
    }

    pub fn from_frame(frame: &S52Frame) -> S52FrameFile {
        S52FrameFile {
            worlds: frame.size(),
            labels: frame.labels().map(|ls| ls.to_vec()),
            e1: frame.e1().pairs(),
            e2: frame.e2().pairs(),
            close_e1: false,
            close_e2: false,
        }
    }
}

pub fn load_ms4_frame(path: &Path) -> Result<Ms4Frame, FrameFileError> {
    let text = std::fs::read_to_string(path)?;
    let file: Ms4FrameFile = serde_json::from_str(&text)?;
    file.into_frame()
}

pub fn save_ms4_frame(path: &Path, frame: &Ms4Frame) -> Result<(), FrameFileError> {
    let file = Ms4FrameFile::from_frame(frame);
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_s52_frame(path: &Path) -> Result<S52Frame, FrameFileError> {
    let text = std::fs::read_to_string(path)?;
    let file: S52FrameFile = serde_json::from_str(&text)?;
    file.into_frame()
}

pub fn save_s52_frame(path: &Path, frame: &S52Frame) -> Result<(), FrameFileError> {
    let file = S52FrameFile::from_frame(frame);
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{chain_frame, grid_frame};

    #[test]
    fn closure_flags_expand_generators() {
        let file: Ms4FrameFile = serde_json::from_str(
            r#"{"worlds": 3, "R": [[0,1],[1,2]], "E": [], "close_R": true, "close_E": true}"#,
        )
        .unwrap();
        let frame = file.into_frame().unwrap();
        assert!(frame.r().contains(0, 2));
        assert!(frame.r().contains(1, 1));
        assert_eq!(*frame.e(), Relation::identity(3));
    }

    #[test]
    fn rejects_out_of_range_pairs() {
        let file: Ms4FrameFile =
            serde_json::from_str(r#"{"worlds": 2, "R": [[0,5]], "E": []}"#).unwrap();
        assert!(matches!(file.into_frame(), Err(FrameFileError::PairOutOfRange(0, 5, 2))));
    }

    #[test]
    fn round_trip_preserves_matrices() {
        let dir = std::env::temp_dir().join(format!("ms4lab-json-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("frame.json");

        let original = grid_frame(2, 3).unwrap().1;
        save_ms4_frame(&path, &original).unwrap();
        let loaded = load_ms4_frame(&path).unwrap();
        assert_eq!(*loaded.r(), *original.r());
        assert_eq!(*loaded.e(), *original.e());

        save_ms4_frame(&path, &loaded).unwrap();
        let again = load_ms4_frame(&path).unwrap();
        assert_eq!(*again.r(), *original.r());
        assert_eq!(*again.e(), *original.e());

        let chain = chain_frame(3).unwrap().with_labels(vec![
            "top".to_string(),
            "mid".to_string(),
            "root".to_string(),
        ]);
        save_ms4_frame(&path, &chain).unwrap();
        let loaded = load_ms4_frame(&path).unwrap();
        assert_eq!(loaded.labels(), chain.labels());

        std::fs::remove_dir_all(&dir).ok();
    }
}
