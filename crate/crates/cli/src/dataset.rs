use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rodkit_core::crf::AnnotationRecord;
use rodkit_core::io::{load_jsonl, load_ramaps, save_jsonl};
use rodkit_core::radar::{Difficulty, RaMap, Scene, TruthRecord};
use rodkit_core::{Error, Result};

use crate::config::PipelineConfig;

pub const RAMAPS_FILE: &str = "ramaps.bin";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const SCENE_FILE: &str = "scene.json";
pub const META_FILE: &str = "meta.json";
pub const CO_FILE: &str = "annotations_co.jsonl";
pub const CRF_FILE: &str = "annotations_crf.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub name: String,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub num_frames: usize,
    pub num_objects: usize,
    pub clutter_density: f64,
    pub config_hash: String,
}

/// Which labels a sequence is trained or plotted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Supervision {
    Co,
    Crf,
    Gt,
}

impl Supervision {
    pub fn name(self) -> &'static str {
        match self {
            Supervision::Co => "co",
            Supervision::Crf => "crf",
            Supervision::Gt => "gt",
        }
    }
}

pub fn sequence_name(i: usize) -> String {
    format!("seq_{i:04}")
}

/// One `seq_XXXX/` directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDir {
    pub path: PathBuf,
    pub meta: SequenceMeta,
}

impl SequenceDir {
    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn ramaps(&self) -> Result<Vec<RaMap<f32>>> {
        let path = self.file(RAMAPS_FILE);
        if !path.is_file() {
            return Err(Error::config(format!("{} is missing", path.display())));
        }
        let maps = load_ramaps(&path)?;
        if maps.len() != self.meta.num_frames {
            return Err(Error::Format(format!(
                "{} holds {} frames, meta.json says {}",
                path.display(),
                maps.len(),
                self.meta.num_frames
            )));
        }
        Ok(maps)
    }

    pub fn truth(&self) -> Result<Vec<TruthRecord>> {
        load_jsonl(&self.file(TRUTH_FILE))
    }

    pub fn scene(&self) -> Result<Scene> {
        Ok(serde_json::from_slice(&fs::read(self.file(SCENE_FILE))?)?)
    }

    /// Labels of the given kind as annotation records.
    pub fn labels(&self, kind: Supervision) -> Result<Vec<AnnotationRecord>> {
        let file = match kind {
            Supervision::Gt => {
                return Ok(self
                    .truth()?
                    .iter()
                    .map(|t| AnnotationRecord {
                        frame: t.frame,
                        class: t.class,
                        range_m: t.range_m,
                        azimuth_rad: t.azimuth_rad,
                        score: 1.0,
                        source: rodkit_core::crf::AnnotationSource::Gt,
                    })
                    .collect())
            }
            Supervision::Co => CO_FILE,
            Supervision::Crf => CRF_FILE,
        };
        let path = self.file(file);
        if !path.is_file() {
            return Err(Error::config(format!("{} is missing; run `rodkit annotate --mode {}` first", path.display(), kind.name())));
        }
        load_jsonl(&path)
    }
}

/// A dataset root: `seq_XXXX/` subdirectories in name order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub sequences: Vec<SequenceDir>,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::config(format!("dataset {} does not exist", root.display())));
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seq_")))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::config(format!("dataset {} holds no seq_* directories", root.display())));
        }
        let sequences = paths
            .into_iter()
            .map(|path| {
                let meta_path = path.join(META_FILE);
                let bytes = fs::read(&meta_path).map_err(|e| Error::config(format!("{}: {e}", meta_path.display())))?;
                let meta: SequenceMeta = serde_json::from_slice(&bytes)?;
                Ok(SequenceDir { path, meta })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { root: root.to_path_buf(), sequences })
    }

    /// Opens the dataset and checks that it was generated with `cfg`.
    pub fn open_checked(root: &Path, cfg: &PipelineConfig) -> Result<Self> {
        let ds = Self::open(root)?;
        let hash = cfg.data_hash();
        for s in &ds.sequences {
            if s.meta.config_hash != hash {
                return Err(Error::config(format!(
                    "{} was generated with a different configuration (hash {}, current {hash})",
                    s.path.display(),
                    s.meta.config_hash
                )));
            }
        }
        Ok(ds)
    }

    pub fn get(&self, name: &str) -> Result<&SequenceDir> {
        self.sequences
            .iter()
            .find(|s| s.meta.name == name)
            .ok_or_else(|| Error::config(format!("no sequence {name} in {}", self.root.display())))
    }
}

/// Refuses to replace an existing file unless `force`.
pub fn check_overwrite(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::config(format!("{} already exists (use --force to overwrite)", path.display())));
    }
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D> {
    let bytes = fs::read(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn save_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    save_jsonl(path, records)
}
