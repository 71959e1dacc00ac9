use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::files::load_homography;
use crate::error::{Error, Result};
use crate::protocol::{ImageInfo, PairTask};

pub const MANIFEST_SCHEMA: &str = "detbench-manifest/1";

/// Index of the reference image in every sequence (1-based).
pub const REFERENCE_INDEX: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema: String,
    pub name: String,
    pub sequences: Vec<Sequence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sequence {
    pub id: String,
    /// "viewpoint", "illumination", or any other label.
    pub nuisance: String,
    pub images: Vec<ImageEntry>,
    pub homographies: Vec<HomographyEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub file: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub download: Option<Download>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomographyDirection {
    /// The stored matrix maps image `from` pixels to image `to` pixels.
    #[default]
    FromToTo,
    /// The stored matrix maps image `to` pixels back to image `from`.
    ToToFrom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomographyEntry {
    pub file: String,
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub direction: HomographyDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub download: Option<Download>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Download {
    pub url: String,
    pub sha256: String,
}

/// A file referenced by a manifest, relative to the dataset root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestFile {
    pub path: PathBuf,
    pub download: Option<Download>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, sequences: Vec<Sequence>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            name: name.into(),
            sequences,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != MANIFEST_SCHEMA {
            return Err(Error::Manifest(format!(
                "unsupported schema `{}` (expected `{MANIFEST_SCHEMA}`)",
                self.schema
            )));
        }
        if self.sequences.is_empty() {
            return Err(Error::Manifest("no sequences".into()));
        }
        let mut seen = BTreeSet::new();
        for seq in &self.sequences {
            check_component(&seq.id, "sequence id")?;
            if !seen.insert(seq.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate sequence id `{}`", seq.id)));
            }
            seq.validate()?;
        }
        Ok(())
    }

    pub fn image_count(&self) -> usize {
        self.sequences.iter().map(|s| s.images.len()).sum()
    }

    pub fn pair_count(&self) -> usize {
        self.sequences.iter().map(|s| s.homographies.len()).sum()
    }

    /// One task per homography, reference image against each other image.
    /// Homography files are read relative to `root/<sequence id>/`.
    pub fn pair_tasks(&self, root: &Path) -> Result<Vec<PairTask>> {
        let mut tasks = Vec::with_capacity(self.pair_count());
        for seq in &self.sequences {
            for h in &seq.homographies {
                let path = root.join(&seq.id).join(&h.file);
                let homography = load_homography(&path, h.direction)?;
                let reference = seq.image_info(h.from);
                let target = seq.image_info(h.to);
                let task = PairTask::new(format!("{}/{}-{}", seq.id, h.from, h.to), reference, target, homography)?
                    .with_sequence(&seq.id, &seq.nuisance);
                tasks.push(task);
            }
        }
        Ok(tasks)
    }

    /// Every image and homography file, in manifest order.
    pub fn files(&self) -> Vec<ManifestFile> {
        let mut out = Vec::new();
        for seq in &self.sequences {
            for img in &seq.images {
                out.push(ManifestFile {
                    path: Path::new(&seq.id).join(&img.file),
                    download: img.download.clone(),
                });
            }
            for h in &seq.homographies {
                out.push(ManifestFile {
                    path: Path::new(&seq.id).join(&h.file),
                    download: h.download.clone(),
                });
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

impl Sequence {
    fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::Manifest(format!("sequence `{}`: {msg}", self.id));
        if self.images.is_empty() {
            return Err(ctx("no images".into()));
        }
        for (i, img) in self.images.iter().enumerate() {
            check_component(&img.file, "image file").map_err(|e| ctx(e.to_string()))?;
            if img.width == 0 || img.height == 0 {
                return Err(ctx(format!("image {} has zero size", i + 1)));
            }
        }
        let mut targets = BTreeSet::new();
        for h in &self.homographies {
            check_component(&h.file, "homography file").map_err(|e| ctx(e.to_string()))?;
            if h.from != REFERENCE_INDEX {
                return Err(ctx(format!(
                    "homography `{}` starts at image {} (reference is image {REFERENCE_INDEX})",
                    h.file, h.from
                )));
            }
            if h.to < 1 || h.to > self.images.len() {
                return Err(ctx(format!(
                    "homography `{}` references image {} of {}",
                    h.file,
                    h.to,
                    self.images.len()
                )));
            }
            if h.to == REFERENCE_INDEX {
                return Err(ctx(format!("homography `{}` maps the reference onto itself", h.file)));
            }
            if !targets.insert(h.to) {
                return Err(ctx(format!("image {} has more than one homography", h.to)));
            }
        }
        if self.homographies.len() != self.images.len() - 1 {
            return Err(ctx(format!(
                "{} images but {} homographies (expected {})",
                self.images.len(),
                self.homographies.len(),
                self.images.len() - 1
            )));
        }
        Ok(())
    }

    /// Image metadata for the 1-based `index`.
    pub fn image_info(&self, index: usize) -> ImageInfo {
        let img = &self.images[index - 1];
        ImageInfo::new(format!("{}/{}", self.id, index), img.width, img.height)
    }
}

fn check_component(name: &str, what: &str) -> Result<()> {
    let path = Path::new(name);
    let ok = !name.is_empty() && path.components().all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(())
    } else {
        Err(Error::Manifest(format!(
            "{what} `{name}` must be a relative path without `..`"
        )))
    }
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<DatasetManifest> {
    let manifest: DatasetManifest = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_manifest(&text, path)
}

/// Directory layouts that can be turned into a manifest by scanning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// `i_*` / `v_*` sequences holding `1.ppm … 6.ppm` and `H_1_k`, which maps image 1 to image k.
    HPatches,
    /// Sequences holding `img1.ppm|pgm …` and `H1toKp`, which maps image 1 to image k.
    VggAffine,
}

/// Builds a manifest from an extracted dataset. Image sizes are read from
/// the PNM headers; pixel data is never decoded.
pub fn scan_dataset(root: &Path, layout: Layout, name: &str) -> Result<DatasetManifest> {
    let mut dirs: Vec<(String, PathBuf)> = fs::read_dir(root)
        .map_err(|e| Error::io(format!("listing {}", root.display()), e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .collect();
    dirs.sort();

    let mut sequences = Vec::new();
    for (id, dir) in dirs {
        let nuisance = match layout {
            Layout::HPatches if id.starts_with("i_") => "illumination",
            Layout::HPatches if id.starts_with("v_") => "viewpoint",
            Layout::HPatches => continue,
            Layout::VggAffine => vgg_nuisance(&id),
        };
        let mut images = Vec::new();
        for k in 1.. {
            let candidates: Vec<String> = match layout {
                Layout::HPatches => vec![format!("{k}.ppm")],
                Layout::VggAffine => vec![format!("img{k}.ppm"), format!("img{k}.pgm")],
            };
            let Some(file) = candidates.into_iter().find(|f| dir.join(f).is_file()) else {
                break;
            };
            let (width, height) = read_pnm_size(&dir.join(&file))?;
            images.push(ImageEntry {
                file,
                width,
                height,
                download: None,
            });
        }
        if images.is_empty() {
            continue;
        }
        let homographies = (2..=images.len())
            .map(|k| HomographyEntry {
                file: match layout {
                    Layout::HPatches => format!("H_1_{k}"),
                    Layout::VggAffine => format!("H1to{k}p"),
                },
                from: 1,
                to: k,
                direction: HomographyDirection::FromToTo,
                download: None,
            })
            .collect();
        sequences.push(Sequence {
            id,
            nuisance: nuisance.to_string(),
            images,
            homographies,
        });
    }
    let manifest = DatasetManifest::new(name, sequences);
    manifest.validate()?;
    Ok(manifest)
}

fn vgg_nuisance(id: &str) -> &'static str {
    match id {
        "graf" | "wall" => "viewpoint",
        "bark" | "boat" => "zoom-rotation",
        "bikes" | "trees" => "blur",
        "leuven" => "illumination",
        "ubc" => "jpeg",
        _ => "other",
    }
}

/// Width and height from a binary or ASCII PNM header (`P1` … `P6`).
pub fn read_pnm_size(path: &Path) -> Result<(u32, u32)> {
    let mut head = Vec::with_capacity(512);
    fs::File::open(path)
        .and_then(|f| f.take(4096).read_to_end(&mut head))
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let bad = |message: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: message.to_string(),
    };
    if head.len() < 2 || head[0] != b'P' || !(b'1'..=b'6').contains(&head[1]) {
        return Err(bad("not a PNM image"));
    }
    let mut tokens = Vec::new();
    let mut i = 2;
    while tokens.len() < 2 && i < head.len() {
        match head[i] {
            b'#' => {
                while i < head.len() && head[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < head.len() && !head[i].is_ascii_whitespace() && head[i] != b'#' {
                    i += 1;
                }
                tokens.push(String::from_utf8_lossy(&head[start..i]).into_owned());
            }
        }
    }
    match tokens.as_slice() {
        [w, h] => match (w.parse::<u32>(), h.parse::<u32>()) {
            (Ok(w), Ok(h)) if w > 0 && h > 0 => Ok((w, h)),
            _ => Err(bad("invalid PNM dimensions")),
        },
        _ => Err(bad("truncated PNM header")),
    }
}
