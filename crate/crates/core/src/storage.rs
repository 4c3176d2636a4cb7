//! On-disk formats: recordings with JSON sidecars, the benchmark manifest,
//! the versioned binary container, and CSV feature exports.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairwise::PairwiseFeatureVector;
use crate::relative::RelativeFeature;
use crate::signal::{ClassLabel, CycleId, IndividualId, Recording};

pub const MANIFEST_VERSION: u32 = 1;
pub const CONTAINER_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"WAVEFLT\0";
const HEADER_LEN: usize = 8 + 4 + 4 + 8;

/// Metadata stored next to each sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub class: ClassLabel,
    pub individual: IndividualId,
    pub sample_rate: f64,
    pub duration: f64,
}

pub fn write_recording(samples_path: &Path, sidecar_path: &Path, rec: &Recording) -> Result<()> {
    let mut bytes = Vec::with_capacity(rec.samples.len() * 4);
    for &s in &rec.samples {
        bytes.extend_from_slice(&(s as f32).to_le_bytes());
    }
    fs::write(samples_path, bytes).map_err(|e| Error::io(samples_path, e))?;
    let sidecar = Sidecar {
        class: rec.class,
        individual: rec.individual,
        sample_rate: rec.sample_rate,
        duration: rec.duration,
    };
    write_json(sidecar_path, &sidecar)
}

/// Reads a recording. Class and individual come from the sidecar.
pub fn read_recording(samples_path: &Path, sidecar_path: &Path) -> Result<Recording> {
    let sidecar: Sidecar = read_json(sidecar_path)?;
    let bytes = fs::read(samples_path).map_err(|e| Error::io(samples_path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Container {
            path: samples_path.to_path_buf(),
            reason: format!("length {} is not a multiple of 4", bytes.len()),
        });
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mut rec = Recording::new(
        samples,
        sidecar.sample_rate,
        sidecar.class,
        sidecar.individual,
    );
    rec.duration = sidecar.duration;
    Ok(rec)
}

/// Rounds every sample through `f32`, as a disk round trip would.
pub fn quantize(rec: &mut Recording) {
    for s in rec.samples.iter_mut() {
        *s = *s as f32 as f64;
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub class: ClassLabel,
    pub individual: IndividualId,
    /// Relative to the manifest's directory.
    pub samples: PathBuf,
    pub sidecar: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub sample_rate: f64,
    /// Master seed the data was generated with, if synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Evaluated cycles per (class, individual) after balancing.
    pub cycles_per_case: usize,
    pub individuals: Vec<IndividualId>,
    pub train_individual: IndividualId,
    pub test_individuals: Vec<IndividualId>,
    pub recordings: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ManifestInvalid(msg));
        if self.version != MANIFEST_VERSION {
            return bad(format!("unsupported manifest version {}", self.version));
        }
        if !(self.sample_rate > 0.0) {
            return bad("sample_rate must be positive".into());
        }
        if self.cycles_per_case == 0 {
            return bad("cycles_per_case must be positive".into());
        }
        let individuals: BTreeSet<IndividualId> = self.individuals.iter().copied().collect();
        if individuals.len() != self.individuals.len() {
            return bad("duplicate individual ids".into());
        }
        if !individuals.contains(&self.train_individual) {
            return bad(format!(
                "train individual {} is not listed",
                self.train_individual
            ));
        }
        if self.test_individuals.is_empty() {
            return bad("no test individuals".into());
        }
        for t in &self.test_individuals {
            if *t == self.train_individual {
                return bad(format!("individual {t} is both train and test"));
            }
            if !individuals.contains(t) {
                return bad(format!("test individual {t} is not listed"));
            }
        }
        let mut seen = BTreeSet::new();
        for e in &self.recordings {
            if !individuals.contains(&e.individual) {
                return bad(format!(
                    "recording {} names unknown individual {}",
                    e.samples.display(),
                    e.individual
                ));
            }
            if !seen.insert((e.individual, e.class)) {
                return bad(format!(
                    "duplicate recording for {}/{}",
                    e.class, e.individual
                ));
            }
        }
        for &ind in &self.individuals {
            for class in ClassLabel::ALL {
                if !seen.contains(&(ind, class)) {
                    return bad(format!(
                        "no recording for class {class} of individual {ind}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// The recording entry for a case, if present.
    pub fn entry(&self, individual: IndividualId, class: ClassLabel) -> Option<&ManifestEntry> {
        self.recordings
            .iter()
            .find(|e| e.individual == individual && e.class == class)
    }
}

/// A recording as listed in a manifest. `entry` holds what the manifest
/// claims; `recording` carries what its sidecar says.
#[derive(Debug, Clone)]
pub struct LoadedRecording {
    pub entry: ManifestEntry,
    pub recording: Recording,
}

impl LoadedRecording {
    /// True when the sidecar disagrees with the manifest entry.
    pub fn is_mislabelled(&self) -> bool {
        self.entry.class != self.recording.class
            || self.entry.individual != self.recording.individual
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub recordings: Vec<LoadedRecording>,
}

impl Dataset {
    pub fn load(manifest_path: &Path) -> Result<Dataset> {
        let manifest: Manifest = read_json(manifest_path)?;
        manifest.validate()?;
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        let recordings = manifest
            .recordings
            .iter()
            .map(|entry| {
                let recording =
                    read_recording(&root.join(&entry.samples), &root.join(&entry.sidecar))?;
                Ok(LoadedRecording {
                    entry: entry.clone(),
                    recording,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            manifest,
            recordings,
        })
    }

    /// Loads only the sidecars, for checks that do not need samples.
    pub fn load_sidecars(
        manifest_path: &Path,
    ) -> Result<(Manifest, Vec<(ManifestEntry, Sidecar)>)> {
        let manifest: Manifest = read_json(manifest_path)?;
        manifest.validate()?;
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        let sidecars = manifest
            .recordings
            .iter()
            .map(|e| Ok((e.clone(), read_json(&root.join(&e.sidecar))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((manifest, sidecars))
    }
}

/// Payload types of the binary container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Model = 1,
    Features = 2,
}

impl PayloadKind {
    fn from_u32(v: u32) -> Option<PayloadKind> {
        match v {
            1 => Some(PayloadKind::Model),
            2 => Some(PayloadKind::Features),
            _ => None,
        }
    }
}

/// Writes `value` as: magic, version (u32), payload kind (u32), payload
/// length (u64), JSON payload. Integers are little-endian.
pub fn write_container<T: Serialize>(path: &Path, kind: PayloadKind, value: &T) -> Result<()> {
    let payload = serde_json::to_vec(value)?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&(kind as u32).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_container<T: DeserializeOwned>(path: &Path, expected: PayloadKind) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |reason: String| Error::Container {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(fail("not a wavefault container".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = u32_at(8);
    if version != CONTAINER_VERSION {
        return Err(fail(format!("unsupported container version {version}")));
    }
    let kind = u32_at(12);
    match PayloadKind::from_u32(kind) {
        Some(k) if k == expected => {}
        _ => {
            return Err(fail(format!(
                "payload kind {kind}, expected {}",
                expected as u32
            )))
        }
    }
    let len = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    if bytes.len() != HEADER_LEN + len {
        return Err(fail(format!(
            "payload length {len} does not match file size"
        )));
    }
    Ok(serde_json::from_slice(&bytes[HEADER_LEN..])?)
}

/// One row per feature: kind, ref_id, target_id, then the values.
pub fn write_features_csv(path: &Path, features: &[RelativeFeature]) -> Result<()> {
    let mut out = String::from("kind,ref_id,target_id,values...\n");
    for f in features {
        out.push_str(&format!("{},{},{}", f.kind.name(), f.ref_id, f.target_id));
        for v in &f.values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// One row per target cycle with a header naming every entry.
pub fn write_pd_csv(path: &Path, rows: &[(CycleId, PairwiseFeatureVector)]) -> Result<()> {
    let mut out = String::from("target_id");
    if let Some((_, first)) = rows.first() {
        for name in &first.layout {
            out.push(',');
            out.push_str(name);
        }
    }
    out.push('\n');
    for (id, v) in rows {
        if let Some((_, first)) = rows.first() {
            if v.layout != first.layout {
                return Err(Error::LayoutMismatch {
                    expected: first.layout.len(),
                    got: v.layout.len(),
                });
            }
        }
        out.push_str(&id.to_string());
        for x in &v.values {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
