//! Seeded synthetic instances: Gaussian low-rank truth, uniform erasures and
//! sparse corruption of the observed entries.
//!
//! Randomness comes from ChaCha8 seeded with the instance seed, split into
//! four independent streams (factors, mask, support, magnitudes), so that
//! changing the error rate leaves the truth and the mask untouched.
//!
//! # Instance files
//!
//! ```text
//! format = "sgmc-instance"      \
//! version = 1                    |  TOML header: spec fields and
//! n = 100                        |  section sizes
//! ...                           /
//! ---
//! <n·n little-endian f64, row-major truth>
//! <mask: one "row,col" line per observed entry, sorted>
//! <corruptions: one "row,col,value" line each, value = observed entry>
//! ```

use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{Index2, MaskedMatrix, ObservationMask};
use crate::numkit::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Standard-normal corruption (added to the entry unless `additive` is off).
    AdditiveGaussian,
    /// Replacement by a uniform draw on `[min, max]` of the clean observed values.
    UniformRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub rank: usize,
    pub density: f64,
    pub error_rate: f64,
    pub error_model: ErrorModel,
    /// Only meaningful for [`ErrorModel::AdditiveGaussian`]: `false` replaces
    /// the entry with the Gaussian draw instead of adding it.
    #[serde(default = "default_additive")]
    pub additive: bool,
    pub seed: u64,
}

fn default_additive() -> bool {
    true
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.rank >= self.n {
            return Err(Error::arg(format!("rank must satisfy 0 < rank < n, got rank {} for n {}", self.rank, self.n)));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::arg(format!("density must lie in (0, 1], got {}", self.density)));
        }
        if !(0.0..1.0).contains(&self.error_rate) {
            return Err(Error::arg(format!("error rate must lie in [0, 1), got {}", self.error_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub truth: DenseMatrix,
    pub observed: MaskedMatrix,
    /// Sorted positions of the corrupted observations.
    pub corruption_support: Vec<Index2>,
    pub spec: InstanceSpec,
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedStreams(pub u64);

impl SeedStreams {
    fn stream(self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(id);
        rng
    }

    pub fn factors(self) -> ChaCha8Rng {
        self.stream(0)
    }

    pub fn mask(self) -> ChaCha8Rng {
        self.stream(1)
    }

    pub fn support(self) -> ChaCha8Rng {
        self.stream(2)
    }

    pub fn magnitudes(self) -> ChaCha8Rng {
        self.stream(3)
    }
}

pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// `U Vᵀ` with independent standard-normal `n x rank` factors.
pub fn gen_lowrank<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<DenseMatrix> {
    if rank == 0 || rank >= n {
        return Err(Error::arg(format!("rank must satisfy 0 < rank < n, got rank {rank} for n {n}")));
    }
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| StandardNormal.sample(rng)).collect() };
    let u = DenseMatrix::new(n, rank, draw(n * rank))?;
    let v = DenseMatrix::new(n, rank, draw(n * rank))?;
    u.matmul(&v.transpose())
}

/// `round(density·n²)` distinct positions, uniformly without replacement.
pub fn gen_mask<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Result<ObservationMask> {
    if n == 0 {
        return Err(Error::arg("matrix side must be positive"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::arg(format!("density must lie in (0, 1], got {density}")));
    }
    let total = n * n;
    let count = round_half_up(density * total as f64).min(total);
    let picked = index::sample(rng, total, count).into_vec();
    Ok(ObservationMask::from_linear(n, n, picked))
}

/// Corrupts `round(error_rate·|Ω|)` uniformly chosen observed entries.
/// Returns the observed matrix and the sorted corruption support.
pub fn corrupt<R1, R2>(
    truth: &DenseMatrix,
    mask: &ObservationMask,
    error_rate: f64,
    model: ErrorModel,
    additive: bool,
    support_rng: &mut R1,
    magnitude_rng: &mut R2,
) -> Result<(MaskedMatrix, Vec<Index2>)>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    if !(0.0..1.0).contains(&error_rate) {
        return Err(Error::arg(format!("error rate must lie in [0, 1), got {error_rate}")));
    }
    let observed = MaskedMatrix::observe(truth, mask.clone())?;
    let count = round_half_up(error_rate * mask.len() as f64).min(mask.len());
    if count == 0 {
        return Ok((observed, Vec::new()));
    }
    let mut picks = index::sample(support_rng, mask.len(), count).into_vec();
    picks.sort_unstable();
    let support: Vec<Index2> = picks.iter().map(|&p| mask.entries()[p]).collect();

    let (mut values, mask) = observed.into_parts();
    match model {
        ErrorModel::AdditiveGaussian => {
            for &idx in &support {
                let z: f64 = StandardNormal.sample(magnitude_rng);
                values[idx] = if additive { values[idx] + z } else { z };
            }
        }
        ErrorModel::UniformRange => {
            let (lo, hi) = mask
                .iter()
                .map(|idx| truth[idx])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let dist = Uniform::new_inclusive(lo, hi).map_err(|e| Error::arg(format!("uniform range: {e}")))?;
            for &idx in &support {
                values[idx] = dist.sample(magnitude_rng);
            }
        }
    }
    Ok((MaskedMatrix::new(values, mask)?, support))
}

pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let streams = SeedStreams(spec.seed);
    let truth = gen_lowrank(spec.n, spec.rank, &mut streams.factors())?;
    let mask = gen_mask(spec.n, spec.density, &mut streams.mask())?;
    let (observed, corruption_support) = corrupt(
        &truth,
        &mask,
        spec.error_rate,
        spec.error_model,
        spec.additive,
        &mut streams.support(),
        &mut streams.magnitudes(),
    )?;
    Ok(Instance {
        truth,
        observed,
        corruption_support,
        spec: spec.clone(),
    })
}

const FORMAT_TAG: &str = "sgmc-instance";
const FORMAT_VERSION: u32 = 1;
const HEADER_END: &[u8] = b"\n---\n";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    #[serde(flatten)]
    spec: InstanceSpec,
    mask_entries: usize,
    corruptions: usize,
    truth_bytes: usize,
}

impl Instance {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.spec.n;
        let header = Header {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            spec: self.spec.clone(),
            mask_entries: self.observed.mask().len(),
            corruptions: self.corruption_support.len(),
            truth_bytes: n * n * 8,
        };
        let text = toml::to_string(&header).map_err(|e| Error::format("instance header", e.to_string()))?;
        let mut out = Vec::with_capacity(text.len() + n * n * 8 + self.observed.mask().len() * 10);
        out.extend_from_slice(text.trim_end().as_bytes());
        out.extend_from_slice(HEADER_END);
        for v in self.truth.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(b'\n');
        out.extend_from_slice(self.observed.mask().to_text().as_bytes());
        let values = self.observed.values();
        for &(i, j) in &self.corruption_support {
            out.extend_from_slice(format!("{i},{j},{}\n", values[(i, j)]).as_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .windows(HEADER_END.len())
            .position(|w| w == HEADER_END)
            .ok_or_else(|| Error::format("instance", "missing header terminator"))?;
        let header_text =
            std::str::from_utf8(&bytes[..split]).map_err(|e| Error::format("instance header", e.to_string()))?;
        let header: Header =
            toml::from_str(header_text).map_err(|e| Error::format("instance header", e.to_string()))?;
        if header.format != FORMAT_TAG || header.version != FORMAT_VERSION {
            return Err(Error::format(
                "instance header",
                format!("unsupported format {} v{}", header.format, header.version),
            ));
        }
        header.spec.validate()?;
        let n = header.spec.n;
        if header.truth_bytes != n * n * 8 {
            return Err(Error::format("instance", "truth section size does not match n"));
        }
        let body = &bytes[split + HEADER_END.len()..];
        if body.len() < header.truth_bytes + 1 || body[header.truth_bytes] != b'\n' {
            return Err(Error::format("instance", "truncated truth section"));
        }
        let truth_data = body[..header.truth_bytes]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let truth = DenseMatrix::new(n, n, truth_data)?;

        let tail = std::str::from_utf8(&body[header.truth_bytes + 1..])
            .map_err(|e| Error::format("instance", e.to_string()))?;
        let mut lines = tail.lines();
        let mask_text: String = lines
            .by_ref()
            .take(header.mask_entries)
            .flat_map(|l| [l, "\n"])
            .collect();
        let mask = ObservationMask::parse_text(n, n, &mask_text)?;
        if mask.len() != header.mask_entries {
            return Err(Error::format("instance", "mask section shorter than declared"));
        }

        let mut values = crate::masking::project(&truth, &mask)?;
        let mut support = Vec::with_capacity(header.corruptions);
        for line in lines.by_ref().take(header.corruptions) {
            let mut parts = line.split(',');
            let (Some(i), Some(j), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(Error::format("instance", format!("bad corruption record {line:?}")));
            };
            let bad = |e: &dyn std::fmt::Display| Error::format("instance", format!("{line:?}: {e}"));
            let i: usize = i.parse().map_err(|e| bad(&e))?;
            let j: usize = j.parse().map_err(|e| bad(&e))?;
            let v: f64 = v.parse().map_err(|e| bad(&e))?;
            if !mask.contains((i, j)) {
                return Err(Error::format("instance", format!("corruption ({i},{j}) outside the mask")));
            }
            values[(i, j)] = v;
            support.push((i, j));
        }
        if support.len() != header.corruptions || lines.next().is_some() {
            return Err(Error::format("instance", "corruption section length mismatch"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::format("instance", "corruption records not strictly sorted"));
        }
        Ok(Self {
            truth,
            observed: MaskedMatrix::new(values, mask)?,
            corruption_support: support,
            spec: header.spec,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
