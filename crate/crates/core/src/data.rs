//! Retrieval datasets: CSV ingestion/export and the seeded synthetic generator.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GlrrError, Result};
use crate::rng;
use crate::Matrix;

pub const ID_COLUMN: &str = "id";
pub const AERONET_COLUMN: &str = "aeronet_aod";
pub const BASELINE_COLUMN: &str = "baseline_aod";
pub const BAND_PREFIX: &str = "band_";

/// Spectra with aligned ground-truth and baseline AOD.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalDataset {
    /// `d x n`; column `i` is sample `i`.
    pub spectra: Matrix,
    /// Ground-truth AOD (AERONET, 550 nm).
    pub aeronet: Vec<f64>,
    /// Physical-model AOD used for the graph and as the reference row.
    pub baseline: Vec<f64>,
    pub ids: Vec<String>,
}

impl RetrievalDataset {
    pub fn new(spectra: Matrix, aeronet: Vec<f64>, baseline: Vec<f64>, ids: Vec<String>) -> Result<Self> {
        let n = spectra.ncols();
        if aeronet.len() != n || baseline.len() != n || ids.len() != n {
            return Err(GlrrError::invalid(format!(
                "misaligned dataset: {n} spectra, {} targets, {} baseline values, {} ids",
                aeronet.len(),
                baseline.len(),
                ids.len()
            )));
        }
        if n == 0 || spectra.nrows() == 0 {
            return Err(GlrrError::invalid("dataset has no samples or no bands"));
        }
        if spectra.iter().chain(&aeronet).chain(&baseline).any(|v| !v.is_finite()) {
            return Err(GlrrError::invalid("dataset contains non-finite values"));
        }
        Ok(RetrievalDataset {
            spectra,
            aeronet,
            baseline,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.spectra.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bands(&self) -> usize {
        self.spectra.nrows()
    }

    /// Samples reordered (or subset) by `order`.
    pub fn select(&self, order: &[usize]) -> RetrievalDataset {
        RetrievalDataset {
            spectra: self.spectra.select_columns(order),
            aeronet: order.iter().map(|&i| self.aeronet[i]).collect(),
            baseline: order.iter().map(|&i| self.baseline[i]).collect(),
            ids: order.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: RetrievalDataset,
    /// Rows skipped because a field was missing, non-numeric or non-finite.
    pub dropped: usize,
}

fn parse_finite(field: Option<&str>) -> Option<f64> {
    field
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite())
}

/// Reads the dataset CSV schema: `id, band_1..band_d, aeronet_aod, baseline_aod`.
///
/// Lines starting with `#` are comments. Band columns are ordered by their
/// numeric suffix regardless of position in the header.
pub fn read_csv<R: Read>(reader: R) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| GlrrError::MissingColumn(name.to_string()))
    };
    let id_col = find(ID_COLUMN)?;
    let aeronet_col = find(AERONET_COLUMN)?;
    let baseline_col = find(BASELINE_COLUMN)?;
    let mut bands: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(pos, h)| {
            h.strip_prefix(BAND_PREFIX)
                .and_then(|k| k.parse::<usize>().ok())
                .map(|k| (k, pos))
        })
        .collect();
    if bands.is_empty() {
        return Err(GlrrError::MissingColumn(format!("{BAND_PREFIX}1")));
    }
    bands.sort_unstable();
    for (expected, &(k, _)) in (1..).zip(&bands) {
        if k != expected {
            return Err(GlrrError::MissingColumn(format!("{BAND_PREFIX}{expected}")));
        }
    }

    let width = header.len();
    let mut columns: Vec<f64> = Vec::new();
    let (mut aeronet, mut baseline, mut ids) = (Vec::new(), Vec::new(), Vec::new());
    let mut dropped = 0;
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        if record.len() != width {
            dropped += 1;
            continue;
        }
        let values: Option<Vec<f64>> = bands.iter().map(|&(_, pos)| parse_finite(record.get(pos))).collect();
        let target = parse_finite(record.get(aeronet_col));
        let base = parse_finite(record.get(baseline_col));
        let id = record.get(id_col).filter(|s| !s.is_empty());
        match (values, target, base, id) {
            (Some(v), Some(t), Some(b), Some(id)) => {
                columns.extend(v);
                aeronet.push(t);
                baseline.push(b);
                ids.push(id.to_string());
            }
            _ => dropped += 1,
        }
    }
    if ids.is_empty() {
        return Err(GlrrError::invalid("no usable rows in dataset file"));
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} malformed row(s) while loading dataset");
    }
    let spectra = Matrix::from_vec(bands.len(), ids.len(), columns);
    Ok(LoadedDataset {
        dataset: RetrievalDataset::new(spectra, aeronet, baseline, ids)?,
        dropped,
    })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadedDataset> {
    read_csv(std::fs::File::open(path)?)
}

/// Writes the dataset CSV schema. Each `comments` line is emitted as `# line`
/// before the header. Values use shortest round-trip formatting.
pub fn write_csv<W: Write>(dataset: &RetrievalDataset, comments: &[String], mut out: W) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend((1..=dataset.bands()).map(|k| format!("{BAND_PREFIX}{k}")));
    header.push(AERONET_COLUMN.into());
    header.push(BASELINE_COLUMN.into());
    wtr.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut row = vec![dataset.ids[i].clone()];
        row.extend(dataset.spectra.column(i).iter().map(|v| v.to_string()));
        row.push(dataset.aeronet[i].to_string());
        row.push(dataset.baseline[i].to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMap {
    Linear,
    SmoothNonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// True rank (number of endmembers).
    pub r: usize,
    pub corrupt_fraction: f64,
    pub noise_scale: f64,
    pub nonlinear_warp: bool,
    pub target_map: TargetMap,
    /// Baseline error standard deviation as a fraction of the targets' standard deviation.
    pub baseline_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 200,
            d: 16,
            r: 4,
            corrupt_fraction: 0.1,
            noise_scale: 10.0,
            nonlinear_warp: true,
            target_map: TargetMap::SmoothNonlinear,
            baseline_noise: 0.2,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.d == 0 || self.r == 0 {
            return Err(GlrrError::invalid(format!(
                "synthetic spec needs n >= 2, d >= 1, r >= 1 (got n={}, d={}, r={})",
                self.n, self.d, self.r
            )));
        }
        if self.r > self.d.min(self.n) {
            return Err(GlrrError::invalid(format!("rank {} exceeds min(d, n)", self.r)));
        }
        if !(0.0..1.0).contains(&self.corrupt_fraction) {
            return Err(GlrrError::invalid(format!(
                "corrupt_fraction {} outside [0, 1)",
                self.corrupt_fraction
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(GlrrError::invalid("noise_scale must be finite and >= 0"));
        }
        if !(self.baseline_noise >= 0.0 && self.baseline_noise.is_finite()) {
            return Err(GlrrError::invalid("baseline_noise must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Generator internals kept for verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    /// Clean low-rank spectra before warp and corruption, `d x n`.
    pub clean: Matrix,
    /// Sorted indices of the grossly corrupted columns.
    pub corrupted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: RetrievalDataset,
    pub truth: SyntheticTruth,
}

fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Low-rank spectra `X0 = B C` (standard normal factors), an optional
/// per-band monotone warp, gross corruption of a seeded column subset, targets
/// from the latent abundances `C`, and a perturbed baseline.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = rng::substream(spec.seed, rng::GENERATOR, 0);
    let SyntheticSpec { n, d, r, .. } = *spec;

    let basis = normal_matrix(&mut rng, d, r);
    let abundances = normal_matrix(&mut rng, r, n);
    let clean = &basis * &abundances;

    let mut spectra = clean.clone();
    if spec.nonlinear_warp {
        // x + k tanh(x) has derivative >= 1, so each band stays monotone
        for mut band in spectra.row_iter_mut() {
            let k: f64 = rng.gen_range(0.2..1.0);
            band.apply(|v| *v += k * v.tanh());
        }
    }

    let n_corrupt = (spec.corrupt_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut corrupted = order[..n_corrupt].to_vec();
    corrupted.sort_unstable();
    for &col in &corrupted {
        for v in spectra.column_mut(col).iter_mut() {
            *v = spec.noise_scale * rng.sample::<f64, _>(StandardNormal);
        }
    }

    // two latent directions drive the target
    let w1 = normal_matrix(&mut rng, 1, r);
    let w2 = normal_matrix(&mut rng, 1, r);
    let s1 = (&w1 * &abundances) / w1.norm();
    let s2 = (&w2 * &abundances) / w2.norm();
    let aeronet: Vec<f64> = (0..n)
        .map(|i| match spec.target_map {
            TargetMap::Linear => 0.6 + 0.2 * s1[i],
            TargetMap::SmoothNonlinear => 0.5 * (0.6 * s1[i]).exp() + 0.1 * (1.5 * s2[i]).sin(),
        })
        .collect();
    // additive, homoscedastic, scaled to the spread of the targets
    let mean = aeronet.iter().sum::<f64>() / n as f64;
    let spread = (aeronet.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let baseline: Vec<f64> = aeronet
        .iter()
        .map(|&t| t + spec.baseline_noise * spread * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let ids = (0..n).map(|i| format!("s{i:05}")).collect();

    Ok(SyntheticData {
        dataset: RetrievalDataset::new(spectra, aeronet, baseline, ids)?,
        truth: SyntheticTruth { clean, corrupted },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "id,band_1,band_2,band_3,band_4,aeronet_aod,baseline_aod\n\
                         a,0.1,0.2,0.3,0.4,0.5,0.45\n\
                         b,1,2,3,4,0.7,0.8\n\
                         c,1e-3,2.5,3,4,0.2,0.25\n";

    #[test]
    fn reads_small_file() {
        let loaded = read_csv(SMALL.as_bytes()).unwrap();
        assert_eq!(loaded.dropped, 0);
        assert_eq!(loaded.dataset.len(), 3);
        assert_eq!(loaded.dataset.bands(), 4);
        assert_eq!(loaded.dataset.spectra[(1, 1)], 2.0);
        assert_eq!(loaded.dataset.ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn drops_malformed_rows() {
        let text = format!("{SMALL}d,1,oops,3,4,0.1,0.1\ne,1,2,3\nf,1,2,3,4,NaN,0.2\n");
        let loaded = read_csv(text.as_bytes()).unwrap();
        assert_eq!(loaded.dataset.len(), 3);
        assert_eq!(loaded.dropped, 3);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "id,band_1,aeronet_aod\na,1,2\n";
        match read_csv(text.as_bytes()) {
            Err(GlrrError::MissingColumn(c)) => assert_eq!(c, BASELINE_COLUMN),
            other => panic!("unexpected {other:?}"),
        }
        let text = "id,band_1,band_3,aeronet_aod,baseline_aod\na,1,2,3,4\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(GlrrError::MissingColumn(_))));
    }

    #[test]
    fn empty_usable_set() {
        let text = "id,band_1,aeronet_aod,baseline_aod\na,x,1,1\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(GlrrError::InvalidInput(_))));
    }

    #[test]
    fn generator_rank_and_determinism() {
        let spec = SyntheticSpec {
            n: 40,
            d: 12,
            r: 3,
            corrupt_fraction: 0.0,
            nonlinear_warp: false,
            seed: 5,
            ..Default::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        let s = crate::prox::singular_values(&a.dataset.spectra).unwrap();
        assert!(s[3] < 1e-10 * s[0]);
        assert!(a.truth.corrupted.is_empty());
        assert_eq!(a, generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn corrupted_set_size() {
        let spec = SyntheticSpec {
            n: 50,
            corrupt_fraction: 0.13,
            ..Default::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        assert_eq!(data.truth.corrupted.len(), 7);
        assert!(data.dataset.aeronet.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_synthetic(&SyntheticSpec { r: 20, d: 10, ..Default::default() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { corrupt_fraction: 1.0, ..Default::default() }).is_err());
    }
}
