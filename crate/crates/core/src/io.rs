//! Persistence: CSV dataset files, the JSON model document, and the JSON
//! manifests written by the generator and the downsampler.
//!
//! Dataset files are plain CSV with a fixed naming convention: feature
//! columns `f0..f{K-1}`, an optional pair `s0`,`s1` of per-instance sampling
//! rates, and a required label column `y` with values 0 or 1. Columns may
//! appear in any order on input; output uses that canonical order. All real
//! numbers are written with 17 significant digits so that a read-back
//! reproduces the original bit patterns and rewriting a parsed file is
//! byte-stable.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::TruthManifest;
use crate::error::{Error, Result};
use crate::logistic::LogisticModel;
use crate::sampling::SamplingManifest;
use crate::types::{Dataset, FeatureVector, LabelSpace, LabeledInstance};

/// 17 significant digits, the round-trip guarantee for f64.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Feature(usize),
    Rate(usize),
    Label,
}

fn classify_column(name: &str) -> Result<Role> {
    match name {
        "y" => Ok(Role::Label),
        "s0" => Ok(Role::Rate(0)),
        "s1" => Ok(Role::Rate(1)),
        _ => {
            if let Some(digits) = name.strip_prefix('f') {
                if let Ok(i) = digits.parse::<usize>() {
                    // reject aliases like f01 so every column has one spelling
                    if digits == i.to_string() {
                        return Ok(Role::Feature(i));
                    }
                }
            }
            Err(Error::schema(format!(
                "unknown column '{name}' (expected f0..fN, s0, s1, y)"
            )))
        }
    }
}

struct Header {
    roles: Vec<Role>,
    feature_count: usize,
    has_rates: bool,
}

fn parse_header(headers: &csv::StringRecord) -> Result<Header> {
    let roles = headers
        .iter()
        .map(classify_column)
        .collect::<Result<Vec<_>>>()?;
    let mut feature_indices: Vec<usize> = Vec::new();
    let mut rate_seen = [false; 2];
    let mut label_seen = false;
    for (role, name) in roles.iter().zip(headers.iter()) {
        match *role {
            Role::Feature(i) => feature_indices.push(i),
            Role::Rate(i) => {
                if rate_seen[i] {
                    return Err(Error::schema(format!("duplicate column '{name}'")));
                }
                rate_seen[i] = true;
            }
            Role::Label => {
                if label_seen {
                    return Err(Error::schema("duplicate column 'y'"));
                }
                label_seen = true;
            }
        }
    }
    if !label_seen {
        return Err(Error::schema("missing required column 'y'"));
    }
    if rate_seen[0] != rate_seen[1] {
        return Err(Error::schema(
            "sampling-rate columns must come as a pair: s0 and s1",
        ));
    }
    feature_indices.sort_unstable();
    for (expected, got) in feature_indices.iter().enumerate() {
        if expected != *got {
            return Err(Error::schema(format!(
                "feature columns must be contiguous f0..f{}; f{expected} is missing or f{got} repeats",
                feature_indices.len() - 1
            )));
        }
    }
    Ok(Header {
        roles,
        feature_count: feature_indices.len(),
        has_rates: rate_seen[0],
    })
}

fn parse_real_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
        row,
        column: column.to_string(),
        message: e.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::schema_at(
            row,
            format!("column '{column}' must be finite, got {cell}"),
        ));
    }
    Ok(v)
}

/// Parse a dataset from CSV text arriving on any reader.
pub fn read_dataset_from<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::schema(format!("header row: {e}")))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::schema("empty input: no header row"));
    }
    let header = parse_header(&headers)?;

    let mut instances = Vec::new();
    let mut rates = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, .. } => Error::schema_at(
                row,
                format!("expected {} columns, got {len}", headers.len()),
            ),
            _ => Error::schema_at(row, e),
        })?;
        if record.len() != header.roles.len() {
            return Err(Error::schema_at(
                row,
                format!("expected {} columns, got {}", header.roles.len(), record.len()),
            ));
        }
        let mut features = vec![0.0; header.feature_count];
        let mut rate_pair = [1.0, 1.0];
        let mut label = 0usize;
        for ((cell, role), name) in record.iter().zip(&header.roles).zip(headers.iter()) {
            match *role {
                Role::Feature(f) => features[f] = parse_real_cell(cell, row, name)?,
                Role::Rate(r) => {
                    let v = parse_real_cell(cell, row, name)?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::schema_at(
                            row,
                            format!("column '{name}' is {cell}, outside [0, 1]"),
                        ));
                    }
                    rate_pair[r] = v;
                }
                Role::Label => {
                    let v: i64 = cell.parse().map_err(|e: std::num::ParseIntError| {
                        Error::Parse {
                            row,
                            column: name.to_string(),
                            message: e.to_string(),
                        }
                    })?;
                    if v != 0 && v != 1 {
                        return Err(Error::schema_at(row, format!("label {v} outside {{0, 1}}")));
                    }
                    label = v as usize;
                }
            }
        }
        instances.push(LabeledInstance {
            features: FeatureVector::new(features)?,
            label,
        });
        if header.has_rates {
            rates.extend_from_slice(&rate_pair);
        }
    }
    if header.has_rates {
        Dataset::with_rates(header.feature_count, LabelSpace::binary(), instances, rates)
    } else {
        Dataset::new(header.feature_count, LabelSpace::binary(), instances)
    }
}

/// Parse a dataset file.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(std::io::BufReader::new(file))
}

fn csv_bytes(data: &Dataset, predictions: Option<&[f64]>) -> Result<Vec<u8>> {
    if data.label_space().len() != 2 {
        return Err(Error::schema(format!(
            "only binary-label datasets can be written as CSV, this one has {} labels",
            data.label_space().len()
        )));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..data.feature_count()).map(|i| format!("f{i}")).collect();
    if data.has_rates() {
        header.push("s0".into());
        header.push("s1".into());
    }
    header.push("y".into());
    if predictions.is_some() {
        header.push("pred".into());
    }
    wtr.write_record(&header).expect("in-memory write");
    for (n, inst) in data.instances().iter().enumerate() {
        let mut record: Vec<String> = inst.features.values().iter().map(|v| real(*v)).collect();
        if let Some(pair) = data.rates_of(n) {
            record.extend(pair.iter().map(|v| real(*v)));
        }
        record.push(inst.label.to_string());
        if let Some(preds) = predictions {
            record.push(real(preds[n]));
        }
        wtr.write_record(&record).expect("in-memory write");
    }
    Ok(wtr.into_inner().expect("in-memory flush"))
}

/// The CSV bytes for a dataset, canonical column order. Only binary-label
/// datasets have a file form.
pub fn dataset_to_csv(data: &Dataset) -> Result<Vec<u8>> {
    csv_bytes(data, None)
}

/// Write a dataset file (see [`dataset_to_csv`] for the format).
pub fn write_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = dataset_to_csv(data)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Write the dataset with a trailing `pred` column holding one probability
/// per instance. The result is a report, not a dataset file: the extra
/// column makes it unreadable by [`read_dataset`] on purpose.
pub fn write_dataset_with_predictions(
    data: &Dataset,
    predictions: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    if predictions.len() != data.len() {
        return Err(Error::domain(format!(
            "{} predictions for {} instances",
            predictions.len(),
            data.len()
        )));
    }
    let path = path.as_ref();
    let bytes = csv_bytes(data, Some(predictions))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// A trained model plus the context needed to interpret it: the ridge
/// strength it was fit with and how its sample ratios were obtained
/// ("constant" or "per-instance").
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: LogisticModel,
    pub lambda: f64,
    pub train_s_r_mode: String,
}

/// The JSON text for a model document, reals at 17 significant digits.
pub fn model_to_json(doc: &ModelDocument) -> String {
    let weights = doc
        .model
        .weights
        .iter()
        .map(|w| real(*w))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "{{\n  \"intercept\": {},\n  \"weights\": [{}],\n  \"feature_count\": {},\n  \"lambda\": {},\n  \"train_s_r_mode\": {}\n}}\n",
        real(doc.model.intercept),
        weights,
        doc.model.feature_count(),
        real(doc.lambda),
        serde_json::to_string(&doc.train_s_r_mode).expect("strings always serialize"),
    )
}

pub fn model_from_json(text: &str) -> Result<ModelDocument> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        intercept: f64,
        weights: Vec<f64>,
        feature_count: usize,
        lambda: f64,
        train_s_r_mode: String,
    }
    let raw: Raw =
        serde_json::from_str(text).map_err(|e| Error::schema(format!("model document: {e}")))?;
    if raw.weights.len() != raw.feature_count {
        return Err(Error::schema(format!(
            "model document declares feature_count {} but has {} weights",
            raw.feature_count,
            raw.weights.len()
        )));
    }
    if !raw.lambda.is_finite() || raw.lambda < 0.0 {
        return Err(Error::schema(format!(
            "model document lambda is {}, must be finite and nonnegative",
            raw.lambda
        )));
    }
    let model = LogisticModel::new(raw.intercept, raw.weights)
        .map_err(|e| Error::schema(format!("model document: {e}")))?;
    Ok(ModelDocument {
        model,
        lambda: raw.lambda,
        train_s_r_mode: raw.train_s_r_mode,
    })
}

pub fn write_model(doc: &ModelDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(doc)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::schema(format!("manifest serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::schema(format!("{what}: {e}")))
}

pub fn write_truth_manifest(manifest: &TruthManifest, path: impl AsRef<Path>) -> Result<()> {
    write_json(manifest, path.as_ref())
}

pub fn read_truth_manifest(path: impl AsRef<Path>) -> Result<TruthManifest> {
    read_json(path.as_ref(), "truth manifest")
}

pub fn write_sampling_manifest(manifest: &SamplingManifest, path: impl AsRef<Path>) -> Result<()> {
    write_json(manifest, path.as_ref())
}

pub fn read_sampling_manifest(path: impl AsRef<Path>) -> Result<SamplingManifest> {
    read_json(path.as_ref(), "sampling manifest")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SamplingSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roundtrip(data: &Dataset) -> Dataset {
        let bytes = dataset_to_csv(data).unwrap();
        read_dataset_from(bytes.as_slice()).unwrap()
    }

    fn random_dataset(n: usize, features: usize, with_rates: bool, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances: Vec<LabeledInstance> = (0..n)
            .map(|_| LabeledInstance {
                features: FeatureVector::new(
                    (0..features)
                        .map(|_| (rng.random::<f64>() - 0.5) * 2e3)
                        .collect(),
                )
                .unwrap(),
                label: usize::from(rng.random::<f64>() < 0.5),
            })
            .collect();
        if with_rates {
            let rates = (0..2 * n).map(|_| rng.random::<f64>()).collect();
            Dataset::with_rates(features, LabelSpace::binary(), instances, rates).unwrap()
        } else {
            Dataset::new(features, LabelSpace::binary(), instances).unwrap()
        }
    }

    #[test]
    fn single_row_parses() {
        let data = read_dataset_from("f0,y\n1.5,1\n".as_bytes()).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.feature_count(), 1);
        assert_eq!(data.instances()[0].features.values(), &[1.5]);
        assert_eq!(data.instances()[0].label, 1);
        assert!(!data.has_rates());
    }

    #[test]
    fn rate_columns_attach_per_instance() {
        let data = read_dataset_from("f0,s0,s1,y\n0.0,0.25,1.0,0\n".as_bytes()).unwrap();
        assert!(data.has_rates());
        assert_eq!(data.rates_of(0), Some(&[0.25, 1.0][..]));
    }

    #[test]
    fn columns_may_arrive_in_any_order() {
        let data = read_dataset_from("y,f1,s1,f0,s0\n1,2.0,0.5,1.0,0.125\n".as_bytes()).unwrap();
        assert_eq!(data.instances()[0].features.values(), &[1.0, 2.0]);
        assert_eq!(data.rates_of(0), Some(&[0.125, 0.5][..]));
    }

    #[test]
    fn schema_violations_are_rejected() {
        let cases: &[(&str, &str)] = &[
            ("f0\n1.0\n", "missing y"),
            ("f0,z,y\n1.0,2.0,0\n", "unknown column"),
            ("f1,y\n1.0,0\n", "gap in feature indices"),
            ("f0,f0,y\n1.0,1.0,0\n", "duplicate feature"),
            ("f01,y\n1.0,0\n", "non-canonical feature name"),
            ("f0,s0,y\n1.0,0.5,0\n", "s0 without s1"),
            ("f0,y,y\n1.0,0,0\n", "duplicate label column"),
            ("", "empty input"),
        ];
        for (text, what) in cases {
            let err = read_dataset_from(text.as_bytes()).unwrap_err();
            assert!(matches!(err, Error::Schema(_)), "{what}: {err:?}");
        }
    }

    #[test]
    fn bad_label_names_the_row() {
        let err = read_dataset_from("f0,y\n1.0,1\n2.0,2\n".as_bytes()).unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("row 2"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_cells_carry_row_and_column() {
        let err = read_dataset_from("f0,y\nnot-a-number,0\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "f0");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_and_ragged_rows_are_schema_errors() {
        let err = read_dataset_from("f0,y\ninf,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err:?}");
        let err = read_dataset_from("f0,f1,y\n1.0,2.0,0\n1.0,0\n".as_bytes()).unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("row 2"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let err = read_dataset_from("f0,s0,s1,y\n0.0,1.5,1.0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err:?}");
    }

    #[test]
    fn round_trips_preserve_bits_and_bytes() {
        let empty = Dataset::new(1, LabelSpace::binary(), vec![]).unwrap();
        let one = random_dataset(1, 3, false, 1);
        let big = random_dataset(1000, 4, true, 2);
        for data in [&empty, &one, &big] {
            let back = roundtrip(data);
            assert_eq!(&back, data);
            // second write is byte-stable
            assert_eq!(dataset_to_csv(&back).unwrap(), dataset_to_csv(data).unwrap());
        }
    }

    #[test]
    fn no_feature_columns_is_legal() {
        let data = read_dataset_from("y\n1\n0\n".as_bytes()).unwrap();
        assert_eq!(data.feature_count(), 0);
        assert_eq!(data.len(), 2);
        assert_eq!(roundtrip(&data), data);
    }

    #[test]
    fn file_round_trip_and_missing_file_context() {
        let dir = std::env::temp_dir().join(format!("biascorrect-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        let data = random_dataset(50, 2, true, 3);
        write_dataset(&data, &path).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), data);

        let missing = dir.join("nope.csv");
        let err = read_dataset(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.csv"), "{err}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn model_documents_round_trip_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let hundred: Vec<f64> = (0..100).map(|_| (rng.random::<f64>() - 0.5) * 2e8).collect();
        let cases = vec![
            ModelDocument {
                model: LogisticModel::new(0.0, vec![]).unwrap(),
                lambda: 0.0,
                train_s_r_mode: "constant".into(),
            },
            ModelDocument {
                model: LogisticModel::new(-2.0, vec![1.0, -0.5]).unwrap(),
                lambda: 0.1,
                train_s_r_mode: "per-instance".into(),
            },
            ModelDocument {
                model: LogisticModel::new(1e-300, hundred).unwrap(),
                lambda: 3.5,
                train_s_r_mode: "constant".into(),
            },
        ];
        for doc in cases {
            let text = model_to_json(&doc);
            let back = model_from_json(&text).unwrap();
            assert_eq!(back.model.intercept.to_bits(), doc.model.intercept.to_bits());
            assert_eq!(back.model.weights.len(), doc.model.weights.len());
            for (a, b) in back.model.weights.iter().zip(&doc.model.weights) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            assert_eq!(back.lambda.to_bits(), doc.lambda.to_bits());
            assert_eq!(back.train_s_r_mode, doc.train_s_r_mode);
        }
    }

    #[test]
    fn model_document_schema_is_enforced() {
        assert!(model_from_json("{}").is_err());
        let missing = r#"{"intercept": 0.0, "weights": [], "feature_count": 0, "lambda": 0.0}"#;
        assert!(model_from_json(missing).is_err());
        let mismatch = r#"{"intercept": 0.0, "weights": [1.0], "feature_count": 2,
                           "lambda": 0.0, "train_s_r_mode": "constant"}"#;
        assert!(matches!(model_from_json(mismatch), Err(Error::Schema(_))));
        let negative_lambda = r#"{"intercept": 0.0, "weights": [], "feature_count": 0,
                                  "lambda": -1.0, "train_s_r_mode": "constant"}"#;
        assert!(model_from_json(negative_lambda).is_err());
    }

    #[test]
    fn manifests_round_trip() {
        let dir = std::env::temp_dir().join(format!("biascorrect-manifest-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();

        let truth = TruthManifest {
            intercept: -2.0,
            weights: vec![1.0, -0.5],
            seed: 42,
            n: 1000,
        };
        let tp = dir.join("truth.json");
        write_truth_manifest(&truth, &tp).unwrap();
        assert_eq!(read_truth_manifest(&tp).unwrap(), truth);

        let sampling = SamplingManifest {
            seed: 7,
            spec: SamplingSpec::binary_constant(0.25, 1.0).unwrap(),
            original_count: 402_000,
            retained_count: 102_000,
            retained_per_label: vec![100_000, 2_000],
        };
        let sp = dir.join("sampling.json");
        write_sampling_manifest(&sampling, &sp).unwrap();
        assert_eq!(read_sampling_manifest(&sp).unwrap(), sampling);
        fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in proptest::collection::vec(
                (proptest::collection::vec(-1e300f64..1e300, 3), 0usize..2, 0.0f64..=1.0, 0.0f64..=1.0),
                0..40,
            ),
        ) {
            let mut instances = Vec::new();
            let mut rates = Vec::new();
            for (values, label, s0, s1) in rows {
                instances.push(LabeledInstance {
                    features: FeatureVector::new(values).unwrap(),
                    label,
                });
                rates.push(s0);
                rates.push(s1);
            }
            let data = Dataset::with_rates(3, LabelSpace::binary(), instances, rates).unwrap();
            let back = roundtrip(&data);
            prop_assert_eq!(&back, &data);
            prop_assert_eq!(dataset_to_csv(&back).unwrap(), dataset_to_csv(&data).unwrap());
        }
    }
}
