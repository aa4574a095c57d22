//! Text-format vector serialization.
//!
//! The main file uses the common embedding text format: a `V dim` header
//! followed by one `token x1 … x_dim` row per word, six decimals per
//! coordinate. When subword information is enabled, a sidecar file
//! (`<path>.subword`) stores the configuration and the bucket rows
//! reachable from the vocabulary's n-grams, which is what out-of-vocabulary
//! serving needs after reload.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::subword::{word_bucket_indices, SubwordConfig};
use super::vocab::Vocab;
use super::{EmbeddingModel, Matrix};

fn write_row(out: &mut String, label: &str, row: &[f64]) {
    out.push_str(label);
    for x in row {
        let _ = write!(out, " {x:.6}");
    }
    out.push('\n');
}

/// Save the served (composed) vocabulary vectors, plus the subword sidecar
/// when applicable.
pub fn save_vectors(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", model.vocab.len(), model.dim);
    for idx in 0..model.vocab.len() {
        write_row(&mut out, model.vocab.token(idx), &model.composed(idx));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))?;

    if model.subword.enabled {
        if let Some(buckets) = &model.buckets {
            let mut reachable: BTreeSet<usize> = BTreeSet::new();
            for idx in 0..model.vocab.len() {
                reachable.extend(word_bucket_indices(model.vocab.token(idx), &model.subword));
            }
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{} {} {}",
                model.subword.n_min, model.subword.n_max, model.subword.bucket_count
            );
            for b in reachable {
                write_row(&mut out, &b.to_string(), buckets.row(b));
            }
            let sidecar = sidecar_path(path);
            std::fs::write(&sidecar, out).map_err(|e| Error::io(sidecar, e))?;
        }
    }
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".subword");
    std::path::PathBuf::from(s)
}

fn parse_floats(parts: &[&str], source: &str, line: usize) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>().map_err(|_| Error::Parse {
                path: source.to_string(),
                line,
                msg: format!("bad float '{p}'"),
            })
        })
        .collect()
}

/// Load a text-format vector file (and its subword sidecar when present)
/// into a serving model.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: source.clone(),
        line: 1,
        msg: "empty vector file".into(),
    })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Parse {
            path: source.clone(),
            line: 1,
            msg: "header must be 'V dim'".into(),
        });
    }
    let v: usize = parts[0].parse().map_err(|_| Error::Parse {
        path: source.clone(),
        line: 1,
        msg: "bad vocabulary size".into(),
    })?;
    let dim: usize = parts[1].parse().map_err(|_| Error::Parse {
        path: source.clone(),
        line: 1,
        msg: "bad dimension".into(),
    })?;

    let mut tokens = Vec::with_capacity(v);
    let mut words = Matrix::zeros(v, dim);
    let mut row = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if row >= v {
            return Err(Error::Parse {
                path: source.clone(),
                line: lineno + 1,
                msg: format!("more rows than the declared {v}"),
            });
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line");
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(Error::Parse {
                path: source.clone(),
                line: lineno + 1,
                msg: format!("{} coordinates, expected {dim}", values.len()),
            });
        }
        tokens.push(token.to_string());
        words.row_mut(row).copy_from_slice(&parse_floats(&values, &source, lineno + 1)?);
        row += 1;
    }
    if row != v {
        return Err(Error::Parse {
            path: source.clone(),
            line: row + 1,
            msg: format!("header declares {v} rows, found {row}"),
        });
    }

    let sidecar = sidecar_path(path);
    let (subword, buckets) = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let source = sidecar.display().to_string();
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: source.clone(),
            line: 1,
            msg: "empty subword file".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                path: source.clone(),
                line: 1,
                msg: "header must be 'n_min n_max buckets'".into(),
            });
        }
        let nums: Vec<usize> = parse_floats(&parts, &source, 1)?
            .into_iter()
            .map(|x| x as usize)
            .collect();
        let cfg = SubwordConfig {
            n_min: nums[0],
            n_max: nums[1],
            bucket_count: nums[2],
            enabled: true,
        };
        let mut buckets = Matrix::zeros(cfg.bucket_count, dim);
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let idx: usize = parts
                .next()
                .expect("non-empty line")
                .parse()
                .map_err(|_| Error::Parse {
                    path: source.clone(),
                    line: lineno + 1,
                    msg: "bad bucket index".into(),
                })?;
            if idx >= cfg.bucket_count {
                return Err(Error::Parse {
                    path: source.clone(),
                    line: lineno + 1,
                    msg: format!("bucket {idx} out of range"),
                });
            }
            let values: Vec<&str> = parts.collect();
            if values.len() != dim {
                return Err(Error::Parse {
                    path: source.clone(),
                    line: lineno + 1,
                    msg: format!("{} coordinates, expected {dim}", values.len()),
                });
            }
            buckets
                .row_mut(idx)
                .copy_from_slice(&parse_floats(&values, &source, lineno + 1)?);
        }
        (cfg, Some(buckets))
    } else {
        (SubwordConfig::disabled(), None)
    };

    let counts = vec![1; tokens.len()];
    Ok(EmbeddingModel {
        dim,
        vocab: Vocab::from_parts(tokens, counts, 1),
        subword,
        words,
        buckets,
        precomposed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::super::train::{train_skipgram, TrainOpts};
    use super::*;

    fn trained(subword: bool) -> EmbeddingModel {
        let lines: Vec<String> = (0..30)
            .map(|i| format!("taux de créatinine {} mesuré", i % 4))
            .collect();
        let opts = TrainOpts {
            dim: 8,
            epochs: 2,
            subword: if subword {
                SubwordConfig { bucket_count: 512, ..SubwordConfig::default() }
            } else {
                SubwordConfig::disabled()
            },
            seed: 7,
            ..TrainOpts::default()
        };
        train_skipgram(&lines, &opts).unwrap().0
    }

    #[test]
    fn round_trip_within_format_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        for subword in [false, true] {
            let model = trained(subword);
            save_vectors(&model, &path).unwrap();
            let loaded = load_vectors(&path).unwrap();
            assert_eq!(loaded.vocab.len(), model.vocab.len());
            for idx in 0..model.vocab.len() {
                let token = model.vocab.token(idx);
                let (orig, _) = model.word_vector(token);
                let (back, oov) = loaded.word_vector(token);
                assert!(!oov);
                for (a, b) in orig.iter().zip(&back) {
                    assert!((a - b).abs() < 1e-5, "{token}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn oov_serving_survives_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        let model = trained(true);
        save_vectors(&model, &path).unwrap();
        let loaded = load_vectors(&path).unwrap();
        let (v, oov) = loaded.word_vector("créatininémie");
        assert!(oov);
        assert!(v.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn header_row_count_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "3 2\na 0.1 0.2\nb 0.3 0.4\n").unwrap();
        let err = load_vectors(&path).unwrap_err();
        assert!(err.to_string().contains("found 2"), "{err}");
    }

    #[test]
    fn standard_tool_output_loads() {
        // hand-written file in the common text format
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w2v.txt");
        std::fs::write(&path, "2 3\nchat 0.5 -0.25 1.0\nchien 0.125 0.0 -1.5\n").unwrap();
        let model = load_vectors(&path).unwrap();
        let (v, oov) = model.word_vector("chat");
        assert!(!oov);
        assert_eq!(v, vec![0.5, -0.25, 1.0]);
        assert_eq!(model.nearest("chat", 1)[0].0, "chien");
    }
}
