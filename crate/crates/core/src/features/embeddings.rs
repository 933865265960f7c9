//! Pre-trained word vectors in the plain text format `token v1 ... vd`, with
//! an optional `count dim` header line (fastText / word2vec text style).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::FeatureError;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self, FeatureError> {
        if dimension == 0 {
            return Err(FeatureError::EmbeddingFormat {
                line: 0,
                message: "dimension must be positive".into(),
            });
        }
        Ok(EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        })
    }

    /// Inserts unless the (lower-cased) token is already present.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool, FeatureError> {
        if vector.len() != self.dimension {
            return Err(FeatureError::DimensionMismatch {
                line: 0,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        let key = token.to_lowercase();
        if self.vectors.contains_key(&key) {
            return Ok(false);
        }
        self.vectors.insert(key, vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let file = File::open(path.as_ref())?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, FeatureError> {
        let mut dimension: Option<usize> = None;
        let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
        let mut first = true;
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if std::mem::take(&mut first) && fields.len() == 2 {
                if let (Ok(_count), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    dimension = Some(dim);
                    continue;
                }
            }
            let values = fields[1..]
                .iter()
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| FeatureError::EmbeddingFormat {
                            line: lineno,
                            message: format!("non-numeric value `{v}`"),
                        })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let expected = *dimension.get_or_insert(values.len());
            if values.len() != expected || expected == 0 {
                return Err(FeatureError::DimensionMismatch {
                    line: lineno,
                    expected,
                    found: values.len(),
                });
            }
            vectors.entry(fields[0].to_lowercase()).or_insert(values);
        }
        let dimension = dimension.ok_or(FeatureError::EmbeddingFormat {
            line: 0,
            message: "no vectors".into(),
        })?;
        Ok(EmbeddingTable { dimension, vectors })
    }

    /// Writes the table with a header, tokens sorted for reproducible output.
    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vectors.len(), self.dimension)?;
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        for k in keys {
            write!(w, "{k}")?;
            for v in &self.vectors[k] {
                write!(w, " {v:.6}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
