//! JSON documents for matrices, distributions, trajectories and sample
//! lists. State indices in files are 1-based.

use serde::{Deserialize, Serialize};

use crate::chain::{ProbVector, TransitionMatrix};
use crate::error::{ChainError, Result};
use crate::sampling::Trajectory;

/// Row sums in files may be off by this much; rows are renormalized.
pub const FILE_ROW_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub d: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorDoc {
    pub d: usize,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDoc {
    pub d: usize,
    pub states: Vec<usize>,
}

/// Samples over an alphabet `{1, …, n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesDoc {
    pub n: usize,
    pub samples: Vec<usize>,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| ChainError::Parse(e.to_string()))
}

fn renormalize(v: &[f64], what: &str) -> Result<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > FILE_ROW_TOL {
        return Err(ChainError::MalformedMatrix(format!("{what} sums to {sum}")));
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

pub fn matrix_from_json(text: &str) -> Result<TransitionMatrix> {
    let doc: MatrixDoc = parse(text)?;
    if doc.rows.len() != doc.d {
        return Err(ChainError::ShapeMismatch { expected: doc.d, got: doc.rows.len() });
    }
    if let Some(r) = doc.rows.iter().find(|r| r.len() != doc.d) {
        return Err(ChainError::ShapeMismatch { expected: doc.d, got: r.len() });
    }
    for (i, row) in doc.rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|x| *x < 0.0) {
            return Err(ChainError::NegativeEntry(i, j));
        }
    }
    let rows = doc
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| renormalize(r, &format!("row {}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    TransitionMatrix::new(rows)
}

pub fn matrix_to_doc(p: &TransitionMatrix) -> MatrixDoc {
    MatrixDoc { d: p.d(), rows: p.rows() }
}

pub fn vector_from_json(text: &str) -> Result<ProbVector> {
    let doc: VectorDoc = parse(text)?;
    if doc.p.len() != doc.d {
        return Err(ChainError::ShapeMismatch { expected: doc.d, got: doc.p.len() });
    }
    if let Some(i) = doc.p.iter().position(|x| *x < 0.0) {
        return Err(ChainError::MalformedVector(format!("entry {} is negative", i + 1)));
    }
    let p = renormalize(&doc.p, "vector").map_err(|e| ChainError::MalformedVector(e.to_string()))?;
    ProbVector::new(p)
}

pub fn vector_to_doc(p: &ProbVector) -> VectorDoc {
    VectorDoc { d: p.d(), p: p.as_slice().to_vec() }
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    let doc: TrajectoryDoc = parse(text)?;
    let states = to_zero_based(&doc.states, doc.d)?;
    Trajectory::observed(doc.d, states)
}

pub fn trajectory_to_doc(t: &Trajectory) -> TrajectoryDoc {
    TrajectoryDoc { d: t.d, states: t.states.iter().map(|s| s + 1).collect() }
}

/// Returns the alphabet size and 0-based samples.
pub fn samples_from_json(text: &str) -> Result<(usize, Vec<usize>)> {
    let doc: SamplesDoc = parse(text)?;
    let samples = to_zero_based(&doc.samples, doc.n)?;
    Ok((doc.n, samples))
}

fn to_zero_based(xs: &[usize], d: usize) -> Result<Vec<usize>> {
    xs.iter()
        .map(|&s| {
            if s == 0 || s > d {
                Err(ChainError::TrajectoryAlphabetMismatch { state: s, d })
            } else {
                Ok(s - 1)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rows_are_renormalized() {
        let p = matrix_from_json(r#"{"d": 2, "rows": [[0.5, 0.500000001], [0.25, 0.75]]}"#).unwrap();
        assert!((p.get(0, 0) + p.get(0, 1) - 1.0).abs() < 1e-15);
        assert!(matrix_from_json(r#"{"d": 2, "rows": [[0.5, 0.6], [0.25, 0.75]]}"#).is_err());
        assert!(matrix_from_json(r#"{"d": 2, "rows": [[1.5, -0.5], [0.25, 0.75]]}"#).is_err());
        assert!(matrix_from_json(r#"{"d": 3, "rows": [[1.0]]}"#).is_err());
    }

    #[test]
    fn trajectory_is_one_based() {
        let t = trajectory_from_json(r#"{"d": 3, "states": [1, 3, 2]}"#).unwrap();
        assert_eq!(t.states, vec![0, 2, 1]);
        assert_eq!(trajectory_to_doc(&t).states, vec![1, 3, 2]);
        assert!(trajectory_from_json(r#"{"d": 3, "states": [0]}"#).is_err());
        assert!(trajectory_from_json(r#"{"d": 3, "states": [4]}"#).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let p = TransitionMatrix::new(vec![vec![0.1, 0.9], vec![0.3, 0.7]]).unwrap();
        let text = serde_json::to_string(&matrix_to_doc(&p)).unwrap();
        assert_eq!(matrix_from_json(&text).unwrap(), p);
    }
}
