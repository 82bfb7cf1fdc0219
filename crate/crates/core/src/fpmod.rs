//! Finitely presented `O`-modules and their Smith normal form over the DVR.
//!
//! Convention: rows are relations, columns are generators; the module is the cokernel
//! of the relations matrix acting on row vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dvr::{Dvr, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error("relation {row} has {len} entries, expected {generators}")]
    RaggedRow {
        row: usize,
        len: usize,
        generators: usize,
    },
    #[error("{labels} generator labels given for {generators} generators")]
    LabelCount { labels: usize, generators: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation<E> {
    generators: usize,
    labels: Vec<String>,
    relations: Vec<Vec<E>>,
}

impl<E: Clone> Presentation<E> {
    pub fn new(generators: usize, relations: Vec<Vec<E>>) -> Result<Self, PresentationError> {
        let labels = (1..=generators).map(|j| format!("e{j}")).collect();
        Self::with_labels(labels, relations)
    }

    pub fn with_labels(
        labels: Vec<String>,
        relations: Vec<Vec<E>>,
    ) -> Result<Self, PresentationError> {
        let generators = labels.len();
        if let Some((row, r)) = relations
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != generators)
        {
            return Err(PresentationError::RaggedRow {
                row,
                len: r.len(),
                generators,
            });
        }
        Ok(Self {
            generators,
            labels,
            relations,
        })
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn relations(&self) -> &[Vec<E>] {
        &self.relations
    }

    pub fn column_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn push_relation(&mut self, row: Vec<E>) -> Result<(), PresentationError> {
        if row.len() != self.generators {
            return Err(PresentationError::RaggedRow {
                row: self.relations.len(),
                len: row.len(),
                generators: self.generators,
            });
        }
        self.relations.push(row);
        Ok(())
    }

    /// Entry-wise valuations, used for reporting.
    pub fn valuation_matrix<D: Dvr<Elem = E>>(&self, dvr: &D) -> Vec<Vec<Option<u32>>> {
        self.relations
            .iter()
            .map(|row| row.iter().map(|e| dvr.ord(e).finite()).collect())
            .collect()
    }
}

/// Elementary divisor data of a cokernel: `⊕ O/ϖ^d ⊕ O^free_rank`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SnfResult {
    /// Valuations of the nonzero elementary divisors, nondecreasing. Zeros (unit
    /// divisors) are kept; they kill a generator and add nothing to the length.
    pub divisor_valuations: Vec<u32>,
    pub free_rank: usize,
}

impl SnfResult {
    pub fn torsion_length(&self) -> u64 {
        torsion_length(self)
    }

    pub fn free_rank(&self) -> usize {
        free_rank(self)
    }

    /// Valuations of the divisors that contribute torsion (those with `d > 0`).
    pub fn torsion_divisors(&self) -> Vec<u32> {
        self.divisor_valuations
            .iter()
            .copied()
            .filter(|&d| d > 0)
            .collect()
    }
}

pub fn torsion_length(snf: &SnfResult) -> u64 {
    snf.divisor_valuations.iter().map(|&d| d as u64).sum()
}

pub fn free_rank(snf: &SnfResult) -> usize {
    snf.free_rank
}

/// Smith normal form over the local PID `O`.
///
/// The pivot is always an entry of minimal valuation in the remaining block (lowest row,
/// then lowest column on ties). Such an entry divides every other entry, so each step
/// is a single exact elimination.
pub fn snf<D: Dvr>(dvr: &D, presentation: &Presentation<D::Elem>) -> SnfResult {
    let cols = presentation.generators();
    let mut m: Vec<Vec<D::Elem>> = presentation.relations().to_vec();
    let rows = m.len();
    let mut divisors = Vec::new();

    for k in 0..rows.min(cols) {
        let mut pivot: Option<(usize, usize, Valuation)> = None;
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, e) in row.iter().enumerate().skip(k) {
                let v = dvr.ord(e);
                if v.is_finite() && pivot.is_none_or(|(_, _, best)| v < best) {
                    pivot = Some((i, j, v));
                }
            }
        }
        let Some((pi, pj, pv)) = pivot else { break };
        m.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        let p = m[k][k].clone();

        for i in (k + 1)..rows {
            if dvr.is_zero(&m[i][k]) {
                continue;
            }
            let f = dvr
                .divide_exact(&m[i][k], &p)
                .expect("minimal-valuation pivot divides its column");
            for j in k..cols {
                let delta = dvr.mul(&f, &m[k][j]);
                m[i][j] = dvr.sub(&m[i][j], &delta);
            }
        }
        // Column clearing only touches row k: everything below the pivot is now zero.
        for j in (k + 1)..cols {
            m[k][j] = dvr.zero();
        }
        divisors.push(pv.finite().expect("pivot is nonzero"));
    }

    divisors.sort_unstable();
    SnfResult {
        free_rank: cols - divisors.len(),
        divisor_valuations: divisors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr::{PolyDvr, RationalDvr};

    fn pi<D: Dvr>(d: &D, k: u32) -> D::Elem {
        d.uniformizer_power(k)
    }

    #[test]
    fn already_diagonal() {
        let d = RationalDvr::new(5).unwrap();
        let p = Presentation::new(2, vec![vec![pi(&d, 2), d.zero()]]).unwrap();
        let s = snf(&d, &p);
        assert_eq!(s.divisor_valuations, vec![2]);
        assert_eq!(s.free_rank, 1);
    }

    #[test]
    fn single_row_pivots_on_minimal_valuation() {
        // Column reduction by hand: (ϖ⁵, ϖ²) ~ (ϖ⁵ - ϖ³·ϖ², ϖ²) = (0, ϖ²).
        let d = PolyDvr::new(5).unwrap();
        let p = Presentation::new(2, vec![vec![pi(&d, 5), pi(&d, 2)]]).unwrap();
        let s = snf(&d, &p);
        assert_eq!(s.divisor_valuations, vec![2]);
        assert_eq!(s.free_rank, 1);
    }

    #[test]
    fn diagonal_three_generators() {
        let d = RationalDvr::new(5).unwrap();
        let z = d.zero();
        let p = Presentation::new(
            3,
            vec![
                vec![pi(&d, 1), z.clone(), z.clone()],
                vec![z.clone(), pi(&d, 3), z.clone()],
            ],
        )
        .unwrap();
        let s = snf(&d, &p);
        assert_eq!(s.divisor_valuations, vec![1, 3]);
        assert_eq!(s.free_rank, 1);
        assert_eq!(torsion_length(&s), 4);
    }

    #[test]
    fn lengths_from_divisors() {
        let mk = |v: Vec<u32>| SnfResult {
            divisor_valuations: v,
            free_rank: 0,
        };
        assert_eq!(torsion_length(&mk(vec![])), 0);
        assert_eq!(torsion_length(&mk(vec![2, 3])), 5);
        assert_eq!(torsion_length(&mk(vec![1, 1, 4])), 6);
    }

    #[test]
    fn zero_relations_are_free() {
        let d = RationalDvr::new(5).unwrap();
        let p = Presentation::new(4, vec![vec![d.zero(); 4]]).unwrap();
        assert_eq!(free_rank(&snf(&d, &p)), 4);
        let empty: Presentation<_> = Presentation::new(4, vec![]).unwrap();
        assert_eq!(snf(&d, &empty).free_rank, 4);
    }

    #[test]
    fn non_diagonal_two_by_two() {
        // [[ϖ, ϖ], [ϖ, ϖ³]]: det = ϖ⁴ - ϖ² has valuation 2, gcd of entries ϖ.
        let d = RationalDvr::new(5).unwrap();
        let p = Presentation::new(
            2,
            vec![vec![pi(&d, 1), pi(&d, 1)], vec![pi(&d, 1), pi(&d, 3)]],
        )
        .unwrap();
        let s = snf(&d, &p);
        assert_eq!(s.divisor_valuations, vec![1, 1]);
        assert_eq!(s.free_rank, 0);
    }

    #[test]
    fn ragged_rows_rejected() {
        let d = RationalDvr::new(5).unwrap();
        let err = Presentation::new(2, vec![vec![d.one()]]).unwrap_err();
        assert_eq!(
            err,
            PresentationError::RaggedRow {
                row: 0,
                len: 1,
                generators: 2
            }
        );
    }
}
