//! Streaming extrema identification over a three-sample window.

use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    Maxima,
    Minima,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Maxima, Polarity::Minima];
}

/// How runs of equal samples are reported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Both comparators are non-strict: every sample of a plateau that
    /// dominates its neighbours is reported, as the comparator hardware does.
    #[default]
    PaperFaithful,
    /// A plateau is reported once, at its first sample, and only if it is a
    /// true turning point (entered rising and left falling for maxima).
    StrictFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaRecord<T> {
    pub index: usize,
    pub value: T,
    pub kind: Polarity,
}

/// Single-polarity extrema detector fed one sample at a time.
#[derive(Debug, Clone)]
pub struct ExtremaStream<T> {
    polarity: Polarity,
    policy: TiePolicy,
    prev2: Option<T>,
    prev1: Option<T>,
    next_index: Option<usize>,
    candidate: Option<(usize, T)>,
    count: usize,
}

impl<T: Copy + PartialOrd> ExtremaStream<T> {
    pub fn new(polarity: Polarity, policy: TiePolicy) -> Self {
        Self {
            polarity,
            policy,
            prev2: None,
            prev1: None,
            next_index: None,
            candidate: None,
            count: 0,
        }
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    /// Number of records emitted so far.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Earliest already-pushed index that may still be emitted later.
    pub fn pending_from(&self) -> Option<usize> {
        match self.policy {
            TiePolicy::PaperFaithful => self.next_index.map(|n| n - 1),
            TiePolicy::StrictFirst => self.candidate.map(|(i, _)| i),
        }
    }

    /// `a` dominates `b` (non-strictly) in this stream's polarity.
    fn dominates(&self, a: T, b: T) -> bool {
        match self.polarity {
            Polarity::Maxima => a >= b,
            Polarity::Minima => a <= b,
        }
    }

    fn strictly_dominates(&self, a: T, b: T) -> bool {
        match self.polarity {
            Polarity::Maxima => a > b,
            Polarity::Minima => a < b,
        }
    }

    pub fn push(&mut self, sample: T, index: usize) -> Result<Option<ExtremaRecord<T>>> {
        if let Some(expected) = self.next_index {
            if index != expected {
                return Err(MemdError::Index {
                    expected,
                    got: index,
                });
            }
        }
        self.next_index = Some(index + 1);

        let record = match self.policy {
            TiePolicy::PaperFaithful => match (self.prev2, self.prev1) {
                (Some(left), Some(mid))
                    if self.dominates(mid, left) && self.dominates(mid, sample) =>
                {
                    Some(ExtremaRecord {
                        index: index - 1,
                        value: mid,
                        kind: self.polarity,
                    })
                }
                _ => None,
            },
            TiePolicy::StrictFirst => match self.prev1 {
                Some(prev) if self.strictly_dominates(sample, prev) => {
                    self.candidate = Some((index, sample));
                    None
                }
                Some(prev) if self.strictly_dominates(prev, sample) => {
                    self.candidate.take().map(|(i, v)| ExtremaRecord {
                        index: i,
                        value: v,
                        kind: self.polarity,
                    })
                }
                _ => None,
            },
        };

        self.prev2 = self.prev1;
        self.prev1 = Some(sample);
        if record.is_some() {
            self.count += 1;
        }
        Ok(record)
    }
}

/// Batch extrema detection; the first and last samples are never reported.
pub fn detect_extrema<T: Copy + PartialOrd>(
    signal: &[T],
    polarity: Polarity,
    policy: TiePolicy,
) -> Result<Vec<ExtremaRecord<T>>> {
    if signal.len() < 3 {
        return Err(MemdError::TooShort {
            needed: 3,
            got: signal.len(),
        });
    }
    let mut stream = ExtremaStream::new(polarity, policy);
    let mut out = Vec::new();
    for (i, &s) in signal.iter().enumerate() {
        if let Some(r) = stream.push(s, i)? {
            out.push(r);
        }
    }
    Ok(out)
}

/// Collapses runs of records at adjacent indices with equal values onto the
/// first record of the run.
pub fn dedup_adjacent<T: Copy + PartialEq>(records: &mut Vec<ExtremaRecord<T>>) {
    let mut last: Option<(usize, T)> = None;
    records.retain(|r| {
        let keep = !matches!(last, Some((i, v)) if r.index == i + 1 && r.value == v);
        last = Some((r.index, r.value));
        keep
    });
}
