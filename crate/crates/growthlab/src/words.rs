//! Words in the locally free (semi)group on generators `g_1 .. g_N`.
//!
//! The only relations are `g_k g_m = g_m g_k` for `|k - m| >= 2`: adjacent
//! generators do not commute. Positive words are in bijection with numbered
//! heaps of cells; the canonical ("normal order") representative pushes
//! smaller indices as far left as commutation allows. Signed words support
//! the colored cancellation move `g_i ... g_i^{-1} -> ...` when the pair can
//! be brought together across commuting letters.

use crate::deposition::{ColumnSequence, HeightProfile};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One generator letter: index in `1..=N`, sign -1 for the inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub index: u32,
    pub sign: i8,
}

impl Letter {
    pub fn gen(index: u32) -> Self {
        Letter { index, sign: 1 }
    }

    pub fn inv(index: u32) -> Self {
        Letter { index, sign: -1 }
    }

    pub fn is_inverse_of(&self, other: &Letter) -> bool {
        self.index == other.index && self.sign == -other.sign
    }
}

/// Letters commute exactly when their indices are at least 2 apart.
#[inline]
pub fn commutes(a: &Letter, b: &Letter) -> bool {
    a.index.abs_diff(b.index) >= 2
}

/// A word over `N` generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub n_generators: u32,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(n_generators: u32, letters: Vec<Letter>) -> Result<Self> {
        if let Some(l) = letters
            .iter()
            .find(|l| l.index == 0 || l.index > n_generators || (l.sign != 1 && l.sign != -1))
        {
            return Err(Error::Domain(format!("letter {l:?} out of range")));
        }
        Ok(Word { n_generators, letters })
    }

    /// Positive word from 1-based generator indices.
    pub fn from_indices(n_generators: u32, idx: &[u32]) -> Result<Self> {
        Word::new(n_generators, idx.iter().map(|&i| Letter::gen(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|l| l.sign == 1)
    }

    /// The deposition events this word encodes (positive words only);
    /// letter `g_i` maps to column `i - 1`.
    pub fn to_columns(&self) -> Result<ColumnSequence> {
        if !self.is_positive() {
            return Err(Error::Domain("signed word has no deposition reading".into()));
        }
        ColumnSequence::new(
            self.n_generators as usize,
            self.letters.iter().map(|l| l.index - 1).collect(),
        )
    }
}

/// Serialization: whitespace-separated signed 1-based indices, "3 6 1 -2".
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l.index as i64 * l.sign as i64)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        let mut max_idx = 0u32;
        for tok in s.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::Domain(format!("bad letter token {tok:?}")))?;
            if v == 0 {
                return Err(Error::Domain("letter index 0".into()));
            }
            let idx = v.unsigned_abs() as u32;
            max_idx = max_idx.max(idx);
            letters.push(if v > 0 { Letter::gen(idx) } else { Letter::inv(idx) });
        }
        Word::new(max_idx.max(1), letters)
    }
}

/// Canonical normal-order form of a positive word: repeatedly swap adjacent
/// commuting letters so the smaller index moves left, to fixpoint. The
/// result is unique and invariant under any legal pre-shuffle of the input.
pub fn normal_form(word: &Word) -> Result<Word> {
    if !word.is_positive() {
        return Err(Error::Domain("normal order is defined for positive words".into()));
    }
    let mut w = word.letters.clone();
    // stable bubble passes; O(T^2) worst case is fine at the sizes used here
    loop {
        let mut swapped = false;
        for i in 1..w.len() {
            if commutes(&w[i - 1], &w[i]) && w[i - 1].index > w[i].index {
                w.swap(i - 1, i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    Word::new(word.n_generators, w)
}

/// One deposited cell of a heap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    /// 1-based column, matching generator indices.
    pub column: u32,
    /// 1-based level above the floor.
    pub level: i64,
    /// 1-based position of the event in the generating word.
    pub timestamp: u32,
}

/// A numbered heap: cells with columns, levels, and drop timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heap {
    pub n_columns: u32,
    pub cells: Vec<Cell>,
}

impl Heap {
    /// Validate the support rule: each cell rests one above the highest
    /// earlier cell within one column of it (floor if none).
    pub fn validate(&self) -> Result<()> {
        let n = self.n_columns as usize;
        let mut h = vec![0i64; n];
        let mut cells = self.cells.clone();
        cells.sort_by_key(|c| c.timestamp);
        for (k, c) in cells.iter().enumerate() {
            if c.column == 0 || c.column > self.n_columns {
                return Err(Error::Validation(format!("cell column {} out of range", c.column)));
            }
            if c.timestamp as usize != k + 1 {
                return Err(Error::Validation("timestamps are not 1..T".into()));
            }
            let i = (c.column - 1) as usize;
            let mut m = h[i];
            if i > 0 {
                m = m.max(h[i - 1]);
            }
            if i + 1 < n {
                m = m.max(h[i + 1]);
            }
            if c.level != m + 1 {
                return Err(Error::Validation(format!(
                    "cell at column {} level {} violates the support rule (expected {})",
                    c.column,
                    c.level,
                    m + 1
                )));
            }
            h[i] = c.level;
        }
        Ok(())
    }

    pub fn height_profile(&self) -> HeightProfile {
        let mut h = vec![0i64; self.n_columns as usize];
        for c in &self.cells {
            let i = (c.column - 1) as usize;
            h[i] = h[i].max(c.level);
        }
        HeightProfile::from_heights(h).expect("heap heights are non-negative")
    }
}

/// Drop the word's cells in order under the free-boundary landing rule.
pub fn word_to_heap(word: &Word) -> Result<Heap> {
    if !word.is_positive() {
        return Err(Error::Domain("only positive words build heaps".into()));
    }
    let n = word.n_generators as usize;
    let mut h = vec![0i64; n];
    let mut cells = Vec::with_capacity(word.len());
    for (k, l) in word.letters.iter().enumerate() {
        let i = (l.index - 1) as usize;
        let mut m = h[i];
        if i > 0 {
            m = m.max(h[i - 1]);
        }
        if i + 1 < n {
            m = m.max(h[i + 1]);
        }
        h[i] = m + 1;
        cells.push(Cell { column: l.index, level: h[i], timestamp: (k + 1) as u32 });
    }
    Ok(Heap { n_columns: word.n_generators, cells })
}

/// Read the normal-order word back off a heap by repeatedly extracting the
/// smallest-column minimal cell (a cell with no cell at level below it in
/// its own or a neighbouring column).
pub fn heap_to_word(heap: &Heap) -> Result<Word> {
    heap.validate()?;
    let mut remaining: Vec<Cell> = heap.cells.clone();
    // per-column sorted stacks of levels still present
    let mut letters = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        // minimal cells: nothing of lower level within one column
        let mut best: Option<usize> = None;
        for (k, c) in remaining.iter().enumerate() {
            let minimal = remaining.iter().all(|d| {
                d.column.abs_diff(c.column) > 1 || d.level >= c.level
            });
            if minimal {
                best = match best {
                    None => Some(k),
                    Some(b) => {
                        if remaining[k].column < remaining[b].column {
                            Some(k)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
        }
        let k = best.ok_or_else(|| Error::Validation("heap has no minimal cell".into()))?;
        letters.push(Letter::gen(remaining[k].column));
        remaining.swap_remove(k);
    }
    Word::new(heap.n_columns, letters)
}

/// Cancel `g_i g_i^{-1}` pairs that can be made adjacent using only
/// commutation moves; iterate to fixpoint. A non-commuting letter between a
/// pair blocks the cancellation. Output is the irreducible (geodesic) word;
/// sign-free words pass through unchanged.
pub fn reduce_colored(word: &Word) -> Word {
    let mut w = word.letters.clone();
    'outer: loop {
        for i in 0..w.len() {
            // scan left from letter i across commuting letters
            let mut j = i;
            while j > 0 {
                j -= 1;
                if commutes(&w[j], &w[i]) {
                    continue;
                }
                if w[j].is_inverse_of(&w[i]) {
                    // the pair annihilates
                    w.remove(i);
                    w.remove(j);
                    continue 'outer;
                }
                break; // blocked
            }
        }
        break;
    }
    Word { n_generators: word.n_generators, letters: w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn w(n: u32, idx: &[u32]) -> Word {
        Word::from_indices(n, idx).unwrap()
    }

    #[test]
    fn normal_form_thirteen_letter_example() {
        let input = w(6, &[3, 6, 1, 4, 1, 2, 5, 3, 1, 5, 3, 6, 2]);
        let expect = w(6, &[1, 1, 3, 2, 1, 4, 3, 3, 2, 6, 5, 5, 6]);
        assert_eq!(normal_form(&input).unwrap(), expect);
    }

    #[test]
    fn normal_form_small_cases() {
        assert_eq!(normal_form(&w(3, &[2, 1])).unwrap(), w(3, &[2, 1]));
        assert_eq!(normal_form(&w(3, &[3, 1])).unwrap(), w(3, &[1, 3]));
    }

    #[test]
    fn normal_form_idempotent_and_shuffle_invariant() {
        let mut rng = RngStream::new(12, 0);
        for _ in 0..300 {
            let n = 2 + rng.column(6) as u32;
            let len = rng.column(24);
            let idx: Vec<u32> = (0..len).map(|_| 1 + rng.column(n as usize) as u32).collect();
            let word = w(n, &idx);
            let nf = normal_form(&word).unwrap();
            assert_eq!(normal_form(&nf).unwrap(), nf, "idempotence");
            // legal random pre-shuffle: apply some allowed adjacent swaps
            let mut shuffled = word.letters.clone();
            for _ in 0..4 * len {
                if shuffled.len() < 2 {
                    break;
                }
                let i = 1 + rng.column(shuffled.len() - 1);
                if commutes(&shuffled[i - 1], &shuffled[i]) {
                    shuffled.swap(i - 1, i);
                }
            }
            let word2 = Word::new(n, shuffled).unwrap();
            assert_eq!(normal_form(&word2).unwrap(), nf, "shuffle invariance");
        }
    }

    #[test]
    fn word_heap_round_trip_examples() {
        let heap = word_to_heap(&w(3, &[2])).unwrap();
        assert_eq!(heap.cells, vec![Cell { column: 2, level: 1, timestamp: 1 }]);

        let heap = word_to_heap(&w(3, &[1, 2])).unwrap();
        assert_eq!(
            heap.cells,
            vec![
                Cell { column: 1, level: 1, timestamp: 1 },
                Cell { column: 2, level: 2, timestamp: 2 },
            ]
        );
    }

    #[test]
    fn heap_profile_matches_deposition_replay() {
        let word = w(6, &[3, 6, 1, 4, 1, 2, 5, 3, 1, 5, 3, 6, 2]);
        let heap = word_to_heap(&word).unwrap();
        let mut p = HeightProfile::flat(6);
        p.replay(&word.to_columns().unwrap(), crate::BoundaryCondition::Free)
            .unwrap();
        assert_eq!(heap.height_profile(), p);
    }

    #[test]
    fn heap_to_word_is_normal_order() {
        let word = w(6, &[3, 6, 1, 4, 1, 2, 5, 3, 1, 5, 3, 6, 2]);
        let expect = w(6, &[1, 1, 3, 2, 1, 4, 3, 3, 2, 6, 5, 5, 6]);
        let back = heap_to_word(&word_to_heap(&word).unwrap()).unwrap();
        assert_eq!(back, expect);
    }

    #[test]
    fn random_round_trips() {
        let mut rng = RngStream::new(5, 1);
        for _ in 0..2000 {
            let n = 2 + rng.column(7) as u32;
            let len = rng.column(40);
            let idx: Vec<u32> = (0..len).map(|_| 1 + rng.column(n as usize) as u32).collect();
            let word = w(n, &idx);
            let nf = normal_form(&word).unwrap();
            let back = heap_to_word(&word_to_heap(&word).unwrap()).unwrap();
            assert_eq!(back, nf);
            // height profiles agree through every representation
            assert_eq!(
                word_to_heap(&word).unwrap().height_profile(),
                word_to_heap(&nf).unwrap().height_profile()
            );
        }
    }

    #[test]
    fn bijection_on_short_words() {
        // over all positive words of length <= 6 on 4 generators, distinct
        // normal forms give distinct heaps and vice versa
        use std::collections::HashMap;
        let n = 4u32;
        let mut heap_by_nf: HashMap<String, Vec<Cell>> = HashMap::new();
        let mut stack = vec![Vec::<u32>::new()];
        while let Some(cur) = stack.pop() {
            if cur.len() < 6 {
                for g in 1..=n {
                    let mut next = cur.clone();
                    next.push(g);
                    stack.push(next);
                }
            }
            if cur.is_empty() {
                continue;
            }
            let word = w(n, &cur);
            let nf = normal_form(&word).unwrap().to_string();
            let heap = word_to_heap(&word).unwrap();
            // canonical heap encoding: sorted (column, level) pairs
            let mut enc: Vec<(u32, i64)> = heap.cells.iter().map(|c| (c.column, c.level)).collect();
            enc.sort_unstable();
            let heap_word = heap_to_word(&heap).unwrap().to_string();
            assert_eq!(heap_word, nf);
            if let Some(prev) = heap_by_nf.insert(nf.clone(), heap.cells.clone()) {
                let mut prev_enc: Vec<(u32, i64)> =
                    prev.iter().map(|c| (c.column, c.level)).collect();
                prev_enc.sort_unstable();
                assert_eq!(prev_enc, enc, "same normal form, different heap");
            }
        }
    }

    #[test]
    fn colored_reduction_cases() {
        // g1 g2 g2^{-1} -> g1
        let word = Word::new(2, vec![Letter::gen(1), Letter::gen(2), Letter::inv(2)]).unwrap();
        assert_eq!(reduce_colored(&word).letters, vec![Letter::gen(1)]);

        // g1 g2 g1^{-1} is blocked
        let word = Word::new(2, vec![Letter::gen(1), Letter::gen(2), Letter::inv(1)]).unwrap();
        assert_eq!(reduce_colored(&word).letters, word.letters);

        // g1 g3 g1^{-1} -> g3 (distant letters commute out of the way)
        let word = Word::new(3, vec![Letter::gen(1), Letter::gen(3), Letter::inv(1)]).unwrap();
        assert_eq!(reduce_colored(&word).letters, vec![Letter::gen(3)]);
    }

    #[test]
    fn colored_reduction_properties() {
        let mut rng = RngStream::new(8, 3);
        for _ in 0..500 {
            let n = 2 + rng.column(5) as u32;
            let len = rng.column(16);
            let letters: Vec<Letter> = (0..len)
                .map(|_| {
                    let idx = 1 + rng.column(n as usize) as u32;
                    if rng.flip() {
                        Letter::gen(idx)
                    } else {
                        Letter::inv(idx)
                    }
                })
                .collect();
            let word = Word::new(n, letters).unwrap();
            let red = reduce_colored(&word);
            assert!(red.len() <= word.len(), "reduction never grows the word");
            assert_eq!(reduce_colored(&red), red, "fixpoint");
            if word.is_positive() {
                assert_eq!(red, word, "identity on sign-free words");
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let word = Word::new(4, vec![Letter::gen(3), Letter::inv(2), Letter::gen(1)]).unwrap();
        let s = word.to_string();
        assert_eq!(s, "3 -2 1");
        let back: Word = s.parse().unwrap();
        assert_eq!(back.letters, word.letters);
    }

    #[test]
    fn heap_validation_rejects_floaters() {
        let heap = Heap {
            n_columns: 3,
            cells: vec![Cell { column: 2, level: 2, timestamp: 1 }],
        };
        assert!(heap.validate().is_err());
    }
}
