//! Distortion model: classify a (source, candidate) character pair into one
//! of five similarity types and look up its channel probability.
//!
//! Precedence resolves overlaps, identical first, then same pinyin, similar
//! pinyin, similar shape, and finally unrelated. "Same pinyin" means an
//! identical toneless syllable. "Similar pinyin" compares syllables after
//! decomposition into initial + final: two distinct syllables are similar
//! when they differ in at most one of the two components, where listed fuzzy
//! pairs (zh/z, n/l, an/ang, ...) count as matching. Shape similarity comes
//! from a symmetric lookup table.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::error::Error;
use std::fmt;
use std::io::{self, BufRead};

use crate::scalar::{ln_prob, Scalar};
use crate::types::Token;

/// The five distortion types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistortionType {
    Identical,
    SamePinyin,
    SimilarPinyin,
    SimilarShape,
    Unrelated,
}

impl DistortionType {
    pub const ALL: [DistortionType; 5] = [
        DistortionType::Identical,
        DistortionType::SamePinyin,
        DistortionType::SimilarPinyin,
        DistortionType::SimilarShape,
        DistortionType::Unrelated,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DistortionType::Identical => "identical",
            DistortionType::SamePinyin => "same_pinyin",
            DistortionType::SimilarPinyin => "similar_pinyin",
            DistortionType::SimilarShape => "similar_shape",
            DistortionType::Unrelated => "unrelated",
        }
    }

    fn index(self) -> usize {
        match self {
            DistortionType::Identical => 0,
            DistortionType::SamePinyin => 1,
            DistortionType::SimilarPinyin => 2,
            DistortionType::SimilarShape => 3,
            DistortionType::Unrelated => 4,
        }
    }
}

impl fmt::Display for DistortionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Channel probability per distortion type.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionTable<S: Scalar> {
    probs: [S; 5],
}

impl<S: Scalar> Default for DistortionTable<S> {
    fn default() -> Self {
        // Default channel distribution over the five types.
        DistortionTable {
            probs: [
                S::from_f64_lossy(0.962),
                S::from_f64_lossy(0.023),
                S::from_f64_lossy(0.008),
                S::from_f64_lossy(0.004),
                S::from_f64_lossy(0.003),
            ],
        }
    }
}

impl<S: Scalar> DistortionTable<S> {
    /// Builds a table from explicit probabilities, in `DistortionType::ALL`
    /// order. Every entry must lie in (0, 1].
    pub fn new(probs: [S; 5]) -> Result<Self, DistortionError> {
        for (ty, &p) in DistortionType::ALL.iter().zip(&probs) {
            if !(p > S::zero() && p <= S::one()) {
                return Err(DistortionError::InvalidProbability {
                    ty: *ty,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(DistortionTable { probs })
    }

    pub fn prob(&self, ty: DistortionType) -> S {
        self.probs[ty.index()]
    }

    pub fn log_prob(&self, ty: DistortionType) -> S {
        ln_prob(self.prob(ty))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistortionError {
    InvalidProbability { ty: DistortionType, value: f64 },
    SliceLengthMismatch { slice_len: usize, token_len: usize },
}

impl fmt::Display for DistortionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistortionError::InvalidProbability { ty, value } => {
                write!(f, "probability for {ty} must be in (0, 1], got {value}")
            }
            DistortionError::SliceLengthMismatch {
                slice_len,
                token_len,
            } => {
                write!(
                    f,
                    "source slice length {slice_len} does not match token length {token_len}"
                )
            }
        }
    }
}

impl Error for DistortionError {}

/// Pinyin, shape, and fuzzy-pair resources backing the pair classifier.
///
/// Shape similarity and the fuzzy relation are closed symmetrically at
/// construction. Confusion sets (all characters related to a given one by a
/// non-identical, non-unrelated type) are precomputed.
#[derive(Debug, Clone, Default)]
pub struct SimilarityResources {
    pinyin: HashMap<char, BTreeSet<String>>,
    shape: HashMap<char, BTreeSet<char>>,
    fuzzy: HashSet<(String, String)>,
    same_pinyin: HashMap<char, BTreeSet<char>>,
    similar_pinyin: HashMap<char, BTreeSet<char>>,
    universe: BTreeSet<char>,
}

impl SimilarityResources {
    pub fn empty() -> Self {
        SimilarityResources::default()
    }

    pub fn new(
        pinyin: HashMap<char, BTreeSet<String>>,
        shape_pairs: impl IntoIterator<Item = (char, char)>,
        fuzzy_pairs: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        let mut shape: HashMap<char, BTreeSet<char>> = HashMap::new();
        for (a, b) in shape_pairs {
            if a == b {
                continue;
            }
            shape.entry(a).or_default().insert(b);
            shape.entry(b).or_default().insert(a);
        }
        let mut fuzzy = HashSet::new();
        for (a, b) in fuzzy_pairs {
            if a == b {
                continue;
            }
            fuzzy.insert((b.clone(), a.clone()));
            fuzzy.insert((a, b));
        }

        let mut res = SimilarityResources {
            pinyin,
            shape,
            fuzzy,
            same_pinyin: HashMap::new(),
            similar_pinyin: HashMap::new(),
            universe: BTreeSet::new(),
        };
        res.build_indexes();
        res
    }

    fn build_indexes(&mut self) {
        let mut by_syllable: BTreeMap<&str, BTreeSet<char>> = BTreeMap::new();
        for (&c, syls) in &self.pinyin {
            self.universe.insert(c);
            for s in syls {
                by_syllable.entry(s.as_str()).or_default().insert(c);
            }
        }
        for (&c, set) in &self.shape {
            self.universe.insert(c);
            self.universe.extend(set.iter().copied());
        }

        let syllables: Vec<&str> = by_syllable.keys().copied().collect();
        let mut similar_syl: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (i, &a) in syllables.iter().enumerate() {
            for &b in &syllables[i + 1..] {
                if syllables_similar(a, b, &self.fuzzy) {
                    similar_syl.entry(a).or_default().push(b);
                    similar_syl.entry(b).or_default().push(a);
                }
            }
        }

        for (&c, syls) in &self.pinyin {
            let mut same = BTreeSet::new();
            let mut similar = BTreeSet::new();
            for s in syls {
                if let Some(chars) = by_syllable.get(s.as_str()) {
                    same.extend(chars.iter().copied());
                }
                if let Some(neighbors) = similar_syl.get(s.as_str()) {
                    for t in neighbors {
                        if let Some(chars) = by_syllable.get(t) {
                            similar.extend(chars.iter().copied());
                        }
                    }
                }
            }
            same.remove(&c);
            // Same-pinyin takes precedence over similar-pinyin.
            for x in &same {
                similar.remove(x);
            }
            similar.remove(&c);
            if !same.is_empty() {
                self.same_pinyin.insert(c, same);
            }
            if !similar.is_empty() {
                self.similar_pinyin.insert(c, similar);
            }
        }
    }

    pub fn syllables_of(&self, c: char) -> Option<&BTreeSet<String>> {
        self.pinyin.get(&c)
    }

    pub fn shape_set(&self, c: char) -> Option<&BTreeSet<char>> {
        self.shape.get(&c)
    }

    /// All characters known to the resources.
    pub fn universe(&self) -> &BTreeSet<char> {
        &self.universe
    }

    /// Characters related to `c` by the given non-identical type. Unrelated
    /// returns the universe minus `c` and everything related to it.
    pub fn relation_set(&self, c: char, ty: DistortionType) -> BTreeSet<char> {
        match ty {
            DistortionType::Identical => BTreeSet::from([c]),
            DistortionType::SamePinyin => self.same_pinyin.get(&c).cloned().unwrap_or_default(),
            DistortionType::SimilarPinyin => {
                self.similar_pinyin.get(&c).cloned().unwrap_or_default()
            }
            DistortionType::SimilarShape => self.shape.get(&c).cloned().unwrap_or_default(),
            DistortionType::Unrelated => {
                let mut set = self.universe.clone();
                set.remove(&c);
                for related in [&self.same_pinyin, &self.similar_pinyin, &self.shape] {
                    if let Some(r) = related.get(&c) {
                        for x in r {
                            set.remove(x);
                        }
                    }
                }
                set
            }
        }
    }

    /// Union of the same-pinyin, similar-pinyin, and shape sets of `c`.
    pub fn confusion_set(&self, c: char) -> BTreeSet<char> {
        let mut set = BTreeSet::new();
        if let Some(s) = self.same_pinyin.get(&c) {
            set.extend(s.iter().copied());
        }
        if let Some(s) = self.similar_pinyin.get(&c) {
            set.extend(s.iter().copied());
        }
        if let Some(s) = self.shape.get(&c) {
            set.extend(s.iter().copied());
        }
        set.remove(&c);
        set
    }
}

/// Pinyin initials, longest first so prefix matching is unambiguous.
const INITIALS: [&str; 23] = [
    "zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j", "q", "x", "r",
    "z", "c", "s", "y", "w",
];

/// Splits a toneless syllable into (initial, final). Zero-initial syllables
/// ("an", "er") yield an empty initial.
pub fn split_syllable(s: &str) -> (&str, &str) {
    for init in INITIALS {
        if let Some(rest) = s.strip_prefix(init) {
            if !rest.is_empty() {
                return (init, rest);
            }
        }
    }
    ("", s)
}

fn is_fuzzy(a: &str, b: &str, fuzzy: &HashSet<(String, String)>) -> bool {
    fuzzy.contains(&(a.to_string(), b.to_string()))
}

/// Two distinct syllables are similar when they are one edit apart over the
/// (initial, final) decomposition — exactly one component differs — or when
/// every differing component is a listed fuzzy pair (zh/z, an/ang, ...).
/// Whole syllables listed as a fuzzy pair are similar as well.
pub fn syllables_similar(a: &str, b: &str, fuzzy: &HashSet<(String, String)>) -> bool {
    if a == b {
        return false;
    }
    if is_fuzzy(a, b, fuzzy) {
        return true;
    }
    let (ia, fa) = split_syllable(a);
    let (ib, fb) = split_syllable(b);
    let differing = usize::from(ia != ib) + usize::from(fa != fb);
    if differing == 1 {
        return true;
    }
    let unforgiven = usize::from(ia != ib && !is_fuzzy(ia, ib, fuzzy))
        + usize::from(fa != fb && !is_fuzzy(fa, fb, fuzzy));
    unforgiven == 0
}

/// Classifies a character pair into exactly one distortion type.
///
/// Total and pure: characters absent from the resources fall through to
/// `Unrelated` unless the characters are equal.
pub fn classify_pair(a: char, b: char, res: &SimilarityResources) -> DistortionType {
    if a == b {
        return DistortionType::Identical;
    }
    if res.same_pinyin.get(&a).is_some_and(|s| s.contains(&b)) {
        return DistortionType::SamePinyin;
    }
    if res.similar_pinyin.get(&a).is_some_and(|s| s.contains(&b)) {
        return DistortionType::SimilarPinyin;
    }
    if res.shape.get(&a).is_some_and(|s| s.contains(&b)) {
        return DistortionType::SimilarShape;
    }
    DistortionType::Unrelated
}

/// ln p(type(a, b)) under the given table.
pub fn distortion_logprob<S: Scalar>(
    a: char,
    b: char,
    table: &DistortionTable<S>,
    res: &SimilarityResources,
) -> S {
    table.log_prob(classify_pair(a, b, res))
}

/// Token-level distortion score: the sum of per-character log-probabilities
/// over the aligned source slice.
pub fn token_distortion_logprob<S: Scalar>(
    source_slice: &[char],
    token: &Token,
    table: &DistortionTable<S>,
    res: &SimilarityResources,
) -> Result<S, DistortionError> {
    if source_slice.len() != token.chars.len() {
        return Err(DistortionError::SliceLengthMismatch {
            slice_len: source_slice.len(),
            token_len: token.chars.len(),
        });
    }
    let mut sum = S::zero();
    for (&a, &b) in source_slice.iter().zip(&token.chars) {
        sum = sum + distortion_logprob(a, b, table, res);
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Resource file loading.
//
// Pinyin file:     char TAB syllable[,syllable...]   (toneless, lowercase)
// Shape file:      char TAB char[,char...]
// Fuzzy-pair file: a TAB b
//
// `#` comments and blank lines are skipped everywhere.
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum ResourceError {
    Io(io::Error),
    Parse {
        file: &'static str,
        line: usize,
        message: String,
    },
}

impl fmt::Display for ResourceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceError::Io(e) => write!(f, "io error: {e}"),
            ResourceError::Parse {
                file,
                line,
                message,
            } => {
                write!(f, "{file} file, line {line}: {message}")
            }
        }
    }
}

impl Error for ResourceError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            ResourceError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for ResourceError {
    fn from(e: io::Error) -> Self {
        ResourceError::Io(e)
    }
}

fn single_char(field: &str, file: &'static str, line: usize) -> Result<char, ResourceError> {
    let mut chars = field.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(ResourceError::Parse {
            file,
            line,
            message: format!("expected a single character, got {field:?}"),
        }),
    }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = io::Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| match line {
            Ok(l) => {
                let t = l.trim().to_string();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((idx + 1, t)))
                }
            }
            Err(e) => Some(Err(e)),
        })
}

/// Parses the three resource files into [`SimilarityResources`].
pub fn load_resources<R1: BufRead, R2: BufRead, R3: BufRead>(
    pinyin: R1,
    shape: R2,
    fuzzy: R3,
) -> Result<SimilarityResources, ResourceError> {
    let mut pinyin_map: HashMap<char, BTreeSet<String>> = HashMap::new();
    for item in data_lines(pinyin) {
        let (lineno, line) = item?;
        let (c, rest) = line.split_once('\t').ok_or_else(|| ResourceError::Parse {
            file: "pinyin",
            line: lineno,
            message: "missing TAB separator".into(),
        })?;
        let c = single_char(c, "pinyin", lineno)?;
        let entry = pinyin_map.entry(c).or_default();
        for syl in rest.split(',') {
            let syl = syl.trim();
            if syl.is_empty() {
                return Err(ResourceError::Parse {
                    file: "pinyin",
                    line: lineno,
                    message: "empty syllable".into(),
                });
            }
            entry.insert(syl.to_lowercase());
        }
    }

    let mut shape_pairs = Vec::new();
    for item in data_lines(shape) {
        let (lineno, line) = item?;
        let (c, rest) = line.split_once('\t').ok_or_else(|| ResourceError::Parse {
            file: "shape",
            line: lineno,
            message: "missing TAB separator".into(),
        })?;
        let c = single_char(c, "shape", lineno)?;
        for other in rest.split(',') {
            let other = single_char(other.trim(), "shape", lineno)?;
            shape_pairs.push((c, other));
        }
    }

    let mut fuzzy_pairs = Vec::new();
    for item in data_lines(fuzzy) {
        let (lineno, line) = item?;
        let (a, b) = line.split_once('\t').ok_or_else(|| ResourceError::Parse {
            file: "fuzzy",
            line: lineno,
            message: "missing TAB separator".into(),
        })?;
        fuzzy_pairs.push((a.trim().to_lowercase(), b.trim().to_lowercase()));
    }

    Ok(SimilarityResources::new(
        pinyin_map,
        shape_pairs,
        fuzzy_pairs,
    ))
}
