//! Observer ratings: the six-point scale, merging two observers, and the
//! three-class aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rating {
    VeryGood = 1,
    Good = 2,
    SlightlyGood = 3,
    SlightlyBad = 4,
    Bad = 5,
    VeryBad = 6,
}

impl Rating {
    pub const ALL: [Rating; 6] = [
        Rating::VeryGood,
        Rating::Good,
        Rating::SlightlyGood,
        Rating::SlightlyBad,
        Rating::Bad,
        Rating::VeryBad,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Rating> {
        Rating::ALL.get(code.checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Rating::VeryGood => "VeryGood",
            Rating::Good => "Good",
            Rating::SlightlyGood => "SlightlyGood",
            Rating::SlightlyBad => "SlightlyBad",
            Rating::Bad => "Bad",
            Rating::VeryBad => "VeryBad",
        }
    }

    /// Distance of the code from the scale centre 3.5, doubled to stay integral.
    fn off_centre(self) -> usize {
        (2 * self.code()).abs_diff(7)
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, ' ' | '_' | '-'))
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for Rating {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = squash(s);
        Rating::ALL
            .into_iter()
            .find(|r| squash(r.name()) == key)
            .ok_or_else(|| format!("unknown rating {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThreeClass {
    Good = 1,
    Ok = 2,
    Bad = 3,
}

impl ThreeClass {
    pub const ALL: [ThreeClass; 3] = [ThreeClass::Good, ThreeClass::Ok, ThreeClass::Bad];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ThreeClass::Good => "Good",
            ThreeClass::Ok => "OK",
            ThreeClass::Bad => "Bad",
        }
    }
}

pub fn aggregate_to_three(rating: Rating) -> ThreeClass {
    match rating {
        Rating::VeryGood | Rating::Good => ThreeClass::Good,
        Rating::SlightlyGood | Rating::SlightlyBad => ThreeClass::Ok,
        Rating::Bad | Rating::VeryBad => ThreeClass::Bad,
    }
}

/// Which class scheme a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Six,
    Three,
}

impl Scheme {
    pub fn k(self) -> usize {
        match self {
            Scheme::Six => 6,
            Scheme::Three => 3,
        }
    }

    /// 1-based class code of a rating under this scheme.
    pub fn class_of(self, rating: Rating) -> usize {
        match self {
            Scheme::Six => rating.code(),
            Scheme::Three => aggregate_to_three(rating).code(),
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Scheme::Six => Rating::ALL.iter().map(|r| r.name()).collect(),
            Scheme::Three => ThreeClass::ALL.iter().map(|c| c.name()).collect(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Six => "six",
            Scheme::Three => "three",
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "six" | "6" => Ok(Scheme::Six),
            "three" | "3" => Ok(Scheme::Three),
            other => Err(format!("unknown class scheme {other:?}")),
        }
    }
}

/// One observer's ratings keyed by pass index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub observer: String,
    pub ratings: BTreeMap<usize, Rating>,
}

impl LabelSet {
    pub fn new(observer: impl Into<String>) -> Self {
        LabelSet {
            observer: observer.into(),
            ratings: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Ratings in pass-index order.
    pub fn values(&self) -> Vec<Rating> {
        self.ratings.values().copied().collect()
    }
}

fn check_coverage(a: &LabelSet, b: &LabelSet) -> Result<()> {
    if a.ratings.keys().ne(b.ratings.keys()) {
        return Err(Error::Coverage(format!(
            "observers {} and {} rate different passes",
            a.observer, b.observer
        )));
    }
    Ok(())
}

/// Ground truth from two observers: equal ratings stand; otherwise the one
/// nearer the scale centre wins, and `a` wins exact ties.
pub fn merge_labels(a: &LabelSet, b: &LabelSet) -> Result<LabelSet> {
    check_coverage(a, b)?;
    let ratings = a
        .ratings
        .iter()
        .map(|(&i, &ra)| {
            let rb = b.ratings[&i];
            let pick = if rb.off_centre() < ra.off_centre() { rb } else { ra };
            (i, pick)
        })
        .collect();
    Ok(LabelSet {
        observer: "merged".into(),
        ratings,
    })
}

/// Passes whose two ratings are at least `threshold` scale steps apart.
pub fn disagreement_report(a: &LabelSet, b: &LabelSet, threshold: usize) -> Result<Vec<usize>> {
    check_coverage(a, b)?;
    Ok(a
        .ratings
        .iter()
        .filter(|(i, ra)| ra.code().abs_diff(b.ratings[i].code()) >= threshold)
        .map(|(&i, _)| i)
        .collect())
}

/// Reads a `pass_index,observer_id,rating` file into one set per observer,
/// ordered by observer id.
pub fn read_labels(path: &Path) -> Result<Vec<LabelSet>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["pass_index", "observer_id", "rating"] {
        return Err(Error::schema(1, "expected header pass_index,observer_id,rating"));
    }
    let mut sets: BTreeMap<String, LabelSet> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::schema(line, "expected 3 fields"));
        }
        let pass: usize = rec[0]
            .parse()
            .map_err(|_| Error::schema(line, format!("bad pass_index {:?}", &rec[0])))?;
        let observer = rec[1].to_string();
        let rating: Rating = rec[2].parse().map_err(|e: String| Error::schema(line, e))?;
        let set = sets
            .entry(observer.clone())
            .or_insert_with(|| LabelSet::new(observer.clone()));
        if set.ratings.insert(pass, rating).is_some() {
            return Err(Error::schema(
                line,
                format!("observer {observer} rates pass {pass} twice"),
            ));
        }
    }
    Ok(sets.into_values().collect())
}

pub fn labels_to_csv(sets: &[LabelSet]) -> String {
    let mut s = String::from("pass_index,observer_id,rating\n");
    for set in sets {
        for (i, r) in &set.ratings {
            writeln!(s, "{i},{},{r}", set.observer).unwrap();
        }
    }
    s
}

pub fn write_labels(sets: &[LabelSet], path: &Path) -> Result<()> {
    std::fs::write(path, labels_to_csv(sets))?;
    Ok(())
}

/// One observer's labels, or the merge of the first two.
pub fn ground_truth(sets: &[LabelSet]) -> Result<LabelSet> {
    match sets {
        [] => Err(Error::Precondition("label file holds no ratings".into())),
        [only] => Ok(only.clone()),
        [a, b, ..] => merge_labels(a, b),
    }
}

/// Per-class counts of a reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCountRow {
    pub class: Rating,
    pub relative_frequency: Option<f64>,
    pub count: usize,
}

/// Reads `class,relative_frequency,count` rows (the frequency may be empty).
pub fn read_class_counts(path: &Path) -> Result<Vec<ClassCountRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::schema(line, "expected class,relative_frequency,count"));
        }
        let class: Rating = rec[0].parse().map_err(|e: String| Error::schema(line, e))?;
        let relative_frequency = if rec[1].is_empty() {
            None
        } else {
            Some(
                rec[1]
                    .parse()
                    .map_err(|_| Error::schema(line, format!("bad frequency {:?}", &rec[1])))?,
            )
        };
        let count = rec[2]
            .parse()
            .map_err(|_| Error::schema(line, format!("bad count {:?}", &rec[2])))?;
        rows.push(ClassCountRow {
            class,
            relative_frequency,
            count,
        });
    }
    Ok(rows)
}

/// Result of checking a six-class count table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCountCheck {
    pub total: usize,
    pub counts: BTreeMap<Rating, usize>,
    pub three_class: BTreeMap<ThreeClass, usize>,
}

impl ClassCountCheck {
    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<14} {:>9} {:>6}", "Class", "Rel.freq", "Count").unwrap();
        for (r, &c) in &self.counts {
            writeln!(s, "{:<14} {:>9.3} {:>6}", r.name(), c as f64 / self.total as f64, c).unwrap();
        }
        writeln!(s, "{:<14} {:>9} {:>6}", "Total", "", self.total).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "{:<14} {:>9} {:>6}", "Three-class", "Rel.freq", "Count").unwrap();
        for (c, &n) in &self.three_class {
            writeln!(s, "{:<14} {:>9.3} {:>6}", c.name(), n as f64 / self.total as f64, n).unwrap();
        }
        s
    }
}

/// Checks that every class appears once, that stated relative frequencies
/// match the counts to the printed three decimals, and that the total equals
/// `expected_total` when given.
pub fn check_class_counts(rows: &[ClassCountRow], expected_total: Option<usize>) -> Result<ClassCountCheck> {
    let mut counts = BTreeMap::new();
    for row in rows {
        if counts.insert(row.class, row.count).is_some() {
            return Err(Error::Integrity(format!("class {} listed twice", row.class)));
        }
    }
    if counts.len() != Rating::ALL.len() {
        return Err(Error::Integrity(format!("expected 6 classes, got {}", counts.len())));
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::Integrity("class counts sum to zero".into()));
    }
    if let Some(expected) = expected_total {
        if total != expected {
            return Err(Error::Integrity(format!("counts sum to {total}, expected {expected}")));
        }
    }
    for row in rows {
        if let Some(f) = row.relative_frequency {
            let actual = row.count as f64 / total as f64;
            if (actual - f).abs() > 0.0005 + 1e-12 {
                return Err(Error::Integrity(format!(
                    "class {}: stated frequency {f} but count gives {actual:.4}",
                    row.class
                )));
            }
        }
    }
    let mut three_class = BTreeMap::new();
    for (&r, &c) in &counts {
        *three_class.entry(aggregate_to_three(r)).or_insert(0) += c;
    }
    Ok(ClassCountCheck {
        total,
        counts,
        three_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Rating::*;

    fn set(name: &str, ratings: &[Rating]) -> LabelSet {
        LabelSet {
            observer: name.into(),
            ratings: ratings.iter().copied().enumerate().collect(),
        }
    }

    #[test]
    fn merge_examples() {
        let a = set("a", &[SlightlyGood, VeryGood, SlightlyGood, SlightlyBad, VeryBad]);
        let b = set("b", &[SlightlyGood, SlightlyGood, SlightlyBad, SlightlyGood, Good]);
        let m = merge_labels(&a, &b).unwrap();
        assert_eq!(m.values(), [SlightlyGood, SlightlyGood, SlightlyGood, SlightlyBad, Good]);
        let short = set("c", &[Good]);
        assert!(matches!(merge_labels(&a, &short), Err(Error::Coverage(_))));
    }

    #[test]
    fn three_class_mapping() {
        assert_eq!(aggregate_to_three(VeryGood), ThreeClass::Good);
        assert_eq!(aggregate_to_three(SlightlyBad), ThreeClass::Ok);
        assert_eq!(aggregate_to_three(VeryBad), ThreeClass::Bad);
        let codes: Vec<usize> = Rating::ALL.iter().map(|&r| Scheme::Three.class_of(r)).collect();
        assert!(codes.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn disagreement_threshold() {
        let a = set("a", &[VeryGood, SlightlyGood, Bad]);
        let b = set("b", &[SlightlyGood, SlightlyBad, Bad]);
        assert_eq!(disagreement_report(&a, &b, 2).unwrap(), vec![0]);
        assert!(disagreement_report(&a, &a, 2).unwrap().is_empty());
    }

    #[test]
    fn rating_names_parse_loosely() {
        assert_eq!("slightly good".parse::<Rating>(), Ok(SlightlyGood));
        assert_eq!("VERY_BAD".parse::<Rating>(), Ok(VeryBad));
        assert!("great".parse::<Rating>().is_err());
        assert_eq!(Rating::from_code(4), Some(SlightlyBad));
        assert_eq!(Rating::from_code(0), None);
    }
}
