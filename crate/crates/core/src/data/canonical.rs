//! Canonical on-disk split files.
//!
//! * `<name>.train.rating`: `user \t item \t 1 \t timestamp`, sorted by `(user, item)`.
//! * `<name>.test.rating`: `user \t positive_item \t 1 \t timestamp`, one line per user.
//! * `<name>.test.negative`: `(user,positive_item) \t n1 \t … \t n100`.
//! * `<name>.stats`: `key \t value` lines (users, items, ratings, sparsity, …).

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{InteractionMatrix, SplitDataset, TestCase, TestPositive};

/// Paths of the canonical files for dataset `name` inside `dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub negatives: PathBuf,
    pub stats: PathBuf,
}

impl DatasetFiles {
    pub fn new(dir: &Path, name: &str) -> Self {
        Self {
            train: dir.join(format!("{name}.train.rating")),
            test: dir.join(format!("{name}.test.rating")),
            negatives: dir.join(format!("{name}.test.negative")),
            stats: dir.join(format!("{name}.stats")),
        }
    }

    /// Interprets `prefix` as `<dir>/<name>`.
    pub fn from_prefix(prefix: &Path) -> Self {
        let dir = prefix.parent().unwrap_or_else(|| Path::new("."));
        let name = prefix
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(dir, &name)
    }

    pub fn exist(&self) -> bool {
        self.train.is_file() && self.test.is_file() && self.negatives.is_file()
    }
}

/// Summary counts in the shape of a dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    /// Train plus held-out interactions.
    pub ratings: usize,
    pub train_ratings: usize,
    pub dropped_users: usize,
}

impl DatasetStats {
    pub fn of(split: &SplitDataset) -> Self {
        Self {
            users: split.num_users(),
            items: split.num_items(),
            ratings: split.total_interactions(),
            train_ratings: split.train.nnz(),
            dropped_users: split.dropped_users,
        }
    }

    pub fn sparsity(&self) -> f64 {
        1.0 - self.ratings as f64 / (self.users as f64 * self.items as f64)
    }

    pub fn to_text(&self) -> String {
        format!(
            "users\t{}\nitems\t{}\nratings\t{}\nsparsity\t{:.4}\ntrain_ratings\t{}\ndropped_users\t{}\n",
            self.users,
            self.items,
            self.ratings,
            self.sparsity(),
            self.train_ratings,
            self.dropped_users
        )
    }
}

/// A split together with its fixed test candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalDataset {
    pub split: SplitDataset,
    pub tests: Vec<TestCase>,
}

pub fn write_canonical(files: &DatasetFiles, split: &SplitDataset, tests: &[TestCase]) -> Result<()> {
    if let Some(dir) = files.train.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(&files.train)?);
    for u in 0..split.num_users() {
        for (&i, &t) in split.train.row(u).iter().zip(&split.train_timestamps[u]) {
            writeln!(w, "{u}\t{i}\t1\t{t}")?;
        }
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(&files.test)?);
    for t in &split.test {
        writeln!(w, "{}\t{}\t1\t{}", t.user, t.item, t.timestamp)?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(&files.negatives)?);
    for c in tests {
        write!(w, "({},{})", c.user, c.positive)?;
        for n in &c.negatives {
            write!(w, "\t{n}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    fs::write(&files.stats, DatasetStats::of(split).to_text())?;
    Ok(())
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    Ok(BufReader::new(File::open(path)?)
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l)))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad {what} {field:?}"),
    })
}

fn parse_rating_line(path: &Path, line: usize, text: &str) -> Result<(u32, u32, u64)> {
    let f: Vec<&str> = text.split('\t').collect();
    if f.len() != 4 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected 4 tab-separated fields, found {}", f.len()),
        });
    }
    Ok((
        parse_field(path, line, f[0], "user index")?,
        parse_field(path, line, f[1], "item index")?,
        parse_field(path, line, f[3], "timestamp")?,
    ))
}

/// Reads the three split files back. `M` and `N` are one past the largest
/// user and item index seen, and the stats file is ignored.
pub fn read_canonical(files: &DatasetFiles) -> Result<CanonicalDataset> {
    let mut train_pairs: Vec<(u32, u32, u64)> = Vec::new();
    for (n, l) in lines(&files.train)? {
        let l = l?;
        if l.is_empty() {
            continue;
        }
        train_pairs.push(parse_rating_line(&files.train, n, &l)?);
    }
    let mut test = Vec::new();
    for (n, l) in lines(&files.test)? {
        let l = l?;
        if l.is_empty() {
            continue;
        }
        let (user, item, timestamp) = parse_rating_line(&files.test, n, &l)?;
        if user as usize != test.len() {
            return Err(Error::Parse {
                path: files.test.clone(),
                line: n,
                message: format!("expected user {} (one line per user, in order)", test.len()),
            });
        }
        test.push(TestPositive { user, item, timestamp });
    }
    let mut tests = Vec::new();
    for (n, l) in lines(&files.negatives)? {
        let l = l?;
        if l.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: files.negatives.clone(),
            line: n,
            message,
        };
        let mut fields = l.split('\t');
        let head = fields.next().unwrap_or_default();
        let inner = head
            .strip_prefix('(')
            .and_then(|h| h.strip_suffix(')'))
            .ok_or_else(|| bad(format!("expected (user,item), found {head:?}")))?;
        let (u, i) = inner
            .split_once(',')
            .ok_or_else(|| bad(format!("expected (user,item), found {head:?}")))?;
        let user: u32 = parse_field(&files.negatives, n, u, "user index")?;
        let positive: u32 = parse_field(&files.negatives, n, i, "item index")?;
        let negatives = fields
            .map(|f| parse_field(&files.negatives, n, f, "item index"))
            .collect::<Result<Vec<u32>>>()?;
        if let Some(t) = test.get(user as usize) {
            if t.item != positive {
                return Err(bad(format!(
                    "positive {positive} disagrees with test file item {}",
                    t.item
                )));
            }
        }
        tests.push(TestCase {
            user,
            positive,
            negatives,
        });
    }

    let num_users = train_pairs
        .iter()
        .map(|p| p.0)
        .chain(test.iter().map(|t| t.user))
        .max()
        .map_or(0, |m| m as usize + 1);
    let num_items = train_pairs
        .iter()
        .map(|p| p.1)
        .chain(test.iter().map(|t| t.item))
        .chain(tests.iter().flat_map(|c| c.negatives.iter().copied()))
        .max()
        .map_or(0, |m| m as usize + 1);

    train_pairs.sort_unstable();
    let mut timestamps = vec![Vec::new(); num_users];
    for &(u, _, t) in &train_pairs {
        timestamps[u as usize].push(t);
    }
    let train = InteractionMatrix::from_pairs(
        num_users,
        num_items,
        train_pairs.iter().map(|&(u, i, _)| (u, i)),
    )?;
    if train.nnz() != train_pairs.len() {
        return Err(Error::Parse {
            path: files.train.clone(),
            line: 0,
            message: "duplicate (user, item) pairs".into(),
        });
    }
    let split = SplitDataset::from_parts(train, timestamps, test, 0)?;
    Ok(CanonicalDataset { split, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_split, sample_test_negatives, Rating, RatingLog, TEST_NEGATIVES};
    use crate::rng::seeded;
    use rand::Rng;

    fn fixture() -> (SplitDataset, Vec<TestCase>) {
        let mut rng = seeded(11);
        let mut recs = Vec::new();
        for u in 0..40 {
            for i in 0..250 {
                if rng.random::<f64>() < 0.1 {
                    recs.push(Rating {
                        user: format!("user{u}"),
                        item: format!("item{i}"),
                        rating: 4.0,
                        timestamp: rng.random_range(0..10_000),
                    });
                }
            }
        }
        let (_, split) = build_split(&RatingLog::from_records(recs)).unwrap();
        let tests = sample_test_negatives(&split, TEST_NEGATIVES, &mut rng).unwrap();
        (split, tests)
    }

    #[test]
    fn round_trip_is_structural_and_byte_identical() {
        let (split, tests) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let files = DatasetFiles::new(dir.path(), "toy");
        write_canonical(&files, &split, &tests).unwrap();
        let back = read_canonical(&files).unwrap();
        assert_eq!(back.split.train, split.train);
        assert_eq!(back.split.train_timestamps, split.train_timestamps);
        assert_eq!(back.split.test, split.test);
        assert_eq!(back.tests, tests);

        let again = DatasetFiles::new(dir.path(), "again");
        write_canonical(&again, &back.split, &back.tests).unwrap();
        for (a, b) in [
            (&files.train, &again.train),
            (&files.test, &again.test),
            (&files.negatives, &again.negatives),
        ] {
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        }
    }

    #[test]
    fn negative_lines_have_one_plus_hundred_fields() {
        let (split, tests) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let files = DatasetFiles::new(dir.path(), "toy");
        write_canonical(&files, &split, &tests).unwrap();
        let text = fs::read_to_string(&files.negatives).unwrap();
        assert_eq!(text.lines().count(), split.num_users());
        assert!(text.lines().all(|l| l.split('\t').count() == 1 + TEST_NEGATIVES));
        let train = fs::read_to_string(&files.train).unwrap();
        let keys: Vec<(u32, u32)> = train
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                assert_eq!(f[2], "1");
                (f[0].parse().unwrap(), f[1].parse().unwrap())
            })
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn malformed_file_reports_line() {
        let (split, tests) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let files = DatasetFiles::new(dir.path(), "toy");
        write_canonical(&files, &split, &tests).unwrap();
        let mut text = fs::read_to_string(&files.train).unwrap();
        text = text.replacen("\t1\t", "\t1\tNaN-ish\t", 1);
        fs::write(&files.train, text).unwrap();
        match read_canonical(&files) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stats_text() {
        let s = DatasetStats {
            users: 6040,
            items: 3706,
            ratings: 1_000_209,
            train_ratings: 1_000_209 - 6040,
            dropped_users: 0,
        };
        assert!(s.to_text().contains("sparsity\t0.9553\n"));
    }
}
