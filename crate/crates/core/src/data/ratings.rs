use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Layout of a raw rating log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    /// `UserID::ItemID::Rating::Timestamp` (MovieLens 1M `ratings.dat`).
    DoubleColon,
    /// `user \t item \t rating [\t timestamp]`; a missing timestamp reads as 0.
    TabSeparated,
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double_colon" | "double-colon" | "movielens" | "dat" => Ok(Self::DoubleColon),
            "tab_separated" | "tab-separated" | "tsv" => Ok(Self::TabSeparated),
            other => Err(Error::InvalidArgument(format!("unknown rating format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rating {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: u64,
}

/// Rating records with at most one record per `(user, item)` pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingLog {
    pub records: Vec<Rating>,
}

impl RatingLog {
    /// Builds a log, collapsing repeated `(user, item)` pairs onto the record
    /// with the latest timestamp (the later line wins a tie). Surviving
    /// records keep the position of the pair's first appearance.
    pub fn from_records(records: impl IntoIterator<Item = Rating>) -> Self {
        let mut seen: HashMap<(String, String), usize> = HashMap::new();
        let mut out: Vec<Rating> = Vec::new();
        for r in records {
            match seen.get(&(r.user.clone(), r.item.clone())) {
                Some(&k) => {
                    if r.timestamp >= out[k].timestamp {
                        out[k] = r;
                    }
                }
                None => {
                    seen.insert((r.user.clone(), r.item.clone()), out.len());
                    out.push(r);
                }
            }
        }
        Self { records: out }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_ratings(path: &Path, format: RatingFormat) -> Result<RatingLog> {
    let reader = BufReader::new(File::open(path)?);
    parse_ratings(reader, format, path)
}

/// Parses a rating log; `origin` is only used in error messages.
pub fn parse_ratings<R: BufRead>(reader: R, format: RatingFormat, origin: &Path) -> Result<RatingLog> {
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = match format {
            RatingFormat::DoubleColon => line.split("::").collect(),
            RatingFormat::TabSeparated => line.split('\t').collect(),
        };
        let expected = match format {
            RatingFormat::DoubleColon => 4..=4,
            RatingFormat::TabSeparated => 3..=4,
        };
        if !expected.contains(&fields.len()) {
            return Err(fail(format!(
                "expected {} fields, found {}",
                if expected.start() == expected.end() {
                    expected.start().to_string()
                } else {
                    format!("{} to {}", expected.start(), expected.end())
                },
                fields.len()
            )));
        }
        let user = fields[0].trim();
        let item = fields[1].trim();
        if user.is_empty() || item.is_empty() {
            return Err(fail("empty user or item id".into()));
        }
        let rating: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| fail(format!("bad rating {:?}", fields[2])))?;
        let timestamp: u64 = match fields.get(3) {
            Some(t) => t
                .trim()
                .parse()
                .map_err(|_| fail(format!("bad timestamp {t:?}")))?,
            None => 0,
        };
        records.push(Rating {
            user: user.to_string(),
            item: item.to_string(),
            rating,
            timestamp,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput(origin.to_path_buf()));
    }
    Ok(RatingLog::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: RatingFormat) -> Result<RatingLog> {
        parse_ratings(text.as_bytes(), format, Path::new("mem"))
    }

    #[test]
    fn movielens_line() {
        let log = parse("1::1193::5::978300760\n", RatingFormat::DoubleColon).unwrap();
        assert_eq!(
            log.records,
            vec![Rating {
                user: "1".into(),
                item: "1193".into(),
                rating: 5.0,
                timestamp: 978300760
            }]
        );
    }

    #[test]
    fn duplicates_keep_latest() {
        let log = parse("u\ti\t3\t10\nv\ti\t1\t5\nu\ti\t4\t20\nu\ti\t2\t15\n", RatingFormat::TabSeparated)
            .unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.records[0].timestamp, 20);
        assert_eq!(log.records[0].rating, 4.0);
        assert_eq!(log.records[1].user, "v");
    }

    #[test]
    fn tsv_without_timestamp() {
        let log = parse("2\t51\t13883\n", RatingFormat::TabSeparated).unwrap();
        assert_eq!(log.records[0].timestamp, 0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("1::2::3::4\n\n1::2::x::4\n", RatingFormat::DoubleColon).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("1::2::3\n", RatingFormat::DoubleColon),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("1::2::3::-5\n", RatingFormat::DoubleColon),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse("", RatingFormat::TabSeparated), Err(Error::EmptyInput(_))));
        assert!(matches!(parse("\n# c\n", RatingFormat::TabSeparated), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn format_names() {
        assert_eq!("double_colon".parse::<RatingFormat>().unwrap(), RatingFormat::DoubleColon);
        assert_eq!("tsv".parse::<RatingFormat>().unwrap(), RatingFormat::TabSeparated);
        assert!("csv".parse::<RatingFormat>().is_err());
    }
}
