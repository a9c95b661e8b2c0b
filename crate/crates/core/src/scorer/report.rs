use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Counts, Result, ScoreError, Tenths};

/// `(C - D, R - max(D, C))`, exact on one-decimal values.
pub fn compute_deltas(d: Tenths, c: Tenths, r: Tenths) -> (Tenths, Tenths) {
    (c - d, r - d.max(c))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub model_id: String,
    pub subset: String,
    pub task: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_id: String,
    pub subset: String,
    pub task: String,
    #[serde(rename = "D")]
    pub d: Option<Tenths>,
    #[serde(rename = "C")]
    pub c: Option<Tenths>,
    #[serde(rename = "C-D")]
    pub c_minus_d: Option<Tenths>,
    #[serde(rename = "R")]
    pub r: Option<Tenths>,
    #[serde(rename = "R-max(D,C)")]
    pub r_minus_max: Option<Tenths>,
    #[serde(rename = "n_D")]
    pub n_d: Option<u64>,
    #[serde(rename = "n_C")]
    pub n_c: Option<u64>,
    #[serde(rename = "n_R")]
    pub n_r: Option<u64>,
}

impl ReportRow {
    /// A row with deltas filled in wherever their inputs exist.
    pub fn new(key: RowKey, d: Option<Tenths>, c: Option<Tenths>, r: Option<Tenths>) -> Self {
        let c_minus_d = d.zip(c).map(|(d, c)| c - d);
        let r_minus_max = match (d, c, r) {
            (Some(d), Some(c), Some(r)) => Some(compute_deltas(d, c, r).1),
            _ => None,
        };
        Self {
            model_id: key.model_id,
            subset: key.subset,
            task: key.task,
            d,
            c,
            c_minus_d,
            r,
            r_minus_max,
            n_d: None,
            n_c: None,
            n_r: None,
        }
    }

    pub fn key(&self) -> RowKey {
        RowKey {
            model_id: self.model_id.clone(),
            subset: self.subset.clone(),
            task: self.task.clone(),
        }
    }
}

const CSV_HEADER: [&str; 11] = [
    "model_id", "subset", "task", "D", "C", "C-D", "R", "R-max(D,C)", "n_D", "n_C", "n_R",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(ScoreError::UnknownFormat(other.to_string())),
        }
    }
}

/// Rows keyed by `(model_id, subset, task)`, kept sorted by key.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ReportTable {
    /// Joins per-group Direct, CoT and probe counts into rows.
    pub fn assemble(
        direct: &BTreeMap<RowKey, Counts>,
        cot: &BTreeMap<RowKey, Counts>,
        probe: &BTreeMap<RowKey, Counts>,
    ) -> Self {
        let keys: BTreeSet<&RowKey> = direct.keys().chain(cot.keys()).chain(probe.keys()).collect();
        let rows = keys
            .into_iter()
            .map(|k| {
                let (d, c, r) = (direct.get(k), cot.get(k), probe.get(k));
                let acc = |x: Option<&Counts>| x.map(Counts::accuracy);
                let mut row = ReportRow::new(k.clone(), acc(d), acc(c), acc(r));
                row.n_d = d.map(|x| x.n);
                row.n_c = c.map(|x| x.n);
                row.n_r = r.map(|x| x.n);
                row
            })
            .collect();
        Self { rows }
    }

    /// Checks ranges, sort order and the delta identities of every row.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ScoreError::Table(m));
        for w in self.rows.windows(2) {
            if w[0].key() >= w[1].key() {
                return bad(format!("rows not strictly sorted at {:?}", w[1].key()));
            }
        }
        for row in &self.rows {
            for v in [row.d, row.c, row.r].into_iter().flatten() {
                if !(Tenths::ZERO..=Tenths::HUNDRED).contains(&v) {
                    return bad(format!("{:?}: accuracy {v} outside [0, 100]", row.key()));
                }
            }
            let want = ReportRow::new(row.key(), row.d, row.c, row.r);
            if (want.c_minus_d, want.r_minus_max) != (row.c_minus_d, row.r_minus_max) {
                return bad(format!("{:?}: deltas do not match D, C, R", row.key()));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.model_id.clone(),
                r.subset.clone(),
                r.task.clone(),
                opt(&r.d),
                opt(&r.c),
                opt(&r.c_minus_d),
                opt(&r.r),
                opt(&r.r_minus_max),
                opt(&r.n_d),
                opt(&r.n_c),
                opt(&r.n_r),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let table_err = |m: String| ScoreError::Table(m);
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| table_err(e.to_string()))?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(table_err(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| table_err(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let tenths = |i: usize| -> Result<Option<Tenths>> {
                match field(i) {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|e: super::ParseTenthsError| table_err(e.to_string())),
                }
            };
            let count = |i: usize| -> Result<Option<u64>> {
                match field(i) {
                    "" => Ok(None),
                    s => s.parse().map(Some).map_err(|_| table_err(format!("bad count {s:?}"))),
                }
            };
            rows.push(ReportRow {
                model_id: field(0).to_string(),
                subset: field(1).to_string(),
                task: field(2).to_string(),
                d: tenths(3)?,
                c: tenths(4)?,
                c_minus_d: tenths(5)?,
                r: tenths(6)?,
                r_minus_max: tenths(7)?,
                n_d: count(8)?,
                n_c: count(9)?,
                n_r: count(10)?,
            });
        }
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    /// Layout of the published tables: D, C, the CoT gain, R and the gap
    /// between R and the best textual mode.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| Model | Subset | Task | Direct (D) | CoT (C) | C−D Δ | Rep. Probe (R) | R−max(D,C) Δ |\n\
             |---|---|---|---:|---:|---:|---:|---:|\n",
        );
        let cell = |v: &Option<Tenths>| v.map_or_else(|| "n/a".to_string(), |t| t.to_string());
        for r in &self.rows {
            writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                r.model_id,
                r.subset,
                r.task,
                cell(&r.d),
                cell(&r.c),
                cell(&r.c_minus_d),
                cell(&r.r),
                cell(&r.r_minus_max)
            )
            .expect("write to string");
        }
        s
    }
}

/// Renders a validated table.
pub fn emit_report(table: &ReportTable, format: ReportFormat) -> Result<String> {
    table.validate()?;
    Ok(match format {
        ReportFormat::Csv => table.to_csv(),
        ReportFormat::Json => table.to_json(),
        ReportFormat::Markdown => table.to_markdown(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> Tenths {
        s.parse().unwrap()
    }

    fn key(m: &str, s: &str) -> RowKey {
        RowKey {
            model_id: m.into(),
            subset: s.into(),
            task: "shapes".into(),
        }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(compute_deltas(t("53.8"), t("65.3"), t("68.6")), (t("11.5"), t("3.3")));
        assert_eq!(compute_deltas(t("29.0"), t("27.3"), t("74.2")), (t("-1.7"), t("45.2")));
        assert_eq!(compute_deltas(Tenths(0), Tenths(0), Tenths(0)), (Tenths(0), Tenths(0)));
    }

    fn sample() -> ReportTable {
        let mut d = BTreeMap::new();
        let mut c = BTreeMap::new();
        let mut r = BTreeMap::new();
        d.insert(key("m", "known"), Counts { n: 1000, correct: 541, invalid: 3 });
        c.insert(key("m", "known"), Counts { n: 1000, correct: 973, invalid: 0 });
        r.insert(key("m", "known"), Counts { n: 1000, correct: 1000, invalid: 0 });
        d.insert(key("m", "unknown"), Counts { n: 1000, correct: 290, invalid: 0 });
        c.insert(key("m", "unknown"), Counts { n: 1000, correct: 273, invalid: 12 });
        ReportTable::assemble(&d, &c, &r)
    }

    #[test]
    fn assemble_and_validate() {
        let table = sample();
        table.validate().unwrap();
        let known = &table.rows[0];
        assert_eq!((known.d, known.c, known.r), (Some(t("54.1")), Some(t("97.3")), Some(t("100"))));
        assert_eq!((known.c_minus_d, known.r_minus_max), (Some(t("43.2")), Some(t("2.7"))));
        let unknown = &table.rows[1];
        assert_eq!(unknown.c_minus_d, Some(t("-1.7")));
        assert_eq!(unknown.r_minus_max, None);
    }

    #[test]
    fn validate_catches_bad_rows() {
        let mut table = sample();
        table.rows[0].c_minus_d = Some(Tenths(0));
        assert!(table.validate().is_err());
        let mut table = sample();
        table.rows[0].d = Some(Tenths(1001));
        assert!(table.validate().is_err());
        let mut table = sample();
        table.rows.swap(0, 1);
        assert!(table.validate().is_err());
    }

    #[test]
    fn csv_roundtrip_and_shape() {
        let table = sample();
        let csv = table.to_csv();
        assert!(csv.starts_with("model_id,subset,task,D,C,C-D,R,\"R-max(D,C)\",n_D,n_C,n_R\n"));
        assert!(csv.contains("m,known,shapes,54.1,97.3,43.2,100.0,2.7,1000,1000,1000\n"));
        assert!(csv.contains("m,unknown,shapes,29.0,27.3,-1.7,,,1000,1000,\n"));
        assert_eq!(ReportTable::from_csv(&csv).unwrap(), table);
    }

    #[test]
    fn empty_table_is_header_only() {
        let empty = ReportTable::default();
        assert_eq!(
            emit_report(&empty, ReportFormat::Csv).unwrap(),
            "model_id,subset,task,D,C,C-D,R,\"R-max(D,C)\",n_D,n_C,n_R\n"
        );
        assert_eq!(ReportTable::from_csv(&empty.to_csv()).unwrap(), empty);
        assert_eq!(emit_report(&empty, ReportFormat::Markdown).unwrap().lines().count(), 2);
    }

    #[test]
    fn json_and_markdown() {
        let table = sample();
        let json = emit_report(&table, ReportFormat::Json).unwrap();
        assert_eq!(serde_json::from_str::<ReportTable>(&json).unwrap(), table);
        assert!(json.contains("\"R-max(D,C)\": 2.7"));
        let md = emit_report(&table, ReportFormat::Markdown).unwrap();
        assert!(md.contains("C−D Δ") && md.contains("R−max(D,C) Δ"));
        assert!(md.contains("| m | known | shapes | 54.1 | 97.3 | 43.2 | 100.0 | 2.7 |"));
        assert!(md.contains("| n/a | n/a |"));
        assert!(matches!("xml".parse::<ReportFormat>(), Err(ScoreError::UnknownFormat(_))));
    }

    proptest! {
        #[test]
        fn deltas_match_independent_recomputation(d in 0i64..=1000, c in 0i64..=1000, r in 0i64..=1000) {
            let (cd, rm) = compute_deltas(Tenths(d), Tenths(c), Tenths(r));
            // Recomputed in floating point on the decimal strings.
            let f = |x: i64| format!("{}.{}", x / 10, x % 10).parse::<f64>().unwrap();
            let want_cd = f(c) - f(d);
            let want_rm = f(r) - f(d).max(f(c));
            prop_assert!((cd.to_f64() - want_cd).abs() < 1e-9);
            prop_assert!((rm.to_f64() - want_rm).abs() < 1e-9);
        }

        #[test]
        fn any_table_roundtrips_csv(
            rows in prop::collection::btree_map(
                ("[a-z]{1,4}", "[a-z,\" ]{1,5}"),
                (prop::option::of(0i64..=1000), prop::option::of(0i64..=1000), prop::option::of(0i64..=1000), prop::option::of(0u64..5000)),
                0..8,
            )
        ) {
            let rows: Vec<ReportRow> = rows
                .into_iter()
                .map(|((m, s), (d, c, r, n))| {
                    let mut row = ReportRow::new(
                        RowKey { model_id: m, subset: s, task: "t".into() },
                        d.map(Tenths), c.map(Tenths), r.map(Tenths),
                    );
                    row.n_d = n;
                    row
                })
                .collect();
            let table = ReportTable { rows };
            table.validate().unwrap();
            prop_assert_eq!(ReportTable::from_csv(&table.to_csv()).unwrap(), table);
        }
    }
}
