//! Outlet-level aggregation of a respondent survey on partisan news media.
//!
//! Input is one row per (respondent, outlet) pair with columns
//! `respondent_id,party,outlet,recognized,trust,share,affect`. Trust and
//! share-likelihood are 1-5 Likert answers or the literal `DK`; affect is a
//! 0-100 feeling thermometer. Only respondents who recognized an outlet
//! count toward its means, and only Democrats and Republicans are reported.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const UNDEFINED: &str = "UNDEFINED";
pub const NO_DATA: &str = "NO_DATA";

pub const INPUT_HEADER: [&str; 7] = [
    "respondent_id",
    "party",
    "outlet",
    "recognized",
    "trust",
    "share",
    "affect",
];
pub const OUTPUT_HEADER: [&str; 10] = [
    "outlet",
    "n_dem",
    "n_rep",
    "trust_dem",
    "trust_rep",
    "share_dem",
    "share_rep",
    "affect_dem",
    "affect_rep",
    "rep_dem_ratio",
];

/// Trust answers at or above this count as "trusts the outlet".
pub const DEFAULT_TRUST_THRESHOLD: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Affiliation {
    Dem,
    Rep,
    Ind,
}

/// A 1-5 Likert answer or don't-know.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Likert {
    Score(u8),
    DontKnow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyResponse {
    pub respondent_id: String,
    pub party: Affiliation,
    pub outlet: String,
    pub recognized: bool,
    /// `None` only when the field was left empty for an unrecognized outlet.
    pub trust: Option<Likert>,
    pub share: Option<Likert>,
    pub affect: Option<u8>,
}

/// A mean that may be missing because nobody answered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mean {
    Value(f64),
    NoData,
}

impl Mean {
    fn of(sum: f64, n: usize) -> Mean {
        if n == 0 {
            Mean::NoData
        } else {
            Mean::Value(sum / n as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Mean::Value(v) => Some(v),
            Mean::NoData => None,
        }
    }
}

impl fmt::Display for Mean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mean::Value(v) => write!(f, "{v}"),
            Mean::NoData => f.write_str(NO_DATA),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Value(f64),
    Undefined,
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v}"),
            Ratio::Undefined => f.write_str(UNDEFINED),
        }
    }
}

/// Share of trusting Republicans over share of trusting Democrats.
pub fn rep_dem_ratio(pct_rep_trust: f64, pct_dem_trust: f64) -> Ratio {
    if pct_dem_trust == 0.0 {
        Ratio::Undefined
    } else {
        Ratio::Value(pct_rep_trust / pct_dem_trust)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutletMeans {
    pub trust: Mean,
    pub share: Mean,
    pub affect: Mean,
    /// Recognizing respondents, the affect denominator.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    n: usize,
    trust_sum: f64,
    trust_n: usize,
    trusting: usize,
    share_sum: f64,
    share_n: usize,
    affect_sum: f64,
    affect_n: usize,
}

impl Tally {
    fn add(&mut self, r: &SurveyResponse, threshold: u8) {
        if !r.recognized {
            return;
        }
        self.n += 1;
        if let Some(Likert::Score(s)) = r.trust {
            self.trust_sum += s as f64;
            self.trust_n += 1;
            if s >= threshold {
                self.trusting += 1;
            }
        }
        if let Some(Likert::Score(s)) = r.share {
            self.share_sum += s as f64;
            self.share_n += 1;
        }
        if let Some(a) = r.affect {
            self.affect_sum += a as f64;
            self.affect_n += 1;
        }
    }

    fn means(&self) -> OutletMeans {
        OutletMeans {
            trust: Mean::of(self.trust_sum, self.trust_n),
            share: Mean::of(self.share_sum, self.share_n),
            affect: Mean::of(self.affect_sum, self.affect_n),
            n: self.affect_n,
        }
    }

    /// Trusting share among recognizing respondents with a non-DK trust answer.
    fn trusting_share(&self) -> Option<f64> {
        (self.trust_n > 0).then(|| self.trusting as f64 / self.trust_n as f64)
    }
}

/// Means over recognizing respondents of `party` for one outlet. DK answers
/// drop out of the trust and share means; `n` counts affect answers.
pub fn outlet_means(responses: &[SurveyResponse], outlet: &str, party: Affiliation) -> Result<OutletMeans> {
    if party == Affiliation::Ind {
        return Err(Error::Config("outlet means are reported for Dem and Rep only".into()));
    }
    let mut tally = Tally::default();
    for r in responses.iter().filter(|r| r.outlet == outlet && r.party == party) {
        tally.add(r, DEFAULT_TRUST_THRESHOLD);
    }
    Ok(tally.means())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutletAggregate {
    pub outlet: String,
    pub n_dem: usize,
    pub n_rep: usize,
    pub trust_dem: Mean,
    pub trust_rep: Mean,
    pub share_dem: Mean,
    pub share_rep: Mean,
    pub affect_dem: Mean,
    pub affect_rep: Mean,
    pub rep_dem_ratio: Ratio,
}

/// One row per outlet, ordered by ascending Rep:Dem ratio with undefined
/// ratios last and ties broken by outlet name.
pub fn aggregate_responses(responses: &[SurveyResponse], trust_threshold: u8) -> Vec<OutletAggregate> {
    let mut by_outlet: BTreeMap<&str, (Tally, Tally)> = BTreeMap::new();
    for r in responses {
        let entry = by_outlet.entry(r.outlet.as_str()).or_default();
        match r.party {
            Affiliation::Dem => entry.0.add(r, trust_threshold),
            Affiliation::Rep => entry.1.add(r, trust_threshold),
            Affiliation::Ind => {}
        }
    }
    let mut rows: Vec<OutletAggregate> = by_outlet
        .into_iter()
        .map(|(outlet, (dem, rep))| {
            let (d, r) = (dem.means(), rep.means());
            let ratio = match (rep.trusting_share(), dem.trusting_share()) {
                (Some(pr), Some(pd)) => rep_dem_ratio(pr, pd),
                _ => Ratio::Undefined,
            };
            OutletAggregate {
                outlet: outlet.to_string(),
                n_dem: d.n,
                n_rep: r.n,
                trust_dem: d.trust,
                trust_rep: r.trust,
                share_dem: d.share,
                share_rep: r.share,
                affect_dem: d.affect,
                affect_rep: r.affect,
                rep_dem_ratio: ratio,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &OutletAggregate| match r.rep_dem_ratio {
            Ratio::Value(v) => (0, v),
            Ratio::Undefined => (1, 0.0),
        };
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then_with(|| a.outlet.cmp(&b.outlet))
    });
    rows
}

fn parse_likert(field: &str, name: &str, row: usize) -> Result<Option<Likert>> {
    match field {
        "" => Ok(None),
        "DK" => Ok(Some(Likert::DontKnow)),
        s => match s.parse::<u8>() {
            Ok(v @ 1..=5) => Ok(Some(Likert::Score(v))),
            _ => Err(Error::SurveyRow {
                row,
                message: format!("{name} must be 1-5 or DK, got {s:?}"),
            }),
        },
    }
}

/// Parses and validates the respondent CSV. `row` numbers in errors count
/// data rows from 1, excluding the header.
pub fn read_responses<R: Read>(input: R) -> Result<Vec<SurveyResponse>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != INPUT_HEADER {
        return Err(Error::SurveyRow {
            row: 0,
            message: format!("expected header {}, got {}", INPUT_HEADER.join(","), got.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::SurveyRow {
            row,
            message: e.to_string(),
        })?;
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let bad = |message: String| Error::SurveyRow { row, message };

        let party = match field(1) {
            "Dem" => Affiliation::Dem,
            "Rep" => Affiliation::Rep,
            "Ind" => Affiliation::Ind,
            other => return Err(bad(format!("party must be Dem, Rep or Ind, got {other:?}"))),
        };
        let outlet = field(2);
        if outlet.is_empty() {
            return Err(bad("outlet is empty".into()));
        }
        let recognized = match field(3) {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("recognized must be true or false, got {other:?}"))),
        };
        let trust = parse_likert(field(4), "trust", row)?;
        let share = parse_likert(field(5), "share", row)?;
        let affect = match field(6) {
            "" => None,
            s => match s.parse::<u8>() {
                Ok(v) if v <= 100 => Some(v),
                _ => return Err(bad(format!("affect must be an integer in 0-100, got {s:?}"))),
            },
        };
        if recognized {
            for (name, missing) in [
                ("trust", trust.is_none()),
                ("share", share.is_none()),
                ("affect", affect.is_none()),
            ] {
                if missing {
                    return Err(bad(format!("{name} is required when the outlet is recognized")));
                }
            }
        }
        out.push(SurveyResponse {
            respondent_id: field(0).to_string(),
            party,
            outlet: outlet.to_string(),
            recognized,
            trust,
            share,
            affect,
        });
    }
    Ok(out)
}

pub fn write_aggregates<W: Write>(rows: &[OutletAggregate], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(OUTPUT_HEADER)?;
    for r in rows {
        out.write_record([
            r.outlet.clone(),
            r.n_dem.to_string(),
            r.n_rep.to_string(),
            r.trust_dem.to_string(),
            r.trust_rep.to_string(),
            r.share_dem.to_string(),
            r.share_rep.to_string(),
            r.affect_dem.to_string(),
            r.affect_rep.to_string(),
            r.rep_dem_ratio.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Reads `input`, aggregates per outlet and writes the outlet CSV to `output`.
pub fn aggregate_survey(input: &Path, output: &Path, trust_threshold: u8) -> Result<Vec<OutletAggregate>> {
    let file = std::fs::File::open(input).map_err(|e| Error::io(input, e))?;
    let responses = read_responses(file).map_err(|e| match e {
        Error::SurveyRow { row, message } => Error::SurveyRow {
            row,
            message: format!("{}: {message}", input.display()),
        },
        other => other,
    })?;
    let rows = aggregate_responses(&responses, trust_threshold);
    let out = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    write_aggregates(&rows, out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "respondent_id,party,outlet,recognized,trust,share,affect\n";

    fn parse(body: &str) -> Result<Vec<SurveyResponse>> {
        read_responses(format!("{HEADER}{body}").as_bytes())
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(rep_dem_ratio(0.5, 0.25), Ratio::Value(2.0));
        assert_eq!(rep_dem_ratio(0.3, 0.3), Ratio::Value(1.0));
        assert_eq!(rep_dem_ratio(0.4, 0.0), Ratio::Undefined);
        assert_eq!(Ratio::Undefined.to_string(), "UNDEFINED");
    }

    #[test]
    fn trust_means_with_dk() {
        let rs = parse("1,Dem,A,true,3,2,50\n2,Dem,A,true,5,4,70\n").unwrap();
        assert_eq!(
            outlet_means(&rs, "A", Affiliation::Dem).unwrap().trust,
            Mean::Value(4.0)
        );
        let rs = parse("1,Rep,A,true,4,1,10\n2,Rep,A,true,DK,1,20\n3,Rep,A,true,2,1,30\n").unwrap();
        let m = outlet_means(&rs, "A", Affiliation::Rep).unwrap();
        assert_eq!(m.trust, Mean::Value(3.0));
        assert_eq!(m.affect, Mean::Value(20.0));
        assert_eq!(m.n, 3);
        let none = outlet_means(&rs, "A", Affiliation::Dem).unwrap();
        assert_eq!((none.trust, none.n), (Mean::NoData, 0));
        assert!(outlet_means(&rs, "A", Affiliation::Ind).is_err());
    }

    #[test]
    fn rejects_out_of_range_affect_with_row() {
        let err = parse("1,Dem,A,true,3,2,50\n2,Rep,A,true,3,2,150\n").unwrap_err();
        match err {
            Error::SurveyRow { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("affect"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(parse("1,Green,A,true,3,2,50\n").is_err());
        assert!(parse("1,Dem,A,yes,3,2,50\n").is_err());
        assert!(parse("1,Dem,A,true,6,2,50\n").is_err());
        assert!(parse("1,Dem,A,true,,2,50\n").is_err());
        assert!(parse("1,Dem,A,false,,,\n").is_ok());
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_responses("id,party\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_input_yields_header_only() {
        let rows = aggregate_responses(&parse("").unwrap(), DEFAULT_TRUST_THRESHOLD);
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_aggregates(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", OUTPUT_HEADER.join(","))
        );
    }

    #[test]
    fn independents_and_unrecognized_are_ignored() {
        let rs = parse("1,Ind,A,true,5,5,100\n2,Dem,A,false,1,1,0\n3,Dem,A,true,4,3,60\n").unwrap();
        let rows = aggregate_responses(&rs, DEFAULT_TRUST_THRESHOLD);
        assert_eq!(rows[0].n_dem, 1);
        assert_eq!(rows[0].trust_dem, Mean::Value(4.0));
        assert_eq!(rows[0].affect_rep, Mean::NoData);
        assert_eq!(rows[0].rep_dem_ratio, Ratio::Undefined);
    }
}
