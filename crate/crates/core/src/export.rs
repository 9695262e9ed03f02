//! CSV and JSON encodings of boundary curves and simulation counts.
//!
//! Floats are written with the shortest representation that parses back to
//! the same double, so `0`, `1` and `0.5` appear literally.

use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::OutcomeCounts;
use crate::region::{BoundComparison, BoundaryCurve};
use crate::stats::ChiSquareTest;
use crate::types::{BoundarySample, Dimension, Outcome, Threshold};

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub fn write_curve_csv<W: Write>(curve: &BoundaryCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "eta", "p"])?;
    for s in &curve.samples {
        w.write_record([s.t.get().to_string(), s.eta.to_string(), s.p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CSV curve; `d` is not part of the CSV layout.
pub fn read_curve_csv<R: Read>(d: Dimension, input: R) -> Result<BoundaryCurve> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "eta", "p"] {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }
    let samples = r
        .deserialize::<BoundarySample>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(BoundaryCurve { d, samples })
}

pub fn write_curve_json<W: Write>(curve: &BoundaryCurve, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, curve)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_curve_json<R: Read>(input: R) -> Result<BoundaryCurve> {
    Ok(serde_json::from_reader(input)?)
}

pub fn write_comparison_csv<W: Write>(rows: &[BoundComparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "eta_max", "povm_bound", "ratio"])?;
    for r in rows {
        w.write_record([
            r.p.to_string(),
            r.eta_max.to_string(),
            r.povm_bound.to_string(),
            r.ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Non-finite ratios become `null`.
pub fn write_comparison_json<W: Write>(
    d: Dimension,
    rows: &[BoundComparison],
    mut out: W,
) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        d: Dimension,
        rows: &'a [BoundComparison],
    }
    serde_json::to_writer_pretty(&mut out, &Doc { d, rows })?;
    writeln!(out)?;
    Ok(())
}

/// JSON report of a simulation run, keyed by outcome label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsReport {
    pub d: Dimension,
    pub t: Threshold,
    pub shots: u64,
    pub counts: IndexMap<String, u64>,
    pub expected: IndexMap<String, f64>,
    pub chi2: Option<f64>,
    pub pvalue: Option<f64>,
}

impl CountsReport {
    pub fn new(
        d: Dimension,
        t: Threshold,
        counts: &OutcomeCounts,
        expected: &[f64],
        test: Option<ChiSquareTest>,
    ) -> Result<Self> {
        let dn = d.get();
        if counts.counts.len() != dn + 1 || expected.len() != dn + 1 {
            return Err(Error::DimensionMismatch {
                expected: dn + 1,
                found: counts.counts.len(),
            });
        }
        let label = |slot| Outcome::from_slot(slot, dn).map(Outcome::label);
        let mut c = IndexMap::new();
        let mut e = IndexMap::new();
        for slot in 0..=dn {
            c.insert(label(slot)?, counts.counts[slot]);
            e.insert(label(slot)?, expected[slot]);
        }
        Ok(Self {
            d,
            t,
            shots: counts.shots(),
            counts: c,
            expected: e,
            chi2: test.map(|x| x.statistic).filter(|x| x.is_finite()),
            pvalue: test.map(|x| x.p_value),
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }
}
