//! CSV, JSON and JSON-lines writers and the matrix reader used by
//! `analyze`.
//!
//! Floats are written with 17 significant digits in exponent form so that
//! outputs are byte-stable and parse back to the same value. Lines end in
//! `\n`.

use std::io::{self, Read, Write};

use csv::{Terminator, WriterBuilder};
use serde::Serialize;
use srtlab_core::cascade::TraceStep;
use srtlab_core::matching::PreferenceList;
use srtlab_core::sim::{Distributions, ProbabilityRecord};
use srtlab_core::{BankId, LiquidityMarket, LoanBook, NetExposureMatrix, TaxMatrix, TimeSeriesRecord};

pub const TIMESERIES_HEADER: [&str; 7] = [
    "t",
    "policy",
    "esl",
    "cum_volume",
    "avg_clustering",
    "spectral_radius",
    "esl_conditional",
];

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_timeseries<W: Write>(w: W, records: &[TimeSeriesRecord]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(TIMESERIES_HEADER)?;
    for r in records {
        out.write_record([
            r.t.to_string(),
            r.policy.label().to_string(),
            fmt(r.esl),
            r.cum_volume.to_string(),
            fmt(r.avg_clustering),
            fmt(r.spectral_radius),
            fmt(r.esl_conditional),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `metric,bin,count` with `bin` the lower edge of the bin.
pub fn write_distributions<W: Write>(w: W, dist: &Distributions) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["metric", "bin", "count"])?;
    for (name, hist) in dist.named() {
        for (edge, count) in hist.bins() {
            out.write_record([name.to_string(), fmt(edge), count.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_probabilities<W: Write>(w: W, records: &[ProbabilityRecord]) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "bank", "exogenous", "endogenous", "total"])?;
    for r in records {
        out.write_record([
            r.t.to_string(),
            r.bank.to_string(),
            fmt(r.exogenous),
            fmt(r.endogenous),
            fmt(r.total),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Live loans, one row each.
pub fn write_loan_book<W: Write>(w: W, book: &LoanBook) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["lender", "borrower", "amount", "origination", "maturity"])?;
    for l in book.loans().iter().filter(|l| l.is_live(book.period())) {
        out.write_record([
            l.lender.to_string(),
            l.borrower.to_string(),
            fmt(l.amount),
            l.origination.to_string(),
            l.maturity.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// The matrix as headerless rows, the format `analyze` reads.
pub fn write_exposure<W: Write>(w: W, a: &NetExposureMatrix) -> csv::Result<()> {
    let mut out = writer(w);
    for row in a.rows() {
        out.write_record(row.iter().map(|&x| fmt(x)))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    seed: BankId,
    #[serde(flatten)]
    step: &'a TraceStep,
}

/// One JSON object per cascade step, tagged with the seed bank.
pub fn write_cascade_trace<W: Write>(mut w: W, seed: BankId, trace: &[TraceStep]) -> io::Result<()> {
    for step in trace {
        serde_json::to_writer(&mut w, &TraceLine { seed, step })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MarketDump<'a> {
    period: u64,
    maturity: u32,
    lenders: &'a [BankId],
    borrowers: &'a [BankId],
    /// Quoted rate including tax, lender-major.
    rates: Vec<Vec<f64>>,
    tax: Vec<Vec<f64>>,
    reservation: &'a [f64],
    default_probs: &'a [f64],
    preferences: Vec<PreferenceList>,
}

pub fn write_market<W: Write>(w: W, market: &LiquidityMarket) -> io::Result<()> {
    let grid = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..market.lender_count())
            .map(|i| (0..market.borrower_count()).map(|j| f(i, j)).collect())
            .collect()
    };
    let dump = MarketDump {
        period: market.period(),
        maturity: market.maturity(),
        lenders: market.lenders(),
        borrowers: market.borrowers(),
        rates: grid(&|i, j| market.rate(i, j)),
        tax: grid(&|i, j| market.quotes().tax_rate(i, j)),
        reservation: market.reservation(),
        default_probs: market.default_probs(),
        preferences: market.preference_lists(),
    };
    serde_json::to_writer_pretty(w, &dump)?;
    Ok(())
}

/// `lender,borrower,tax,delta_esl` for every pair.
pub fn write_tax_schedule<W: Write>(w: W, tax: &TaxMatrix) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(["lender", "borrower", "tax", "delta_esl"])?;
    for (l, b, t, d) in tax.entries() {
        out.write_record([l.to_string(), b.to_string(), fmt(t), fmt(d)])?;
    }
    out.flush()?;
    Ok(())
}

/// Headerless numeric CSV; `#` lines are comments.
pub fn read_matrix<R: Read>(r: R) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field
                    .parse::<f64>()
                    .map_err(|_| format!("row {}, column {}: {field:?} is not a number", n + 1, c + 1))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// A vector given either as one row or as one column.
pub fn read_vector<R: Read>(r: R) -> Result<Vec<f64>, String> {
    let rows = read_matrix(r)?;
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().unwrap_or_default());
    }
    if rows.iter().all(|r| r.len() == 1) {
        return Ok(rows.into_iter().map(|r| r[0]).collect());
    }
    Err("expected a single row or a single column".into())
}
