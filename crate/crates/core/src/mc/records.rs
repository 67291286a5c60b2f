use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const REP_CSV_HEADER: [&str; 7] = ["rep", "U", "U_hat", "gamma4_hat", "J", "p_value", "gap"];

/// One replication. Fields that could not be computed are NaN and
/// `failure` names the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct RepRecord {
    pub rep: u64,
    /// John's statistic of the true disturbances.
    pub u: f64,
    /// John's statistic of the within residuals (NaN in raw mode).
    pub u_hat: f64,
    pub gamma4_hat: f64,
    pub j: f64,
    pub p_value: f64,
    /// `T(Û − U) − c_T` (NaN in raw mode).
    pub gap: f64,
    pub failure: Option<String>,
}

impl RepRecord {
    pub fn failed(rep: u64, reason: String) -> Self {
        RepRecord {
            rep,
            u: f64::NAN,
            u_hat: f64::NAN,
            gamma4_hat: f64::NAN,
            j: f64::NAN,
            p_value: f64::NAN,
            gap: f64::NAN,
            failure: Some(reason),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_records<W: Write>(out: W, records: &[RepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REP_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            fmt17(r.u),
            fmt17(r.u_hat),
            fmt17(r.gamma4_hat),
            fmt17(r.j),
            fmt17(r.p_value),
            fmt17(r.gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[RepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a per-replication CSV. Failure reasons are not stored in the file,
/// so rows with a NaN `J` come back marked as failed.
pub fn read_records<R: Read>(input: R) -> Result<Vec<RepRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != REP_CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad value '{}'", line + 2, &row[i])))
        };
        let rep = row[0]
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad rep '{}'", line + 2, &row[0])))?;
        let j = f(4)?;
        out.push(RepRecord {
            rep,
            u: f(1)?,
            u_hat: f(2)?,
            gamma4_hat: f(3)?,
            j,
            p_value: f(5)?,
            gap: f(6)?,
            failure: j.is_nan().then(|| "unknown".to_string()),
        });
    }
    Ok(out)
}
