//! Uniformly sampled scalar signals and their CSV form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!("sample interval must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::domain("time series needs at least one sample"));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn zeros(t0: f64, dt: f64, len: usize) -> Result<Self> {
        Self::new(t0, dt, vec![0.0; len])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (divides by the sample count).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Samples `[start, start + len)`, re-timed so `t0` is the time of `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<TimeSeries> {
        if len == 0 || start + len > self.len() {
            return Err(Error::domain(format!(
                "slice [{start}, {}) outside series of length {}",
                start + len,
                self.len()
            )));
        }
        TimeSeries::new(self.time(start), self.dt, self.values[start..start + len].to_vec())
    }

    /// Same sampling, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<TimeSeries> {
        if values.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: values.len(),
            });
        }
        TimeSeries::new(self.t0, self.dt, values)
    }

    pub fn same_sampling(&self, other: &TimeSeries) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.len() == other.len()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = String::with_capacity(64);
        writeln!(w, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            line.clear();
            let _ = write!(line, "{},{}", fmt_g17(self.time(k)), fmt_g17(*v));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads the `t,value` format. The sample interval is taken from the
    /// first two rows (1.0 for a single-row file).
    pub fn read_csv<R: BufRead>(r: R) -> Result<TimeSeries> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some("t,value") {
            return Err(Error::parse("time series csv must start with header `t,value`"));
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(format!("row {}: expected `t,value`", i + 2)))?;
            ts.push(parse_f64(t, i + 2)?);
            vs.push(parse_f64(v, i + 2)?);
        }
        if vs.is_empty() {
            return Err(Error::parse("time series csv has no rows"));
        }
        let dt = if ts.len() > 1 { ts[1] - ts[0] } else { 1.0 };
        TimeSeries::new(ts[0], dt, vs)
    }
}

fn parse_f64(s: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(format!("row {row}: cannot parse `{}` as a number", s.trim())))
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent notation outside `[1e-4, 1e17)`.
pub fn fmt_g17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
