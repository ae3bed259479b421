use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::count::count_solutions;
use crate::error::{Error, Result};
use crate::form::FormSystem;
use crate::invariants::{birch_threshold, u_invariant, Check, InvariantConfig, Verdict};
use crate::region::BoxRegion;

use super::integral::{singular_integral, SingularIntegralTruncation};
use super::series::{rational_to_f64, singular_series, SingularSeriesTruncation};

/// Largest `|ratio - 1|` at the last `P` for the verdict "consistent".
pub const RATIO_TOLERANCE: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct PredictConfig {
    pub q_max: u64,
    pub t_max: f64,
    pub grid: usize,
    /// Settings for the `n - u` hypothesis check; `None` skips it.
    pub hypothesis: Option<InvariantConfig>,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig { q_max: 50, t_max: 8.0, grid: 16, hypothesis: Some(InvariantConfig::default()) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub p: BigRational,
    pub count: BigInt,
    pub prediction: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictionVerdict {
    /// The ratio at the largest `P` is within tolerance and closer to 1 than at the smallest.
    Consistent,
    NotConsistent,
    /// `n <= rd`: the table is descriptive only.
    Descriptive,
}

impl PredictionVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictionVerdict::Consistent => "consistent",
            PredictionVerdict::NotConsistent => "not consistent",
            PredictionVerdict::Descriptive => "descriptive only",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionReport {
    pub rows: Vec<PredictionRow>,
    pub series: SingularSeriesTruncation,
    pub integral: SingularIntegralTruncation,
    /// `n - rd`.
    pub exponent: i64,
    pub verdict: PredictionVerdict,
    /// `n - u` against the threshold `r(r+1)(d-1)2^(d-1)`; `None` when not checked.
    pub hypothesis: Option<Check>,
    /// Set when the hypothesis check fails: the asymptotic is not guaranteed.
    pub hypothesis_note: Option<String>,
}

/// Compares brute-force counts with `𝔖 𝒥 P^(n - rd)`.
pub fn predict_and_verify(
    sys: &FormSystem,
    region: &BoxRegion,
    p_list: &[BigRational],
    cfg: &PredictConfig,
) -> Result<PredictionReport> {
    if p_list.is_empty() {
        return Err(Error::InvalidArgument("need at least one P".into()));
    }
    let n = sys.n_vars() as i64;
    let exponent = n - sys.r() as i64 * sys.degree() as i64;
    let series = singular_series(sys, cfg.q_max)?;
    let integral = singular_integral(sys, region, cfg.t_max, cfg.grid)?;
    let mut rows = Vec::with_capacity(p_list.len());
    for p in p_list {
        let count = count_solutions(sys, region, p)?.count;
        let prediction = series.value * integral.value * rational_to_f64(p).powi(exponent as i32);
        let ratio = count.to_f64().unwrap_or(f64::INFINITY) / prediction;
        rows.push(PredictionRow { p: p.clone(), count, prediction, ratio });
    }
    let verdict = if exponent <= 0 {
        PredictionVerdict::Descriptive
    } else {
        let first = (rows[0].ratio - 1.0).abs();
        let last = (rows[rows.len() - 1].ratio - 1.0).abs();
        if last <= RATIO_TOLERANCE && (rows.len() == 1 || last < first) {
            PredictionVerdict::Consistent
        } else {
            PredictionVerdict::NotConsistent
        }
    };
    let hypothesis = match &cfg.hypothesis {
        Some(icfg) => {
            let u = u_invariant(sys, icfg)?;
            let t1 = birch_threshold(sys.r(), sys.degree());
            Some(Check::strict(n - u.u, t1 as i64, u.consistent))
        }
        None => None,
    };
    let hypothesis_note = hypothesis
        .as_ref()
        .filter(|c| c.verdict != Verdict::Pass)
        .map(|_| "hypothesis not satisfied: no guarantee".to_string());
    Ok(PredictionReport { rows, series, integral, exponent, verdict, hypothesis, hypothesis_note })
}

/// Writes `P,N,prediction,ratio` rows.
pub fn write_prediction_csv<W: Write>(report: &PredictionReport, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["P", "N", "prediction", "ratio"]).map_err(io)?;
    for row in &report.rows {
        w.write_record([
            row.p.to_string(),
            row.count.to_string(),
            format!("{:.6}", row.prediction),
            format!("{:.6}", row.ratio),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&p| BigRational::from_integer(p.into())).collect()
    }

    #[test]
    fn definite_form_is_descriptive_and_flagged() {
        let s = FormSystem::parse("x1^2 + x2^2", 2).unwrap();
        let cfg = PredictConfig { q_max: 6, t_max: 2.0, ..Default::default() };
        let rep = predict_and_verify(&s, &BoxRegion::unit(2), &ps(&[10, 20]), &cfg).unwrap();
        assert!(rep.rows.iter().all(|r| r.count == BigInt::from(1)));
        assert_eq!(rep.verdict, PredictionVerdict::Descriptive);
        assert_eq!(rep.integral.real_obstruction, Some(true));
        // n - u = 2 is not above 4.
        assert!(rep.hypothesis_note.is_some());
    }

    #[test]
    fn reproducible_and_csv() {
        let s = FormSystem::parse("x1^2 + x2^2 + x3^2 - x4^2", 4).unwrap();
        let cfg = PredictConfig { q_max: 12, t_max: 4.0, grid: 16, hypothesis: None };
        let a = predict_and_verify(&s, &BoxRegion::unit(4), &ps(&[8, 16]), &cfg).unwrap();
        let b = predict_and_verify(&s, &BoxRegion::unit(4), &ps(&[8, 16]), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.exponent, 2);
        let mut buf = Vec::new();
        write_prediction_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("P,N,prediction,ratio\n8,"));
        assert_eq!(text.lines().count(), 3);
    }
}
