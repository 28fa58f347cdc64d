use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::fit::{loglog_fit, LinearFit};
use crate::error::Result;

/// Fits with a coefficient of determination below this are flagged
/// instead of being read as a rate.
pub const MIN_R2: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A slope fit too poor to support the claim.
    Flagged,
    /// Reported value with no claim attached.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Verdict::Fail | Verdict::Flagged)
    }
}

/// Closed interval `[lo, hi]`; either side may be open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Band {
    pub fn between(lo: f64, hi: f64) -> Self {
        Self {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn at_most(hi: f64) -> Self {
        Self {
            lo: None,
            hi: Some(hi),
        }
    }

    pub fn at_least(lo: f64) -> Self {
        Self {
            lo: Some(lo),
            hi: None,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v <= hi)
    }

    fn render(&self) -> String {
        let side = |v: Option<f64>, inf: &str| v.map_or(inf.to_string(), |x| format!("{x}"));
        format!("[{}, {}]", side(self.lo, "-inf"), side(self.hi, "inf"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: Option<u64>,
    pub metric: String,
    pub value: f64,
    pub band: Option<Band>,
    pub verdict: Verdict,
}

/// A fitted log–log slope attached to a scaling claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub metric: String,
    pub fit: Option<LinearFit>,
    pub band: Band,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    /// SHA-256 of the resolved configuration, hex encoded.
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    /// Free-form labels such as "parameters are a convention".
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(resolved_config: &impl Serialize, seed: u64) -> Result<Self> {
        let bytes = serde_json::to_vec(resolved_config)?;
        let digest = Sha256::digest(&bytes);
        let config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            config_hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            notes: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
    pub slopes: Vec<SlopeRow>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(experiment: &str, provenance: Provenance) -> Self {
        Self {
            experiment: experiment.to_string(),
            rows: Vec::new(),
            slopes: Vec::new(),
            provenance,
        }
    }

    pub fn info(&mut self, n: Option<u64>, metric: &str, value: f64) {
        self.rows.push(ResultRow {
            n,
            metric: metric.to_string(),
            value,
            band: None,
            verdict: Verdict::Info,
        });
    }

    /// Adds a row whose verdict is membership in `band`.
    pub fn check(&mut self, n: Option<u64>, metric: &str, value: f64, band: Band) -> Verdict {
        let verdict = Verdict::from_bool(band.contains(value));
        self.rows.push(ResultRow {
            n,
            metric: metric.to_string(),
            value,
            band: Some(band),
            verdict,
        });
        verdict
    }

    /// Fits `log y` on `log n` and checks the slope against `band`;
    /// fits with `R² < MIN_R2` are flagged.
    pub fn slope(&mut self, metric: &str, ns: &[u64], ys: &[f64], band: Band) -> &SlopeRow {
        let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let fit = loglog_fit(&nf, ys);
        let verdict = match fit {
            None => Verdict::Flagged,
            Some(f) if f.r2 < MIN_R2 => Verdict::Flagged,
            Some(f) => Verdict::from_bool(band.contains(f.slope)),
        };
        self.slopes.push(SlopeRow {
            metric: metric.to_string(),
            fit,
            band,
            verdict,
        });
        self.slopes.last().expect("just pushed")
    }

    pub fn all_pass(&self) -> bool {
        !self
            .rows
            .iter()
            .map(|r| r.verdict)
            .chain(self.slopes.iter().map(|s| s.verdict))
            .any(Verdict::is_failure)
    }

    pub fn failures(&self) -> Vec<String> {
        let rows = self
            .rows
            .iter()
            .filter(|r| r.verdict.is_failure())
            .map(|r| match r.n {
                Some(n) => format!("{} at n={n}: {}", r.metric, r.value),
                None => format!("{}: {}", r.metric, r.value),
            });
        let slopes = self
            .slopes
            .iter()
            .filter(|s| s.verdict.is_failure())
            .map(|s| {
                format!(
                    "slope of {}: {:?}",
                    s.metric,
                    s.fit.map(|f| (f.slope, f.r2))
                )
            });
        rows.chain(slopes).collect()
    }

    /// Row lookup by metric and `n`.
    pub fn value(&self, metric: &str, n: Option<u64>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.n == n)
            .map(|r| r.value)
    }

    pub fn slope_row(&self, metric: &str) -> Option<&SlopeRow> {
        self.slopes.iter().find(|s| s.metric == metric)
    }

    /// Values of `metric` ordered by `n`.
    pub fn series(&self, metric: &str) -> Vec<(u64, f64)> {
        let mut v: Vec<(u64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.metric == metric)
            .filter_map(|r| r.n.map(|n| (n, r.value)))
            .collect();
        v.sort_by_key(|p| p.0);
        v
    }

    /// CSV with columns `kind,n,metric,value,lo,hi,slope,r2,rmse,verdict`.
    /// Slope rows use `kind = slope` and leave `n` and `value` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "kind", "n", "metric", "value", "lo", "hi", "slope", "r2", "rmse", "verdict",
        ])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let verdict = |v: Verdict| {
            serde_json::to_value(v)
                .ok()
                .and_then(|j| j.as_str().map(String::from))
        };
        for r in &self.rows {
            w.write_record([
                "row".to_string(),
                r.n.map_or(String::new(), |n| n.to_string()),
                r.metric.clone(),
                format!("{:e}", r.value),
                opt(r.band.and_then(|b| b.lo)),
                opt(r.band.and_then(|b| b.hi)),
                String::new(),
                String::new(),
                String::new(),
                verdict(r.verdict).unwrap_or_default(),
            ])?;
        }
        for s in &self.slopes {
            w.write_record([
                "slope".to_string(),
                String::new(),
                s.metric.clone(),
                String::new(),
                opt(s.band.lo),
                opt(s.band.hi),
                opt(s.fit.map(|f| f.slope)),
                opt(s.fit.map(|f| f.r2)),
                opt(s.fit.map(|f| f.rmse)),
                verdict(s.verdict).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per claim, for terminal output.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "# {} (config {})\n",
            self.experiment,
            &self.provenance.config_hash[..12]
        );
        for r in self.rows.iter().filter(|r| r.verdict != Verdict::Info) {
            let n = r.n.map_or(String::new(), |n| format!(" n={n}"));
            let band = r.band.map_or(String::new(), |b| b.render());
            s.push_str(&format!(
                "{:?}\t{}{}\t{:.6e}\t{}\n",
                r.verdict, r.metric, n, r.value, band
            ));
        }
        for sl in &self.slopes {
            let fit = sl.fit.map_or("no fit".into(), |f| {
                format!("slope {:.4} R2 {:.4}", f.slope, f.r2)
            });
            s.push_str(&format!(
                "{:?}\tslope({})\t{}\t{}\n",
                sl.verdict,
                sl.metric,
                fit,
                sl.band.render()
            ));
        }
        s
    }
}
