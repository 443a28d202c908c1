use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::MeanSe;

/// Acceptance thresholds; estimators never hard-code them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    /// Half-width of the band around a target, in standard errors.
    pub se_band: f64,
    pub ks_max: f64,
    pub chi_p_min: f64,
    pub tv_max: f64,
    /// Minimal SD ratio between sizes `n` and `4n` of a concentrating statistic.
    pub sd_ratio_min: f64,
    /// Chi-square cells need at least this expected count.
    pub min_expected: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { se_band: 3.0, ks_max: 0.05, chi_p_min: 0.001, tv_max: 0.05, sd_ratio_min: 1.7, min_expected: 25.0 }
    }
}

/// `|est - target| ≤ band · se` (exact equality when the SE vanishes).
pub fn within_band(est: &MeanSe, target: f64, band: f64) -> bool {
    (est.mean - target).abs() <= band * est.se || est.mean == target
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub parameter: String,
    pub estimate: f64,
    pub se: f64,
    pub count: usize,
    pub target: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    /// Human-readable pass rule, e.g. `p > 0.001`.
    pub criterion: String,
    pub count: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub class: String,
    pub n: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub estimates: Vec<Estimate>,
    pub tests: Vec<TestResult>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, class: &str, n: Option<usize>, samples: usize, seed: u64) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            class: class.into(),
            n,
            samples,
            seed,
            parameters: BTreeMap::new(),
            estimates: Vec::new(),
            tests: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    /// Records an estimate; with a target it is checked against the SE band.
    pub fn estimate(&mut self, parameter: &str, est: MeanSe, target: Option<f64>, band: f64) -> bool {
        let pass = target.map(|t| within_band(&est, t, band));
        self.estimates.push(Estimate {
            parameter: parameter.into(),
            estimate: est.mean,
            se: est.se,
            count: est.count,
            target,
            pass,
        });
        pass.unwrap_or(true)
    }

    pub fn test(
        &mut self,
        name: &str,
        statistic: f64,
        p_value: Option<f64>,
        criterion: String,
        count: usize,
        pass: bool,
    ) -> bool {
        self.tests.push(TestResult { name: name.into(), statistic, p_value, criterion, count, pass });
        pass
    }

    /// Every declared check passed.
    pub fn passed(&self) -> bool {
        self.estimates.iter().all(|e| e.pass != Some(false)) && self.tests.iter().all(|t| t.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        let est = self.estimates.iter().filter(|e| e.pass == Some(false)).map(|e| e.parameter.clone());
        est.chain(self.tests.iter().filter(|t| !t.pass).map(|t| t.name.clone())).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Long-format rows: experiment, parameter, estimate, se, target, pass.
    pub fn write_csv<W: Write>(reports: &[ExperimentReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment", "class", "n", "parameter", "estimate", "se", "count", "target", "pass"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in reports {
            let n = r.n.map(|n| n.to_string()).unwrap_or_default();
            for e in &r.estimates {
                w.write_record([
                    r.experiment.as_str(),
                    &r.class,
                    &n,
                    &e.parameter,
                    &e.estimate.to_string(),
                    &e.se.to_string(),
                    &e.count.to_string(),
                    &opt(e.target),
                    &e.pass.map(|p| p.to_string()).unwrap_or_default(),
                ])?;
            }
            for t in &r.tests {
                w.write_record([
                    r.experiment.as_str(),
                    &r.class,
                    &n,
                    &t.name,
                    &t.statistic.to_string(),
                    "",
                    &t.count.to_string(),
                    &t.criterion,
                    &t.pass.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(reports: &[ExperimentReport], path: &Path) -> Result<()> {
        Self::write_csv(reports, std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_se;

    #[test]
    fn csv_and_pass_flags() {
        let mut r = ExperimentReport::new("demo", "separable", Some(10), 3, 1);
        assert!(r.estimate("mean", mean_se(&[1.0, 2.0, 3.0]), Some(2.0), 3.0));
        assert!(!r.test("ks", 0.2, None, "D < 0.05".into(), 3, false));
        assert!(!r.passed());
        assert_eq!(r.failures(), vec!["ks".to_string()]);
        let mut buf = Vec::new();
        ExperimentReport::write_csv(&[r.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("demo,separable,10,mean,2,"));
        assert!(r.to_json().unwrap().contains("\"experiment\": \"demo\""));
    }

    #[test]
    fn band() {
        let est = MeanSe { mean: 0.5, se: 0.01, sd: 0.1, count: 100 };
        assert!(within_band(&est, 0.52, 3.0));
        assert!(!within_band(&est, 0.54, 3.0));
        assert!(within_band(&MeanSe { mean: 1.0, ..Default::default() }, 1.0, 3.0));
    }
}
