use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Bundled LED I-V samples (`volts, amps`) that the default model is fitted to.
pub const DEFAULT_IV_TABLE: &str = include_str!("../../data/led_iv.csv");

/// Polynomial order of the default LED model.
pub const DEFAULT_ORDER: usize = 5;

/// Memoryless LED response `y = Σ_{k=1..K} a_k x^k` (no constant term).
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialNonlinearity {
    coeffs: Vec<f64>,
}

impl PolynomialNonlinearity {
    /// `coeffs[k-1]` multiplies `x^k`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "nonlinearity needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        if coeffs.iter().all(|a| *a == 0.0) {
            return Err(Error::InvalidParameter("all coefficients are zero".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn identity() -> Self {
        Self { coeffs: vec![1.0] }
    }

    /// 5th-order fit to [`DEFAULT_IV_TABLE`].
    pub fn default_led() -> Self {
        static DEFAULT: OnceLock<PolynomialNonlinearity> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                let samples = parse_iv_csv(DEFAULT_IV_TABLE).expect("bundled I-V table parses");
                fit_polynomial_iv(&samples, DEFAULT_ORDER).expect("bundled I-V table fits")
            })
            .clone()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn apply(&self, x: f64) -> f64 {
        // Horner on a_1 + a_2 x + ... then one final factor of x
        x * self.coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.map(|v| self.apply(v))
    }

    /// Checks `apply` is strictly increasing on a grid over `[lo, hi]`.
    pub fn is_strictly_increasing_on(&self, lo: f64, hi: f64, step: f64) -> bool {
        let n = ((hi - lo) / step).round() as usize;
        let mut prev = self.apply(lo);
        (1..=n).all(|i| {
            let y = self.apply(lo + (hi - lo) * i as f64 / n as f64);
            let ok = y > prev;
            prev = y;
            ok
        })
    }

    /// Whitespace-separated `a_1 ... a_K`, 17 significant digits.
    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|a| format!("{a:.16e}")).collect();
        parts.join(" ") + "\n"
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let coeffs = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace)
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("coefficient {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }
}

pub fn apply_led_nonlinearity(x: f64, nl: &PolynomialNonlinearity) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite drive voltage {x}")));
    }
    Ok(nl.apply(x))
}

/// Least-squares fit of `I ≈ Σ_{k=1..K} a_k V^k` to `(V, I)` samples.
pub fn fit_polynomial_iv(samples: &[(f64, f64)], order: usize) -> Result<PolynomialNonlinearity> {
    if order == 0 {
        return Err(Error::InvalidParameter("fit order must be >= 1".into()));
    }
    if samples
        .iter()
        .any(|(v, i)| !v.is_finite() || !i.is_finite())
    {
        return Err(Error::InvalidParameter("non-finite I-V sample".into()));
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).filter(|v| *v != 0.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < order {
        return Err(Error::RankDeficient(format!(
            "{} distinct nonzero voltages cannot determine {order} coefficients",
            distinct.len()
        )));
    }

    let n = samples.len();
    let mut design = DMatrix::from_fn(n, order, |i, k| samples[i].0.powi(k as i32 + 1));
    // equilibrate columns; V^5 and V^1 differ by orders of magnitude
    let scales: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    for (k, s) in scales.iter().enumerate() {
        design.column_mut(k).unscale_mut(*s);
    }
    let rhs = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= smax * 1e-13 {
        return Err(Error::RankDeficient(format!(
            "design matrix condition number {:.3e} too large",
            smax / smin
        )));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let coeffs = sol.iter().zip(&scales).map(|(c, s)| c / s).collect();
    PolynomialNonlinearity::new(coeffs)
}

/// Two-column `volts, amps` CSV; `#` lines and a header row are skipped.
pub fn parse_iv_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "I-V row {} has {} fields, expected 2",
                line + 1,
                record.len()
            )));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(v), Ok(i)) => out.push((v, i)),
            _ if line == 0 => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "I-V row {} is not numeric: {:?}",
                    line + 1,
                    record
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("I-V table has no samples".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_sum(coeffs: &[f64], x: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * x.powi(k as i32 + 1))
            .sum()
    }

    #[test]
    fn apply_examples() {
        let id = PolynomialNonlinearity::new(vec![1.0]).unwrap();
        assert_eq!(apply_led_nonlinearity(1.8, &id).unwrap(), 1.8);
        let sq = PolynomialNonlinearity::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(apply_led_nonlinearity(2.0, &sq).unwrap(), 4.0);
        let nl = PolynomialNonlinearity::default_led();
        let y = apply_led_nonlinearity(1.7, &nl).unwrap();
        let oracle = power_sum(nl.coeffs(), 1.7);
        assert!((y - oracle).abs() <= 1e-12 * oracle.abs().max(1e-3));
        assert!(apply_led_nonlinearity(f64::NAN, &nl).is_err());
    }

    #[test]
    fn coefficient_validation() {
        assert!(PolynomialNonlinearity::new(vec![]).is_err());
        assert!(PolynomialNonlinearity::new(vec![0.0, 0.0]).is_err());
        assert!(PolynomialNonlinearity::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn fit_recovers_exact_quadratic() {
        let truth = [0.5, 0.25];
        let samples: Vec<_> = (0..20)
            .map(|i| {
                let v = 1.7 + 0.3 * i as f64 / 19.0;
                (v, power_sum(&truth, v))
            })
            .collect();
        let fit = fit_polynomial_iv(&samples, 2).unwrap();
        for (a, b) in fit.coeffs().iter().zip(truth) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn fit_quintic_residual() {
        let truth = [0.3, -0.2, 0.05, 0.01, -0.002];
        let samples: Vec<_> = (0..31)
            .map(|i| {
                let v = 1.7 + 0.01 * i as f64;
                (v, power_sum(&truth, v))
            })
            .collect();
        let fit = fit_polynomial_iv(&samples, 5).unwrap();
        let num: f64 = samples
            .iter()
            .map(|(v, i)| (fit.apply(*v) - i).powi(2))
            .sum();
        let den: f64 = samples.iter().map(|(_, i)| i * i).sum();
        assert!((num / den).sqrt() <= 1e-9);
    }

    #[test]
    fn fit_single_sample() {
        let fit = fit_polynomial_iv(&[(2.0, 0.01)], 1).unwrap();
        assert!((fit.coeffs()[0] - 0.005).abs() < 1e-18);
    }

    #[test]
    fn fit_rank_deficient() {
        let samples = [(1.8, 0.01), (1.8, 0.011), (1.9, 0.012)];
        assert!(matches!(
            fit_polynomial_iv(&samples, 3),
            Err(Error::RankDeficient(_))
        ));
        assert!(fit_polynomial_iv(&samples, 0).is_err());
    }

    #[test]
    fn default_model_is_monotone_and_compressive() {
        let nl = PolynomialNonlinearity::default_led();
        assert_eq!(nl.order(), DEFAULT_ORDER);
        assert!(nl.is_strictly_increasing_on(1.7, 2.0, 1e-4));
        // successive 4-PAM level gaps shrink
        let y: Vec<f64> = [1.7, 1.8, 1.9, 2.0].iter().map(|v| nl.apply(*v)).collect();
        assert!(y[1] - y[0] > y[2] - y[1] && y[2] - y[1] > y[3] - y[2]);
    }

    #[test]
    fn default_fit_tracks_table() {
        let nl = PolynomialNonlinearity::default_led();
        let samples = parse_iv_csv(DEFAULT_IV_TABLE).unwrap();
        for (v, i) in samples {
            assert!(
                (nl.apply(v) - i).abs() < 1e-2 * i,
                "{v}: {} vs {i}",
                nl.apply(v)
            );
        }
    }

    #[test]
    fn text_round_trip() {
        let nl = PolynomialNonlinearity::default_led();
        let back = PolynomialNonlinearity::from_text(&nl.to_text()).unwrap();
        assert_eq!(nl, back);
        assert!(PolynomialNonlinearity::from_text("1.0 abc").is_err());
    }

    #[test]
    fn iv_csv_parsing() {
        let s = parse_iv_csv("# comment\nvolts, amps\n1.7, 0.001\n1.8,0.002\n").unwrap();
        assert_eq!(s, vec![(1.7, 0.001), (1.8, 0.002)]);
        assert!(parse_iv_csv("volts,amps\n1.7\n").is_err());
        assert!(parse_iv_csv("volts,amps\n1.7,x\n").is_err());
        assert!(parse_iv_csv("volts,amps\n").is_err());
    }
}
