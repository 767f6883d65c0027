use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{bonferroni, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub r: f64,
    /// Two-sided p from the t distribution with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub p_adjusted: f64,
    pub stars: u8,
}

/// Pearson product-moment correlation; stars use `m = 1`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationCell, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { needed: 3, got: n });
    }
    let mean = |v: &[f64]| super::compensated_sum(v.iter().copied()) / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let p_value = pearson_p(r, n);
    let (p_adjusted, stars) = bonferroni(p_value, 1)?;
    Ok(CorrelationCell {
        r,
        p_value,
        p_adjusted,
        stars,
    })
}

fn pearson_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub cells: Vec<Vec<CorrelationCell>>,
    pub m_tests: usize,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<&CorrelationCell> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(&self.cells[i][j])
    }

    /// Markdown table with `r` to three decimals and adjusted stars.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| |");
        for name in &self.names {
            out.push_str(&format!(" {name} |"));
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.names.len()));
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.cells) {
            out.push_str(&format!("| {name} |"));
            for cell in row {
                let stars = "*".repeat(cell.stars as usize);
                out.push_str(&format!(" {:.3}{stars} |", cell.r));
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise correlations with Bonferroni-adjusted stars. `m_tests` defaults
/// to the number of off-diagonal pairs.
pub fn correlation_matrix(
    columns: &[(String, Vec<f64>)],
    m_tests: Option<usize>,
) -> Result<CorrelationMatrix, StatsError> {
    let k = columns.len();
    let m = m_tests.unwrap_or((k * k.saturating_sub(1) / 2).max(1));
    let mut cells: Vec<Vec<CorrelationCell>> = vec![Vec::with_capacity(k); k];
    for i in 0..k {
        for j in 0..k {
            let cell = if i == j {
                if columns[i].1.len() < 3 {
                    return Err(StatsError::TooFewPoints {
                        needed: 3,
                        got: columns[i].1.len(),
                    });
                }
                CorrelationCell {
                    r: 1.0,
                    p_value: 0.0,
                    p_adjusted: 0.0,
                    stars: 0,
                }
            } else if j < i {
                cells[j][i].clone()
            } else {
                let cell = pearson(&columns[i].1, &columns[j].1).map_err(|e| match e {
                    StatsError::ZeroVariance(_) => StatsError::ZeroVariance(columns[i].0.clone()),
                    other => other,
                })?;
                let (p_adjusted, stars) = bonferroni(cell.p_value, m)?;
                CorrelationCell {
                    p_adjusted,
                    stars,
                    ..cell
                }
            };
            cells[i].push(cell);
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|(n, _)| n.clone()).collect(),
        cells,
        m_tests: m,
    })
}
