use super::StatsError;

/// Bonferroni-adjusted p (`min(1, m * p)`) and its star level.
pub fn bonferroni(p: f64, m: usize) -> Result<(f64, u8), StatsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidP(p));
    }
    if m == 0 {
        return Err(StatsError::InvalidTestCount);
    }
    let adjusted = (p * m as f64).min(1.0);
    Ok((adjusted, stars(adjusted)))
}

/// 3 below 0.001, 2 below 0.01, 1 below 0.05, else 0.
pub fn stars(p: f64) -> u8 {
    if p < 0.001 {
        3
    } else if p < 0.01 {
        2
    } else if p < 0.05 {
        1
    } else {
        0
    }
}

/// `***`, `**`, `*` or `-` for non-significant results.
pub fn stars_label(stars: u8) -> &'static str {
    match stars {
        0 => "-",
        1 => "*",
        2 => "**",
        _ => "***",
    }
}
