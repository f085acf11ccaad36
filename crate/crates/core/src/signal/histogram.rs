use std::fmt::Write as _;
use std::io::BufRead;

use super::SignalError;

const SMOOTHING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    JensenShannon,
}

/// Real and simulated reading histograms over shared edges on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramReport {
    pub edges: Vec<f64>,
    pub real_counts: Vec<u64>,
    pub sim_counts: Vec<u64>,
    /// In bits, within [0, 1].
    pub divergence: f64,
    pub kind: DivergenceKind,
}

impl HistogramReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind jensen-shannon");
        let _ = writeln!(s, "divergence_bits {:e}", self.divergence);
        let _ = writeln!(s, "bins {}", self.real_counts.len());
        let _ = writeln!(s, "# lo hi real sim");
        for (i, (r, m)) in self.real_counts.iter().zip(&self.sim_counts).enumerate() {
            let _ = writeln!(s, "{} {} {r} {m}", self.edges[i], self.edges[i + 1]);
        }
        s
    }
}

fn bin_counts(samples: &[f64], bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let b = if x.is_nan() {
            continue;
        } else {
            ((x.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
        };
        counts[b] += 1;
    }
    counts
}

fn probabilities(counts: &[u64]) -> Vec<f64> {
    let total = counts.iter().sum::<u64>() as f64;
    let raw: Vec<f64> = counts
        .iter()
        .map(|&c| if total > 0.0 { c as f64 / total } else { 0.0 } + SMOOTHING)
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / z).collect()
}

fn kl_to_mixture(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| a * (a / ((a + b) / 2.0)).log2())
        .sum()
}

/// Histograms both sample sets over `bins` equal bins on [0, 1] (values outside
/// are clipped to the end bins) and reports the Jensen–Shannon divergence.
pub fn histogram_compare(
    real_samples: &[f64],
    sim_samples: &[f64],
    bins: usize,
) -> HistogramReport {
    assert!(bins >= 2, "need at least 2 bins");
    let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let real_counts = bin_counts(real_samples, bins);
    let sim_counts = bin_counts(sim_samples, bins);
    let p = probabilities(&real_counts);
    let q = probabilities(&sim_counts);
    let js = 0.5 * kl_to_mixture(&p, &q) + 0.5 * kl_to_mixture(&q, &p);
    HistogramReport {
        edges,
        real_counts,
        sim_counts,
        divergence: js.clamp(0.0, 1.0),
        kind: DivergenceKind::JensenShannon,
    }
}

/// Reads numbers separated by commas or whitespace. A first line
/// that does not parse is taken as a header.
pub fn read_samples(input: impl BufRead) -> Result<Vec<f64>, SignalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let parsed: Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|w| !w.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match parsed {
            Ok(v) => out.extend(v),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(SignalError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_have_zero_divergence() {
        let a = [0.1, 0.2, 0.2, 0.7, 1.0];
        assert_eq!(histogram_compare(&a, &a, 10).divergence, 0.0);
    }

    #[test]
    fn disjoint_supports_have_unit_divergence() {
        let r = histogram_compare(&[0.1; 100], &[0.9; 100], 10);
        assert!((r.divergence - 1.0).abs() < 1e-9, "{}", r.divergence);
        assert_eq!(r.real_counts[1], 100);
        assert_eq!(r.sim_counts[9], 100);
    }

    #[test]
    fn edges_and_clipping() {
        let r = histogram_compare(&[-0.5, 0.0, 1.0, 2.0], &[0.5], 4);
        assert_eq!(r.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.real_counts, vec![2, 0, 0, 2]);
        assert!(r.to_text().starts_with("kind jensen-shannon\n"));
    }

    #[test]
    fn samples_parse_with_header() {
        let v = read_samples("reading\n0.1, 0.2\n0.3 0.4\n\n".as_bytes()).unwrap();
        assert_eq!(v, vec![0.1, 0.2, 0.3, 0.4]);
        assert!(read_samples("0.1\nx\n".as_bytes()).is_err());
    }
}
