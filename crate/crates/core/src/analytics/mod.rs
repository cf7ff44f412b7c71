//! Statistics, ranking and comparison reports over edge files.

pub mod diff;
pub mod freqdist;
pub mod overlap;
pub mod pagerank;
pub mod stats;

pub use diff::{temporal_diff, CountSnapshot, DiffReport, GrowthRow, GrowthStatus};
pub use freqdist::{relation_frequency_distribution, relation_histogram};
pub use overlap::{compute_overlap, OverlapReport};
pub use pagerank::{pagerank, DirectedGraph, PageRank, PageRankConfig};
pub use stats::{compute_stats, GraphStats, RankedNode, StatsOptions};

/// Integer formatting with `,` thousands separators.
pub fn format_count(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// `round(numerator / denominator)` with halves rounded away from zero.
pub(crate) fn round_ratio(numerator: u128, denominator: u128) -> u128 {
    (2 * numerator + denominator) / (2 * denominator)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands_separators() {
        assert_eq!(format_count(0), "0");
        assert_eq!(format_count(999), "999");
        assert_eq!(format_count(1000), "1,000");
        assert_eq!(format_count(1_105_944_515), "1,105,944,515");
    }

    #[test]
    fn half_rounds_up() {
        assert_eq!(round_ratio(5, 2), 3);
        assert_eq!(round_ratio(4, 3), 1);
        assert_eq!(round_ratio(5, 3), 2);
    }
}
