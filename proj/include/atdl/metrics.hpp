#ifndef ATDL_METRICS_HPP
#define ATDL_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace atdl {

/// Binary confusion counts, or a full DxD tally (row = truth, col = call)
/// when no positive label was singled out.
struct Confusion {
    bool binary = true;
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts; // num_classes x num_classes, row-major

    std::uint64_t total() const;
    std::uint64_t &at(std::size_t truth, std::size_t call) {
        return counts[truth * num_classes + call];
    }
    std::uint64_t at(std::size_t truth, std::size_t call) const {
        return counts[truth * num_classes + call];
    }
};

Confusion confusion(const std::vector<std::size_t> &predictions,
                    const std::vector<std::size_t> &truths,
                    std::optional<std::size_t> positive_label = std::nullopt);

/// A metric with a zero denominator is reported as an empty optional, never
/// as NaN.
struct MetricReport {
    std::optional<double> ppv, npv, mcc, f1, acc;
};

MetricReport report(const Confusion &c);

/// Fraction of correct calls; defined for both binary and multiclass tallies.
double accuracy(const Confusion &c);

/// Renders a metric for tables; undefined values show as "-".
std::string format_metric(const std::optional<double> &m, int precision = 3);

} // namespace atdl

#endif
