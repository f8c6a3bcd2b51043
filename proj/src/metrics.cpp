#include "atdl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "atdl/errors.hpp"

namespace atdl {

std::uint64_t Confusion::total() const {
    if (binary) return tp + fp + fn + tn;
    std::uint64_t sum = 0;
    for (std::uint64_t c : counts) sum += c;
    return sum;
}

Confusion confusion(const std::vector<std::size_t> &predictions,
                    const std::vector<std::size_t> &truths,
                    std::optional<std::size_t> positive_label) {
    if (predictions.size() != truths.size())
        throw ArgumentError("confusion: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(truths.size()) + " truths");
    if (predictions.empty()) throw ArgumentError("confusion: no samples");

    Confusion c;
    if (positive_label) {
        const std::size_t pos = *positive_label;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool truth_pos = truths[i] == pos;
            const bool call_pos = predictions[i] == pos;
            if (truth_pos && call_pos)
                ++c.tp;
            else if (!truth_pos && call_pos)
                ++c.fp;
            else if (truth_pos && !call_pos)
                ++c.fn;
            else
                ++c.tn;
        }
        return c;
    }

    std::size_t d = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        d = std::max({d, predictions[i] + 1, truths[i] + 1});
    c.binary = false;
    c.num_classes = d;
    c.counts.assign(d * d, 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) ++c.at(truths[i], predictions[i]);
    return c;
}

MetricReport report(const Confusion &c) {
    MetricReport r;
    if (!c.binary) {
        r.acc = accuracy(c);
        return r;
    }
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    if (tp + fp > 0) r.ppv = tp / (tp + fp);
    if (tn + fn > 0) r.npv = tn / (tn + fn);
    if (tp + fp + fn + tn > 0) r.acc = (tp + tn) / (tp + fp + fn + tn);
    if (2 * tp + fp + fn > 0) r.f1 = 2 * tp / (2 * tp + fp + fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom > 0) r.mcc = (tp * tn - fp * fn) / std::sqrt(denom);
    return r;
}

double accuracy(const Confusion &c) {
    const std::uint64_t total = c.total();
    if (total == 0) throw ArgumentError("accuracy: empty confusion");
    if (c.binary) return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < c.num_classes; ++i) correct += c.at(i, i);
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::string format_metric(const std::optional<double> &m, int precision) {
    if (!m) return "-";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << *m;
    return os.str();
}

} // namespace atdl
