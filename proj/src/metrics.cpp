#include "pqvit/metrics.hpp"

#include <fstream>
#include <stdexcept>

namespace pqvit {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += at(i, i);
    return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < n; ++j) s += at(i, j);
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += at(i, j);
    return s;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& truth,
                                 const std::vector<int>& pred, std::size_t n) {
    if (truth.size() != pred.size())
        throw std::invalid_argument("confusion_matrix: truth/pred length mismatch");
    ConfusionMatrix cm(n);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] < 0 || std::size_t(truth[k]) >= n || pred[k] < 0 ||
            std::size_t(pred[k]) >= n)
            throw std::out_of_range("confusion_matrix: label out of range at index " +
                                    std::to_string(k));
        ++cm.at(std::size_t(truth[k]), std::size_t(pred[k]));
    }
    return cm;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
    std::vector<ClassMetrics> out(cm.n);
    for (std::size_t i = 0; i < cm.n; ++i) {
        const std::uint64_t tp = cm.at(i, i);
        const std::uint64_t fp = cm.col_sum(i) - tp;
        const std::uint64_t fn = cm.row_sum(i) - tp;
        if (tp + fp > 0) out[i].precision = double(tp) / double(tp + fp);
        if (tp + fn > 0) out[i].recall = double(tp) / double(tp + fn);
        if (out[i].precision && out[i].recall) {
            const double p = *out[i].precision, r = *out[i].recall;
            out[i].f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        }
    }
    return out;
}

AggregateMetrics aggregate_metrics(const std::vector<ClassMetrics>& per_class,
                                   const std::vector<double>& weights) {
    if (!weights.empty() && weights.size() != per_class.size())
        throw std::invalid_argument("aggregate_metrics: one weight per class required");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("aggregate_metrics: weights must be positive");

    AggregateMetrics agg;
    double wp = 0.0, wr = 0.0, wf = 0.0;
    double sp = 0.0, sr = 0.0, sf = 0.0;
    for (std::size_t i = 0; i < per_class.size(); ++i) {
        const double w = weights.empty() ? 1.0 / double(per_class.size()) : weights[i];
        const ClassMetrics& m = per_class[i];
        if (!m.precision && !m.recall) ++agg.skipped;
        if (m.precision) {
            sp += w * *m.precision;
            wp += w;
        }
        if (m.recall) {
            sr += w * *m.recall;
            wr += w;
        }
        if (m.f1) {
            sf += w * *m.f1;
            wf += w;
        }
    }
    if (wp == 0.0 && wr == 0.0)
        throw std::domain_error("aggregate_metrics: every class is undefined");
    agg.precision = wp > 0.0 ? sp / wp : 0.0;
    agg.recall = wr > 0.0 ? sr / wr : 0.0;
    agg.f1 = wf > 0.0 ? sf / wf : 0.0;
    return agg;
}

AggregateMetrics aggregate_metrics_support(const ConfusionMatrix& cm,
                                           const std::vector<ClassMetrics>& per_class) {
    AggregateMetrics agg;
    double wp = 0.0, wr = 0.0, wf = 0.0;
    double sp = 0.0, sr = 0.0, sf = 0.0;
    for (std::size_t i = 0; i < per_class.size(); ++i) {
        const double w = double(cm.row_sum(i));
        const ClassMetrics& m = per_class[i];
        if (!m.precision && !m.recall) ++agg.skipped;
        if (w == 0.0) continue;
        if (m.precision) {
            sp += w * *m.precision;
            wp += w;
        }
        if (m.recall) {
            sr += w * *m.recall;
            wr += w;
        }
        if (m.f1) {
            sf += w * *m.f1;
            wf += w;
        }
    }
    if (wp == 0.0 && wr == 0.0)
        throw std::domain_error("aggregate_metrics_support: every class is undefined");
    agg.precision = wp > 0.0 ? sp / wp : 0.0;
    agg.recall = wr > 0.0 ? sr / wr : 0.0;
    agg.f1 = wf > 0.0 ? sf / wf : 0.0;
    return agg;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw std::domain_error("accuracy: empty confusion matrix");
    return double(cm.trace()) / double(total);
}

MetricsReport metrics_report(const std::vector<int>& truth,
                             const std::vector<int>& pred, std::size_t n) {
    MetricsReport r;
    r.cm = confusion_matrix(truth, pred, n);
    r.per_class = per_class_metrics(r.cm);
    r.aggregate = aggregate_metrics(r.per_class);
    r.accuracy = accuracy(r.cm);
    return r;
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path,
                         bool row_percent) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("write_confusion_csv: cannot write " + path.string());
    f << "true\\pred";
    for (std::size_t j = 0; j < cm.n; ++j) f << ",C" << j;
    f << '\n';
    f.precision(10);
    for (std::size_t i = 0; i < cm.n; ++i) {
        f << 'C' << i;
        const std::uint64_t rs = cm.row_sum(i);
        for (std::size_t j = 0; j < cm.n; ++j) {
            if (row_percent)
                f << ',' << (rs ? 100.0 * double(cm.at(i, j)) / double(rs) : 0.0);
            else
                f << ',' << cm.at(i, j);
        }
        f << '\n';
    }
}

void write_per_class_csv(const std::vector<ClassMetrics>& per_class,
                         const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("write_per_class_csv: cannot write " + path.string());
    f << "class,precision,recall,f1\n";
    f.precision(10);
    auto cell = [&](const std::optional<double>& v) {
        if (v)
            f << *v;
        else
            f << "undefined";
    };
    for (std::size_t i = 0; i < per_class.size(); ++i) {
        f << 'C' << i << ',';
        cell(per_class[i].precision);
        f << ',';
        cell(per_class[i].recall);
        f << ',';
        cell(per_class[i].f1);
        f << '\n';
    }
}

void write_summary_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("write_summary_csv: cannot write " + path.string());
    f.precision(10);
    f << "accuracy,precision,recall,f1\n";
    f << report.accuracy << ',' << report.aggregate.precision << ','
      << report.aggregate.recall << ',' << report.aggregate.f1 << '\n';
}

}  // namespace pqvit
