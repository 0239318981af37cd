#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace pqvit {

struct ConfusionMatrix {
    std::size_t n = 0;
    std::vector<std::uint64_t> counts;  // row = true class, column = predicted

    explicit ConfusionMatrix(std::size_t n_classes)
        : n(n_classes), counts(n_classes * n_classes, 0) {}

    std::uint64_t& at(std::size_t t, std::size_t p) { return counts[t * n + p]; }
    std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t * n + p]; }

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(std::size_t i) const;
    std::uint64_t col_sum(std::size_t j) const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& truth,
                                 const std::vector<int>& pred, std::size_t n);

// Per-class precision/recall/f1; nullopt marks a 0/0 case.
struct ClassMetrics {
    std::optional<double> precision, recall, f1;
};
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

// Weighted mean over classes where the metric is defined; undefined classes
// are skipped (and counted in `skipped`). Default weights are uniform 1/n.
struct AggregateMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    std::size_t skipped = 0;
};
AggregateMetrics aggregate_metrics(const std::vector<ClassMetrics>& per_class,
                                   const std::vector<double>& weights = {});
// Support-weighted variant (weights = true-class counts).
AggregateMetrics aggregate_metrics_support(const ConfusionMatrix& cm,
                                           const std::vector<ClassMetrics>& per_class);

double accuracy(const ConfusionMatrix& cm);

struct MetricsReport {
    ConfusionMatrix cm{0};
    std::vector<ClassMetrics> per_class;
    AggregateMetrics aggregate;
    double accuracy = 0.0;
};
MetricsReport metrics_report(const std::vector<int>& truth,
                             const std::vector<int>& pred, std::size_t n);

// CSV exports: raw counts, row-percentages, per-class table, one summary row.
void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path,
                         bool row_percent);
void write_per_class_csv(const std::vector<ClassMetrics>& per_class,
                         const std::filesystem::path& path);
void write_summary_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace pqvit
