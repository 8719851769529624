#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace timbre::metrics {

struct MetricsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalResult {
    std::string task;
    std::map<std::string, double> scalars;
    // per-label rows where applicable (label index -> named values)
    std::vector<std::map<std::string, double>> per_label;
    std::vector<int> excluded_labels;  // tags without both classes (AUC)

    nlohmann::json to_json() const;
};

// Fraction of exact matches.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths);

// Mean per output dimension over the excerpt outputs of one song.
std::vector<float> aggregate_song(const std::vector<std::vector<float>>& outputs);

// Multi-label precision/recall/F1 at a threshold, micro (global counts) and
// macro (unweighted per-label mean). Zero-denominator cases score 0.
EvalResult prf_multilabel(const std::vector<std::vector<float>>& scores,
                          const std::vector<std::vector<float>>& truths,
                          double threshold = 0.2);

// Per-tag ROC AUC via the rank statistic (ties count one half); the scalar
// "auc" is the unweighted mean over tags that have both classes present.
EvalResult auc_per_tag(const std::vector<std::vector<float>>& scores,
                       const std::vector<std::vector<float>>& truths);

// Rank-statistic AUC for one tag.
double auc_binary(const std::vector<float>& scores, const std::vector<int>& truths);

}  // namespace timbre::metrics
