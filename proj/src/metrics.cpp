#include <algorithm>
#include <numeric>

#include "timbre/metrics.hpp"

namespace timbre::metrics {

nlohmann::json EvalResult::to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["metrics"] = scalars;
    if (!per_label.empty()) j["per_label"] = per_label;
    if (!excluded_labels.empty()) j["excluded_labels"] = excluded_labels;
    return j;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths) {
    if (predictions.empty() || predictions.size() != truths.size())
        throw MetricsError("accuracy: empty or mismatched inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truths[i]) ++hits;
    return double(hits) / double(predictions.size());
}

std::vector<float> aggregate_song(const std::vector<std::vector<float>>& outputs) {
    if (outputs.empty()) throw MetricsError("aggregate_song: empty group");
    std::vector<float> mean(outputs[0].size(), 0.0f);
    for (const auto& o : outputs) {
        if (o.size() != mean.size()) throw MetricsError("aggregate_song: dimension mismatch");
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += o[k];
    }
    for (auto& v : mean) v /= float(outputs.size());
    return mean;
}

namespace {
double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }
double f1_of(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }
}  // namespace

EvalResult prf_multilabel(const std::vector<std::vector<float>>& scores,
                          const std::vector<std::vector<float>>& truths, double threshold) {
    if (scores.empty() || scores.size() != truths.size())
        throw MetricsError("prf: empty or mismatched inputs");
    const std::size_t K = scores[0].size();

    std::vector<long> tp(K, 0), fp(K, 0), fn(K, 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != K || truths[i].size() != K)
            throw MetricsError("prf: inconsistent label dimension");
        for (std::size_t k = 0; k < K; ++k) {
            const bool pred = scores[i][k] >= threshold;
            const bool truth = truths[i][k] > 0.5f;
            if (pred && truth) ++tp[k];
            else if (pred) ++fp[k];
            else if (truth) ++fn[k];
        }
    }

    long tp_all = 0, fp_all = 0, fn_all = 0;
    double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
    EvalResult res;
    res.task = "multi_label";
    for (std::size_t k = 0; k < K; ++k) {
        tp_all += tp[k];
        fp_all += fp[k];
        fn_all += fn[k];
        const double p = safe_div(double(tp[k]), double(tp[k] + fp[k]));
        const double r = safe_div(double(tp[k]), double(tp[k] + fn[k]));
        const double f1 = f1_of(p, r);
        macro_p += p;
        macro_r += r;
        macro_f1 += f1;
        res.per_label.push_back({{"precision", p}, {"recall", r}, {"f1", f1}});
    }
    const double micro_p = safe_div(double(tp_all), double(tp_all + fp_all));
    const double micro_r = safe_div(double(tp_all), double(tp_all + fn_all));
    res.scalars["micro_precision"] = micro_p;
    res.scalars["micro_recall"] = micro_r;
    res.scalars["micro_f1"] = f1_of(micro_p, micro_r);
    res.scalars["macro_precision"] = macro_p / double(K);
    res.scalars["macro_recall"] = macro_r / double(K);
    res.scalars["macro_f1"] = macro_f1 / double(K);
    return res;
}

double auc_binary(const std::vector<float>& scores, const std::vector<int>& truths) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tied scores
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg_rank;
        i = j + 1;
    }

    double rank_sum_pos = 0.0;
    long n_pos = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (truths[k]) {
            rank_sum_pos += rank[k];
            ++n_pos;
        }
    const long n_neg = long(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricsError("auc: needs both classes");
    return (rank_sum_pos - double(n_pos) * (double(n_pos) + 1.0) / 2.0) /
           (double(n_pos) * double(n_neg));
}

EvalResult auc_per_tag(const std::vector<std::vector<float>>& scores,
                       const std::vector<std::vector<float>>& truths) {
    if (scores.empty() || scores.size() != truths.size())
        throw MetricsError("auc: empty or mismatched inputs");
    const std::size_t K = scores[0].size();

    EvalResult res;
    res.task = "auto_tagging";
    double sum = 0.0;
    int scored = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i].size() != K || truths[i].size() != K)
            throw MetricsError("auc: inconsistent tag dimension");
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<float> s(scores.size());
        std::vector<int> t(scores.size());
        long n_pos = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            s[i] = scores[i][k];
            t[i] = truths[i][k] > 0.5f ? 1 : 0;
            n_pos += t[i];
        }
        if (n_pos == 0 || n_pos == long(scores.size())) {
            res.excluded_labels.push_back(static_cast<int>(k));
            res.per_label.push_back({{"auc", -1.0}});
            continue;
        }
        const double a = auc_binary(s, t);
        res.per_label.push_back({{"auc", a}});
        sum += a;
        ++scored;
    }
    if (scored == 0) throw MetricsError("auc: no scoreable tag");
    res.scalars["auc"] = sum / double(scored);
    res.scalars["n_scored_tags"] = double(scored);
    return res;
}

}  // namespace timbre::metrics
