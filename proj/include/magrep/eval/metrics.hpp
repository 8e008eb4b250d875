#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace magrep::eval {

struct Confusion {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    long total() const { return tp + fp + fn + tn; }
};

struct Metrics {
    std::vector<double> fold_accuracies;
    double mean_cv_accuracy = 0.0;
    double overall_accuracy = 0.0;  // resubstitution after the final refit
    double f1 = 0.0;
    Confusion confusion;
};

// k disjoint index sets partitioning 0..n-1, sizes within 1 of each other.
// Stratified splitting additionally keeps each fold's per-class count within
// 1 of the proportional share. Seeded shuffle.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k,
                                                  const std::vector<int>& labels, bool stratified,
                                                  std::uint64_t seed);

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// 2PR/(P+R); 0.0 when precision + recall is 0
double f1_binary(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                 int positive_label);

Confusion confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                           int positive_label);

}  // namespace magrep::eval
