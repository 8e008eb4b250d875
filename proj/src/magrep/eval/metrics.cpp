#include "magrep/eval/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "magrep/common/rng.hpp"

namespace magrep::eval {

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k,
                                                  const std::vector<int>& labels, bool stratified,
                                                  std::uint64_t seed) {
    if (k < 2) throw std::runtime_error("k must be >= 2");
    if (static_cast<std::size_t>(k) > n) throw std::runtime_error("k exceeds sample count");
    util::Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);

    if (!stratified) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        const std::size_t base = n / k;
        const std::size_t extra = n % k;
        std::size_t pos = 0;
        for (int f = 0; f < k; ++f) {
            const std::size_t take = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
            folds[f].assign(order.begin() + pos, order.begin() + pos + take);
            pos += take;
        }
        return folds;
    }

    if (labels.size() != n) throw std::runtime_error("labels size must equal n for stratified split");
    // shuffle within each class, then hand extras to the currently smallest
    // folds so totals stay balanced across classes
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    std::vector<std::size_t> fold_sizes(k, 0);
    for (auto& [label, members] : by_class) {
        rng.shuffle(members);
        const std::size_t base = members.size() / k;
        const int extra = static_cast<int>(members.size() % k);

        std::vector<int> fold_order(k);
        for (int f = 0; f < k; ++f) fold_order[f] = f;
        std::stable_sort(fold_order.begin(), fold_order.end(),
                         [&](int a, int b) { return fold_sizes[a] < fold_sizes[b]; });

        std::vector<std::size_t> take(k, base);
        for (int e = 0; e < extra; ++e) take[fold_order[e]] += 1;

        std::size_t pos = 0;
        for (int f = 0; f < k; ++f) {
            for (std::size_t t = 0; t < take[f]; ++t) folds[f].push_back(members[pos++]);
            fold_sizes[f] += take[f];
        }
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty()) throw std::runtime_error("accuracy of empty input");
    if (y_true.size() != y_pred.size()) throw std::runtime_error("accuracy size mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] == y_pred[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

Confusion confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                           int positive_label) {
    if (y_true.empty()) throw std::runtime_error("confusion matrix of empty input");
    if (y_true.size() != y_pred.size()) throw std::runtime_error("confusion size mismatch");
    Confusion c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool truth = y_true[i] == positive_label;
        const bool pred = y_pred[i] == positive_label;
        if (truth && pred) {
            ++c.tp;
        } else if (!truth && pred) {
            ++c.fp;
        } else if (truth && !pred) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

double f1_binary(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                 int positive_label) {
    const Confusion c = confusion_matrix(y_true, y_pred, positive_label);
    const double denom = 2.0 * c.tp + c.fp + c.fn;
    if (denom <= 0.0) return 0.0;
    return 2.0 * c.tp / denom;
}

}  // namespace magrep::eval
