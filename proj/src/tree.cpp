#include "tabprompt/tree.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "tabprompt/errors.hpp"
#include "tabprompt/rng.hpp"

namespace tabprompt {

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    FeatureMatrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw FitError("ragged feature rows");
        std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(r * cols));
    }
    return m;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix m(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return m;
}

std::string_view to_string(Criterion c) { return c == Criterion::gini ? "gini" : "variance"; }

double gini(std::span<const int> labels) {
    if (labels.empty()) throw MetricError("gini of an empty label list");
    const int max_label = *std::max_element(labels.begin(), labels.end());
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(max_label, 0)) + 1, 0);
    for (int l : labels) {
        if (l < 0) throw MetricError("negative class label");
        ++counts[static_cast<std::size_t>(l)];
    }
    const double n = static_cast<double>(labels.size());
    double sum_sq = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / n;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double variance(std::span<const double> values) {
    if (values.empty()) throw MetricError("variance of an empty list");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / n;
}

void TreeParams::validate() const {
    if (min_samples_split < 2) throw FitError("min_samples_split must be >= 2");
    if (max_depth && *max_depth < 0) throw FitError("max_depth must be >= 0");
}

std::size_t FeaturesPerSplit::resolve(std::size_t n_features) const {
    switch (kind) {
        case Kind::all: return n_features;
        case Kind::sqrt:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));
        case Kind::fixed: return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_features, 1));
    }
    return n_features;
}

void ForestParams::validate() const {
    if (n_trees < 1) throw FitError("n_trees must be >= 1");
    if (features_per_split.kind == FeaturesPerSplit::Kind::fixed && features_per_split.k < 1)
        throw FitError("fixed features_per_split must be >= 1");
    tree.validate();
}

namespace {

double gini_from_counts(std::span<const std::size_t> counts, std::size_t n) {
    const double total = static_cast<double>(n);
    double sum_sq = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double variance_from_sums(double sum, double sum_sq, std::size_t n) {
    const double total = static_cast<double>(n);
    const double mean = sum / total;
    return std::max(0.0, sum_sq / total - mean * mean);
}

double midpoint(double a, double b) {
    double m = (a + b) / 2.0;
    return (m >= b) ? a : m;
}

double node_impurity(std::span<const double> y, std::span<const std::size_t> idx, Criterion criterion,
                     int n_classes) {
    if (criterion == Criterion::gini) {
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
        for (auto i : idx) ++counts[static_cast<std::size_t>(y[i])];
        return gini_from_counts(counts, idx.size());
    }
    double mean = 0.0;
    for (auto i : idx) mean += y[i];
    mean /= static_cast<double>(idx.size());
    double ss = 0.0;
    for (auto i : idx) ss += (y[i] - mean) * (y[i] - mean);
    return ss / static_cast<double>(idx.size());
}

double leaf_value(std::span<const double> y, std::span<const std::size_t> idx, Task task, int n_classes) {
    if (task == Task::classification) {
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
        for (auto i : idx) ++counts[static_cast<std::size_t>(y[i])];
        return static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    double sum = 0.0;
    for (auto i : idx) sum += y[i];
    return sum / static_cast<double>(idx.size());
}

void check_inputs(const FeatureMatrix& X, std::span<const double> y, Task task, const TreeParams& params) {
    if (X.rows() != y.size()) throw FitError("feature rows and target length differ");
    if (y.empty()) throw FitError("no training rows");
    params.validate();
    if ((task == Task::classification) != (params.criterion == Criterion::gini))
        throw FitError("criterion " + std::string(to_string(params.criterion)) + " does not fit a " +
                       std::string(to_string(task)) + " task");
    if (task == Task::classification) {
        for (double v : y)
            if (v < 0 || v != std::floor(v)) throw FitError("classification targets must be class indices");
    } else {
        for (double v : y)
            if (!std::isfinite(v)) throw FitError("regression targets must be finite");
    }
}

int count_classes(std::span<const double> y, Task task) {
    if (task != Task::classification) return 0;
    return static_cast<int>(*std::max_element(y.begin(), y.end())) + 1;
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& X, std::span<const double> y, const TreeParams& params, Task task,
                int n_classes, std::size_t features_per_node, std::mt19937_64* rng)
        : X_(X), y_(y), params_(params), task_(task), n_classes_(n_classes),
          features_per_node_(features_per_node), rng_(rng), all_features_(X.cols()) {
        std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    }

    Tree build(std::vector<std::size_t> indices) {
        grow(std::move(indices), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> idx, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        {
            auto& node = tree_.nodes.back();
            node.n_samples = idx.size();
            node.impurity = node_impurity(y_, idx, params_.criterion, n_classes_);
            node.value = leaf_value(y_, idx, task_, n_classes_);
        }
        const double impurity = tree_.nodes[static_cast<std::size_t>(id)].impurity;
        if ((params_.max_depth && depth >= *params_.max_depth) ||
            idx.size() < static_cast<std::size_t>(params_.min_samples_split) || impurity <= kImpurityTolerance)
            return id;

        auto split = best_split(X_, y_, idx, node_features(), params_.criterion, n_classes_);
        if (!split) return id;

        std::vector<std::size_t> left, right;
        for (auto i : idx) (X_(i, split->feature) <= split->threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        tree_.nodes[static_cast<std::size_t>(id)].feature = static_cast<int>(split->feature);
        tree_.nodes[static_cast<std::size_t>(id)].threshold = split->threshold;
        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].left = l;
        tree_.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    std::span<const std::size_t> node_features() {
        if (rng_ == nullptr || features_per_node_ >= all_features_.size()) return all_features_;
        // Partial Fisher-Yates draw, then ascending so ties resolve to the lowest index.
        sampled_ = all_features_;
        for (std::size_t i = 0; i < features_per_node_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, sampled_.size() - 1);
            std::swap(sampled_[i], sampled_[pick(*rng_)]);
        }
        sampled_.resize(features_per_node_);
        std::sort(sampled_.begin(), sampled_.end());
        return sampled_;
    }

    const FeatureMatrix& X_;
    std::span<const double> y_;
    TreeParams params_;
    Task task_;
    int n_classes_;
    std::size_t features_per_node_;
    std::mt19937_64* rng_;
    std::vector<std::size_t> all_features_;
    std::vector<std::size_t> sampled_;
    Tree tree_;
};

}  // namespace

std::optional<SplitChoice> best_split(const FeatureMatrix& X, std::span<const double> y,
                                      std::span<const std::size_t> indices, std::span<const std::size_t> features,
                                      Criterion criterion, int n_classes) {
    const std::size_t n = indices.size();
    if (n < 2) return std::nullopt;
    const double n_total = static_cast<double>(n);

    // Regression sums are taken around the node mean to limit cancellation.
    double shift = 0.0;
    std::vector<std::size_t> total_counts;
    double total_sum = 0.0, total_sq = 0.0;
    double parent = 0.0;
    if (criterion == Criterion::gini) {
        total_counts.assign(static_cast<std::size_t>(n_classes), 0);
        for (auto i : indices) ++total_counts[static_cast<std::size_t>(y[i])];
        parent = gini_from_counts(total_counts, n);
    } else {
        for (auto i : indices) shift += y[i];
        shift /= n_total;
        for (auto i : indices) {
            const double v = y[i] - shift;
            total_sum += v;
            total_sq += v * v;
        }
        parent = variance_from_sums(total_sum, total_sq, n);
    }

    std::optional<SplitChoice> best;
    std::vector<std::size_t> order(indices.begin(), indices.end());
    std::vector<std::size_t> left_counts, right_counts;

    for (auto f : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double xa = X(a, f), xb = X(b, f);
            return xa < xb || (xa == xb && a < b);
        });
        if (criterion == Criterion::gini) {
            left_counts.assign(total_counts.size(), 0);
            right_counts = total_counts;
        }
        double left_sum = 0.0, left_sq = 0.0;

        for (std::size_t p = 1; p < n; ++p) {
            const auto moved = order[p - 1];
            if (criterion == Criterion::gini) {
                ++left_counts[static_cast<std::size_t>(y[moved])];
                --right_counts[static_cast<std::size_t>(y[moved])];
            } else {
                const double v = y[moved] - shift;
                left_sum += v;
                left_sq += v * v;
            }
            const double a = X(order[p - 1], f), b = X(order[p], f);
            if (!(a < b)) continue;

            const std::size_t nl = p, nr = n - p;
            double il, ir;
            if (criterion == Criterion::gini) {
                il = gini_from_counts(left_counts, nl);
                ir = gini_from_counts(right_counts, nr);
            } else {
                il = variance_from_sums(left_sum, left_sq, nl);
                ir = variance_from_sums(total_sum - left_sum, total_sq - left_sq, nr);
            }
            const double decrease = parent - (static_cast<double>(nl) / n_total) * il -
                                    (static_cast<double>(nr) / n_total) * ir;
            if (!best || decrease > best->decrease + kImpurityTolerance)
                best = SplitChoice{f, midpoint(a, b), decrease};
        }
    }
    return best;
}

FittedModel fit_tree(const FeatureMatrix& X, std::span<const double> y, const TreeParams& params, Task task) {
    check_inputs(X, y, task, params);
    FittedModel model;
    model.kind = ModelKind::tree;
    model.task = task;
    model.n_features = X.cols();
    model.n_classes = count_classes(y, task);

    std::vector<std::size_t> idx(X.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    TreeBuilder builder(X, y, params, task, model.n_classes, X.cols(), nullptr);
    model.trees.push_back(builder.build(std::move(idx)));
    return model;
}

FittedModel fit_forest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params, Task task) {
    params.validate();
    check_inputs(X, y, task, params.tree);
    FittedModel model;
    model.kind = ModelKind::forest;
    model.task = task;
    model.n_features = X.cols();
    model.n_classes = count_classes(y, task);
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    const std::size_t per_node = params.features_per_split.resolve(X.cols());
    const std::size_t n = X.rows();

    auto grow_tree = [&](std::size_t t) {
        std::mt19937_64 rng(mix_seed(params.seed, t));
        std::vector<std::size_t> idx(n);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (auto& i : idx) i = pick(rng);
        } else {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        TreeBuilder builder(X, y, params.tree, task, model.n_classes, per_node, &rng);
        model.trees[t] = builder.build(std::move(idx));
    };

    // Each tree depends only on its own seed, so scheduling cannot change the result.
    const std::size_t n_threads =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), model.trees.size());
    if (n_threads <= 1) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) grow_tree(t);
        return model;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < n_threads; ++w) {
        workers.emplace_back([&] {
            for (std::size_t t = next++; t < model.trees.size(); t = next++) {
                try {
                    grow_tree(t);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
    return model;
}

double predict_one(const Tree& tree, std::span<const double> x) {
    std::size_t at = 0;
    while (!tree.nodes[at].is_leaf()) {
        const auto& node = tree.nodes[at];
        at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                   : node.right);
    }
    return tree.nodes[at].value;
}

std::vector<double> predict(const FittedModel& model, const FeatureMatrix& X) {
    if (X.cols() != model.n_features)
        throw PredictError("model expects " + std::to_string(model.n_features) + " features, got " +
                           std::to_string(X.cols()));
    if (model.trees.empty()) throw PredictError("model has no trees");
    std::vector<double> out(X.rows());
    std::vector<std::size_t> votes;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto x = X.row(r);
        if (model.trees.size() == 1) {
            out[r] = predict_one(model.trees.front(), x);
            continue;
        }
        if (model.task == Task::classification) {
            votes.assign(static_cast<std::size_t>(std::max(model.n_classes, 1)), 0);
            for (const auto& t : model.trees) ++votes[static_cast<std::size_t>(predict_one(t, x))];
            out[r] = static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        } else {
            double sum = 0.0;
            for (const auto& t : model.trees) sum += predict_one(t, x);
            out[r] = sum / static_cast<double>(model.trees.size());
        }
    }
    return out;
}

double accuracy(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw MetricError("length mismatch");
    if (truth.empty()) throw MetricError("accuracy of an empty list");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double mean_squared_error(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw MetricError("length mismatch");
    if (truth.empty()) throw MetricError("mse of an empty list");
    double ss = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) ss += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    return ss / static_cast<double>(truth.size());
}

}  // namespace tabprompt
