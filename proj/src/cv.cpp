#include "tabprompt/cv.hpp"

#include <numeric>
#include <random>

#include "tabprompt/errors.hpp"

namespace tabprompt {

namespace {

std::string depth_text(const TreeParams& p) {
    return p.max_depth ? std::to_string(*p.max_depth) : std::string("unlimited");
}

std::string features_text(const FeaturesPerSplit& f) {
    switch (f.kind) {
        case FeaturesPerSplit::Kind::sqrt: return "sqrt";
        case FeaturesPerSplit::Kind::all: return "all";
        case FeaturesPerSplit::Kind::fixed: return std::to_string(f.k);
    }
    return "all";
}

}  // namespace

std::string describe(const ParamCell& cell) {
    if (const auto* t = std::get_if<TreeParams>(&cell))
        return "tree(max_depth=" + depth_text(*t) + ", min_samples_split=" + std::to_string(t->min_samples_split) +
               ", criterion=" + std::string(to_string(t->criterion)) + ")";
    const auto& f = std::get<ForestParams>(cell);
    return "forest(n_trees=" + std::to_string(f.n_trees) + ", max_depth=" + depth_text(f.tree) +
           ", min_samples_split=" + std::to_string(f.tree.min_samples_split) +
           ", criterion=" + std::string(to_string(f.tree.criterion)) +
           ", features_per_split=" + features_text(f.features_per_split) +
           ", bootstrap=" + (f.bootstrap ? "true" : "false") + ", seed=" + std::to_string(f.seed) + ")";
}

FittedModel fit_model(const FeatureMatrix& X, std::span<const double> y, const ParamCell& cell, Task task) {
    if (const auto* t = std::get_if<TreeParams>(&cell)) return fit_tree(X, y, *t, task);
    return fit_forest(X, y, std::get<ForestParams>(cell), task);
}

double score(Task task, std::span<const double> truth, std::span<const double> predicted) {
    return task == Task::classification ? accuracy(truth, predicted) : mean_squared_error(truth, predicted);
}

bool higher_is_better(Task task) { return task == Task::classification; }

std::vector<std::vector<std::size_t>> kfold_assignment(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw CvError("need at least 2 folds");
    if (static_cast<std::size_t>(folds) > n)
        throw CvError(std::to_string(folds) + " folds requested for " + std::to_string(n) + " rows");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto k = static_cast<std::size_t>(folds);
    std::vector<std::vector<std::size_t>> out(k);
    std::size_t at = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                      order.begin() + static_cast<std::ptrdiff_t>(at + size));
        at += size;
    }
    return out;
}

CvResult grid_search_cv(const FeatureMatrix& X, std::span<const double> y, std::span<const ParamCell> grid,
                        int folds, std::uint64_t seed, Task task) {
    if (grid.empty()) throw CvError("empty parameter grid");
    if (X.rows() != y.size()) throw CvError("feature rows and target length differ");
    const auto assignment = kfold_assignment(X.rows(), folds, seed);

    struct FoldData {
        FeatureMatrix X_train, X_valid;
        std::vector<double> y_train, y_valid;
    };
    std::vector<FoldData> fold_data;
    for (std::size_t f = 0; f < assignment.size(); ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < assignment.size(); ++g)
            if (g != f) train_idx.insert(train_idx.end(), assignment[g].begin(), assignment[g].end());
        FoldData d;
        d.X_train = X.select_rows(train_idx);
        d.X_valid = X.select_rows(assignment[f]);
        for (auto i : train_idx) d.y_train.push_back(y[i]);
        for (auto i : assignment[f]) d.y_valid.push_back(y[i]);
        fold_data.push_back(std::move(d));
    }

    CvResult result;
    for (const auto& cell : grid) {
        CvRow row{cell, {}, 0.0};
        for (const auto& d : fold_data) {
            auto model = fit_model(d.X_train, d.y_train, cell, task);
            row.fold_scores.push_back(score(task, d.y_valid, predict(model, d.X_valid)));
        }
        row.mean = std::accumulate(row.fold_scores.begin(), row.fold_scores.end(), 0.0) /
                   static_cast<double>(row.fold_scores.size());
        result.table.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < result.table.size(); ++i) {
        const double cand = result.table[i].mean, best = result.table[result.best_index].mean;
        if (higher_is_better(task) ? cand > best : cand < best) result.best_index = i;
    }
    return result;
}

}  // namespace tabprompt
