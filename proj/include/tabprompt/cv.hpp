#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tabprompt/tree.hpp"

namespace tabprompt {

using ParamCell = std::variant<TreeParams, ForestParams>;

std::string describe(const ParamCell& cell);
FittedModel fit_model(const FeatureMatrix& X, std::span<const double> y, const ParamCell& cell, Task task);

/// Accuracy for classification, MSE for regression.
double score(Task task, std::span<const double> truth, std::span<const double> predicted);
bool higher_is_better(Task task);

/// Seeded shuffle of 0..n-1 cut into `folds` contiguous chunks; the first
/// n % folds chunks hold one extra row. Throws CvError when folds > n or folds < 2.
std::vector<std::vector<std::size_t>> kfold_assignment(std::size_t n, int folds, std::uint64_t seed);

struct CvRow {
    ParamCell cell;
    std::vector<double> fold_scores;
    double mean = 0.0;
};

struct CvResult {
    std::size_t best_index = 0;
    std::vector<CvRow> table;

    const ParamCell& best() const { return table.at(best_index).cell; }
};

/// Every cell is scored on the same folds; the best mean wins, ties going to
/// the earliest cell in grid order.
CvResult grid_search_cv(const FeatureMatrix& X, std::span<const double> y, std::span<const ParamCell> grid,
                        int folds, std::uint64_t seed, Task task);

}  // namespace tabprompt
