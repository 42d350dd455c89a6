#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabprompt/table.hpp"

namespace tabprompt {

/// Dense row-major feature matrix.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Criterion { gini, variance };

std::string_view to_string(Criterion c);

/// Gini impurity 1 - sum_c p_c^2 of integer class labels. Throws MetricError when empty.
double gini(std::span<const int> labels);
/// Population variance. Throws MetricError when empty.
double variance(std::span<const double> values);

struct TreeParams {
    std::optional<int> max_depth;  // nullopt = unlimited
    int min_samples_split = 2;
    Criterion criterion = Criterion::gini;

    void validate() const;  // throws FitError
    bool operator==(const TreeParams&) const = default;
};

struct FeaturesPerSplit {
    enum class Kind { sqrt, all, fixed } kind = Kind::sqrt;
    std::size_t k = 0;  // used when kind == fixed

    std::size_t resolve(std::size_t n_features) const;
    bool operator==(const FeaturesPerSplit&) const = default;
};

struct ForestParams {
    int n_trees = 100;
    TreeParams tree;
    FeaturesPerSplit features_per_split;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const;  // throws FitError
    bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;  // class index (classification) or mean target (regression)
    std::size_t n_samples = 0;
    double impurity = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    bool operator==(const Tree&) const = default;
};

enum class ModelKind { tree, forest };

struct FittedModel {
    ModelKind kind = ModelKind::tree;
    Task task = Task::classification;
    std::size_t n_features = 0;
    int n_classes = 0;  // classification only
    std::vector<Tree> trees;

    bool operator==(const FittedModel&) const = default;
};

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double decrease = 0.0;
};

/// Impurity decreases closer than this are treated as ties.
inline constexpr double kImpurityTolerance = 1e-12;

/// Best (feature, threshold) for the samples in `indices`, scanning `features`
/// in the given order and thresholds ascending; the first candidate wins ties.
/// A zero-decrease split is still returned (an impure node whose every split
/// is neutral, as at the root of XOR). nullopt when all feature values tie.
std::optional<SplitChoice> best_split(const FeatureMatrix& X, std::span<const double> y,
                                      std::span<const std::size_t> indices, std::span<const std::size_t> features,
                                      Criterion criterion, int n_classes);

/// Targets are class indices 0..C-1 for classification and real values for
/// regression. gini pairs with classification and variance with regression.
FittedModel fit_tree(const FeatureMatrix& X, std::span<const double> y, const TreeParams& params, Task task);
FittedModel fit_forest(const FeatureMatrix& X, std::span<const double> y, const ForestParams& params, Task task);

double predict_one(const Tree& tree, std::span<const double> x);
/// Majority vote (ties to the lowest class index) or mean over trees.
std::vector<double> predict(const FittedModel& model, const FeatureMatrix& X);

double accuracy(std::span<const double> truth, std::span<const double> predicted);
double mean_squared_error(std::span<const double> truth, std::span<const double> predicted);

}  // namespace tabprompt
