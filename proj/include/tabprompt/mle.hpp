#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabprompt/cv.hpp"
#include "tabprompt/synthesizer.hpp"
#include "tabprompt/table.hpp"

namespace tabprompt {

/// Turns table rows into model inputs under a fixed schema. Numeric cells are
/// parsed; categorical cells map to their sorted-level index, and a lexeme the
/// schema has never seen sits half a step below the level it would sort before.
class TabularEncoder {
public:
    explicit TabularEncoder(const TableSchema& schema);

    /// Classes are the schema's target levels plus any extra target lexemes
    /// found in `extra_tables`, sorted (classification only).
    TabularEncoder(const TableSchema& schema, const std::vector<const Table*>& extra_tables);

    FeatureMatrix features(const Table& table) const;
    std::vector<double> targets(const Table& table) const;

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const TableSchema& schema() const noexcept { return schema_; }

private:
    TableSchema schema_;
    std::size_t target_;
    std::vector<std::string> classes_;
};

struct MleGrids {
    std::vector<ParamCell> decision_tree;
    std::vector<ParamCell> random_forest;

    /// DT: max_depth {3, 5, 8, unlimited} x min_samples_split {2, 10}.
    /// RF: the same x n_trees {50, 100}, sqrt features per split, bootstrap.
    static MleGrids defaults(Task task, std::uint64_t forest_seed);
};

struct ModelScore {
    double score = 0.0;
    ParamCell best_params;
    std::vector<CvRow> cv_table;
};

struct MleReport {
    Task task = Task::classification;
    std::string metric_name;  // "accuracy" or "mse"
    std::map<std::string, ModelScore> per_model;  // "decision_tree", "random_forest"
    std::size_t n_synth_rows = 0;
    int folds = 5;
    std::uint64_t cv_seed = 0;
    std::uint64_t forest_seed = 0;

    std::string to_json() const;
};

std::string metric_for(Task task);

/// Grid-search each model family on the synthetic rows, refit the winner on
/// all of them, and score it on the real test rows.
MleReport evaluate_mle(const Table& synthetic, const Table& real_test, const TableSchema& schema,
                       const MleGrids& grids, int folds, std::uint64_t cv_seed);
MleReport evaluate_mle(const SyntheticTable& synthetic, const Table& real_test, const TableSchema& schema,
                       const MleGrids& grids, int folds, std::uint64_t cv_seed);

}  // namespace tabprompt
