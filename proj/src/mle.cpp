#include "tabprompt/mle.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "tabprompt/errors.hpp"

namespace tabprompt {

namespace {

using json = nlohmann::json;

json params_json(const ParamCell& cell) {
    auto tree_json = [](const TreeParams& t) {
        return json{{"max_depth", t.max_depth ? json(*t.max_depth) : json("unlimited")},
                    {"min_samples_split", t.min_samples_split},
                    {"criterion", to_string(t.criterion)}};
    };
    if (const auto* t = std::get_if<TreeParams>(&cell)) return tree_json(*t);
    const auto& f = std::get<ForestParams>(cell);
    json j = tree_json(f.tree);
    j["n_trees"] = f.n_trees;
    switch (f.features_per_split.kind) {
        case FeaturesPerSplit::Kind::sqrt: j["features_per_split"] = "sqrt"; break;
        case FeaturesPerSplit::Kind::all: j["features_per_split"] = "all"; break;
        case FeaturesPerSplit::Kind::fixed: j["features_per_split"] = f.features_per_split.k; break;
    }
    j["bootstrap"] = f.bootstrap;
    j["seed"] = f.seed;
    return j;
}

double encode_level(const std::vector<std::string>& levels, const std::string& lexeme) {
    auto it = std::lower_bound(levels.begin(), levels.end(), lexeme);
    const auto pos = static_cast<double>(it - levels.begin());
    return (it != levels.end() && *it == lexeme) ? pos : pos - 0.5;
}

}  // namespace

TabularEncoder::TabularEncoder(const TableSchema& schema) : TabularEncoder(schema, {}) {}

TabularEncoder::TabularEncoder(const TableSchema& schema, const std::vector<const Table*>& extra_tables)
    : schema_(schema), target_(schema.target_index()) {
    if (schema_.task == Task::classification) {
        std::set<std::string> classes(schema_.specs[target_].levels.begin(), schema_.specs[target_].levels.end());
        for (const auto* t : extra_tables)
            for (const auto& row : t->rows()) classes.insert(row.at(target_));
        classes_.assign(classes.begin(), classes.end());
    }
}

FeatureMatrix TabularEncoder::features(const Table& table) const {
    check_conforms(table, schema_);
    FeatureMatrix X(table.n_rows(), schema_.specs.size() - 1);
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        std::size_t out_col = 0;
        for (std::size_t c = 0; c < schema_.specs.size(); ++c) {
            if (c == target_) continue;
            const auto& spec = schema_.specs[c];
            const auto& cell = table.rows()[r][c];
            X(r, out_col++) = spec.kind == ColumnKind::numeric ? *parse_decimal(cell) : encode_level(spec.levels, cell);
        }
    }
    return X;
}

std::vector<double> TabularEncoder::targets(const Table& table) const {
    check_conforms(table, schema_);
    std::vector<double> y;
    y.reserve(table.n_rows());
    for (const auto& row : table.rows()) {
        const auto& cell = row[target_];
        if (schema_.task == Task::regression) {
            auto v = parse_decimal(cell);
            if (!v) throw SchemaError("non-numeric regression target '" + cell + "'");
            y.push_back(*v);
        } else {
            auto it = std::lower_bound(classes_.begin(), classes_.end(), cell);
            if (it == classes_.end() || *it != cell) throw SchemaError("unknown class label '" + cell + "'");
            y.push_back(static_cast<double>(it - classes_.begin()));
        }
    }
    return y;
}

MleGrids MleGrids::defaults(Task task, std::uint64_t forest_seed) {
    const Criterion criterion = task == Task::classification ? Criterion::gini : Criterion::variance;
    const std::vector<std::optional<int>> depths = {3, 5, 8, std::nullopt};
    const std::vector<int> min_splits = {2, 10};
    MleGrids g;
    for (const auto& depth : depths)
        for (int mss : min_splits) g.decision_tree.emplace_back(TreeParams{depth, mss, criterion});
    for (int n_trees : {50, 100})
        for (const auto& depth : depths)
            for (int mss : min_splits) {
                ForestParams p;
                p.n_trees = n_trees;
                p.tree = TreeParams{depth, mss, criterion};
                p.features_per_split.kind = FeaturesPerSplit::Kind::sqrt;
                p.bootstrap = true;
                p.seed = forest_seed;
                g.random_forest.emplace_back(p);
            }
    return g;
}

std::string metric_for(Task task) { return task == Task::classification ? "accuracy" : "mse"; }

MleReport evaluate_mle(const Table& synthetic, const Table& real_test, const TableSchema& schema,
                       const MleGrids& grids, int folds, std::uint64_t cv_seed) {
    if (synthetic.n_rows() == 0) throw EvalError("synthetic table is empty");
    if (real_test.n_rows() == 0) throw EvalError("real test table is empty");
    check_conforms(synthetic, schema);
    check_conforms(real_test, schema);
    if (synthetic.n_rows() < static_cast<std::size_t>(folds))
        throw EvalError("need at least " + std::to_string(folds) + " synthetic rows for cross-validation, have " +
                        std::to_string(synthetic.n_rows()));

    const TabularEncoder encoder(schema, {&synthetic, &real_test});
    const auto X_synth = encoder.features(synthetic);
    const auto y_synth = encoder.targets(synthetic);
    const auto X_test = encoder.features(real_test);
    const auto y_test = encoder.targets(real_test);

    MleReport report;
    report.task = schema.task;
    report.metric_name = metric_for(schema.task);
    report.n_synth_rows = synthetic.n_rows();
    report.folds = folds;
    report.cv_seed = cv_seed;
    for (const auto& cell : grids.random_forest) {
        if (const auto* f = std::get_if<ForestParams>(&cell)) {
            report.forest_seed = f->seed;
            break;
        }
    }

    auto run_family = [&](const std::string& name, const std::vector<ParamCell>& grid) {
        if (grid.empty()) return;
        auto cv = grid_search_cv(X_synth, y_synth, grid, folds, cv_seed, schema.task);
        auto model = fit_model(X_synth, y_synth, cv.best(), schema.task);
        ModelScore s;
        s.score = score(schema.task, y_test, predict(model, X_test));
        s.best_params = cv.best();
        s.cv_table = std::move(cv.table);
        report.per_model.emplace(name, std::move(s));
    };
    run_family("decision_tree", grids.decision_tree);
    run_family("random_forest", grids.random_forest);
    return report;
}

MleReport evaluate_mle(const SyntheticTable& synthetic, const Table& real_test, const TableSchema& schema,
                       const MleGrids& grids, int folds, std::uint64_t cv_seed) {
    return evaluate_mle(synthetic.table, real_test, schema, grids, folds, cv_seed);
}

std::string MleReport::to_json() const {
    json models = json::object();
    for (const auto& [name, s] : per_model) {
        json grid = json::array();
        for (const auto& row : s.cv_table) grid.push_back({{"params", params_json(row.cell)}, {"cv_mean", row.mean}});
        models[name] = {{"score", s.score}, {"best_params", params_json(s.best_params)}, {"grid", grid}};
    }
    json doc = {{"task", to_string(task)},
                {"metric", metric_name},
                {"models", models},
                {"n_synth_rows", n_synth_rows},
                {"folds", folds},
                {"seeds", {{"cv", cv_seed}, {"forest", forest_seed}}}};
    return doc.dump(2) + "\n";
}

}  // namespace tabprompt
