#include "tabprompt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "tabprompt/errors.hpp"
#include "tabprompt/ngram.hpp"
#include "tabprompt/protocols.hpp"
#include "tabprompt/remote.hpp"

namespace tabprompt {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

void log_line(const fs::path& out_dir, std::string_view line) {
    std::ofstream out(out_dir / artifacts::kLog, std::ios::app);
    out << line << '\n';
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void check_header(const Table& table, const TableSchema& schema, std::string_view label) {
    const auto expected = schema.column_names();
    if (table.columns() == expected) return;
    std::set<std::string> want(expected.begin(), expected.end());
    std::set<std::string> have(table.columns().begin(), table.columns().end());
    std::string missing, unexpected;
    for (const auto& c : want)
        if (!have.count(c)) missing += (missing.empty() ? "" : ", ") + c;
    for (const auto& c : have)
        if (!want.count(c)) unexpected += (unexpected.empty() ? "" : ", ") + c;
    std::string msg = std::string(label) + " header does not match the schema: missing [" + missing +
                      "], unexpected [" + unexpected + "]";
    if (missing.empty() && unexpected.empty()) msg += ", column order differs";
    throw SchemaError(msg);
}

int max_line_tokens(const std::vector<std::string>& corpus, Granularity granularity) {
    std::size_t longest = 0;
    for (const auto& line : corpus) longest = std::max(longest, tokenize(line, granularity).size());
    return static_cast<int>(longest);
}

Granularity token_granularity(const PipelineConfig& config) {
    return config.backend == BackendKind::ngram ? config.granularity : Granularity::word;
}

RemoteBackend attach_remote(const PipelineConfig& config, const fs::path& out_dir) {
    const auto report = json::parse(read_text(out_dir / artifacts::kFinetuneReport));
    return RemoteBackend(config.remote, report.at("job_id").get<std::string>());
}

GenParams effective_gen(const PipelineConfig& config, const fs::path& out_dir) {
    GenParams gen = config.gen;
    if (config.auto_max_new_tokens) {
        auto corpus = read_lines(out_dir / artifacts::kCorpus);
        gen.max_new_tokens = std::max(1, 4 * max_line_tokens(corpus, token_granularity(config)));
    }
    return gen;
}

SamplingPolicy effective_policy(const PipelineConfig& config, std::size_t train_rows) {
    SamplingPolicy policy;
    policy.n_target = config.n_target.value_or(std::max<std::size_t>(train_rows, 1));
    policy.max_attempts = config.max_attempts.value_or(100 * policy.n_target);
    policy.bounds = config.bounds;
    policy.seed = config.sampling_seed;
    return policy;
}

SyntheticTable synthesize(const Backend& backend, const PipelineConfig& config, const fs::path& out_dir,
                          const TableSchema& schema) {
    const auto descriptors = load_descriptors(out_dir / artifacts::kDescriptors);
    const auto train = load_csv(out_dir / artifacts::kTrain);
    return generate_synthetic(backend, schema, descriptors, effective_policy(config, train.n_rows()),
                              effective_gen(config, out_dir), config.finetune);
}

}  // namespace

LoadedData load_dataset(const PipelineConfig& config) {
    LoadedData d;
    d.table = load_csv(config.dataset, config.has_header);
    std::vector<ColumnOverride> overrides;
    if (config.schema_overrides) overrides = load_schema_overrides(*config.schema_overrides);
    d.schema = infer_schema(d.table, config.target, config.task, overrides);
    return d;
}

void save_descriptors(const fs::path& path, const DescriptorSet& descriptors) {
    json entries = json::array();
    for (const auto& e : descriptors.entries()) entries.push_back({{"column", e.column}, {"descriptor", e.descriptor}});
    write_text(path, json{{"protocol", to_string(descriptors.protocol_tag())}, {"entries", entries}}.dump(2) + "\n");
}

DescriptorSet load_descriptors(const fs::path& path) {
    try {
        auto doc = json::parse(read_text(path));
        std::vector<DescriptorEntry> entries;
        for (const auto& e : doc.at("entries"))
            entries.push_back({e.at("column").get<std::string>(), e.at("descriptor").get<std::string>()});
        return DescriptorSet(std::move(entries), parse_protocol_tag(doc.at("protocol").get<std::string>()));
    } catch (const json::exception& e) {
        throw ConfigError("malformed descriptor file " + path.string() + ": " + e.what());
    }
}

DescriptorSet cmd_describe(const PipelineConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const auto data = load_dataset(config);
    const auto names = data.schema.column_names();

    auto from_endpoint = [&](const DescriptorQuery& query,
                             const std::function<DescriptorSet(std::string_view)>& parse) {
        const auto tag = std::string(query.kind == QueryKind::llm_guided ? "llm_guided" : "novel_mapping");
        log_line(out_dir, "query[" + tag + "]: " + query.text);
        const auto cache_dir = out_dir / artifacts::kDescriptorCache;
        const auto cache = cache_dir / (tag + ".txt");
        if (fs::exists(cache)) {
            log_line(out_dir, "replaying cached response " + cache.string());
            return parse(read_text(cache));
        }
        std::string last_response;
        auto set = describe_via_endpoint(config.chat, query, parse,
                                         [&](const std::string&, const std::string& response) {
                                             log_line(out_dir, "response[" + tag + "]: " + response);
                                             last_response = response;
                                         });
        fs::create_directories(cache_dir);
        write_text(cache, last_response);
        return set;
    };

    DescriptorSet descriptors;
    switch (config.protocol) {
        case ProtocolTag::baseline: descriptors = baseline_descriptors(data.schema); break;
        case ProtocolTag::expert: descriptors = expert_descriptors(data.schema, config.descriptor_file); break;
        case ProtocolTag::llm_guided:
            descriptors = from_endpoint(build_llm_guided_query(config.dataset_name, names),
                                        [&](std::string_view r) { return parse_descriptor_response(r, names); });
            break;
        case ProtocolTag::novel_mapping: {
            const auto ranges = column_ranges(data.table, data.schema);
            descriptors = from_endpoint(build_novel_mapping_query(ranges, config.field_name),
                                        [&](std::string_view r) { return parse_mapping_response(r, names); });
            break;
        }
    }
    save_descriptors(out_dir / artifacts::kDescriptors, descriptors);
    log_line(out_dir, "describe: protocol=" + std::string(to_string(descriptors.protocol_tag())) +
                          " columns=" + std::to_string(descriptors.size()));
    return descriptors;
}

void cmd_encode(const PipelineConfig& config, const fs::path& out_dir) {
    const auto data = load_dataset(config);
    const auto descriptors = load_descriptors(out_dir / artifacts::kDescriptors);
    descriptors.check_matches(data.schema);
    const auto parts = split(data.table, config.split_ratio, config.split_seed);
    write_csv(out_dir / artifacts::kTrain, parts.train);
    write_csv(out_dir / artifacts::kTest, parts.test);

    std::string corpus;
    for (const auto& row : encode_corpus(parts.train, descriptors, config.order, config.encode_seed))
        corpus += row.text + "\n";
    write_text(out_dir / artifacts::kCorpus, corpus);
    log_line(out_dir, "encode: train=" + std::to_string(parts.train.n_rows()) +
                          " test=" + std::to_string(parts.test.n_rows()));
}

TrainingReport cmd_finetune(const PipelineConfig& config, const fs::path& out_dir) {
    const auto corpus = read_lines(out_dir / artifacts::kCorpus);
    TrainingReport report;
    json doc;
    if (config.backend == BackendKind::ngram) {
        NGramBackend backend(config.ngram_order, config.granularity);
        report = backend.finetune(corpus, config.finetune);
        backend.model().save(out_dir / artifacts::kNGramModel);
        doc["backend"] = backend.id();
        doc["stats"] = report.stats;
    } else {
        RemoteBackend backend(config.remote);
        report = backend.finetune(corpus, config.finetune);
        doc["backend"] = backend.id();
        doc["job_id"] = report.job_id;
        doc["losses"] = report.losses;
        doc["checkpoints"] = report.checkpoints;
    }
    doc["status"] = report.status;
    write_text(out_dir / artifacts::kFinetuneReport, doc.dump(2) + "\n");
    log_line(out_dir, "finetune: " + report.status);
    return report;
}

SyntheticTable cmd_generate(const PipelineConfig& config, const fs::path& out_dir) {
    const auto data = load_dataset(config);
    auto write_outputs = [&](const SyntheticTable& synth) {
        write_csv(out_dir / artifacts::kSynthetic, synth.table);
        write_text(out_dir / artifacts::kSyntheticSidecar, provenance_json(synth));
        log_line(out_dir, "generate: accepted=" + std::to_string(synth.stats.accepted) +
                              " attempts=" + std::to_string(synth.stats.attempts));
    };
    try {
        SyntheticTable synth;
        if (config.backend == BackendKind::ngram) {
            NGramBackend backend(NGramModel::load(out_dir / artifacts::kNGramModel));
            synth = synthesize(backend, config, out_dir, data.schema);
        } else {
            auto backend = attach_remote(config, out_dir);
            synth = synthesize(backend, config, out_dir, data.schema);
        }
        write_outputs(synth);
        return synth;
    } catch (const SamplingExhausted& e) {
        write_outputs(e.partial());
        throw;
    }
}

MleReport cmd_evaluate(const fs::path& synthetic_csv, const fs::path& real_test_csv, const TableSchema& schema,
                       const MleGrids& grids, int folds, std::uint64_t cv_seed) {
    const auto synthetic = load_csv(synthetic_csv);
    const auto test = load_csv(real_test_csv);
    check_header(synthetic, schema, synthetic_csv.filename().string());
    check_header(test, schema, real_test_csv.filename().string());
    return evaluate_mle(synthetic, test, schema, grids, folds, cv_seed);
}

MleReport cmd_evaluate(const PipelineConfig& config, const fs::path& out_dir) {
    const auto data = load_dataset(config);
    auto report = cmd_evaluate(out_dir / artifacts::kSynthetic, out_dir / artifacts::kTest, data.schema,
                               MleGrids::defaults(data.schema.task, config.forest_seed), config.folds,
                               config.cv_seed);
    write_text(out_dir / artifacts::kMleReport, report.to_json());
    log_line(out_dir, "evaluate: metric=" + report.metric_name);
    return report;
}

RunManifest cmd_run(const PipelineConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    // Each run gets a fresh log; cached descriptor responses are kept.
    std::ofstream(out_dir / artifacts::kLog, std::ios::trunc);
    json manifest;
    manifest["config"] = config.source_text;
    manifest["dataset"] = config.dataset.string();
    manifest["seeds"] = config.seeds();
    json timings = json::object();
    RunManifest result;

    using Clock = std::chrono::steady_clock;
    auto run_stage = [&](const std::string& name, const std::function<void()>& body) {
        const auto start = Clock::now();
        try {
            body();
        } catch (const Error& e) {
            result.failed_stage = name;
            result.error = e.what();
            result.exit_code = e.exit_code();
        } catch (const std::exception& e) {
            result.failed_stage = name;
            result.error = e.what();
            result.exit_code = kExitRuntime;
        }
        timings[name] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        return result.failed_stage.empty();
    };

    std::optional<TrainingReport> training;
    json checkpoint_series = json::array();
    bool ok = run_stage("describe", [&] { cmd_describe(config, out_dir); }) &&
              run_stage("encode", [&] { cmd_encode(config, out_dir); }) &&
              run_stage("finetune", [&] { training = cmd_finetune(config, out_dir); }) &&
              run_stage("generate", [&] { cmd_generate(config, out_dir); }) &&
              run_stage("evaluate", [&] { cmd_evaluate(config, out_dir); });

    if (ok && config.backend == BackendKind::remote && config.checkpoint_eval && training) {
        ok = run_stage("checkpoint_eval", [&] {
            const auto data = load_dataset(config);
            const auto test = load_csv(out_dir / artifacts::kTest);
            auto backend = attach_remote(config, out_dir);
            for (const auto& tag : training->checkpoints) {
                backend.use_checkpoint(tag);
                auto synth = synthesize(backend, config, out_dir, data.schema);
                auto report = evaluate_mle(synth, test, data.schema,
                                           MleGrids::defaults(data.schema.task, config.forest_seed), config.folds,
                                           config.cv_seed);
                json scores = json::object();
                for (const auto& [name, s] : report.per_model) scores[name] = s.score;
                checkpoint_series.push_back({{"checkpoint", tag}, {"metric", report.metric_name}, {"scores", scores}});
            }
        });
    }

    json paths = json::object();
    for (const char* name : {artifacts::kDescriptors, artifacts::kTrain, artifacts::kTest, artifacts::kCorpus,
                             artifacts::kNGramModel, artifacts::kFinetuneReport, artifacts::kSynthetic,
                             artifacts::kSyntheticSidecar, artifacts::kMleReport, artifacts::kLog}) {
        if (fs::exists(out_dir / name)) paths[name] = (out_dir / name).string();
    }
    manifest["artifacts"] = paths;
    manifest["timings_ms"] = timings;
    if (fs::exists(out_dir / artifacts::kDescriptors))
        manifest["descriptors"] = json::parse(read_text(out_dir / artifacts::kDescriptors));
    if (fs::exists(out_dir / artifacts::kDescriptorCache)) {
        json cached = json::object();
        for (const auto& entry : fs::directory_iterator(out_dir / artifacts::kDescriptorCache))
            cached[entry.path().filename().string()] = read_text(entry.path());
        manifest["descriptor_responses"] = cached;
    }
    if (!checkpoint_series.empty()) manifest["checkpoint_mle"] = checkpoint_series;
    if (ok) {
        manifest["status"] = "ok";
    } else {
        manifest["status"] = "failed";
        manifest["failed_stage"] = result.failed_stage;
        manifest["error"] = result.error;
    }
    result.ok = ok;
    result.json = manifest.dump(2) + "\n";
    write_text(out_dir / artifacts::kManifest, result.json);
    return result;
}

}  // namespace tabprompt
