#include "tabprompt/ngram.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tabprompt/errors.hpp"
#include "tabprompt/rng.hpp"

namespace tabprompt {

namespace {

using json = nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr std::string_view kFormatName = "tabprompt-ngram";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view to_string(Granularity g) { return g == Granularity::word ? "word" : "character"; }

Granularity parse_granularity(std::string_view text) {
    if (text == "word") return Granularity::word;
    if (text == "character") return Granularity::character;
    throw ConfigError("unknown granularity '" + std::string(text) + "'");
}

std::vector<std::string> tokenize(std::string_view text, Granularity granularity) {
    std::vector<std::string> out;
    if (granularity == Granularity::character) {
        out.reserve(text.size());
        for (char c : text) out.emplace_back(1, c);
        return out;
    }
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) {
            out.emplace_back(text.substr(start));
            break;
        }
        if (text[i] == ',') {
            ++i;
        } else {
            while (i < text.size() && !is_space(text[i]) && text[i] != ',') ++i;
        }
        out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

TokenId NGramModel::intern(const std::string& token) {
    auto [it, inserted] = ids_.emplace(token, static_cast<TokenId>(vocabulary_.size()));
    if (inserted) vocabulary_.push_back(token);
    return it->second;
}

TokenId NGramModel::token_id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end() || it->second <= kUnknown) return kUnknown;
    return it->second;
}

NGramModel::Context NGramModel::context_after(std::string_view prefix) const {
    Context seq(static_cast<std::size_t>(order_), kLineStart);
    for (const auto& tok : tokenize(prefix, granularity_)) seq.push_back(token_id(tok));
    return Context(seq.end() - order_, seq.end());
}

const NGramModel::NextCounts* NGramModel::next_counts(std::span<const TokenId> context) const {
    auto it = counts_.find(Context(context.begin(), context.end()));
    return it == counts_.end() ? nullptr : &it->second;
}

std::string NGramModel::to_json() const {
    json doc;
    doc["format"] = kFormatName;
    doc["version"] = kFormatVersion;
    doc["order"] = order_;
    doc["granularity"] = to_string(granularity_);
    doc["vocabulary"] = vocabulary_;
    json counts = json::array();
    for (const auto& [ctx, next] : counts_) {
        json row = json::array();
        for (const auto& [tok, n] : next) row.push_back({tok, n});
        counts.push_back({ctx, row});
    }
    doc["counts"] = std::move(counts);
    return doc.dump();
}

NGramModel NGramModel::from_json(std::string_view text) {
    try {
        auto doc = json::parse(text);
        if (doc.at("format").get<std::string>() != kFormatName) throw ConfigError("not an n-gram model dump");
        if (doc.at("version").get<int>() != kFormatVersion)
            throw ConfigError("unsupported n-gram model version " + doc.at("version").dump());
        NGramModel m;
        m.order_ = doc.at("order").get<int>();
        m.granularity_ = parse_granularity(doc.at("granularity").get<std::string>());
        for (const auto& tok : doc.at("vocabulary")) m.intern(tok.get<std::string>());
        const auto vocab_size = static_cast<TokenId>(m.vocabulary_.size());
        for (const auto& entry : doc.at("counts")) {
            auto ctx = entry.at(0).get<Context>();
            if (ctx.size() != static_cast<std::size_t>(m.order_)) throw ConfigError("context of wrong length");
            NextCounts next;
            for (const auto& pair : entry.at(1)) {
                auto tok = pair.at(0).get<TokenId>();
                auto n = pair.at(1).get<std::uint64_t>();
                if (tok < 0 || tok >= vocab_size || n == 0) throw ConfigError("bad count entry");
                next[tok] = n;
            }
            m.counts_.emplace(std::move(ctx), std::move(next));
        }
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed n-gram model dump: ") + e.what());
    }
}

void NGramModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << to_json();
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

NGramModel ngram_finetune(std::span<const std::string> corpus, int order_k, Granularity granularity) {
    if (order_k < 1) throw ConfigError("n-gram order must be >= 1");
    if (corpus.empty()) throw TrainError("empty corpus");

    NGramModel m;
    m.order_ = order_k;
    m.granularity_ = granularity;
    m.intern("<s>");
    m.intern("</s>");
    m.intern("<unk>");

    std::vector<TokenId> seq;
    for (const auto& line : corpus) {
        seq.assign(static_cast<std::size_t>(order_k), NGramModel::kLineStart);
        for (const auto& tok : tokenize(line, granularity)) seq.push_back(m.intern(tok));
        seq.push_back(NGramModel::kLineEnd);
        for (std::size_t i = static_cast<std::size_t>(order_k); i < seq.size(); ++i) {
            NGramModel::Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(i) - order_k,
                                    seq.begin() + static_cast<std::ptrdiff_t>(i));
            ++m.counts_[std::move(ctx)][seq[i]];
        }
    }
    return m;
}

std::vector<std::pair<TokenId, double>> next_distribution(const NGramModel& model,
                                                          std::span<const TokenId> context, double temperature) {
    std::vector<std::pair<TokenId, double>> out;
    const auto* next = model.next_counts(context);
    if (next == nullptr) return out;

    if (temperature <= 0.0) {
        TokenId best = next->begin()->first;
        std::uint64_t best_n = 0;
        for (const auto& [tok, n] : *next) {
            if (n > best_n) {
                best = tok;
                best_n = n;
            }
        }
        for (const auto& [tok, n] : *next) out.emplace_back(tok, tok == best ? 1.0 : 0.0);
        return out;
    }

    std::uint64_t max_n = 0;
    for (const auto& [tok, n] : *next) max_n = std::max(max_n, n);
    // (c/total)^(1/T) normalized; computed relative to the largest count so
    // small temperatures do not underflow.
    double sum = 0.0;
    for (const auto& [tok, n] : *next) {
        double w = std::exp((std::log(static_cast<double>(n)) - std::log(static_cast<double>(max_n))) / temperature);
        out.emplace_back(tok, w);
        sum += w;
    }
    for (auto& [tok, w] : out) w /= sum;
    return out;
}

TokenId sample_next(const NGramModel& model, std::span<const TokenId> context, double temperature,
                    std::mt19937_64& rng) {
    auto dist = next_distribution(model, context, temperature);
    if (dist.empty()) return NGramModel::kLineEnd;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    for (const auto& [tok, p] : dist) {
        if (u < p) return tok;
        u -= p;
    }
    // Rounding left a sliver of mass unassigned; give it to the last token with any.
    for (auto it = dist.rbegin(); it != dist.rend(); ++it)
        if (it->second > 0.0) return it->first;
    return dist.back().first;
}

std::string ngram_generate(const NGramModel& model, std::string_view prefix, const GenParams& params) {
    std::string out(prefix);
    if (model.empty()) return out;
    auto ctx = model.context_after(prefix);
    std::mt19937_64 rng(params.seed);
    for (int step = 0; step < params.max_new_tokens; ++step) {
        TokenId tok = sample_next(model, ctx, params.temperature, rng);
        if (tok == NGramModel::kLineEnd) break;
        out += model.vocabulary()[static_cast<std::size_t>(tok)];
        ctx.erase(ctx.begin());
        ctx.push_back(tok);
    }
    return out;
}

NGramBackend::NGramBackend(int order_k, Granularity granularity) : order_(order_k), granularity_(granularity) {
    if (order_k < 1) throw ConfigError("n-gram order must be >= 1");
}

NGramBackend::NGramBackend(NGramModel model)
    : order_(model.order()), granularity_(model.granularity()), model_(std::move(model)), trained_(true) {}

TrainingReport NGramBackend::finetune(std::span<const std::string> corpus, const FinetuneConfig& config) {
    config.validate();
    model_ = ngram_finetune(corpus, order_, granularity_);
    trained_ = true;

    std::size_t n_tokens = 0;
    std::size_t max_tokens = 0;
    for (const auto& line : corpus) {
        auto n = tokenize(line, granularity_).size();
        n_tokens += n;
        max_tokens = std::max(max_tokens, n);
    }
    TrainingReport report;
    report.status = "trained";
    report.stats["lines"] = static_cast<double>(corpus.size());
    report.stats["tokens"] = static_cast<double>(n_tokens);
    report.stats["max_line_tokens"] = static_cast<double>(max_tokens);
    report.stats["vocabulary"] = static_cast<double>(model_.vocabulary().size());
    report.stats["contexts"] = static_cast<double>(model_.counts().size());
    return report;
}

std::vector<std::string> NGramBackend::generate(std::string_view prefix, const GenParams& params) const {
    if (!trained_) throw StateError("n-gram backend used before training");
    params.validate();
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(params.count));
    for (int i = 0; i < params.count; ++i) {
        GenParams one = params;
        one.seed = mix_seed(params.seed, static_cast<std::uint64_t>(i));
        out.push_back(ngram_generate(model_, prefix, one));
    }
    return out;
}

std::string NGramBackend::id() const {
    return "ngram:k=" + std::to_string(order_) + ":" + std::string(to_string(granularity_));
}

const NGramModel& NGramBackend::model() const {
    if (!trained_) throw StateError("n-gram backend used before training");
    return model_;
}

}  // namespace tabprompt
