#pragma once

// Generated response corpus for the suggestion-list parser. Each case knows by
// construction whether it is valid, has the wrong count, or repeats a term.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace testing {

enum class MappingExpect { ok, count_mismatch, duplicate };

struct MappingCase {
    std::string response;
    std::vector<std::string> columns;
    std::vector<std::string> terms;  // expected descriptors when ok
    MappingExpect expect;
};

inline std::vector<MappingCase> mapping_cases(std::size_t n_cases, std::uint64_t seed) {
    static const std::vector<std::string> vocab = {
        "gravitational redshift", "photon flux",     "neutron density", "cosmic ray energy",
        "spin rate",              "magnetic field",  "plasma pressure", "dark matter halo mass",
        "orbital period",         "surface gravity", "albedo",          "luminosity",
        "heart rate",             "blood pressure",  "gene expression", "cell count"};
    std::mt19937_64 rng(seed);
    std::vector<MappingCase> out;
    for (std::size_t i = 0; i < n_cases; ++i) {
        MappingCase c;
        const std::size_t n = 1 + rng() % 8;
        std::vector<std::string> pool = vocab;
        std::shuffle(pool.begin(), pool.end(), rng);
        c.terms.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t k = 0; k < n; ++k) c.columns.push_back("c" + std::to_string(k + 1));

        std::vector<std::string> lines = c.terms;
        switch (i % 3) {
            case 0: c.expect = MappingExpect::ok; break;
            case 1:
                c.expect = MappingExpect::count_mismatch;
                if (n > 1 && rng() % 2) lines.pop_back();
                else lines.push_back(pool[n]);
                break;
            default: {
                c.expect = n > 1 ? MappingExpect::duplicate : MappingExpect::count_mismatch;
                if (n > 1) {
                    std::size_t a = rng() % n, b = rng() % n;
                    if (a == b) b = (a + 1) % n;
                    // Same term after whitespace/comma normalization.
                    std::string twin = lines[a];
                    if (rng() % 2) twin = "  " + twin + " ";
                    if (rng() % 2) twin.insert(twin.find(' ') == std::string::npos ? twin.size() : twin.find(' '), ",");
                    lines[b] = twin;
                } else {
                    lines.push_back(lines[0]);
                }
            }
        }

        const bool numbered = rng() % 2;
        const bool paren = rng() % 2;
        for (std::size_t k = 0; k < lines.size(); ++k) {
            if (rng() % 4 == 0) c.response += "\n";
            if (numbered) c.response += std::to_string(k + 1) + (paren ? ") " : ". ");
            c.response += lines[k];
            c.response += (rng() % 3 == 0 ? "\r\n" : "\n");
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace testing
