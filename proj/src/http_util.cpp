#include "tabprompt/http_util.hpp"

#include "tabprompt/errors.hpp"

namespace tabprompt {

UrlParts split_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw ConfigError("URL lacks a scheme: '" + std::string(url) + "'");
    auto path_start = url.find('/', scheme_end + 3);
    UrlParts parts;
    if (path_start == std::string_view::npos) {
        parts.origin = std::string(url);
        parts.path = "/";
    } else {
        parts.origin = std::string(url.substr(0, path_start));
        parts.path = std::string(url.substr(path_start));
    }
    if (parts.origin.size() == scheme_end + 3) throw ConfigError("URL lacks a host: '" + std::string(url) + "'");
    return parts;
}

}  // namespace tabprompt
