#pragma once

#include <string>
#include <string_view>

namespace tabprompt {

/// Splits "http://host:port/a/b" into origin "http://host:port" and path "/a/b".
struct UrlParts {
    std::string origin;
    std::string path;
};

UrlParts split_url(std::string_view url);

}  // namespace tabprompt
