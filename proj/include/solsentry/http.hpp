// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <map>
#include <string>

#include "solsentry/errors.hpp"

namespace solsentry {

/// Transport failure: DNS, connect, TLS or timeout.
class NetworkError : public Error {
public:
    using Error::Error;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers; // lower-cased names
};

using HttpHeaders = std::map<std::string, std::string>;

HttpResponse http_get(const std::string& url, const HttpHeaders& headers, std::chrono::seconds timeout);
HttpResponse http_post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                       const std::string& content_type, std::chrono::seconds timeout);

/// "https://host:port/path?q" -> {"https://host:port", "/path?q"}.
std::pair<std::string, std::string> split_url(const std::string& url);

} // namespace solsentry
