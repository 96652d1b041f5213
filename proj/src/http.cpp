// SPDX-License-Identifier: Apache-2.0
#include "solsentry/http.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>

namespace solsentry {

std::pair<std::string, std::string> split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error("not an absolute URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

HttpResponse convert(const httplib::Result& res, const std::string& url)
{
    if (!res) {
        throw NetworkError("request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) {
        std::string key = k;
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.headers[key] = v;
    }
    return out;
}

httplib::Client make_client(const std::string& base, std::chrono::seconds timeout)
{
    httplib::Client cli(base);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_follow_location(true);
    return cli;
}

httplib::Headers to_headers(const HttpHeaders& headers)
{
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
}

} // namespace

HttpResponse http_get(const std::string& url, const HttpHeaders& headers, std::chrono::seconds timeout)
{
    auto [base, path] = split_url(url);
    auto cli = make_client(base, timeout);
    return convert(cli.Get(path, to_headers(headers)), url);
}

HttpResponse http_post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                       const std::string& content_type, std::chrono::seconds timeout)
{
    auto [base, path] = split_url(url);
    auto cli = make_client(base, timeout);
    return convert(cli.Post(path, to_headers(headers), body, content_type), url);
}

} // namespace solsentry
