// SPDX-License-Identifier: Apache-2.0
#include "solsentry/version.hpp"

#include <algorithm>
#include <cctype>

namespace solsentry {

std::string Version::str() const
{
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

namespace {

struct PartialVersion {
    Version version;
    int parts = 0; // number of numeric components given (x/* count as missing)
};

std::optional<PartialVersion> parse_partial(std::string_view text)
{
    PartialVersion out;
    int values[3] = {0, 0, 0};
    std::size_t i = 0;
    while (i <= text.size() && out.parts < 3) {
        if (i < text.size() && (text[i] == 'x' || text[i] == 'X' || text[i] == '*')) {
            break;
        }
        std::size_t start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (start == i) {
            return std::nullopt;
        }
        values[out.parts++] = std::stoi(std::string(text.substr(start, i - start)));
        if (i == text.size()) {
            break;
        }
        if (text[i] != '.') {
            return std::nullopt;
        }
        ++i;
    }
    if (out.parts == 0 && !(text == "*" || text == "x" || text == "X")) {
        return std::nullopt;
    }
    out.version = Version{values[0], values[1], values[2]};
    return out;
}

Version bump_caret(const PartialVersion& p)
{
    const Version& v = p.version;
    if (v.major > 0 || p.parts == 1) {
        return {v.major + 1, 0, 0};
    }
    if (v.minor > 0 || p.parts == 2) {
        return {0, v.minor + 1, 0};
    }
    return {0, 0, v.patch + 1};
}

Version bump_tilde(const PartialVersion& p)
{
    if (p.parts <= 1) {
        return {p.version.major + 1, 0, 0};
    }
    return {p.version.major, p.version.minor + 1, 0};
}

Version bump_partial(const PartialVersion& p)
{
    if (p.parts == 1) {
        return {p.version.major + 1, 0, 0};
    }
    return {p.version.major, p.version.minor + 1, 0};
}

using Comparator = VersionConstraint::Comparator;
using Op = VersionConstraint::Op;

bool append_comparators(std::string_view op, std::string_view ver, std::vector<Comparator>& out)
{
    auto p = parse_partial(ver);
    if (!p) {
        return false;
    }
    if (p->parts == 0) {
        return true; // wildcard
    }
    if (op == "^") {
        out.push_back({Op::Ge, p->version});
        out.push_back({Op::Lt, bump_caret(*p)});
    } else if (op == "~") {
        out.push_back({Op::Ge, p->version});
        out.push_back({Op::Lt, bump_tilde(*p)});
    } else if (op.empty() || op == "=") {
        if (p->parts == 3) {
            out.push_back({Op::Eq, p->version});
        } else {
            out.push_back({Op::Ge, p->version});
            out.push_back({Op::Lt, bump_partial(*p)});
        }
    } else if (op == ">=") {
        out.push_back({Op::Ge, p->version});
    } else if (op == ">") {
        if (p->parts == 3) {
            out.push_back({Op::Gt, p->version});
        } else {
            out.push_back({Op::Ge, bump_partial(*p)});
        }
    } else if (op == "<=") {
        if (p->parts == 3) {
            out.push_back({Op::Le, p->version});
        } else {
            out.push_back({Op::Lt, bump_partial(*p)});
        }
    } else if (op == "<") {
        out.push_back({Op::Lt, p->version});
    } else {
        return false;
    }
    return true;
}

bool holds(const Comparator& c, const Version& v)
{
    switch (c.op) {
    case Op::Eq: return v == c.version;
    case Op::Lt: return v < c.version;
    case Op::Le: return v <= c.version;
    case Op::Gt: return v > c.version;
    case Op::Ge: return v >= c.version;
    }
    return false;
}

std::vector<std::string> split_tokens(std::string_view text)
{
    // Separates operators from versions so ">=0.4.22<0.6.0" and ">= 0.4.22" both work.
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '|' && i + 1 < text.size() && text[i + 1] == '|') {
            tokens.emplace_back("||");
            i += 2;
            continue;
        }
        if (c == '-' ) {
            tokens.emplace_back("-");
            ++i;
            continue;
        }
        if (c == '^' || c == '~' || c == '=' || c == '<' || c == '>') {
            std::size_t start = i++;
            if (i < text.size() && text[i] == '=') {
                ++i;
            }
            tokens.emplace_back(text.substr(start, i - start));
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                                   text[i] == '.' || text[i] == '*')) {
            ++i;
        }
        if (start == i) {
            tokens.emplace_back(1, c);
            ++i;
        } else {
            tokens.emplace_back(text.substr(start, i - start));
        }
    }
    return tokens;
}

bool is_operator(const std::string& t)
{
    return t == "^" || t == "~" || t == "=" || t == "<" || t == "<=" || t == ">" || t == ">=";
}

} // namespace

std::optional<VersionConstraint> VersionConstraint::parse(std::string_view text)
{
    auto tokens = split_tokens(text);
    VersionConstraint c;
    c.alternatives_.emplace_back();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t == "||") {
            c.alternatives_.emplace_back();
            continue;
        }
        std::string op;
        std::string ver = t;
        if (is_operator(t)) {
            if (i + 1 >= tokens.size()) {
                return std::nullopt;
            }
            op = t;
            ver = tokens[++i];
        }
        // Hyphen range "a - b".
        if (op.empty() && i + 2 < tokens.size() && tokens[i + 1] == "-") {
            if (!append_comparators(">=", ver, c.alternatives_.back()) ||
                !append_comparators("<=", tokens[i + 2], c.alternatives_.back())) {
                return std::nullopt;
            }
            i += 2;
            continue;
        }
        if (!append_comparators(op, ver, c.alternatives_.back())) {
            return std::nullopt;
        }
    }
    if (tokens.empty()) {
        return std::nullopt;
    }
    return c;
}

bool VersionConstraint::satisfied_by(const Version& v) const
{
    return std::any_of(alternatives_.begin(), alternatives_.end(), [&](const auto& set) {
        return std::all_of(set.begin(), set.end(), [&](const Comparator& c) { return holds(c, v); });
    });
}

Version VersionConstraint::lower_bound() const
{
    std::optional<Version> best;
    for (const auto& set : alternatives_) {
        Version low{0, 0, 0};
        for (const auto& c : set) {
            Version candidate = c.version;
            if (c.op == Op::Gt) {
                candidate.patch += 1;
            }
            if (c.op == Op::Eq || c.op == Op::Ge || c.op == Op::Gt) {
                low = std::max(low, candidate);
            }
        }
        if (!best || low < *best) {
            best = low;
        }
    }
    return best.value_or(Version{});
}

VersionConstraint VersionConstraint::conjoin(const VersionConstraint& other) const
{
    VersionConstraint out;
    for (const auto& a : alternatives_) {
        for (const auto& b : other.alternatives_) {
            auto merged = a;
            merged.insert(merged.end(), b.begin(), b.end());
            out.alternatives_.push_back(std::move(merged));
        }
    }
    return out;
}

} // namespace solsentry
