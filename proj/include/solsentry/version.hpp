// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace solsentry {

struct Version {
    int major = 0;
    int minor = 0;
    int patch = 0;

    friend auto operator<=>(const Version&, const Version&) = default;
    std::string str() const;
};

/// A `pragma solidity` constraint: a disjunction of comparator sets, using the
/// semver operators solc accepts (^ ~ = < <= > >=, hyphen ranges, partial versions).
class VersionConstraint {
public:
    enum class Op { Eq, Lt, Le, Gt, Ge };
    struct Comparator {
        Op op;
        Version version;
    };

    /// Returns nullopt when the text is not a recognisable constraint.
    static std::optional<VersionConstraint> parse(std::string_view text);

    bool satisfied_by(const Version& v) const;
    /// Smallest version admitted by the constraint (0.0.0 when unbounded below).
    Version lower_bound() const;
    /// Intersection of two constraints (both must hold).
    VersionConstraint conjoin(const VersionConstraint& other) const;

    const std::vector<std::vector<Comparator>>& alternatives() const { return alternatives_; }

private:
    std::vector<std::vector<Comparator>> alternatives_;
};

} // namespace solsentry
