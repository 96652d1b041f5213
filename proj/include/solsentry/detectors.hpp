// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/ast.hpp"

namespace solsentry {

enum class Severity { High, Medium, Info };
enum class Origin { Builtin, Generated };

std::string_view severity_name(Severity s);
std::string_view origin_name(Origin o);

struct Finding {
    std::string swe_id;
    std::string detector_id;
    Origin origin = Origin::Builtin;
    std::string file_id;
    Span span;
    std::size_t line = 0;
    std::size_t column = 0;
    std::string message;
    Severity severity = Severity::High;

    friend bool operator==(const Finding&, const Finding&) = default;
};

/// Sort key: (file_id, offset, detector_id, length, message).
bool finding_less(const Finding& a, const Finding& b);

struct ScanOptions {
    /// Suppress SWE-161 when the pragma already requires >= 0.6.0.
    bool pragma_gate = true;
    /// Report `_mint` calls as info findings under SWE-138.
    bool mint_check = true;
};

using DetectFn = std::function<std::vector<Finding>(const SourceUnit&, const ScanOptions&)>;

struct DetectorDescriptor {
    std::string detector_id;
    std::string swe_id;
    Origin origin = Origin::Builtin;
    bool enabled = true;
    std::string description;
    /// Generated detectors only.
    std::optional<std::string> condition_text;
    std::optional<double> acceptance_accuracy;
    DetectFn run;
};

class Registry {
public:
    /// Throws DuplicateDetectorId.
    Registry& add(DetectorDescriptor descriptor);
    bool remove(std::string_view detector_id);
    /// Returns false when the id is unknown.
    bool set_enabled(std::string_view detector_id, bool enabled);
    const DetectorDescriptor* find(std::string_view detector_id) const;
    bool contains(std::string_view detector_id) const { return find(detector_id) != nullptr; }
    /// Descriptors ordered by detector id.
    std::vector<const DetectorDescriptor*> descriptors() const;
    std::size_t size() const { return detectors_.size(); }
    bool empty() const { return detectors_.empty(); }

private:
    std::map<std::string, DetectorDescriptor, std::less<>> detectors_;
};

/// Runs every enabled detector; the result is sorted with finding_less. A
/// detector that throws contributes one info-severity diagnostic finding.
std::vector<Finding> scan(const SourceUnit& unit, const Registry& registry, const ScanOptions& options = {});

Finding make_finding(const SourceUnit& unit, const AstNode& node, std::string swe_id, std::string detector_id,
                     std::string message, Severity severity, Origin origin = Origin::Builtin);

std::vector<Finding> detect_swe161(const SourceUnit& unit, const ScanOptions& options = {});
std::vector<Finding> detect_swe134(const SourceUnit& unit, const ScanOptions& options = {});
std::vector<Finding> detect_swe114(const SourceUnit& unit, const ScanOptions& options = {});
std::vector<Finding> detect_swe138(const SourceUnit& unit, const ScanOptions& options = {});
std::vector<Finding> detect_swe140(const SourceUnit& unit, const ScanOptions& options = {});

namespace detector_ids {
inline constexpr std::string_view kSwe161 = "swe161-array-length";
inline constexpr std::string_view kSwe134 = "swe134-hardcoded-gas";
inline constexpr std::string_view kSwe114 = "swe114-approve-race";
inline constexpr std::string_view kSwe138 = "swe138-locked-money";
inline constexpr std::string_view kSwe140 = "swe140-unchecked-send";
} // namespace detector_ids

/// Registry holding the five built-in detectors.
Registry builtin_registry();
void register_builtins(Registry& registry);

/// Heuristic ether transfer: `x.transfer(v)` / `x.send(v)` with one argument
/// whose receiver is not a contract-typed value declared in the unit.
bool is_ether_transfer(const SourceUnit& unit, const AstNode& call, std::string_view member);

nlohmann::ordered_json finding_to_json(const Finding& f);
nlohmann::ordered_json findings_to_json(const std::vector<Finding>& findings);
/// One line per finding: `file:line:col: severity [swe_id/detector_id] message`.
std::string format_findings_text(const std::vector<Finding>& findings);

} // namespace solsentry
