// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace solsentry::rulegen {

enum class TemplateId { Pb, Prb, Prcb, Prcbi };

struct PromptTemplate {
    TemplateId id;
    std::string name; // "P_b", "P_rb", "P_rcb", "P_rcbi"
    std::optional<std::string> system_text;
    std::string user_text;

    /// System and user text joined the way the prompt table prints them.
    std::string full_text() const;
};

const std::vector<PromptTemplate>& all_templates();
const PromptTemplate& prompt_template(TemplateId id);
/// Accepts "P_rcbi", "rcbi", "Prcbi" and similar spellings, case-insensitively.
std::optional<TemplateId> template_from_name(std::string_view name);

struct Message {
    std::string role;
    std::string content;
    friend bool operator==(const Message&, const Message&) = default;
};

/// Optional system message, then the instruction followed by a blank line and
/// the snippet.
std::vector<Message> build_prompt(const PromptTemplate& tmpl, std::string_view snippet);

nlohmann::ordered_json messages_to_json(const std::vector<Message>& messages);

} // namespace solsentry::rulegen
