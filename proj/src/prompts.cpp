// SPDX-License-Identifier: Apache-2.0
#include "solsentry/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "solsentry/errors.hpp"

namespace solsentry::rulegen {

namespace {

constexpr const char* kRole = "You are a smart contract security auditor.";
constexpr const char* kInstruction = "write the if condition to detect this instruction.";
constexpr const char* kConstrained = "Using Solidity-ast and typescript, write the if condition to detect this "
                                     "instruction. The output should only contain the if condition.";
constexpr const char* kNodeTypeHint =
    " Keep in mind that The following ast structures could have different values depending on their nodeType: "
    "Expression.nodeType rightExpression.nodeType leftExpression.nodeType leftHandSide.nodeType "
    "rightHandSide.nodeType";

} // namespace

std::string PromptTemplate::full_text() const
{
    return system_text ? *system_text + " " + user_text : user_text;
}

const std::vector<PromptTemplate>& all_templates()
{
    static const std::vector<PromptTemplate> templates{
        {TemplateId::Pb, "P_b", std::nullopt, "Write the if condition to detect this instruction."},
        {TemplateId::Prb, "P_rb", kRole, kInstruction},
        {TemplateId::Prcb, "P_rcb", kRole, kConstrained},
        {TemplateId::Prcbi, "P_rcbi", kRole, std::string(kConstrained) + kNodeTypeHint},
    };
    return templates;
}

const PromptTemplate& prompt_template(TemplateId id)
{
    for (const auto& t : all_templates()) {
        if (t.id == id) {
            return t;
        }
    }
    throw Error("unknown prompt template");
}

std::optional<TemplateId> template_from_name(std::string_view name)
{
    std::string key;
    for (char c : name) {
        if (c != '_' && c != '{' && c != '}') {
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (key.size() > 1 && key.front() == 'p') {
        key.erase(0, 1);
    }
    if (key == "b") return TemplateId::Pb;
    if (key == "rb") return TemplateId::Prb;
    if (key == "rcb") return TemplateId::Prcb;
    if (key == "rcbi") return TemplateId::Prcbi;
    return std::nullopt;
}

std::vector<Message> build_prompt(const PromptTemplate& tmpl, std::string_view snippet)
{
    std::vector<Message> out;
    if (tmpl.system_text) {
        out.push_back({"system", *tmpl.system_text});
    }
    out.push_back({"user", tmpl.user_text + "\n\n" + std::string(snippet)});
    return out;
}

nlohmann::ordered_json messages_to_json(const std::vector<Message>& messages)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        nlohmann::ordered_json o;
        o["role"] = m.role;
        o["content"] = m.content;
        arr.push_back(std::move(o));
    }
    return arr;
}

} // namespace solsentry::rulegen
