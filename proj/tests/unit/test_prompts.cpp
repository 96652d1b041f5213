// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "solsentry/prompts.hpp"
#include "solsentry/util.hpp"
#include "test_support.hpp"

using namespace solsentry;
using namespace solsentry::rulegen;
namespace st = solsentry::testing;

TEST(Prompts, TemplatesMatchGoldenTable)
{
    const std::string golden = read_file(st::fixture("prompts/templates.tsv"));
    EXPECT_EQ(sha256_hex(golden), "f1ff97efcec35e0c630a58234fabfc8dd1a298161195d13c1d47527be5362fb3");
    std::istringstream in(golden);
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        ASSERT_NE(tab, std::string::npos);
        ASSERT_LT(i, all_templates().size());
        EXPECT_EQ(all_templates()[i].name, line.substr(0, tab));
        EXPECT_EQ(all_templates()[i].full_text(), line.substr(tab + 1));
        ++i;
    }
    EXPECT_EQ(i, 4u);
}

TEST(Prompts, BaseTemplateIsSingleUserMessage)
{
    auto msgs = build_prompt(prompt_template(TemplateId::Pb), "a.length--;");
    ASSERT_EQ(msgs.size(), 1u);
    EXPECT_EQ(msgs[0].role, "user");
    EXPECT_EQ(msgs[0].content, "Write the if condition to detect this instruction.\n\na.length--;");
}

TEST(Prompts, RoleTemplatesUseSystemMessage)
{
    auto msgs = build_prompt(prompt_template(TemplateId::Prcbi), "x.send(1);");
    ASSERT_EQ(msgs.size(), 2u);
    EXPECT_EQ(msgs[0].role, "system");
    EXPECT_EQ(msgs[0].content, "You are a smart contract security auditor.");
    EXPECT_EQ(msgs[1].content.substr(msgs[1].content.size() - 12), "\n\nx.send(1);");
    EXPECT_NE(msgs[1].content.find("rightHandSide.nodeType"), std::string::npos);
}

TEST(Prompts, NameSpellings)
{
    EXPECT_EQ(template_from_name("P_rcbi"), TemplateId::Prcbi);
    EXPECT_EQ(template_from_name("rcbi"), TemplateId::Prcbi);
    EXPECT_EQ(template_from_name("PRB"), TemplateId::Prb);
    EXPECT_EQ(template_from_name("p_b"), TemplateId::Pb);
    EXPECT_FALSE(template_from_name("P_x"));
}

TEST(Prompts, MessagesJsonIsOrdered)
{
    auto j = messages_to_json(build_prompt(prompt_template(TemplateId::Prb), "s"));
    EXPECT_EQ(j.dump(), R"([{"role":"system","content":"You are a smart contract security auditor."},)"
                        R"({"role":"user","content":"write the if condition to detect this instruction.\n\ns"}])");
}
