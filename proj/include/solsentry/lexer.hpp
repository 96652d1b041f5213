// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace solsentry {

enum class TokenKind { Identifier, Number, String, HexString, Punct, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;  // raw source text of the token
    std::string value; // decoded contents for string literals
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
    std::size_t line = 1;
    std::size_t column = 1;

    bool is(std::string_view t) const
    {
        return (kind == TokenKind::Punct || kind == TokenKind::Identifier) && text == t;
    }
    std::uint32_t end() const { return offset + length; }
};

/// Splits Solidity source into tokens, dropping whitespace and comments.
/// Throws SyntaxError on unterminated strings/comments or stray characters.
std::vector<Token> tokenize(std::string_view source);

/// Removes // and /* */ comments (string literals are preserved).
std::string strip_comments(std::string_view source);

/// Escapes a decoded string for re-emission inside double quotes.
std::string escape_string_literal(std::string_view value);

} // namespace solsentry
