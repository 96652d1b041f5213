// SPDX-License-Identifier: Apache-2.0
#include "solsentry/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "solsentry/errors.hpp"

namespace solsentry {

namespace {

constexpr std::array<std::string_view, 30> kPuncts{
    ">>>=", "<<=", ">>=", ">>>", "**", "++", "--", "&&", "||", "==",
    "!=",   "<=",  ">=",  "<<",  ">>", "+=", "-=", "*=", "/=", "%=",
    "|=",   "&=",  "^=",  "=>",  "->", ":=", "(",  ")",  "{",  "}",
};

constexpr std::string_view kSingle = "()[]{};,.?:=+-*/%!~<>&|^@";

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_trivia();
            Token t;
            t.offset = static_cast<std::uint32_t>(pos_);
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                t.kind = TokenKind::End;
                out.push_back(std::move(t));
                return out;
            }
            char c = src_[pos_];
            if (ident_start(c)) {
                lex_identifier(t);
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '.' && pos_ + 1 < src_.size() &&
                        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                lex_number(t);
            } else if (c == '"' || c == '\'') {
                t.kind = TokenKind::String;
                t.value = lex_quoted(c);
            } else {
                lex_punct(t);
            }
            t.length = static_cast<std::uint32_t>(pos_) - t.offset;
            t.text = std::string(src_.substr(t.offset, t.length));
            out.push_back(std::move(t));
        }
    }

private:
    void advance(std::size_t n = 1)
    {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    [[noreturn]] void fail(const std::string& expected, const std::string& found)
    {
        throw SyntaxError(line_, col_, expected, found);
    }

    void skip_trivia()
    {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    advance();
                }
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
                advance(2);
                while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) {
                    advance();
                }
                if (pos_ + 1 >= src_.size()) {
                    fail("'*/'", "end of input");
                }
                advance(2);
            } else {
                return;
            }
        }
    }

    void lex_identifier(Token& t)
    {
        while (pos_ < src_.size() && ident_char(src_[pos_])) {
            advance();
        }
        t.kind = TokenKind::Identifier;
        std::string_view word = src_.substr(t.offset, pos_ - t.offset);
        if ((word == "hex" || word == "unicode") && pos_ < src_.size() &&
            (src_[pos_] == '"' || src_[pos_] == '\'')) {
            t.kind = word == "hex" ? TokenKind::HexString : TokenKind::String;
            t.value = lex_quoted(src_[pos_]);
        }
    }

    void lex_number(Token& t)
    {
        t.kind = TokenKind::Number;
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
            advance(2);
            while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                advance();
            }
            return;
        }
        auto digits = [&] {
            while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                advance();
            }
        };
        digits();
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            advance();
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            advance();
            if (pos_ < src_.size() && src_[pos_] == '-') {
                advance();
            }
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                digits();
            } else {
                fail("exponent digits", std::string(src_.substr(save, pos_ - save)));
            }
        }
        if (pos_ < src_.size() && ident_start(src_[pos_])) {
            fail("end of number", std::string(1, src_[pos_]));
        }
    }

    std::string lex_quoted(char quote)
    {
        std::string value;
        advance(); // opening quote
        while (pos_ < src_.size() && src_[pos_] != quote) {
            char c = src_[pos_];
            if (c == '\n') {
                fail("closing quote", "newline");
            }
            if (c == '\\' && pos_ + 1 < src_.size()) {
                char e = src_[pos_ + 1];
                advance(2);
                switch (e) {
                case 'n': value += '\n'; break;
                case 't': value += '\t'; break;
                case 'r': value += '\r'; break;
                case '\\': value += '\\'; break;
                case '"': value += '"'; break;
                case '\'': value += '\''; break;
                case '\n': break;
                case 'x': {
                    if (pos_ + 1 >= src_.size() || !std::isxdigit(static_cast<unsigned char>(src_[pos_])) ||
                        !std::isxdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                        fail("two hex digits", std::string(src_.substr(pos_, 2)));
                    }
                    value += static_cast<char>(std::stoi(std::string(src_.substr(pos_, 2)), nullptr, 16));
                    advance(2);
                    break;
                }
                default:
                    value += '\\';
                    value += e;
                }
                continue;
            }
            value += c;
            advance();
        }
        if (pos_ >= src_.size()) {
            fail("closing quote", "end of input");
        }
        advance(); // closing quote
        return value;
    }

    void lex_punct(Token& t)
    {
        t.kind = TokenKind::Punct;
        for (std::string_view p : kPuncts) {
            if (src_.substr(pos_, p.size()) == p) {
                advance(p.size());
                return;
            }
        }
        if (kSingle.find(src_[pos_]) != std::string_view::npos) {
            advance();
            return;
        }
        fail("token", std::string(1, src_[pos_]));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

} // namespace

std::vector<Token> tokenize(std::string_view source)
{
    return Lexer(source).run();
}

std::string strip_comments(std::string_view source)
{
    std::string out;
    out.reserve(source.size());
    std::size_t i = 0;
    while (i < source.size()) {
        char c = source[i];
        if (c == '"' || c == '\'') {
            char q = c;
            out += c;
            ++i;
            while (i < source.size() && source[i] != q && source[i] != '\n') {
                if (source[i] == '\\' && i + 1 < source.size()) {
                    out += source[i++];
                }
                out += source[i++];
            }
            if (i < source.size()) {
                out += source[i++];
            }
        } else if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
            while (i < source.size() && source[i] != '\n') {
                ++i;
            }
        } else if (c == '/' && i + 1 < source.size() && source[i + 1] == '*') {
            i += 2;
            while (i + 1 < source.size() && !(source[i] == '*' && source[i + 1] == '/')) {
                ++i;
            }
            i = std::min(source.size(), i + 2);
            out += ' ';
        } else {
            out += c;
            ++i;
        }
    }
    return out;
}

std::string escape_string_literal(std::string_view value)
{
    std::string out;
    for (char c : value) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: {
            auto u = static_cast<unsigned char>(c);
            if (u < 0x20) {
                static constexpr char kHex[] = "0123456789abcdef";
                out += "\\x";
                out += kHex[u >> 4];
                out += kHex[u & 0xF];
            } else {
                out += c;
            }
        }
        }
    }
    return out;
}

} // namespace solsentry
