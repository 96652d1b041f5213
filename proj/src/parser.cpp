// SPDX-License-Identifier: Apache-2.0
#include "solsentry/parser.hpp"

#include <array>
#include <cctype>
#include <memory>
#include <optional>
#include <set>
#include <utility>

#include "solsentry/errors.hpp"
#include "solsentry/lexer.hpp"

namespace solsentry {

namespace {

using Draft = std::unique_ptr<NodeDraft>;
using nlohmann::json;

const std::set<std::string_view> kReserved{
    "if",       "else",     "while",    "for",       "do",        "return",  "emit",     "break",
    "continue", "contract", "function", "modifier",  "event",     "struct",  "enum",     "mapping",
    "pragma",   "import",   "is",       "returns",   "public",    "private", "internal", "external",
    "pure",     "view",     "memory",   "storage",   "calldata",  "constant", "immutable", "override",
    "virtual",  "assembly", "unchecked", "try",      "catch",     "using",   "interface", "library",
    "constructor", "receive", "fallback", "new",     "delete",    "indexed", "anonymous", "abstract",
};

const std::set<std::string_view> kSubdenominations{
    "wei", "gwei", "ether", "seconds", "minutes", "hours", "days", "weeks", "years", "finney", "szabo",
};

bool is_elementary_type(std::string_view w)
{
    static const std::set<std::string_view> base{"address", "bool", "string", "bytes", "byte",
                                                 "uint",    "int",  "fixed",  "ufixed"};
    if (base.contains(w)) {
        return true;
    }
    auto digits_after = [&](std::string_view prefix) {
        if (w.substr(0, prefix.size()) != prefix || w.size() == prefix.size()) {
            return false;
        }
        for (char c : w.substr(prefix.size())) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                return false;
            }
        }
        return true;
    };
    return digits_after("uint") || digits_after("int") || digits_after("bytes");
}

bool is_assign_op(std::string_view op)
{
    static const std::set<std::string_view> ops{"=",  "+=", "-=",  "*=",  "/=", "%=",
                                                "|=", "&=", "^=", "<<=", ">>=", ">>>="};
    return ops.contains(op);
}

int binary_precedence(std::string_view op)
{
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
    if (op == "|") return 5;
    if (op == "^") return 6;
    if (op == "&") return 7;
    if (op == "<<" || op == ">>" || op == ">>>") return 8;
    if (op == "+" || op == "-") return 9;
    if (op == "*" || op == "/" || op == "%") return 10;
    if (op == "**") return 11;
    return 0;
}

class Parser {
public:
    Parser(std::string_view text, std::vector<Token> tokens) : text_(text), toks_(std::move(tokens)) {}

    Draft parse_unit()
    {
        auto root = make(NodeType::SourceUnit);
        std::vector<Draft> nodes;
        while (!at_end()) {
            if (at("pragma")) {
                nodes.push_back(parse_pragma());
            } else if (at("import")) {
                nodes.push_back(parse_import());
            } else if (at("contract") || at("interface") || at("library") || at("abstract")) {
                nodes.push_back(parse_contract());
            } else if (at("struct") || at("enum") || at("function") || at("error") || at("using") ||
                       at("type") || at("event")) {
                unsupported("file-level " + peek().text);
            } else {
                fail("pragma, import or contract definition");
            }
        }
        root->list("nodes", std::move(nodes));
        if (toks_.size() > 1) {
            root->span = {toks_.front().offset, toks_[toks_.size() - 2].end() - toks_.front().offset};
        }
        return root;
    }

private:
    // ---- token helpers ----------------------------------------------------

    const Token& peek(std::size_t k = 0) const
    {
        std::size_t i = std::min(pos_ + k, toks_.size() - 1);
        return toks_[i];
    }
    bool at_end() const { return peek().kind == TokenKind::End; }
    bool at(std::string_view t, std::size_t k = 0) const { return peek(k).is(t); }
    bool accept(std::string_view t)
    {
        if (at(t)) {
            ++pos_;
            return true;
        }
        return false;
    }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    static std::string describe(const Token& t)
    {
        return t.kind == TokenKind::End ? std::string("end of input") : t.text;
    }

    [[noreturn]] void fail(const std::string& expected) const
    {
        const Token& t = peek();
        throw SyntaxError(t.line, t.column, expected, describe(t));
    }
    [[noreturn]] void unsupported(const std::string& what) const
    {
        const Token& t = peek();
        throw UnsupportedConstruct(t.line, t.column, what);
    }

    const Token& expect(std::string_view t)
    {
        if (!at(t)) {
            fail("'" + std::string(t) + "'");
        }
        return next();
    }

    std::string expect_identifier(const char* what = "identifier")
    {
        const Token& t = peek();
        if (t.kind != TokenKind::Identifier || kReserved.contains(t.text)) {
            fail(what);
        }
        return next().text;
    }

    bool at_identifier() const
    {
        return peek().kind == TokenKind::Identifier && !kReserved.contains(peek().text);
    }

    Draft make(NodeType t) const
    {
        auto d = std::make_unique<NodeDraft>(t);
        d->span.offset = peek().offset;
        return d;
    }
    Draft make_at(NodeType t, std::uint32_t start) const
    {
        auto d = std::make_unique<NodeDraft>(t);
        d->span.offset = start;
        return d;
    }
    // Zero-length node for an omitted list, anchored at the end of the last consumed token.
    Draft make_empty(NodeType t) const
    {
        return make_at(t, pos_ > 0 ? toks_[pos_ - 1].end() : peek().offset);
    }
    Draft close(Draft d) const
    {
        std::uint32_t end = pos_ > 0 ? toks_[pos_ - 1].end() : d->span.offset;
        d->span.length = end >= d->span.offset ? end - d->span.offset : 0;
        return d;
    }

    // ---- source-unit level -------------------------------------------------

    Draft parse_pragma()
    {
        auto d = make(NodeType::PragmaDirective);
        expect("pragma");
        json literals = json::array();
        const Token& name = peek();
        if (name.kind != TokenKind::Identifier) {
            fail("pragma name");
        }
        next();
        literals.push_back(name.text);
        std::uint32_t start = peek().offset;
        std::uint32_t end = start;
        while (!at(";")) {
            if (at_end()) {
                fail("';'");
            }
            end = next().end();
        }
        if (end > start) {
            literals.push_back(std::string(text_.substr(start, end - start)));
        }
        expect(";");
        d->attr("literals", std::move(literals));
        return close(std::move(d));
    }

    Draft parse_import()
    {
        auto d = make(NodeType::ImportDirective);
        expect("import");
        std::string unit_alias;
        json aliases = json::array();
        std::string file;
        auto expect_path = [&] {
            if (peek().kind != TokenKind::String) {
                fail("import path");
            }
            return next().value;
        };
        if (peek().kind == TokenKind::String) {
            file = expect_path();
            if (accept("as")) {
                unit_alias = expect_identifier();
            }
        } else if (accept("*")) {
            expect("as");
            unit_alias = expect_identifier();
            expect("from");
            file = expect_path();
        } else if (accept("{")) {
            do {
                json alias = json::object();
                alias["foreign"] = expect_identifier();
                alias["local"] = accept("as") ? json(expect_identifier()) : json(nullptr);
                aliases.push_back(std::move(alias));
            } while (accept(","));
            expect("}");
            expect("from");
            file = expect_path();
        } else if (at_identifier()) {
            unit_alias = expect_identifier();
            expect("from");
            file = expect_path();
        } else {
            fail("import path or symbol list");
        }
        expect(";");
        d->attr("file", file).attr("unitAlias", unit_alias).attr("symbolAliases", std::move(aliases));
        return close(std::move(d));
    }

    Draft parse_contract()
    {
        auto d = make(NodeType::ContractDefinition);
        bool is_abstract = accept("abstract");
        std::string kind = next().text;
        if (kind != "contract" && kind != "interface" && kind != "library") {
            --pos_;
            fail("'contract'");
        }
        std::string name = expect_identifier("contract name");
        std::vector<Draft> bases;
        if (accept("is")) {
            do {
                auto spec = make(NodeType::InheritanceSpecifier);
                spec->child("baseName", parse_user_type_name());
                if (at("(")) {
                    spec->list("arguments", parse_call_arguments(nullptr));
                }
                bases.push_back(close(std::move(spec)));
            } while (accept(","));
        }
        expect("{");
        std::vector<Draft> members;
        while (!at("}")) {
            if (at_end()) {
                fail("'}'");
            }
            members.push_back(parse_member());
        }
        expect("}");
        d->attr("name", name).attr("contractKind", kind).attr("abstract", is_abstract);
        d->list("baseContracts", std::move(bases));
        d->list("nodes", std::move(members));
        return close(std::move(d));
    }

    Draft parse_member()
    {
        if (at("function") || at("constructor") || at("receive") || at("fallback")) {
            return parse_function();
        }
        if (at("modifier")) {
            return parse_modifier();
        }
        if (at("event")) {
            return parse_event();
        }
        for (std::string_view kw : {"struct", "enum", "using", "error", "assembly"}) {
            if (at(kw)) {
                unsupported(std::string(kw) + (kw == "assembly" ? " block" : " definition"));
            }
        }
        if (at("type") && peek(1).kind == TokenKind::Identifier && at("is", 2)) {
            unsupported("user-defined value type");
        }
        return parse_state_variable();
    }

    Draft parse_state_variable()
    {
        auto d = make(NodeType::VariableDeclaration);
        auto type = parse_type_name();
        std::string visibility = "internal";
        std::string mutability = "mutable";
        std::optional<json> overrides;
        for (;;) {
            if (at("public") || at("private") || at("internal")) {
                visibility = next().text;
            } else if (at("constant") || at("immutable")) {
                mutability = next().text;
            } else if (at("override")) {
                overrides = parse_override();
            } else if (at("transient")) {
                unsupported("transient storage");
            } else {
                break;
            }
        }
        std::string name = expect_identifier("state variable name");
        Draft value;
        if (accept("=")) {
            value = parse_expression();
        }
        expect(";");
        d->attr("name", name)
            .attr("visibility", visibility)
            .attr("mutability", mutability)
            .attr("constant", mutability == "constant")
            .attr("stateVariable", true)
            .attr("storageLocation", "default");
        if (overrides) {
            d->attr("overrides", *overrides);
        }
        d->child("typeName", std::move(type));
        d->child("value", std::move(value));
        return close(std::move(d));
    }

    json parse_override()
    {
        expect("override");
        json names = json::array();
        if (accept("(")) {
            do {
                names.push_back(parse_dotted_name());
            } while (accept(","));
            expect(")");
        }
        return names;
    }

    std::string parse_dotted_name()
    {
        std::string name = expect_identifier();
        while (at(".") && peek(1).kind == TokenKind::Identifier) {
            next();
            name += "." + next().text;
        }
        return name;
    }

    Draft parse_function()
    {
        auto d = make(NodeType::FunctionDefinition);
        std::string kind = "function";
        std::string name;
        if (accept("function")) {
            if (at_identifier()) {
                name = expect_identifier();
            } else if (at("receive") || at("fallback")) {
                // Pre-0.6 style "function receive()" is just a name.
                name = next().text;
            } else {
                kind = "fallback";
            }
        } else {
            kind = next().text;
        }
        auto params = parse_parameter_list(false);
        std::string visibility;
        std::string mutability = "nonpayable";
        bool is_virtual = false;
        std::optional<json> overrides;
        std::vector<Draft> modifiers;
        Draft returns;
        for (;;) {
            if (at("public") || at("private") || at("internal") || at("external")) {
                visibility = next().text;
            } else if (at("pure") || at("view") || at("payable")) {
                mutability = next().text;
            } else if (at("constant")) {
                next();
                mutability = "view";
            } else if (accept("virtual")) {
                is_virtual = true;
            } else if (at("override")) {
                overrides = parse_override();
            } else if (accept("returns")) {
                returns = parse_parameter_list(false);
            } else if (at_identifier()) {
                auto inv = make(NodeType::ModifierInvocation);
                auto ident = make(NodeType::Identifier);
                ident->attr("name", parse_dotted_name());
                inv->child("modifierName", close(std::move(ident)));
                if (at("(")) {
                    inv->list("arguments", parse_call_arguments(nullptr));
                }
                modifiers.push_back(close(std::move(inv)));
            } else {
                break;
            }
        }
        if (visibility.empty()) {
            visibility = (kind == "receive" || kind == "fallback") ? "external" : "public";
        }
        if (!returns) {
            returns = make_empty(NodeType::ParameterList);
            returns->list("parameters", {});
        }
        Draft body;
        if (!accept(";")) {
            if (!at("{")) {
                fail("function body or ';'");
            }
            body = parse_block();
        }
        d->attr("name", name)
            .attr("kind", kind)
            .attr("visibility", visibility)
            .attr("stateMutability", mutability)
            .attr("virtual", is_virtual)
            .attr("implemented", static_cast<bool>(body));
        if (overrides) {
            d->attr("overrides", *overrides);
        }
        d->child("parameters", std::move(params));
        d->list("modifiers", std::move(modifiers));
        d->child("returnParameters", std::move(returns));
        d->child("body", std::move(body));
        return close(std::move(d));
    }

    Draft parse_modifier()
    {
        auto d = make(NodeType::ModifierDefinition);
        expect("modifier");
        std::string name = expect_identifier("modifier name");
        Draft params;
        if (at("(")) {
            params = parse_parameter_list(false);
        } else {
            params = make_empty(NodeType::ParameterList);
            params->list("parameters", {});
        }
        bool is_virtual = false;
        std::optional<json> overrides;
        for (;;) {
            if (accept("virtual")) {
                is_virtual = true;
            } else if (at("override")) {
                overrides = parse_override();
            } else {
                break;
            }
        }
        Draft body;
        if (!accept(";")) {
            body = parse_block();
        }
        d->attr("name", name).attr("virtual", is_virtual).attr("visibility", "internal");
        if (overrides) {
            d->attr("overrides", *overrides);
        }
        d->child("parameters", std::move(params));
        d->child("body", std::move(body));
        return close(std::move(d));
    }

    Draft parse_event()
    {
        auto d = make(NodeType::EventDefinition);
        expect("event");
        std::string name = expect_identifier("event name");
        auto params = parse_parameter_list(true);
        bool anonymous = accept("anonymous");
        expect(";");
        d->attr("name", name).attr("anonymous", anonymous);
        d->child("parameters", std::move(params));
        return close(std::move(d));
    }

    Draft parse_parameter_list(bool event_params)
    {
        auto d = make(NodeType::ParameterList);
        expect("(");
        std::vector<Draft> params;
        if (!at(")")) {
            do {
                params.push_back(parse_parameter(event_params));
            } while (accept(","));
        }
        expect(")");
        d->list("parameters", std::move(params));
        return close(std::move(d));
    }

    Draft parse_parameter(bool event_params)
    {
        auto d = make(NodeType::VariableDeclaration);
        auto type = parse_type_name();
        std::string location = "default";
        if (at("memory") || at("storage") || at("calldata")) {
            location = next().text;
        }
        bool indexed = false;
        if (event_params && accept("indexed")) {
            indexed = true;
        }
        std::string name;
        if (at_identifier()) {
            name = expect_identifier();
        }
        d->attr("name", name)
            .attr("storageLocation", location)
            .attr("stateVariable", false)
            .attr("constant", false)
            .attr("visibility", "internal")
            .attr("mutability", "mutable");
        if (event_params) {
            d->attr("indexed", indexed);
        }
        d->child("typeName", std::move(type));
        return close(std::move(d));
    }

    // ---- type names --------------------------------------------------------

    Draft parse_user_type_name()
    {
        auto d = make(NodeType::UserDefinedTypeName);
        d->attr("name", parse_dotted_name());
        return close(std::move(d));
    }

    Draft parse_type_name()
    {
        std::uint32_t start = peek().offset;
        Draft base;
        if (at("mapping")) {
            base = make(NodeType::Mapping);
            next();
            expect("(");
            base->child("keyType", parse_type_name());
            if (at_identifier()) {
                unsupported("named mapping parameters");
            }
            expect("=>");
            base->child("valueType", parse_type_name());
            if (at_identifier()) {
                unsupported("named mapping parameters");
            }
            expect(")");
            base = close(std::move(base));
        } else if (at("function")) {
            unsupported("function type");
        } else if (peek().kind == TokenKind::Identifier && is_elementary_type(peek().text)) {
            base = make(NodeType::ElementaryTypeName);
            std::string name = next().text;
            base->attr("name", name);
            if (name == "address") {
                base->attr("stateMutability", accept("payable") ? "payable" : "nonpayable");
            }
            base = close(std::move(base));
        } else if (at_identifier()) {
            base = parse_user_type_name();
        } else {
            fail("type name");
        }
        while (at("[")) {
            auto arr = make_at(NodeType::ArrayTypeName, start);
            next();
            Draft length;
            if (!at("]")) {
                length = parse_expression();
            }
            expect("]");
            arr->child("baseType", std::move(base));
            arr->child("length", std::move(length));
            base = close(std::move(arr));
        }
        return base;
    }

    // ---- statements --------------------------------------------------------

    Draft parse_block()
    {
        auto d = make(NodeType::Block);
        expect("{");
        std::vector<Draft> stmts;
        while (!at("}")) {
            if (at_end()) {
                fail("'}'");
            }
            stmts.push_back(parse_statement());
        }
        expect("}");
        d->list("statements", std::move(stmts));
        return close(std::move(d));
    }

    Draft parse_statement()
    {
        if (at("{")) {
            return parse_block();
        }
        if (at("if")) {
            auto d = make(NodeType::IfStatement);
            next();
            expect("(");
            d->child("condition", parse_expression());
            expect(")");
            d->child("trueBody", parse_statement());
            if (accept("else")) {
                d->child("falseBody", parse_statement());
            }
            return close(std::move(d));
        }
        if (at("while")) {
            auto d = make(NodeType::WhileStatement);
            next();
            expect("(");
            d->child("condition", parse_expression());
            expect(")");
            d->child("body", parse_statement());
            return close(std::move(d));
        }
        if (at("for")) {
            return parse_for();
        }
        if (at("return")) {
            auto d = make(NodeType::Return);
            next();
            if (!at(";")) {
                d->child("expression", parse_expression());
            }
            expect(";");
            return close(std::move(d));
        }
        if (at("emit")) {
            auto d = make(NodeType::EmitStatement);
            next();
            auto call = parse_expression();
            if (call->type != NodeType::FunctionCall) {
                fail("event invocation");
            }
            d->child("eventCall", std::move(call));
            expect(";");
            return close(std::move(d));
        }
        if (at("break") || at("continue")) {
            auto d = make(at("break") ? NodeType::Break : NodeType::Continue);
            next();
            expect(";");
            return close(std::move(d));
        }
        if (at("_") && at(";", 1)) {
            auto d = make(NodeType::PlaceholderStatement);
            next();
            next();
            return close(std::move(d));
        }
        if (at("do")) unsupported("do-while loop");
        if (at("assembly")) unsupported("inline assembly");
        if (at("unchecked")) unsupported("unchecked block");
        if (at("try")) unsupported("try/catch");
        if (at("throw")) unsupported("throw statement");
        if (at("var")) unsupported("var declaration");
        if (at("revert") && peek(1).kind == TokenKind::Identifier) unsupported("revert with custom error");
        return parse_simple_statement();
    }

    /// Variable declaration or expression statement, including the trailing ';'.
    Draft parse_simple_statement()
    {
        if (auto decl = try_parse_declaration()) {
            return decl;
        }
        auto d = make(NodeType::ExpressionStatement);
        d->child("expression", parse_expression());
        expect(";");
        return close(std::move(d));
    }

    Draft try_parse_declaration()
    {
        // Only the declaration head is speculative; once it parses, errors in
        // the initializer are real errors.
        std::size_t save = pos_;
        auto d = make(NodeType::VariableDeclarationStatement);
        std::vector<Draft> decls;
        try {
            if (at("(")) {
                next();
                bool any = false;
                for (;;) {
                    if (at(",") || at(")")) {
                        decls.push_back(nullptr);
                    } else {
                        decls.push_back(parse_local_declaration());
                        any = true;
                    }
                    if (!accept(",")) {
                        break;
                    }
                }
                expect(")");
                if (!any || !at("=")) {
                    pos_ = save;
                    return nullptr;
                }
            } else {
                decls.push_back(parse_local_declaration());
            }
        } catch (const SyntaxError&) {
            pos_ = save;
            return nullptr;
        } catch (const UnsupportedConstruct&) {
            pos_ = save;
            return nullptr;
        }
        Draft init;
        if (accept("=")) {
            init = parse_expression();
        } else if (decls.size() != 1) {
            fail("'='");
        }
        expect(";");
        d->list("declarations", std::move(decls));
        d->child("initialValue", std::move(init));
        return close(std::move(d));
    }

    Draft parse_local_declaration()
    {
        auto d = make(NodeType::VariableDeclaration);
        auto type = parse_type_name();
        std::string location = "default";
        if (at("memory") || at("storage") || at("calldata")) {
            location = next().text;
        }
        std::string name = expect_identifier("variable name");
        if (!at("=") && !at(";") && !at(",") && !at(")")) {
            fail("'=' or ';'");
        }
        d->attr("name", name)
            .attr("storageLocation", location)
            .attr("stateVariable", false)
            .attr("constant", false)
            .attr("visibility", "internal")
            .attr("mutability", "mutable");
        d->child("typeName", std::move(type));
        return close(std::move(d));
    }

    Draft parse_for()
    {
        auto d = make(NodeType::ForStatement);
        expect("for");
        expect("(");
        Draft init;
        if (!accept(";")) {
            init = parse_simple_statement();
        }
        Draft cond;
        if (!at(";")) {
            cond = parse_expression();
        }
        expect(";");
        Draft loop;
        if (!at(")")) {
            auto stmt = make(NodeType::ExpressionStatement);
            stmt->child("expression", parse_expression());
            loop = close(std::move(stmt));
        }
        expect(")");
        d->child("initializationExpression", std::move(init));
        d->child("condition", std::move(cond));
        d->child("loopExpression", std::move(loop));
        d->child("body", parse_statement());
        return close(std::move(d));
    }

    // ---- expressions -------------------------------------------------------

    Draft parse_expression() { return parse_assignment(); }

    Draft parse_assignment()
    {
        std::uint32_t start = peek().offset;
        auto lhs = parse_conditional();
        if (peek().kind == TokenKind::Punct && is_assign_op(peek().text)) {
            std::string op = next().text;
            auto rhs = parse_assignment();
            auto d = make_at(NodeType::Assignment, start);
            d->attr("operator", op);
            d->child("leftHandSide", std::move(lhs));
            d->child("rightHandSide", std::move(rhs));
            return close(std::move(d));
        }
        return lhs;
    }

    Draft parse_conditional()
    {
        std::uint32_t start = peek().offset;
        auto cond = parse_binary(1);
        if (!accept("?")) {
            return cond;
        }
        auto t = parse_assignment();
        expect(":");
        auto f = parse_assignment();
        auto d = make_at(NodeType::Conditional, start);
        d->child("condition", std::move(cond));
        d->child("trueExpression", std::move(t));
        d->child("falseExpression", std::move(f));
        return close(std::move(d));
    }

    Draft parse_binary(int min_prec)
    {
        std::uint32_t start = peek().offset;
        auto left = parse_unary();
        for (;;) {
            const Token& t = peek();
            if (t.kind != TokenKind::Punct) {
                break;
            }
            int prec = binary_precedence(t.text);
            if (prec == 0 || prec < min_prec) {
                break;
            }
            std::string op = next().text;
            auto right = parse_binary(op == "**" ? prec : prec + 1);
            auto d = make_at(NodeType::BinaryOperation, start);
            d->attr("operator", op);
            d->child("leftExpression", std::move(left));
            d->child("rightExpression", std::move(right));
            left = close(std::move(d));
        }
        return left;
    }

    Draft parse_unary()
    {
        if (at("!") || at("-") || at("~") || at("++") || at("--") || at("delete")) {
            auto d = make(NodeType::UnaryOperation);
            std::string op = next().text;
            d->attr("operator", op).attr("prefix", true);
            d->child("subExpression", parse_unary());
            return close(std::move(d));
        }
        if (at("+") ) {
            unsupported("unary plus");
        }
        return parse_postfix();
    }

    std::vector<Draft> parse_call_arguments(json* names)
    {
        expect("(");
        std::vector<Draft> args;
        if (at("{") && names) {
            next();
            if (!at("}")) {
                do {
                    names->push_back(expect_identifier("argument name"));
                    expect(":");
                    args.push_back(parse_expression());
                } while (accept(","));
            }
            expect("}");
        } else if (!at(")")) {
            do {
                args.push_back(parse_expression());
            } while (accept(","));
        }
        expect(")");
        return args;
    }

    Draft parse_postfix()
    {
        std::uint32_t start = peek().offset;
        auto e = parse_primary();
        for (;;) {
            if (at("++") || at("--")) {
                auto d = make_at(NodeType::UnaryOperation, start);
                d->attr("operator", next().text).attr("prefix", false);
                d->child("subExpression", std::move(e));
                e = close(std::move(d));
            } else if (at(".")) {
                next();
                if (peek().kind != TokenKind::Identifier) {
                    fail("member name");
                }
                auto d = make_at(NodeType::MemberAccess, start);
                d->attr("memberName", next().text);
                d->child("expression", std::move(e));
                e = close(std::move(d));
            } else if (at("[")) {
                next();
                auto d = make_at(NodeType::IndexAccess, start);
                Draft index;
                if (!at("]")) {
                    index = parse_expression();
                }
                if (at(":")) {
                    unsupported("array slice");
                }
                expect("]");
                d->child("baseExpression", std::move(e));
                d->child("indexExpression", std::move(index));
                e = close(std::move(d));
            } else if (at("(")) {
                auto d = make_at(NodeType::FunctionCall, start);
                json names = json::array();
                auto args = parse_call_arguments(&names);
                d->attr("names", std::move(names));
                d->child("expression", std::move(e));
                d->list("arguments", std::move(args));
                e = close(std::move(d));
            } else if (at("{") && peek(1).kind == TokenKind::Identifier && at(":", 2)) {
                next();
                auto d = make_at(NodeType::FunctionCallOptions, start);
                json names = json::array();
                std::vector<Draft> options;
                do {
                    names.push_back(expect_identifier("option name"));
                    expect(":");
                    options.push_back(parse_expression());
                } while (accept(","));
                expect("}");
                d->attr("names", std::move(names));
                d->child("expression", std::move(e));
                d->list("options", std::move(options));
                e = close(std::move(d));
            } else {
                return e;
            }
        }
    }

    Draft parse_primary()
    {
        const Token& t = peek();
        switch (t.kind) {
        case TokenKind::Number: {
            auto d = make(NodeType::Literal);
            std::string value = next().text;
            d->attr("kind", "number").attr("value", value);
            if (peek().kind == TokenKind::Identifier && kSubdenominations.contains(peek().text)) {
                d->attr("subdenomination", next().text);
            }
            return close(std::move(d));
        }
        case TokenKind::String: {
            auto d = make(NodeType::Literal);
            bool unicode = t.text.rfind("unicode", 0) == 0;
            d->attr("kind", unicode ? "unicodeString" : "string").attr("value", next().value);
            if (peek().kind == TokenKind::String) {
                unsupported("adjacent string literal concatenation");
            }
            return close(std::move(d));
        }
        case TokenKind::HexString: {
            auto d = make(NodeType::Literal);
            d->attr("kind", "hexString").attr("value", next().value);
            return close(std::move(d));
        }
        case TokenKind::End:
            fail("expression");
        case TokenKind::Punct:
            if (at("(") || at("[")) {
                return parse_tuple();
            }
            fail("expression");
        case TokenKind::Identifier:
            break;
        }

        if (at("true") || at("false")) {
            auto d = make(NodeType::Literal);
            d->attr("kind", "bool").attr("value", next().text);
            return close(std::move(d));
        }
        if (at("new")) {
            auto d = make(NodeType::NewExpression);
            next();
            d->child("typeName", parse_type_name());
            return close(std::move(d));
        }
        if (at("function")) {
            unsupported("function type expression");
        }
        if (is_elementary_type(t.text) || at("payable")) {
            auto d = make(NodeType::ElementaryTypeNameExpression);
            auto tn = make(NodeType::ElementaryTypeName);
            std::string name = next().text;
            if (name == "payable") {
                tn->attr("name", "address").attr("stateMutability", "payable");
            } else {
                tn->attr("name", name);
                if (name == "address") {
                    tn->attr("stateMutability", "nonpayable");
                }
            }
            if (name != "payable" && at("[")) {
                // `uint[]` etc. only appear after `new` or inside abi.decode tuples.
                if (at("]", 1)) {
                    unsupported("array type expression");
                }
            }
            d->child("typeName", close(std::move(tn)));
            return close(std::move(d));
        }
        if (kReserved.contains(t.text)) {
            fail("expression");
        }
        auto d = make(NodeType::Identifier);
        d->attr("name", next().text);
        return close(std::move(d));
    }

    Draft parse_tuple()
    {
        auto d = make(NodeType::TupleExpression);
        bool inline_array = at("[");
        std::string_view close_tok = inline_array ? "]" : ")";
        next();
        std::vector<Draft> components;
        if (!at(close_tok)) {
            for (;;) {
                if (!inline_array && (at(",") || at(")"))) {
                    components.push_back(nullptr);
                } else {
                    components.push_back(parse_expression());
                }
                if (!accept(",")) {
                    break;
                }
            }
        }
        expect(close_tok);
        d->attr("isInlineArray", inline_array);
        d->list("components", std::move(components));
        return close(std::move(d));
    }

    std::string_view text_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace

bool is_valid_utf8(std::string_view text)
{
    std::size_t i = 0;
    while (i < text.size()) {
        auto c = static_cast<unsigned char>(text[i]);
        std::size_t extra = 0;
        if (c < 0x80) {
            extra = 0;
        } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
            extra = 1;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
        } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
            extra = 3;
        } else {
            return false;
        }
        if (i + extra >= text.size() && extra > 0) {
            return false;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
                return false;
            }
        }
        i += extra + 1;
    }
    return true;
}

SourceUnit parse_source(std::string_view text, std::string file_id)
{
    if (!is_valid_utf8(text)) {
        throw SyntaxError(1, 1, "UTF-8 text", "invalid byte sequence");
    }
    Parser parser(text, tokenize(text));
    auto root = parser.parse_unit();
    return SourceUnit::freeze(std::move(root), std::move(file_id), std::string(text));
}

} // namespace solsentry
