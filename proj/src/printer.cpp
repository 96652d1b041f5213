// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "solsentry/ast_json.hpp"
#include "solsentry/errors.hpp"
#include "solsentry/lexer.hpp"

namespace solsentry {

namespace {

class Printer {
public:
    explicit Printer(const SourceUnit& unit) : u_(unit) {}

    std::string run()
    {
        const AstNode& root = u_.root();
        require(root, NodeType::SourceUnit);
        bool first = true;
        for (const AstNode* n : u_.children(root, "nodes")) {
            if (!first && n->type == NodeType::ContractDefinition) {
                out_ << "\n";
            }
            first = false;
            top_level(*n);
        }
        return out_.str();
    }

private:
    static void require(const AstNode& n, NodeType t)
    {
        if (n.type != t) {
            throw PrintUnsupported(n.type_name);
        }
    }

    void indent() { out_ << std::string(depth_ * 4, ' '); }

    void top_level(const AstNode& n)
    {
        switch (n.type) {
        case NodeType::PragmaDirective: {
            const auto& lits = n.attributes.at("literals");
            out_ << "pragma";
            for (const auto& l : lits) {
                out_ << " " << l.get<std::string>();
            }
            out_ << ";\n";
            return;
        }
        case NodeType::ImportDirective:
            out_ << import_text(n) << "\n";
            return;
        case NodeType::ContractDefinition:
            contract(n);
            return;
        default:
            throw PrintUnsupported(n.type_name);
        }
    }

    std::string import_text(const AstNode& n) const
    {
        std::string file = "\"" + escape_string_literal(n.attr_string("file")) + "\"";
        const auto& aliases = n.attributes.value("symbolAliases", nlohmann::json::array());
        std::string alias = n.attr_string("unitAlias");
        if (!aliases.empty()) {
            std::string s = "import {";
            for (std::size_t i = 0; i < aliases.size(); ++i) {
                if (i) {
                    s += ", ";
                }
                s += aliases[i].at("foreign").get<std::string>();
                if (aliases[i].contains("local") && aliases[i]["local"].is_string()) {
                    s += " as " + aliases[i]["local"].get<std::string>();
                }
            }
            return s + "} from " + file + ";";
        }
        return "import " + file + (alias.empty() ? "" : " as " + alias) + ";";
    }

    void contract(const AstNode& n)
    {
        if (n.attr_bool("abstract")) {
            out_ << "abstract ";
        }
        out_ << n.attr_string("contractKind") << " " << n.attr_string("name");
        auto bases = u_.children(n, "baseContracts");
        for (std::size_t i = 0; i < bases.size(); ++i) {
            require(*bases[i], NodeType::InheritanceSpecifier);
            out_ << (i == 0 ? " is " : ", ") << type_name(*u_.child(*bases[i], "baseName"));
            if (bases[i]->slot("arguments")) {
                out_ << "(" << expr_list(*bases[i], "arguments") << ")";
            }
        }
        out_ << " {\n";
        ++depth_;
        for (const AstNode* m : u_.children(n, "nodes")) {
            member(*m);
        }
        --depth_;
        out_ << "}\n";
    }

    void member(const AstNode& n)
    {
        indent();
        switch (n.type) {
        case NodeType::VariableDeclaration:
            out_ << state_variable(n) << "\n";
            return;
        case NodeType::FunctionDefinition:
            function(n);
            return;
        case NodeType::ModifierDefinition:
            modifier(n);
            return;
        case NodeType::EventDefinition:
            out_ << "event " << n.attr_string("name") << parameters(*u_.child(n, "parameters"), true)
                 << (n.attr_bool("anonymous") ? " anonymous" : "") << ";\n";
            return;
        default:
            throw PrintUnsupported(n.type_name);
        }
    }

    static std::string overrides(const AstNode& n)
    {
        auto it = n.attributes.find("overrides");
        if (it == n.attributes.end() || !it->is_array()) {
            return "";
        }
        std::string s = " override";
        if (!it->empty()) {
            s += "(";
            for (std::size_t i = 0; i < it->size(); ++i) {
                s += (i ? ", " : "") + (*it)[i].get<std::string>();
            }
            s += ")";
        }
        return s;
    }

    std::string state_variable(const AstNode& n)
    {
        std::string s = type_name(*u_.child(n, "typeName"));
        s += " " + n.attr_string("visibility");
        std::string mut = n.attr_string("mutability");
        if (mut == "constant" || mut == "immutable") {
            s += " " + mut;
        } else if (n.attr_bool("constant")) {
            s += " constant";
        }
        s += overrides(n);
        s += " " + n.attr_string("name");
        if (const AstNode* v = u_.child(n, "value")) {
            s += " = " + expr(*v);
        }
        return s + ";";
    }

    std::string parameters(const AstNode& list, bool event_params)
    {
        require(list, NodeType::ParameterList);
        std::string s = "(";
        bool first = true;
        for (const AstNode* p : u_.children(list, "parameters")) {
            if (!first) {
                s += ", ";
            }
            first = false;
            s += type_name(*u_.child(*p, "typeName"));
            std::string loc = p->attr_string("storageLocation");
            if (!loc.empty() && loc != "default") {
                s += " " + loc;
            }
            if (event_params && p->attr_bool("indexed")) {
                s += " indexed";
            }
            if (std::string name = p->attr_string("name"); !name.empty()) {
                s += " " + name;
            }
        }
        return s + ")";
    }

    void function(const AstNode& n)
    {
        std::string kind = n.attr_string("kind");
        std::string name = n.attr_string("name");
        if (kind == "function") {
            out_ << "function " << name;
        } else {
            out_ << kind;
        }
        out_ << parameters(*u_.child(n, "parameters"), false);
        out_ << " " << n.attr_string("visibility");
        std::string mut = n.attr_string("stateMutability");
        if (!mut.empty() && mut != "nonpayable") {
            out_ << " " << mut;
        }
        if (n.attr_bool("virtual")) {
            out_ << " virtual";
        }
        out_ << overrides(n);
        for (const AstNode* m : u_.children(n, "modifiers")) {
            require(*m, NodeType::ModifierInvocation);
            out_ << " " << expr(*u_.child(*m, "modifierName"));
            if (m->slot("arguments")) {
                out_ << "(" << expr_list(*m, "arguments") << ")";
            }
        }
        if (const AstNode* r = u_.child(n, "returnParameters"); r && !u_.children(*r, "parameters").empty()) {
            out_ << " returns " << parameters(*r, false);
        }
        body_or_semicolon(u_.child(n, "body"));
    }

    void modifier(const AstNode& n)
    {
        out_ << "modifier " << n.attr_string("name") << parameters(*u_.child(n, "parameters"), false);
        if (n.attr_bool("virtual")) {
            out_ << " virtual";
        }
        out_ << overrides(n);
        body_or_semicolon(u_.child(n, "body"));
    }

    void body_or_semicolon(const AstNode* body)
    {
        if (!body) {
            out_ << ";\n";
            return;
        }
        out_ << " ";
        block(*body);
        out_ << "\n";
    }

    // Prints `{ ... }` starting at the current column; leaves the cursor after `}`.
    void block(const AstNode& n)
    {
        require(n, NodeType::Block);
        auto stmts = u_.children(n, "statements");
        if (stmts.empty()) {
            out_ << "{}";
            return;
        }
        out_ << "{\n";
        ++depth_;
        for (const AstNode* s : stmts) {
            indent();
            statement(*s);
            out_ << "\n";
        }
        --depth_;
        indent();
        out_ << "}";
    }

    // Body of if/while/for: blocks stay on the same line, anything else is
    // pushed to an indented line of its own.
    void nested(const AstNode& n)
    {
        if (n.type == NodeType::Block) {
            out_ << " ";
            block(n);
            return;
        }
        out_ << "\n";
        ++depth_;
        indent();
        statement(n);
        --depth_;
    }

    void statement(const AstNode& n)
    {
        switch (n.type) {
        case NodeType::Block:
            block(n);
            return;
        case NodeType::IfStatement: {
            out_ << "if (" << expr(*u_.child(n, "condition")) << ")";
            nested(*u_.child(n, "trueBody"));
            if (const AstNode* f = u_.child(n, "falseBody")) {
                if (u_.child(n, "trueBody")->type == NodeType::Block) {
                    out_ << " else";
                } else {
                    out_ << "\n";
                    indent();
                    out_ << "else";
                }
                if (f->type == NodeType::IfStatement) {
                    out_ << " ";
                    statement(*f);
                } else {
                    nested(*f);
                }
            }
            return;
        }
        case NodeType::WhileStatement:
            out_ << "while (" << expr(*u_.child(n, "condition")) << ")";
            nested(*u_.child(n, "body"));
            return;
        case NodeType::ForStatement: {
            out_ << "for (";
            if (const AstNode* init = u_.child(n, "initializationExpression")) {
                out_ << simple_statement(*init);
            } else {
                out_ << ";";
            }
            if (const AstNode* c = u_.child(n, "condition")) {
                out_ << " " << expr(*c);
            }
            out_ << ";";
            if (const AstNode* loop = u_.child(n, "loopExpression")) {
                require(*loop, NodeType::ExpressionStatement);
                out_ << " " << expr(*u_.child(*loop, "expression"));
            }
            out_ << ")";
            nested(*u_.child(n, "body"));
            return;
        }
        case NodeType::Return:
            if (const AstNode* e = u_.child(n, "expression")) {
                out_ << "return " << expr(*e) << ";";
            } else {
                out_ << "return;";
            }
            return;
        case NodeType::EmitStatement:
            out_ << "emit " << expr(*u_.child(n, "eventCall")) << ";";
            return;
        case NodeType::Break:
            out_ << "break;";
            return;
        case NodeType::Continue:
            out_ << "continue;";
            return;
        case NodeType::PlaceholderStatement:
            out_ << "_;";
            return;
        case NodeType::ExpressionStatement:
        case NodeType::VariableDeclarationStatement:
            out_ << simple_statement(n);
            return;
        default:
            throw PrintUnsupported(n.type_name);
        }
    }

    std::string local_declaration(const AstNode& d)
    {
        require(d, NodeType::VariableDeclaration);
        std::string s = type_name(*u_.child(d, "typeName"));
        std::string loc = d.attr_string("storageLocation");
        if (!loc.empty() && loc != "default") {
            s += " " + loc;
        }
        return s + " " + d.attr_string("name");
    }

    std::string simple_statement(const AstNode& n)
    {
        if (n.type == NodeType::ExpressionStatement) {
            return expr(*u_.child(n, "expression")) + ";";
        }
        require(n, NodeType::VariableDeclarationStatement);
        const Slot* decls = n.slot("declarations");
        std::string s;
        if (decls && decls->nodes.size() == 1 && decls->nodes[0] != kNoNode) {
            s = local_declaration(u_.node(decls->nodes[0]));
        } else {
            s = "(";
            for (std::size_t i = 0; decls && i < decls->nodes.size(); ++i) {
                if (i) {
                    s += ", ";
                }
                if (decls->nodes[i] != kNoNode) {
                    s += local_declaration(u_.node(decls->nodes[i]));
                }
            }
            s += ")";
        }
        if (const AstNode* init = u_.child(n, "initialValue")) {
            s += " = " + expr(*init);
        }
        return s + ";";
    }

    std::string type_name(const AstNode& n)
    {
        switch (n.type) {
        case NodeType::ElementaryTypeName: {
            std::string s = n.attr_string("name");
            if (s == "address" && n.attr_string("stateMutability") == "payable") {
                s += " payable";
            }
            return s;
        }
        case NodeType::UserDefinedTypeName:
            return n.attr_string("name");
        case NodeType::Mapping:
            return "mapping(" + type_name(*u_.child(n, "keyType")) + " => " + type_name(*u_.child(n, "valueType")) +
                   ")";
        case NodeType::ArrayTypeName: {
            std::string s = type_name(*u_.child(n, "baseType")) + "[";
            if (const AstNode* len = u_.child(n, "length")) {
                s += expr(*len);
            }
            return s + "]";
        }
        default:
            throw PrintUnsupported(n.type_name);
        }
    }

    std::string expr_list(const AstNode& n, std::string_view slot)
    {
        std::string s;
        bool first = true;
        for (const AstNode* a : u_.children(n, slot)) {
            if (!first) {
                s += ", ";
            }
            first = false;
            s += expr(*a);
        }
        return s;
    }

    std::string expr(const AstNode& n)
    {
        switch (n.type) {
        case NodeType::Identifier:
            return n.attr_string("name");
        case NodeType::Literal: {
            std::string kind = n.attr_string("kind");
            std::string value = n.attr_string("value");
            if (kind == "string") {
                return "\"" + escape_string_literal(value) + "\"";
            }
            if (kind == "unicodeString") {
                return "unicode\"" + escape_string_literal(value) + "\"";
            }
            if (kind == "hexString") {
                return "hex\"" + value + "\"";
            }
            if (auto it = n.attributes.find("subdenomination"); it != n.attributes.end() && it->is_string()) {
                value += " " + it->get<std::string>();
            }
            return value;
        }
        case NodeType::MemberAccess:
            return expr(*u_.child(n, "expression")) + "." + n.attr_string("memberName");
        case NodeType::IndexAccess: {
            std::string s = expr(*u_.child(n, "baseExpression")) + "[";
            if (const AstNode* i = u_.child(n, "indexExpression")) {
                s += expr(*i);
            }
            return s + "]";
        }
        case NodeType::FunctionCall: {
            std::string s = expr(*u_.child(n, "expression")) + "(";
            const auto names = n.attributes.value("names", nlohmann::json::array());
            auto args = u_.children(n, "arguments");
            if (!names.empty()) {
                s += "{";
                for (std::size_t i = 0; i < args.size(); ++i) {
                    s += (i ? ", " : "") + names.at(i).get<std::string>() + ": " + expr(*args[i]);
                }
                s += "}";
            } else {
                s += expr_list(n, "arguments");
            }
            return s + ")";
        }
        case NodeType::FunctionCallOptions: {
            std::string s = expr(*u_.child(n, "expression")) + "{";
            const auto names = n.attributes.value("names", nlohmann::json::array());
            auto opts = u_.children(n, "options");
            for (std::size_t i = 0; i < opts.size(); ++i) {
                s += (i ? ", " : "") + names.at(i).get<std::string>() + ": " + expr(*opts[i]);
            }
            return s + "}";
        }
        case NodeType::Assignment:
            return expr(*u_.child(n, "leftHandSide")) + " " + n.attr_string("operator") + " " +
                   expr(*u_.child(n, "rightHandSide"));
        case NodeType::BinaryOperation:
            return expr(*u_.child(n, "leftExpression")) + " " + n.attr_string("operator") + " " +
                   expr(*u_.child(n, "rightExpression"));
        case NodeType::UnaryOperation: {
            std::string op = n.attr_string("operator");
            std::string sub = expr(*u_.child(n, "subExpression"));
            if (!n.attr_bool("prefix")) {
                return sub + op;
            }
            // Keep `- -x` from lexing as a decrement.
            bool space = op == "delete" || (!sub.empty() && sub.front() == op.back());
            return op + (space ? " " : "") + sub;
        }
        case NodeType::Conditional:
            return expr(*u_.child(n, "condition")) + " ? " + expr(*u_.child(n, "trueExpression")) + " : " +
                   expr(*u_.child(n, "falseExpression"));
        case NodeType::TupleExpression: {
            bool inline_array = n.attr_bool("isInlineArray");
            std::string s = inline_array ? "[" : "(";
            const Slot* comps = n.slot("components");
            for (std::size_t i = 0; comps && i < comps->nodes.size(); ++i) {
                if (i) {
                    s += ", ";
                }
                if (comps->nodes[i] != kNoNode) {
                    s += expr(u_.node(comps->nodes[i]));
                }
            }
            return s + (inline_array ? "]" : ")");
        }
        case NodeType::ElementaryTypeNameExpression: {
            const AstNode* t = u_.child(n, "typeName");
            if (!t) {
                return n.attr_string("typeName");
            }
            if (t->attr_string("name") == "address" && t->attr_string("stateMutability") == "payable") {
                return "payable";
            }
            return t->attr_string("name");
        }
        case NodeType::NewExpression:
            return "new " + type_name(*u_.child(n, "typeName"));
        default:
            throw PrintUnsupported(n.type_name);
        }
    }

    const SourceUnit& u_;
    std::ostringstream out_;
    std::size_t depth_ = 0;
};

} // namespace

std::string pretty_print(const SourceUnit& unit)
{
    if (unit.empty()) {
        return "";
    }
    return Printer(unit).run();
}

} // namespace solsentry
