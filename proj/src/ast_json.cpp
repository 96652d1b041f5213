// SPDX-License-Identifier: Apache-2.0
#include "solsentry/ast_json.hpp"

#include <charconv>

#include "solsentry/errors.hpp"

namespace solsentry {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json node_to_json(const SourceUnit& unit, const AstNode& n)
{
    ordered_json out = ordered_json::object();
    out["id"] = n.id;
    out["nodeType"] = n.type_name;
    out["src"] = std::to_string(n.span.offset) + ":" + std::to_string(n.span.length) + ":0";
    for (const auto& [key, value] : n.attributes.items()) {
        out[key] = ordered_json::parse(value.dump());
    }
    if (n.type != NodeType::Opaque) {
        // Absent schema slots are written as explicit nulls.
        for (const auto& schema : slot_schema(n.type)) {
            if (!n.slot(schema.name)) {
                out[std::string(schema.name)] = nullptr;
            }
        }
    }
    for (const auto& s : n.slots) {
        if (s.is_list) {
            ordered_json arr = ordered_json::array();
            for (NodeId id : s.nodes) {
                arr.push_back(id == kNoNode ? ordered_json(nullptr) : node_to_json(unit, unit.node(id)));
            }
            out[s.name] = std::move(arr);
        } else {
            out[s.name] = node_to_json(unit, unit.node(s.nodes.front()));
        }
    }
    return out;
}

bool is_node_object(const json& v)
{
    return v.is_object() && v.contains("nodeType");
}

bool is_node_array(const json& v)
{
    if (!v.is_array() || v.empty()) {
        return false;
    }
    bool any = false;
    for (const auto& e : v) {
        if (is_node_object(e)) {
            any = true;
        } else if (!e.is_null()) {
            return false;
        }
    }
    return any;
}

Span parse_src(const json& v, const std::string& path)
{
    if (!v.is_string()) {
        throw MalformedAst(path + ".src", "src must be text");
    }
    const std::string s = v.get<std::string>();
    Span span;
    const char* p = s.data();
    const char* end = s.data() + s.size();
    auto r1 = std::from_chars(p, end, span.offset);
    if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != ':') {
        throw MalformedAst(path + ".src", "expected offset:length:file");
    }
    auto r2 = std::from_chars(r1.ptr + 1, end, span.length);
    if (r2.ec != std::errc{}) {
        throw MalformedAst(path + ".src", "expected offset:length:file");
    }
    return span;
}

std::unique_ptr<NodeDraft> draft_from_json(const json& v, const std::string& path, std::size_t limit)
{
    if (!v.is_object()) {
        throw MalformedAst(path, "node must be an object");
    }
    auto nt = v.find("nodeType");
    if (nt == v.end()) {
        throw MalformedAst(path, "missing nodeType");
    }
    if (!nt->is_string()) {
        throw MalformedAst(path + ".nodeType", "nodeType must be text");
    }
    const std::string type_name = nt->get<std::string>();
    auto known = node_type_from_name(type_name);
    auto d = known && *known != NodeType::Opaque ? std::make_unique<NodeDraft>(*known)
                                                  : std::make_unique<NodeDraft>(NodeType::Opaque, type_name);
    if (auto src = v.find("src"); src != v.end()) {
        d->span = parse_src(*src, path);
        if (limit != std::string::npos && d->span.end() > limit) {
            throw MalformedAst(path + ".src", "span lies outside the source text");
        }
    }

    auto schema = slot_schema(d->type);
    auto schema_slot = [&](const std::string& key) -> const SlotSchema* {
        for (const auto& s : schema) {
            if (s.name == key) {
                return &s;
            }
        }
        return nullptr;
    };

    for (const auto& [key, value] : v.items()) {
        if (key == "id" || key == "nodeType" || key == "src") {
            continue;
        }
        const std::string child_path = path + "." + key;
        const SlotSchema* s = schema_slot(key);
        if (s && value.is_null()) {
            continue;
        }
        if ((s && s->is_list && value.is_array()) || (!s && is_node_array(value))) {
            std::vector<std::unique_ptr<NodeDraft>> nodes;
            for (std::size_t i = 0; i < value.size(); ++i) {
                const auto& e = value[i];
                nodes.push_back(e.is_null() ? nullptr
                                            : draft_from_json(e, child_path + "[" + std::to_string(i) + "]", limit));
            }
            d->list(key, std::move(nodes));
        } else if ((s && !s->is_list) || (!s && is_node_object(value))) {
            d->child(key, draft_from_json(value, child_path, limit));
        } else if (s) {
            throw MalformedAst(child_path, s->is_list ? "expected a list of nodes" : "expected a node");
        } else {
            d->attr(key, value);
        }
    }
    return d;
}

} // namespace

ordered_json to_json_value(const SourceUnit& unit)
{
    if (unit.empty()) {
        return ordered_json(nullptr);
    }
    return node_to_json(unit, unit.root());
}

std::string to_json(const SourceUnit& unit, int indent)
{
    return to_json_value(unit).dump(indent);
}

SourceUnit from_json_value(const json& doc, std::string file_id, std::optional<std::string> raw_text)
{
    const json* root = &doc;
    // Accept a solc standard-json output fragment `{"ast": {...}}` as well.
    if (doc.is_object() && !doc.contains("nodeType") && doc.contains("ast")) {
        root = &doc["ast"];
    }
    std::size_t limit = raw_text ? raw_text->size() : std::string::npos;
    auto draft = draft_from_json(*root, "$", limit);
    return SourceUnit::freeze(std::move(draft), std::move(file_id), raw_text.value_or(std::string()));
}

SourceUnit from_json(std::string_view text, std::string file_id, std::optional<std::string> raw_text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedAst("$", e.what());
    }
    return from_json_value(doc, std::move(file_id), std::move(raw_text));
}

} // namespace solsentry
