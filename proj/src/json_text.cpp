// SPDX-License-Identifier: Apache-2.0
#include "mtr/json_text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mtr/error.hpp"

namespace mtr {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::WrappedObject: return "WrappedObjectError";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::MissingFunctionWrapper: return "MissingFunctionWrapper";
    case Errc::DuplicateToolName: return "DuplicateToolName";
    case Errc::InvalidToolName: return "InvalidToolName";
    case Errc::InvalidSchema: return "InvalidSchema";
    case Errc::UnclosedTag: return "UnclosedTag";
    case Errc::InterleavingViolation: return "InterleavingViolation";
    case Errc::UnboundPlaceholder: return "UnboundPlaceholder";
    case Errc::ToolGenerationFailed: return "ToolGenerationFailed";
    case Errc::OutputSchemaViolation: return "OutputSchemaViolation";
    case Errc::BackendTimeout: return "BackendTimeout";
    case Errc::BackendError: return "BackendError";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::EmptyFit: return "EmptyFitError";
    case Errc::Config: return "ConfigError";
    case Errc::Io: return "IoError";
    }
    return "Error";
}

std::string trim(std::string_view text)
{
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto begin = std::find_if_not(text.begin(), text.end(), is_space);
    auto end = std::find_if_not(text.rbegin(), std::string_view::reverse_iterator(begin), is_space).base();
    return std::string(begin, end);
}

std::string strip_code_fences(std::string_view text)
{
    auto body = trim(text);
    if (body.rfind("```", 0) != 0)
        return body;
    auto first_newline = body.find('\n');
    if (first_newline == std::string::npos)
        return body;
    auto closing = body.rfind("```");
    if (closing == std::string::npos || closing <= first_newline)
        return trim(std::string_view(body).substr(first_newline + 1));
    return trim(std::string_view(body).substr(first_newline + 1, closing - first_newline - 1));
}

std::string extract_json_span(std::string_view text)
{
    auto open = text.find_first_of("[{");
    if (open == std::string_view::npos)
        return std::string(text);
    char close_char = text[open] == '[' ? ']' : '}';
    auto close = text.rfind(close_char);
    if (close == std::string_view::npos || close < open)
        return std::string(text.substr(open));
    return std::string(text.substr(open, close - open + 1));
}

std::string escape_raw_controls_in_strings(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    bool in_string = false;
    bool escaped = false;
    for (char c : text) {
        if (!in_string) {
            if (c == '"')
                in_string = true;
            out.push_back(c);
            continue;
        }
        if (escaped) {
            escaped = false;
            out.push_back(c);
            continue;
        }
        switch (c) {
        case '\\': escaped = true; out.push_back(c); break;
        case '"': in_string = false; out.push_back(c); break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c); break;
        }
    }
    return out;
}

namespace {

std::optional<json> try_parse(std::string_view text)
{
    auto parsed = json::parse(text.begin(), text.end(), nullptr, false);
    if (parsed.is_discarded())
        return std::nullopt;
    return parsed;
}

} // namespace

std::optional<json> parse_json_lenient(std::string_view text)
{
    if (auto strict = try_parse(text))
        return strict;
    auto candidate = extract_json_span(strip_code_fences(text));
    if (auto recovered = try_parse(candidate))
        return recovered;
    return try_parse(escape_raw_controls_in_strings(candidate));
}

namespace {

void write_canonical(const json& value, std::string& out)
{
    switch (value.type()) {
    case json::value_t::object: {
        std::vector<const std::string*> keys;
        keys.reserve(value.size());
        for (auto it = value.begin(); it != value.end(); ++it)
            keys.push_back(&it.key());
        std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
        out.push_back('{');
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (i)
                out.push_back(',');
            out += dump_compact(json(*keys[i]));
            out.push_back(':');
            write_canonical(value.at(*keys[i]), out);
        }
        out.push_back('}');
        break;
    }
    case json::value_t::array:
        out.push_back('[');
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i)
                out.push_back(',');
            write_canonical(value[i], out);
        }
        out.push_back(']');
        break;
    case json::value_t::number_float: {
        double d = value.get<double>();
        if (std::isfinite(d) && std::trunc(d) == d && std::fabs(d) < 9.0e15) {
            out += std::to_string(static_cast<long long>(d));
        } else {
            out += dump_compact(value);
        }
        break;
    }
    default:
        out += dump_compact(value);
    }
}

} // namespace

std::string canonical_json(const json& value)
{
    std::string out;
    write_canonical(value, out);
    return out;
}

std::string dump_compact(const json& value)
{
    return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(Errc::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error(Errc::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(Errc::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::vector<json> read_jsonl(const std::filesystem::path& path)
{
    std::istringstream in(read_file(path));
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto row = json::parse(line, nullptr, false);
        if (row.is_discarded())
            throw Error(Errc::MalformedJson, path.string() + ":" + std::to_string(line_no));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string to_jsonl(const std::vector<json>& rows)
{
    std::string out;
    for (const auto& row : rows) {
        out += dump_compact(row);
        out.push_back('\n');
    }
    return out;
}

} // namespace mtr
