#pragma once

// Internal helpers for reading typed fields out of nlohmann::json objects.
// Failures are thrown as FormatFailure and converted to FormatError at the
// public parse boundary.

#include <string>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "forge/records/records.hpp"

namespace forge::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

struct FormatFailure {
    FormatErrorCode code;
    std::string detail;
};

[[noreturn]] inline void fail(FormatErrorCode code, std::string detail) {
    throw FormatFailure{code, std::move(detail)};
}

inline Json parse_object_line(std::string_view line) {
    Json doc = Json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) fail(FormatErrorCode::malformed_line, "not valid JSON");
    if (!doc.is_object()) fail(FormatErrorCode::malformed_line, "line is not a JSON object");
    return doc;
}

inline const Json& require(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) fail(FormatErrorCode::missing_field, key);
    return *it;
}

inline std::string get_string(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_string()) fail(FormatErrorCode::bad_type, fmt::format("{} must be a string", key));
    return v.get<std::string>();
}

inline double get_number(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_number()) fail(FormatErrorCode::bad_type, fmt::format("{} must be a number", key));
    return v.get<double>();
}

inline long long get_integer(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_number_integer()) fail(FormatErrorCode::bad_type, fmt::format("{} must be an integer", key));
    return v.get<long long>();
}

inline bool get_bool(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_boolean()) fail(FormatErrorCode::bad_type, fmt::format("{} must be a boolean", key));
    return v.get<bool>();
}

inline const Json& get_array(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_array()) fail(FormatErrorCode::bad_type, fmt::format("{} must be an array", key));
    return v;
}

inline const Json& get_object(const Json& obj, const char* key) {
    const Json& v = require(obj, key);
    if (!v.is_object()) fail(FormatErrorCode::bad_type, fmt::format("{} must be an object", key));
    return v;
}

inline std::string dump_line(const OrderedJson& doc) {
    return doc.dump(-1, ' ', false, OrderedJson::error_handler_t::replace);
}

}  // namespace forge::detail
