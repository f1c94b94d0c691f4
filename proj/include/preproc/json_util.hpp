#pragma once

#include "preproc/errors.hpp"

#include "json.hpp"

#include <initializer_list>
#include <string>
#include <string_view>

namespace preproc {

using json = nlohmann::json;

// Rejects any key of obj not listed in allowed.
inline void expect_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(std::string(where) + ": unknown field '" + key + "'");
    }
}

template <class T>
T require(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key)) throw ConfigError(std::string(where) + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + ": field '" + key + "' has the wrong type");
    }
}

template <class T>
T optional(const json& obj, const char* key, T fallback, std::string_view where) {
    if (!obj.contains(key)) return fallback;
    return require<T>(obj, key, where);
}

} // namespace preproc
