#pragma once

// Reader for the TOML subset used by run configs: [table], [[array.of.tables]],
// bare keys, and string / integer / float / boolean / array values.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace emx::toml {

struct Value {
    enum class Type { string, integer, floating, boolean, array };
    Type type = Type::integer;
    std::string s;
    std::int64_t i = 0;
    double f = 0.0;
    bool b = false;
    std::vector<Value> items;
    int line = 0;
};

struct Table {
    std::map<std::string, Value> entries;
    int line = 0;
};

struct Document {
    std::map<std::string, Table> tables;  // "" is the root table
    std::map<std::string, std::vector<Table>> table_arrays;
};

/// Throws ParseError with the offending line and key.
Document parse(const std::string& text);

}  // namespace emx::toml
