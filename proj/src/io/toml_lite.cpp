#include "emx/io/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "emx/errors.hpp"

namespace emx::toml {

namespace {

class Cursor {
public:
    Cursor(const std::string& text, int line, std::string key)
        : s_(text), line_(line), key_(std::move(key)) {}

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, key_, msg); }

    void skip_ws() {
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }
    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    Value value() {
        skip_ws();
        Value v;
        v.line = line_;
        const char c = peek();
        if (c == '"') {
            v.type = Value::Type::string;
            v.s = basic_string();
        } else if (c == '\'') {
            v.type = Value::Type::string;
            const auto end = s_.find('\'', pos_ + 1);
            if (end == std::string::npos) fail("unterminated string");
            v.s = s_.substr(pos_ + 1, end - pos_ - 1);
            pos_ = end + 1;
        } else if (c == '[') {
            v.type = Value::Type::array;
            ++pos_;
            skip_ws();
            while (peek() != ']') {
                if (done()) fail("unterminated array");
                v.items.push_back(value());
                skip_ws();
                if (peek() == ',') {
                    ++pos_;
                    skip_ws();
                } else if (peek() != ']') {
                    fail("expected ',' or ']' in array");
                }
            }
            ++pos_;
        } else {
            std::size_t end = pos_;
            while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != '#' &&
                   !std::isspace(static_cast<unsigned char>(s_[end])))
                ++end;
            scalar(s_.substr(pos_, end - pos_), v);
            pos_ = end;
        }
        return v;
    }

private:
    std::string basic_string() {
        std::string out;
        ++pos_;
        while (true) {
            if (pos_ >= s_.size() || s_[pos_] == '\n') fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= s_.size()) fail("unterminated escape");
            switch (s_[pos_++]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail("unsupported escape sequence");
            }
        }
    }

    void scalar(std::string tok, Value& v) {
        if (tok.empty()) fail("missing value");
        if (tok == "true" || tok == "false") {
            v.type = Value::Type::boolean;
            v.b = tok == "true";
            return;
        }
        std::string clean;
        for (std::size_t k = 0; k < tok.size(); ++k) {
            if (tok[k] != '_') {
                clean += tok[k];
                continue;
            }
            const bool ok = k > 0 && k + 1 < tok.size() &&
                            std::isdigit(static_cast<unsigned char>(tok[k - 1])) &&
                            std::isdigit(static_cast<unsigned char>(tok[k + 1]));
            if (!ok) fail("invalid value '" + tok + "'");
        }
        const bool is_float = clean.find_first_of(".eE") != std::string::npos ||
                              clean == "inf" || clean == "+inf" || clean == "-inf" ||
                              clean == "nan";
        const char* first = clean.data();
        const char* last = clean.data() + clean.size();
        if (*first == '+') ++first;
        if (is_float) {
            v.type = Value::Type::floating;
            auto [ptr, ec] = std::from_chars(first, last, v.f);
            if (ec != std::errc() || ptr != last) fail("invalid number '" + tok + "'");
        } else {
            v.type = Value::Type::integer;
            auto [ptr, ec] = std::from_chars(first, last, v.i);
            if (ec != std::errc() || ptr != last) fail("invalid value '" + tok + "'");
        }
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_;
    std::string key_;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    for (const char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            return false;
    return name.front() != '.' && name.back() != '.' && name.find("..") == std::string::npos;
}

// Bracket depth of a value fragment, ignoring strings and comments.
int bracket_balance(const std::string& s) {
    int depth = 0;
    char quote = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const char c = s[k];
        if (quote) {
            if (c == '\\' && quote == '"') ++k;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            while (k < s.size() && s[k] != '\n') ++k;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

}  // namespace

Document parse(const std::string& text) {
    Document doc;
    doc.tables[""].line = 0;
    Table* current = &doc.tables[""];

    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string l;
        while (std::getline(in, l)) lines.push_back(l);
    }

    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        const int lineno = static_cast<int>(idx) + 1;
        std::string line = trim(lines[idx]);
        if (line.empty() || line.front() == '#') continue;

        if (line.front() == '[') {
            const bool array = line.rfind("[[", 0) == 0;
            const auto close = line.find(array ? "]]" : "]");
            if (close == std::string::npos) throw ParseError(lineno, "", "unterminated table header");
            const std::string name = trim(line.substr(array ? 2 : 1, close - (array ? 2 : 1)));
            const std::string rest = trim(line.substr(close + (array ? 2 : 1)));
            if (!rest.empty() && rest.front() != '#')
                throw ParseError(lineno, name, "unexpected text after table header");
            if (!valid_name(name)) throw ParseError(lineno, name, "invalid table name");
            if (array) {
                auto& vec = doc.table_arrays[name];
                vec.emplace_back();
                vec.back().line = lineno;
                current = &vec.back();
            } else {
                if (doc.tables.count(name) || doc.table_arrays.count(name))
                    throw ParseError(lineno, name, "duplicate table");
                current = &doc.tables[name];
                current->line = lineno;
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "", "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_name(key) || key.find('.') != std::string::npos)
            throw ParseError(lineno, key, "invalid key");
        if (current->entries.count(key)) throw ParseError(lineno, key, "duplicate key");

        std::string rhs = line.substr(eq + 1);
        while (bracket_balance(rhs) > 0 && idx + 1 < lines.size()) rhs += "\n" + lines[++idx];

        Cursor cur(rhs, lineno, key);
        Value v = cur.value();
        cur.skip_ws();
        if (!cur.done()) cur.fail("unexpected trailing characters");
        current->entries.emplace(key, std::move(v));
    }
    return doc;
}

}  // namespace emx::toml
