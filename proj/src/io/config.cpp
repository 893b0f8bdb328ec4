#include "emx/io/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "emx/errors.hpp"
#include "emx/io/seeds.hpp"
#include "emx/io/toml_lite.hpp"

namespace emx {

namespace {

using toml::Table;
using toml::Value;

// Reads typed entries from one table and remembers which keys were consumed.
class Reader {
public:
    Reader(const Table* t, std::string prefix) : t_(t), prefix_(std::move(prefix)) {}

    const Value* find(const std::string& key) {
        seen_.insert(key);
        if (!t_) return nullptr;
        auto it = t_->entries.find(key);
        return it == t_->entries.end() ? nullptr : &it->second;
    }

    void number(const std::string& key, double& out) {
        if (const Value* v = find(key)) {
            if (v->type == Value::Type::floating) out = v->f;
            else if (v->type == Value::Type::integer) out = static_cast<double>(v->i);
            else fail(*v, key, "expected a number");
        }
    }

    void integer(const std::string& key, int& out) {
        if (const Value* v = find(key)) {
            if (v->type != Value::Type::integer) fail(*v, key, "expected an integer");
            if (v->i < -1000000000 || v->i > 1000000000) fail(*v, key, "integer out of range");
            out = static_cast<int>(v->i);
        }
    }

    void seed(const std::string& key, std::optional<std::uint64_t>& out) {
        if (const Value* v = find(key)) {
            if (v->type != Value::Type::integer) fail(*v, key, "expected an integer");
            if (v->i < 0) throw ValidationError(name(key), "non-negative");
            out = static_cast<std::uint64_t>(v->i);
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const Value* v = find(key)) {
            if (v->type != Value::Type::boolean) fail(*v, key, "expected true or false");
            out = v->b;
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const Value* v = find(key)) {
            if (v->type != Value::Type::string) fail(*v, key, "expected a string");
            out = v->s;
        }
    }

    void vec3(const std::string& key, Vec3& out) {
        if (const Value* v = find(key)) {
            if (v->type != Value::Type::array || v->items.size() != 3)
                fail(*v, key, "expected an array of 3 numbers");
            for (std::size_t k = 0; k < 3; ++k) {
                const Value& e = v->items[k];
                if (e.type == Value::Type::floating) out[k] = e.f;
                else if (e.type == Value::Type::integer) out[k] = static_cast<double>(e.i);
                else fail(*v, key, "expected an array of 3 numbers");
            }
        }
    }

    void ivec3(const std::string& key, std::array<int, 3>& out) {
        if (const Value* v = find(key)) {
            if (v->type != Value::Type::array || v->items.size() != 3)
                fail(*v, key, "expected an array of 3 integers");
            for (std::size_t k = 0; k < 3; ++k) {
                const Value& e = v->items[k];
                if (e.type != Value::Type::integer || e.i < -100000 || e.i > 100000)
                    fail(*v, key, "expected an array of 3 integers");
                out[k] = static_cast<int>(e.i);
            }
        }
    }

    void reject_unknown() const {
        if (!t_) return;
        for (const auto& [k, v] : t_->entries)
            if (!seen_.count(k)) throw ParseError(v.line, name(k), "unknown key");
    }

    std::string name(const std::string& key) const {
        return prefix_.empty() ? key : prefix_ + "." + key;
    }

private:
    [[noreturn]] void fail(const Value& v, const std::string& key, const std::string& msg) const {
        throw ParseError(v.line, name(key), msg);
    }

    const Table* t_;
    std::string prefix_;
    std::set<std::string> seen_;
};

const Table* table(const toml::Document& doc, const std::string& name) {
    auto it = doc.tables.find(name);
    return it == doc.tables.end() ? nullptr : &it->second;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check(bool ok, const std::string& key, const std::string& constraint) {
    if (!ok) throw ValidationError(key, constraint);
}

bool perturbable(const std::string& f) {
    if (f == "E_free_x" || f == "E_free_y" || f == "E_free_z") return true;
    for (const auto& n : PlasmaFields::component_names())
        if (n == f && f.rfind("E_", 0) != 0) return true;
    return false;
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

std::string boolstr(bool b) { return b ? "true" : "false"; }

}  // namespace

RunConfig parse_config(const std::string& text) {
    const toml::Document doc = toml::parse(text);
    RunConfig c;

    for (const auto& [name, t] : doc.tables) {
        static const std::set<std::string> known{"", "grid", "equilibrium", "perturbation", "time",
                                                 "output"};
        if (!known.count(name)) throw ParseError(t.line, name, "unknown table");
    }
    for (const auto& [name, arr] : doc.table_arrays)
        if (name != "perturbation.mode") throw ParseError(arr.front().line, name, "unknown table");

    {
        Reader r(table(doc, ""), "");
        std::optional<std::uint64_t> seed;
        r.seed("seed", seed);
        if (seed) c.seed = *seed;
        r.reject_unknown();
    }
    {
        Reader r(table(doc, "grid"), "grid");
        r.integer("d", c.d);
        r.integer("n_per_axis", c.n_per_axis);
        r.reject_unknown();
    }
    check(c.d >= 1 && c.d <= 3, "d", "one of 1, 2, 3");
    check(power_of_two(c.n_per_axis) && c.n_per_axis >= 8, "n_per_axis", "power of two >= 8");
    {
        Reader r(table(doc, "equilibrium"), "equilibrium");
        auto& dp = c.doping;
        r.string("doping", dp.kind);
        r.number("beta", dp.beta);
        r.number("epsilon", dp.epsilon);
        r.integer("axis", dp.axis);
        r.integer("mode", dp.mode);
        r.number("floor", dp.floor);
        r.number("amplitude", dp.amplitude);
        r.integer("kmax", dp.kmax);
        r.seed("seed", dp.seed);
        r.number("M_i", c.ion_mass);
        r.vec3("Bbar", c.Bbar);
        r.number("tol", c.eq_tol);
        r.integer("max_iter", c.eq_max_iter);
        r.reject_unknown();
        check(dp.kind == "constant" || dp.kind == "cosine" || dp.kind == "random",
              "equilibrium.doping", "one of constant, cosine, random");
        check(dp.axis >= 0 && dp.axis < c.d, "equilibrium.axis", "an active axis index (0-based)");
        check(dp.mode >= 1 && 3 * dp.mode <= c.n_per_axis, "equilibrium.mode",
              "between 1 and n_per_axis/3");
        check(dp.kmax >= 1 && 3 * dp.kmax <= c.n_per_axis, "equilibrium.kmax",
              "between 1 and n_per_axis/3");
        check(dp.amplitude >= 0.0, "equilibrium.amplitude", "non-negative");
        check(c.ion_mass > 0.0, "M_i", "positive");
        check(c.eq_tol > 0.0, "tol", "positive");
        check(c.eq_max_iter >= 1, "max_iter", "at least 1");
    }
    {
        Reader r(table(doc, "perturbation"), "perturbation");
        auto& p = c.perturbation;
        std::string kind = "random";
        r.string("kind", kind);
        check(kind == "random" || kind == "modes", "perturbation.kind", "one of random, modes");
        p.kind = kind == "random" ? PerturbationSpec::Kind::random : PerturbationSpec::Kind::modes;
        r.number("amplitude", p.amplitude);
        r.integer("kmax", p.kmax);
        r.boolean("density", p.density);
        r.boolean("velocity", p.velocity);
        r.boolean("temperature", p.temperature);
        r.boolean("magnetic", p.magnetic);
        r.boolean("electric_free", p.electric_free);
        r.seed("seed", c.perturbation_seed);
        r.reject_unknown();
        check(p.amplitude >= 0.0, "amplitude", "non-negative");
        check(p.kmax >= 1, "perturbation.kmax", "at least 1");
    }
    if (auto it = doc.table_arrays.find("perturbation.mode"); it != doc.table_arrays.end()) {
        for (const auto& t : it->second) {
            Reader r(&t, "perturbation.mode");
            ModePerturbation m;
            r.string("field", m.field);
            r.ivec3("k", m.k);
            r.number("amplitude", m.amplitude);
            r.number("phase", m.phase);
            r.reject_unknown();
            check(perturbable(m.field), "perturbation.mode.field",
                  "a primitive component name other than E_*, or E_free_x/y/z");
            for (int a = c.d; a < 3; ++a)
                check(m.k[static_cast<std::size_t>(a)] == 0, "perturbation.mode.k",
                      "zero on inactive axes");
            c.perturbation.modes.push_back(m);
        }
    }
    {
        Reader r(table(doc, "time"), "time");
        auto& t = c.time;
        r.number("dt", t.dt);
        r.number("t_end", t.t_end);
        std::string scheme = to_string(t.scheme);
        r.string("scheme", scheme);
        t.scheme = scheme_from_string(scheme);
        r.boolean("dealias", t.dealias);
        r.integer("gauss_clean_every", t.gauss_clean_every);
        r.number("floor_factor", t.floor_factor);
        r.reject_unknown();
        check(t.dt > 0.0, "dt", "positive");
        check(t.t_end >= 0.0, "t_end", "non-negative");
        check(t.gauss_clean_every >= 0, "gauss_clean_every", "non-negative");
        check(t.floor_factor > 0.0 && t.floor_factor < 1.0, "floor_factor", "in (0, 1)");
    }
    {
        Reader r(table(doc, "output"), "output");
        r.string("dir", c.out_dir);
        r.number("cadence", c.time.cadence);
        int every = static_cast<int>(c.time.checkpoint_every);
        r.integer("checkpoint_every", every);
        r.integer("sobolev_order", c.sobolev_order);
        r.reject_unknown();
        check(c.time.cadence > 0.0, "cadence", "positive");
        check(every >= 0, "checkpoint_every", "non-negative");
        check(c.sobolev_order >= 2 && c.sobolev_order <= 8, "sobolev_order", "between 2 and 8");
        c.time.checkpoint_every = static_cast<std::size_t>(every);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(0, "", "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_toml(const RunConfig& c) {
    std::ostringstream o;
    const auto vec = [](const auto& v) {
        std::string s = "[";
        for (std::size_t k = 0; k < 3; ++k) {
            if (k) s += ", ";
            if constexpr (std::is_same_v<std::decay_t<decltype(v[k])>, double>) s += fmt(v[k]);
            else s += std::to_string(v[k]);
        }
        return s + "]";
    };
    o << "seed = " << c.seed << "\n\n";
    o << "[grid]\nd = " << c.d << "\nn_per_axis = " << c.n_per_axis << "\n\n";
    const auto& dp = c.doping;
    o << "[equilibrium]\ndoping = " << quote(dp.kind) << "\nbeta = " << fmt(dp.beta)
      << "\nepsilon = " << fmt(dp.epsilon) << "\naxis = " << dp.axis << "\nmode = " << dp.mode
      << "\nfloor = " << fmt(dp.floor) << "\namplitude = " << fmt(dp.amplitude)
      << "\nkmax = " << dp.kmax << "\n";
    if (dp.seed) o << "seed = " << *dp.seed << "\n";
    o << "M_i = " << fmt(c.ion_mass) << "\nBbar = " << vec(c.Bbar) << "\ntol = " << fmt(c.eq_tol)
      << "\nmax_iter = " << c.eq_max_iter << "\n\n";
    const auto& p = c.perturbation;
    o << "[perturbation]\nkind = "
      << quote(p.kind == PerturbationSpec::Kind::random ? "random" : "modes")
      << "\namplitude = " << fmt(p.amplitude) << "\nkmax = " << p.kmax
      << "\ndensity = " << boolstr(p.density) << "\nvelocity = " << boolstr(p.velocity)
      << "\ntemperature = " << boolstr(p.temperature) << "\nmagnetic = " << boolstr(p.magnetic)
      << "\nelectric_free = " << boolstr(p.electric_free) << "\n";
    if (c.perturbation_seed) o << "seed = " << *c.perturbation_seed << "\n";
    o << "\n";
    for (const auto& m : p.modes) {
        o << "[[perturbation.mode]]\nfield = " << quote(m.field) << "\nk = " << vec(m.k)
          << "\namplitude = " << fmt(m.amplitude) << "\nphase = " << fmt(m.phase) << "\n\n";
    }
    const auto& t = c.time;
    o << "[time]\ndt = " << fmt(t.dt) << "\nt_end = " << fmt(t.t_end) << "\nscheme = "
      << quote(to_string(t.scheme)) << "\ndealias = " << boolstr(t.dealias)
      << "\ngauss_clean_every = " << t.gauss_clean_every << "\nfloor_factor = "
      << fmt(t.floor_factor) << "\n\n";
    o << "[output]\ndir = " << quote(c.out_dir) << "\ncadence = " << fmt(t.cadence)
      << "\ncheckpoint_every = " << t.checkpoint_every << "\nsobolev_order = " << c.sobolev_order
      << "\n";
    return o.str();
}

std::string config_hash(const RunConfig& c) {
    RunConfig k = c;
    k.out_dir.clear();  // where a run is written does not change what it computes
    return sha256_hex(to_toml(k));
}

std::uint64_t doping_seed(const RunConfig& c) {
    return c.doping.seed ? *c.doping.seed : derive_seed(c.seed, "doping");
}

std::uint64_t perturbation_seed(const RunConfig& c) {
    return c.perturbation_seed ? *c.perturbation_seed : derive_seed(c.seed, "perturbation");
}

GridPtr make_grid(const RunConfig& c) { return Grid::make(c.d, c.n_per_axis); }

DopingProfile make_doping(const RunConfig& c, const GridPtr& grid) {
    const auto& dp = c.doping;
    if (dp.kind == "constant") return DopingProfile::constant(grid, dp.beta);
    if (dp.kind == "cosine") return DopingProfile::cosine(grid, dp.beta, dp.epsilon, dp.axis, dp.mode);
    return DopingProfile::random(grid, dp.floor, dp.amplitude, dp.kmax, doping_seed(c));
}

}  // namespace emx
