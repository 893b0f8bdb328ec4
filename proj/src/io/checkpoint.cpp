#include "emx/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emx/errors.hpp"
#include "emx/io/seeds.hpp"

namespace emx {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'X', '1'};

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

std::vector<unsigned char> encode(const std::vector<double>& payload) {
    std::vector<unsigned char> bytes(payload.size() * 8);
    for (std::size_t k = 0; k < payload.size(); ++k) {
        const std::uint64_t v = to_le(std::bit_cast<std::uint64_t>(payload[k]));
        std::memcpy(bytes.data() + 8 * k, &v, 8);
    }
    return bytes;
}

std::vector<double> decode(const unsigned char* bytes, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t v;
        std::memcpy(&v, bytes + 8 * k, 8);
        out[k] = std::bit_cast<double>(to_le(v));
    }
    return out;
}

nlohmann::json header_json(const CheckpointHeader& h) {
    return {{"version", h.version},
            {"kind", h.kind},
            {"d", h.d},
            {"N", h.n},
            {"t", h.t},
            {"step", h.step},
            {"fields", h.fields},
            {"seeds", h.seeds},
            {"config_hash", h.config_hash},
            {"payload_bytes", h.payload_bytes},
            {"payload_sha256", h.payload_sha256},
            {"extras", h.extras}};
}

CheckpointHeader header_from(const nlohmann::json& j) {
    CheckpointHeader h;
    h.version = j.at("version").get<int>();
    if (h.version != kCheckpointVersion)
        throw FormatError("checkpoint version " + std::to_string(h.version) +
                          " is not supported; this build reads version " +
                          std::to_string(kCheckpointVersion));
    h.kind = j.at("kind").get<std::string>();
    h.d = j.at("d").get<int>();
    h.n = j.at("N").get<int>();
    h.t = j.at("t").get<double>();
    h.step = j.at("step").get<std::uint64_t>();
    h.fields = j.at("fields").get<std::vector<std::string>>();
    h.seeds = j.at("seeds");
    h.config_hash = j.at("config_hash").get<std::string>();
    h.payload_bytes = j.at("payload_bytes").get<std::uint64_t>();
    h.payload_sha256 = j.at("payload_sha256").get<std::string>();
    h.extras = j.at("extras");
    return h;
}

std::vector<double> flatten(const std::vector<const ScalarField*>& fields) {
    std::vector<double> out;
    for (const auto* f : fields) out.insert(out.end(), f->values().begin(), f->values().end());
    return out;
}

void unflatten(const std::vector<double>& payload, const std::vector<ScalarField*>& fields,
               const GridPtr& grid) {
    const std::size_t n = grid->size();
    if (payload.size() != n * fields.size())
        throw FormatError("payload size does not match the header grid and field list");
    for (std::size_t k = 0; k < fields.size(); ++k)
        *fields[k] = ScalarField(grid, std::vector<double>(payload.begin() + k * n,
                                                           payload.begin() + (k + 1) * n));
}

GridPtr grid_of(const CheckpointHeader& h) {
    try {
        return Grid::make(h.d, h.n);
    } catch (const Error& e) {
        throw FormatError(std::string("invalid grid in header: ") + e.what());
    }
}

void expect_fields(const CheckpointHeader& h, const std::string& kind,
                   const std::vector<std::string>& names) {
    if (h.kind != kind) throw FormatError("expected a " + kind + " checkpoint, found '" + h.kind + "'");
    if (h.fields != names) throw FormatError("unexpected field list in " + kind + " checkpoint");
}

const std::vector<std::string>& equilibrium_fields() {
    static const std::vector<std::string> names{"nbar_e", "nbar_i", "phibar", "Ebar_x",
                                                "Ebar_y", "Ebar_z", "b"};
    return names;
}

}  // namespace

void write_checkpoint(const std::string& path, CheckpointHeader header,
                      const std::vector<double>& payload) {
    const auto bytes = encode(payload);
    header.payload_bytes = bytes.size();
    header.payload_sha256 = sha256_hex(std::span<const unsigned char>(bytes));
    const std::string text = header_json(header).dump();
    const std::uint64_t len = to_le(text.size());

    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
        out.write(kMagic, 4);
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out.flush()) throw FormatError("short write to checkpoint '" + path + "'");
    }
    std::filesystem::rename(tmp, target);
}

RawCheckpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
        throw FormatError("bad magic: not an EMX1 checkpoint");
    if (data.size() < 12) throw FormatError("truncated header");
    std::uint64_t len;
    std::memcpy(&len, data.data() + 4, 8);
    len = to_le(len);
    if (data.size() - 12 < len) throw FormatError("truncated header");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(data.substr(12, len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    RawCheckpoint cp;
    try {
        cp.header = header_from(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }

    const std::size_t have = data.size() - 12 - len;
    if (have < cp.header.payload_bytes) throw FormatError("truncated payload");
    if (have > cp.header.payload_bytes) throw FormatError("trailing bytes after payload");
    if (cp.header.payload_bytes % 8 != 0) throw FormatError("payload length is not a multiple of 8");
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data() + 12 + len);
    if (sha256_hex(std::span(bytes, have)) != cp.header.payload_sha256)
        throw FormatError("payload hash mismatch");
    cp.payload = decode(bytes, have / 8);
    return cp;
}

void save_state(const std::string& path, const PlasmaState& s, std::uint64_t step,
                const CheckpointMeta& meta) {
    const GridPtr& grid = s.fields.grid();
    CheckpointHeader h;
    h.kind = "state";
    h.d = grid->dims();
    h.n = grid->n();
    h.t = s.t;
    h.step = step;
    const auto& names = PlasmaFields::component_names();
    h.fields.assign(names.begin(), names.end());
    h.seeds = meta.seeds;
    h.config_hash = meta.config_hash;
    const auto comps = s.fields.components();
    write_checkpoint(path, h, flatten({comps.begin(), comps.end()}));
}

LoadedState load_state(const std::string& path) {
    RawCheckpoint cp = read_checkpoint(path);
    const auto& names = PlasmaFields::component_names();
    expect_fields(cp.header, "state", {names.begin(), names.end()});
    const GridPtr grid = grid_of(cp.header);
    LoadedState out;
    out.state.fields = PlasmaFields::zeros(grid);
    out.state.t = cp.header.t;
    const auto comps = out.state.fields.components();
    unflatten(cp.payload, {comps.begin(), comps.end()}, grid);
    out.header = std::move(cp.header);
    return out;
}

void save_equilibrium(const std::string& path, const Equilibrium& eq, const CheckpointMeta& meta) {
    const GridPtr& grid = eq.grid();
    CheckpointHeader h;
    h.kind = "equilibrium";
    h.d = grid->dims();
    h.n = grid->n();
    h.fields = equilibrium_fields();
    h.seeds = meta.seeds;
    h.config_hash = meta.config_hash;
    h.extras = {{"Bbar", eq.Bbar},
                {"M_i", eq.ion_mass},
                {"residual", eq.residual},
                {"iterations", eq.iterations}};
    write_checkpoint(path, h,
                     flatten({&eq.nbar_e, &eq.nbar_i, &eq.phibar, &eq.Ebar[0], &eq.Ebar[1],
                              &eq.Ebar[2], &eq.b}));
}

LoadedEquilibrium load_equilibrium(const std::string& path) {
    RawCheckpoint cp = read_checkpoint(path);
    expect_fields(cp.header, "equilibrium", equilibrium_fields());
    const GridPtr grid = grid_of(cp.header);
    LoadedEquilibrium out;
    Equilibrium& eq = out.equilibrium;
    eq.Ebar = VectorField(grid);
    unflatten(cp.payload,
              {&eq.nbar_e, &eq.nbar_i, &eq.phibar, &eq.Ebar[0], &eq.Ebar[1], &eq.Ebar[2], &eq.b},
              grid);
    try {
        eq.Bbar = cp.header.extras.at("Bbar").get<Vec3>();
        eq.ion_mass = cp.header.extras.at("M_i").get<double>();
        eq.residual = cp.header.extras.at("residual").get<double>();
        eq.iterations = cp.header.extras.at("iterations").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed equilibrium extras: ") + e.what());
    }
    out.header = std::move(cp.header);
    return out;
}

}  // namespace emx
