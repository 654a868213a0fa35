#include "holdstab/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "holdstab/core/error.hpp"

namespace holdstab {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'S', 'C', 'K', 'P', 'T', '\0', '\1'};

template <class S>
constexpr const char* dtype_name() {
    return sizeof(S) == 4 ? "f32" : "f64";
}

struct Opened {
    nlohmann::json header;
    std::ifstream in;
};

Opened open_checkpoint(const std::filesystem::path& path) {
    Opened o;
    o.in.open(path, std::ios::binary);
    if (!o.in) throw DataError("cannot open checkpoint " + path.string());
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    o.in.read(magic, 8);
    o.in.read(reinterpret_cast<char*>(&version), sizeof version);
    o.in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!o.in || std::memcmp(magic, kMagic, 8) != 0) throw DataError(path.string() + ": not a checkpoint file");
    if (version != kCheckpointVersion)
        throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    if (len > (1u << 30)) throw DataError(path.string() + ": implausible header length");
    std::string text(len, '\0');
    o.in.read(text.data(), static_cast<std::streamsize>(len));
    if (!o.in) throw DataError(path.string() + ": truncated header");
    try {
        o.header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": bad header: " + e.what());
    }
    return o;
}

template <class From, class To>
void read_values(std::ifstream& in, std::vector<To>& out, std::size_t n, const std::filesystem::path& path) {
    std::vector<From> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(From)));
    if (!in) throw DataError(path.string() + ": truncated parameter payload");
    out.assign(raw.begin(), raw.end());
}

}  // namespace

template <class S>
void save_checkpoint(const std::filesystem::path& path, const Model<S>& model, const nlohmann::json& metadata) {
    if (model.data.size() != model.layout.total()) throw ConfigError("parameter vector does not match its layout");
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : model.layout.tensors())
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", t.offset}});
    const nlohmann::json header = {{"dtype", dtype_name<S>()},
                                   {"count", model.data.size()},
                                   {"config", model.config.to_json()},
                                   {"tensors", tensors},
                                   {"metadata", metadata}};
    const auto text = header.dump();
    const std::uint64_t len = text.size();

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint " + path.string());
        out.write(kMagic, 8);
        out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof kCheckpointVersion);
        out.write(reinterpret_cast<const char*>(&len), sizeof len);
        out.write(text.data(), static_cast<std::streamsize>(len));
        out.write(reinterpret_cast<const char*>(model.data.data()),
                  static_cast<std::streamsize>(model.data.size() * sizeof(S)));
        if (!out) throw DataError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

template <class S>
Model<S> load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
    auto o = open_checkpoint(path);
    Model<S> m;
    try {
        m.config = ModelConfig::from_json(o.header.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad model config: " + e.what());
    }
    m.layout = ParamLayout(m.config);
    const auto count = o.header.at("count").get<std::size_t>();
    if (count != m.layout.total())
        throw DataError(path.string() + ": parameter count " + std::to_string(count) + " does not match config (" +
                        std::to_string(m.layout.total()) + ")");
    const auto dtype = o.header.at("dtype").get<std::string>();
    if (dtype == "f32")
        read_values<float>(o.in, m.data, count, path);
    else if (dtype == "f64")
        read_values<double>(o.in, m.data, count, path);
    else
        throw DataError(path.string() + ": unknown dtype " + dtype);
    if (metadata) *metadata = o.header.value("metadata", nlohmann::json::object());
    return m;
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) { return open_checkpoint(path).header; }

template void save_checkpoint<float>(const std::filesystem::path&, const Model<float>&, const nlohmann::json&);
template void save_checkpoint<double>(const std::filesystem::path&, const Model<double>&, const nlohmann::json&);
template Model<float> load_checkpoint<float>(const std::filesystem::path&, nlohmann::json*);
template Model<double> load_checkpoint<double>(const std::filesystem::path&, nlohmann::json*);

}  // namespace holdstab
