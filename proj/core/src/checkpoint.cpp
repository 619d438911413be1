#include "plangan/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plangan/errors.hpp"

namespace plangan {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fnv1a64_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return fnv1a64_hex(ss.str());
}

namespace {

constexpr char kBlobMagic[4] = {'P', 'G', 'P', 'B'};
constexpr std::uint32_t kBlobVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IoError("truncated blob");
    return v;
}

void atomic_write(const std::string& path, const std::string& bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

}  // namespace

void save_params_blob(const ParamStore& ps, const std::string& path) {
    std::ostringstream os(std::ios::binary);
    os.write(kBlobMagic, 4);
    write_pod<std::uint32_t>(os, kBlobVersion);
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(ps.items().size()));
    for (const auto& [name, var] : ps.items()) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Tensor& t = var.val();
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
        for (int d : t.shape()) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.size())));
    }
    atomic_write(path, os.str());
}

std::vector<std::pair<std::string, Tensor>> read_params_raw(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kBlobMagic, 4) != 0) throw IoError("bad blob magic in " + path);
    if (read_pod<std::uint32_t>(is) != kBlobVersion) throw IoError("bad blob version in " + path);
    auto count = read_pod<std::uint64_t>(is);
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto name_len = read_pod<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        auto ndim = read_pod<std::uint32_t>(is);
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d)
            shape.push_back(static_cast<int>(read_pod<std::uint32_t>(is)));
        int n = shape_size(shape);
        std::vector<double> data(static_cast<size_t>(n));
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(sizeof(double) * data.size()));
        if (!is) throw IoError("truncated blob " + path);
        out.emplace_back(std::move(name), Tensor(shape, std::move(data)));
    }
    return out;
}

void load_params_blob(ParamStore& ps, const std::string& path) {
    for (auto& [name, tensor] : read_params_raw(path)) {
        Var* dst = ps.find(name);
        if (!dst) throw ShapeMismatchError("unknown parameter " + name + " in " + path);
        if (dst->shape() != tensor.shape())
            throw ShapeMismatchError("parameter " + name + ": stored " + shape_str(tensor.shape()) +
                                     " vs model " + shape_str(dst->shape()));
        dst->node_->value = std::move(tensor);
    }
}

void save_checkpoint(const std::string& dir, long step, const std::string& component,
                     const std::string& config_json,
                     const std::vector<std::pair<std::string, const ParamStore*>>& models) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["step"] = step;
    manifest["component"] = component;
    manifest["config"] = config_json.empty() ? ordered_json::object()
                                             : ordered_json::parse(config_json);
    ordered_json blobs = ordered_json::object();
    for (const auto& [name, ps] : models) {
        std::string blob_name = name + ".bin";
        std::string blob_path = (fs::path(dir) / blob_name).string();
        save_params_blob(*ps, blob_path);
        ordered_json entry;
        entry["digest"] = "fnv1a64:" + fnv1a64_file(blob_path);
        entry["tensors"] = ps->tensor_count();
        entry["scalars"] = ps->scalar_count();
        blobs[blob_name] = entry;
    }
    manifest["blobs"] = blobs;
    atomic_write((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

CheckpointInfo read_checkpoint_info(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw IoError("no manifest in " + dir);
    ordered_json manifest;
    try {
        f >> manifest;
    } catch (const std::exception& e) {
        throw IoError(std::string("bad manifest: ") + e.what());
    }
    CheckpointInfo info;
    info.step = manifest.value("step", 0L);
    info.component = manifest.value("component", std::string());
    if (manifest.contains("config")) info.config_json = manifest["config"].dump();
    if (manifest.contains("blobs"))
        for (auto it = manifest["blobs"].begin(); it != manifest["blobs"].end(); ++it)
            info.blobs.push_back(it.key());
    return info;
}

void load_checkpoint_model(const std::string& dir, const std::string& blob_name, ParamStore& ps) {
    std::string blob_path = (fs::path(dir) / blob_name).string();
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (f) {
        ordered_json manifest;
        f >> manifest;
        if (manifest.contains("blobs") && manifest["blobs"].contains(blob_name)) {
            std::string want = manifest["blobs"][blob_name].value("digest", std::string());
            std::string got = "fnv1a64:" + fnv1a64_file(blob_path);
            if (!want.empty() && want != got)
                throw IoError("digest mismatch for " + blob_path);
        }
    }
    load_params_blob(ps, blob_path);
}

}  // namespace plangan
