#include "ctaes/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "ctaes/errors.hpp"

namespace ctaes::train {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'A', 'E', 'S', 'C', 'K', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FileError("truncated checkpoint " + path);
    return v;
}

} // namespace

const Mat* CheckpointData::find(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return &m;
    return nullptr;
}

const Mat& CheckpointData::require(const std::string& name) const {
    const Mat* m = find(name);
    if (!m) throw VersionError("checkpoint is missing tensor '" + name + "'");
    return *m;
}

void write_checkpoint_file(const std::string& path, const CheckpointData& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot write checkpoint " + path);
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::uint64_t>(data.meta_json.size()));
    out.write(data.meta_json.data(), static_cast<std::streamsize>(data.meta_json.size()));
    write_pod(out, static_cast<std::uint32_t>(data.tensors.size()));
    for (const auto& [name, mat] : data.tensors) {
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<std::uint32_t>(mat.rows));
        write_pod(out, static_cast<std::uint32_t>(mat.cols));
        out.write(reinterpret_cast<const char*>(mat.a.data()),
                  static_cast<std::streamsize>(mat.a.size() * sizeof(double)));
    }
    if (!out) throw FileError("failed writing checkpoint " + path);
}

CheckpointData read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw VersionError(path + " is not a checkpoint file");
    auto version = read_pod<std::uint32_t>(in, path);
    if (version != kFormatVersion)
        throw VersionError(path + ": unsupported checkpoint format version " + std::to_string(version));
    auto meta_len = read_pod<std::uint64_t>(in, path);
    CheckpointData data;
    data.meta_json.resize(meta_len);
    in.read(data.meta_json.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw FileError("truncated checkpoint " + path);
    auto count = read_pod<std::uint32_t>(in, path);
    data.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name_len = read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        auto rows = read_pod<std::uint32_t>(in, path);
        auto cols = read_pod<std::uint32_t>(in, path);
        Mat m(static_cast<int>(rows), static_cast<int>(cols));
        in.read(reinterpret_cast<char*>(m.a.data()),
                static_cast<std::streamsize>(m.a.size() * sizeof(double)));
        if (!in) throw FileError("truncated checkpoint " + path);
        data.tensors.emplace_back(std::move(name), std::move(m));
    }
    return data;
}

} // namespace ctaes::train
