#include "sofa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sofa::ckpt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void save(const std::string& path, const ad::ParamStore& params,
          const nlohmann::json& config) {
    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["config"] = config;
    auto& tensors = manifest["tensors"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (auto& name : params.names()) {
        const Tensor& t = params.get(name)->value;
        tensors.push_back({{"name", name},
                           {"shape", t.shape},
                           {"dtype", "f64"},
                           {"offset", offset}});
        offset += t.size() * sizeof(double);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open for writing: " + path);
    out << kMagic << manifest.dump() << '\0';
    for (auto& name : params.names()) {
        const Tensor& t = params.get(name)->value;
        out.write(reinterpret_cast<const char*>(t.v.data()),
                  std::streamsize(t.v.size() * sizeof(double)));
    }
    if (!out) throw CheckpointError("write failed: " + path);
}

Loaded load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);

    std::string magic(std::strlen(kMagic), '\0');
    in.read(magic.data(), std::streamsize(magic.size()));
    if (!in || magic != kMagic)
        throw CheckpointError("bad checkpoint magic in " + path);

    std::string manifest_text;
    std::getline(in, manifest_text, '\0');
    if (!in) throw CheckpointError("truncated checkpoint manifest in " + path);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("unparsable checkpoint manifest in " + path + ": " + e.what());
    }
    if (manifest.value("version", 0) != 1)
        throw CheckpointError("unsupported checkpoint version in " + path);

    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Loaded result;
    result.config = manifest.value("config", nlohmann::json::object());
    for (auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name");
        const Shape shape = entry.at("shape").get<Shape>();
        const std::size_t offset = entry.at("offset");
        if (entry.at("dtype") != "f64")
            throw CheckpointError("unsupported dtype for tensor " + name + " in " + path);
        const std::size_t bytes = numel(shape) * sizeof(double);
        if (offset + bytes > blob.size())
            throw CheckpointError("truncated checkpoint blob in " + path + " at tensor " + name);
        Tensor t = Tensor::zeros(shape);
        std::memcpy(t.v.data(), blob.data() + offset, bytes);
        if (!t.all_finite())
            throw CheckpointError("non-finite values in tensor " + name + " of " + path);
        result.params.add(name, std::move(t));
    }
    return result;
}

}  // namespace sofa::ckpt
