#include "vrg/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "vrg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

namespace vrg {

namespace fs = std::filesystem;

namespace {

std::size_t dtype_size(const std::string& dtype) {
    if (dtype == "f32" || dtype == "i32") return 4;
    if (dtype == "f64") return 8;
    throw FormatError("unknown dtype '" + dtype + "'");
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::vector<char> read_exact(const fs::path& file, std::size_t expected_bytes) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw FormatError("cannot open array file " + file.string());
    std::vector<char> bytes(expected_bytes);
    in.read(bytes.data(), static_cast<std::streamsize>(expected_bytes));
    if (static_cast<std::size_t>(in.gcount()) != expected_bytes) {
        throw FormatError("array file " + file.string() + " is short: expected " +
                          std::to_string(expected_bytes) + " bytes, got " +
                          std::to_string(in.gcount()));
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw FormatError("array file " + file.string() + " is longer than its manifest shape");
    }
    return bytes;
}

void write_atomic(const fs::path& file, const char* data, std::size_t bytes) {
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + tmp.string());
        out.write(data, static_cast<std::streamsize>(bytes));
        if (!out) throw FormatError("short write to " + tmp.string());
    }
    fs::rename(tmp, file);
}

} // namespace

void Container::add_float(const std::string& name, Tensor t, const std::string& dtype) {
    if (dtype != "f32" && dtype != "f64") throw FormatError("float dtype must be f32 or f64");
    arrays.push_back({name, t.shape(), dtype, name + ".bin"});
    float_arrays.emplace(name, std::move(t));
}

void Container::add_int(const std::string& name, std::vector<std::int32_t> v,
                        std::vector<std::size_t> shape) {
    if (shape_product(shape) != v.size()) {
        throw DimensionError("int array '" + name + "' length does not match shape");
    }
    arrays.push_back({name, std::move(shape), "i32", name + ".bin"});
    int_arrays.emplace(name, std::move(v));
}

const Tensor& Container::float_array(const std::string& name) const {
    auto it = float_arrays.find(name);
    if (it == float_arrays.end()) throw FormatError("missing array '" + name + "'");
    return it->second;
}

const std::vector<std::int32_t>& Container::int_array(const std::string& name) const {
    auto it = int_arrays.find(name);
    if (it == int_arrays.end()) throw FormatError("missing array '" + name + "'");
    return it->second;
}

bool Container::has_array(const std::string& name) const {
    return float_arrays.count(name) > 0 || int_arrays.count(name) > 0;
}

Container load_container(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw FormatError("missing manifest.json in " + dir.string());

    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest.json in " + dir.string() + ": " + e.what());
    }

    Container c;
    try {
        c.version = manifest.at("version").get<int>();
        if (c.version != kContainerVersion) {
            throw FormatError("unsupported container version " + std::to_string(c.version));
        }
        c.meta = manifest.value("meta", nlohmann::json::object());
        for (const auto& j : manifest.at("arrays")) {
            ArraySpec spec;
            spec.name = j.at("name").get<std::string>();
            spec.shape = j.at("shape").get<std::vector<std::size_t>>();
            spec.dtype = j.at("dtype").get<std::string>();
            spec.file = j.at("file").get<std::string>();
            if (j.value("byte_order", "little") != "little") {
                throw FormatError("array '" + spec.name + "': unsupported byte order");
            }
            c.arrays.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest.json in " + dir.string() + ": " + e.what());
    }

    for (const ArraySpec& spec : c.arrays) {
        const std::size_t n = shape_product(spec.shape);
        const std::vector<char> bytes = read_exact(dir / spec.file, n * dtype_size(spec.dtype));
        if (spec.dtype == "i32") {
            std::vector<std::int32_t> v(n);
            std::memcpy(v.data(), bytes.data(), bytes.size());
            c.int_arrays.emplace(spec.name, std::move(v));
        } else {
            Tensor t(spec.shape);
            if (spec.dtype == "f32") {
                const float* src = reinterpret_cast<const float*>(bytes.data());
                for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(src[i]);
            } else {
                std::memcpy(t.data(), bytes.data(), bytes.size());
            }
            if (!t.all_finite()) {
                throw DataError("array '" + spec.name + "' contains non-finite values");
            }
            c.float_arrays.emplace(spec.name, std::move(t));
        }
    }
    return c;
}

void save_container(const Container& c, const fs::path& dir) {
    fs::create_directories(dir);

    nlohmann::json manifest;
    manifest["version"] = kContainerVersion;
    manifest["meta"] = c.meta;
    manifest["arrays"] = nlohmann::json::array();

    for (const ArraySpec& spec : c.arrays) {
        const std::size_t n = shape_product(spec.shape);
        if (spec.dtype == "i32") {
            const auto& v = c.int_array(spec.name);
            write_atomic(dir / spec.file, reinterpret_cast<const char*>(v.data()), n * 4);
        } else {
            const Tensor& t = c.float_array(spec.name);
            if (t.size() != n) {
                throw DimensionError("array '" + spec.name + "' does not match its manifest shape");
            }
            if (spec.dtype == "f32") {
                std::vector<float> out(n);
                for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(t[i]);
                write_atomic(dir / spec.file, reinterpret_cast<const char*>(out.data()), n * 4);
            } else {
                write_atomic(dir / spec.file, reinterpret_cast<const char*>(t.data()), n * 8);
            }
        }
        manifest["arrays"].push_back({{"name", spec.name},
                                      {"shape", spec.shape},
                                      {"dtype", spec.dtype},
                                      {"file", spec.file},
                                      {"byte_order", "little"}});
    }

    const std::string text = manifest.dump(2) + "\n";
    write_atomic(dir / "manifest.json", text.data(), text.size());
}

} // namespace vrg
