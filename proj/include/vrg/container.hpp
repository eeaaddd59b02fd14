#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrg/tensor.hpp"

namespace vrg {

// On-disk container: a directory holding manifest.json plus one raw
// little-endian row-major .bin file per array. Bundles store features as f32
// and labels as i32; checkpoints store parameters as f64 so that save/load
// round-trips are bit-exact. manifest.json:
//   {"version": 1,
//    "arrays": [{"name", "shape", "dtype": "f32"|"f64"|"i32",
//                "file", "byte_order": "little"}, ...],
//    "meta": {...}}
struct ArraySpec {
    std::string name;
    std::vector<std::size_t> shape;
    std::string dtype;
    std::string file;
};

struct Container {
    int version = 1;
    std::vector<ArraySpec> arrays; // manifest order
    std::map<std::string, Tensor> float_arrays;
    std::map<std::string, std::vector<std::int32_t>> int_arrays;
    nlohmann::json meta;

    void add_float(const std::string& name, Tensor t, const std::string& dtype = "f32");
    void add_int(const std::string& name, std::vector<std::int32_t> v,
                 std::vector<std::size_t> shape);
    const Tensor& float_array(const std::string& name) const;            // FormatError if absent
    const std::vector<std::int32_t>& int_array(const std::string& name) const;
    bool has_array(const std::string& name) const;
};

inline constexpr int kContainerVersion = 1;

Container load_container(const std::filesystem::path& dir);
// Writes every array to a temp file and renames, manifest.json last, so a
// partially written directory is never loadable.
void save_container(const Container& c, const std::filesystem::path& dir);

} // namespace vrg
