// ----------------------------------------------------------------------------
// Copyright 2026 The vgf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#ifndef VGF_CHECKPOINT_HPP
#define VGF_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "vgf/errors.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

// Checkpoint container:
//   magic "VGF1"
//   u64 tensor count
//   per tensor: u64 name length, UTF-8 name, u64 rank, u64 dims[rank],
//               f64 data[numel]
// All integers and floats little-endian. Round-trips are bit-exact.

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint io assumes a little-endian host");

inline void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw IoError("checkpoint: truncated file");
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
    os.write("VGF1", 4);
    detail::write_u64(os, tensors.size());
    for (const auto& [name, t] : tensors) {
        detail::write_u64(os, name.size());
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u64(os, t.rank());
        for (std::size_t d : t.shape()) detail::write_u64(os, d);
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
    }
    if (!os) throw IoError("checkpoint: write failed for " + path);
}

inline std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VGF1", 4) != 0) throw IoError("checkpoint: bad magic in " + path);
    std::map<std::string, Tensor> out;
    std::uint64_t count = detail::read_u64(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t name_len = detail::read_u64(is);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        std::uint64_t rank = detail::read_u64(is);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = detail::read_u64(is);
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
        if (!is) throw IoError("checkpoint: truncated tensor '" + name + "' in " + path);
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

}  // namespace vgf

#endif  // VGF_CHECKPOINT_HPP
