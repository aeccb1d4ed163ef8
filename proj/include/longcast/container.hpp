#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "longcast/digest.hpp"
#include "longcast/errors.hpp"

namespace longcast {

// Named-tensor container file.
//
//   bytes 0..7    little-endian uint64: header length n
//   bytes 8..8+n  UTF-8 JSON header:
//                   { "meta": { ... },
//                     "tensors": [ {"name": "...", "dtype": "f32",
//                                   "shape": [..], "offset": N}, ... ] }
//   bytes 8+n..   raw little-endian IEEE-754 f32 data; each tensor starts at
//                 its stated offset relative to the start of the data section
//
// Saving is canonical (tensors sorted by name, offsets packed in that order),
// so save -> load -> save reproduces the file byte for byte.

struct ContainerEntry {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    std::size_t numel() const {
        std::size_t c = 1;
        for (auto e : shape) c *= e;
        return c;
    }
};

struct Container {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, ContainerEntry> tensors;  // sorted by name

    std::uint64_t content_digest() const {
        std::uint64_t h = fnv1a_init();
        for (const auto& [name, t] : tensors) {
            fnv1a_update(h, name);
            std::vector<std::uint64_t> dims(t.shape.begin(), t.shape.end());
            fnv1a_update(h, dims);
            fnv1a_update(h, t.data);
        }
        return h;
    }
};

inline void save_container(const std::string& path, const Container& c) {
    nlohmann::json header;
    header["meta"] = c.meta;
    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : c.tensors) {
        if (t.numel() != t.data.size())
            throw ValidationError("tensor '" + name + "' data length does not match its shape");
        nlohmann::json e;
        e["name"] = name;
        e["dtype"] = "f32";
        e["shape"] = t.shape;
        e["offset"] = offset;
        tensors.push_back(e);
        offset += t.data.size() * sizeof(float);
    }
    header["tensors"] = tensors;
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write container: " + path);
    std::uint64_t hlen = htext.size();
    char lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xFF);
    out.write(lenbuf, 8);
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& [name, t] : c.tensors)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path);
}

inline Container load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open container: " + path);
    in.seekg(0, std::ios::end);
    const std::uint64_t fsize = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
    if (fsize < 8) throw FormatError("container too small for header length field: " + path);

    char lenbuf[8];
    in.read(lenbuf, 8);
    std::uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i) hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
    if (8 + hlen > fsize) throw FormatError("container header length exceeds file size: " + path);

    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("tensors") || !header["tensors"].is_array())
        throw FormatError("malformed container header in " + path);

    Container c;
    if (header.contains("meta")) c.meta = header["meta"];
    const std::uint64_t data_size = fsize - 8 - hlen;
    for (const auto& e : header["tensors"]) {
        if (!e.contains("name") || !e.contains("dtype") || !e.contains("shape") || !e.contains("offset"))
            throw FormatError("container tensor entry missing a required field in " + path);
        const std::string name = e["name"].get<std::string>();
        if (e["dtype"].get<std::string>() != "f32")
            throw FormatError("tensor '" + name + "' has unsupported dtype '" + e["dtype"].get<std::string>() + "'");
        ContainerEntry t;
        t.shape = e["shape"].get<std::vector<std::size_t>>();
        const std::uint64_t offset = e["offset"].get<std::uint64_t>();
        const std::uint64_t bytes = static_cast<std::uint64_t>(t.numel()) * sizeof(float);
        if (offset + bytes > data_size)
            throw ValidationError("tensor '" + name + "' extends past end of data section (offset " +
                                  std::to_string(offset) + ", " + std::to_string(bytes) + " bytes)");
        t.data.resize(t.numel());
        in.seekg(static_cast<std::streamoff>(8 + hlen + offset));
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(bytes));
        if (!in) throw IoError("short read for tensor '" + name + "' in " + path);
        if (c.tensors.count(name)) throw ValidationError("duplicate tensor name '" + name + "' in " + path);
        c.tensors.emplace(name, std::move(t));
    }
    return c;
}

}  // namespace longcast
