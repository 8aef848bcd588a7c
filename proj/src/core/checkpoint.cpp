// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace geode {

namespace {

constexpr char kMagic[4] = {'G', 'E', 'O', 'D'};

template <typename T>
void write_pod(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated tensor file: " + path);
    return v;
}

void serialize(std::ostream& os, const std::vector<NamedTensor>& tensors) {
    os.write(kMagic, 4);
    write_pod<uint32_t>(os, kCheckpointVersion);
    write_pod<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > 0xffff) throw ContractError("tensor name too long: " + t.name);
        write_pod<uint16_t>(os, static_cast<uint16_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod<uint8_t>(os, static_cast<uint8_t>(t.shape.size()));
        size_t n = 1;
        for (int d : t.shape) {
            write_pod<uint32_t>(os, static_cast<uint32_t>(d));
            n *= static_cast<size_t>(d);
        }
        if (n != t.values.size()) throw ContractError("tensor value count mismatch: " + t.name);
        os.write(reinterpret_cast<const char*>(t.values.data()),
                 static_cast<std::streamsize>(n * sizeof(float)));
    }
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for write: " + path);
    serialize(os, tensors);
    if (!os) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for read: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad magic in tensor file: " + path);
    const uint32_t version = read_pod<uint32_t>(is, path);
    if (version != kCheckpointVersion)
        throw IoError("unsupported tensor file version " + std::to_string(version) + ": " + path);
    const uint32_t count = read_pod<uint32_t>(is, path);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const uint16_t name_len = read_pod<uint16_t>(is, path);
        t.name.resize(name_len);
        is.read(t.name.data(), name_len);
        const uint8_t ndim = read_pod<uint8_t>(is, path);
        size_t n = 1;
        for (uint8_t d = 0; d < ndim; ++d) {
            const uint32_t dim = read_pod<uint32_t>(is, path);
            t.shape.push_back(static_cast<int>(dim));
            n *= dim;
        }
        t.values.resize(n);
        is.read(reinterpret_cast<char*>(t.values.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (!is) throw IoError("truncated tensor file: " + path);
        out.push_back(std::move(t));
    }
    return out;
}

NamedTensor to_named(const std::string& name, const Tensor& t) {
    NamedTensor nt;
    nt.name = name;
    nt.shape = t.shape();
    nt.values.reserve(t.numel());
    for (double v : t.data()) nt.values.push_back(static_cast<float>(v));
    return nt;
}

Tensor from_named(const NamedTensor& nt) {
    std::vector<double> d(nt.values.begin(), nt.values.end());
    return Tensor::from_data(nt.shape, std::move(d));
}

void save_checkpoint(const std::string& path, const ParamStore& store) {
    std::vector<NamedTensor> tensors;
    for (const auto& name : store.names()) tensors.push_back(to_named(name, store.get(name)));
    save_tensors(path, tensors);
}

void load_checkpoint(const std::string& path, ParamStore& store) {
    for (const auto& nt : load_tensors(path)) {
        if (store.contains(nt.name)) {
            Tensor& t = store.get(nt.name);
            if (t.shape() != nt.shape)
                throw IoError("checkpoint shape mismatch for " + nt.name + " in " + path);
            for (size_t i = 0; i < nt.values.size(); ++i) t.data()[i] = nt.values[i];
        } else {
            store.create(nt.name, from_named(nt));
        }
    }
}

uint64_t hash_namespace(const ParamStore& store, const std::string& prefix) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& name : store.names_with_prefix(prefix)) {
        mix(name.data(), name.size());
        const Tensor& t = store.get(name);
        for (double v : t.data()) {
            const float f = static_cast<float>(v);
            mix(&f, sizeof(f));
        }
    }
    return h;
}

}  // namespace geode
