#include <cstring>

#include "mufia/classifier.hpp"
#include "mufia/fsio.hpp"

namespace mufia {

namespace {

constexpr char kMagic[8] = {'M', 'U', 'F', 'I', 'A', 'W', '0', '1'};

void put_i32_le(std::vector<std::uint8_t>& out, std::int32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::int32_t get_i32_le(const std::uint8_t* p) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) |
                                     (static_cast<std::uint32_t>(p[1]) << 8) |
                                     (static_cast<std::uint32_t>(p[2]) << 16) |
                                     (static_cast<std::uint32_t>(p[3]) << 24));
}

}  // namespace

void save_weights(const ClassifierWeights<float>& w, const std::string& path) {
    w.spec.validate();
    require(w.values.size() == w.spec.parameter_count(), "save_weights: wrong parameter count");

    std::vector<std::uint8_t> bytes;
    bytes.reserve(16 + 4 * w.values.size());
    bytes.insert(bytes.end(), kMagic, kMagic + 8);
    put_i32_le(bytes, w.spec.input_side);
    put_i32_le(bytes, w.spec.num_classes);
    for (float v : w.values) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        bytes.push_back(static_cast<std::uint8_t>(u & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
    }
    write_file_bytes_atomic(path, bytes.data(), bytes.size());
}

ClassifierWeights<float> load_weights(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw std::runtime_error("not a weight file (bad magic): " + path);

    NetworkSpec spec;
    spec.input_side = get_i32_le(bytes.data() + 8);
    spec.num_classes = get_i32_le(bytes.data() + 12);
    spec.validate();

    const std::size_t count = spec.parameter_count();
    if (bytes.size() != 16 + 4 * count)
        throw std::runtime_error("weight file size does not match its spec: " + path);

    ClassifierWeights<float> w;
    w.spec = spec;
    w.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* p = bytes.data() + 16 + 4 * i;
        const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                                (static_cast<std::uint32_t>(p[1]) << 8) |
                                (static_cast<std::uint32_t>(p[2]) << 16) |
                                (static_cast<std::uint32_t>(p[3]) << 24);
        std::memcpy(&w.values[i], &u, 4);
    }
    return w;
}

}  // namespace mufia
