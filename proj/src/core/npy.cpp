#include "holdstab/core/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "holdstab/core/error.hpp"

namespace holdstab::npy {

static_assert(std::endian::native == std::endian::little, "npy I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";

const char* descr(Dtype d) {
    switch (d) {
        case Dtype::U8: return "|u1";
        case Dtype::F32: return "<f4";
        case Dtype::F64: return "<f8";
    }
    return "";
}

}  // namespace

std::size_t element_size(Dtype d) noexcept {
    switch (d) {
        case Dtype::U8: return 1;
        case Dtype::F32: return 4;
        case Dtype::F64: return 8;
    }
    return 0;
}

std::size_t Array::count() const noexcept {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

template <class T>
std::vector<T> Array::as() const {
    std::vector<T> out(count());
    switch (dtype) {
        case Dtype::U8:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(bytes[i]);
            break;
        case Dtype::F32: {
            for (std::size_t i = 0; i < out.size(); ++i) {
                float v;
                std::memcpy(&v, bytes.data() + 4 * i, 4);
                out[i] = static_cast<T>(v);
            }
            break;
        }
        case Dtype::F64: {
            for (std::size_t i = 0; i < out.size(); ++i) {
                double v;
                std::memcpy(&v, bytes.data() + 8 * i, 8);
                out[i] = static_cast<T>(v);
            }
            break;
        }
    }
    return out;
}

template std::vector<double> Array::as<double>() const;
template std::vector<float> Array::as<float>() const;
template std::vector<std::uint8_t> Array::as<std::uint8_t>() const;

void write(const std::filesystem::path& path, Dtype dtype, const std::vector<std::size_t>& shape,
           const void* data) {
    std::ostringstream dict;
    dict << "{'descr': '" << descr(dtype) << "', 'fortran_order': False, 'shape': (";
    std::size_t count = 1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        dict << shape[i];
        if (shape.size() == 1 || i + 1 < shape.size()) dict << ",";
        if (i + 1 < shape.size()) dict << " ";
        count *= shape[i];
    }
    dict << "), }";
    std::string header = dict.str();
    // magic(6) + version(2) + len(2) + header + '\n' padded to 64 bytes
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, 6);
    const char version[2] = {1, 0};
    out.write(version, 2);
    const auto len = static_cast<std::uint16_t>(header.size());
    out.write(reinterpret_cast<const char*>(&len), 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(count * element_size(dtype)));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Array read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0) throw DataError("'" + path.string() + "' is not an .npy file");
    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    std::uint32_t header_len = 0;
    if (version[0] == 1) {
        std::uint16_t l;
        in.read(reinterpret_cast<char*>(&l), 2);
        header_len = l;
    } else {
        in.read(reinterpret_cast<char*>(&header_len), 4);
    }
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (!in) throw DataError("truncated header in '" + path.string() + "'");

    Array arr;
    std::smatch m;
    if (!std::regex_search(header, m, std::regex("'descr':\\s*'([^']+)'")))
        throw DataError("missing descr in '" + path.string() + "'");
    const auto d = m[1].str();
    if (d == "|u1" || d == "<u1")
        arr.dtype = Dtype::U8;
    else if (d == "<f4")
        arr.dtype = Dtype::F32;
    else if (d == "<f8")
        arr.dtype = Dtype::F64;
    else
        throw DataError("unsupported dtype '" + d + "' in '" + path.string() + "'");
    if (std::regex_search(header, m, std::regex("'fortran_order':\\s*True")))
        throw DataError("fortran-ordered arrays are not supported: '" + path.string() + "'");
    if (!std::regex_search(header, m, std::regex("'shape':\\s*\\(([^)]*)\\)")))
        throw DataError("missing shape in '" + path.string() + "'");
    const auto shape_str = m[1].str();
    std::regex num("\\d+");
    for (auto it = std::sregex_iterator(shape_str.begin(), shape_str.end(), num); it != std::sregex_iterator(); ++it)
        arr.shape.push_back(std::stoull(it->str()));

    arr.bytes.resize(arr.count() * element_size(arr.dtype));
    in.read(reinterpret_cast<char*>(arr.bytes.data()), static_cast<std::streamsize>(arr.bytes.size()));
    if (!in) throw DataError("truncated data in '" + path.string() + "'");
    return arr;
}

void write_f64(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& values) {
    write(path, Dtype::F64, shape, values.data());
}

void write_u8(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
              const std::vector<std::uint8_t>& values) {
    write(path, Dtype::U8, shape, values.data());
}

}  // namespace holdstab::npy
