#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace holdstab::npy {

/// Supported element types (little-endian): u1, f4, f8.
enum class Dtype { U8, F32, F64 };

struct Array {
    Dtype dtype = Dtype::F64;
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> bytes;

    std::size_t count() const noexcept;
    template <class T> std::vector<T> as() const;
};

std::size_t element_size(Dtype d) noexcept;

void write(const std::filesystem::path& path, Dtype dtype, const std::vector<std::size_t>& shape,
           const void* data);

Array read(const std::filesystem::path& path);

void write_f64(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               const std::vector<double>& values);
void write_u8(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
              const std::vector<std::uint8_t>& values);

}  // namespace holdstab::npy
