#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace holdstab {

/// Dense row-major image, channels interleaved (HxWxC).
template <class T>
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<T> pixels;

    Image() = default;
    Image(int h, int w, int c = 1, T fill = T{})
        : height(h), width(w), channels(c),
          pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c), fill) {}

    std::size_t size() const noexcept { return pixels.size(); }
    bool empty() const noexcept { return pixels.empty(); }

    T& at(int r, int c, int ch = 0) noexcept {
        return pixels[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    const T& at(int r, int c, int ch = 0) const noexcept {
        return pixels[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }

    bool same_shape(const auto& other) const noexcept {
        return height == other.height && width == other.width && channels == other.channels;
    }

    bool operator==(const Image&) const = default;
};

using Image8 = Image<std::uint8_t>;
using ImageF = Image<float>;

template <class To, class From>
Image<To> image_cast(const Image<From>& src) {
    Image<To> out(src.height, src.width, src.channels);
    for (std::size_t i = 0; i < src.pixels.size(); ++i) out.pixels[i] = static_cast<To>(src.pixels[i]);
    return out;
}

}  // namespace holdstab
