#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace relground {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (label files, thresholds, flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data violates a contract (bad shapes, unknown tokens, empty sets).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered during optimisation or inference.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public DataError {
public:
    using DataError::DataError;
};

/// Dense H x W x C float image, row-major, channel-interleaved.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, 0.0f) {}

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::size_t size() const { return data.size(); }
    bool operator==(const Image&) const = default;
};

/// Binary H x W mask.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;
    bool operator==(const Mask&) const = default;
};

inline std::size_t Mask::count() const {
    std::size_t n = 0;
    for (auto v : data) n += v != 0;
    return n;
}

}  // namespace relground
