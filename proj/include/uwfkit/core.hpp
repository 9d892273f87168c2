#ifndef UWFKIT_CORE_HPP
#define UWFKIT_CORE_HPP

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwfkit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedFormat : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ImageTooSmall : Error { using Error::Error; };
struct EmptyScaleList : Error { using Error::Error; };
struct EmptyValidMask : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct TooFewMatches : Error { using Error::Error; };
struct NoConsensus : Error { using Error::Error; };
struct SingularHomography : Error { using Error::Error; };
struct PatchSizeInvalid : Error { using Error::Error; };
struct NegativeElapsed : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

/// Floating-point image plane(s), values in [0,1], row-major, channel-interleaved.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<size_t>(width) * height * channels, fill) {
        assert(width >= 1 && height >= 1 && (channels == 1 || channels == 3));
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }

    float& at(int x, int y, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    float at(int x, int y, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    /// Border-clamped read, single channel.
    float at_clamped(int x, int y, int c = 0) const {
        if (x < 0) x = 0;
        if (x >= width_) x = width_ - 1;
        if (y < 0) y = 0;
        if (y >= height_) y = height_ - 1;
        return at(x, y, c);
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_shape(const Raster& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Boolean image plane, row-major.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : width_(width), height_(height),
          bits_(static_cast<size_t>(width) * height, fill ? 1 : 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return bits_.size(); }

    bool at(int x, int y) const { return bits_[static_cast<size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0; }

    size_t count() const {
        size_t n = 0;
        for (uint8_t b : bits_) n += b;
        return n;
    }

    bool same_shape(const BinaryMask& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

    std::vector<uint8_t>& raw() { return bits_; }
    const std::vector<uint8_t>& raw() const { return bits_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> bits_;
};

} // namespace uwfkit

#endif
