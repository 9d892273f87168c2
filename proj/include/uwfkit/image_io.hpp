#ifndef UWFKIT_IMAGE_IO_HPP
#define UWFKIT_IMAGE_IO_HPP

#include "core.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uwfkit {

namespace detail {

inline void put_u32be(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

inline uint32_t get_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t n, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf dst_len = static_cast<uLongf>(expected);
    int rc = uncompress(out.data(), &dst_len, data, static_cast<uLong>(n));
    if (rc != Z_OK || dst_len != expected)
        throw CorruptFile("png: inflate failed");
    return out;
}

inline std::vector<uint8_t> zlib_deflate(const uint8_t* data, size_t n) {
    uLongf dst_len = compressBound(static_cast<uLong>(n));
    std::vector<uint8_t> out(dst_len);
    if (compress2(out.data(), &dst_len, data, static_cast<uLong>(n), 6) != Z_OK)
        throw IoError("png: deflate failed");
    out.resize(dst_len);
    return out;
}

inline int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

// Reverse PNG per-row filtering in place; bpp = bytes per pixel.
inline void png_unfilter(std::vector<uint8_t>& raw, std::vector<uint8_t>& out,
                         int width, int height, int bpp) {
    const size_t stride = static_cast<size_t>(width) * bpp;
    if (raw.size() != (stride + 1) * height)
        throw CorruptFile("png: scanline data size mismatch");
    out.resize(stride * height);
    for (int y = 0; y < height; ++y) {
        const uint8_t* src = raw.data() + static_cast<size_t>(y) * (stride + 1);
        uint8_t filter = src[0];
        ++src;
        uint8_t* cur = out.data() + static_cast<size_t>(y) * stride;
        const uint8_t* prev = y > 0 ? cur - stride : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= size_t(bpp) ? cur[i - bpp] : 0;
            int b = prev ? prev[i] : 0;
            int c = (prev && i >= size_t(bpp)) ? prev[i - bpp] : 0;
            int x = src[i];
            switch (filter) {
            case 0: break;
            case 1: x += a; break;
            case 2: x += b; break;
            case 3: x += (a + b) / 2; break;
            case 4: x += paeth(a, b, c); break;
            default: throw CorruptFile("png: bad filter type");
            }
            cur[i] = uint8_t(x & 0xff);
        }
    }
}

inline Raster raster_from_bytes(const std::vector<uint8_t>& px, int w, int h, int ch) {
    Raster r(w, h, ch);
    const float inv = 1.0f / 255.0f;
    for (size_t i = 0; i < px.size(); ++i)
        r.data()[i] = px[i] * inv;
    return r;
}

inline Raster decode_png(const std::vector<uint8_t>& buf) {
    static const uint8_t magic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (buf.size() < 8 + 25 || std::memcmp(buf.data(), magic, 8) != 0)
        throw CorruptFile("png: bad signature");
    size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = 0;
    bool have_ihdr = false, have_iend = false;
    std::vector<uint8_t> idat;
    while (pos + 8 <= buf.size()) {
        uint32_t len = get_u32be(buf.data() + pos);
        if (pos + 12 + len > buf.size())
            throw CorruptFile("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const uint8_t* payload = buf.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw CorruptFile("png: bad IHDR");
            width = int(get_u32be(payload));
            height = int(get_u32be(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw UnsupportedFormat("png: interlaced images not supported");
            if (bit_depth != 8) throw UnsupportedFormat("png: only 8-bit depth supported");
            if (color_type != 0 && color_type != 2)
                throw UnsupportedFormat("png: only grayscale and RGB supported");
            if (width < 1 || height < 1) throw CorruptFile("png: bad dimensions");
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            have_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (!have_ihdr || !have_iend || idat.empty())
        throw CorruptFile("png: missing required chunks");
    int ch = color_type == 2 ? 3 : 1;
    size_t stride = static_cast<size_t>(width) * ch;
    auto raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * height);
    std::vector<uint8_t> px;
    png_unfilter(raw, px, width, height, ch);
    return raster_from_bytes(px, width, height, ch);
}

inline void write_png_chunk(std::vector<uint8_t>& out, const char* type,
                            const std::vector<uint8_t>& payload) {
    put_u32be(out, uint32_t(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uint32_t crc = uint32_t(crc32(0, out.data() + start, uInt(out.size() - start)));
    put_u32be(out, crc);
}

inline std::vector<uint8_t> encode_png(const Raster& r) {
    const int ch = r.channels();
    const size_t stride = static_cast<size_t>(r.width()) * ch;
    std::vector<uint8_t> raw((stride + 1) * r.height());
    for (int y = 0; y < r.height(); ++y) {
        uint8_t* row = raw.data() + static_cast<size_t>(y) * (stride + 1);
        row[0] = 0; // no filter
        for (size_t i = 0; i < stride; ++i) {
            float v = r.data()[static_cast<size_t>(y) * stride + i];
            row[1 + i] = uint8_t(std::lround(v * 255.0f));
        }
    }
    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, uint32_t(r.width()));
    put_u32be(ihdr, uint32_t(r.height()));
    ihdr.push_back(8);
    ihdr.push_back(ch == 3 ? 2 : 0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_png_chunk(out, "IHDR", ihdr);
    write_png_chunk(out, "IDAT", zlib_deflate(raw.data(), raw.size()));
    write_png_chunk(out, "IEND", {});
    return out;
}

inline Raster decode_pnm(const std::vector<uint8_t>& buf) {
    if (buf.size() < 2) throw CorruptFile("pnm: too short");
    int ch;
    if (buf[0] == 'P' && buf[1] == '5') ch = 1;
    else if (buf[0] == 'P' && buf[1] == '6') ch = 3;
    else throw CorruptFile("pnm: bad magic");
    // header tokens: width height maxval, '#' comments allowed
    size_t pos = 2;
    int fields[3];
    for (int f = 0; f < 3; ++f) {
        while (pos < buf.size() && (std::isspace(buf[pos]) || buf[pos] == '#')) {
            if (buf[pos] == '#')
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            else
                ++pos;
        }
        int v = 0;
        bool any = false;
        while (pos < buf.size() && std::isdigit(buf[pos])) {
            v = v * 10 + (buf[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) throw CorruptFile("pnm: malformed header");
        fields[f] = v;
    }
    if (pos >= buf.size() || !std::isspace(buf[pos])) throw CorruptFile("pnm: malformed header");
    ++pos; // single whitespace before binary data
    int w = fields[0], h = fields[1], maxval = fields[2];
    if (w < 1 || h < 1) throw CorruptFile("pnm: bad dimensions");
    if (maxval != 255) throw UnsupportedFormat("pnm: only maxval 255 supported");
    size_t n = static_cast<size_t>(w) * h * ch;
    if (buf.size() - pos < n) throw CorruptFile("pnm: truncated pixel data");
    std::vector<uint8_t> px(buf.begin() + pos, buf.begin() + pos + n);
    return raster_from_bytes(px, w, h, ch);
}

inline std::vector<uint8_t> encode_pnm(const Raster& r) {
    std::ostringstream hdr;
    hdr << (r.channels() == 3 ? "P6" : "P5") << "\n"
        << r.width() << " " << r.height() << "\n255\n";
    std::string h = hdr.str();
    std::vector<uint8_t> out(h.begin(), h.end());
    out.reserve(out.size() + r.size());
    for (float v : r.data())
        out.push_back(uint8_t(std::lround(v * 255.0f)));
    return out;
}

inline bool ends_with_ci(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    for (size_t i = 0; i < suffix.size(); ++i)
        if (std::tolower(s[s.size() - suffix.size() + i]) != std::tolower(suffix[i]))
            return false;
    return true;
}

} // namespace detail

inline Raster decode_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() >= 8 && buf[0] == 0x89 && buf[1] == 'P')
        return detail::decode_png(buf);
    if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '5' || buf[1] == '6'))
        return detail::decode_pnm(buf);
    if (buf.size() >= 2 && buf[0] == 'P')
        throw UnsupportedFormat("only binary P5/P6 PNM supported: " + path);
    throw CorruptFile("unrecognized image format: " + path);
}

inline void encode_image(const Raster& r, const std::string& path) {
    std::vector<uint8_t> bytes;
    if (detail::ends_with_ci(path, ".png"))
        bytes = detail::encode_png(r);
    else if (detail::ends_with_ci(path, ".pgm") || detail::ends_with_ci(path, ".ppm") ||
             detail::ends_with_ci(path, ".pnm"))
        bytes = detail::encode_pnm(r);
    else
        throw UnsupportedFormat("unknown output extension: " + path);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

} // namespace uwfkit

#endif
