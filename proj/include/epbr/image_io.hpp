// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epbr/color.hpp"
#include "epbr/error.hpp"
#include "epbr/image.hpp"

namespace epbr {

struct ImageSize {
    int width = 0;
    int height = 0;
};

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

inline std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// ---------------------------------------------------------------------------
// PFM

inline ImagePlane decode_pfm(const std::string& bytes, const std::string& path) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    };
    auto token = [&] {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };

    const std::string magic = token();
    int channels = 0;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw IoError("'" + path + "' is not a PFM file");

    int width = 0, height = 0;
    double scale = 0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw IoError("malformed PFM header in '" + path + "'");
    }
    if (width <= 0 || height <= 0 || scale == 0.0) throw IoError("malformed PFM header in '" + path + "'");
    if (pos >= bytes.size()) throw IoError("truncated PFM '" + path + "'");
    ++pos;  // exactly one whitespace byte separates the header from the raster

    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    if (bytes.size() - pos < count * 4) throw IoError("truncated PFM '" + path + "'");

    const bool file_little = scale < 0;
    const bool swap = file_little != (std::endian::native == std::endian::little);
    std::vector<float> data(count);
    const std::size_t row = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
        // PFM rasters run bottom-to-top.
        const char* src = bytes.data() + pos + static_cast<std::size_t>(height - 1 - y) * row * 4;
        for (std::size_t i = 0; i < row; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, src + i * 4, 4);
            if (swap) bits = byteswap32(bits);
            const float v = std::bit_cast<float>(bits);
            if (!std::isfinite(v)) throw IoError("non-finite value in PFM '" + path + "'");
            data[static_cast<std::size_t>(y) * row + i] = v;
        }
    }
    return {width, height, channels, std::move(data)};
}

inline std::string encode_pfm(const ImagePlane& img) {
    std::ostringstream header;
    header << (img.channels() == 3 ? "PF" : "Pf") << '\n' << img.width() << ' ' << img.height() << "\n-1.0\n";
    std::string out = header.str();
    const std::size_t row = static_cast<std::size_t>(img.width()) * img.channels();
    const std::size_t offset = out.size();
    out.resize(offset + row * img.height() * 4);
    const auto data = img.data();
    for (int y = 0; y < img.height(); ++y) {
        char* dst = out.data() + offset + static_cast<std::size_t>(img.height() - 1 - y) * row * 4;
        for (std::size_t i = 0; i < row; ++i) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(data[static_cast<std::size_t>(y) * row + i]);
            if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
            std::memcpy(dst + i * 4, &bits, 4);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// PNG (classic libpng API; setjmp-based error recovery)

struct PngRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<unsigned char> bytes;
    std::vector<png_bytep> rows;
    std::string error;
};

extern "C" inline void png_error_to_jmp(png_structp png, png_const_charp msg) {
    auto* raster = static_cast<PngRaster*>(png_get_error_ptr(png));
    if (raster) raster->error = msg ? msg : "libpng error";
    png_longjmp(png, 1);
}

extern "C" inline void png_warning_ignore(png_structp, png_const_charp) {}

struct PngMemoryReader {
    const std::string* bytes;
    std::size_t pos;
};

extern "C" inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* reader = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
    if (reader->bytes->size() - reader->pos < n) png_error(png, "truncated PNG stream");
    std::memcpy(out, reader->bytes->data() + reader->pos, n);
    reader->pos += n;
}

// No C++ object with a destructor lives in this frame across setjmp.
inline bool png_decode(const std::string* bytes, PngRaster* raster) {
    PngMemoryReader reader{bytes, 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, raster, png_error_to_jmp, png_warning_ignore);
    if (!png) {
        raster->error = "out of memory";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (raster->error.empty()) raster->error = "corrupt PNG";
        return false;
    }
    png_set_read_fn(png, &reader, png_read_from_memory);
    png_read_info(png, info);

    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8 && depth != 16) {
        raster->error = "unsupported PNG bit depth " + std::to_string(depth);
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    raster->width = static_cast<int>(png_get_image_width(png, info));
    raster->height = static_cast<int>(png_get_image_height(png, info));
    raster->channels = png_get_channels(png, info);
    raster->bit_depth = depth;
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    raster->bytes.resize(row_bytes * raster->height);
    raster->rows.resize(raster->height);
    for (int y = 0; y < raster->height; ++y) raster->rows[y] = raster->bytes.data() + row_bytes * y;
    png_read_image(png, raster->rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

struct PngMemoryWriter {
    std::string* out;
};

extern "C" inline void png_write_to_memory(png_structp png, png_bytep data, png_size_t n) {
    auto* writer = static_cast<PngMemoryWriter*>(png_get_io_ptr(png));
    writer->out->append(reinterpret_cast<const char*>(data), n);
}

extern "C" inline void png_flush_noop(png_structp) {}

inline bool png_encode(PngRaster* raster, std::string* out) {
    PngMemoryWriter writer{out};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, raster, png_error_to_jmp, png_warning_ignore);
    if (!png) {
        raster->error = "out of memory";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        if (raster->error.empty()) raster->error = "PNG encode failed";
        return false;
    }
    png_set_write_fn(png, &writer, png_write_to_memory, png_flush_noop);
    png_set_IHDR(png, info, raster->width, raster->height, raster->bit_depth,
                 raster->channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, raster->rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

inline ImagePlane decode_png(const std::string& bytes, ColorEncoding encoding, const std::string& path) {
    PngRaster raster;
    if (!png_decode(&bytes, &raster)) throw IoError("'" + path + "': " + raster.error);

    const int channels = raster.channels == 1 ? 1 : 3;
    ImagePlane img(raster.width, raster.height, channels);
    auto data = img.data();
    const bool wide = raster.bit_depth == 16;
    const float max_code = wide ? 65535.0f : 255.0f;
    for (int y = 0; y < raster.height; ++y) {
        const unsigned char* row = raster.rows[y];
        for (int x = 0; x < raster.width; ++x) {
            for (int c = 0; c < channels; ++c) {
                const std::size_t s = static_cast<std::size_t>(x) * raster.channels + c;
                const unsigned code = wide ? (unsigned(row[2 * s]) << 8) | row[2 * s + 1] : row[s];
                float v = static_cast<float>(code) / max_code;
                if (encoding == ColorEncoding::srgb) v = decode_srgb(v);
                data[(static_cast<std::size_t>(y) * raster.width + x) * channels + c] = v;
            }
        }
    }
    return img;
}

inline std::string encode_png(const ImagePlane& img, ColorEncoding encoding, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw ValidationError("PNG bit depth must be 8 or 16");
    PngRaster raster;
    raster.width = img.width();
    raster.height = img.height();
    raster.channels = img.channels();
    raster.bit_depth = bit_depth;
    const bool wide = bit_depth == 16;
    const double max_code = wide ? 65535.0 : 255.0;
    const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * img.channels() * (wide ? 2 : 1);
    raster.bytes.resize(row_bytes * img.height());
    raster.rows.resize(img.height());
    const auto data = img.data();
    for (int y = 0; y < img.height(); ++y) {
        unsigned char* row = raster.bytes.data() + row_bytes * y;
        raster.rows[y] = row;
        for (std::size_t s = 0; s < static_cast<std::size_t>(img.width()) * img.channels(); ++s) {
            float v = std::clamp(data[static_cast<std::size_t>(y) * img.width() * img.channels() + s], 0.0f, 1.0f);
            if (encoding == ColorEncoding::srgb) v = encode_srgb(v);
            const auto code = static_cast<unsigned>(std::lround(v * max_code));
            if (wide) {
                row[2 * s] = static_cast<unsigned char>(code >> 8);
                row[2 * s + 1] = static_cast<unsigned char>(code & 0xff);
            } else {
                row[s] = static_cast<unsigned char>(code);
            }
        }
    }
    std::string out;
    if (!png_encode(&raster, &out)) throw IoError(raster.error);
    return out;
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; });
}

}  // namespace detail

// Decodes PNG or PFM bytes, detected by signature.
inline ImagePlane decode_image(const std::string& bytes, ColorEncoding encoding, const std::string& name = "<memory>") {
    static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return detail::decode_png(bytes, encoding, name);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'F' || bytes[1] == 'f')) return detail::decode_pfm(bytes, name);
    throw IoError("'" + name + "' is neither PNG nor PFM");
}

// Loads PNG (8/16-bit) or PFM into linear light. `encoding` applies to PNG
// code values only; PFM floats are taken verbatim.
inline ImagePlane load_image(const std::string& path, ColorEncoding encoding,
                             std::optional<ImageSize> expected = std::nullopt) {
    ImagePlane img = decode_image(detail::read_file_bytes(path), encoding, path);
    if (expected && (img.width() != expected->width || img.height() != expected->height)) {
        throw ValidationError("'" + path + "' is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                              ", expected " + std::to_string(expected->width) + "x" +
                              std::to_string(expected->height));
    }
    return img;
}

// PNG output clamps to [0,1] and applies `encoding`; PFM output is verbatim.
inline std::string encode_image_png(const ImagePlane& img, ColorEncoding encoding, int bit_depth = 8) {
    return detail::encode_png(img, encoding, bit_depth);
}

inline void save_image(const ImagePlane& img, const std::string& path, ColorEncoding encoding, int png_bit_depth = 8) {
    if (detail::has_suffix(path, ".pfm")) detail::write_file_bytes(path, detail::encode_pfm(img));
    else if (detail::has_suffix(path, ".png")) detail::write_file_bytes(path, detail::encode_png(img, encoding, png_bit_depth));
    else throw IoError("'" + path + "': output must end in .png or .pfm");
}

}  // namespace epbr
