#pragma once

// 8-bit greyscale PGM: P5 read/write, P2 read. Square images only.

#include "msdecomp/deblur.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msdecomp::pgm {

class PgmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == EOF) return;
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

inline long read_header_int(std::istream& in, const char* what) {
    skip_space_and_comments(in);
    std::string tok;
    while (std::isdigit(in.peek())) tok.push_back(static_cast<char>(in.get()));
    if (tok.empty() || tok.size() > 9) throw PgmError(std::string("malformed PGM header: bad ") + what);
    return std::stol(tok);
}

} // namespace detail

/// Raw 8-bit raster with its side length.
struct Raster {
    std::size_t n = 0;
    std::vector<std::uint8_t> pixels;
};

inline Raster read_raster(std::istream& in) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) throw PgmError("not a P5 or P2 PGM file");
    const bool binary = magic[1] == '5';
    const long w = detail::read_header_int(in, "width");
    const long h = detail::read_header_int(in, "height");
    const long maxval = detail::read_header_int(in, "maxval");
    if (w <= 0 || h <= 0) throw PgmError("malformed PGM header: non-positive size");
    if (maxval != 255) throw PgmError("unsupported PGM maxval " + std::to_string(maxval) + " (only 255 is accepted)");
    if (w != h) throw PgmError("non-square PGM images are not supported");

    Raster r;
    r.n = static_cast<std::size_t>(w);
    r.pixels.resize(r.n * r.n);
    if (binary) {
        // exactly one whitespace byte separates the header from the raster
        if (!std::isspace(in.get())) throw PgmError("malformed PGM header: missing separator");
        in.read(reinterpret_cast<char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
        if (in.gcount() != static_cast<std::streamsize>(r.pixels.size())) throw PgmError("truncated PGM raster");
    } else {
        for (auto& px : r.pixels) {
            const long v = detail::read_header_int(in, "pixel");
            if (v > 255) throw PgmError("P2 pixel value exceeds maxval");
            px = static_cast<std::uint8_t>(v);
        }
    }
    return r;
}

inline deblur::ImageField to_field(const Raster& r) {
    deblur::ImageField img(r.n);
    for (std::size_t i = 0; i < r.pixels.size(); ++i) img.values[i] = r.pixels[i] / 255.0;
    return img;
}

struct Quantized {
    Raster raster;
    std::size_t clipped = 0; ///< pixels outside [0,1] before rounding
};

inline Quantized quantize(const deblur::ImageField& img) {
    Quantized q;
    q.raster.n = img.n;
    q.raster.pixels.resize(img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        double v = img.values[i];
        if (!std::isfinite(v)) throw PgmError("cannot write non-finite pixel");
        if (v < 0.0 || v > 1.0) {
            ++q.clipped;
            v = std::clamp(v, 0.0, 1.0);
        }
        q.raster.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
    return q;
}

inline void write_raster(std::ostream& out, const Raster& r) {
    out << "P5\n" << r.n << ' ' << r.n << "\n255\n";
    out.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
}

inline deblur::ImageField read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PgmError("cannot open " + path);
    return to_field(read_raster(in));
}

/// Returns the number of clipped pixels.
inline std::size_t write(const std::string& path, const deblur::ImageField& img) {
    const Quantized q = quantize(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PgmError("cannot create " + path);
    write_raster(out, q.raster);
    if (!out) throw PgmError("write failed: " + path);
    return q.clipped;
}

} // namespace msdecomp::pgm
