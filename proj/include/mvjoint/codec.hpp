#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mvjoint/core.hpp"

namespace mvjoint {

/// Stand-in for an external intra codec: per-view 8x8 block DCT with a
/// uniform quantizer. The same quality value is applied to every view of a
/// set, which keeps the rate allocation balanced across cameras.
struct CodecConfig {
    int quality = 10;  // QP' in [1, 50], larger = coarser
    static constexpr int block_size = 8;

    void validate() const {
        if (quality < 1 || quality > 50)
            throw std::invalid_argument("CodecConfig: quality must be in [1, 50]");
    }
    double step() const { return 2.0 * quality; }
};

struct CompressedImage {
    int rows = 0, cols = 0;          // original dimensions
    int padded_rows = 0, padded_cols = 0;
    int quality = 0;
    std::vector<int16_t> coeffs;     // quantized DCT coefficients, padded grid
    double estimated_bits = 0.0;
};

namespace detail {

// Orthonormal DCT-II basis, C[u][m] = a(u) cos(pi (2m+1) u / 16).
inline const std::array<std::array<double, 8>, 8>& dct_basis() {
    static const auto basis = [] {
        std::array<std::array<double, 8>, 8> b{};
        const double pi = std::acos(-1.0);
        for (int u = 0; u < 8; ++u) {
            double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int m = 0; m < 8; ++m)
                b[u][m] = a * std::cos(pi * (2 * m + 1) * u / 16.0);
        }
        return b;
    }();
    return basis;
}

inline void dct8x8_forward(const double* in, double* out) {
    const auto& b = dct_basis();
    double tmp[64];
    for (int u = 0; u < 8; ++u)       // rows
        for (int n = 0; n < 8; ++n) {
            double s = 0;
            for (int m = 0; m < 8; ++m) s += b[u][m] * in[m * 8 + n];
            tmp[u * 8 + n] = s;
        }
    for (int u = 0; u < 8; ++u)       // cols
        for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int n = 0; n < 8; ++n) s += b[v][n] * tmp[u * 8 + n];
            out[u * 8 + v] = s;
        }
}

inline void dct8x8_inverse(const double* in, double* out) {
    const auto& b = dct_basis();
    double tmp[64];
    for (int m = 0; m < 8; ++m)
        for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int u = 0; u < 8; ++u) s += b[u][m] * in[u * 8 + v];
            tmp[m * 8 + v] = s;
        }
    for (int m = 0; m < 8; ++m)
        for (int n = 0; n < 8; ++n) {
            double s = 0;
            for (int v = 0; v < 8; ++v) s += b[v][n] * tmp[m * 8 + v];
            out[m * 8 + n] = s;
        }
}

inline int round_half_away(double x) {
    return int(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

}  // namespace detail

/// Pads by edge replication so both dimensions are multiples of 8.
inline Image pad_to_blocks(const Image& im, int block = 8) {
    int pr = (im.rows + block - 1) / block * block;
    int pc = (im.cols + block - 1) / block * block;
    if (pr == im.rows && pc == im.cols) return im;
    Image out(pr, pc);
    for (int r = 0; r < pr; ++r)
        for (int c = 0; c < pc; ++c)
            out.at(r, c) = im.at(std::min(r, im.rows - 1), std::min(c, im.cols - 1));
    return out;
}

/// Rate estimate: empirical zeroth-order entropy of the quantized symbols,
/// one histogram per coefficient position, summed over positions. No real
/// entropy coder is run; RD comparisons only need a reproducible figure.
inline double estimate_bits(const std::vector<int16_t>& coeffs, int padded_rows,
                            int padded_cols) {
    const int bw = padded_cols / 8, bh = padded_rows / 8;
    const int nblocks = bw * bh;
    if (nblocks == 0) return 0.0;
    double bits = 0.0;
    std::map<int, int> hist;
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            hist.clear();
            for (int by = 0; by < bh; ++by)
                for (int bx = 0; bx < bw; ++bx) {
                    int r = by * 8 + u, c = bx * 8 + v;
                    ++hist[coeffs[size_t(r) * padded_cols + c]];
                }
            double h = 0.0;
            for (const auto& [sym, count] : hist) {
                double p = double(count) / nblocks;
                h -= p * std::log2(p);
            }
            bits += h * nblocks;
        }
    return bits;
}

inline CompressedImage encode(const Image& im, const CodecConfig& cfg) {
    cfg.validate();
    Image padded = pad_to_blocks(im);
    CompressedImage out;
    out.rows = im.rows;
    out.cols = im.cols;
    out.padded_rows = padded.rows;
    out.padded_cols = padded.cols;
    out.quality = cfg.quality;
    out.coeffs.assign(padded.size(), 0);

    const double step = cfg.step();
    double block[64], freq[64];
    for (int by = 0; by < padded.rows; by += 8)
        for (int bx = 0; bx < padded.cols; bx += 8) {
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    block[r * 8 + c] = padded.at(by + r, bx + c);
            detail::dct8x8_forward(block, freq);
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c) {
                    int q = detail::round_half_away(freq[r * 8 + c] / step);
                    out.coeffs[size_t(by + r) * padded.cols + (bx + c)] =
                        static_cast<int16_t>(q);
                }
        }
    out.estimated_bits = estimate_bits(out.coeffs, out.padded_rows, out.padded_cols);
    return out;
}

inline Image decode(const CompressedImage& comp) {
    if (comp.rows <= 0 || comp.cols <= 0 ||
        comp.coeffs.size() != size_t(comp.padded_rows) * comp.padded_cols)
        throw std::invalid_argument("decode: malformed CompressedImage");
    const double step = 2.0 * comp.quality;
    Image padded(comp.padded_rows, comp.padded_cols);
    double block[64], freq[64];
    for (int by = 0; by < comp.padded_rows; by += 8)
        for (int bx = 0; bx < comp.padded_cols; bx += 8) {
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    freq[r * 8 + c] =
                        double(comp.coeffs[size_t(by + r) * comp.padded_cols + (bx + c)]) *
                        step;
            detail::dct8x8_inverse(freq, block);
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    padded.at(by + r, bx + c) = block[r * 8 + c];
        }
    Image out(comp.rows, comp.cols);
    for (int r = 0; r < comp.rows; ++r)
        for (int c = 0; c < comp.cols; ++c)
            out.at(r, c) = clamp_gray(padded.at(r, c));
    return out;
}

// --- flat binary serialization -------------------------------------------
// Layout: magic "MVJC" | u32 rows | u32 cols | u32 quality | int16 coeffs
// (padded grid, row-major) | f64 estimated_bits. All integers little-endian.

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                 char((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline uint32_t get_u32(std::istream& in) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated compressed file");
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

inline void put_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.put(char((bits >> (8 * i)) & 0xff));
}

inline double get_f64(std::istream& in) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        int c = in.get();
        if (c == EOF) throw std::runtime_error("truncated compressed file");
        bits |= uint64_t(uint8_t(c)) << (8 * i);
    }
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void save_compressed(const CompressedImage& comp, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out.write("MVJC", 4);
    detail::put_u32(out, uint32_t(comp.rows));
    detail::put_u32(out, uint32_t(comp.cols));
    detail::put_u32(out, uint32_t(comp.quality));
    for (int16_t q : comp.coeffs) {
        out.put(char(uint16_t(q) & 0xff));
        out.put(char((uint16_t(q) >> 8) & 0xff));
    }
    detail::put_f64(out, comp.estimated_bits);
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline CompressedImage load_compressed(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MVJC", 4) != 0)
        throw std::runtime_error("not a MVJC file: " + path);
    CompressedImage comp;
    comp.rows = int(detail::get_u32(in));
    comp.cols = int(detail::get_u32(in));
    comp.quality = int(detail::get_u32(in));
    if (comp.rows <= 0 || comp.cols <= 0 || comp.quality < 1 || comp.quality > 50)
        throw std::runtime_error("corrupt MVJC header: " + path);
    comp.padded_rows = (comp.rows + 7) / 8 * 8;
    comp.padded_cols = (comp.cols + 7) / 8 * 8;
    comp.coeffs.resize(size_t(comp.padded_rows) * comp.padded_cols);
    for (int16_t& q : comp.coeffs) {
        int lo = in.get(), hi = in.get();
        if (lo == EOF || hi == EOF) throw std::runtime_error("truncated compressed file: " + path);
        q = int16_t(uint16_t(lo) | (uint16_t(hi) << 8));
    }
    comp.estimated_bits = detail::get_f64(in);
    return comp;
}

}  // namespace mvjoint
