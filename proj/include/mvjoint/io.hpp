#pragma once

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>
#include <json.hpp>

#include "mvjoint/camera.hpp"
#include "mvjoint/core.hpp"

namespace mvjoint {

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {  // comment runs to end of line
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) return 0;
    do {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    } while (c != EOF && !std::isspace(c));
    return 1;
}

inline int pgm_int(std::istream& in, const std::string& path) {
    std::string tok;
    if (!pgm_next_token(in, tok))
        throw std::runtime_error("truncated PGM header: " + path);
    try {
        return std::stoi(tok);
    } catch (...) {
        throw std::runtime_error("bad PGM header token '" + tok + "': " + path);
    }
}

struct PngReadCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCtx() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '2'))
        throw std::runtime_error("unsupported format (expected P5/P2 PGM): " + path);
    bool ascii = (m1 == '2');
    int cols = detail::pgm_int(in, path);
    int rows = detail::pgm_int(in, path);
    int maxval = detail::pgm_int(in, path);
    if (maxval > 255)
        throw std::runtime_error("unsupported bit depth (maxval " +
                                 std::to_string(maxval) + "): " + path);
    if (maxval < 1) throw std::runtime_error("bad PGM maxval: " + path);
    Image im(rows, cols);
    if (ascii) {
        for (size_t i = 0; i < im.size(); ++i) {
            int v = detail::pgm_int(in, path);
            im.v[i] = double(v);
        }
    } else {
        std::vector<uint8_t> buf(im.size());
        in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
        if (in.gcount() != std::streamsize(buf.size()))
            throw std::runtime_error("truncated PGM data: " + path);
        for (size_t i = 0; i < buf.size(); ++i) im.v[i] = double(buf[i]);
    }
    return im;
}

inline void save_pgm(const Image& im, const std::string& path, bool ascii = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path);
    out << (ascii ? "P2" : "P5") << "\n" << im.cols << " " << im.rows << "\n255\n";
    if (ascii) {
        for (int r = 0; r < im.rows; ++r) {
            for (int c = 0; c < im.cols; ++c)
                out << int(quantize_gray(im.at(r, c))) << (c + 1 == im.cols ? "" : " ");
            out << "\n";
        }
    } else {
        std::vector<uint8_t> buf(im.size());
        for (size_t i = 0; i < im.size(); ++i) buf[i] = quantize_gray(im.v[i]);
        out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline Image load_png(const std::string& path) {
    detail::PngReadCtx ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw std::runtime_error("cannot open image: " + path);
    uint8_t sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw std::runtime_error("unsupported format (not a PNG): " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("libpng init failed");

    Image im;
    std::vector<uint8_t> rowbuf;  // allocated before the setjmp scope
    if (setjmp(png_jmpbuf(ctx.png)))
        throw std::runtime_error("libpng failed reading: " + path);
    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    int color = png_get_color_type(ctx.png, ctx.info);
    if (bit_depth == 16)
        throw std::runtime_error("unsupported bit depth (16-bit PNG): " + path);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw std::runtime_error("unsupported format (PNG must be grayscale): " + path);
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    im = Image(int(h), int(w));
    rowbuf.resize(w);
    for (png_uint_32 r = 0; r < h; ++r) {
        png_read_row(ctx.png, rowbuf.data(), nullptr);
        for (png_uint_32 c = 0; c < w; ++c) im.at(int(r), int(c)) = double(rowbuf[c]);
    }
    png_read_end(ctx.png, nullptr);
    return im;
}

inline void save_png(const Image& im, const std::string& path) {
    detail::PngWriteCtx ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw std::runtime_error("cannot write image: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("libpng init failed");
    std::vector<uint8_t> rowbuf(im.cols);
    if (setjmp(png_jmpbuf(ctx.png)))
        throw std::runtime_error("libpng failed writing: " + path);
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, png_uint_32(im.cols), png_uint_32(im.rows), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    for (int r = 0; r < im.rows; ++r) {
        for (int c = 0; c < im.cols; ++c) rowbuf[c] = quantize_gray(im.at(r, c));
        png_write_row(ctx.png, rowbuf.data());
    }
    png_write_end(ctx.png, nullptr);
}

/// Dispatches on file content (magic bytes), not extension.
inline Image load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open image: " + path);
    char head[2] = {0, 0};
    probe.read(head, 2);
    probe.close();
    if (head[0] == 'P' && (head[1] == '5' || head[1] == '2')) return load_pgm(path);
    if (static_cast<uint8_t>(head[0]) == 0x89 && head[1] == 'P') return load_png(path);
    throw std::runtime_error("unsupported format: " + path);
}

inline void save_image(const Image& im, const std::string& path) {
    if (detail::ends_with(path, ".png")) {
        save_png(im, path);
    } else {
        save_pgm(im, path);
    }
}

// 16-bit big-endian PGM, used for depth label grids.
inline void save_pgm16(const std::vector<int>& grid, int rows, int cols,
                       const std::string& path) {
    if (grid.size() != size_t(rows) * size_t(cols))
        throw std::invalid_argument("save_pgm16: grid size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "P5\n" << cols << " " << rows << "\n65535\n";
    for (int v : grid) {
        if (v < 0 || v > 65535) throw std::invalid_argument("save_pgm16: value out of range");
        char bytes[2] = {static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
        out.write(bytes, 2);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<int> load_pgm16(const std::string& path, int& rows, int& cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("expected P5 PGM: " + path);
    cols = detail::pgm_int(in, path);
    rows = detail::pgm_int(in, path);
    int maxval = detail::pgm_int(in, path);
    if (maxval <= 255 || maxval > 65535)
        throw std::runtime_error("expected 16-bit PGM: " + path);
    std::vector<int> grid(size_t(rows) * size_t(cols));
    for (int& v : grid) {
        int hi = in.get(), lo = in.get();
        if (hi == EOF || lo == EOF) throw std::runtime_error("truncated PGM data: " + path);
        v = (hi << 8) | lo;
    }
    return grid;
}

inline CameraParams camera_from_json(const nlohmann::json& j) {
    CameraParams cam;
    for (const char* key : {"P", "R", "T"})
        if (!j.contains(key))
            throw std::runtime_error(std::string("camera JSON missing key \"") + key + "\"");
    auto read9 = [&](const char* key, Mat3& m) {
        auto arr = j.at(key);
        if (!arr.is_array() || arr.size() != 9)
            throw std::runtime_error(std::string("camera JSON key \"") + key +
                                     "\" must hold 9 reals");
        for (int i = 0; i < 9; ++i) m[i] = arr[i].get<double>();
    };
    read9("P", cam.intrinsic);
    read9("R", cam.rotation);
    auto t = j.at("T");
    if (!t.is_array() || t.size() != 3)
        throw std::runtime_error("camera JSON key \"T\" must hold 3 reals");
    for (int i = 0; i < 3; ++i) cam.translation[i] = t[i].get<double>();
    cam.validate();
    return cam;
}

/// A camera file holds either one {"P","R","T"} object or an array of them.
inline std::vector<CameraParams> load_cameras(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open camera file: " + path);
    nlohmann::json j;
    in >> j;
    std::vector<CameraParams> cams;
    if (j.is_array()) {
        for (const auto& e : j) cams.push_back(camera_from_json(e));
    } else {
        cams.push_back(camera_from_json(j));
    }
    return cams;
}

inline void save_camera(const CameraParams& cam, const std::string& path) {
    nlohmann::json j;
    j["P"] = cam.intrinsic;
    j["R"] = cam.rotation;
    j["T"] = cam.translation;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write camera file: " + path);
    out << j.dump(2) << "\n";
}

/// Labels as 16-bit PGM plus a JSON sidecar (<path>.json) carrying the
/// label table and estimation parameters.
inline void save_depth_field(const DepthField& d, const std::string& path) {
    save_pgm16(d.labels, d.rows, d.cols, path);
    nlohmann::json j;
    j["labelTable"] = d.label_table;
    j["lambda"] = d.lambda;
    j["tau"] = d.tau;
    j["L"] = d.label_count();
    j["rectified"] = d.rectified;
    std::ofstream out(path + ".json");
    if (!out) throw std::runtime_error("cannot write depth sidecar: " + path + ".json");
    out << j.dump(2) << "\n";
}

inline DepthField load_depth_field(const std::string& path) {
    DepthField d;
    d.labels = load_pgm16(path, d.rows, d.cols);
    std::ifstream in(path + ".json");
    if (!in) throw std::runtime_error("cannot open depth sidecar: " + path + ".json");
    nlohmann::json j;
    in >> j;
    d.label_table = j.at("labelTable").get<std::vector<double>>();
    d.lambda = j.at("lambda").get<double>();
    d.tau = j.at("tau").get<double>();
    d.rectified = j.value("rectified", false);
    for (int l : d.labels)
        if (l < 0 || l >= d.label_count())
            throw std::runtime_error("depth field label out of table range: " + path);
    return d;
}

/// 8-bit disparity visualization: s/D per pixel (rectified label tables
/// already hold disparities, so they are written as-is).
inline Image disparity_image(const DepthField& d, double s) {
    Image im(d.rows, d.cols);
    for (int r = 0; r < d.rows; ++r)
        for (int c = 0; c < d.cols; ++c) {
            double v = d.value(r, c);
            im.at(r, c) = d.rectified ? v : s / v;
        }
    return im;
}

inline void save_disparity_pgm(const DepthField& d, double s, const std::string& path) {
    save_pgm(clamp_image(disparity_image(d, s)), path);
}

}  // namespace mvjoint
