#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "mvjoint/core.hpp"
#include "mvjoint/log.hpp"
#include "mvjoint/solver.hpp"

namespace mvjoint {

struct RdPoint {
    double bits = 0.0;
    double psnr = 0.0;

    bool operator==(const RdPoint&) const = default;
};

struct RdCurve {
    std::string label;
    std::vector<RdPoint> points;  // ascending in rate

    bool operator==(const RdCurve&) const = default;

    void validate() const {
        for (size_t i = 0; i < points.size(); ++i) {
            if (!(points[i].bits > 0.0) || !std::isfinite(points[i].psnr))
                throw std::invalid_argument("RdCurve: bad point in '" + label + "'");
            if (i > 0 && !(points[i].bits > points[i - 1].bits))
                throw std::invalid_argument("RdCurve: rates must increase in '" + label + "'");
            if (i > 0 && points[i].psnr < points[i - 1].psnr)
                log_info("RdCurve '%s': PSNR drops at rate %.0f", label.c_str(),
                         points[i].bits);
        }
    }

    void sort_by_rate() {
        std::sort(points.begin(), points.end(),
                  [](const RdPoint& a, const RdPoint& b) { return a.bits < b.bits; });
    }
};

namespace detail {

// Least-squares cubic fit of log10(rate) against (psnr - shift), solved via
// the 4x4 normal equations.
inline std::array<double, 4> fit_log_rate(const RdCurve& curve, double shift) {
    const size_t m = curve.points.size();
    double ata[4][4] = {};
    double atb[4] = {};
    for (size_t k = 0; k < m; ++k) {
        double t = curve.points[k].psnr - shift;
        double lr = std::log10(curve.points[k].bits);
        double pw[4] = {1.0, t, t * t, t * t * t};
        for (int i = 0; i < 4; ++i) {
            atb[i] += pw[i] * lr;
            for (int j = 0; j < 4; ++j) ata[i][j] += pw[i] * pw[j];
        }
    }
    // Gaussian elimination with partial pivoting
    int piv[4] = {0, 1, 2, 3};
    for (int col = 0; col < 4; ++col) {
        int best = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(ata[piv[r]][col]) > std::abs(ata[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        double d = ata[piv[col]][col];
        if (std::abs(d) < 1e-14)
            throw std::invalid_argument("bjontegaard_rate: degenerate PSNR values");
        for (int r = col + 1; r < 4; ++r) {
            double f = ata[piv[r]][col] / d;
            for (int c = col; c < 4; ++c) ata[piv[r]][c] -= f * ata[piv[col]][c];
            atb[piv[r]] -= f * atb[piv[col]];
        }
    }
    std::array<double, 4> coef{};
    for (int col = 3; col >= 0; --col) {
        double s = atb[piv[col]];
        for (int c = col + 1; c < 4; ++c) s -= ata[piv[col]][c] * coef[c];
        coef[col] = s / ata[piv[col]][col];
    }
    return coef;
}

inline double poly_integral(const std::array<double, 4>& c, double a, double b) {
    auto F = [&](double t) {
        return c[0] * t + c[1] * t * t / 2 + c[2] * t * t * t / 3 +
               c[3] * t * t * t * t / 4;
    };
    return F(b) - F(a);
}

}  // namespace detail

/// Bjontegaard delta-rate: cubic fits of log10(rate) over PSNR for both
/// curves, the fitted log-rate difference averaged over the overlapping
/// PSNR interval, mapped back to a percentage. Negative means the test
/// curve spends fewer bits at equal quality.
inline double bjontegaard_rate(const RdCurve& reference, const RdCurve& test) {
    if (reference.points.size() < 4 || test.points.size() < 4)
        throw std::invalid_argument("bjontegaard_rate: need at least 4 points per curve");
    reference.validate();
    test.validate();
    auto range = [](const RdCurve& c) {
        double lo = c.points.front().psnr, hi = lo;
        for (const auto& p : c.points) {
            lo = std::min(lo, p.psnr);
            hi = std::max(hi, p.psnr);
        }
        return std::pair{lo, hi};
    };
    auto [rlo, rhi] = range(reference);
    auto [tlo, thi] = range(test);
    double lo = std::max(rlo, tlo), hi = std::min(rhi, thi);
    if (!(hi > lo))
        throw std::invalid_argument("bjontegaard_rate: PSNR ranges do not overlap");

    const double shift = 0.5 * (lo + hi);
    auto cr = detail::fit_log_rate(reference, shift);
    auto ct = detail::fit_log_rate(test, shift);
    std::array<double, 4> diff{};
    for (int i = 0; i < 4; ++i) diff[i] = ct[i] - cr[i];
    double avg = detail::poly_integral(diff, lo - shift, hi - shift) / (hi - lo);
    return (std::pow(10.0, avg) - 1.0) * 100.0;
}

struct RdSweepResult {
    RdCurve independent;
    RdCurve joint;
    std::vector<PipelineResult> runs;  // one per quality point, input order
};

/// One pipeline run per quality value; both curves share the rate points.
/// All views of one run use the same quality (balanced rate allocation).
inline RdSweepResult run_rd_sweep(const std::vector<Image>& views,
                                  const std::vector<int>& qualities,
                                  const DepthProblem& depth_params,
                                  const SolverConfig& solver_cfg,
                                  const PipelineOptions& options = {}) {
    if (qualities.size() < 4)
        throw std::invalid_argument("run_rd_sweep: need at least 4 quality points");
    RdSweepResult res;
    res.independent.label = "independent";
    res.joint.label = "joint";
    res.runs.resize(qualities.size());

    const int workers = std::max(1, solver_cfg.workers);
    for (size_t base = 0; base < qualities.size(); base += size_t(workers)) {
        size_t end = std::min(qualities.size(), base + size_t(workers));
        std::vector<std::future<PipelineResult>> futs;
        for (size_t k = base; k < end; ++k) {
            CodecConfig cc;
            cc.quality = qualities[k];
            futs.push_back(std::async(
                workers > 1 ? std::launch::async : std::launch::deferred,
                [&, cc] { return reconstruct_pipeline(views, cc, depth_params,
                                                      solver_cfg, options); }));
        }
        for (size_t k = base; k < end; ++k) res.runs[k] = futs[k - base].get();
    }
    for (const auto& run : res.runs) {
        res.independent.points.push_back({run.total_bits, run.mean_independent});
        res.joint.points.push_back({run.total_bits, run.mean_joint});
    }
    res.independent.sort_by_rate();
    res.joint.sort_by_rate();
    res.independent.validate();
    res.joint.validate();
    return res;
}

// --- plot emission ---------------------------------------------------------

inline void write_rd_csv(const std::vector<RdCurve>& curves, const std::string& path) {
    if (curves.empty()) throw std::invalid_argument("write_rd_csv: no curves");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "rate_bits,psnr_db,label\n";
    out.precision(12);
    for (const auto& c : curves)
        for (const auto& p : c.points)
            out << p.bits << "," << p.psnr << "," << c.label << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<RdCurve> parse_rd_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "rate_bits,psnr_db,label")
        throw std::runtime_error("bad RD CSV header: " + path);
    std::vector<RdCurve> curves;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string bits_s, psnr_s, label;
        if (!std::getline(ss, bits_s, ',') || !std::getline(ss, psnr_s, ',') ||
            !std::getline(ss, label))
            throw std::runtime_error("bad RD CSV row: " + line);
        RdPoint p{std::stod(bits_s), std::stod(psnr_s)};
        auto it = std::find_if(curves.begin(), curves.end(),
                               [&](const RdCurve& c) { return c.label == label; });
        if (it == curves.end()) {
            curves.push_back({label, {p}});
        } else {
            it->points.push_back(p);
        }
    }
    return curves;
}

/// Static SVG 1.1 line chart, one polyline per curve, axes labeled in bits
/// and dB.
inline void write_rd_svg(const std::vector<RdCurve>& curves, const std::string& path) {
    if (curves.empty()) throw std::invalid_argument("write_rd_svg: no curves");
    double blo = 1e300, bhi = -1e300, plo = 1e300, phi = -1e300;
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            blo = std::min(blo, p.bits);
            bhi = std::max(bhi, p.bits);
            plo = std::min(plo, p.psnr);
            phi = std::max(phi, p.psnr);
        }
    if (bhi <= blo) bhi = blo + 1.0;
    if (phi <= plo) phi = plo + 1.0;
    const double W = 640, H = 480, ml = 70, mr = 20, mt = 20, mb = 50;
    auto sx = [&](double bits) { return ml + (bits - blo) / (bhi - blo) * (W - ml - mr); };
    auto sy = [&](double psnr) { return H - mb - (psnr - plo) / (phi - plo) * (H - mt - mb); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
        << "\" height=\"" << H << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
        << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\">bits</text>\n"
        << "<text x=\"18\" y=\"" << (mt + (H - mt - mb) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (mt + (H - mt - mb) / 2) << ")\">dB</text>\n";
    for (size_t ci = 0; ci < curves.size(); ++ci) {
        const char* color = palette[ci % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (size_t k = 0; k < curves[ci].points.size(); ++k) {
            if (k) out << " ";
            out << sx(curves[ci].points[k].bits) << "," << sy(curves[ci].points[k].psnr);
        }
        out << "\"/>\n";
        out << "<text x=\"" << W - mr - 150 << "\" y=\"" << mt + 18 * (ci + 1)
            << "\" fill=\"" << color << "\">" << curves[ci].label << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Writes <base>.csv and <base>.svg (a trailing .csv/.svg on base is
/// stripped first).
inline void emit_plot(const std::vector<RdCurve>& curves, const std::string& base_path) {
    if (curves.empty()) throw std::invalid_argument("emit_plot: no curves");
    std::string base = base_path;
    for (const char* ext : {".csv", ".svg"}) {
        size_t len = std::strlen(ext);
        if (base.size() > len && base.compare(base.size() - len, len, ext) == 0)
            base.resize(base.size() - len);
    }
    write_rd_csv(curves, base + ".csv");
    write_rd_svg(curves, base + ".svg");
}

}  // namespace mvjoint
