#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "mvjoint/eval.hpp"
#include "oracles.hpp"

using namespace mvjoint;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "mvjoint_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

// Independent BD-rate: exact cubic interpolation through 4 points (long
// double Vandermonde solve) and Simpson integration of the difference.
double bd_rate_oracle(const RdCurve& ref, const RdCurve& test) {
    auto interp = [](const RdCurve& c) {
        std::array<long double, 4> psnr{}, lr{};
        for (int i = 0; i < 4; ++i) {
            psnr[i] = c.points[i].psnr;
            lr[i] = std::log10((long double)c.points[i].bits);
        }
        // solve V a = lr with V[i][k] = psnr[i]^k
        long double A[4][5];
        for (int i = 0; i < 4; ++i) {
            long double p = 1.0L;
            for (int k = 0; k < 4; ++k) {
                A[i][k] = p;
                p *= psnr[i];
            }
            A[i][4] = lr[i];
        }
        for (int col = 0; col < 4; ++col) {
            int piv = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs((double)A[r][col]) > std::abs((double)A[piv][col])) piv = r;
            for (int k = 0; k < 5; ++k) std::swap(A[col][k], A[piv][k]);
            for (int r = col + 1; r < 4; ++r) {
                long double f = A[r][col] / A[col][col];
                for (int k = col; k < 5; ++k) A[r][k] -= f * A[col][k];
            }
        }
        std::array<long double, 4> a{};
        for (int col = 3; col >= 0; --col) {
            long double s = A[col][4];
            for (int k = col + 1; k < 4; ++k) s -= A[col][k] * a[k];
            a[col] = s / A[col][col];
        }
        return a;
    };
    auto ra = interp(ref);
    auto ta = interp(test);
    auto lo = std::max(std::min_element(ref.points.begin(), ref.points.end(),
                                        [](auto& a, auto& b) { return a.psnr < b.psnr; })
                           ->psnr,
                       std::min_element(test.points.begin(), test.points.end(),
                                        [](auto& a, auto& b) { return a.psnr < b.psnr; })
                           ->psnr);
    auto hi = std::min(std::max_element(ref.points.begin(), ref.points.end(),
                                        [](auto& a, auto& b) { return a.psnr < b.psnr; })
                           ->psnr,
                       std::max_element(test.points.begin(), test.points.end(),
                                        [](auto& a, auto& b) { return a.psnr < b.psnr; })
                           ->psnr);
    auto eval_diff = [&](long double x) {
        long double vr = 0, vt = 0, p = 1;
        for (int k = 0; k < 4; ++k) {
            vr += ra[k] * p;
            vt += ta[k] * p;
            p *= x;
        }
        return vt - vr;
    };
    const int steps = 10000;
    long double h = (hi - lo) / steps, sum = 0;
    for (int i = 0; i <= steps; ++i) {
        long double w = (i == 0 || i == steps) ? 1 : (i % 2 ? 4 : 2);
        sum += w * eval_diff(lo + h * i);
    }
    long double avg = sum * h / 3.0L / (hi - lo);
    return double((std::pow(10.0L, avg) - 1.0L) * 100.0L);
}

}  // namespace

TEST_CASE("bjontegaard of identical curves is exactly zero") {
    RdCurve a{"a", {{1000, 28}, {2000, 31}, {4000, 34}, {8000, 36}}};
    CHECK(bjontegaard_rate(a, a) == 0.0);
}

TEST_CASE("constant rate scaling integrates exactly") {
    RdCurve ref{"ref", {{1000, 28}, {2000, 31}, {4000, 34}, {8000, 36}}};
    RdCurve test{"test", {}};
    for (const auto& p : ref.points) test.points.push_back({p.bits * 0.9, p.psnr});
    CHECK(bjontegaard_rate(ref, test) == Approx(-10.0).margin(0.05));

    RdCurve up{"up", {}};
    for (const auto& p : ref.points) up.points.push_back({p.bits * 1.25, p.psnr});
    CHECK(bjontegaard_rate(ref, up) == Approx(25.0).margin(0.1));
}

TEST_CASE("bjontegaard matches the interpolation oracle") {
    RdCurve ref{"ref", {{900, 27.1}, {1800, 30.4}, {3500, 33.3}, {7200, 35.2}}};
    RdCurve test{"test", {{700, 27.5}, {1500, 30.2}, {3200, 33.8}, {6900, 35.6}}};
    double got = bjontegaard_rate(ref, test);
    double want = bd_rate_oracle(ref, test);
    CHECK(got == Approx(want).margin(0.1));
}

TEST_CASE("bjontegaard antisymmetry in sign") {
    RdCurve ref{"ref", {{900, 27.1}, {1800, 30.4}, {3500, 33.3}, {7200, 35.2}}};
    RdCurve test{"test", {{700, 27.5}, {1500, 30.2}, {3200, 33.8}, {6900, 35.6}}};
    double ab = bjontegaard_rate(ref, test);
    double ba = bjontegaard_rate(test, ref);
    if (std::abs(ab) > 0.5) CHECK(ab * ba < 0.0);
}

TEST_CASE("bjontegaard input validation") {
    RdCurve small{"s", {{100, 30}, {200, 32}, {400, 34}}};
    RdCurve other{"o", {{100, 30}, {200, 32}, {400, 34}, {800, 36}}};
    CHECK_THROWS_AS(bjontegaard_rate(small, other), std::invalid_argument);

    RdCurve low{"low", {{100, 10}, {200, 12}, {400, 14}, {800, 16}}};
    RdCurve high{"high", {{100, 30}, {200, 32}, {400, 34}, {800, 36}}};
    CHECK_THROWS_WITH(bjontegaard_rate(low, high),
                      Catch::Matchers::Contains("overlap"));
}

TEST_CASE("rd curve validation") {
    RdCurve bad{"bad", {{200, 30}, {100, 32}}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    RdCurve zero{"zero", {{0, 30}}};
    CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}

TEST_CASE("csv round trip") {
    std::vector<RdCurve> curves = {
        {"independent", {{1000, 28.5}, {2000, 31.25}, {4000, 33.125}, {8000, 36}}},
        {"joint", {{1000, 29.5}, {2000, 32}, {4000, 34}, {8000, 36.5}}}};
    std::string path = temp_path("rd.csv");
    write_rd_csv(curves, path);
    auto back = parse_rd_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == curves[0]);
    CHECK(back[1] == curves[1]);
}

TEST_CASE("svg structure: one polyline per curve, one vertex per point") {
    std::vector<RdCurve> curves = {{"only", {{1000, 30}, {2000, 33}}}};
    std::string path = temp_path("plot.svg");
    write_rd_svg(curves, path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    size_t polylines = 0, pos = 0;
    while ((pos = text.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        ++pos;
    }
    CHECK(polylines == 1);
    size_t pts = text.find("points=\"");
    REQUIRE(pts != std::string::npos);
    size_t end = text.find('"', pts + 8);
    std::string coords = text.substr(pts + 8, end - pts - 8);
    size_t vertices = 1, sp = 0;
    while ((sp = coords.find(' ', sp)) != std::string::npos) {
        ++vertices;
        ++sp;
    }
    CHECK(vertices == 2);
    CHECK(text.find(">bits<") != std::string::npos);
    CHECK(text.find(">dB<") != std::string::npos);
}

TEST_CASE("emit_plot writes the pair and rejects empty input") {
    std::vector<RdCurve> curves = {{"c", {{1000, 30}, {2000, 33}}}};
    std::string base = temp_path("emit");
    emit_plot(curves, base + ".csv");  // extension stripped
    CHECK(std::filesystem::exists(base + ".csv"));
    CHECK(std::filesystem::exists(base + ".svg"));
    CHECK_THROWS_AS(emit_plot({}, base), std::invalid_argument);
}
