#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "mvjoint/camera.hpp"
#include "mvjoint/core.hpp"
#include "mvjoint/io.hpp"
#include "oracles.hpp"

using namespace mvjoint;

namespace {
std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "mvjoint_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}
}  // namespace

TEST_CASE("reshape flattens row-major") {
    Image im(2, 2);
    im.at(0, 0) = 1;
    im.at(0, 1) = 2;
    im.at(1, 0) = 3;
    im.at(1, 1) = 4;
    CHECK(reshape(im) == ImageVector{1, 2, 3, 4});

    Image one(1, 1, 7.0);
    CHECK(reshape(one) == ImageVector{7});
}

TEST_CASE("reshape_inverse rebuilds the image") {
    Image im = reshape_inverse({1, 2, 3, 4}, 2, 2);
    CHECK(im.at(0, 0) == 1);
    CHECK(im.at(0, 1) == 2);
    CHECK(im.at(1, 0) == 3);
    CHECK(im.at(1, 1) == 4);
    CHECK(reshape_inverse({5}, 1, 1).at(0, 0) == 5);
    CHECK_THROWS_AS(reshape_inverse({1, 2, 3}, 2, 2), std::invalid_argument);
}

TEST_CASE("reshape round-trips bit-exactly") {
    std::mt19937 eng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        Image im = oracle::random_image(16, 16, eng);
        Image back = reshape_inverse(reshape(im), 16, 16);
        REQUIRE(back.v == im.v);
    }
}

TEST_CASE("psnr examples") {
    Image a(2, 2, 0.0), b(2, 2, 0.0);
    CHECK(psnr(a, b) == kPsnrCapDb);

    Image w(3, 5, 0.0), z(3, 5, 255.0);
    CHECK(psnr(w, z) == Approx(0.0).margin(1e-12));

    Image c(2, 2, 0.0), d(2, 2, 0.0);
    d.at(0, 0) = 10.0;  // MSE 25
    CHECK(psnr(c, d) == Approx(10.0 * std::log10(65025.0 / 25.0)).epsilon(1e-12));
    CHECK(psnr(c, d) == Approx(34.1512).margin(1e-3));

    Image e(2, 3, 0.0);
    CHECK_THROWS_AS(psnr(a, e), std::invalid_argument);
}

TEST_CASE("psnr is symmetric and decreases with noise") {
    std::mt19937 eng(7);
    Image base = oracle::random_image(24, 24, eng, 60, 200);
    Image other = oracle::random_image(24, 24, eng, 60, 200);
    CHECK(psnr(base, other) == psnr(other, base));

    double last = kPsnrCapDb + 1;
    for (double amp : {4.0, 8.0, 16.0, 32.0, 64.0}) {
        Image noisy = base;
        for (double& v : noisy.v)
            v += amp * (double(eng()) / 4294967296.0 * 2.0 - 1.0);
        double p = psnr(base, noisy);
        CHECK(p < last);
        last = p;
    }
}

TEST_CASE("pgm round trip is lossless for integer samples") {
    std::mt19937 eng(11);
    Image im = oracle::random_image(32, 32, eng);
    for (double& v : im.v) v = std::floor(v);
    std::string p5 = temp_path("roundtrip.pgm");
    save_pgm(im, p5);
    Image back = load_pgm(p5);
    REQUIRE(back.same_dims(im));
    CHECK(back.v == im.v);
}

TEST_CASE("P2 twin matches P5") {
    std::mt19937 eng(12);
    Image im = oracle::random_image(9, 13, eng);
    for (double& v : im.v) v = std::floor(v);
    std::string p5 = temp_path("twin_p5.pgm"), p2 = temp_path("twin_p2.pgm");
    save_pgm(im, p5, false);
    save_pgm(im, p2, true);
    CHECK(load_image(p5).v == load_image(p2).v);
}

TEST_CASE("16-bit PGM rejected by load_image") {
    std::string path = temp_path("deep.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n2 2\n65535\n";
        for (int i = 0; i < 8; ++i) out.put(char(i));
    }
    CHECK_THROWS_WITH(load_image(path), Catch::Matchers::Contains("unsupported bit depth"));
}

TEST_CASE("truncated and alien files are rejected") {
    std::string path = temp_path("trunc.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n8 8\n255\n";
        out.put('x');
    }
    CHECK_THROWS_WITH(load_image(path), Catch::Matchers::Contains("truncated"));

    std::string alien = temp_path("alien.bin");
    std::ofstream(alien, std::ios::binary) << "GIF89a";
    CHECK_THROWS_WITH(load_image(alien), Catch::Matchers::Contains("unsupported format"));
}

TEST_CASE("png grayscale round trip") {
    std::mt19937 eng(13);
    Image im = oracle::random_image(20, 31, eng);
    for (double& v : im.v) v = std::floor(v);
    std::string path = temp_path("gray.png");
    save_png(im, path);
    Image back = load_image(path);  // via magic sniffing
    REQUIRE(back.same_dims(im));
    CHECK(back.v == im.v);
}

TEST_CASE("camera json round trip and projection identities") {
    CameraParams cam;
    cam.intrinsic = {50, 0, 4, 0, 50, 6, 0, 0, 1};
    cam.rotation = mat3_identity();
    cam.translation = {0.5, -0.25, 1.0};
    std::string path = temp_path("cam.json");
    save_camera(cam, path);
    auto cams = load_cameras(path);
    REQUIRE(cams.size() == 1);
    for (int i = 0; i < 9; ++i) {
        CHECK(cams[0].intrinsic[i] == Approx(cam.intrinsic[i]));
        CHECK(cams[0].rotation[i] == Approx(cam.rotation[i]));
    }

    // identical cameras: any depth maps a pixel to itself
    for (double depth : {0.5, 3.0, 1e6}) {
        PixelProjection p = project_pixel(3, 9, depth, cam, cam);
        CHECK_FALSE(p.degenerate);
        CHECK(p.row == 3);
        CHECK(p.col == 9);
    }
}

TEST_CASE("camera file may hold an array of views") {
    CameraParams a, b;
    a.intrinsic = {30, 0, 0, 0, 30, 0, 0, 0, 1};
    b = a;
    b.translation = {0, 2, 0};
    std::string path = temp_path("rig.json");
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& cam : {a, b}) {
            nlohmann::json j;
            j["P"] = cam.intrinsic;
            j["R"] = cam.rotation;
            j["T"] = cam.translation;
            arr.push_back(j);
        }
        std::ofstream(path) << arr.dump();
    }
    auto cams = load_cameras(path);
    REQUIRE(cams.size() == 2);
    CHECK(cams[1].translation[1] == 2.0);

    std::string bad = temp_path("badcam.json");
    std::ofstream(bad) << "{\"P\": [1,2,3], \"R\": [1,0,0,0,1,0,0,0,1], \"T\": [0,0,0]}";
    CHECK_THROWS_WITH(load_cameras(bad), Catch::Matchers::Contains("\"P\""));
    std::string missing = temp_path("missingcam.json");
    std::ofstream(missing) << "{\"P\": [1,0,0,0,1,0,0,0,1]}";
    CHECK_THROWS_WITH(load_cameras(missing), Catch::Matchers::Contains("missing"));
}

TEST_CASE("rectified pinhole pair shifts by focal*baseline/depth") {
    double f = 80.0, b = 2.0;
    CameraParams left, right;
    left.intrinsic = {f, 0, 0, 0, f, 0, 0, 0, 1};
    right = left;
    right.translation = {0.0, b, 0.0};  // baseline along the column axis
    for (double depth : {4.0, 10.0, 32.0}) {
        PixelProjection p = project_pixel(5, 20, depth, left, right);
        CHECK_FALSE(p.degenerate);
        CHECK(p.row == 5);
        CHECK(p.col == 20 - int(std::lround(f * b / depth)));
    }
    // points at infinity stop moving
    PixelProjection far = project_pixel(5, 20, 1e9, left, right);
    CHECK(far.col == 20);
}

TEST_CASE("degenerate projection is flagged") {
    CameraParams a, b;
    b.translation = {0, 0, 10.0};  // destination camera ahead of the point
    PixelProjection p = project_pixel(0, 0, 1.0, a, b);
    CHECK(p.degenerate);
}

TEST_CASE("mat3 inverse and singularity") {
    Mat3 m = {2, 1, 0, 1, 3, 1, 0, 1, 2};
    Mat3 inv = mat3_inverse(m);
    Vec3 v = {1, 2, 3};
    Vec3 round = mat3_mul_vec(m, mat3_mul_vec(inv, v));
    for (int i = 0; i < 3; ++i) CHECK(round[i] == Approx(v[i]).margin(1e-12));
    Mat3 sing = {1, 2, 3, 2, 4, 6, 0, 0, 1};
    CHECK_THROWS_AS(mat3_inverse(sing), std::invalid_argument);
}

TEST_CASE("depth label table samples inverse depth uniformly") {
    auto table = make_depth_label_table(5, 2.0, 10.0);
    REQUIRE(table.size() == 5);
    CHECK(table.front() == Approx(10.0));
    CHECK(table.back() == Approx(2.0));
    double step = (1.0 / 2.0 - 1.0 / 10.0) / 4.0;
    for (size_t l = 0; l < 5; ++l)
        CHECK(1.0 / table[l] == Approx(1.0 / 10.0 + step * double(l)));
    for (size_t l = 1; l < 5; ++l) CHECK(1.0 / table[l] > 1.0 / table[l - 1]);
}

TEST_CASE("depth field io round trip") {
    DepthField d;
    d.rows = 3;
    d.cols = 4;
    d.labels = {0, 1, 2, 3, 3, 2, 1, 0, 1, 1, 2, 2};
    d.label_table = {1.0, 2.0, 4.0, 8.0};
    d.rectified = true;
    d.lambda = 50;
    d.tau = 4;
    std::string path = temp_path("depth.pgm");
    save_depth_field(d, path);
    DepthField back = load_depth_field(path);
    CHECK(back.labels == d.labels);
    CHECK(back.label_table == d.label_table);
    CHECK(back.rectified);
    CHECK(back.lambda == d.lambda);
    CHECK(back.tau == d.tau);

    Image disp = disparity_image(back, 1.0);
    CHECK(disp.at(0, 1) == Approx(2.0));  // rectified tables hold disparities
}

TEST_CASE("image constructor rejects bad dims") {
    CHECK_THROWS_AS(Image(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Image(4, -1), std::invalid_argument);
}
