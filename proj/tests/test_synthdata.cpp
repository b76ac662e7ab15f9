#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "xferlab/synthdata.hpp"

using namespace xferlab;
using testutil::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("ground-truth map: shapes, determinism, width ranges") {
    RbfTarget t = make_target(3, 7, 2, 12345);
    CHECK(t.in_dim() == 3);
    CHECK(t.out_dim() == 2);
    CHECK(t.centers.rows() == 7);
    CHECK(t.centers.cols() == 3);
    CHECK(t.sigma_sq.size() == 7);
    CHECK(t.w.rows() == 2);
    CHECK(t.w.cols() == 7);
    CHECK(t.b.size() == 2);
    for (double s : t.sigma_sq) {
        CHECK(s > 1e-3);
        CHECK(s < 100.0);
    }

    RbfTarget again = make_target(3, 7, 2, 12345);
    CHECK(testutil::max_abs_diff(t.centers, again.centers) == 0.0);
    CHECK(testutil::max_abs_diff(t.w, again.w) == 0.0);
    RbfTarget other = make_target(3, 7, 2, 54321);
    CHECK(testutil::max_abs_diff(t.centers, other.centers) > 0.0);

    RbfTarget wide = make_target(2, 5, 1, 1, 50.0);
    for (double s : wide.sigma_sq) {
        CHECK(s > 50.0);
        CHECK(s < 100.0);
    }
    CHECK_THROWS_AS(make_target(2, 5, 1, 1, 0.0), InvalidInput);
    CHECK_THROWS_AS(make_target(0, 5, 1, 1), InvalidInput);
}

TEST_CASE("ground-truth map evaluates its radial expansion") {
    RbfTarget t = make_target(2, 4, 3, 777);
    Rng rng(88);
    for (int trial = 0; trial < 20; ++trial) {
        Vector x = testutil::rand_vec(rng, 2);
        Vector feats = t.features(x);
        REQUIRE(feats.size() == 4);
        Vector expect(3, 0.0);
        for (std::size_t i = 0; i < 4; ++i) {
            double sq = 0.0;
            for (std::size_t c = 0; c < 2; ++c) {
                double diff = x[c] - t.centers(i, c);
                sq += diff * diff;
            }
            double phi = std::exp(-sq / t.sigma_sq[i]);
            CHECK(std::abs(feats[i] - phi) <= 1e-14);
            for (std::size_t o = 0; o < 3; ++o) expect[o] += t.w(o, i) * phi;
        }
        for (std::size_t o = 0; o < 3; ++o) expect[o] += t.b[o];
        CHECK(testutil::max_abs_diff(t.eval(x), expect) <= 1e-13);
    }
    Vector bad(3, 0.0);
    CHECK_THROWS_AS(t.eval(bad), InvalidInput);
}

TEST_CASE("input mixture: centers in the unit box, deterministic") {
    MixtureSpec mix = make_mixture(5, 3, 999);
    CHECK(mix.components() == 5);
    CHECK(mix.dim() == 3);
    for (std::size_t i = 0; i < mix.centers.size(); ++i) {
        CHECK(mix.centers.data()[i] > -0.5);
        CHECK(mix.centers.data()[i] < 0.5);
    }
    MixtureSpec again = make_mixture(5, 3, 999);
    CHECK(testutil::max_abs_diff(mix.centers, again.centers) == 0.0);
    CHECK_THROWS_AS(make_mixture(0, 3, 1), InvalidInput);
}

TEST_CASE("sampling: labels are exact target evaluations") {
    RbfTarget t = make_target(3, 6, 2, 31);
    MixtureSpec mix = make_mixture(4, 3, 32);
    Dataset data = sample_dataset(t, mix, 50, 33);
    CHECK(data.size() == 50);
    CHECK(data.in_dim() == 3);
    CHECK(data.target_dim() == 2);
    for (std::size_t r = 0; r < data.size(); ++r) {
        Vector y = t.eval(data.input_row(r));
        CHECK(testutil::max_abs_diff(y, data.target_row(r)) == 0.0);
    }
    Dataset again = sample_dataset(t, mix, 50, 33);
    CHECK(testutil::max_abs_diff(data.x(), again.x()) == 0.0);
    Dataset moved = sample_dataset(t, mix, 50, 34);
    CHECK(testutil::max_abs_diff(data.x(), moved.x()) > 0.0);

    CHECK_THROWS_AS(sample_dataset(t, mix, 1, 33), InvalidInput);
    MixtureSpec off = make_mixture(4, 2, 32);
    CHECK_THROWS_AS(sample_dataset(t, off, 10, 33), InvalidInput);
}

TEST_CASE("dataset files: lossless round trip, stable bytes, hard failures") {
    TempDir tmp("xferlab_dataset");
    RbfTarget t = make_target(2, 5, 2, 41);
    MixtureSpec mix = make_mixture(3, 2, 42);
    Dataset data = sample_dataset(t, mix, 12, 43);

    std::string path = tmp.file("data.csv");
    save_dataset(data, path);
    Dataset back = load_dataset(path);
    CHECK(back.size() == data.size());
    CHECK(testutil::max_abs_diff(back.x(), data.x()) == 0.0);
    CHECK(testutil::max_abs_diff(back.y(), data.y()) == 0.0);

    std::string twice = tmp.file("data2.csv");
    save_dataset(back, twice);
    CHECK(slurp(path) == slurp(twice));

    std::string header = slurp(path).substr(0, slurp(path).find('\n'));
    CHECK(header == "x0,x1,y0,y1");

    CHECK_THROWS_AS(load_dataset(tmp.file("absent.csv")), IoError);
    spit(tmp.file("bad_header.csv"), "x0,q1,y0\n1,2,3\n");
    CHECK_THROWS_AS(load_dataset(tmp.file("bad_header.csv")), IoError);
    spit(tmp.file("bad_width.csv"), "x0,x1,y0\n1,2,3\n4,5\n");
    CHECK_THROWS_AS(load_dataset(tmp.file("bad_width.csv")), IoError);
    spit(tmp.file("bad_cell.csv"), "x0,x1,y0\n1,zap,3\n");
    CHECK_THROWS_AS(load_dataset(tmp.file("bad_cell.csv")), IoError);
    spit(tmp.file("empty.csv"), "");
    CHECK_THROWS_AS(load_dataset(tmp.file("empty.csv")), IoError);

    // Inputs-only datasets keep no label columns.
    Dataset unlabeled(data.x(), Matrix());
    std::string upath = tmp.file("unlabeled.csv");
    save_dataset(unlabeled, upath);
    CHECK(slurp(upath).substr(0, slurp(upath).find('\n')) == "x0,x1");
    Dataset uback = load_dataset(upath);
    CHECK(!uback.has_targets());
    CHECK(testutil::max_abs_diff(uback.x(), data.x()) == 0.0);
}

TEST_CASE("target files: lossless round trip with provenance metadata") {
    TempDir tmp("xferlab_target");
    RbfTarget t = make_target(3, 4, 2, 51, 0.5);
    std::string path = tmp.file("target.json");
    save_target(t, path);

    RbfTarget back = load_target(path);
    CHECK(testutil::max_abs_diff(back.centers, t.centers) == 0.0);
    CHECK(testutil::max_abs_diff(back.sigma_sq, t.sigma_sq) == 0.0);
    CHECK(testutil::max_abs_diff(back.w, t.w) == 0.0);
    CHECK(testutil::max_abs_diff(back.b, t.b) == 0.0);
    CHECK(back.sigma_sq_floor == t.sigma_sq_floor);

    nlohmann::json j = nlohmann::json::parse(slurp(path));
    CHECK(j.at("metadata").at("sigma_sq_floor").get<double>() == 0.5);
    CHECK(j.at("metadata").at("mixture_weights").get<std::string>() == "uniform");

    CHECK_THROWS_AS(load_target(tmp.file("absent.json")), IoError);
    spit(tmp.file("broken.json"), "{ not json");
    CHECK_THROWS_AS(load_target(tmp.file("broken.json")), IoError);
    spit(tmp.file("partial.json"), "{\"centers\": [[0.1]], \"sigma_sq\": [1.0]}");
    CHECK_THROWS_AS(load_target(tmp.file("partial.json")), IoError);
}
