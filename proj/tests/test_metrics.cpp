#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "vsal/metrics.hpp"
#include "vsal/rng.hpp"

using namespace vsal;

namespace {

// ---- brute-force oracles, independent of src/metrics.cpp ----

// Exhaustive-threshold ROC: every distinct map value is a threshold; the
// curve is traced with strictly-above and at-or-above points and integrated
// by trapezoid.
double auc_oracle(const GrayMap& s, const std::vector<Fixation>& fixations) {
    std::set<std::size_t> pos;
    for (const auto& f : fixations)
        if (f.x >= 0 && f.x < s.w && f.y >= 0 && f.y < s.h)
            pos.insert(static_cast<std::size_t>(f.y) * s.w + f.x);
    std::int64_t np = static_cast<std::int64_t>(pos.size());
    std::int64_t nn = s.size() - np;
    if (nn == 0) return 0.5;
    std::set<double, std::greater<double>> thresholds(s.v.begin(), s.v.end());
    double area = 0, pf = 0, pt = 0;
    auto point = [&](double fp, double tp) {
        area += 0.5 * (tp + pt) * (fp - pf);
        pf = fp;
        pt = tp;
    };
    for (double th : thresholds) {
        std::int64_t ts = 0, fs = 0, tl = 0, fl = 0;
        for (std::size_t i = 0; i < s.v.size(); ++i) {
            if (s.v[i] < th) continue;
            bool p = pos.count(i) != 0;
            if (s.v[i] > th) (p ? ts : fs)++;
            (p ? tl : fl)++;
        }
        point((double)fs / nn, (double)ts / np);
        point((double)fl / nn, (double)tl / np);
    }
    point(1.0, 1.0);
    return area;
}

double nss_oracle(const GrayMap& s, const std::vector<Fixation>& fixations) {
    double mean = 0;
    for (double v : s.v) mean += v;
    mean /= s.size();
    double var = 0;
    for (double v : s.v) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / s.size());
    double acc = 0;
    int n = 0;
    for (const auto& f : fixations) {
        acc += (s.at(f.y, f.x) - mean) / sd;
        ++n;
    }
    return acc / n;
}

double cc_oracle(const GrayMap& a, const GrayMap& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        ma += a.v[i];
        mb += b.v[i];
    }
    ma /= a.size();
    mb /= b.size();
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        cov += (a.v[i] - ma) * (b.v[i] - mb);
        va += (a.v[i] - ma) * (a.v[i] - ma);
        vb += (b.v[i] - mb) * (b.v[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

double kl_oracle(const GrayMap& g, const GrayMap& s) {
    double sg = 0, ss = 0;
    for (double v : g.v) sg += v;
    for (double v : s.v) ss += v;
    double acc = 0;
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        double gi = g.v[i] / sg, si = s.v[i] / ss;
        acc += gi * (std::log(std::max(gi, 1e-8)) - std::log(std::max(si, 1e-8)));
    }
    return acc;
}

GrayMap random_map(int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
    GrayMap m(h, w);
    for (auto& v : m.v) v = rng.uniform(lo, hi);
    return m;
}

std::vector<Fixation> random_fixations(int h, int w, int count, Rng& rng) {
    std::vector<Fixation> out;
    for (int i = 0; i < count; ++i) {
        Fixation f;
        f.x = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
        f.y = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
        out.push_back(f);
    }
    return out;
}

}  // namespace

TEST_CASE("auc: unique max at the only fixation scores 1") {
    GrayMap s(4, 4, 0.1);
    s.at(2, 1) = 0.9;
    std::vector<Fixation> fix{{0, 1, 2, 0}};
    CHECK(auc_judd(s, fix) == doctest::Approx(1.0));
}

TEST_CASE("auc: constant map scores 0.5") {
    GrayMap s(5, 5, 0.42);
    std::vector<Fixation> fix{{0, 2, 2, 0}, {0, 4, 1, 0}};
    CHECK(auc_judd(s, fix) == doctest::Approx(0.5));
}

TEST_CASE("auc requires a fixation inside the map") {
    GrayMap s(4, 4, 0.1);
    CHECK_THROWS_AS(auc_judd(s, {}), UsageError);
    CHECK_THROWS_AS(auc_judd(s, {{0, 9, 9, 0}}), UsageError);
}

TEST_CASE("auc matches the exhaustive-threshold oracle on 100 random cases") {
    Rng rng(401);
    for (int i = 0; i < 100; ++i) {
        GrayMap s = random_map(16, 16, rng);
        auto fix = random_fixations(16, 16, 1 + static_cast<int>(rng.below(20)), rng);
        CHECK(auc_judd(s, fix) == doctest::Approx(auc_oracle(s, fix)).epsilon(1e-6));
    }
}

TEST_CASE("auc survives ties between fixated and background values") {
    Rng rng(403);
    for (int i = 0; i < 50; ++i) {
        GrayMap s(8, 8);
        for (auto& v : s.v) v = static_cast<double>(rng.below(5)) / 4.0;  // heavy ties
        auto fix = random_fixations(8, 8, 1 + static_cast<int>(rng.below(6)), rng);
        CHECK(auc_judd(s, fix) == doctest::Approx(auc_oracle(s, fix)).epsilon(1e-9));
    }
}

TEST_CASE("auc is invariant under strictly monotonic transforms") {
    Rng rng(405);
    GrayMap s = random_map(12, 12, rng, 0.1, 1.0);
    auto fix = random_fixations(12, 12, 8, rng);
    GrayMap cubed = s;
    for (auto& v : cubed.v) v = v * v * v;
    CHECK(auc_judd(s, fix) == doctest::Approx(auc_judd(cubed, fix)).epsilon(1e-12));
}

TEST_CASE("nss hand-standardization example") {
    // map [1,1,1,3]: mean 1.5, population sd sqrt(0.75); value at the 3
    GrayMap s(2, 2);
    s.v = {1, 1, 1, 3};
    std::vector<Fixation> fix{{0, 1, 1, 0}};
    CHECK(nss(s, fix) == doctest::Approx(1.5 / std::sqrt(0.75)));
    CHECK(nss(s, fix) == doctest::Approx(1.7320508).epsilon(1e-6));
}

TEST_CASE("nss over fixations covering every pixel once is zero") {
    Rng rng(407);
    GrayMap s = random_map(6, 6, rng);
    std::vector<Fixation> fix;
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) fix.push_back({0, x, y, 0});
    CHECK(nss(s, fix) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nss: zero-variance map warns and returns 0") {
    GrayMap s(3, 3, 1.0);
    bool warned = false;
    CHECK(nss(s, {{0, 1, 1, 0}}, &warned) == 0.0);
    CHECK(warned);
}

TEST_CASE("nss and cc are invariant under positive affine transforms") {
    Rng rng(409);
    GrayMap s = random_map(10, 10, rng);
    GrayMap g = random_map(10, 10, rng);
    auto fix = random_fixations(10, 10, 7, rng);
    GrayMap scaled = s;
    for (auto& v : scaled.v) v = 3.7 * v + 11.0;
    CHECK(nss(s, fix) == doctest::Approx(nss(scaled, fix)).epsilon(1e-9));
    CHECK(cc_metric(s, g) == doctest::Approx(cc_metric(scaled, g)).epsilon(1e-9));
}

TEST_CASE("cc basics and the anticorrelated case") {
    Rng rng(411);
    GrayMap s = random_map(8, 8, rng);
    CHECK(cc_metric(s, s) == doctest::Approx(1.0));
    GrayMap neg = s;
    for (auto& v : neg.v) v = -v;
    CHECK(cc_metric(s, neg) == doctest::Approx(-1.0));
    bool warned = false;
    GrayMap flat(8, 8, 2.0);
    CHECK(cc_metric(s, flat, &warned) == 0.0);
    CHECK(warned);
}

TEST_CASE("nss, cc, kl match their direct-formula oracles on 100 random cases") {
    Rng rng(413);
    for (int i = 0; i < 100; ++i) {
        GrayMap s = random_map(16, 16, rng, 0.01, 1.0);
        GrayMap g = random_map(16, 16, rng, 0.01, 1.0);
        auto fix = random_fixations(16, 16, 1 + static_cast<int>(rng.below(20)), rng);
        CHECK(nss(s, fix) == doctest::Approx(nss_oracle(s, fix)).epsilon(1e-10));
        CHECK(cc_metric(s, g) == doctest::Approx(cc_oracle(s, g)).epsilon(1e-10));
        CHECK(kl_metric(g, s) == doctest::Approx(kl_oracle(g, s)).epsilon(1e-10));
    }
}

TEST_CASE("metric report summary equals the arithmetic column mean") {
    MetricReport report;
    Rng rng(417);
    double acc = 0;
    for (int i = 0; i < 9; ++i) {
        FrameMetrics f;
        f.frame = i;
        f.auc = rng.uniform(0, 1);
        f.nss = rng.uniform(-1, 3);
        f.cc = rng.uniform(-1, 1);
        f.kl = rng.uniform(0, 2);
        acc += f.auc;
        report.frames.push_back(f);
    }
    CHECK(report.auc_summary().mean == doctest::Approx(acc / 9.0).epsilon(1e-12));
    std::string csv = report.to_csv();
    CHECK(csv.rfind("frame,auc,nss,cc,kl\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 9 + 2);  // header + rows + mean + std
    CHECK(csv.find("mean,") != std::string::npos);
    CHECK(csv.find("std,") != std::string::npos);
}
