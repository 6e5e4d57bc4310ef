#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fabernet/error.hpp"
#include "fabernet/network_io.hpp"
#include "fabernet/relunet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace fabernet;

namespace {

ReluNetwork identity_net() {
    Layer a(1, 1), b(1, 1);
    a.add(0, 0, 1.0);
    b.add(0, 0, 1.0);
    return ReluNetwork({a, b});
}

// y = sigma(1 - sigma(2x - 1) - sigma(1 - 2x)) with an identity output layer.
ReluNetwork hat_gadget() {
    Layer g1(2, 1), g2(1, 2), out(1, 1);
    g1.add(0, 0, 2.0);
    g1.set_bias(0, -1.0);
    g1.add(1, 0, -2.0);
    g1.set_bias(1, 1.0);
    g2.add(0, 0, -1.0);
    g2.add(0, 1, -1.0);
    g2.set_bias(0, 1.0);
    out.add(0, 0, 1.0);
    return ReluNetwork({g1, g2, out});
}

ReluNetwork random_net(std::mt19937_64& rng, int d, int depth, int width) {
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    std::vector<Layer> layers;
    int cols = d;
    for (int l = 0; l < depth; ++l) {
        const int rows = l + 1 == depth ? 1 : 1 + static_cast<int>(rng() % static_cast<unsigned>(width));
        Layer layer(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c)
                if (rng() % 3 != 0)
                    layer.add(r, c, w(rng));
            if (rng() % 2)
                layer.set_bias(r, w(rng));
        }
        layers.push_back(std::move(layer));
        cols = rows;
    }
    return ReluNetwork(std::move(layers));
}

std::vector<double> random_point(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x)
        v = u(rng);
    return x;
}

} // namespace

TEST_CASE("layer storage") {
    Layer l(2, 2);
    CHECK_THROWS_AS(l.add(0, 0, 0.0), InvalidParameter);
    l.add(1, 0, 2.0);
    l.add(0, 1, 1.0);
    l.add(1, 0, -2.0);
    l.finalize();
    REQUIRE(l.entries().size() == 1);
    CHECK(l.entries()[0] == Entry{0, 1, 1.0});
    CHECK(l.weight_count() == 1);
    CHECK(l.bias_count() == 0);
    Layer dirty(1, 1);
    dirty.add(0, 0, 1.0);
    CHECK_THROWS(dirty.entries());
}

TEST_CASE("network construction errors") {
    CHECK_THROWS_AS(ReluNetwork({Layer(1, 1)}), InvalidParameter);
    CHECK_THROWS_AS(ReluNetwork({Layer(2, 1), Layer(1, 3)}), InvalidParameter);
    CHECK_THROWS_AS(ReluNetwork({Layer(2, 1), Layer(2, 2)}), InvalidParameter);
    auto id = identity_net();
    std::vector<double> bad{0.1, 0.2};
    CHECK_THROWS_AS(id.eval(bad), InvalidParameter);
}

TEST_CASE("evaluation examples") {
    auto id = identity_net();
    for (double x : {0.0, 0.3, 1.0}) {
        std::vector<double> v{x};
        CHECK(id.eval(v) == x);
        CHECK(id.grad(v) == std::vector<double>{x > 0.0 ? 1.0 : 0.0});
    }
    auto hat = hat_gadget();
    std::vector<double> mid{0.5}, q{0.25};
    CHECK(hat.eval(mid) == 1.0);
    CHECK(hat.eval(q) == 0.5);
    CHECK(hat.grad(q)[0] == 2.0);

    // M_2(x) = sigma(x) - 2 sigma(x - 1) + sigma(x - 2), input scaled to [0, 2] inside the net.
    Layer a(3, 1), b(1, 3);
    for (int r = 0; r < 3; ++r) {
        a.add(r, 0, 2.0);
        if (r > 0)
            a.set_bias(r, -static_cast<double>(r));
    }
    b.add(0, 0, 1.0);
    b.add(0, 1, -2.0);
    b.add(0, 2, 1.0);
    ReluNetwork m2({a, b});
    std::vector<double> one{0.5}, two{1.0};
    CHECK(m2.eval(one) == 1.0);
    CHECK(m2.eval(two) == 0.0);
}

TEST_CASE("stats") {
    auto s = hat_gadget().stats();
    CHECK(s.L == 3);
    CHECK(s.W == 8); // 2 + 2 weights, 2 + 1 biases, 1 output weight
    CHECK(s.N_w == 2);
    CHECK(s.dims == std::vector<int>{1, 2, 1, 1});
    CHECK(identity_net().stats().W == 2);
}

TEST_CASE("gradient matches finite differences") {
    std::mt19937_64 rng(17);
    const double h = 1e-7;
    int checked = 0;
    for (int n = 0; n < 10; ++n) {
        auto net = random_net(rng, 3, 4, 6);
        for (int t = 0; t < 1000; ++t) {
            auto x = random_point(rng, 3);
            for (auto& v : x)
                v = 0.05 + 0.9 * v;
            auto g = net.grad(x);
            for (int j = 0; j < 3; ++j) {
                auto xp = x, xm = x;
                xp[static_cast<std::size_t>(j)] += h;
                xm[static_cast<std::size_t>(j)] -= h;
                const double fp = net.eval(xp), f0 = net.eval(x), fm = net.eval(xm);
                // Skip samples straddling a kink: one-sided slopes disagree there.
                if (std::abs((fp - f0) - (f0 - fm)) > 1e-12)
                    continue;
                const double fd = (fp - fm) / (2 * h);
                CHECK(std::abs(fd - g[static_cast<std::size_t>(j)]) <= 1e-4 * (1.0 + std::abs(fd)));
                ++checked;
            }
        }
    }
    CHECK(checked > 20000);
}

TEST_CASE("output is piecewise linear along segments") {
    std::mt19937_64 rng(23);
    for (int n = 0; n < 10; ++n) {
        auto net = random_net(rng, 2, 4, 5);
        auto a = random_point(rng, 2), b = random_point(rng, 2);
        auto g = [&](double t) {
            std::vector<double> x{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
            return net.eval(x);
        };
        std::map<double, double> nodes{{0.0, g(0.0)}, {1.0, g(1.0)}};
        std::function<void(double, double)> refine = [&](double lo, double hi) {
            const double mid = 0.5 * (lo + hi);
            const double q1 = lo + 0.25 * (hi - lo), q3 = lo + 0.75 * (hi - lo);
            const double glo = nodes[lo], ghi = nodes[hi];
            auto lin = [&](double t) { return glo + (ghi - glo) * (t - lo) / (hi - lo); };
            const double tol = 1e-12 * (1.0 + std::abs(glo) + std::abs(ghi));
            if (std::abs(g(mid) - lin(mid)) <= tol && std::abs(g(q1) - lin(q1)) <= tol &&
                std::abs(g(q3) - lin(q3)) <= tol)
                return;
            if (hi - lo < 1e-9)
                return; // kink isolated
            nodes[mid] = g(mid);
            refine(lo, mid);
            refine(mid, hi);
        };
        refine(0.0, 1.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 1000; ++t) {
            const double s = u(rng);
            auto hi = nodes.upper_bound(s);
            if (hi == nodes.end())
                continue;
            auto lo = std::prev(hi);
            const double pl = lo->second + (hi->second - lo->second) * (s - lo->first) / (hi->first - lo->first);
            CHECK(std::abs(g(s) - pl) <= 1e-9);
        }
    }
}

TEST_CASE("interval bounds dominate samples") {
    std::mt19937_64 rng(29);
    for (int n = 0; n < 100; ++n) {
        auto net = random_net(rng, 2, 2 + static_cast<int>(rng() % 3), 5);
        const double bound = bound_output(net);
        double seen = 0.0;
        for (int t = 0; t < 100000 / 10; ++t)
            seen = std::max(seen, std::abs(net.eval(random_point(rng, 2))));
        CHECK(bound >= seen);
    }
    CHECK(bound_output(hat_gadget()) >= 1.0);
    Layer a(1, 1), b(1, 1);
    b.set_bias(0, -2.5);
    a.add(0, 0, 1.0);
    ReluNetwork constant({a, b});
    CHECK(bound_output(constant) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(bound_output(constant) >= 2.5);
}

TEST_CASE("parallelize") {
    std::mt19937_64 rng(31);
    auto net = random_net(rng, 2, 3, 4);
    auto single = parallelize({net}, {1.0});
    for (int t = 0; t < 10000; ++t) {
        auto x = random_point(rng, 2);
        CHECK(std::abs(single.eval(x) - net.eval(x)) <= 1e-12);
    }
    auto cancel = parallelize({net, net}, {1.0, -1.0});
    for (int t = 0; t < 1000; ++t)
        CHECK(std::abs(cancel.eval(random_point(rng, 2))) <= 1e-14);
    CHECK(cancel.stats().W <= 2 * net.stats().W);

    auto shallow = random_net(rng, 2, 3, 4), deep = random_net(rng, 2, 5, 4);
    auto mixed = parallelize({shallow, deep}, {0.5, 2.0});
    CHECK(mixed.depth() == 5);
    CHECK(mixed.stats().W <= shallow.stats().W + deep.stats().W + (5 - 3 + 2));
    CHECK(mixed.stats().W <= parallelize_size_bound({shallow, deep}));
    for (int t = 0; t < 10000; ++t) {
        auto x = random_point(rng, 2);
        const double want = 0.5 * shallow.eval(x) + 2.0 * deep.eval(x);
        CHECK(std::abs(mixed.eval(x) - want) <= 1e-9 * (1.0 + std::abs(want)));
    }
    CHECK_THROWS_AS(parallelize({shallow, deep}, {1.0, 1.0}, {1e-6, 0.0}), InvalidParameter);
    CHECK_THROWS_AS(parallelize({shallow}, {1.0, 1.0}), InvalidParameter);
}

TEST_CASE("special network conversion") {
    // Layer 0 copies x (source row) and computes h = sigma(x - 0.5); layer 1 keeps
    // the source, accumulates c = -3 h (collation), then the output reads c + x.
    Layer l0(2, 1), l1(2, 2), l2(1, 2);
    l0.add(0, 0, 1.0);
    l0.add(1, 0, 1.0);
    l0.set_bias(1, -0.5);
    l1.add(0, 0, 1.0);
    l1.add(1, 1, -3.0);
    l2.add(0, 0, 1.0);
    l2.add(0, 1, 1.0);
    SpecialNetwork sp{ReluNetwork({l0, l1, l2}), 1, {{1, 0}, {1, 1}}};
    auto std_net = special_to_standard(sp);
    CHECK(std_net.depth() == sp.net.depth());
    CHECK(std_net.stats().N_w == sp.net.stats().N_w);
    for (int i = 0; i <= 100; ++i) {
        std::vector<double> x{i / 100.0};
        const double want = x[0] - 3.0 * std::max(0.0, x[0] - 0.5);
        CHECK(sp.eval(x) == doctest::Approx(want).epsilon(1e-15));
        CHECK(std::abs(std_net.eval(x) - want) <= 1e-9 * (1.0 + std::abs(want)));
    }

    // Nothing flagged linear: plain copy.
    std::mt19937_64 rng(37);
    auto plain = random_net(rng, 2, 3, 3);
    SpecialNetwork none{plain, 0, {}};
    auto copy = special_to_standard(none);
    for (int t = 0; t < 100; ++t) {
        auto x = random_point(rng, 2);
        CHECK(copy.eval(x) == plain.eval(x));
    }
}

TEST_CASE("pattern comparison") {
    std::mt19937_64 rng(41);
    auto a = random_net(rng, 2, 3, 4);
    CHECK(a.same_pattern(a));
    CHECK(a.pattern_subset_of(a));
    auto b = random_net(rng, 2, 3, 4);
    if (a.dims() != b.dims())
        CHECK_FALSE(a.same_pattern(b));
}

TEST_CASE("serialization round trip is bit exact") {
    std::mt19937_64 rng(43);
    for (int n = 0; n < 5; ++n) {
        auto net = random_net(rng, 3, 4, 6);
        std::stringstream ss;
        write_network(ss, net);
        auto back = read_network(ss);
        CHECK(back.dims() == net.dims());
        CHECK(back.same_pattern(net));
        for (int t = 0; t < 10000; ++t) {
            auto x = random_point(rng, 3);
            CHECK(back.eval(x) == net.eval(x));
        }
    }
    std::stringstream text;
    write_network(text, hat_gadget());
    CHECK(text.str().find("\"format\"") != std::string::npos);
    CHECK(text.str().find("\"stats\"") != std::string::npos);
    std::string tampered = text.str();
    tampered.replace(tampered.find("\"W\": 8"), 6, "\"W\": 9");
    std::istringstream bad(tampered);
    CHECK_THROWS(read_network(bad));
}
