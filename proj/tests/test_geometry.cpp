#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bslab/coupling.hpp"
#include "bslab/geometry.hpp"
#include "bslab/grid.hpp"

using namespace bslab;

namespace {

// Direct image-sum oracle for the wrapped kernel, fixed wide truncation.
double wrapped_kernel_oracle(double d, double t, double L, int K = 50) {
    double sum = 0.0;
    for (int k = -K; k <= K; ++k) {
        const double u = d + k * L;
        sum += std::exp(-u * u / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
    }
    return sum;
}

double neumann_kernel_oracle(double x, double y, double t, double L, int K = 50) {
    double sum = 0.0;
    for (int k = -K; k <= K; ++k) {
        const double u = y - x + 2.0 * k * L;
        const double v = y + x + 2.0 * k * L;
        sum += std::exp(-u * u / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
        sum += std::exp(-v * v / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
    }
    return sum;
}

}  // namespace

TEST_CASE("wrap reduces into the fundamental cell") {
    const auto circle = FlatGeometry::circle(1.0);
    CHECK(wrap({1.3}, circle)[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(wrap({0.0}, circle)[0] == 0.0);

    const auto torus = FlatGeometry::torus({2.0, 2.0});
    const Point w = wrap({-0.5, 2.1}, torus);
    CHECK(w[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.1).epsilon(1e-12));

    CHECK_THROWS_AS(wrap({0.5}, FlatGeometry::interval(1.0)), UnsupportedGeometryError);
}

TEST_CASE("fold and lift on the interval quotient of a circle") {
    const auto q = QuotientMap::box_quotient(FlatGeometry::circle(2.0));
    CHECK(q.group().size() == 2);
    CHECK(q.quotient().kind() == GeometryKind::Interval);
    CHECK(q.quotient().length(0) == 1.0);

    CHECK(fold({1.3}, q)[0] == doctest::Approx(0.7).epsilon(1e-12));

    // lift inverts fold along the chosen element
    CHECK(lift({0.7}, 0, q)[0] == doctest::Approx(0.7));
    CHECK(lift({0.7}, 1, q)[0] == doctest::Approx(1.3));
    CHECK_THROWS_AS(lift({0.7}, 5, q), std::out_of_range);
}

TEST_CASE("fold on torus and triangle quotients") {
    const auto qbox = QuotientMap::box_quotient(FlatGeometry::torus({2.0, 2.0}));
    const Point f = fold({1.3, 0.4}, qbox);
    CHECK(f[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(0.4).epsilon(1e-12));

    const auto qtri = QuotientMap::triangle_quotient(FlatGeometry::torus({2.0, 2.0}));
    CHECK(qtri.group().size() == 8);
    const Point g = fold({0.2, 0.7}, qtri);
    CHECK(g[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.2).epsilon(1e-12));
    const Point swapped = lift({0.7, 0.2}, 1, qtri);
    CHECK(fold(swapped, qtri)[0] == doctest::Approx(0.7));
}

TEST_CASE("fold of lift is the identity for every group element") {
    for (const auto& q : {QuotientMap::box_quotient(FlatGeometry::torus({2.0, 2.0})),
                          QuotientMap::triangle_quotient(FlatGeometry::torus({2.0, 2.0}))}) {
        CHECK(q.group().is_closed(q.covering()));
        for (int ix = 1; ix < 8; ++ix) {
            for (int iy = 1; iy < ix; ++iy) {  // triangle interior: y < x
                const Point x{ix * 0.125, iy * 0.125};
                if (!q.in_fundamental_domain(x)) continue;
                for (std::size_t g = 0; g < q.group().size(); ++g) {
                    const Point lifted = lift(x, g, q);
                    const Point back = fold(lifted, q);
                    for (int a = 0; a < 2; ++a)
                        CHECK(back[a] == doctest::Approx(x[a]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("log map takes the shortest arc and flags the cut locus") {
    const auto circle = FlatGeometry::circle(1.0);
    CHECK(log_map({0.9}, {0.1}, circle)[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(log_map({0.4}, {0.4}, circle)[0] == 0.0);
    CHECK_THROWS_AS(log_map({0.1}, {0.6}, circle), CutLocusError);

    const auto interval = FlatGeometry::interval(1.0);
    CHECK(log_map({0.1}, {0.9}, interval)[0] == doctest::Approx(0.8));
}

TEST_CASE("heat kernel values against direct image-sum oracles") {
    const auto circle = FlatGeometry::circle(1.0);

    // Long-time limit is the uniform density.
    CHECK(heat_kernel(circle, 10.0, {0.2}, {0.9}) == doctest::Approx(1.0).epsilon(1e-12));

    // Diagonal value at t = 1/2: (1/sqrt(pi)) sum_k exp(-k^2).
    const double oracle = wrapped_kernel_oracle(0.0, 0.5, 1.0);
    CHECK(heat_kernel(circle, 0.5, {0.3}, {0.3}) == doctest::Approx(oracle).epsilon(1e-13));
    CHECK(oracle == doctest::Approx(1.0001034).epsilon(1e-6));

    const auto interval = FlatGeometry::interval(1.0);
    const double n_oracle = neumann_kernel_oracle(0.37, 0.81, 0.3, 1.0);
    CHECK(heat_kernel(interval, 0.3, {0.37}, {0.81}) ==
          doctest::Approx(n_oracle).epsilon(1e-13));

    CHECK_THROWS_AS(heat_kernel(circle, 0.0, {0.1}, {0.1}), std::domain_error);
    CHECK_THROWS_AS(heat_kernel(circle, -1.0, {0.1}, {0.1}), std::domain_error);
}

TEST_CASE("Neumann kernel conserves mass under quadrature") {
    const auto interval = FlatGeometry::interval(1.0);
    const int n = 20000;
    double integral = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = (i + 0.5) / n;
        integral += heat_kernel(interval, 0.3, {0.37}, {y}) / n;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("heat kernel is symmetric in its arguments") {
    const auto box = FlatGeometry::box({1.0, 1.5});
    const auto torus = FlatGeometry::torus({1.0, 2.0});
    const Point x{0.2, 1.1}, y{0.8, 0.3};
    CHECK(heat_kernel(box, 0.2, x, y) == doctest::Approx(heat_kernel(box, 0.2, y, x)));
    CHECK(heat_kernel(torus, 0.2, x, y) == doctest::Approx(heat_kernel(torus, 0.2, y, x)));
}

TEST_CASE("Chapman-Kolmogorov under quadrature on circle and interval") {
    for (const auto& g : {FlatGeometry::circle(1.0), FlatGeometry::interval(1.0)}) {
        const double s = 0.17, t = 0.24;
        const Point x{0.3}, y{0.62};
        const int n = 4000;
        double conv = 0.0;
        for (int i = 0; i < n; ++i) {
            const Point z{(i + 0.5) / n};
            conv += heat_kernel(g, s, x, z) * heat_kernel(g, t, z, y) / n;
        }
        CHECK(conv == doctest::Approx(heat_kernel(g, s + t, x, y)).epsilon(1e-8));
    }
}

TEST_CASE("quotient heat kernel equals the image sum over the group") {
    // Interval [0,1] as quotient of the circle of length 2.
    const auto q = QuotientMap::box_quotient(FlatGeometry::circle(2.0));
    const auto interval = q.quotient();
    const auto circle = q.covering();
    for (double t : {0.1, 0.5, 1.0}) {
        for (int i = 0; i < 32; ++i) {
            const Point x{(i + 0.5) / 32.0};
            for (int j = 0; j < 32; ++j) {
                const Point y{(j + 0.5) / 32.0};
                double folded_sum = 0.0;
                for (std::size_t g = 0; g < q.group().size(); ++g)
                    folded_sum += heat_kernel(circle, t, x, lift(y, g, q));
                CHECK(heat_kernel(interval, t, x, y) ==
                      doctest::Approx(folded_sum).epsilon(1e-10));
            }
        }
    }
    // 2D spot check: box from torus, group of four.
    const auto q2 = QuotientMap::box_quotient(FlatGeometry::torus({2.0, 2.0}));
    const Point x{0.3, 0.8}, y{0.55, 0.1};
    double folded_sum = 0.0;
    for (std::size_t g = 0; g < q2.group().size(); ++g)
        folded_sum += heat_kernel(q2.covering(), 0.37, x, lift(y, g, q2));
    CHECK(heat_kernel(q2.quotient(), 0.37, x, y) ==
          doctest::Approx(folded_sum).epsilon(1e-12));
}

TEST_CASE("inward normal at faces, interior, corners") {
    const auto box = FlatGeometry::box({1.0, 1.0});
    const auto at_face = inward_normal({0.0, 0.5}, box);
    REQUIRE(at_face.has_value());
    CHECK((*at_face)[0] == 1.0);
    CHECK((*at_face)[1] == 0.0);

    const auto far_face = inward_normal({0.5, 1.0}, box);
    REQUIRE(far_face.has_value());
    CHECK((*far_face)[1] == -1.0);

    CHECK_FALSE(inward_normal({0.5, 0.5}, box).has_value());
    CHECK_THROWS_AS(inward_normal({0.0, 0.0}, box), CornerPointError);
    CHECK_THROWS_AS(inward_normal({0.5}, FlatGeometry::circle(1.0)),
                    UnsupportedGeometryError);
}

TEST_CASE("cell averaged kernels are stochastic and reversible") {
    for (bool periodic : {true, false}) {
        const int m = 16;
        const double t = 0.05;
        std::vector<double> K(m * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                K[i * m + j] = cell_averaged_kernel_1d(i, j, m, 1.0, periodic, t);
        for (int i = 0; i < m; ++i) {
            double row = 0.0;
            for (int j = 0; j < m; ++j) row += K[i * m + j];
            CHECK(row == doctest::Approx(1.0).epsilon(1e-11));
        }
        // detailed balance with uniform weights = symmetry
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                CHECK(K[i * m + j] == doctest::Approx(K[j * m + i]).epsilon(1e-11));
    }
}

TEST_CASE("lift_coupling: product, diagonal, and rejection cases") {
    const auto q = QuotientMap::box_quotient(FlatGeometry::circle(2.0));
    SpatialGrid qgrid(q.quotient(), {4});
    const std::size_t nq = qgrid.n_cells();

    SUBCASE("uniform lifts to uniform") {
        const auto lifted = lift_coupling(q, Coupling::independent_uniform(qgrid));
        const std::size_t nc = lifted.marginal_grid().n_cells();
        CHECK(nc == 2 * nq);
        for (double m : lifted.pair_masses())
            CHECK(m == doctest::Approx(1.0 / (nc * nc)).epsilon(1e-12));
    }

    SUBCASE("diagonal coupling lifts to group-orbit pairs with exact entropy") {
        const auto pi_q = Coupling::diagonal(qgrid);
        const auto lifted = lift_coupling(q, pi_q);
        const std::size_t nc = lifted.marginal_grid().n_cells();
        const double G = static_cast<double>(q.group().size());

        // Direct summation oracle over the finite grid.
        double mass_on_orbits = 0.0;
        for (std::size_t a = 0; a < nc; ++a)
            for (std::size_t b = 0; b < nc; ++b) {
                const auto fa = qgrid.locate(fold(lifted.marginal_grid().center(a), q));
                const auto fb = qgrid.locate(fold(lifted.marginal_grid().center(b), q));
                const double expected =
                    (fa == fb) ? 1.0 / (static_cast<double>(nq) * G * G) : 0.0;
                CHECK(lifted.pair_mass(a, b) == doctest::Approx(expected).epsilon(1e-12));
                mass_on_orbits += lifted.pair_mass(a, b);
            }
        CHECK(mass_on_orbits == doctest::Approx(1.0).epsilon(1e-12));

        // Marginals uniform on the covering grid.
        for (double m : lifted.first_marginal())
            CHECK(m == doctest::Approx(1.0 / nc).epsilon(1e-12));
        for (double m : lifted.second_marginal())
            CHECK(m == doctest::Approx(1.0 / nc).epsilon(1e-12));

        // Relative entropy against the product of uniforms is preserved
        // (direct summation on both grids).
        auto entropy_vs_uniform = [](const Coupling& c) {
            const std::size_t n = c.marginal_grid().n_cells();
            double h = 0.0;
            for (double mass : c.pair_masses())
                if (mass > 0.0) h += mass * std::log(mass * n * n);
            return h;
        };
        CHECK(entropy_vs_uniform(lifted) ==
              doctest::Approx(entropy_vs_uniform(pi_q)).epsilon(1e-12));
    }

    SUBCASE("non-uniform marginals are rejected") {
        std::vector<double> single(nq * nq, 0.0);
        single[0] = 1.0;
        const auto bad = Coupling::grid(qgrid, single);
        CHECK_THROWS_AS(lift_coupling(q, bad), ConstraintViolationError);
    }
}

TEST_CASE("pushforward of a lifted coupling is the quotient coupling, cell-exact") {
    const auto q = QuotientMap::box_quotient(FlatGeometry::torus({2.0, 2.0}));
    SpatialGrid qgrid(q.quotient(), {3, 3});
    const auto pi_q = Coupling::lazy_grid(
        SpatialGrid(FlatGeometry::torus({1.0, 1.0}), {3, 3}), 0.3, 0.02);
    // lazy_grid lives on a torus; re-host its masses on the quotient box grid
    const auto pi_box = Coupling::grid(qgrid, pi_q.pair_masses());
    const auto lifted = lift_coupling(q, pi_box);

    const auto& cgrid = lifted.marginal_grid();
    const std::size_t nq = qgrid.n_cells(), nc = cgrid.n_cells();
    std::vector<double> pushed(nq * nq, 0.0);
    for (std::size_t a = 0; a < nc; ++a)
        for (std::size_t b = 0; b < nc; ++b)
            pushed[qgrid.locate(fold(cgrid.center(a), q)) * nq +
                   qgrid.locate(fold(cgrid.center(b), q))] += lifted.pair_mass(a, b);
    for (std::size_t k = 0; k < nq * nq; ++k)
        CHECK(pushed[k] == doctest::Approx(pi_box.pair_masses()[k]).epsilon(1e-12));
}

TEST_CASE("image count follows the tail bound") {
    HeatKernelParams params;
    const int k = image_count(0.5, 1.0, params);
    CHECK(k == static_cast<int>(std::ceil(std::sqrt(2.0 * 0.5 * std::log(1e12)))) + 1);
    params.max_images = 3;
    CHECK(image_count(10.0, 0.1, params) == 3);
}

TEST_CASE("geometry invariants are enforced") {
    CHECK_THROWS_AS(FlatGeometry::circle(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(FlatGeometry::torus({1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(QuotientMap::triangle_quotient(FlatGeometry::torus({1.0, 2.0})),
                    std::invalid_argument);
    const auto g = FlatGeometry::box({1.0, 2.0});
    CHECK(g.lebesgue_volume() == 2.0);
    CHECK(g.has_boundary());
    CHECK_FALSE(g.periodic());
}
