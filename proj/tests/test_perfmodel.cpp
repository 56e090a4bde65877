#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ddvar/errors.hpp"
#include "ddvar/grid.hpp"
#include "ddvar/perfmodel.hpp"
#include "ddvar/spacetime.hpp"

using namespace ddvar;

namespace {

ComplexityPoly monomial(int degree) {
    ComplexityPoly p;
    p.a.assign(static_cast<size_t>(degree) + 1, 0.0);
    p.a.back() = 1.0;
    return p;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string f;
    while (std::getline(in, f, ',')) fields.push_back(f);
    return fields;
}

// Halo cells over core cells for one subdomain, in column units: one cell is
// one longitude column at one time level. With p2 = 1 the latitude extent is
// common to halo and core and cancels, matching the flattened space axis of
// the continuous formula.
double discrete_halo_ratio(const Subdomain& s) {
    const double core = static_cast<double>(s.owned_time_range.length) *
                        s.owned_lon_range.length;
    const double box =
        static_cast<double>(s.time_range.length) * s.lon_range.length;
    return (box - core) / core;
}

}  // namespace

TEST_CASE("surface-to-volume ratio formula") {
    CHECK(surface_to_volume(4.0, 8.0) == 0.75);
    CHECK(surface_to_volume(1.0, 1.0) == 4.0);

    // Strictly decreasing in each extent.
    double prev = surface_to_volume(1.0, 7.0);
    for (int d = 2; d <= 40; ++d) {
        const double cur = surface_to_volume(d, 7.0);
        CHECK(cur < prev);
        prev = cur;
    }
    prev = surface_to_volume(5.0, 1.0);
    for (int d = 2; d <= 40; ++d) {
        const double cur = surface_to_volume(5.0, d);
        CHECK(cur < prev);
        prev = cur;
    }

    CHECK_THROWS_AS(surface_to_volume(0.0, 8.0), ConfigError);
    CHECK_THROWS_AS(surface_to_volume(4.0, 0.5), ConfigError);
}

TEST_CASE("discrete halo counting matches the ratio within one band") {
    // A one-cell-wide halo band has relative size 1/D_t (time side) or 1/W
    // (longitude side). Interior subdomains exceed the formula by the four
    // corner blocks, 4/(D_t*W); subdomains at a window end lose one clipped
    // time band, -1/D_t + 2/(D_t*W). Both stay within one band.
    struct Shape {
        int n, levels, q, p1;
    };
    const Shape shapes[] = {{8, 8, 4, 2}, {16, 12, 3, 4}, {16, 8, 4, 4}};
    for (const Shape& sh : shapes) {
        CAPTURE(sh.n);
        CAPTURE(sh.q);
        const SpaceTimeGrid grid = make_square_grid(
            sh.n, sh.levels, 200.0, 2.0 * M_PI / sh.n, M_PI / (sh.n + 1));
        const Decomposition dec =
            build_decomposition(grid, sh.q, sh.p1, 1, 1, 0, 1);
        for (const Subdomain& s : dec.subdomains) {
            CAPTURE(s.j);
            CAPTURE(s.i);
            const double d_t = s.owned_time_range.length;
            const double w = s.owned_lon_range.length;
            const double band = std::max(1.0 / d_t, 1.0 / w);
            const double formula = surface_to_volume(d_t, w);
            CHECK(std::abs(discrete_halo_ratio(s) - formula) <= band + 1e-12);
        }
    }
}

TEST_CASE("complexity polynomial evaluation and validation") {
    const ComplexityPoly def;
    CHECK(def.degree() == 2);
    CHECK(def.eval(7.0) == 49.0);

    ComplexityPoly p;
    p.a = {1.0, 2.0, 3.0};
    CHECK(p.eval(2.0) == 17.0);

    ComplexityPoly constant;
    constant.a = {5.0};
    CHECK_THROWS_AS(constant.validate(), ConfigError);
    ComplexityPoly zero_lead;
    zero_lead.a = {1.0, 0.0};
    CHECK_THROWS_AS(zero_lead.validate(), ConfigError);
}

TEST_CASE("scale-up lower bound") {
    SUBCASE("monomial cost gives alpha exactly one") {
        const ComplexityPoly quad = monomial(2);
        for (double n_loc : {16.0, 1024.0, 9.0e4})
            for (double qp : {1.0, 4.0, 64.0})
                CHECK(scaleup_alpha(n_loc, qp, quad) == 1.0);

        CHECK(theoretical_scaleup(3.0, 3.0, 4096.0, 4.0, quad) == 4.0);
        // Iteration products enter as a plain ratio.
        CHECK(theoretical_scaleup(6.0, 3.0, 4096.0, 4.0, quad) == 8.0);
        // Degree controls the qp exponent.
        CHECK(theoretical_scaleup(2.0, 2.0, 4096.0, 4.0, monomial(3)) == 16.0);
    }

    SUBCASE("alpha approaches one for large local problems") {
        ComplexityPoly p;
        p.a = {1.0, 1.0, 1.0};
        CHECK(scaleup_alpha(1.0e6, 64.0, p) >= 0.999);
        CHECK(scaleup_alpha(1.0e6, 64.0, p) <= 1.0);
        // Monotone improvement with local size at fixed subdomain count.
        CHECK(scaleup_alpha(1.0e4, 8.0, p) < scaleup_alpha(1.0e6, 8.0, p));
        CHECK(scaleup_alpha(1.0e6, 8.0, p) < scaleup_alpha(1.0e8, 8.0, p));
    }

    SUBCASE("trend at fixed total size: more subdomains scale further") {
        // Holds while the subdomains stay large enough that the leading
        // coefficient dominates the low-order qp/n_loc terms.
        ComplexityPoly p;
        p.a = {50.0, 10.0, 1.0};
        const double n = 1048576.0;
        double prev_sc = 0.0;
        double prev_sv = 0.0;
        for (double qp : {2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
            const double n_loc = n / qp;
            const double sc = theoretical_scaleup(5.0, 4.0, n_loc, qp, p);
            // Shrinking subdomains, fixed space extent: halo share grows.
            const double sv = surface_to_volume(n_loc / 64.0, 64.0);
            CHECK(sc > prev_sc);
            CHECK(sv > prev_sv);
            prev_sc = sc;
            prev_sv = sv;
        }
    }

    SUBCASE("trend at fixed subdomain count: scale-up levels off") {
        ComplexityPoly p;
        p.a = {50.0, 10.0, 1.0};
        const double limit = 5.0 / 4.0 * 8.0;  // rho ratio times qp^(d-1)
        double prev_gap = 2.0 * limit;
        for (double n_loc : {1.0e2, 1.0e3, 1.0e4, 1.0e5, 1.0e6}) {
            const double gap =
                std::abs(theoretical_scaleup(5.0, 4.0, n_loc, 8.0, p) - limit);
            CHECK(gap < prev_gap);
            prev_gap = gap;
        }
        CHECK(prev_gap < 1.0e-3 * limit);
    }

    CHECK_THROWS_AS(scaleup_alpha(0.5, 4.0, monomial(2)), ConfigError);
    CHECK_THROWS_AS(theoretical_scaleup(0.0, 3.0, 64.0, 4.0, monomial(2)),
                    ConfigError);
}

TEST_CASE("measured scale-up") {
    SUBCASE("quadratic work and no overhead recover qp exactly") {
        for (double qp : {2.0, 4.0, 16.0}) {
            const double t_local = 0.37;
            CHECK(measured_scaleup(qp * qp * t_local, t_local, 0.0, qp) == qp);
        }
    }

    SUBCASE("literal form cannot exceed 1/qp") {
        CHECK(measured_scaleup_literal(0.5, 0.0, 8.0) == 1.0 / 8.0);
        CHECK(measured_scaleup_literal(0.5, 0.5, 8.0) == 1.0 / 16.0);
        for (double t_oh : {0.0, 0.1, 3.0})
            CHECK(measured_scaleup_literal(0.7, t_oh, 8.0) <= 1.0 / 8.0);
    }

    SUBCASE("strong-scaling sweep rises then flattens") {
        // Modeled quadratic times on a fixed total problem: overhead is the
        // halo share of the local work, so it grows as subdomains shrink.
        const ComplexityPoly quad = monomial(2);
        const double n = 4096.0;
        double prev_sc = 0.0;
        double prev_eff = 2.0;
        for (double qp : {2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
            const double n_loc = n / qp;
            const double t_flop = 1.0e-6 * quad.eval(n_loc);
            const double t_oh =
                surface_to_volume(n_loc / 64.0, 64.0) * t_flop;
            const double t_global = 1.0e-6 * quad.eval(n);
            const double sc = measured_scaleup(t_global, t_flop, t_oh, qp);
            CHECK(sc > prev_sc);
            CHECK(sc / qp < prev_eff);
            prev_sc = sc;
            prev_eff = sc / qp;
        }
    }

    CHECK_THROWS_AS(measured_scaleup(-1.0, 0.5, 0.0, 4.0), ConfigError);
    CHECK_THROWS_AS(measured_scaleup(1.0, 0.5, -0.1, 4.0), ConfigError);
    CHECK_THROWS_AS(measured_scaleup_literal(0.0, 0.1, 4.0), ConfigError);
}

TEST_CASE("speedup-adjusted factor") {
    // At s_loc = 1 the admissible overhead interval [0, 1 - 1/s) is empty, so
    // even a zero ratio sits outside the model; the value itself is still 1.
    const SpeedupFactor unit = alpha_measured(1.0, 0.0);
    CHECK(unit.value == 1.0);
    CHECK(!unit.in_model);

    const SpeedupFactor f = alpha_measured(18.0, 0.5);
    CHECK(f.value == doctest::Approx(1.8));
    CHECK(f.in_model);

    const SpeedupFactor out = alpha_measured(18.0, 0.95);
    CHECK(out.in_model == false);
    CHECK(out.value == doctest::Approx(18.0 / (1.0 + 18.0 * 0.95)));
    CHECK(!alpha_measured(4.0, -0.1).in_model);

    CHECK_THROWS_AS(alpha_measured(0.5, 0.1), ConfigError);
    // Denominator reaches zero: not evaluable at all.
    CHECK_THROWS_AS(alpha_measured(4.0, -0.25), ConfigError);
    CHECK_THROWS_AS(alpha_measured(2.0, -0.75), ConfigError);

    // Published accelerator speedups are exposed for what-if inputs.
    CHECK(reference_speedup_rows.front().n_loc == 32.0);
    CHECK(reference_speedup_rows.front().s_loc == 15.3);
    CHECK(reference_speedup_rows.back().n_loc == 88.0);
    CHECK(reference_speedup_rows.back().s_loc == 20.54);
    double mean = 0.0;
    for (const auto& r : reference_speedup_rows) mean += r.s_loc;
    mean /= static_cast<double>(reference_speedup_rows.size());
    CHECK(std::abs(mean - 18.0) < 1.2);
}

TEST_CASE("bracketing of measured against theoretical scale-up") {
    // For s_loc in (1, qp] and an overhead ratio inside the hypothesis, the
    // adjusted factor lies in (1, qp], so the measured scale-up lands between
    // the lower bound and qp times it. 200-point sweep.
    ComplexityPoly p;
    p.a = {3.0, 2.0, 1.0};
    int points = 0;
    for (int iq = 0; iq < 10; ++iq) {
        const double qp = 2.0 + 62.0 * iq / 9.0;
        const double sc = theoretical_scaleup(7.0, 5.0, 4096.0, qp, p);
        for (int is = 1; is <= 5; ++is) {
            const double s_loc = 1.0 + (qp - 1.0) * is / 5.0;
            for (int iv = 0; iv < 4; ++iv) {
                const double sv = (1.0 - 1.0 / s_loc) * (0.249 * iv);
                const SpeedupFactor f = alpha_measured(s_loc, sv);
                CHECK(f.in_model);
                const double meas = f.value * sc;
                CHECK(meas > sc * (1.0 - 1e-12));
                CHECK(meas <= qp * sc * (1.0 + 1e-12));
                ++points;
            }
        }
    }
    CHECK(points == 200);
}

TEST_CASE("memory model") {
    const MemoryModel m = fitted_memory_model();
    CHECK(m.c > 0.0);
    CHECK(m.e > 0.0);

    SUBCASE("fit reproduces every reference row within 15 percent") {
        for (const auto& r : reference_memory_rows) {
            CAPTURE(r.n_loc);
            const double rel =
                std::abs(m.megabytes(r.n_loc) - r.megabytes) / r.megabytes;
            CHECK(rel <= 0.15);
        }
        CHECK(memory_estimate(32.0) ==
              doctest::Approx(177.0 * 1048576.0).epsilon(0.15));
        CHECK(memory_estimate(64.0) ==
              doctest::Approx(1313.0 * 1048576.0).epsilon(0.15));
    }

    SUBCASE("quartic ratio diagnostic") {
        // A pure n^4 law would double the side length into a 16x ratio; the
        // reference rows give 7.4, which is what the constant offset absorbs.
        const double ratio = 1313.0 / 177.0;
        CHECK(ratio == doctest::Approx(7.42).epsilon(0.01));
        CHECK(std::abs(ratio - 16.0) / 16.0 < 0.55);
    }

    SUBCASE("matrix-free footprint is orders of magnitude smaller") {
        const double own = artifact_memory_bytes(64, 64, 64);
        CHECK(own > 0.0);
        CHECK(own < 0.02 * memory_estimate(64.0));
        CHECK(artifact_memory_bytes(128, 128, 64) > own);
        CHECK_THROWS_AS(artifact_memory_bytes(0, 8, 4), ConfigError);
    }

    CHECK_THROWS_AS(memory_estimate(0.0), ConfigError);
}

TEST_CASE("csv tables") {
    SUBCASE("memory table") {
        const auto lines = split_lines(memory_table_csv());
        REQUIRE(lines.size() == 9);
        CHECK(lines[0] ==
              "n_loc (points per side),reference (MB),model (MB),"
              "model error (relative),artifact (MB)");
        const auto first = split_fields(lines[1]);
        REQUIRE(first.size() == 5);
        CHECK(first[0] == "32");
        CHECK(first[1] == "177");
        const MemoryModel m = fitted_memory_model();
        CHECK(std::stod(first[2]) == doctest::Approx(m.megabytes(32.0)));
        CHECK(std::stod(first[3]) ==
              doctest::Approx((m.megabytes(32.0) - 177.0) / 177.0));
    }

    SUBCASE("speedup table") {
        const auto lines = split_lines(speedup_table_csv());
        REQUIRE(lines.size() == 9);
        CHECK(lines[0] == "n_loc (points per side),s_loc (dimensionless)");
        CHECK(lines[1] == "32,15.3");
        CHECK(lines[8] == "88,20.54");
    }

    SUBCASE("scalability table") {
        std::vector<ScalabilityRecord> rows;
        for (double qp : {2.0, 8.0}) {
            ScalabilityRecord r;
            r.qp = qp;
            r.n_loc = 512.0;
            r.rho_g = 6.0;
            r.rho_dd = 6.0;
            r.t_flop = 0.25;
            r.t_oh = 0.0;
            r.s_loc = 18.0;
            rows.push_back(r);
        }
        const auto lines = split_lines(scalability_table_csv(rows, monomial(2)));
        REQUIRE(lines.size() == 3);
        CHECK(split_fields(lines[0]).size() == 10);
        // Monomial cost, equal iteration counts, no overhead: both columns
        // reduce to qp exactly.
        const auto row = split_fields(lines[2]);
        REQUIRE(row.size() == 10);
        CHECK(row[0] == "8");
        CHECK(row[1] == "4096");
        CHECK(row[8] == "8");
        CHECK(row[9] == "8");

        const auto literal =
            split_fields(split_lines(scalability_table_csv(rows, monomial(2),
                                                           true))[2]);
        CHECK(std::stod(literal[9]) == doctest::Approx(1.0 / 8.0));

        rows[0].t_flop = -1.0;
        CHECK_THROWS_AS(scalability_table_csv(rows, monomial(2)), ConfigError);
    }
}
