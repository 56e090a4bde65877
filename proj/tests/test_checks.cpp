#include <numbers>
#include <string>
#include <vector>

#include <doctest.h>

#include "ddvar/checks.hpp"
#include "ddvar/errors.hpp"

using namespace ddvar;

namespace {

CheckSuiteConfig small_config(std::uint64_t seed) {
    const double pi = std::numbers::pi;
    CheckSuiteConfig cfg;
    cfg.grid = make_square_grid(6, 3, 300.0, 2.0 * pi / 6, pi / 12);
    cfg.params = SweParams::for_grid(cfg.grid);
    cfg.seed = seed;
    return cfg;
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t nl = s.find('\n', pos);
        out.push_back(s.substr(pos, nl - pos));
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("validation suite passes on a small window") {
    auto checks = run_validation_suite(small_config(1));
    REQUIRE(checks.size() == 4);
    CHECK(checks[0].name == "adjoint_dot_product");
    CHECK(checks[1].name == "tlm_taylor_order");
    CHECK(checks[2].name == "partition_of_unity");
    CHECK(checks[3].name == "normal_equations_oracle");
    for (const CheckResult& c : checks) CHECK(c.passed);
    CHECK(all_checks_passed(checks));

    CHECK(checks[0].measured <= 1e-12);
    CHECK(checks[0].comparison == "<=");
    CHECK(checks[1].measured >= 1.9);
    CHECK(checks[1].bound == 1.9);
    CHECK(checks[1].comparison == ">=");
    CHECK(checks[2].measured == 0.0);
    CHECK(checks[2].bound == 0.0);
    CHECK(checks[3].measured <= 1e-8);
}

TEST_CASE("suite results are deterministic for a fixed seed") {
    auto a = run_validation_suite(small_config(7));
    auto b = run_validation_suite(small_config(7));
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].measured == b[k].measured);
        CHECK(a[k].passed == b[k].passed);
    }
}

TEST_CASE("adjoint sign fault is caught by exactly one check") {
    CheckSuiteConfig cfg = small_config(1);
    cfg.fault = FaultInjection::adjoint_sign_flip;
    auto checks = run_validation_suite(cfg);
    REQUIRE(checks.size() == 4);
    CHECK_FALSE(checks[0].passed);
    CHECK(checks[0].measured > 1e-3);  // flipped sign doubles the pairing, not rounding noise
    CHECK(checks[1].passed);
    CHECK(checks[2].passed);
    CHECK(checks[3].passed);
    CHECK_FALSE(all_checks_passed(checks));
}

TEST_CASE("checks table lists one row per check") {
    CheckSuiteConfig cfg = small_config(1);
    cfg.fault = FaultInjection::adjoint_sign_flip;
    auto lines = split_lines(checks_csv(run_validation_suite(cfg)));
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "check,passed,measured,bound,comparison");
    CHECK(lines[1].substr(0, 22) == "adjoint_dot_product,0,");
    CHECK(lines[2].substr(0, 18) == "tlm_taylor_order,1");
    CHECK(lines[3] == "partition_of_unity,1,0,0,<=");
    CHECK(lines[4].substr(0, 26) == "normal_equations_oracle,1,");
    CHECK(lines[1].substr(lines[1].size() - 8) == "1e-12,<=");
    CHECK(lines[2].substr(lines[2].size() - 6) == "1.9,>=");
}

TEST_CASE("suite rejects degenerate configurations") {
    CheckSuiteConfig cfg = small_config(1);
    cfg.adjoint_pairs = 0;
    CHECK_THROWS_AS(run_validation_suite(cfg), ConfigError);

    CheckSuiteConfig empty;
    CHECK_THROWS_AS(run_validation_suite(empty), ConfigError);
}
