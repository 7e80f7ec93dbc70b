// Guidance-weight and noise-level schedules: pinned example values, domain
// errors, inverse-variant complements, and config-string round trips.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vardiv/schedules.hpp"

using namespace vardiv;

namespace {

CfgSchedule interp(CfgVariant v, double w1, double wK, int k_max) {
    CfgSchedule s;
    s.family = CfgFamily::interpolation;
    s.variant = v;
    s.w1 = w1;
    s.wK = wK;
    s.k_max = k_max;
    return s;
}

CfgSchedule piecewise(double w1, double wK, int k_min, int k_max) {
    CfgSchedule s;
    s.family = CfgFamily::piecewise_constant;
    s.variant = CfgVariant::constant;
    s.w1 = w1;
    s.wK = wK;
    s.k_min = k_min;
    s.k_max = k_max;
    return s;
}

AnnealSchedule anneal(AnnealVariant v, double sigma, int k_max) {
    AnnealSchedule s;
    s.variant = v;
    s.sigma = sigma;
    s.k_max = k_max;
    return s;
}

} // namespace

TEST_CASE("cfg: interpolation ramp starts at w1 and midpoints at the average") {
    const CfgSchedule s = interp(CfgVariant::cosine, 0.0, 3.0, 5);
    CHECK(cfg_weight(s, 1, 10) == doctest::Approx(0.0).epsilon(1e-15)); // gamma(1) = 0
    // k = 3, k_max = 5: cos(pi/2) = 0 -> gamma = 0.5 -> midpoint
    CHECK(cfg_weight(s, 3, 10) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(cfg_weight(s, 5, 10) == doctest::Approx(3.0).epsilon(1e-12)); // gamma(k_max) = 1
    CHECK(cfg_weight(s, 9, 10) == doctest::Approx(3.0).epsilon(1e-12)); // clamped past k_max
}

TEST_CASE("cfg: piecewise constant window") {
    const CfgSchedule s = piecewise(0.0, 2.0, 1, 4);
    for (int k = 1; k <= 4; ++k) {
        CHECK(cfg_weight(s, k, 10) == 0.0);
    }
    CHECK(cfg_weight(s, 6, 10) == 2.0);
    CHECK(cfg_weight(s, 10, 10) == 2.0);
    // inverse parameterization: strong inside the window, off outside
    CfgSchedule inv = s;
    inv.variant = CfgVariant::constant_inverse;
    inv.w1 = 2.0;
    inv.wK = 0.0;
    CHECK(cfg_weight(inv, 2, 10) == 2.0);
    CHECK(cfg_weight(inv, 7, 10) == 0.0);
}

TEST_CASE("cfg: constant parameterization is flat everywhere") {
    const CfgSchedule s = piecewise(1.5, 1.5, 1, 4);
    for (int k = 1; k <= 10; ++k) {
        CHECK(cfg_weight(s, k, 10) == 1.5);
    }
}

TEST_CASE("cfg: inverse variants complement their base on [1, k_max]") {
    // with w1 = 0, wK = 1 the weight equals gamma directly
    for (auto [base, inverse] : {std::pair{CfgVariant::cosine, CfgVariant::cosine_inverse},
                                 std::pair{CfgVariant::linear, CfgVariant::linear_inverse}}) {
        const CfgSchedule b = interp(base, 0.0, 1.0, 6);
        const CfgSchedule i = interp(inverse, 0.0, 1.0, 6);
        for (int k = 1; k <= 6; ++k) {
            CHECK(cfg_weight(b, k, 10) + cfg_weight(i, k, 10) == doctest::Approx(1.0).epsilon(1e-12));
        }
        // beyond k_max both clamp to wK
        CHECK(cfg_weight(b, 8, 10) == doctest::Approx(1.0));
        CHECK(cfg_weight(i, 8, 10) == doctest::Approx(1.0));
    }
}

TEST_CASE("cfg: interp_constant pins gamma to one half") {
    const CfgSchedule s = interp(CfgVariant::interp_constant, 1.0, 3.0, 4);
    for (int k = 1; k <= 4; ++k) {
        CHECK(cfg_weight(s, k, 10) == doctest::Approx(2.0).epsilon(1e-12));
    }
    CHECK(cfg_weight(s, 5, 10) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("cfg: domain errors") {
    CHECK_THROWS_AS(cfg_weight(interp(CfgVariant::cosine, 0, 1, 1), 1, 5), ConfigError); // k_max = 1 divides by zero
    CHECK_THROWS_AS(cfg_weight(interp(CfgVariant::cosine, 0, 1, 3), 0, 5), ConfigError);
    CHECK_THROWS_AS(cfg_weight(interp(CfgVariant::cosine, 0, 1, 3), 6, 5), ConfigError);
    CHECK_THROWS_AS(cfg_weight(piecewise(0, 1, 3, 2), 1, 5), ConfigError);  // k_min > k_max
    CHECK_THROWS_AS(cfg_weight(piecewise(0, 1, 1, 9), 1, 5), ConfigError);  // k_max > K
    CfgSchedule wrong_family = interp(CfgVariant::constant, 0, 1, 3);       // piecewise variant, interp family
    CHECK_THROWS_AS(cfg_weight(wrong_family, 1, 5), ConfigError);
}

TEST_CASE("anneal: cosine hits sigma at stage 1 and zero at k_max") {
    const AnnealSchedule s = anneal(AnnealVariant::cosine, 1.0, 4);
    CHECK(anneal_level(s, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(anneal_level(s, 4) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(anneal_level(s, 5) == 0.0);
    CHECK(anneal_level(s, 9) == 0.0);
}

TEST_CASE("anneal: linear midpoint") {
    const AnnealSchedule s = anneal(AnnealVariant::linear, 0.5, 5);
    CHECK(anneal_level(s, 3) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(anneal_level(s, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(anneal_level(s, 5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("anneal: constant holds sigma through k_max then drops to zero") {
    const AnnealSchedule s = anneal(AnnealVariant::constant, 0.75, 3);
    CHECK(anneal_level(s, 1) == 0.75);
    CHECK(anneal_level(s, 3) == 0.75);
    CHECK(anneal_level(s, 4) == 0.0);
}

TEST_CASE("anneal: levels are non-increasing within the window") {
    for (auto v : {AnnealVariant::linear, AnnealVariant::cosine, AnnealVariant::constant}) {
        const AnnealSchedule s = anneal(v, 0.8, 6);
        double prev = anneal_level(s, 1);
        for (int k = 2; k <= 10; ++k) {
            const double cur = anneal_level(s, k);
            CHECK(cur <= prev + 1e-15);
            prev = cur;
        }
    }
}

TEST_CASE("anneal: domain errors") {
    CHECK_THROWS_AS(anneal_level(anneal(AnnealVariant::linear, 0.5, 1), 1), ConfigError);  // non-constant with k_max = 1
    CHECK_THROWS_AS(anneal_level(anneal(AnnealVariant::constant, 1.5, 2), 1), ConfigError); // sigma > 1
    CHECK_THROWS_AS(anneal_level(anneal(AnnealVariant::constant, -0.1, 2), 1), ConfigError);
    CHECK_THROWS_AS(anneal_level(anneal(AnnealVariant::constant, 0.5, 2), 0), ConfigError); // stage < 1
    CHECK_NOTHROW(anneal_level(anneal(AnnealVariant::constant, 0.5, 1), 1)); // constant allows k_max = 1
}

TEST_CASE("schedule parsing: cfg strings round-trip") {
    const CfgSchedule a = parse_cfg_schedule("cfg=interp:cosine:w1=0:wK=3:kmax=5");
    CHECK(a.family == CfgFamily::interpolation);
    CHECK(a.variant == CfgVariant::cosine);
    CHECK(a.w1 == 0.0);
    CHECK(a.wK == 3.0);
    CHECK(a.k_max == 5);

    const CfgSchedule b = parse_cfg_schedule("pw:constant:w1=0:wK=2:kmin=1:kmax=4");
    CHECK(b.family == CfgFamily::piecewise_constant);
    CHECK(b.k_min == 1);
    CHECK(b.k_max == 4);

    for (const char* text : {"pw:constant:w1=0:wK=2:kmin=1:kmax=4",
                             "pw:constant_inverse:w1=2:wK=0:kmin=2:kmax=5",
                             "interp:cosine:w1=0:wK=3:kmax=5",
                             "interp:linear_inverse:w1=1.5:wK=0.25:kmax=7",
                             "interp:constant:w1=1:wK=2:kmax=3"}) {
        const CfgSchedule s = parse_cfg_schedule(text);
        const CfgSchedule again = parse_cfg_schedule(to_string(s));
        CHECK(to_string(s) == to_string(again));
        CHECK(s.w1 == again.w1);
        CHECK(s.wK == again.wK);
        CHECK(s.k_min == again.k_min);
        CHECK(s.k_max == again.k_max);
    }
}

TEST_CASE("schedule parsing: anneal strings round-trip") {
    const AnnealSchedule a = parse_anneal_schedule("anneal=cosine:sigma=1.0:kmax=4:target=text");
    CHECK(a.variant == AnnealVariant::cosine);
    CHECK(a.sigma == 1.0);
    CHECK(a.k_max == 4);
    CHECK(a.target == AnnealTarget::text_embedding);

    const AnnealSchedule b = parse_anneal_schedule("constant:sigma=0.5:kmax=3:target=sos");
    CHECK(b.variant == AnnealVariant::constant);
    CHECK(b.target == AnnealTarget::sos_token);
    const AnnealSchedule b2 = parse_anneal_schedule(to_string(b));
    CHECK(to_string(b2) == to_string(b));
}

TEST_CASE("schedule parsing: malformed strings are rejected") {
    CHECK_THROWS_AS(parse_cfg_schedule("nope:constant:w1=0:wK=2:kmax=4"), ConfigError);
    CHECK_THROWS_AS(parse_cfg_schedule("interp:warp:w1=0:wK=2:kmax=4"), ConfigError);
    CHECK_THROWS_AS(parse_cfg_schedule("interp:cosine:w1=0:wK=2"), ConfigError);        // missing kmax
    CHECK_THROWS_AS(parse_cfg_schedule("interp:cosine:w1=zzz:wK=2:kmax=4"), ConfigError);
    CHECK_THROWS_AS(parse_cfg_schedule("interp:cosine:w1=0:wK=2:kmax=4:extra=1"), ConfigError);
    CHECK_THROWS_AS(parse_anneal_schedule("cosine:sigma=1.0"), ConfigError);            // missing kmax
    CHECK_THROWS_AS(parse_anneal_schedule("cosine:sigma=1.0:kmax=4:target=moon"), ConfigError);
    CHECK_THROWS_AS(parse_anneal_schedule("banana:sigma=1.0:kmax=4"), ConfigError);
    CHECK_THROWS_AS(parse_anneal_schedule("cosine:sigma=1.0:kmax=2.5"), ConfigError);   // non-integer kmax
}
