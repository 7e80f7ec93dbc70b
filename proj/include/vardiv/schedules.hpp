#pragma once

// Stage-indexed schedules for guidance weight and condition noise.
//
// Guidance weight omega(k) comes in two families:
//   * piecewise constant:  omega(k) = w1 if k in [k_min, k_max] else wK
//     (variant "constant" conventionally sets w1 = 0, "constant_inverse" wK = 0;
//     the formula itself is shared);
//   * interpolation:       omega(k) = (1 - gamma(k)) * w1 + gamma(k) * wK with
//     a variant-specific ramp gamma on [1, k_max]:
//       cosine          1 - (cos(pi (k-1) / (k_max-1)) + 1) / 2
//       cosine_inverse      (cos(pi (k-1) / (k_max-1)) + 1) / 2
//       linear          (k-1) / (k_max-1)
//       linear_inverse  1 - (k-1) / (k_max-1)
//       interp_constant 0.5
//     For k > k_max the ramp is clamped to 1 (omega = wK) in every variant;
//     on [1, k_max] the formulas apply untouched so inverse variants remain
//     exact complements of their base variants.
//
// Noise level alpha(k) (same formulas serve the text embedding and the start
// token; the target field only says which input the level applies to):
//       linear    sigma * (1 - (k-1) / (k_max-1))
//       cosine    sigma / 2 * (cos(pi (k-1) / (k_max-1)) + 1)
//       constant  sigma
// and alpha(k) = 0 for every k > k_max.

#include <string>

#include "vardiv/errors.hpp"

namespace vardiv {

enum class CfgFamily { piecewise_constant, interpolation };

enum class CfgVariant {
    constant,         // piecewise family
    constant_inverse, // piecewise family
    cosine,           // interpolation family
    cosine_inverse,
    linear,
    linear_inverse,
    interp_constant,
};

struct CfgSchedule {
    CfgFamily  family  = CfgFamily::piecewise_constant;
    CfgVariant variant = CfgVariant::constant;
    double     w1      = 0.0;
    double     wK      = 0.0;
    int        k_min   = 1;
    int        k_max   = 1;

    // K = number of stages in the run this schedule is applied to.
    void validate(int K) const;
};

// Weight for stage k (1-based) in a K-stage run.
double cfg_weight(const CfgSchedule& s, int k, int K);

enum class AnnealVariant { linear, cosine, constant };
enum class AnnealTarget { text_embedding, sos_token };

struct AnnealSchedule {
    AnnealVariant variant = AnnealVariant::constant;
    AnnealTarget  target  = AnnealTarget::text_embedding;
    double        sigma   = 0.0;
    int           k_max   = 1;

    void validate() const;
};

// Noise level for stage k (1-based); zero beyond k_max.
double anneal_level(const AnnealSchedule& s, int k);

// Config-string forms, e.g.
//   "pw:constant:w1=0:wK=2:kmin=1:kmax=4"
//   "interp:cosine:w1=0:wK=3:kmax=5"
//   "cosine:sigma=1.0:kmax=4:target=text"
// A leading "cfg=" / "anneal=" tag is accepted and ignored.
CfgSchedule    parse_cfg_schedule(const std::string& text);
AnnealSchedule parse_anneal_schedule(const std::string& text);
std::string    to_string(const CfgSchedule& s);
std::string    to_string(const AnnealSchedule& s);

} // namespace vardiv
