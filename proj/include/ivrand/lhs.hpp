#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ivrand {

struct ParamRange {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    bool integer_valued = false;
};

void validate(const ParamRange& range);

// A Latin hypercube design over the given ranges. `unit` holds the
// pre-rounding unit-hypercube coordinates (one point per equal-width stratum
// in every column); `points` holds the scaled values, with integer columns
// rounded last. maximin_score is the minimum pairwise Euclidean distance in
// unit coordinates; initial_score is the same before optimization.
struct LhsDesign {
    std::vector<std::vector<double>> unit;    // n_points x n_params
    std::vector<std::vector<double>> points;  // n_points x n_params
    double maximin_score = 0.0;
    double initial_score = 0.0;
};

// Random LHS followed by within-column pair-swap hill climbing on the maximin
// criterion: a swap is accepted only when it strictly raises the minimum
// pairwise distance. One sweep proposes one random-partner swap per
// (column, point). With centered = true, points sit at stratum midpoints
// instead of being jittered.
LhsDesign lhs_maximin(int n_points, const std::vector<ParamRange>& ranges,
                      int n_sweeps, std::uint64_t seed, bool centered = false);

}  // namespace ivrand
