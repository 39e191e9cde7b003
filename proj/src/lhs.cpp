#include "ivrand/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ivrand/rng.hpp"

namespace ivrand {

void validate(const ParamRange& range) {
    if (!(range.lo < range.hi))
        throw std::invalid_argument("ParamRange '" + range.name + "': lo must be < hi");
}

namespace {

// Column-major unit coordinates plus a cached pairwise squared-distance matrix.
class DesignState {
public:
    DesignState(int n, int d) : n_(n), d_(d), cols_(static_cast<std::size_t>(d)),
                                dist2_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {
        for (auto& c : cols_) c.resize(static_cast<std::size_t>(n));
    }

    std::vector<double>& column(int c) { return cols_[static_cast<std::size_t>(c)]; }
    const std::vector<double>& column(int c) const { return cols_[static_cast<std::size_t>(c)]; }

    void rebuild_distances() {
        min_d2_ = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_; ++i) {
            for (int j = i + 1; j < n_; ++j) {
                double s = 0.0;
                for (int c = 0; c < d_; ++c) {
                    const double diff = cols_[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] -
                                        cols_[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
                    s += diff * diff;
                }
                at(i, j) = s;
                at(j, i) = s;
                min_d2_ = std::min(min_d2_, s);
            }
        }
    }

    double min_distance() const { return std::sqrt(min_d2_); }

    // Tries swapping rows i and k within column c; commits and returns true
    // only when the swap strictly raises the global minimum distance.
    bool try_swap(int c, int i, int k) {
        if (i == k) return false;
        auto& col = cols_[static_cast<std::size_t>(c)];
        const double vi = col[static_cast<std::size_t>(i)];
        const double vk = col[static_cast<std::size_t>(k)];
        if (vi == vk) return false;

        // The swap can only improve the global minimum if every pair currently
        // achieving it is touched; untouched pairs keep their distances.
        for (const auto& p : min_pairs_)
            if (p.first != i && p.first != k && p.second != i && p.second != k) return false;

        // New squared distances for every pair touching i or k. The (i,k)
        // pair itself is unchanged by the swap.
        double min_touched_new = at(i, k);
        for (int r = 0; r < n_; ++r) {
            if (r == i || r == k) continue;
            const double vr = col[static_cast<std::size_t>(r)];
            const double d_ri = at(r, i) - (vi - vr) * (vi - vr) + (vk - vr) * (vk - vr);
            const double d_rk = at(r, k) - (vk - vr) * (vk - vr) + (vi - vr) * (vi - vr);
            min_touched_new = std::min(min_touched_new, std::min(d_ri, d_rk));
        }

        if (!(min_touched_new > min_d2_)) return false;

        std::swap(col[static_cast<std::size_t>(i)], col[static_cast<std::size_t>(k)]);
        for (int r = 0; r < n_; ++r) {
            if (r == i || r == k) continue;
            const double vr = col[static_cast<std::size_t>(r)];
            const double d_ri = at(r, i) - (vi - vr) * (vi - vr) + (vk - vr) * (vk - vr);
            const double d_rk = at(r, k) - (vk - vr) * (vk - vr) + (vi - vr) * (vi - vr);
            at(r, i) = d_ri;
            at(i, r) = d_ri;
            at(r, k) = d_rk;
            at(k, r) = d_rk;
        }
        refresh_min();
        return true;
    }

    void refresh_min() {
        min_d2_ = std::numeric_limits<double>::infinity();
        min_pairs_.clear();
        for (int i = 0; i < n_; ++i) {
            for (int j = i + 1; j < n_; ++j) {
                const double v = at(i, j);
                if (v < min_d2_) {
                    min_d2_ = v;
                    min_pairs_.clear();
                    min_pairs_.emplace_back(i, j);
                } else if (v == min_d2_) {
                    min_pairs_.emplace_back(i, j);
                }
            }
        }
    }

private:
    double& at(int i, int j) {
        return dist2_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                      static_cast<std::size_t>(j)];
    }
    double at(int i, int j) const {
        return dist2_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                      static_cast<std::size_t>(j)];
    }

    int n_, d_;
    std::vector<std::vector<double>> cols_;
    std::vector<double> dist2_;
    double min_d2_ = 0.0;
    std::vector<std::pair<int, int>> min_pairs_;
};

}  // namespace

LhsDesign lhs_maximin(int n_points, const std::vector<ParamRange>& ranges,
                      int n_sweeps, std::uint64_t seed, bool centered) {
    if (n_points < 2) throw std::invalid_argument("lhs_maximin: n_points must be >= 2");
    if (ranges.empty()) throw std::invalid_argument("lhs_maximin: no parameter ranges");
    for (const auto& r : ranges) validate(r);
    if (n_sweeps < 0) throw std::invalid_argument("lhs_maximin: n_sweeps must be >= 0");

    const int d = static_cast<int>(ranges.size());
    auto rng = RngStream::from_key(seed, UINT64_C(0x6c6873));  // "lhs"

    DesignState state(n_points, d);
    const double inv_n = 1.0 / static_cast<double>(n_points);
    std::vector<std::uint32_t> strata(static_cast<std::size_t>(n_points));
    for (int c = 0; c < d; ++c) {
        for (int i = 0; i < n_points; ++i) strata[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
        for (int i = n_points - 1; i > 0; --i) {
            const auto j = rng.uniform_below(static_cast<std::uint32_t>(i + 1));
            std::swap(strata[static_cast<std::size_t>(i)], strata[static_cast<std::size_t>(j)]);
        }
        auto& col = state.column(c);
        for (int i = 0; i < n_points; ++i) {
            const double offset = centered ? 0.5 : rng.uniform01();
            col[static_cast<std::size_t>(i)] =
                (static_cast<double>(strata[static_cast<std::size_t>(i)]) + offset) * inv_n;
        }
    }
    state.rebuild_distances();
    state.refresh_min();

    LhsDesign design;
    design.initial_score = state.min_distance();

    for (int sweep = 0; sweep < n_sweeps; ++sweep) {
        for (int c = 0; c < d; ++c) {
            for (int i = 0; i < n_points; ++i) {
                const auto k =
                    static_cast<int>(rng.uniform_below(static_cast<std::uint32_t>(n_points)));
                state.try_swap(c, i, k);
            }
        }
    }
    design.maximin_score = state.min_distance();

    design.unit.assign(static_cast<std::size_t>(n_points),
                       std::vector<double>(static_cast<std::size_t>(d)));
    design.points = design.unit;
    for (int i = 0; i < n_points; ++i) {
        for (int c = 0; c < d; ++c) {
            const double unit_v = state.column(c)[static_cast<std::size_t>(i)];
            design.unit[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = unit_v;
            const auto& r = ranges[static_cast<std::size_t>(c)];
            double v = r.lo + unit_v * (r.hi - r.lo);
            if (r.integer_valued) v = std::clamp(std::round(v), r.lo, r.hi);
            design.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = v;
        }
    }
    return design;
}

}  // namespace ivrand
