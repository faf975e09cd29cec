#pragma once

#include "mcre/conditions.hpp"
#include "mcre/environment.hpp"
#include "mcre/kernel.hpp"
#include "mcre/parallel.hpp"

#include <cstdint>
#include <vector>

namespace mcre {

struct GoodConstants {
    std::uint64_t C1 = 0;
    std::uint64_t C2 = 0;
};

struct GoodTimeOptions {
    std::uint64_t C1_max = 1000;
    std::uint64_t C2_max = 1'000'000'000'000'000ULL;
    SeriesOptions series;
};

/// R = 2 C1 (2 C1 + 1).
double good_level(std::uint64_t C1);

/// Good times of one environment realization and their constants.
struct GoodTimeIndex {
    std::uint64_t C1 = 0;
    std::uint64_t C2 = 0;
    double R = 0.0;
    std::int64_t horizon_lo = 0;
    std::int64_t horizon_hi = 0;
    /// Subsampled good times, increasing, consecutive gaps >= C1.
    std::vector<std::int64_t> tau;
    /// Number of raw good times before subsampling.
    std::size_t raw_count = 0;
    /// Horizon points whose past was too short to evaluate the series.
    std::size_t insufficient_past = 0;

    /// Number of tau in [-n, -1].
    std::size_t L(std::size_t n) const;
};

/// Per-time inputs to the good-set tests, precomputed once per realization.
class GoodSetEvaluator {
public:
    GoodSetEvaluator(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                     const MinorizationSpec& m, GoodTimeOptions options = {}, Parallelism par = {});

    struct PastSummary {
        SeriesResult series;
        bool available = false;
    };

    /// Series and running products along the past of t (X_{t-1}, X_{t-2}, ...).
    PastSummary past(std::int64_t t) const;

    /// Both A_{1,C1} inequalities on the past of t.
    static bool first_set(const PastSummary& s, std::uint64_t C1);
    /// eta(R(C1), X_t) >= 1 / (C2 + 1).
    bool second_set(std::int64_t t, GoodConstants c) const;
    double eta(std::int64_t t, double R) const;

    const EnvironmentRealization& realization() const { return r_; }
    const GoodTimeOptions& options() const { return options_; }

private:
    EnvironmentRealization r_;
    MinorizationSpec m_;
    GoodTimeOptions options_;
    // Stored newest index first: slot i holds time t_max - i.
    std::vector<double> lambda_;
    std::vector<double> b_;
};

/// Smallest C1 <= C1_max whose A_{1,C1} inequalities hold at the window
/// origin, then the smallest C2 <= C2_max with eta(R(C1), X_0) >= 1/(C2+1).
/// NoGoodConstantError names the inequality that failed.
GoodConstants find_C(const GoodSetEvaluator& ev);
GoodConstants find_C(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                     const MinorizationSpec& m, GoodTimeOptions options = {});

/// Raw good times in [lo, hi] subsampled to every C1-th, counted back from
/// the last one. NoGoodTimeError when no time is good.
GoodTimeIndex good_times(const GoodSetEvaluator& ev, GoodConstants c, std::int64_t lo, std::int64_t hi,
                         Parallelism par = {});
GoodTimeIndex good_times(const EnvironmentRealization& r, const ScalarFn& lambda, const ScalarFn& b,
                         const MinorizationSpec& m, GoodConstants c, std::int64_t lo, std::int64_t hi,
                         GoodTimeOptions options = {}, Parallelism par = {});

/// L_n / n over the horizon [-n, -1].
double good_time_density(const GoodSetEvaluator& ev, GoodConstants c, std::size_t n, Parallelism par = {});

struct GoodTimeInvariants {
    bool spacing = false;
    bool level = false;
    bool eta_floor = false;
    bool all() const { return spacing && level && eta_floor; }
};

GoodTimeInvariants check_invariants(const GoodTimeIndex& g, const EnvironmentRealization& r,
                                    const MinorizationSpec& m);

}  // namespace mcre
