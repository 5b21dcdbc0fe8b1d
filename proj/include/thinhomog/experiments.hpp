#pragma once

#include "thinhomog/config.hpp"
#include "thinhomog/csv.hpp"
#include "thinhomog/thin2d.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace thinhomog {

// Runs body(0..count-1) on up to jobs threads; exceptions propagate to the caller.
void parallel_for(int jobs, std::size_t count, const std::function<void(std::size_t)>& body);

struct StudyReport {
    std::string study;
    std::uint64_t config_hash = 0;
    std::string csv;          // header + rows, deterministic bytes
    nlohmann::json summary;   // per-study aggregates behind the pass flag
    bool pass = false;
    std::vector<std::string> failures;

    nlohmann::json to_json() const;
    // Writes <out_dir>/<study>.csv and <study>.json; returns the paths written.
    std::vector<std::string> write(const std::string& out_dir) const;
};

// Thin-domain solves against the homogenized limit over eps_list: column-average
// weak defects per test function, unfolding defects, and the a priori bound.
// Gate: defects for the test functions 1 and cos(pi x) decrease strictly along
// decreasing eps and end at most a third of their starting value, for every p.
StudyReport run_convergence(const ExperimentConfig& cfg, int jobs = 1);

// Piecewise-constant-in-x surrogates over delta_list: sup|q_delta - q|,
// sup|r_delta - r| over the x-grid and the W^{1,p} distance of the limit
// solutions. Gate: all three decrease strictly as delta shrinks, for every p.
StudyReport run_piecewise_consistency(const ExperimentConfig& cfg, int jobs = 1);

// Coefficient continuity under boundary perturbations G + t*bump over t_list:
// |q_t - q| against the C^1 distance, with the pulled-back corrector gradient
// as a diagnostic. Gate: the gap decreases strictly and the log-log slope fitted
// on the three smallest t stays within 0.15 of the reference exponent
// (1/2 for p <= 2, 1/p for p > 2).
StudyReport run_appendix_continuity(const ExperimentConfig& cfg, int jobs = 1);

// Domain dependence D(delta, eps) between G and its shrunk companion over the
// (delta, eps) grid. Gate per p: for each delta the spread over eps stays within
// a factor 2, and max_eps D decreases strictly in delta ending at most a third
// of its starting value.
StudyReport run_domain_dependence(const ExperimentConfig& cfg, int jobs = 1);

// Dispatch on cfg.study.
StudyReport run_study(const ExperimentConfig& cfg, int jobs = 1);

} // namespace thinhomog
