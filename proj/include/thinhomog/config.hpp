#pragma once

#include "thinhomog/profile.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace thinhomog {

// Raised for malformed config/profile JSON; message carries the JSON path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::string& path);

// Profile spec object. Rejects unknown keys.
//   {"kind":"constant","value":1.0,"L":1.0}
//   {"kind":"expression","expr":"1+0.5*sin(2*pi*y)","L":1.0,"G0":0.4,"G1":1.6,"M":3.2}
//   {"kind":"piecewise","breakpoints":[0,0.5,1],"pieces":["1+y","2-y"],...}
Profile profile_from_json(const nlohmann::json& j, const std::string& path = "profile");
nlohmann::json profile_to_json(const Profile& profile);

struct ResolutionConfig {
    int cell_n1 = 64;
    int cell_n2 = 64;
    int grid_n = 64;          // x-grid intervals for coefficient tables
    int solver_n = 1024;      // 1d solver elements
    int column_points = 256;  // column-average x samples (floor; grows with 1/eps)
    int points_per_period = 8;
    int min_layers = 6;
    int min_columns = 64;
};

struct ExperimentConfig {
    std::string study;  // convergence | piecewise | domaindep | appendix
    Profile profile = Profile::constant(1.0, 1.0);
    std::optional<Profile> profile_hat;  // domaindep: explicit comparison profile
    std::vector<double> p_list;
    std::vector<double> eps_list;
    std::vector<double> delta_list;
    std::vector<double> t_list;      // appendix perturbation sizes
    std::string bump = "0.3*sin(2*pi*y)";
    std::string f = "1";
    ResolutionConfig resolution;
    std::string out_dir = ".";
    std::uint64_t seed = 1234;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
    std::uint64_t config_hash() const;
};

} // namespace thinhomog
