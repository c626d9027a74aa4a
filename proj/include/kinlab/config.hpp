#pragma once

#include "kinlab/collision.hpp"
#include "kinlab/geometry.hpp"
#include "kinlab/solver.hpp"
#include "kinlab/weights.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace kinlab {

struct DomainSpec
{
    DomainKind kind = DomainKind::slab;
    double half_width = 0.5;
    double radius = 1.0;
    int dim = 3;
    Vec3 semi_axes = Vec3::Ones();

    Domain build() const;
};

struct GridSpec
{
    int n_x = 64;
    int n_v = 16;
    double v_max = 6.0;
};

struct CollisionSpec
{
    CollisionParams params;
    CollisionMode mode = CollisionMode::linear;
    //! Directory of the operator cache; empty disables caching.
    std::string cache_dir = ".kinlab_cache";
};

struct WeightSpec
{
    WeightParams params;
    //! Rate of the Young envelope; unset means half the admissible bound.
    std::optional<double> lambda0;
};

struct TimeSpec
{
    double dt = 0.05;
    int n_steps = 100;
    int sample_every = 1;
    //! Remove roundoff in the conserved modes after every step.
    bool pin_conserved = false;
};

struct OutputSpec
{
    std::string diagnostics = "diagnostics.ndjson";
    //! Final field dump; empty skips it.
    std::string field;
    double grazing_eps = 0.1;
};

enum class InitialProfile
{
    zero,
    micro_gaussian, //!< (I - P)[exp(-q|v|^2/4)] (1 + m cos(pi x / L))
    maxwellian,     //!< amplitude sqrt(mu), constant in x
    pulse           //!< amplitude exp(-(x/width)^2) exp(-|v|^2/4)
};

struct InitialSpec
{
    InitialProfile profile = InitialProfile::micro_gaussian;
    double amplitude = 1.0;
    double modulation = 0.5;
    double width = 0.1;
};

struct ScenarioConfig
{
    DomainSpec domain;
    GridSpec grid;
    CollisionSpec collision;
    WeightSpec weights;
    BoundaryKind bc = BoundaryKind::diffuse;
    TimeSpec time;
    OutputSpec output;
    InitialSpec initial;
    std::uint64_t seed = 0;

    //! Every violated constraint, one line each; empty when valid.
    std::vector<std::string> violations() const;
    //! Canonical form with all defaults filled in.
    nlohmann::ordered_json to_json() const;
    //! 16 hex digits of FNV-1a over the canonical JSON dump.
    std::string hash() const;
};

ScenarioConfig config_from_json(const nlohmann::json& j);

/*!
 * Read a TOML (.toml) or JSON (.json) scenario. Syntax errors raise ParseError
 * with the offending line; unknown keys and out-of-range values are collected
 * and raised together as one ValidationError.
 */
ScenarioConfig parse_config(const std::filesystem::path& path);
ScenarioConfig parse_config_string(const std::string& text, const std::string& format);

std::string to_string(InitialProfile p);

//! Initial field for the configured profile on the slab.
DistributionField make_initial_field(const ScenarioConfig& cfg, const VelocityGrid& grid);

/*!
 * Record written as the first line of every output file. The timestamp is
 * the current UTC time unless `timestamp` is given.
 */
nlohmann::ordered_json metadata_record(const std::string& config_hash,
                                       std::uint64_t seed,
                                       const std::string& timestamp = "");

std::string library_version();

} // namespace kinlab
