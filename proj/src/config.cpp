#include "kinlab/config.hpp"

#include "kinlab/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "toml.hpp"

namespace kinlab {

namespace {

using json = nlohmann::json;

// Reads typed values from one section and remembers which keys it consumed.
class Section
{
  public:
    Section(const json& root, const std::string& name, std::vector<std::string>& errors)
        : name_(name), errors_(errors)
    {
        if (!root.contains(name))
            return;
        const json& node = root.at(name);
        if (!node.is_object())
        {
            errors_.push_back("[" + name + "] must be a table");
            return;
        }
        node_ = &node;
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        seen_.insert(key);
        if (!node_ || !node_->contains(key))
            return;
        const json& v = node_->at(key);
        try
        {
            if constexpr (std::is_same_v<T, double>)
            {
                if (!v.is_number())
                    throw std::invalid_argument("number");
                out = v.get<double>();
            }
            else if constexpr (std::is_same_v<T, int>)
            {
                if (!v.is_number_integer())
                    throw std::invalid_argument("integer");
                out = v.get<int>();
            }
            else if constexpr (std::is_same_v<T, bool>)
            {
                if (!v.is_boolean())
                    throw std::invalid_argument("boolean");
                out = v.get<bool>();
            }
            else
            {
                if (!v.is_string())
                    throw std::invalid_argument("string");
                out = v.get<std::string>();
            }
        }
        catch (const std::exception& e)
        {
            errors_.push_back(name_ + "." + key + " must be a " + e.what());
        }
    }

    void finish()
    {
        if (!node_)
            return;
        for (const auto& [key, value] : node_->items())
            if (!seen_.count(key))
                errors_.push_back("unknown key " + name_ + "." + key);
    }

  private:
    std::string name_;
    std::vector<std::string>& errors_;
    const json* node_ = nullptr;
    std::set<std::string> seen_;
};

json toml_to_json(const toml::node& node)
{
    if (auto t = node.as_table())
    {
        json out = json::object();
        for (const auto& [k, v] : *t)
            out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (auto a = node.as_array())
    {
        json out = json::array();
        for (const auto& v : *a)
            out.push_back(toml_to_json(v));
        return out;
    }
    if (auto v = node.as_integer())
        return v->get();
    if (auto v = node.as_floating_point())
        return v->get();
    if (auto v = node.as_boolean())
        return v->get();
    if (auto v = node.as_string())
        return v->get();
    std::ostringstream os;
    node.visit([&](auto&& n) { os << n; });
    return os.str();
}

std::size_t line_of(const std::string& text, std::size_t byte)
{
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

InitialProfile profile_from_string(const std::string& s)
{
    if (s == "zero")
        return InitialProfile::zero;
    if (s == "micro_gaussian")
        return InitialProfile::micro_gaussian;
    if (s == "maxwellian")
        return InitialProfile::maxwellian;
    if (s == "pulse")
        return InitialProfile::pulse;
    throw InvalidParameter("unknown initial profile '" + s + "'");
}

DomainKind domain_kind_from_string(const std::string& s)
{
    if (s == "slab")
        return DomainKind::slab;
    if (s == "ball")
        return DomainKind::ball;
    if (s == "ellipsoid")
        return DomainKind::ellipsoid;
    throw InvalidParameter("unknown domain kind '" + s + "' (slab, ball, ellipsoid)");
}

// Runs a string-to-enum conversion and records failure instead of throwing.
template <class F>
void convert(std::vector<std::string>& errors, F&& f)
{
    try
    {
        f();
    }
    catch (const Error& e)
    {
        errors.push_back(e.what());
    }
}

} // namespace

std::string to_string(InitialProfile p)
{
    switch (p)
    {
        case InitialProfile::zero: return "zero";
        case InitialProfile::micro_gaussian: return "micro_gaussian";
        case InitialProfile::maxwellian: return "maxwellian";
        case InitialProfile::pulse: return "pulse";
    }
    return "unknown";
}

Domain DomainSpec::build() const
{
    switch (kind)
    {
        case DomainKind::slab: return Domain::slab(half_width);
        case DomainKind::ball: return Domain::ball(radius, dim);
        case DomainKind::ellipsoid: return Domain::ellipsoid(semi_axes);
        case DomainKind::level_set: break;
    }
    throw InvalidParameter("level-set domains cannot be built from a config");
}

ScenarioConfig config_from_json(const json& root)
{
    ScenarioConfig c;
    std::vector<std::string> errors;
    if (!root.is_object())
        throw ValidationError("top level must be a table");

    static const std::set<std::string> sections{"domain", "grid", "collision", "weights", "bc",
                                                "time", "output", "initial", "seed"};
    for (const auto& [key, value] : root.items())
        if (!sections.count(key))
            errors.push_back("unknown section or key '" + key + "'");

    {
        Section s(root, "domain", errors);
        std::string kind = to_string(c.domain.kind);
        s.get("kind", kind);
        convert(errors, [&] { c.domain.kind = domain_kind_from_string(kind); });
        s.get("L", c.domain.half_width);
        s.get("radius", c.domain.radius);
        s.get("dim", c.domain.dim);
        double a = 1, b = 1, cc = 1;
        s.get("a", a);
        s.get("b", b);
        s.get("c", cc);
        c.domain.semi_axes = Vec3(a, b, cc);
        s.finish();
    }
    {
        Section s(root, "grid", errors);
        s.get("n_x", c.grid.n_x);
        s.get("n_v", c.grid.n_v);
        s.get("v_max", c.grid.v_max);
        s.finish();
    }
    {
        Section s(root, "collision", errors);
        auto& p = c.collision.params;
        s.get("varrho", p.varrho);
        s.get("eps_chi", p.eps_chi);
        s.get("n_theta", p.n_theta);
        s.get("n_phi", p.n_phi);
        std::string b0 = to_string(p.b0), mode = to_string(c.collision.mode);
        s.get("b0", b0);
        s.get("mode", mode);
        convert(errors, [&] { p.b0 = angular_kernel_from_string(b0); });
        convert(errors, [&] { c.collision.mode = collision_mode_from_string(mode); });
        s.get("cache_dir", c.collision.cache_dir);
        s.finish();
    }
    {
        Section s(root, "weights", errors);
        auto& w = c.weights.params;
        s.get("q", w.q);
        s.get("theta", w.theta);
        s.get("vartheta", w.vartheta);
        double l0 = std::nan("");
        s.get("lambda0", l0);
        if (!std::isnan(l0))
            c.weights.lambda0 = l0;
        s.finish();
    }
    if (root.contains("bc"))
    {
        const json& bc = root.at("bc");
        std::string kind = to_string(c.bc);
        if (bc.is_string())
            kind = bc.get<std::string>();
        else
        {
            Section s(root, "bc", errors);
            s.get("kind", kind);
            s.finish();
        }
        convert(errors, [&] { c.bc = boundary_kind_from_string(kind); });
    }
    {
        Section s(root, "time", errors);
        s.get("dt", c.time.dt);
        s.get("n_steps", c.time.n_steps);
        s.get("sample_every", c.time.sample_every);
        s.get("pin_conserved", c.time.pin_conserved);
        s.finish();
    }
    {
        Section s(root, "output", errors);
        s.get("diagnostics", c.output.diagnostics);
        s.get("field", c.output.field);
        s.get("grazing_eps", c.output.grazing_eps);
        s.finish();
    }
    {
        Section s(root, "initial", errors);
        std::string profile = to_string(c.initial.profile);
        s.get("profile", profile);
        convert(errors, [&] { c.initial.profile = profile_from_string(profile); });
        s.get("amplitude", c.initial.amplitude);
        s.get("modulation", c.initial.modulation);
        s.get("width", c.initial.width);
        s.finish();
    }
    if (root.contains("seed"))
    {
        const json& s = root.at("seed");
        if (s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0))
            c.seed = s.get<std::uint64_t>();
        else
            errors.push_back("seed must be a non-negative integer");
    }

    // The soft-potential exponent is shared by the kernel and the weight.
    c.weights.params.varrho = c.collision.params.varrho;
    for (auto& v : c.violations())
        errors.push_back(std::move(v));
    if (!errors.empty())
    {
        std::ostringstream os;
        os << errors.size() << " problem(s) in configuration";
        for (const auto& e : errors)
            os << "\n  - " << e;
        throw ValidationError(os.str());
    }
    return c;
}

std::vector<std::string> ScenarioConfig::violations() const
{
    std::vector<std::string> out = weights.params.violations();
    const auto& p = collision.params;
    if (!(p.eps_chi > 0.0))
        out.push_back("collision.eps_chi must be positive");
    if (p.n_theta < 1 || p.n_phi < 1 || p.n_omega() < 32)
        out.push_back("collision: n_theta * n_phi must be at least 32");
    if (!(domain.half_width > 0.0))
        out.push_back("domain.L must be positive");
    if (!(domain.radius > 0.0))
        out.push_back("domain.radius must be positive");
    if (domain.dim < 1 || domain.dim > 3)
        out.push_back("domain.dim must be 1, 2 or 3");
    if (!(domain.semi_axes.minCoeff() > 0.0))
        out.push_back("domain semi-axes must be positive");
    if (grid.n_x < 2)
        out.push_back("grid.n_x must be at least 2");
    if (grid.n_v < 4)
        out.push_back("grid.n_v must be at least 4");
    if (!(grid.v_max > 0.0))
        out.push_back("grid.v_max must be positive");
    if (!(time.dt > 0.0))
        out.push_back("time.dt must be positive");
    if (time.n_steps < 0)
        out.push_back("time.n_steps must be non-negative");
    if (time.sample_every < 1)
        out.push_back("time.sample_every must be at least 1");
    if (!(output.grazing_eps > 0.0 && output.grazing_eps < 1.0))
        out.push_back("output.grazing_eps must lie in (0, 1)");
    if (weights.lambda0 && !(*weights.lambda0 > 0.0))
        out.push_back("weights.lambda0 must be positive");
    if (!(initial.width > 0.0))
        out.push_back("initial.width must be positive");
    return out;
}

nlohmann::ordered_json ScenarioConfig::to_json() const
{
    nlohmann::ordered_json j;
    j["domain"] = {{"kind", to_string(domain.kind)},
                   {"L", domain.half_width},
                   {"radius", domain.radius},
                   {"dim", domain.dim},
                   {"a", domain.semi_axes[0]},
                   {"b", domain.semi_axes[1]},
                   {"c", domain.semi_axes[2]}};
    j["grid"] = {{"n_x", grid.n_x}, {"n_v", grid.n_v}, {"v_max", grid.v_max}};
    const auto& p = collision.params;
    j["collision"] = {{"varrho", p.varrho},
                      {"eps_chi", p.eps_chi},
                      {"n_theta", p.n_theta},
                      {"n_phi", p.n_phi},
                      {"b0", to_string(p.b0)},
                      {"mode", to_string(collision.mode)},
                      {"cache_dir", collision.cache_dir}};
    j["weights"] = {{"q", weights.params.q}, {"theta", weights.params.theta}, {"vartheta", weights.params.vartheta}};
    if (weights.lambda0)
        j["weights"]["lambda0"] = *weights.lambda0;
    j["bc"] = {{"kind", to_string(bc)}};
    j["time"] = {{"dt", time.dt},
                 {"n_steps", time.n_steps},
                 {"sample_every", time.sample_every},
                 {"pin_conserved", time.pin_conserved}};
    j["output"] = {{"diagnostics", output.diagnostics}, {"field", output.field}, {"grazing_eps", output.grazing_eps}};
    j["initial"] = {{"profile", to_string(initial.profile)},
                    {"amplitude", initial.amplitude},
                    {"modulation", initial.modulation},
                    {"width", initial.width}};
    j["seed"] = seed;
    return j;
}

std::string ScenarioConfig::hash() const
{
    const std::string text = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text)
    {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScenarioConfig parse_config_string(const std::string& text, const std::string& format)
{
    json root;
    if (format == "toml")
    {
        try
        {
            root = toml_to_json(toml::parse(text));
        }
        catch (const toml::parse_error& e)
        {
            std::ostringstream os;
            os << "line " << e.source().begin.line << ", column " << e.source().begin.column << ": "
               << e.description();
            throw ParseError(os.str());
        }
    }
    else if (format == "json")
    {
        try
        {
            root = json::parse(text);
        }
        catch (const json::parse_error& e)
        {
            throw ParseError("line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
        }
    }
    else
        throw ParseError("unsupported config format '" + format + "' (use .toml or .json)");
    return config_from_json(root);
}

ScenarioConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ParseError("cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    std::string ext = path.extension().string();
    if (!ext.empty())
        ext.erase(0, 1);
    return parse_config_string(ss.str(), ext);
}

DistributionField make_initial_field(const ScenarioConfig& cfg, const VelocityGrid& grid)
{
    DistributionField f(cfg.domain.half_width, cfg.grid.n_x, grid);
    const double a = cfg.initial.amplitude;
    const double L = cfg.domain.half_width;
    switch (cfg.initial.profile)
    {
        case InitialProfile::zero: break;
        case InitialProfile::maxwellian:
            f.fill([&](double, const Vec3& v) { return a * sqrt_maxwellian_sq(v.squaredNorm()); });
            break;
        case InitialProfile::pulse:
        {
            const double wdt = cfg.initial.width;
            f.fill([&](double x, const Vec3& v) {
                return a * std::exp(-(x / wdt) * (x / wdt)) * std::exp(-0.25 * v.squaredNorm());
            });
            break;
        }
        case InitialProfile::micro_gaussian:
        {
            const MacroProjection mp(grid);
            const double q = cfg.weights.params.q;
            GridVector base = grid.sample([&](const Vec3& v) { return std::exp(-0.25 * q * v.squaredNorm()); });
            base -= mp.project(base);
            for (int i = 0; i < f.cells(); ++i)
                f.values().col(i) = a * (1.0 + cfg.initial.modulation * std::cos(M_PI * f.x(i) / L)) * base;
            break;
        }
    }
    return f;
}

std::string library_version() { return "0.1.0"; }

nlohmann::ordered_json metadata_record(const std::string& config_hash, std::uint64_t seed, const std::string& timestamp)
{
    std::string ts = timestamp;
    if (ts.empty())
    {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        ts = buf;
    }
    nlohmann::ordered_json j;
    j["record"] = "metadata";
    j["version"] = library_version();
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["timestamp"] = ts;
    return j;
}

} // namespace kinlab
