#include "isofit/config.hpp"

#include "isofit/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace isofit {

namespace pt = boost::property_tree;

std::string_view to_string(ModelKind kind) noexcept
{
    switch (kind) {
    case ModelKind::Gaussian: return "gaussian";
    case ModelKind::Gamma: return "gamma";
    case ModelKind::Column: return "column";
    case ModelKind::Linear: return "linear";
    }
    return "unknown";
}

ModelKind model_kind_from_string(std::string_view name)
{
    if (name == "gaussian") return ModelKind::Gaussian;
    if (name == "gamma") return ModelKind::Gamma;
    if (name == "column") return ModelKind::Column;
    if (name == "linear") return ModelKind::Linear;
    throw Error(ErrorKind::ConfigError, "unknown model: " + std::string(name));
}

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(std::span<const double> values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ", ";
        out += fmt(values[i]);
    }
    return out;
}

double to_double(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (text.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, key + ": not a number: '" + text + "'");
    }
}

std::vector<double> to_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(to_double(key, item));
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        if (text.find('-') != std::string::npos) throw std::invalid_argument(text);
        const unsigned long long v = std::stoull(text, &used);
        if (text.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, key + ": not an unsigned integer: '" + text + "'");
    }
}

bool to_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw Error(ErrorKind::ConfigError, key + ": not a boolean: '" + text + "'");
}

std::string_view to_string(TimeCoupling c)
{
    return c == TimeCoupling::JacobianElimination ? "jacobian_elimination" : "conservative";
}

TimeCoupling coupling_from_string(const std::string& text)
{
    if (text == "jacobian_elimination") return TimeCoupling::JacobianElimination;
    if (text == "conservative") return TimeCoupling::Conservative;
    throw Error(ErrorKind::ConfigError, "unknown column coupling: " + text);
}

std::string_view to_string(Sigma2Ratio r)
{
    return r == Sigma2Ratio::Exact ? "exact" : "literal_mgdg";
}

Sigma2Ratio sigma2_ratio_from_string(const std::string& text)
{
    if (text == "exact") return Sigma2Ratio::Exact;
    if (text == "literal_mgdg") return Sigma2Ratio::LiteralMgdg;
    throw Error(ErrorKind::ConfigError, "unknown sigma2 ratio: " + text);
}

/// Reads keys from a ptree and remembers which ones were consumed so that
/// unknown keys can be reported.
class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> get(const std::string& path)
    {
        const auto node = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!node) return std::nullopt;
        seen_.push_back(path);
        return *node;
    }

    template <class T, class Convert>
    void read(const std::string& path, T& target, Convert convert)
    {
        if (auto text = get(path)) target = convert(path, *text);
    }

    void number(const std::string& path, double& target) { read(path, target, to_double); }
    void list(const std::string& path, std::vector<double>& target) { read(path, target, to_list); }
    void flag(const std::string& path, bool& target) { read(path, target, to_bool); }
    void count(const std::string& path, std::size_t& target)
    {
        read(path, target, [](const std::string& k, const std::string& t) {
            return static_cast<std::size_t>(to_u64(k, t));
        });
    }

    void reject_unknown() const
    {
        for (const auto& [section, body] : tree_) {
            if (body.empty()) {
                throw Error(ErrorKind::ConfigError, "key outside a section: " + section);
            }
            for (const auto& [key, value] : body) {
                const std::string path = section + "." + key;
                if (std::find(seen_.begin(), seen_.end(), path) == seen_.end()) {
                    throw Error(ErrorKind::ConfigError, "unknown config key: " + path);
                }
            }
        }
    }

private:
    const pt::ptree& tree_;
    std::vector<std::string> seen_;
};

} // namespace

std::vector<std::string> preset_names()
{
    return {"case1", "case2", "case3", "chroma", "linear"};
}

RunConfig RunConfig::from_preset(std::string_view name)
{
    RunConfig c;
    c.preset = std::string(name);
    c.psi.alpha = 2.0;
    c.psi.burn_in = 500;
    c.psi.chain_length = 10000;
    c.psi.init_candidates = 1000;
    c.noise_variance = 0.001;
    if (name == "case1") {
        c.model = ModelKind::Gaussian;
        c.components = 2;
        c.map = MapKind::WeightSum;
        c.truth = {1.0 / 3.0, 2.0 / 3.0, 8.0 / 3.0, 4.0 / 3.0};
        c.grid_lo = c.window_lo = -2.0;
        c.grid_hi = c.window_hi = 7.0;
        c.grid_points = 50;
        c.psi.gamma = 8.0;
        c.psi.eta_proposal_sd = {0.02, 0.02};
        c.psi.tau = 0.001;
        c.psi.m = 200;
        c.psi.sort_rule = SortRule::SwapSmallerFirst;
    } else if (name == "case2") {
        c.model = ModelKind::Gaussian;
        c.components = 4;
        c.map = MapKind::WeightSum;
        c.truth = {1.0 / 6.0, 5.0 / 6.0, 5.0 / 2.0, 5.0 / 2.0, 16.0 / 3.0, 8.0 / 3.0, 9.0, 3.0};
        c.grid_lo = c.window_lo = -4.0;
        c.grid_hi = c.window_hi = 15.0;
        c.grid_points = 100;
        c.psi.gamma = 10.0;
        c.psi.eta_proposal_sd = {0.02, 0.02, 0.02, 0.02};
        c.psi.eta_tilde_proposal_sd = {0.05, 0.05, 0.05, 0.05};
        c.psi.tau = 0.001;
        c.psi.m = 200;
        c.psi.sort_rule = SortRule::SortAscending;
    } else if (name == "case3") {
        c.model = ModelKind::Gamma;
        c.components = 2;
        c.map = MapKind::ShapeScale;
        c.truth = {4.0, 0.75, 2.0, 0.25};
        c.grid_lo = c.window_lo = 0.0;
        c.grid_hi = c.window_hi = 10.0;
        c.grid_points = 200;
        c.psi.gamma = 8.0;
        c.psi.eta_proposal_sd = {0.08, 0.33};
        c.eta_proposal_sd_malg = {0.05, 0.15};
        c.psi.tau = 0.0002;
        c.psi.m = 200;
        c.psi.sort_rule = SortRule::None;
    } else if (name == "chroma") {
        c.model = ModelKind::Column;
        c.map = MapKind::ChromaRatioSum;
        c.column.inject_duration = 2.5;
        c.truth = {2.0, 1.0, 0.1, 0.05};
        c.grid_lo = 300.0;
        c.grid_hi = 500.0;
        c.grid_points = 100;
        c.window_lo = 0.0;
        c.window_hi = 750.0;
        c.psi.gamma = 8.0;
        c.psi.eta_proposal_sd = {0.02, 0.02};
        c.psi.eta_tilde_proposal_sd = {0.05, 0.05};
        c.psi.tau = 1e-8;
        c.psi.m = 20;
        c.psi.chain_length = 3000;
        c.psi.init_candidates = 600;
        c.psi.sort_rule = SortRule::None;
        c.unconstrained = true;
        c.nu_start.default_nu = {2.5, 0.1};
        // The loss has a long curved valley in nu here; see README.
        c.gd.method = RestoreMethod::LevenbergMarquardt;
    } else if (name == "linear") {
        c.model = ModelKind::Linear;
        c.components = 1;
        c.map = MapKind::Identity;
        c.identity_eta_size = 1;
        c.truth = {2.0};
        c.noise_variance = 0.01;
        c.grid_lo = c.window_lo = 0.0;
        c.grid_hi = c.window_hi = 1.0;
        c.grid_points = 20;
        c.psi.gamma = 0.0;
        c.psi.eta_proposal_sd = {0.05};
        c.psi.xi_proposal_sd = {0.05};
        c.psi.tau = 0.001;
        c.psi.m = 5;
        c.psi.init_candidates = 1;
        c.psi.sort_rule = SortRule::None;
        return c;
    } else {
        throw Error(ErrorKind::ConfigError, "unknown preset: " + std::string(name));
    }
    // Metropolis-within-Gibbs proposal scale; not given by the tables.
    c.psi.xi_proposal_sd.assign(c.truth.size(), 0.02);
    return c;
}

std::string RunConfig::serialize() const
{
    std::ostringstream out;
    const auto line = [&](const std::string& key, const std::string& value) {
        out << key << " = " << value << "\n";
    };
    out << "[run]\n";
    line("preset", preset);
    line("sampler", std::string(to_string(sampler)));
    line("seed", std::to_string(seed));
    line("chain_length", std::to_string(psi.chain_length));
    line("burn_in", std::to_string(psi.burn_in));
    line("init_candidates", std::to_string(psi.init_candidates));

    out << "\n[model]\n";
    line("kind", std::string(to_string(model)));
    line("components", std::to_string(components));
    line("map", std::string(to_string(map)));
    line("identity_eta_size", std::to_string(identity_eta_size));
    line("sort_rule", std::string(to_string(psi.sort_rule)));

    out << "\n[column]\n";
    line("velocity_cm_per_s", fmt(column.velocity));
    line("length_cm", fmt(column.length));
    line("phase_ratio", fmt(column.phase_ratio));
    line("dispersion_cm2_per_s", fmt(column.dispersion));
    line("horizon_s", fmt(column.horizon));
    line("inject_mM", fmt_list(column.inject));
    line("inject_duration_s", fmt(column.inject_duration));
    line("initial_mM", fmt_list(column.initial));
    line("cells", std::to_string(column.cells));
    line("time_step_s", fmt(column.time_step));
    line("cfl", fmt(column.cfl));
    line("coupling", std::string(to_string(column.coupling)));

    out << "\n[data]\n";
    line("truth", fmt_list(truth));
    line("noise_variance", fmt(noise_variance));
    line("grid_lo", fmt(grid_lo));
    line("grid_hi", fmt(grid_hi));
    line("grid_points", std::to_string(grid_points));
    line("window_lo", fmt(window_lo));
    line("window_hi", fmt(window_hi));
    line("observation_file", observation_file);
    line("data_seed", data_seed ? std::to_string(*data_seed) : "run");

    out << "\n[prior]\n";
    line("alpha", fmt(psi.alpha));
    line("beta", beta_auto ? "auto" : fmt(psi.beta));
    line("gamma", fmt(psi.gamma));

    out << "\n[proposal]\n";
    line("eta_sd", fmt_list(psi.eta_proposal_sd));
    line("eta_sd_malg", fmt_list(eta_proposal_sd_malg));
    line("eta_tilde_sd", fmt_list(psi.eta_tilde_proposal_sd));
    line("xi_sd", fmt_list(psi.xi_proposal_sd));
    line("sigma2_log_sd", fmt(psi.sigma2_log_sd));
    line("sigma2_ratio", std::string(to_string(sigma2_ratio)));

    out << "\n[langevin]\n";
    line("tau", fmt(psi.tau));
    line("m", std::to_string(psi.m));
    line("unconstrained", unconstrained ? "true" : "false");
    line("literal_density", literal_langevin_density ? "true" : "false");
    line("eta_per_coordinate", eta_per_coordinate ? "true" : "false");

    out << "\n[gd]\n";
    line("method", std::string(to_string(gd.method)));
    line("max_iter", std::to_string(gd.max_iter));
    line("step", fmt(gd.step));
    line("grad_tol", fmt(gd.grad_tol));
    line("backtrack_limit", std::to_string(gd.backtrack_limit));
    line("shrink", fmt(gd.shrink));
    line("nu_floor", fmt(gd.nu_floor));
    line("step_tol", fmt(gd.step_tol));
    line("restore_per_coordinate", restore_per_coordinate ? "true" : "false");

    out << "\n[nu_init]\n";
    line("default", fmt_list(nu_start.default_nu));
    line("smoothing", std::to_string(nu_start.smoothing));
    line("shape_grid", std::to_string(nu_start.shape_grid));
    line("shape_max", fmt(nu_start.shape_max));

    out << "\n[output]\n";
    line("dir", out_dir);
    line("dump_field", dump_field ? "true" : "false");
    return out.str();
}

RunConfig RunConfig::parse(const std::string& text)
{
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::ConfigError, std::string("malformed config: ") + e.what());
    }
    Reader r(tree);
    // Start from the named preset so a config only needs to list overrides.
    RunConfig c;
    if (auto preset = r.get("run.preset")) {
        const auto names = preset_names();
        c = std::find(names.begin(), names.end(), *preset) != names.end() ? from_preset(*preset)
                                                                          : RunConfig{};
        c.preset = *preset;
    }
    const auto text_of = [](const std::string&, const std::string& t) { return t; };

    r.read("run.sampler", c.sampler, [](const std::string&, const std::string& t) {
        return sampler_kind_from_string(t);
    });
    r.read("run.seed", c.seed, to_u64);
    r.count("run.chain_length", c.psi.chain_length);
    r.count("run.burn_in", c.psi.burn_in);
    r.count("run.init_candidates", c.psi.init_candidates);

    r.read("model.kind", c.model, [](const std::string&, const std::string& t) {
        return model_kind_from_string(t);
    });
    r.count("model.components", c.components);
    r.read("model.map", c.map, [](const std::string&, const std::string& t) {
        return map_kind_from_string(t);
    });
    r.count("model.identity_eta_size", c.identity_eta_size);
    r.read("model.sort_rule", c.psi.sort_rule, [](const std::string&, const std::string& t) {
        return sort_rule_from_string(t);
    });

    r.number("column.velocity_cm_per_s", c.column.velocity);
    r.number("column.length_cm", c.column.length);
    r.number("column.phase_ratio", c.column.phase_ratio);
    r.number("column.dispersion_cm2_per_s", c.column.dispersion);
    r.number("column.horizon_s", c.column.horizon);
    const auto pair_of = [](const std::string& k, const std::string& t) {
        const std::vector<double> v = to_list(k, t);
        if (v.size() != 2) throw Error(ErrorKind::ConfigError, k + ": expected two values");
        return std::array<double, 2>{v[0], v[1]};
    };
    r.read("column.inject_mM", c.column.inject, pair_of);
    r.number("column.inject_duration_s", c.column.inject_duration);
    r.read("column.initial_mM", c.column.initial, pair_of);
    r.count("column.cells", c.column.cells);
    r.number("column.time_step_s", c.column.time_step);
    r.number("column.cfl", c.column.cfl);
    r.read("column.coupling", c.column.coupling,
           [](const std::string&, const std::string& t) { return coupling_from_string(t); });

    r.list("data.truth", c.truth);
    r.number("data.noise_variance", c.noise_variance);
    r.number("data.grid_lo", c.grid_lo);
    r.number("data.grid_hi", c.grid_hi);
    r.count("data.grid_points", c.grid_points);
    r.number("data.window_lo", c.window_lo);
    r.number("data.window_hi", c.window_hi);
    r.read("data.observation_file", c.observation_file, text_of);
    if (auto s = r.get("data.data_seed")) {
        c.data_seed = *s == "run" ? std::nullopt : std::optional<std::uint64_t>(to_u64("data.data_seed", *s));
    }

    r.number("prior.alpha", c.psi.alpha);
    if (auto b = r.get("prior.beta")) {
        c.beta_auto = *b == "auto";
        if (!c.beta_auto) c.psi.beta = to_double("prior.beta", *b);
    }
    r.number("prior.gamma", c.psi.gamma);

    r.list("proposal.eta_sd", c.psi.eta_proposal_sd);
    r.list("proposal.eta_sd_malg", c.eta_proposal_sd_malg);
    r.list("proposal.eta_tilde_sd", c.psi.eta_tilde_proposal_sd);
    r.list("proposal.xi_sd", c.psi.xi_proposal_sd);
    r.number("proposal.sigma2_log_sd", c.psi.sigma2_log_sd);
    r.read("proposal.sigma2_ratio", c.sigma2_ratio,
           [](const std::string&, const std::string& t) { return sigma2_ratio_from_string(t); });

    r.number("langevin.tau", c.psi.tau);
    r.count("langevin.m", c.psi.m);
    r.flag("langevin.unconstrained", c.unconstrained);
    r.flag("langevin.literal_density", c.literal_langevin_density);
    r.flag("langevin.eta_per_coordinate", c.eta_per_coordinate);

    r.read("gd.method", c.gd.method, [](const std::string&, const std::string& t) {
        return restore_method_from_string(t);
    });
    r.count("gd.max_iter", c.gd.max_iter);
    r.number("gd.step", c.gd.step);
    r.number("gd.grad_tol", c.gd.grad_tol);
    r.count("gd.backtrack_limit", c.gd.backtrack_limit);
    r.number("gd.shrink", c.gd.shrink);
    r.number("gd.nu_floor", c.gd.nu_floor);
    r.number("gd.step_tol", c.gd.step_tol);
    r.flag("gd.restore_per_coordinate", c.restore_per_coordinate);

    r.list("nu_init.default", c.nu_start.default_nu);
    r.count("nu_init.smoothing", c.nu_start.smoothing);
    r.count("nu_init.shape_grid", c.nu_start.shape_grid);
    r.number("nu_init.shape_max", c.nu_start.shape_max);

    r.read("output.dir", c.out_dir, text_of);
    r.flag("output.dump_field", c.dump_field);
    r.reject_unknown();
    return c;
}

RunConfig RunConfig::with_overrides(const std::vector<std::string>& assignments) const
{
    if (assignments.empty()) return *this;
    pt::ptree tree;
    std::istringstream in(serialize());
    pt::ini_parser::read_ini(in, tree);
    for (const std::string& a : assignments) {
        const auto eq = a.find('=');
        const auto dot = a.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw Error(ErrorKind::ConfigError, "override must look like section.key=value: " + a);
        }
        const std::string path = a.substr(0, eq);
        if (!tree.get_child_optional(pt::ptree::path_type(path, '.'))) {
            throw Error(ErrorKind::ConfigError, "unknown config key: " + path);
        }
        tree.put(pt::ptree::path_type(path, '.'), a.substr(eq + 1));
    }
    std::ostringstream out;
    pt::ini_parser::write_ini(out, tree);
    return parse(out.str());
}

RunConfig RunConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

void RunConfig::validate() const
{
    const auto fail = [](const std::string& what) { throw Error(ErrorKind::ConfigError, what); };
    Hyperparameters p = hyperparameters();
    p.validate();
    gd.validate();
    const ReparamMap m = reparam_map();
    const ForwardModel f = forward_model();
    if (f.dimension() != m.dimension()) fail("model and reparameterization dimensions differ");
    if (observation_file.empty()) {
        if (truth.size() != m.dimension()) fail("truth needs one entry per parameter");
        ParameterVector checked(truth);
        if (!(noise_variance >= 0.0)) fail("noise variance must be >= 0");
        if (grid_points < 2 || !(grid_lo < grid_hi)) fail("grid needs lo < hi and at least 2 points");
        if (grid_lo < window_lo || grid_hi > window_hi) fail("grid must lie inside the recording window");
    } else if (!std::filesystem::exists(observation_file)) {
        fail("observation file not found: " + observation_file);
    }
    if (!truth.empty() && truth.size() != m.dimension()) fail("truth needs one entry per parameter");
    if (!nu_start.default_nu.empty() && nu_start.default_nu.size() != m.nu_size()) {
        fail("nu_init.default needs one entry per nu coordinate");
    }
    if (sampler == SamplerKind::MwG && p.xi_proposal_sd.size() != m.dimension()) {
        fail("proposal.xi_sd needs one entry per parameter");
    }
    if (sampler != SamplerKind::MwG) {
        const auto& sd = sampler == SamplerKind::MALG && unconstrained ? p.eta_tilde_proposal_sd
                                                                        : p.eta_proposal_sd;
        if (sd.size() != m.eta_size()) fail("eta proposal sd needs one entry per eta coordinate");
    }
    if (model == ModelKind::Column) column.validate();
}

ForwardModel RunConfig::forward_model() const
{
    switch (model) {
    case ModelKind::Gaussian: return ForwardModel(MixtureModel::gaussian(components));
    case ModelKind::Gamma: return ForwardModel(MixtureModel::gamma(components));
    case ModelKind::Column: return ForwardModel(column);
    case ModelKind::Linear: return ForwardModel(LinearRamp{});
    }
    throw Error(ErrorKind::ConfigError, "unknown model kind");
}

ReparamMap RunConfig::reparam_map() const
{
    switch (map) {
    case MapKind::WeightSum: return ReparamMap::weight_sum(components);
    case MapKind::ShapeScale: return ReparamMap::shape_scale(components);
    case MapKind::ChromaRatioSum: return ReparamMap::chroma_ratio_sum(column.inject[1] > 0.0 ? 2 : 1);
    case MapKind::Identity:
        return ReparamMap::identity(forward_model().dimension(), identity_eta_size);
    }
    throw Error(ErrorKind::ConfigError, "unknown map kind");
}

std::vector<double> RunConfig::grid() const
{
    return equally_spaced(grid_lo, grid_hi, grid_points);
}

Hyperparameters RunConfig::hyperparameters() const
{
    Hyperparameters p = psi;
    if (sampler == SamplerKind::MALG && !eta_proposal_sd_malg.empty()) {
        p.eta_proposal_sd = eta_proposal_sd_malg;
    }
    // Placeholder until the run computes it from the initial fit.
    if (beta_auto) p.beta = 1.0;
    return p;
}

SamplerSettings RunConfig::sampler_settings() const
{
    SamplerSettings s;
    s.kind = sampler;
    s.seed = seed;
    s.gd = gd;
    s.nu_start = nu_start;
    s.sigma2_ratio = sigma2_ratio;
    s.beta_auto = beta_auto;
    s.restore_per_coordinate = restore_per_coordinate;
    s.eta_per_coordinate = eta_per_coordinate;
    s.unconstrained = sampler == SamplerKind::MALG && unconstrained;
    s.literal_langevin_density = literal_langevin_density;
    return s;
}

std::string config_hash(const RunConfig& config)
{
    const std::string text = config.serialize();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "SHA-256 failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

} // namespace isofit
