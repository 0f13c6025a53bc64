#include "ccf/config.hpp"

#include "ccf/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

namespace ccf {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double to_number(const std::string& key, const std::string& text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("config key '{}': '{}' is not a number", key, text));
    }
}

std::vector<double> number_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    const auto colon = text.find(':');
    if (colon != std::string::npos && text.find(',') == std::string::npos) {
        const double lo = to_number(key, text.substr(0, colon)), hi = to_number(key, text.substr(colon + 1));
        for (double u = lo; u <= hi + 1e-12; u += 1.0) out.push_back(u);
        return out;
    }
    for (const auto& s : split_list(text)) out.push_back(to_number(key, s));
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ",") + fmt::format("{:g}", x);
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(fmt::format("config key '{}': '{}' is not a boolean", key, text));
}

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : section) {
        if (!allowed.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in section [{}]", key, name));
    }
}

ParameterVector read_model(const pt::ptree& model) {
    const auto tag = model_tag_from_string(model.get<std::string>("tag", "svcdej"));
    ParameterVector params(tag);
    std::set<std::string> allowed{"tag", "fixed", "free", "exogenous"};
    for (const auto& spec : params.specs()) allowed.insert(spec.name);
    check_keys(model, "model", allowed);
    for (const auto& spec : params.specs()) {
        if (auto v = model.get_optional<std::string>(spec.name)) params.set(spec.name, to_number(spec.name, *v));
    }
    if (auto fixed = model.get_optional<std::string>("fixed")) {
        for (const auto& spec : params.specs()) params.fix(spec.name, false);
        for (const auto& n : split_list(*fixed)) {
            if (!params.has(n)) throw ConfigError(fmt::format("fixed: unknown parameter '{}'", n));
            params.fix(n, true);
        }
    }
    if (auto free = model.get_optional<std::string>("free")) {
        for (const auto& n : split_list(*free)) {
            if (!params.has(n)) throw ConfigError(fmt::format("free: unknown parameter '{}'", n));
            params.fix(n, false);
        }
    }
    return params;
}

void put_model(pt::ptree& tree, const ParameterVector& params) {
    tree.put("model.tag", to_string(params.tag()));
    std::string fixed;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& spec = params.specs()[i];
        tree.put("model." + spec.name, fmt::format("{:.17g}", params.value_at(i)));
        if (params.fixed_at(i)) fixed += (fixed.empty() ? "" : ",") + spec.name;
    }
    tree.put("model.fixed", fixed);
}

}  // namespace

ParameterVector parse_parameters(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("parameter file: {}", e.what()));
    }
    const auto model = tree.get_child_optional("model");
    if (!model) throw ConfigError("parameter file: missing [model] section");
    return read_model(*model);
}

void write_parameters(std::ostream& out, const ParameterVector& params) {
    pt::ptree tree;
    put_model(tree, params);
    pt::write_ini(out, tree);
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    check_keys(tree, "root", {"model", "data", "simulation", "spanning", "filter", "estimation", "output"});
    RunConfig cfg;
    const pt::ptree empty;
    const auto& model = tree.get_child("model", empty);
    cfg.model = read_model(model);
    if (auto exo = model.get_optional<std::string>("exogenous")) {
        if (*exo == "frozen") cfg.exogenous = ExogenousTreatment::Frozen;
        else if (*exo == "dynamic") cfg.exogenous = ExogenousTreatment::Dynamic;
        else throw ConfigError(fmt::format("model.exogenous must be frozen or dynamic, got '{}'", *exo));
    }
    cfg.estimation.system.model.exogenous = cfg.exogenous;

    const auto& data = tree.get_child("data", empty);
    check_keys(data, "data", {"quotes", "rates", "panel", "covariance", "path", "day_count", "tenor_targets",
                              "max_ask_bid_ratio", "min_calendar_days", "max_calendar_days", "early_closures"});
    cfg.data.quotes = data.get("quotes", std::string{});
    cfg.data.rates = data.get("rates", std::string{});
    cfg.data.panel = data.get("panel", std::string{});
    cfg.data.covariance = data.get("covariance", std::string{});
    cfg.data.path = data.get("path", std::string{});
    if (auto v = data.get_optional<std::string>("day_count")) cfg.data.day_count = to_number("day_count", *v);
    if (auto v = data.get_optional<std::string>("tenor_targets")) {
        for (double d : number_list("tenor_targets", *v)) cfg.data.tenor_targets.push_back(static_cast<int>(d));
    }
    if (auto v = data.get_optional<std::string>("max_ask_bid_ratio")) cfg.data.filters.max_ask_bid_ratio = to_number("max_ask_bid_ratio", *v);
    if (auto v = data.get_optional<std::string>("min_calendar_days")) cfg.data.filters.min_calendar_days = static_cast<int>(to_number("min_calendar_days", *v));
    if (auto v = data.get_optional<std::string>("max_calendar_days")) cfg.data.filters.max_calendar_days = static_cast<int>(to_number("max_calendar_days", *v));
    if (auto v = data.get_optional<std::string>("early_closures")) {
        for (const auto& d : split_list(*v)) cfg.data.filters.early_closures.push_back(parse_date(d));
    }
    for (const auto* p : {&cfg.data.quotes, &cfg.data.rates, &cfg.data.panel, &cfg.data.covariance, &cfg.data.path}) {
        if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError(fmt::format("data file '{}' does not exist", *p));
    }

    const auto& sim = tree.get_child("simulation", empty);
    check_keys(sim, "simulation", {"dates", "dt", "substeps", "forward0", "variance0", "exogenous0", "tenors",
                                   "tenor_basis", "strike_step", "m_low_atm", "m_high_atm", "rate", "tick", "start",
                                   "seed", "replications", "cos_terms", "cos_width", "range_variance"});
    auto& s = cfg.simulation;
    s.theta = cfg.model;
    auto num = [&](const pt::ptree& sec, const char* key, double& target) {
        if (auto v = sec.get_optional<std::string>(key)) target = to_number(key, *v);
    };
    auto integer = [&](const pt::ptree& sec, const char* key, int& target) {
        if (auto v = sec.get_optional<std::string>(key)) target = static_cast<int>(to_number(key, *v));
    };
    integer(sim, "dates", s.dates);
    num(sim, "dt", s.dt);
    integer(sim, "substeps", s.substeps);
    num(sim, "forward0", s.forward0);
    num(sim, "variance0", s.variance0);
    num(sim, "exogenous0", s.exogenous0);
    if (auto v = sim.get_optional<std::string>("tenors")) {
        s.tenor_days.clear();
        for (double d : number_list("tenors", *v)) s.tenor_days.push_back(static_cast<int>(d));
    }
    num(sim, "tenor_basis", s.tenor_basis);
    num(sim, "strike_step", s.strike_step);
    num(sim, "m_low_atm", s.m_low_atm);
    num(sim, "m_high_atm", s.m_high_atm);
    num(sim, "rate", s.rate);
    num(sim, "tick", s.tick);
    if (auto v = sim.get_optional<std::string>("start")) s.start = parse_date(*v);
    if (auto v = sim.get_optional<std::string>("seed")) s.seed = std::stoull(*v);
    integer(sim, "replications", s.replications);
    integer(sim, "cos_terms", s.cos.terms);
    num(sim, "cos_width", s.cos.width);
    num(sim, "range_variance", s.range_variance);

    const auto& span = tree.get_child("spanning", empty);
    check_keys(span, "spanning", {"u_grid", "dm", "m_low", "m_high", "covariance_grid"});
    if (auto v = span.get_optional<std::string>("u_grid")) cfg.spanning.u_grid = number_list("u_grid", *v);
    num(span, "dm", cfg.spanning.measurement.grid.dm);
    num(span, "m_low", cfg.spanning.measurement.grid.m_low);
    num(span, "m_high", cfg.spanning.measurement.grid.m_high);
    if (auto v = span.get_optional<std::string>("covariance_grid")) {
        if (*v == "quotes") cfg.spanning.measurement.covariance_grid = CovarianceGrid::Quotes;
        else if (*v == "interpolated") cfg.spanning.measurement.covariance_grid = CovarianceGrid::Interpolated;
        else if (*v == "spline") cfg.spanning.measurement.covariance_grid = CovarianceGrid::Spline;
        else throw ConfigError(fmt::format("spanning.covariance_grid must be spline, quotes or interpolated, got '{}'", *v));
    }
    const auto& u = cfg.spanning.u_grid;
    if (u.empty()) throw ConfigError("spanning.u_grid is empty");
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] > 0.0) || (i > 0 && !(u[i] > u[i - 1]))) throw ConfigError("spanning.u_grid must be positive and ascending");
    }

    const auto& filt = tree.get_child("filter", empty);
    check_keys(filt, "filter", {"sbar", "sbar_levels", "day_basis"});
    num(filt, "sbar", cfg.filter.sbar);
    cfg.filter.sbar_levels = {cfg.filter.sbar};
    if (auto v = filt.get_optional<std::string>("sbar_levels")) cfg.filter.sbar_levels = number_list("sbar_levels", *v);
    num(filt, "day_basis", cfg.filter.day_basis);

    const auto& est = tree.get_child("estimation", empty);
    check_keys(est, "estimation", {"starts", "bfgs_max_iter", "simplex_max_iter", "gradient_tol", "function_tol",
                                   "simplex_size", "standard_errors", "seed"});
    integer(est, "starts", cfg.estimation.starts);
    integer(est, "bfgs_max_iter", cfg.estimation.optimize.bfgs_max_iter);
    integer(est, "simplex_max_iter", cfg.estimation.optimize.simplex_max_iter);
    num(est, "gradient_tol", cfg.estimation.optimize.gradient_tol);
    num(est, "function_tol", cfg.estimation.optimize.function_tol);
    num(est, "simplex_size", cfg.estimation.optimize.simplex_size);
    if (auto v = est.get_optional<std::string>("standard_errors")) cfg.estimation.standard_errors = to_bool("standard_errors", *v);
    if (auto v = est.get_optional<std::string>("seed")) cfg.estimation.seed = std::stoull(*v);

    const auto& output = tree.get_child("output", empty);
    check_keys(output, "output", {"directory"});
    cfg.output_directory = output.get("directory", std::string{"."});
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
    return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    pt::ptree tree;
    put_model(tree, cfg.model);
    tree.put("model.exogenous", cfg.exogenous == ExogenousTreatment::Frozen ? "frozen" : "dynamic");
    if (!cfg.data.quotes.empty()) tree.put("data.quotes", cfg.data.quotes);
    if (!cfg.data.rates.empty()) tree.put("data.rates", cfg.data.rates);
    if (!cfg.data.panel.empty()) tree.put("data.panel", cfg.data.panel);
    if (!cfg.data.covariance.empty()) tree.put("data.covariance", cfg.data.covariance);
    if (!cfg.data.path.empty()) tree.put("data.path", cfg.data.path);
    tree.put("data.day_count", fmt::format("{:g}", cfg.data.day_count));
    if (!cfg.data.tenor_targets.empty()) tree.put("data.tenor_targets", join(cfg.data.tenor_targets));
    tree.put("data.max_ask_bid_ratio", fmt::format("{:g}", cfg.data.filters.max_ask_bid_ratio));
    tree.put("data.min_calendar_days", cfg.data.filters.min_calendar_days);
    tree.put("data.max_calendar_days", cfg.data.filters.max_calendar_days);
    if (!cfg.data.filters.early_closures.empty()) {
        std::string s;
        for (auto d : cfg.data.filters.early_closures) s += (s.empty() ? "" : ",") + format_date(d);
        tree.put("data.early_closures", s);
    }
    const auto& s = cfg.simulation;
    tree.put("simulation.dates", s.dates);
    tree.put("simulation.dt", fmt::format("{:.17g}", s.dt));
    tree.put("simulation.substeps", s.substeps);
    tree.put("simulation.forward0", fmt::format("{:g}", s.forward0));
    tree.put("simulation.variance0", fmt::format("{:g}", s.variance0));
    tree.put("simulation.exogenous0", fmt::format("{:g}", s.exogenous0));
    tree.put("simulation.tenors", join(s.tenor_days));
    tree.put("simulation.tenor_basis", fmt::format("{:g}", s.tenor_basis));
    tree.put("simulation.strike_step", fmt::format("{:g}", s.strike_step));
    tree.put("simulation.m_low_atm", fmt::format("{:g}", s.m_low_atm));
    tree.put("simulation.m_high_atm", fmt::format("{:g}", s.m_high_atm));
    tree.put("simulation.rate", fmt::format("{:g}", s.rate));
    tree.put("simulation.tick", fmt::format("{:g}", s.tick));
    tree.put("simulation.start", format_date(s.start));
    tree.put("simulation.seed", std::to_string(s.seed));
    tree.put("simulation.replications", s.replications);
    tree.put("simulation.cos_terms", s.cos.terms);
    tree.put("simulation.cos_width", fmt::format("{:g}", s.cos.width));
    tree.put("simulation.range_variance", fmt::format("{:g}", s.range_variance));
    tree.put("spanning.u_grid", join(cfg.spanning.u_grid));
    tree.put("spanning.dm", fmt::format("{:g}", cfg.spanning.measurement.grid.dm));
    tree.put("spanning.m_low", fmt::format("{:g}", cfg.spanning.measurement.grid.m_low));
    tree.put("spanning.m_high", fmt::format("{:g}", cfg.spanning.measurement.grid.m_high));
    const char* grid_name = "spline";
    if (cfg.spanning.measurement.covariance_grid == CovarianceGrid::Quotes) grid_name = "quotes";
    if (cfg.spanning.measurement.covariance_grid == CovarianceGrid::Interpolated) grid_name = "interpolated";
    tree.put("spanning.covariance_grid", grid_name);
    tree.put("filter.sbar", fmt::format("{:g}", cfg.filter.sbar));
    tree.put("filter.sbar_levels", join(cfg.filter.sbar_levels));
    tree.put("filter.day_basis", fmt::format("{:g}", cfg.filter.day_basis));
    tree.put("estimation.starts", cfg.estimation.starts);
    tree.put("estimation.bfgs_max_iter", cfg.estimation.optimize.bfgs_max_iter);
    tree.put("estimation.simplex_max_iter", cfg.estimation.optimize.simplex_max_iter);
    tree.put("estimation.gradient_tol", fmt::format("{:g}", cfg.estimation.optimize.gradient_tol));
    tree.put("estimation.function_tol", fmt::format("{:g}", cfg.estimation.optimize.function_tol));
    tree.put("estimation.simplex_size", fmt::format("{:g}", cfg.estimation.optimize.simplex_size));
    tree.put("estimation.standard_errors", cfg.estimation.standard_errors ? "true" : "false");
    tree.put("estimation.seed", std::to_string(cfg.estimation.seed));
    tree.put("output.directory", cfg.output_directory);
    pt::write_ini(out, tree);
}

}  // namespace ccf
