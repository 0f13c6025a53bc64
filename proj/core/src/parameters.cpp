#include "ccf/parameters.hpp"

#include "ccf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ccf {

std::string to_string(ModelTag tag) {
    switch (tag) {
        case ModelTag::Svcdej: return "svcdej";
        case ModelTag::Svcj: return "svcj";
        case ModelTag::Svcej: return "svcej";
        case ModelTag::SvcdejEx: return "svcdej-ex";
    }
    return "unknown";
}

ModelTag model_tag_from_string(std::string_view text) {
    if (text == "svcdej") return ModelTag::Svcdej;
    if (text == "svcj") return ModelTag::Svcj;
    if (text == "svcej") return ModelTag::Svcej;
    if (text == "svcdej-ex") return ModelTag::SvcdejEx;
    throw ConfigError(fmt::format("unknown model tag '{}'", text));
}

namespace {

std::vector<ParameterSpec> svcdej_specs() {
    return {
        {"sigma", Domain::Positive, 0.45, false},
        {"kappa", Domain::Positive, 8.0, false},
        {"vbar", Domain::Positive, 0.015, false},
        {"rho", Domain::Correlation, -0.95, false},
        {"delta", Domain::Positive, 100.0, false},
        {"eta_plus", Domain::UnitInterval, 0.02, false},
        {"eta_minus", Domain::Positive, 0.05, false},
        {"mu_v", Domain::Positive, 0.05, false},
        {"sigma_kappa", Domain::Positive, 0.02, false},
        {"p_minus", Domain::UnitInterval, 0.7, true},
        {"pi_v", Domain::Unrestricted, 0.0, true},
    };
}

std::vector<ParameterSpec> svcj_specs() {
    return {
        {"sigma", Domain::Positive, 0.4, false},
        {"kappa", Domain::Positive, 5.0, false},
        {"vbar", Domain::Positive, 0.02, false},
        {"rho", Domain::Correlation, -0.95, false},
        {"delta", Domain::Positive, 20.0, false},
        {"mu_j", Domain::Unrestricted, -0.1, false},
        {"sigma_j", Domain::Positive, 0.04, false},
        {"mu_v", Domain::Positive, 0.05, false},
        {"sigma_kappa", Domain::Positive, 0.02, false},
        {"pi_v", Domain::Unrestricted, 0.0, true},
    };
}

std::vector<ParameterSpec> svcej_specs() {
    return {
        {"sigma", Domain::Positive, 0.45, false},
        {"kappa", Domain::Positive, 8.0, false},
        {"vbar", Domain::Positive, 0.015, false},
        {"rho", Domain::Correlation, -0.95, false},
        {"delta_plus", Domain::Positive, 2.0, false},
        {"delta_minus", Domain::Positive, 100.0, false},
        {"eta_plus", Domain::UnitInterval, 0.01, false},
        {"eta_minus", Domain::Positive, 0.05, false},
        {"mu_v", Domain::Positive, 0.05, false},
        {"sigma_kappa", Domain::Positive, 0.02, false},
        {"pi_v", Domain::Unrestricted, 0.0, true},
    };
}

std::vector<ParameterSpec> svcdej_ex_specs() {
    auto specs = svcdej_specs();
    specs.push_back({"gamma", Domain::NonNegative, 1.5, false});
    specs.push_back({"q", Domain::NonNegative, 0.05, false});
    specs.push_back({"kappa_h", Domain::Positive, 1.0, true});
    specs.push_back({"hbar", Domain::Positive, 1.0, true});
    specs.push_back({"sigma_h", Domain::NonNegative, 0.1, true});
    return specs;
}

bool in_domain(Domain d, double x) {
    if (!std::isfinite(x)) return false;
    switch (d) {
        case Domain::Positive: return x > 0.0;
        case Domain::NonNegative: return x >= 0.0;
        case Domain::Correlation: return x >= -1.0 && x <= 1.0;
        case Domain::UnitInterval: return x > 0.0 && x < 1.0;
        case Domain::Unrestricted: return true;
    }
    return false;
}

}  // namespace

const std::vector<ParameterSpec>& parameter_specs(ModelTag tag) {
    static const auto a = svcdej_specs();
    static const auto b = svcj_specs();
    static const auto c = svcej_specs();
    static const auto d = svcdej_ex_specs();
    switch (tag) {
        case ModelTag::Svcdej: return a;
        case ModelTag::Svcj: return b;
        case ModelTag::Svcej: return c;
        case ModelTag::SvcdejEx: return d;
    }
    return a;
}

ParameterVector::ParameterVector(ModelTag tag) : tag_(tag) {
    for (const auto& s : parameter_specs(tag)) {
        values_.push_back(s.default_value);
        fixed_.push_back(s.fixed_by_default);
    }
}

std::size_t ParameterVector::index(std::string_view name) const {
    const auto& s = specs();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].name == name) return i;
    }
    throw LookupError(fmt::format("model '{}' has no parameter '{}'", to_string(tag_), name));
}

double ParameterVector::get(std::string_view name) const { return values_[index(name)]; }

bool ParameterVector::has(std::string_view name) const noexcept {
    const auto& s = specs();
    return std::any_of(s.begin(), s.end(), [&](const ParameterSpec& p) { return p.name == name; });
}

void ParameterVector::set(std::string_view name, double value) { values_[index(name)] = value; }

bool ParameterVector::is_fixed(std::string_view name) const { return fixed_[index(name)]; }

void ParameterVector::fix(std::string_view name, bool fixed) { fixed_[index(name)] = fixed; }

std::vector<std::string> ParameterVector::free_names() const {
    std::vector<std::string> out;
    const auto& s = specs();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!fixed_[i]) out.push_back(s[i].name);
    }
    return out;
}

std::vector<double> ParameterVector::free_values() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!fixed_[i]) out.push_back(values_[i]);
    }
    return out;
}

void ParameterVector::set_free_values(const std::vector<double>& values) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (fixed_[i]) continue;
        if (k >= values.size()) throw InputError("set_free_values: too few values");
        values_[i] = values[k++];
    }
    if (k != values.size()) throw InputError("set_free_values: too many values");
}

std::vector<std::string> ParameterVector::domain_violations() const {
    std::vector<std::string> out;
    const auto& s = specs();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!in_domain(s[i].domain, values_[i])) out.push_back("domain:" + s[i].name);
    }
    return out;
}

Admissibility admissible(const ParameterVector& p) {
    Admissibility a;
    a.violations = p.domain_violations();

    const double sigma = p["sigma"];
    const double kappa = p["kappa"];
    const double vbar = p["vbar"];
    if (!(2.0 * kappa * vbar > sigma * sigma)) a.violations.push_back("feller");

    double jump_push = 0.0;
    switch (p.tag()) {
        case ModelTag::Svcdej:
        case ModelTag::SvcdejEx: jump_push = p["p_minus"] * p["delta"] * p["mu_v"]; break;
        case ModelTag::Svcj: jump_push = p["delta"] * p["mu_v"]; break;
        case ModelTag::Svcej: jump_push = p["delta_minus"] * p["mu_v"]; break;
    }
    if (!(kappa > jump_push)) a.violations.push_back("stationarity");

    a.ok = a.violations.empty();
    return a;
}

}  // namespace ccf
