#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ccf {

enum class ModelTag { Svcdej, Svcj, Svcej, SvcdejEx };

std::string to_string(ModelTag tag);
ModelTag model_tag_from_string(std::string_view text);

enum class Domain { Positive, NonNegative, Correlation, UnitInterval, Unrestricted };

struct ParameterSpec {
    std::string name;
    Domain domain;
    double default_value;
    bool fixed_by_default;
};

// Declared parameters for a model, in reporting order.
const std::vector<ParameterSpec>& parameter_specs(ModelTag tag);

class ParameterVector {
public:
    explicit ParameterVector(ModelTag tag = ModelTag::Svcdej);

    ModelTag tag() const noexcept { return tag_; }
    const std::vector<ParameterSpec>& specs() const { return parameter_specs(tag_); }
    std::size_t size() const noexcept { return values_.size(); }

    double operator[](std::string_view name) const { return get(name); }
    double get(std::string_view name) const;
    bool has(std::string_view name) const noexcept;
    void set(std::string_view name, double value);

    bool is_fixed(std::string_view name) const;
    void fix(std::string_view name, bool fixed = true);

    std::vector<std::string> free_names() const;
    std::vector<double> free_values() const;
    void set_free_values(const std::vector<double>& values);

    double value_at(std::size_t i) const { return values_.at(i); }
    bool fixed_at(std::size_t i) const { return fixed_.at(i); }

    // Names of parameters outside their declared domain.
    std::vector<std::string> domain_violations() const;

    bool operator==(const ParameterVector&) const = default;

private:
    std::size_t index(std::string_view name) const;

    ModelTag tag_;
    std::vector<double> values_;
    std::vector<bool> fixed_;
};

struct Admissibility {
    bool ok = true;
    std::vector<std::string> violations;
    explicit operator bool() const noexcept { return ok; }
};

// Feller and covariance-stationarity checks plus domain membership.
Admissibility admissible(const ParameterVector& params);

}  // namespace ccf
