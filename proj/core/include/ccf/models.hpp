#pragma once

#include "ccf/affine_model.hpp"
#include "ccf/parameters.hpp"

namespace ccf {

enum class ExogenousTreatment {
    Frozen,    // exogenous factor held constant over the option life
    Dynamic,   // square-root dynamics for the exogenous factor
};

struct BuildOptions {
    double rate = 0.0;
    ExogenousTreatment exogenous = ExogenousTreatment::Frozen;
};

// Risk-neutral model; throws AdmissibilityError when admissible(params) fails.
AffineModel build_model(const ParameterVector& params, const BuildOptions& options = {});

// Physical-measure model: variance risk premium shifts mean reversion, rate is zero.
AffineModel build_physical_model(const ParameterVector& params, const BuildOptions& options = {});

// Expected relative return jump size, E[e^J] - 1 per unit intensity.
double mean_relative_jump(const ParameterVector& params);

}  // namespace ccf
