#pragma once

// Shared shapes for variational-action values and their derivatives. The
// action omega(x, y; t, s) is produced either by closed forms or by the
// numerical geodesic solver; consumers only see these types.

#include <functional>
#include <span>
#include <vector>

namespace harnack {

struct OmegaDerivatives {
    double dt = 0.0;  // partial in the later time
    double ds = 0.0;  // partial in the earlier time
    std::vector<double> grad_x;
    std::vector<double> grad_y;
    double lap_x = 0.0;
    double lap_y = 0.0;
    double mixed_sum = 0.0;  // sum_i d^2 omega / dx_i dy_i
};

// A source of action values. `analytic` providers return exact derivatives;
// finite-difference providers carry solver and stencil noise and are held to
// looser tolerances downstream. `smooth` mirrors the underlying potential.
struct OmegaProvider {
    int dim = 1;
    bool analytic = false;
    bool smooth = true;
    std::function<double(std::span<const double> x, std::span<const double> y, double t,
                         double s)>
        value;
    std::function<OmegaDerivatives(std::span<const double> x, std::span<const double> y, double t,
                                   double s)>
        derivatives;
};

}  // namespace harnack
