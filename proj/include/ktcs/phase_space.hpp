// phase_space.hpp
// Three-mode Husimi Q-function of a KTCS and its alpha = beta = gamma slice
// on a 2-D grid. The slice closed form,
//   Q(x,y) = (N^2/pi^3) e^{-3(x^2+y^2)} (x^2+y^2)^{p+q} |S(xi (x-iy)^3)|^2,
// reuses the complex-argument normalization series; the pointwise
// q_point goes through the state amplitudes instead, so the two routes are
// independent checks of each other on the slice.

#pragma once

#include "ktcs/fock_core.hpp"

namespace ktcs {

struct QGridSpec {
    double x_min = -1.0, x_max = 1.0;
    double y_min = -1.0, y_max = 1.0;
    int nx = 400, ny = 400;
};

struct QGrid {
    QGridSpec spec;
    std::vector<double> values;  // pi^3 * Q, row-major, ny rows of nx

    double at(int ix, int iy) const {
        return values[static_cast<size_t>(iy) * spec.nx + ix];
    }
    double x_of(int ix) const {
        return spec.x_min + (spec.x_max - spec.x_min) * ix / (spec.nx - 1);
    }
    double y_of(int iy) const {
        return spec.y_min + (spec.y_max - spec.y_min) * iy / (spec.ny - 1);
    }
    double max_value() const;
};

// Q(alpha,beta,gamma) = |(alpha,beta,gamma|state)|^2 / pi^3, via the overlap
// series in log-magnitude form. Unscaled (no pi^3 factor).
double q_point(const KtcsParams& params, complexd alpha, complexd beta, complexd gamma);

// pi^3 * Q on the alpha = beta = gamma = x + iy slice (closed form).
double q_slice_point(const KtcsParams& params, double x, double y);

// evaluate q_slice_point over a grid
QGrid q_slice(const KtcsParams& params, const QGridSpec& spec);

// Square window centered at the origin sized to contain the ring of bells
// at |alpha| ~ |xi|^{1/3} with room for the interference structure.
QGridSpec default_window(const KtcsParams& params, int n = 400);

// Strict local maxima (8-neighborhood, interior nodes) above
// floor * max(grid). Throws ResolutionTooCoarse below 200x200.
int count_peaks(const QGrid& grid, double floor);

}  // namespace ktcs
