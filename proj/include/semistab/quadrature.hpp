#pragma once

#include <functional>
#include <vector>

#include "semistab/common.hpp"

namespace semistab::quad {

// Adaptive Gauss-Kronrod on [a, b] split at the given interior breakpoints.
// Throws ConvergenceError if the summed error estimate exceeds max(abs_tol, rel_tol*|I|).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol = 1e-13,
                     const std::vector<double>& breaks = {});

// Final interval edges chosen by the adaptive integrator, without the convergence check.
std::vector<double> adaptive_partition(const std::function<double(double)>& f, double a, double b,
                                       double abs_tol, double rel_tol = 1e-13,
                                       const std::vector<double>& breaks = {});

CQuadResult integrate_complex(const std::function<cplx(double)>& f, double a, double b,
                              double abs_tol, double rel_tol = 1e-13,
                              const std::vector<double>& breaks = {});

// Fixed composite Gauss-Legendre rule: nodes and weights over [a, b] with `panels` equal panels.
struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};
Rule gauss_legendre_panels(double a, double b, int panels);
// n-point Gauss-Legendre on [a, b] (Golub-Welsch).
Rule gauss_legendre(int n, double a, double b);
// Ten-point Gauss-Legendre on each panel [edges[i], edges[i+1]].
Rule gauss_legendre_on(const std::vector<double>& edges);

// Filon-type quadrature for I(t) = int_{x0}^{x_end} f(x) e^{i x t} dx with f given on panel
// nodes (three per panel: left, mid, right). The amplitude is interpolated by a quadratic on
// each panel and the oscillatory factor is integrated exactly.
class FilonGrid {
public:
    FilonGrid() = default;
    explicit FilonGrid(std::vector<double> panel_edges);

    const std::vector<double>& edges() const { return edges_; }
    // Node i = 2*panel (left), 2*panel+1 (mid); last node = right edge of last panel.
    std::vector<double> nodes() const;
    std::size_t node_count() const { return 2 * (edges_.size() - 1) + 1; }

    cplx integrate(const std::vector<double>& f_nodes, double t) const;
    // Several amplitudes sharing the same nodes, evaluated at one t.
    void integrate_many(const std::vector<const std::vector<double>*>& f, double t,
                        std::vector<cplx>& out) const;

private:
    std::vector<double> edges_;
};

}  // namespace semistab::quad
