#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obscost/xreal.hpp"

namespace obscost {

// Interior nodes x_i = i h, i = 1..N, h = L/(N+1); the three boundary
// conditions u(0) = u(L) = u_x(L) = 0 live in the operator closure.
struct Grid {
    double L = 0;
    int N = 0;
    double h = 0;
    std::vector<double> x;
};

Grid make_grid(double L, int N);

// -u_x - u_xxx on interior values with second-order centered stencils; the
// left end uses the precomputed flux-matched closure block so that the
// discrete energy identity is exact:
//   <A_h v, v>_h = -phi(v)^2/2 - (v_{1..10}^T Mhat v_{1..10} + v_N^2)/(2 h^2)
// with phi(v) = (2 v_1 - v_2/2)/h and Mhat PSD. The right end eliminates the
// ghosts with u_{N+1} = 0 and u_{N+2} = u_N (centered u_x(L) = 0).
struct DiscreteOperator {
    Grid grid;
    Eigen::SparseMatrix<double> a;

    double flux(const Eigen::VectorXd& v) const {
        return (2.0 * v[0] - 0.5 * v[1]) / grid.h;
    }
    // representer of the flux functional: phi(v) = f . v
    Eigen::VectorXd flux_vector() const;
};

DiscreteOperator build_operator(const Grid& grid);

enum class Scheme { implicit_euler, trapezoidal };
std::string_view scheme_name(Scheme s);
Scheme parse_scheme(std::string_view name);

// One-step propagator (I - dt theta A) u' = (I + dt (1-theta) A) u with the
// implicit side factored once. adjoint = true applies the transpose of the
// same step map (used by the Gramian assembly).
class Stepper {
  public:
    Stepper(const DiscreteOperator& op, double dt, Scheme scheme,
            bool adjoint = false);
    void step(Eigen::VectorXd& u) const;
    double dt() const { return dt_; }
    Scheme scheme() const { return scheme_; }

  private:
    double dt_;
    Scheme scheme_;
    bool adjoint_;
    Eigen::SparseMatrix<double> explicit_side_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

struct StateTrajectory {
    Grid grid;
    Scheme scheme = Scheme::trapezoidal;
    double dt = 0;
    std::uint64_t steps = 0;
    std::vector<double> flux;             // phi(u_j), j = 0..steps
    std::vector<std::uint64_t> stored;    // step indices with saved states
    std::vector<Eigen::VectorXd> states;  // parallel to `stored`

    double time_at(std::uint64_t j) const { return double(j) * dt; }
    // trapezoidal-in-time integral of phi^2 over [0, steps dt]
    double flux_integral() const;
};

struct EvolveOptions {
    Scheme scheme = Scheme::trapezoidal;
    std::uint64_t store_every = 1;  // first and last states always kept
};

StateTrajectory evolve(const DiscreteOperator& op, const Eigen::VectorXd& u0,
                       double T, double dt, const EvolveOptions& opt = {});

inline double inner_h(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      double h) {
    return h * u.dot(v);
}
inline double norm_h(const Eigen::VectorXd& u, double h) {
    return std::sqrt(h) * u.norm();
}

// relative defect of ||u(T)||^2 + int phi^2 = ||u0||^2 on a trajectory
double energy_residual(const StateTrajectory& traj);

// H^k with k-fold forward differences of the zero-extended vector:
// ||u||^2 = ||u||_h^2 + ||D^k u||_h^2 (k = 0 is the plain L^2 norm)
double discrete_norm(const Eigen::VectorXd& u, int k, const Grid& grid);

struct SmoothingFit {
    double slope = 0;       // d log||S(t)u0||_{H^k} / d log t
    double intercept = 0;   // fitted log-constant
    bool below_flow_bound = true;
    std::vector<double> ts, norms;
};

struct SmoothingOptions {
    int samples = 9;
    double dt = 1e-5;
    Scheme scheme = Scheme::trapezoidal;
    std::optional<XReal> fs_k;  // flow-lemma constant for the upper envelope
};

SmoothingFit smoothing_rate_fit(const DiscreteOperator& op,
                                const Eigen::VectorXd& u0, int k, double t_lo,
                                double t_hi, const SmoothingOptions& opt = {});

struct ObservationEntry {
    std::string name;
    double lhs = 0, bound = 0, margin = 0;
    bool pass = false;
};

struct ObservationParams {
    double t = 0.5;    // evaluation horizon
    double dt = 1e-4;
    double delta_lo = 1e-3, delta_hi = 1e-2;  // decade for the generator fit
    int delta_samples = 5;
    double quad_tol = 1e-4;  // floor for the identity tolerance (scales as h^2)
};

struct ObservationReport {
    std::vector<ObservationEntry> entries;
    bool all_pass = false;
    double measured_op_norm = 0;  // ||A_h||_h estimate, context for the fits
};

// Numerical spot checks of the semigroup observations: energy contraction,
// the polarized flux identity and its Cauchy-Schwarz corollary, projection
// monotonicity under the flow, and the generator consistency fit.
ObservationReport observation_checks(const DiscreteOperator& op,
                                     const Eigen::VectorXd& f0,
                                     const Eigen::VectorXd& g0,
                                     const ObservationParams& params = {});

// ||A_h||_h estimate by power iteration on A^T A (h-weights cancel in the
// Rayleigh ratio); deterministic seed so reports are reproducible
double operator_norm_estimate(const DiscreteOperator& op, int iters = 60,
                              unsigned seed = 12345);

// CSV rows t, flux, l2_norm, h1_norm, h3_norm at the stored states
void export_csv(const StateTrajectory& traj, const std::string& path);

// 16-byte header {magic "KDVS", version u16, N u32, 6 reserved bytes}, then
// N little-endian doubles
void write_snapshot(const std::string& path, const Eigen::VectorXd& state);
Eigen::VectorXd read_snapshot(const std::string& path);

}  // namespace obscost
