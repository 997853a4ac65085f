#pragma once

#include <vector>

#include <Eigen/Dense>

#include <threadtrack/error.hpp>

namespace threadtrack {

/// Ordered point sequence with cached cumulative chord length. Used both for
/// raw samples going into a fit and for points sampled off a curve.
struct PolyLine {
    Eigen::MatrixXd points;          ///< one point per row
    std::vector<double> cumulative;  ///< chord length from the first point
    std::vector<double> params;      ///< source curve parameters, if sampled

    static PolyLine from_points(Eigen::MatrixXd pts);

    int size() const { return static_cast<int>(points.rows()); }
    int dimension() const { return static_cast<int>(points.cols()); }
    double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Rational B-spline curve over a clamped knot vector, evaluable on [0, 1].
/// Control points live in 2D or 3D; weights default to 1 everywhere.
class SplineCurve {
public:
    SplineCurve() = default;
    SplineCurve(int degree, Eigen::MatrixXd control_points,
                std::vector<double> knots, std::vector<double> weights = {});

    /// Builds the knot vector itself: clamped, uniform interior spacing.
    static SplineCurve clamped_uniform(int degree, Eigen::MatrixXd control_points);

    int degree() const { return degree_; }
    int dimension() const { return static_cast<int>(control_points_.cols()); }
    int num_control() const { return static_cast<int>(control_points_.rows()); }
    const Eigen::MatrixXd& control_points() const { return control_points_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& weights() const { return weights_; }

    Eigen::VectorXd evaluate(double t) const;
    Eigen::VectorXd derivative(double t) const;

    /// Unit-length derivative. Throws DegenerateTangentError when the
    /// derivative is too small to orient.
    Eigen::VectorXd tangent(double t) const;

    /// Same geometric curve traversed in the opposite direction.
    SplineCurve reversed() const;

    bool valid() const { return num_control() > 0; }

private:
    int degree_ = 0;
    Eigen::MatrixXd control_points_;
    std::vector<double> knots_;
    std::vector<double> weights_;

    double clamp_param(double t) const;
};

/// Normalized cumulative chord-length parameters in [0, 1], one per row.
/// Throws FitError when all points coincide.
std::vector<double> chord_length_params(const Eigen::MatrixXd& pts);

/// Least-squares cubic-style fit: chord-length parameters, clamped uniform
/// knots, first and last control points pinned to the first and last samples.
SplineCurve fit_least_squares(const PolyLine& samples, int n_control,
                              int degree = 3);

/// Arc length of the curve restricted to [t0, t1], adaptive quadrature.
double arc_length(const SplineCurve& curve, double t0, double t1);

/// n points at uniformly spaced parameters, with the parameters recorded.
PolyLine resample(const SplineCurve& curve, int n);

namespace detail {
int find_span(int degree, int n_control, const std::vector<double>& knots,
              double t);
void basis_funs(int span, double t, int degree,
                const std::vector<double>& knots, double* out);
void basis_funs_derivs(int span, double t, int degree,
                       const std::vector<double>& knots,
                       double* out0, double* out1);
std::vector<double> clamped_uniform_knots(int degree, int n_control);
}  // namespace detail

}  // namespace threadtrack
