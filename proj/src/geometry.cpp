#include <threadtrack/geometry.hpp>

#include <algorithm>
#include <cmath>

namespace threadtrack {

PolyLine PolyLine::from_points(Eigen::MatrixXd pts) {
    PolyLine line;
    line.points = std::move(pts);
    const int n = line.size();
    line.cumulative.resize(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i > 0) acc += (line.points.row(i) - line.points.row(i - 1)).norm();
        line.cumulative[i] = acc;
    }
    return line;
}

namespace detail {

int find_span(int degree, int n_control, const std::vector<double>& knots,
              double t) {
    const int high = n_control;  // first index past the last valid span
    if (t >= knots[high]) return high - 1;
    if (t <= knots[degree]) return degree;
    int lo = degree;
    int hi = high;
    int mid = (lo + hi) / 2;
    while (t < knots[mid] || t >= knots[mid + 1]) {
        if (t < knots[mid])
            hi = mid;
        else
            lo = mid;
        mid = (lo + hi) / 2;
    }
    return mid;
}

void basis_funs(int span, double t, int degree,
                const std::vector<double>& knots, double* out) {
    // Cox-de Boor recursion restricted to the degree+1 functions that are
    // nonzero on this span.
    out[0] = 1.0;
    double left[16];
    double right[16];
    for (int j = 1; j <= degree; ++j) {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out[j] = saved;
    }
}

void basis_funs_derivs(int span, double t, int degree,
                       const std::vector<double>& knots,
                       double* out0, double* out1) {
    // Values and first derivatives via the triangular table of the recursion.
    double ndu[16][16];
    double left[16];
    double right[16];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double tmp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= degree; ++j) out0[j] = ndu[j][degree];

    for (int r = 0; r <= degree; ++r) {
        double d = 0.0;
        if (r >= 1) d += ndu[r - 1][degree - 1] / ndu[degree][r - 1];
        if (r <= degree - 1) d -= ndu[r][degree - 1] / ndu[degree][r];
        out1[r] = d * degree;
    }
}

std::vector<double> clamped_uniform_knots(int degree, int n_control) {
    std::vector<double> knots(n_control + degree + 1);
    const int interior = n_control - degree;  // number of interior spans
    for (int i = 0; i < static_cast<int>(knots.size()); ++i) {
        if (i <= degree)
            knots[i] = 0.0;
        else if (i >= n_control)
            knots[i] = 1.0;
        else
            knots[i] = static_cast<double>(i - degree) / interior;
    }
    return knots;
}

}  // namespace detail

SplineCurve::SplineCurve(int degree, Eigen::MatrixXd control_points,
                         std::vector<double> knots,
                         std::vector<double> weights)
    : degree_(degree),
      control_points_(std::move(control_points)),
      knots_(std::move(knots)),
      weights_(std::move(weights)) {
    const int n = num_control();
    const int dim = dimension();
    if (degree_ < 1 || degree_ > 15)
        throw DomainError("unsupported spline degree");
    if (dim != 2 && dim != 3)
        throw DomainError("spline dimension must be 2 or 3");
    if (n < degree_ + 1)
        throw DomainError("need at least degree+1 control points");
    if (static_cast<int>(knots_.size()) != n + degree_ + 1)
        throw DomainError("knot count must equal control count + degree + 1");
    if (weights_.empty()) {
        weights_.assign(n, 1.0);
    } else if (static_cast<int>(weights_.size()) != n) {
        throw DomainError("one weight per control point required");
    }
    for (double w : weights_)
        if (!(w > 0.0)) throw DomainError("weights must be positive");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (knots_[i] < knots_[i - 1])
            throw DomainError("knots must be non-decreasing");

    // Normalize the knot range onto [0, 1] so every curve shares one domain.
    const double lo = knots_.front();
    const double hi = knots_.back();
    if (!(hi > lo)) throw DomainError("degenerate knot range");
    if (lo != 0.0 || hi != 1.0)
        for (double& k : knots_) k = (k - lo) / (hi - lo);

    // Clamping: full multiplicity at both ends.
    for (int i = 0; i <= degree_; ++i)
        if (knots_[i] != 0.0 || knots_[knots_.size() - 1 - i] != 1.0)
            throw DomainError("knot vector must be clamped at both ends");
}

SplineCurve SplineCurve::clamped_uniform(int degree,
                                         Eigen::MatrixXd control_points) {
    const int n = static_cast<int>(control_points.rows());
    if (n < degree + 1)
        throw DomainError("need at least degree+1 control points");
    auto knots = detail::clamped_uniform_knots(degree, n);
    return SplineCurve(degree, std::move(control_points), std::move(knots));
}

double SplineCurve::clamp_param(double t) const {
    constexpr double kSlack = 1e-12;
    if (t < -kSlack || t > 1.0 + kSlack)
        throw DomainError("curve parameter outside [0, 1]");
    return std::clamp(t, 0.0, 1.0);
}

Eigen::VectorXd SplineCurve::evaluate(double t) const {
    t = clamp_param(t);
    const int span = detail::find_span(degree_, num_control(), knots_, t);
    double basis[16];
    detail::basis_funs(span, t, degree_, knots_, basis);

    Eigen::VectorXd num = Eigen::VectorXd::Zero(dimension());
    double den = 0.0;
    for (int j = 0; j <= degree_; ++j) {
        const int idx = span - degree_ + j;
        const double bw = basis[j] * weights_[idx];
        num += bw * control_points_.row(idx).transpose();
        den += bw;
    }
    return num / den;
}

Eigen::VectorXd SplineCurve::derivative(double t) const {
    t = clamp_param(t);
    const int span = detail::find_span(degree_, num_control(), knots_, t);
    double b0[16];
    double b1[16];
    detail::basis_funs_derivs(span, t, degree_, knots_, b0, b1);

    Eigen::VectorXd a = Eigen::VectorXd::Zero(dimension());
    Eigen::VectorXd ad = Eigen::VectorXd::Zero(dimension());
    double w = 0.0;
    double wd = 0.0;
    for (int j = 0; j <= degree_; ++j) {
        const int idx = span - degree_ + j;
        const Eigen::RowVectorXd p = control_points_.row(idx);
        a += b0[j] * weights_[idx] * p.transpose();
        w += b0[j] * weights_[idx];
        ad += b1[j] * weights_[idx] * p.transpose();
        wd += b1[j] * weights_[idx];
    }
    // Quotient rule for the rational curve C = A / w.
    return (ad - (wd / w) * a) / w;
}

Eigen::VectorXd SplineCurve::tangent(double t) const {
    const Eigen::VectorXd d = derivative(t);
    const double n = d.norm();
    if (n < 1e-12)
        throw DegenerateTangentError("derivative vanishes at t=" +
                                     std::to_string(t));
    return d / n;
}

SplineCurve SplineCurve::reversed() const {
    const int n = num_control();
    Eigen::MatrixXd rev(n, dimension());
    std::vector<double> wrev(n);
    for (int i = 0; i < n; ++i) {
        rev.row(i) = control_points_.row(n - 1 - i);
        wrev[i] = weights_[n - 1 - i];
    }
    std::vector<double> krev(knots_.size());
    for (std::size_t i = 0; i < knots_.size(); ++i)
        krev[i] = 1.0 - knots_[knots_.size() - 1 - i];
    return SplineCurve(degree_, std::move(rev), std::move(krev),
                       std::move(wrev));
}

std::vector<double> chord_length_params(const Eigen::MatrixXd& pts) {
    const int n = static_cast<int>(pts.rows());
    if (n < 2) throw FitError("need at least two points for parameters");
    std::vector<double> params(n, 0.0);
    double acc = 0.0;
    for (int i = 1; i < n; ++i) {
        acc += (pts.row(i) - pts.row(i - 1)).norm();
        params[i] = acc;
    }
    if (!(acc > 0.0)) throw FitError("all sample points coincide");
    for (double& p : params) p /= acc;
    params.back() = 1.0;
    return params;
}

SplineCurve fit_least_squares(const PolyLine& samples, int n_control,
                              int degree) {
    const int n_samples = samples.size();
    const int dim = samples.dimension();
    if (n_control < degree + 1)
        throw FitError("need at least degree+1 control points");
    if (n_samples < n_control)
        throw FitError("need at least as many samples as control points");

    const auto params = chord_length_params(samples.points);
    const auto knots = detail::clamped_uniform_knots(degree, n_control);

    // First and last control points are pinned to the end samples, so only
    // the interior control points are unknowns.
    const int n_free = n_control - 2;
    const Eigen::RowVectorXd p_first = samples.points.row(0);
    const Eigen::RowVectorXd p_last = samples.points.row(n_samples - 1);

    Eigen::MatrixXd control(n_control, dim);
    control.row(0) = p_first;
    control.row(n_control - 1) = p_last;
    if (n_free > 0) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_samples, n_free);
        Eigen::MatrixXd rhs(n_samples, dim);
        double basis[16];
        for (int i = 0; i < n_samples; ++i) {
            const double t = params[i];
            const int span = detail::find_span(degree, n_control, knots, t);
            detail::basis_funs(span, t, degree, knots, basis);
            Eigen::RowVectorXd r = samples.points.row(i);
            for (int j = 0; j <= degree; ++j) {
                const int idx = span - degree + j;
                if (idx == 0) {
                    r -= basis[j] * p_first;
                } else if (idx == n_control - 1) {
                    r -= basis[j] * p_last;
                } else {
                    a(i, idx - 1) = basis[j];
                }
            }
            rhs.row(i) = r;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < n_free)
            throw FitError("sample distribution leaves the fit rank-deficient");
        control.middleRows(1, n_free) = qr.solve(rhs);
    }
    return SplineCurve(degree, std::move(control),
                       std::vector<double>(knots));
}

namespace {

double speed(const SplineCurve& curve, double t) {
    return curve.derivative(t).norm();
}

double adaptive_simpson(const SplineCurve& curve, double a, double b,
                        double fa, double fm, double fb, double whole,
                        double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = speed(curve, lm);
    const double frm = speed(curve, rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double split = left + right;
    if (depth <= 0 || std::abs(split - whole) < 15.0 * tol)
        return split + (split - whole) / 15.0;
    return adaptive_simpson(curve, a, m, fa, flm, fm, left, 0.5 * tol,
                            depth - 1) +
           adaptive_simpson(curve, m, b, fm, frm, fb, right, 0.5 * tol,
                            depth - 1);
}

double arc_length_piece(const SplineCurve& curve, double a, double b) {
    if (b - a < 1e-15) return 0.0;
    const double fa = speed(curve, a);
    const double fm = speed(curve, 0.5 * (a + b));
    const double fb = speed(curve, b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Tolerance well below the additivity the callers rely on; the integrand
    // is smooth inside a knot span, so the recursion stays shallow.
    const double tol = std::max(1e-10 * std::max(whole, 1e-6), 1e-15);
    return adaptive_simpson(curve, a, b, fa, fm, fb, whole, tol, 28);
}

}  // namespace

double arc_length(const SplineCurve& curve, double t0, double t1) {
    constexpr double kSlack = 1e-12;
    if (t0 < -kSlack || t1 > 1.0 + kSlack || t0 > t1 + kSlack)
        throw DomainError("arc length bounds must satisfy 0 <= t0 <= t1 <= 1");
    t0 = std::clamp(t0, 0.0, 1.0);
    t1 = std::clamp(t1, 0.0, 1.0);
    if (t1 <= t0) return 0.0;

    // Integrate span by span: the curve is only piecewise smooth at knots.
    std::vector<double> cuts;
    cuts.push_back(t0);
    for (double k : curve.knots())
        if (k > t0 + 1e-14 && k < t1 - 1e-14 &&
            (cuts.empty() || k > cuts.back() + 1e-14))
            cuts.push_back(k);
    cuts.push_back(t1);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += arc_length_piece(curve, cuts[i], cuts[i + 1]);
    return total;
}

PolyLine resample(const SplineCurve& curve, int n) {
    if (n < 2) throw DomainError("resampling needs at least two points");
    Eigen::MatrixXd pts(n, curve.dimension());
    std::vector<double> params(n);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        pts.row(i) = curve.evaluate(t).transpose();
        params[i] = t;
    }
    PolyLine line = PolyLine::from_points(std::move(pts));
    line.params = std::move(params);
    return line;
}

}  // namespace threadtrack
