#include <threadtrack/serialize.hpp>

#include <fstream>

#include <threadtrack/trace2d.hpp>

namespace threadtrack {

nlohmann::json spline_to_json(const SplineCurve& curve) {
    nlohmann::json j;
    j["dimension"] = curve.dimension();
    j["degree"] = curve.degree();
    auto& cp = j["control_points"] = nlohmann::json::array();
    for (int i = 0; i < curve.num_control(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int d = 0; d < curve.dimension(); ++d)
            row.push_back(curve.control_points()(i, d));
        cp.push_back(std::move(row));
    }
    j["knots"] = curve.knots();
    j["weights"] = curve.weights();
    return j;
}

SplineCurve spline_from_json(const nlohmann::json& j) {
    const int dim = j.at("dimension").get<int>();
    const int degree = j.at("degree").get<int>();
    const auto& cp = j.at("control_points");
    Eigen::MatrixXd control(cp.size(), dim);
    for (std::size_t i = 0; i < cp.size(); ++i) {
        if (static_cast<int>(cp[i].size()) != dim)
            throw Error("control point arity does not match dimension");
        for (int d = 0; d < dim; ++d)
            control(static_cast<Eigen::Index>(i), d) = cp[i][d].get<double>();
    }
    auto knots = j.at("knots").get<std::vector<double>>();
    std::vector<double> weights;
    if (j.contains("weights"))
        weights = j.at("weights").get<std::vector<double>>();
    return SplineCurve(degree, std::move(control), std::move(knots),
                       std::move(weights));
}

nlohmann::json trace_to_json(const PixelTrace& trace) {
    nlohmann::json j = nlohmann::json::array();
    for (const Pixel& p : trace.points) j.push_back({p.u, p.v});
    return j;
}

void write_json_file(const nlohmann::json& j,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("failed writing " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

}  // namespace threadtrack
