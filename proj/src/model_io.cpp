#include "qemlab/model_io.hpp"

#include <fstream>

#include "qemlab/errors.hpp"

namespace qemlab {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw config_error("expected a matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) throw config_error("ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

template <typename T>
ordered_json std_vector_to_json(const std::vector<T>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& x : v) arr.push_back(x);
    return arr;
}

}  // namespace

ordered_json model_to_json(const ModelFile& model) {
    const GmmParams& p = model.params;
    ordered_json j;
    j["schema"] = 1;
    j["kind"] = to_string(p.kind());
    j["k"] = p.k();
    j["d"] = p.d();
    j["theta"] = vector_to_json(p.theta());
    j["means"] = matrix_to_json(p.means());
    ordered_json covs = ordered_json::array();
    for (const auto& c : p.covariances()) {
        switch (c.kind()) {
            case CovarianceKind::Full:
            case CovarianceKind::Tied:
                covs.push_back(matrix_to_json(c.dense()));
                break;
            case CovarianceKind::Diagonal:
                covs.push_back(vector_to_json(c.variances()));
                break;
            case CovarianceKind::Spherical:
            case CovarianceKind::SoftKMeans:
                covs.push_back(c.spherical_variance());
                break;
        }
    }
    j["covariances"] = std::move(covs);
    j["log_dets"] = vector_to_json(p.log_dets());
    if (p.kind() == CovarianceKind::SoftKMeans) j["beta"] = model.beta;
    j["iterations"] = model.iterations;
    j["converged"] = model.converged;
    j["seed"] = model.seed;
    return j;
}

ModelFile model_from_json(const json& j) {
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw config_error("unsupported model schema");
    const CovarianceKind kind = covariance_kind_from_string(j.at("kind").get<std::string>());
    const auto k = j.at("k").get<Eigen::Index>();
    const auto d = j.at("d").get<Eigen::Index>();
    Eigen::VectorXd theta = vector_from_json(j.at("theta"));
    Eigen::MatrixXd means = matrix_from_json(j.at("means"));
    if (theta.size() != k || means.rows() != k || means.cols() != d)
        throw config_error("model shape fields disagree with payload");

    const double beta = j.value("beta", 0.0);
    std::vector<Covariance> covs;
    covs.reserve(k);
    for (const auto& cj : j.at("covariances")) {
        switch (kind) {
            case CovarianceKind::Full:
                covs.push_back(Covariance::full(matrix_from_json(cj)));
                break;
            case CovarianceKind::Tied:
                covs.push_back(Covariance::tied(matrix_from_json(cj)));
                break;
            case CovarianceKind::Diagonal:
                covs.push_back(Covariance::diagonal(vector_from_json(cj)));
                break;
            case CovarianceKind::Spherical:
                covs.push_back(Covariance::spherical(cj.get<double>(), d));
                break;
            case CovarianceKind::SoftKMeans:
                covs.push_back(Covariance::soft_kmeans(beta, d));
                break;
        }
    }
    ModelFile model{GmmParams(std::move(theta), std::move(means), std::move(covs)),
                    j.value("iterations", 0), j.value("converged", false), j.value("seed", 0ULL),
                    beta};
    return model;
}

ordered_json profile_to_json(const ProfileReport& r) {
    ordered_json j;
    j["n"] = r.n;
    j["d"] = r.d;
    j["k"] = r.k;
    j["kappa_V"] = r.kappa_V;
    j["kappa_sigma"]["raw"] = std_vector_to_json(r.kappa_sigma);
    j["kappa_sigma"]["thresholded"] = std_vector_to_json(r.kappa_sigma_thresholded);
    j["mu_V"] = r.mu_V;
    if (r.mu_V_prime)
        j["mu_V_prime"] = *r.mu_V_prime;
    else
        j["mu_V_prime"] = nullptr;
    j["mu_V_prime_frobenius_bound"] = r.mu_V_prime_frobenius_bound;
    j["mu_sigma"] = std_vector_to_json(r.mu_sigma);
    j["eta"] = r.eta;
    j["log_abs_dets"] = std_vector_to_json(r.log_abs_dets);
    j["log_abs_dets_exact"] = std_vector_to_json(r.log_abs_dets_exact);
    j["spectral_norms"] = std_vector_to_json(r.spectral_norms);
    return j;
}

ProfileReport profile_from_json(const json& j) {
    ProfileReport r;
    r.n = j.at("n").get<Eigen::Index>();
    r.d = j.at("d").get<Eigen::Index>();
    r.k = j.at("k").get<Eigen::Index>();
    r.kappa_V = j.at("kappa_V").get<double>();
    r.kappa_sigma = j.at("kappa_sigma").at("raw").get<std::vector<double>>();
    r.kappa_sigma_thresholded = j.at("kappa_sigma").at("thresholded").get<std::vector<double>>();
    r.mu_V = j.at("mu_V").get<double>();
    if (!j.at("mu_V_prime").is_null()) r.mu_V_prime = j.at("mu_V_prime").get<double>();
    r.mu_V_prime_frobenius_bound = j.value("mu_V_prime_frobenius_bound", 0.0);
    r.mu_sigma = j.at("mu_sigma").get<std::vector<double>>();
    r.eta = j.at("eta").get<double>();
    r.log_abs_dets = j.at("log_abs_dets").get<std::vector<double>>();
    r.log_abs_dets_exact = j.value("log_abs_dets_exact", std::vector<double>{});
    r.spectral_norms = j.at("spectral_norms").get<std::vector<double>>();
    return r;
}

ordered_json cost_to_json(const CostReport& r) {
    ordered_json j;
    j["t_theta"] = r.t_theta;
    j["t_mu"] = r.t_mu;
    j["t_sigma"] = r.t_sigma;
    j["t_ell"] = r.t_ell;
    j["dominant_term"] = r.dominant_term;
    j["classical_cost"] = r.classical_cost;
    if (r.crossover_n)
        j["crossover_n"] = *r.crossover_n;
    else
        j["crossover_n"] = nullptr;
    ordered_json echo;
    echo["k"] = r.inputs_echo.k;
    echo["d"] = r.inputs_echo.d;
    echo["n"] = r.inputs_echo.n;
    echo["eta"] = r.inputs_echo.eta;
    echo["kappa_V"] = r.inputs_echo.kappa_V;
    echo["mu_V"] = r.inputs_echo.mu_V;
    echo["mu_V_prime"] = r.inputs_echo.mu_V_prime;
    echo["kappa_sigma"] = r.inputs_echo.kappa_sigma;
    echo["mu_sigma"] = r.inputs_echo.mu_sigma;
    echo["delta_theta"] = r.inputs_echo.delta_theta;
    echo["delta_mu"] = r.inputs_echo.delta_mu;
    echo["eps_tau"] = r.inputs_echo.eps_tau;
    echo["mu_V_prime_is_upper_bound"] = r.inputs_echo.mu_V_prime_is_upper_bound;
    j["inputs_echo"] = std::move(echo);
    j["estimator"] = r.estimator;
    j["kappa_v_squared"] = r.kappa_v_squared;
    j["reduction"] = r.reduction;
    j["mu_v_prime_flagged"] = r.mu_v_prime_flagged;
    j["disclaimer"] = r.disclaimer;
    return j;
}

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw config_error("write failed: " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error(path + ": " + e.what());
    }
    return j;
}

}  // namespace qemlab
