#ifndef QEMLAB_MODEL_IO_HPP
#define QEMLAB_MODEL_IO_HPP

#include <json.hpp>
#include <optional>
#include <string>

#include "qemlab/cost_model.hpp"
#include "qemlab/em.hpp"
#include "qemlab/gmm.hpp"
#include "qemlab/profiler.hpp"

namespace qemlab {

// Versioned model schema: covariances are dense for full/tied, variance
// vectors for diagonal, a scalar for spherical and soft k-means.
struct ModelFile {
    GmmParams params;
    int iterations = 0;
    bool converged = false;
    std::uint64_t seed = 0;
    double beta = 0.0;  // soft k-means only
};

nlohmann::ordered_json model_to_json(const ModelFile& model);
ModelFile model_from_json(const nlohmann::json& j);

nlohmann::ordered_json profile_to_json(const ProfileReport& report);
ProfileReport profile_from_json(const nlohmann::json& j);

nlohmann::ordered_json cost_to_json(const CostReport& report);

void write_json_file(const std::string& path, const nlohmann::ordered_json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace qemlab

#endif
