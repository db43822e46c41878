// Structured operation reports: a human-readable text block (with wall time)
// and a deterministic JSON form that depends only on the inputs.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace quasilin {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

std::uint64_t fnv1a(std::string_view data);

class Report {
  public:
    Report(std::string op, std::string input_name, std::uint64_t input_digest);

    void add(const std::string& key, Json value);

    // Text form, ending with the wall time (excluded from the JSON form).
    std::string text(double wall_seconds) const;
    Json json() const;

  private:
    std::string op_;
    std::string input_name_;
    std::uint64_t digest_;
    std::vector<std::pair<std::string, Json>> fields_;
};

Json json_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
Json json_matrix(const Eigen::Ref<const Eigen::MatrixXd>& M);

}  // namespace quasilin
