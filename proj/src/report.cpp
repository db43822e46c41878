#include "quasilin/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace quasilin {

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Report::Report(std::string op, std::string input_name, std::uint64_t input_digest)
    : op_(std::move(op)), input_name_(std::move(input_name)), digest_(input_digest) {}

void Report::add(const std::string& key, Json value) { fields_.emplace_back(key, std::move(value)); }

std::string Report::text(double wall_seconds) const {
    std::ostringstream os;
    os << "op: " << op_ << "\n";
    os << "version: " << kToolVersion << "\n";
    os << "input: " << input_name_ << "\n";
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(digest_));
    os << "input_digest: " << digest << "\n";
    for (const auto& [key, value] : fields_) {
        os << key << ": ";
        if (value.is_string())
            os << value.get<std::string>();
        else
            os << value.dump();
        os << "\n";
    }
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", wall_seconds * 1e3);
    os << "wall_ms: " << wall << "\n";
    return os.str();
}

Json Report::json() const {
    Json j;
    j["op"] = op_;
    j["version"] = kToolVersion;
    j["input"] = input_name_;
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(digest_));
    j["input_digest"] = digest;
    for (const auto& [key, value] : fields_) j[key] = value;
    return j;
}

Json json_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Json json_matrix(const Eigen::Ref<const Eigen::MatrixXd>& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace quasilin
