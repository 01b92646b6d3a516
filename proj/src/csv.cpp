#include "qemlab/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "qemlab/errors.hpp"

namespace qemlab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open " + path + " for writing");
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        if (j) out << ',';
        out << 'f' << j;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (j) out << ',';
            out << format_double(points(i, j));
        }
        out << '\n';
    }
    if (!out) throw config_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

Eigen::MatrixXd read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw config_error(path + ":1: empty file");
    const auto header = split_fields(line);
    const auto d = static_cast<Eigen::Index>(header.size());
    for (Eigen::Index j = 0; j < d; ++j)
        if (header[j] != "f" + std::to_string(j))
            throw config_error(path + ":1: expected header field f" + std::to_string(j) + ", got '" +
                               header[j] + "'");

    std::vector<double> values;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (static_cast<Eigen::Index>(fields.size()) != d)
            throw config_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(d) + " fields, got " + std::to_string(fields.size()));
        for (const auto& f : fields) {
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (end == f.c_str() || *end != '\0')
                throw config_error(path + ":" + std::to_string(line_no) + ": bad float '" + f + "'");
            values.push_back(v);
        }
    }
    if (values.empty()) throw config_error(path + ": no samples");

    const auto n = static_cast<Eigen::Index>(values.size()) / d;
    Eigen::MatrixXd points(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) points(i, j) = values[i * d + j];
    return points;
}

}  // namespace qemlab
