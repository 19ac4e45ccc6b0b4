#include "sgldfp/libsvm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace sgldfp {

namespace {

struct SparseRow {
    double label;
    std::vector<std::pair<int, double>> features;  // (1-based index, value)
};

[[noreturn]] void fail(long line_no, const std::string& what) {
    std::ostringstream msg;
    msg << "parse_libsvm: line " << line_no << ": " << what;
    throw std::runtime_error(msg.str());
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

Dataset parse_libsvm(const std::string& path, LibsvmReport* report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_libsvm: cannot open " + path);

    std::vector<SparseRow> rows;
    int max_index = 0;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;  // skip blanks, including a trailing newline
        std::istringstream ls(line);
        SparseRow row;
        if (!(ls >> row.label)) fail(line_no, "cannot read label");
        std::string tok;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) fail(line_no, "expected index:value, got '" + tok + "'");
            int idx = 0;
            double val = 0.0;
            try {
                std::size_t used = 0;
                idx = std::stoi(tok.substr(0, colon), &used);
                if (used != colon) throw std::invalid_argument(tok);
                val = std::stod(tok.substr(colon + 1), &used);
                if (used != tok.size() - colon - 1) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                fail(line_no, "malformed feature '" + tok + "'");
            }
            if (idx < 1) fail(line_no, "feature indices are 1-based");
            max_index = std::max(max_index, idx);
            row.features.emplace_back(idx, val);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("parse_libsvm: empty file " + path);
    if (max_index == 0) throw std::runtime_error("parse_libsvm: no features in " + path);

    std::set<double> labels;
    for (const auto& r : rows) labels.insert(r.label);
    const auto subset_of = [&](std::initializer_list<double> allowed) {
        return std::all_of(labels.begin(), labels.end(), [&](double l) {
            return std::find(allowed.begin(), allowed.end(), l) != allowed.end();
        });
    };

    std::string mapping = "raw";
    double shift = 0.0, scale = 1.0;
    if (subset_of({0.0, 1.0})) {
        mapping = "identity";
    } else if (subset_of({-1.0, 1.0})) {
        mapping = "-1/+1 -> 0/1";  // y = (l + 1)/2
        shift = 1.0;
        scale = 0.5;
    } else if (subset_of({1.0, 2.0})) {
        mapping = "1/2 -> 0/1";  // covertype convention: y = l - 1
        shift = -1.0;
        scale = 1.0;
    }

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = (rows[i].label + shift) * scale;
        for (const auto& [idx, val] : rows[i].features)
            x(static_cast<Eigen::Index>(i), idx - 1) = val;
    }
    if (report != nullptr)
        *report = LibsvmReport{static_cast<int>(rows.size()), max_index, mapping};
    return Dataset(std::move(x), std::move(y));
}

void write_libsvm(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_libsvm: cannot open " + path);
    char buf[64];
    for (int i = 0; i < data.n(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", data.y(i));
        out << buf;
        for (int j = 0; j < data.dim(); ++j) {
            if (data.X(i, j) == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", data.X(i, j));
            out << ' ' << (j + 1) << ':' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_libsvm: write failed for " + path);
}

}  // namespace sgldfp
