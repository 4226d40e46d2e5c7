#include "specbath/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace specbath {

std::string to_string(Method method) {
    switch (method) {
        case Method::redfield: return "redfield";
        case Method::heom: return "heom";
        case Method::sbd: return "sbd";
    }
    throw std::invalid_argument("unknown method");
}

Method method_from_string(std::string_view name) {
    if (name == "redfield") return Method::redfield;
    if (name == "heom") return Method::heom;
    if (name == "sbd") return Method::sbd;
    throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected redfield, heom or sbd)");
}

Trajectory::Trajectory(std::vector<double> times, std::vector<DensityMatrix> states, Method method,
                       TrajectoryMetadata metadata)
    : times_(std::move(times)), states_(std::move(states)), method_(method), metadata_(std::move(metadata)) {
    if (times_.empty()) throw std::invalid_argument("Trajectory: empty");
    if (times_.size() != states_.size()) throw std::invalid_argument("Trajectory: times and states differ in length");
    if (times_.front() != 0.0) throw std::invalid_argument("Trajectory: times[0] must be 0");
    for (std::size_t k = 1; k < times_.size(); ++k)
        if (!(times_[k] > times_[k - 1])) throw std::invalid_argument("Trajectory: times must be strictly increasing");
    for (const auto& s : states_)
        if (s.dim() != states_.front().dim()) throw std::invalid_argument("Trajectory: inconsistent state dimensions");
}

std::vector<double> Trajectory::population(std::size_t site) const {
    std::vector<double> out;
    out.reserve(states_.size());
    for (const auto& s : states_) out.push_back(s(site, site).real());
    return out;
}

std::vector<std::complex<double>> Trajectory::element(std::size_t i, std::size_t j) const {
    std::vector<std::complex<double>> out;
    out.reserve(states_.size());
    for (const auto& s : states_) out.push_back(s(i, j));
    return out;
}

bool Trajectory::states_valid() const {
    for (const auto& s : states_)
        if (!s.diagnostics().valid()) return false;
    return true;
}

void Trajectory::write_csv(std::ostream& out, const std::vector<std::string>& header) const {
    for (const auto& line : header) out << "# " << line << '\n';
    const auto d = dim();
    out << "time_fs";
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out << ",re_" << i << '_' << j << ",im_" << i << '_' << j;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t k = 0; k < times_.size(); ++k) {
        out << times_[k];
        const auto& m = states_[k].matrix();
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) out << ',' << m(i, j).real() << ',' << m(i, j).imag();
        out << '\n';
    }
}

Trajectory Trajectory::read_csv(std::istream& in, Method method, TrajectoryMetadata metadata) {
    std::string line;
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    bool header_seen = false;
    Eigen::Index d = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
            d = static_cast<Eigen::Index>(std::llround(std::sqrt(columns / 2.0)));
            if (d * d * 2 != columns) throw std::invalid_argument("Trajectory CSV: bad header");
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (static_cast<Eigen::Index>(values.size()) != 1 + 2 * d * d)
            throw std::invalid_argument("Trajectory CSV: malformed row");
        Eigen::MatrixXcd m(d, d);
        std::size_t c = 1;
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j, c += 2) m(i, j) = {values[c], values[c + 1]};
        times.push_back(values[0]);
        states.push_back(DensityMatrix::unchecked(std::move(m)));
    }
    return Trajectory(std::move(times), std::move(states), method, std::move(metadata));
}

}  // namespace specbath
