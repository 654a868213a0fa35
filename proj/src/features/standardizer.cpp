#include "holdstab/features/standardizer.hpp"

#include <cmath>
#include <fstream>

#include "holdstab/core/error.hpp"

namespace holdstab {

Standardizer Standardizer::identity(int dimension) {
    return {Eigen::VectorXd::Zero(dimension), Eigen::VectorXd::Ones(dimension)};
}

void Standardizer::apply_in_place(Eigen::MatrixXd& m) const {
    if (m.cols() != mean.size())
        throw DataError("standardizer has " + std::to_string(mean.size()) + " dimensions, features have " +
                        std::to_string(m.cols()));
    m.rowwise() -= mean.transpose();
    m.array().rowwise() /= std.transpose().array();
}

FeatureSequence Standardizer::apply(const FeatureSequence& seq) const {
    FeatureSequence out = seq;
    apply_in_place(out.matrix);
    return out;
}

nlohmann::json Standardizer::to_json() const {
    return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"std", std::vector<double>(std.data(), std.data() + std.size())}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("std").get<std::vector<double>>();
    if (m.size() != s.size()) throw DataError("standardizer mean and std lengths differ");
    Standardizer out;
    out.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    out.std = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    for (double v : s)
        if (!(v > 0.0) || !std::isfinite(v)) throw DataError("standardizer std entries must be positive and finite");
    return out;
}

void Standardizer::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    // max_digits10 through dump() keeps the round trip exact.
    out << to_json().dump() << '\n';
}

Standardizer Standardizer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Standardizer fit_standardizer(std::span<const FeatureSequence* const> seqs, Exec exec) {
    if (seqs.empty()) throw DataError("cannot fit a standardizer on zero sequences");
    const auto D = seqs.front()->matrix.cols();
    double rows = 0.0;
    for (const auto* s : seqs) {
        if (s->matrix.cols() != D) throw DataError("sequences disagree on feature dimension");
        rows += static_cast<double>(s->matrix.rows());
    }
    if (rows == 0.0) throw DataError("cannot fit a standardizer on empty sequences");

    const auto n = seqs.size();
    std::vector<Eigen::VectorXd> partial(n);
    for_each_index(exec, n, [&](std::size_t i) { partial[i] = seqs[i]->matrix.colwise().sum().transpose(); });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    for (const auto& p : partial) mean += p;
    mean /= rows;

    std::vector<Eigen::VectorXd> lo(n), hi(n);
    for_each_index(exec, n, [&](std::size_t i) {
        const auto& m = seqs[i]->matrix;
        partial[i] = (m.rowwise() - mean.transpose()).array().square().colwise().sum().transpose();
        lo[i] = m.colwise().minCoeff().transpose();
        hi[i] = m.colwise().maxCoeff().transpose();
    });
    Eigen::VectorXd var = Eigen::VectorXd::Zero(D);
    Eigen::VectorXd mn = lo.front(), mx = hi.front();
    for (std::size_t i = 0; i < n; ++i) {
        var += partial[i];
        mn = mn.cwiseMin(lo[i]);
        mx = mx.cwiseMax(hi[i]);
    }
    var /= rows;

    Standardizer s;
    s.mean = mean;
    s.std = var.cwiseSqrt().cwiseMax(kStdFloor);
    for (Eigen::Index j = 0; j < D; ++j)
        if (mn[j] == mx[j]) s.mean[j] = mn[j];
    if (!s.mean.allFinite() || !s.std.allFinite()) throw NumericError("non-finite values while fitting standardizer");
    return s;
}

Standardizer fit_standardizer(const std::vector<FeatureSequence>& seqs, Exec exec) {
    std::vector<const FeatureSequence*> ptrs;
    ptrs.reserve(seqs.size());
    for (const auto& s : seqs) ptrs.push_back(&s);
    return fit_standardizer(std::span<const FeatureSequence* const>(ptrs), exec);
}

}  // namespace holdstab
