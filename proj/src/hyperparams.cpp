#include "nl2l/hyperparams.hpp"

#include <algorithm>
#include <cmath>

#include "nl2l/errors.hpp"

namespace nl2l {

const char* to_string(Encoding e) {
    switch (e) {
    case Encoding::Linear: return "linear";
    case Encoding::Log: return "log";
    case Encoding::Sigmoid: return "sigmoid";
    }
    return "?";
}

std::vector<std::string> ParamSpace::names() const {
    std::vector<std::string> out;
    out.reserve(specs_.size());
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

int ParamSpace::find(const std::string& name) const {
    for (int i = 0; i < dim(); ++i) {
        if (specs_[i].name == name) return i;
    }
    return -1;
}

double ParamSpace::decode(int i, double x) const {
    const auto& s = specs_[i];
    x = std::clamp(x, 0.0, 1.0);
    switch (s.encoding) {
    case Encoding::Linear: return s.lo + (s.hi - s.lo) * x;
    case Encoding::Log: return std::exp(std::log(s.lo) + (std::log(s.hi) - std::log(s.lo)) * x);
    case Encoding::Sigmoid: return s.lo + (s.hi - s.lo) / (1.0 + std::exp(-(12.0 * x - 6.0)));
    }
    return s.lo;
}

double ParamSpace::encode(int i, double value) const {
    const auto& s = specs_[i];
    double x = 0.0;
    switch (s.encoding) {
    case Encoding::Linear: x = (value - s.lo) / (s.hi - s.lo); break;
    case Encoding::Log: x = (std::log(value) - std::log(s.lo)) / (std::log(s.hi) - std::log(s.lo)); break;
    case Encoding::Sigmoid: {
        const double u = std::clamp((value - s.lo) / (s.hi - s.lo), 1e-12, 1.0 - 1e-12);
        x = (std::log(u / (1.0 - u)) + 6.0) / 12.0;
        break;
    }
    }
    return std::clamp(x, 0.0, 1.0);
}

Eigen::VectorXd ParamSpace::decode(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw ContractViolation("ParamSpace::decode: dimension mismatch");
    Eigen::VectorXd out(dim());
    for (int i = 0; i < dim(); ++i) out(i) = decode(i, x(i));
    return out;
}

Eigen::VectorXd ParamSpace::encode(const Eigen::VectorXd& values) const {
    if (values.size() != dim()) throw ContractViolation("ParamSpace::encode: dimension mismatch");
    Eigen::VectorXd out(dim());
    for (int i = 0; i < dim(); ++i) out(i) = encode(i, values(i));
    return out;
}

Eigen::VectorXd ParamSpace::clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::VectorXd ParamSpace::init_mean() const {
    Eigen::VectorXd m(dim());
    for (int i = 0; i < dim(); ++i) m(i) = specs_[i].init_mean;
    return m;
}

Eigen::VectorXd ParamSpace::init_std() const {
    Eigen::VectorXd s(dim());
    for (int i = 0; i < dim(); ++i) s(i) = specs_[i].init_std;
    return s;
}

Eigen::VectorXd ParamSpace::sample_init(Rng& rng) const {
    Eigen::VectorXd x(dim());
    for (int i = 0; i < dim(); ++i) x(i) = specs_[i].init_mean + specs_[i].init_std * standard_normal(rng);
    return clamp(x);
}

Eigen::VectorXd ParamSpace::sample_random(Rng& rng) const {
    Eigen::VectorXd x(dim());
    for (int i = 0; i < dim(); ++i) {
        const auto& s = specs_[i];
        x(i) = s.random_from_init ? s.init_mean + s.init_std * standard_normal(rng) : uniform01(rng);
    }
    return clamp(x);
}

} // namespace nl2l
