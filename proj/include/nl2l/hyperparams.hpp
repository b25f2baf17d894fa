#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nl2l/rng.hpp"

namespace nl2l {

/// How an optimizer coordinate maps onto a hyperparameter value. Every
/// encoded coordinate lives in [0, 1]:
///   Linear   value = lo + (hi - lo) x
///   Log      value = exp(log lo + (log hi - log lo) x)
///   Sigmoid  value = lo + (hi - lo) sigmoid(12 x - 6)
enum class Encoding { Linear, Log, Sigmoid };

const char* to_string(Encoding e);

struct ParamSpec {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    Encoding encoding = Encoding::Linear;
    /// Initial search distribution in encoded coordinates.
    double init_mean = 0.5;
    double init_std = 0.25;
    /// Random-baseline draws use the initial distribution instead of the
    /// uniform box (used for the unbounded-in-spirit ANN parameters).
    bool random_from_init = false;
};

/// Ordered, bounded hyperparameter vector definition.
class ParamSpace {
public:
    ParamSpace() = default;
    explicit ParamSpace(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {}

    int dim() const { return static_cast<int>(specs_.size()); }
    const std::vector<ParamSpec>& specs() const { return specs_; }
    const ParamSpec& spec(int i) const { return specs_[i]; }
    std::vector<std::string> names() const;
    int find(const std::string& name) const;

    double decode(int i, double x) const;
    double encode(int i, double value) const;
    Eigen::VectorXd decode(const Eigen::VectorXd& x) const;
    Eigen::VectorXd encode(const Eigen::VectorXd& values) const;

    /// Projects onto the encoded box [0, 1]^dim.
    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
    Eigen::VectorXd init_mean() const;
    Eigen::VectorXd init_std() const;
    Eigen::VectorXd sample_init(Rng& rng) const;
    Eigen::VectorXd sample_random(Rng& rng) const;

private:
    std::vector<ParamSpec> specs_;
};

} // namespace nl2l
