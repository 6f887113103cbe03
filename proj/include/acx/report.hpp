#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace acx {

// One row of every report: a named residual compared against a threshold.
struct CheckResult {
    std::string check;
    double residual = 0.0;
    double threshold = 0.0;
    bool pass = true;
    std::vector<double> witness_point;  // empty when not meaningful
    std::string note;
};

// Running maximum of a residual with the point where it occurred. NaN counts
// as infinitely bad.
class WorstCase {
public:
    void update(double residual, const std::vector<double>& point) {
        const double r = std::isnan(residual) ? std::numeric_limits<double>::infinity() : residual;
        if (!seen_ || r > value_) {
            value_ = r;
            point_ = point;
            seen_ = true;
        }
    }
    double value() const { return value_; }
    const std::vector<double>& point() const { return point_; }
    bool seen() const { return seen_; }

    CheckResult result(std::string name, double threshold) const {
        return CheckResult{std::move(name), value_, threshold, value_ <= threshold, point_, {}};
    }

private:
    double value_ = 0.0;
    std::vector<double> point_;
    bool seen_ = false;
};

}  // namespace acx
