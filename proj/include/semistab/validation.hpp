#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace semistab {

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
    // Additional measured quantities reported alongside the value.
    std::map<std::string, double> extra;
};

// Default tolerance per check name; overrides replace entries by name.
std::map<std::string, double> default_validation_tolerances();

std::vector<Check> run_validation(const std::map<std::string, double>& overrides = {});

// max over sample masses of |Im J(M + i0) - pi rho(M)| / (pi rho(M)), with rho injectable.
double sokhotski_plemelj_residual(const std::function<double(double, double)>& rho, double m);

}  // namespace semistab
