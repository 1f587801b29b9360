#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "semistab/mode_algebra.hpp"

namespace semistab::cli {

struct Options {
    std::string out = ".";
    // Directory that relative paths inside the config resolve against.
    std::string base_dir = ".";
    std::vector<std::string> tol_overrides;
};

// Each returns an exit code; ConfigError and solver exceptions propagate.
int cmd_zeros(const json& cfg, const Options& opt, std::ostream& log);
int cmd_solve(const json& cfg, const Options& opt, std::ostream& log);
int cmd_classify(const json& cfg, const Options& opt, std::ostream& log);
int cmd_decompose(const json& cfg, const Options& opt, std::ostream& log);
int cmd_cosmology(const json& cfg, const Options& opt, std::ostream& log);
int cmd_validate(const json& cfg, const Options& opt, std::ostream& log);

// Full front end: argument parsing, dispatch and exit-code mapping.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct Panel {
    std::string title;
    ZeroContours contours;
    ContourGrid grid;
};

std::string contours_svg(const std::vector<Panel>& panels);
std::string contours_csv(const std::vector<Panel>& panels);
std::string series_csv(const std::vector<double>& t, const std::vector<double>& re,
                       const std::vector<double>& im);

}  // namespace semistab::cli
