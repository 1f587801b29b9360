#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli/commands.hpp"
#include "frozen_values.hpp"

namespace fs = std::filesystem;
using semistab::cli::json;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("semistab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "semistab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    Run r;
    r.code = semistab::cli::cli_main(static_cast<int>(argv.size()), argv.data(), o, e);
    r.out = o.str();
    r.err = e.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

std::string write_config(const TmpDir& d, const std::string& name, const std::string& text) {
    std::ofstream(d / name) << text;
    return d / name;
}

Run run_config(const TmpDir& d, const std::string& cmd, const std::string& text,
               std::vector<std::string> extra = {}) {
    const auto cfg = write_config(d, cmd + ".json", text);
    std::vector<std::string> args{cmd, "--config", cfg, "--out", d / ("out_" + cmd)};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
}

const char* kStable =
    R"({"schema_version":1,"model":{"m":1,"a1":0.4,"a2":0.4,"b0":1e-3,"b1":-0.0501215,"b2":0.02},)";

}  // namespace

TEST_CASE("zeros: S-mode has a real zero near -b0/b1") {
    TmpDir d;
    const auto r = run_config(d, "zeros", R"({"schema_version":1,"model":{"kind":"S","m":1,"xi":1,"G":1e-3,"b2":0}})");
    REQUIRE(r.code == 0);
    const auto j = read_json(d / "out_zeros/zeros.json");
    REQUIRE(j["panels"].size() == 1);
    const auto& p = j["panels"][0];
    const double b0 = p["coeffs"]["b0"], b1 = p["coeffs"]["b1"];
    bool found = false;
    for (const auto& z : p["zeros"])
        if (z["im"].get<double>() == 0.0 && std::abs(z["re"].get<double>() + b0 / b1) < 1e-3 * std::abs(b0 / b1))
            found = true;
    CHECK(found);
    CHECK(fs::exists(d / "out_zeros/contours.svg"));
    CHECK(slurp(d / "out_zeros/contours.csv").rfind("panel,set,line,point,re,im\n", 0) == 0);
}

TEST_CASE("zeros: figure sweep gives four panels, empty sweep gives one") {
    TmpDir d;
    const auto r = run_config(d, "zeros",
                              R"({"schema_version":1,"model":{"m":1,"a1":-1,"a2":-1,"b0":-1,"b1":-10,"b2":0},)"
                              R"("sweep":{"parameter":"b2","values":[3,4,5,5.4]}})");
    REQUIRE(r.code == 0);
    const auto j = read_json(d / "out_zeros/zeros.json");
    CHECK(j["panels"].size() == 4);
    const auto svg = slurp(d / "out_zeros/contours.svg");
    CHECK(svg.find("b2 = 5.4") != std::string::npos);

    TmpDir e;
    REQUIRE(run_config(e, "zeros",
                       R"({"schema_version":1,"model":{"m":1,"a1":-1,"a2":-1,"b0":-1,"b1":-10,"b2":3},)"
                       R"("sweep":{"parameter":"b2","values":[]}})")
                .code == 0);
    CHECK(read_json(e / "out_zeros/zeros.json")["panels"].size() == 1);
}

TEST_CASE("zeros: output is identical across thread counts") {
    TmpDir a, b;
    const std::string cfg = R"({"schema_version":1,"model":{"m":1,"a1":-1,"a2":-1,"b0":-1,"b1":-10,"b2":0},)"
                            R"("sweep":{"parameter":"b2","values":[3,5]},"grid":{"nx":80,"ny":60}})";
    REQUIRE(run_config(a, "zeros", cfg, {"--threads", "1"}).code == 0);
    REQUIRE(run_config(b, "zeros", cfg, {"--threads", "3"}).code == 0);
    for (const char* f : {"zeros.json", "contours.csv", "contours.svg"})
        CHECK(slurp(a / (std::string("out_zeros/") + f)) == slurp(b / (std::string("out_zeros/") + f)));
}

TEST_CASE("solve: both routes agree on a stable configuration") {
    TmpDir d;
    const auto r = run_config(d, "solve",
                              std::string(kStable) +
                                  R"("route":"both","grid":{"p":0,"T":30,"dt":0.01},"source":{"kind":"bump","start":1,"end":5}})");
    REQUIRE(r.code == 0);
    const auto m = read_json(d / "out_solve/manifest.json");
    CHECK(m["passed"].get<bool>());
    CHECK(m["modes"][0]["deltas"]["polecut"].get<double>() < 1e-3);
    CHECK(m["modes"][0]["deltas"]["volterra"].get<double>() < 1e-6);
    CHECK(m["tolerances"]["polecut_delta"].get<double>() == 1e-3);
    const auto csv = slurp(d / "out_solve/mode_0_dyson.csv");
    CHECK(csv.rfind("t,re,im\n", 0) == 0);
}

TEST_CASE("solve: zero source gives an all-zero series") {
    TmpDir d;
    const auto r = run_config(d, "solve",
                              std::string(kStable) + R"("route":"dyson","grid":{"p":0,"T":5,"dt":0.01},"source":{"kind":"zero"}})");
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(d / "out_solve/mode_0_dyson.csv"));
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    bool zero = true;
    while (std::getline(csv, line)) {
        ++rows;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        if (std::stod(line.substr(c1 + 1, c2 - c1 - 1)) != 0.0 || std::stod(line.substr(c2 + 1)) != 0.0) zero = false;
    }
    CHECK(rows == 501);
    CHECK(zero);
}

TEST_CASE("solve: unstable configuration fits an exponential") {
    TmpDir d;
    const auto r = run_config(
        d, "solve",
        R"({"schema_version":1,"model":{"m":1,"a1":0.4,"a2":0.4,"b0":-0.0012550185522337616,)"
        R"("b1":-0.003332035903706503,"b2":0.0050115410041820241},"route":"polecut",)"
        R"("grid":{"p":0,"T":60,"dt":0.02},"source":{"kind":"bump","start":1,"end":5},"fit":{"t_lo":30,"t_hi":60,"width":5}})");
    REQUIRE(r.code == 0);
    const auto f = read_json(d / "out_solve/manifest.json")["modes"][0]["fit"];
    CHECK(f["kind"] == "exponential");
    CHECK(f["rate"].get<double>() == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("solve: pole plus cut is refused for absorbed zeros") {
    TmpDir d;
    const auto r = run_config(d, "solve",
                              R"({"schema_version":1,"model":{"kind":"TT","m":0.5,"xi":1,"b2":-0.7},"route":"polecut",)"
                              R"("grid":{"p":0,"T":5,"dt":0.01},"source":{"kind":"bump","start":1,"end":3}})");
    CHECK(r.code == 3);
    CHECK(r.err.find("absorbed") != std::string::npos);
}

TEST_CASE("classify verdicts") {
    TmpDir d;
    auto verdict = [&](const std::string& model) {
        const auto r = run_config(d, "classify", R"({"schema_version":1,"model":)" + model + "}");
        REQUIRE(r.code == 0);
        return read_json(d / "out_classify/classify.json");
    };
    const auto tt = verdict(R"({"kind":"TT","m":1,"xi":1,"b2":50})");
    CHECK(tt["verdict"] == "unstable");
    CHECK(tt["L_or_null"].get<double>() < 0.05);
    CHECK(tt["H_bound"].get<double>() == doctest::Approx(std::sqrt(tt["L_or_null"].get<double>())));
    const auto st = verdict(R"({"m":1,"a1":0.4,"a2":0.4,"b0":1e-3,"b1":-0.0501215,"b2":0.02})");
    CHECK(st["verdict"] == "stable_decaying");
    CHECK(st["L_or_null"].is_null());
    CHECK(verdict(R"({"kind":"TT","m":0.5,"xi":1,"b2":-0.7})")["verdict"] == "mixed_cut_absorbed");
}

TEST_CASE("decompose: generated TT and random inputs, parse errors") {
    TmpDir d;
    auto r = run_config(d, "decompose",
                        R"({"schema_version":1,"generate":{"kind":"tt","per_axis":4,"steps":64}})");
    REQUIRE(r.code == 0);
    auto res = read_json(d / "out_decompose/residuals.json");
    CHECK(res["w_sup"].get<double>() / res["input_sup"].get<double>() < 1e-10);
    CHECK(res["vT_sup"].get<double>() / res["input_sup"].get<double>() < 1e-10);
    for (const char* f : {"h.field", "w.field", "vT.field", "hS.field", "hV.field", "hTT.field"})
        CHECK(fs::exists(d / (std::string("out_decompose/") + f)));

    TmpDir e;
    r = run_config(e, "decompose", R"({"schema_version":1,"generate":{"kind":"random","per_axis":4,"steps":64,"seed":9}})");
    REQUIRE(r.code == 0);
    res = read_json(e / "out_decompose/residuals.json");
    CHECK(res["reconstruction"].get<double>() < 1e-10);
    CHECK(res["passed"].get<bool>());

    // Feed the generated field back in through a relative path.
    fs::copy_file(e / "out_decompose/h.field", e / "h.field");
    r = run_config(e, "decompose", R"({"schema_version":1,"input":"h.field"})");
    CHECK(r.code == 0);

    std::ofstream(e / "bad.field") << "semistab-field 1\nrank 2\nn four\n";
    r = run_config(e, "decompose", R"({"schema_version":1,"input":"bad.field"})");
    CHECK(r.code == 2);
    CHECK(r.err.find("line") != std::string::npos);
}

TEST_CASE("cosmology outputs and scaling") {
    TmpDir d;
    auto r = run_config(d, "cosmology", R"({"schema_version":1,"Omega_Lambda":0.685,"Lambda":7.15e-121})");
    REQUIRE(r.code == 0);
    const auto j = read_json(d / "out_cosmology/cosmology.json");
    const double m = j["m_eV"];
    CHECK(m == doctest::Approx(frozen::kMassEV).epsilon(1e-12));
    CHECK(std::abs(m - 7.8e-3) / 7.8e-3 < 0.03);
    CHECK(j["gamma_tilde"].get<double>() < 0.0);
    CHECK(j["H"].get<double>() == doctest::Approx(std::sqrt(-j["gamma_tilde"].get<double>())));
    CHECK(j["Lambda_pred"].get<double>() == doctest::Approx(7.15e-121).epsilon(1e-10));

    TmpDir e;
    r = run_config(e, "cosmology", R"({"schema_version":1,"Omega_Lambda":0.685,"Lambda":7.15e-121,"M_P":4.87e27})");
    REQUIRE(r.code == 0);
    CHECK(read_json(e / "out_cosmology/cosmology.json")["m_eV"].get<double>() == doctest::Approx(2 * m).epsilon(1e-12));

    CHECK(run_config(e, "cosmology", R"({"schema_version":1,"Omega_Lambda":1.5})").code == 2);
}

TEST_CASE("config validation and exit codes") {
    TmpDir d;
    CHECK(run_config(d, "classify", R"({"schema_version":1,"bogus":1})").code == 2);
    CHECK(run_config(d, "classify", R"({"schema_version":2,"model":{"m":1}})").code == 2);
    CHECK(run_config(d, "classify", R"({"schema_version":1,"model":{"m":1,"a1":0.4,"a2":0.4,"b0":1,"b1":1,"b2":1,"extra":0}})").code == 2);
    CHECK(run_config(d, "classify", "{not json").code == 2);
    auto r = run_config(d, "classify", std::string(kStable) + R"("tolerances":{"zero_residual":-1}})");
    CHECK(r.code == 2);
    r = run_config(d, "classify", R"({"schema_version":1,"model":{"m":1,"a1":0.4,"a2":0.4,"b0":1e-3,"b1":-0.0501215,"b2":0.02}})",
                   {"--tol-override", "nonsense=1"});
    CHECK(r.code == 2);
    r = run_config(d, "classify", R"({"schema_version":1,"model":{"m":1,"a1":0.4,"a2":0.4,"b0":1e-3,"b1":-0.0501215,"b2":0.02}})",
                   {"--tol-override", "zero_residual=1e-6"});
    REQUIRE(r.code == 0);
    CHECK(read_json(d / "out_classify/classify.json")["tolerances"]["zero_residual"].get<double>() == 1e-6);
    CHECK(run({"zeros"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("validate runs the invariant suite") {
    TmpDir d;
    const auto r = run({"validate", "--out", d / "v"});
    CHECK(r.code == 0);
    const auto j = read_json(d / "v/report.json");
    CHECK(j["passed"].get<bool>());
    bool kernel = false;
    for (const auto& c : j["checks"]) {
        CHECK(c["passed"].get<bool>());
        if (c["name"] == "kernel_decay") kernel = c["extra"].contains("C") && c["extra"].contains("decay_exponent");
    }
    CHECK(kernel);
}
