#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "semistab/parallel.hpp"
#include "semistab/tensor.hpp"

namespace semistab::cli {

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mode analysis for nonlocal linearised semiclassical gravity", "semistab"};
    app.require_subcommand(1);

    std::string config, outdir = ".";
    int threads = 0;
    std::vector<std::string> tols;

    using Cmd = int (*)(const json&, const Options&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Cmd>> table{
        {"zeros", "zero sets of the characteristic function, with contour plots", cmd_zeros},
        {"solve", "time-domain mode solutions", cmd_solve},
        {"classify", "stability verdict from the zero set", cmd_classify},
        {"decompose", "scalar/vector/TT decomposition of a tensor field", cmd_decompose},
        {"cosmology", "mass, Hubble rate and Lambda from cosmological inputs", cmd_cosmology},
        {"validate", "run the invariant suite", cmd_validate},
    };
    std::map<CLI::App*, Cmd> dispatch;
    for (const auto& [name, desc, fn] : table) {
        CLI::App* sc = app.add_subcommand(name, desc);
        auto* c = sc->add_option("--config", config, "JSON configuration")->check(CLI::ExistingFile);
        if (name != "validate") c->required();
        sc->add_option("--out", outdir, "output directory");
        sc->add_option("--threads", threads, "worker threads")
            ->check(CLI::PositiveNumber)
            ->envname("SEMISTAB_THREADS");
        sc->add_option("--tol-override", tols, "KEY=VAL, repeatable")->take_all();
        dispatch[sc] = fn;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Cmd fn = nullptr;
    for (const auto& [sc, f] : dispatch)
        if (sc->parsed()) fn = f;

    if (threads > 0) set_thread_count(threads);
    Options opt;
    opt.out = outdir;
    opt.tol_overrides = tols;
    try {
        json cfg;
        if (!config.empty()) {
            cfg = load_config(config);
            opt.base_dir = std::filesystem::path(config).parent_path().string();
            if (opt.base_dir.empty()) opt.base_dir = ".";
        }
        return fn(cfg, opt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tensor::ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    }
}

}  // namespace semistab::cli
