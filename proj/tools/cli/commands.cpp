#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "semistab/cosmology.hpp"
#include "semistab/mode_solver.hpp"
#include "semistab/parallel.hpp"
#include "semistab/tensor.hpp"
#include "semistab/validation.hpp"

namespace fs = std::filesystem;

namespace semistab::cli {

namespace {

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

fs::path out_path(const Options& opt, const std::string& name) {
    fs::path dir(opt.out);
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const Options& opt, const std::string& name, const std::string& text) {
    const fs::path p = out_path(opt, name);
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

void write_json(const Options& opt, const std::string& name, const json& j) {
    write_text(opt, name, j.dump(2) + "\n");
}

json header(const std::string& command) {
    return json{{"schema_version", kSchemaVersion}, {"command", command}};
}

// Finite numbers only; JSON has no representation for NaN.
json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Domain errors raised while building inputs are configuration errors.
template <class F>
auto as_config(F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

ContourGrid parse_grid(Reader* r, double m) {
    ContourGrid g;
    const double s = m * m;
    g.re_lo *= s;
    g.re_hi *= s;
    g.im_lo *= s;
    g.im_hi *= s;
    if (!r) return g;
    g.re_lo = r->num("re_lo", g.re_lo);
    g.re_hi = r->num("re_hi", g.re_hi);
    g.im_lo = r->num("im_lo", g.im_lo);
    g.im_hi = r->num("im_hi", g.im_hi);
    g.nx = r->integer("nx", g.nx);
    g.ny = r->integer("ny", g.ny);
    r->done();
    if (!(g.re_lo < g.re_hi) || !(g.im_lo < g.im_hi)) throw ConfigError("grid: empty window");
    if (g.nx < 3 || g.ny < 3) throw ConfigError("grid: nx and ny must be at least 3");
    return g;
}

}  // namespace

std::string series_csv(const std::vector<double>& t, const std::vector<double>& re,
                       const std::vector<double>& im) {
    std::string s = "t,re,im\n";
    char buf[96];
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10e,%.10e,%.10e\n", t[i], re[i], im[i]);
        s += buf;
    }
    return s;
}

std::string contours_csv(const std::vector<Panel>& panels) {
    std::string s = "panel,set,line,point,re,im\n";
    char buf[128];
    for (std::size_t p = 0; p < panels.size(); ++p) {
        auto emit = [&](const std::vector<Polyline>& lines, const char* set) {
            for (std::size_t l = 0; l < lines.size(); ++l)
                for (std::size_t i = 0; i < lines[l].points.size(); ++i) {
                    const cplx z = lines[l].points[i];
                    std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%zu,%.10e,%.10e\n", p, set, l, i,
                                  z.real(), z.imag());
                    s += buf;
                }
        };
        emit(panels[p].contours.re_zero, "re");
        emit(panels[p].contours.im_zero, "im");
    }
    return s;
}

std::string contours_svg(const std::vector<Panel>& panels) {
    const double W = 360, H = 300, pad = 40;
    const std::size_t n = std::max<std::size_t>(1, panels.size());
    std::ostringstream o;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "font-family=\"sans-serif\" font-size=\"11\">\n",
                  W * n, H);
    o << buf;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& g = panels[p].grid;
        const double x0 = p * W + pad, x1 = (p + 1) * W - 10, y0 = H - pad, y1 = 25;
        auto X = [&](double re) { return x0 + (re - g.re_lo) / (g.re_hi - g.re_lo) * (x1 - x0); };
        auto Y = [&](double im) { return y0 + (im - g.im_lo) / (g.im_hi - g.im_lo) * (y1 - y0); };
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" "
                      "stroke=\"black\"/>\n",
                      x0, y1, x1 - x0, y0 - y1);
        o << buf;
        if (g.im_lo < 0 && g.im_hi > 0) {
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" "
                          "stroke-dasharray=\"3,3\"/>\n",
                          x0, Y(0), x1, Y(0));
            o << buf;
        }
        if (g.re_lo < 0 && g.re_hi > 0) {
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" "
                          "stroke-dasharray=\"3,3\"/>\n",
                          X(0), y0, X(0), y1);
            o << buf;
        }
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\">%.4g</text>\n<text x=\"%.2f\" y=\"%.2f\" "
                      "text-anchor=\"end\">%.4g</text>\n",
                      x0, y0 + 14, g.re_lo, x1, y0 + 14, g.re_hi);
        o << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.4g</text>\n<text "
                      "x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.4g</text>\n",
                      x0 - 3, y0, g.im_lo, x0 - 3, y1 + 8, g.im_hi);
        o << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">Re gamma</text>\n",
                      0.5 * (x0 + x1), H - 8);
        o << buf;
        if (!panels[p].title.empty()) {
            std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">",
                          0.5 * (x0 + x1), 16.0);
            o << buf << panels[p].title << "</text>\n";
        }
        auto lines = [&](const std::vector<Polyline>& ls, const char* colour) {
            for (const auto& l : ls) {
                o << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
                for (std::size_t i = 0; i < l.points.size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "",
                                  X(l.points[i].real()), Y(l.points[i].imag()));
                    o << buf;
                }
                o << "\"/>\n";
            }
        };
        lines(panels[p].contours.re_zero, "blue");
        lines(panels[p].contours.im_zero, "red");
        for (const auto& c : panels[p].contours.crossings) {
            std::snprintf(buf, sizeof buf,
                          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n",
                          X(c.real()), Y(c.imag()));
            o << buf;
        }
    }
    o << "</svg>\n";
    return o.str();
}

int cmd_zeros(const json& cfg, const Options& opt, std::ostream& log) {
    Reader r = top_level(cfg);
    const Model md = parse_model(r.obj("model"));
    std::optional<Sweep> sw;
    if (r.has("sweep")) sw = parse_sweep(r.obj("sweep"), md);
    SearchSpec ss;
    if (r.has("search")) ss = parse_search(r.obj("search"));
    std::optional<json> grid_block;
    if (r.has("grid")) grid_block = r.raw("grid");
    Tolerances tol({{"zero_residual", 1e-10}, {"crossing_cells", 2.0}});
    if (r.has("tolerances")) tol.apply_block(r.obj("tolerances"));
    tol.apply_overrides(opt.tol_overrides);
    r.done();

    const int n = sw ? static_cast<int>(sw->values.size()) : 1;
    std::vector<Model> models;
    std::vector<ContourGrid> grids;
    for (int i = 0; i < n; ++i) {
        models.push_back(sw ? md.with(sw->parameter, sw->values[i]) : md);
        std::optional<Reader> gr;
        if (grid_block) gr.emplace(*grid_block, "grid");
        grids.push_back(parse_grid(gr ? &*gr : nullptr, models.back().m()));
        ss.box(models.back().m());
    }

    std::vector<json> pj(n);
    std::vector<Panel> panels(n);
    parallel_for(n, [&](int i) {
        const auto k = models[i].coeffs();
        const double m = models[i].m();
        const ZeroSet zs = find_zeros(k, m, ss.box(m));
        Panel& pan = panels[i];
        pan.grid = grids[i];
        pan.contours = trace_zero_sets(k, m, pan.grid);
        if (sw) pan.title = sw->parameter + " = " + fmt("%g", sw->values[i]);

        json zeros = json::array();
        double max_res = 0.0;
        for (const auto& z : zs.zeros) {
            zeros.push_back(zero_to_json(z));
            max_res = std::max(max_res, z.residual);
        }
        const double reach = tol["crossing_cells"] * pan.contours.cell;
        json crossings = json::array();
        std::vector<char> seen(zs.zeros.size(), 0);
        for (const auto& c : pan.contours.crossings) {
            double best = INFINITY;
            for (std::size_t j = 0; j < zs.zeros.size(); ++j) {
                const cplx z = zs.zeros[j].gamma;
                const double d = std::min(std::abs(c - z), std::abs(c - std::conj(z)));
                if (d <= reach) seen[j] = 1;
                best = std::min(best, d);
            }
            crossings.push_back(json{{"re", c.real()},
                                     {"im", c.imag()},
                                     {"nearest_zero_distance", num_or_null(best)},
                                     {"matched", best <= reach}});
        }
        int unmatched = 0;
        for (std::size_t j = 0; j < zs.zeros.size(); ++j) {
            const cplx z = zs.zeros[j].gamma;
            const bool inside = z.real() > pan.grid.re_lo && z.real() < pan.grid.re_hi &&
                                std::abs(z.imag()) < std::max(-pan.grid.im_lo, pan.grid.im_hi);
            if (inside && !seen[j]) ++unmatched;
        }
        pj[i] = json{{"value", sw ? json(sw->values[i]) : json(nullptr)},
                     {"m", m},
                     {"coeffs", coeffs_to_json(k)},
                     {"zeros", zeros},
                     {"count", zs.count},
                     {"winding_count", zs.winding_count},
                     {"absorbed_into_cut", zs.absorbed_into_cut},
                     {"all_found", zs.all_found},
                     {"box_consistent", zs.box_consistent},
                     {"far_zero_beyond", zs.far_zero_beyond},
                     {"max_residual", max_res},
                     {"residual_ok", max_res <= tol["zero_residual"]},
                     {"contour_cell", pan.contours.cell},
                     {"crossings", crossings},
                     {"zeros_without_crossing", unmatched}};
    });

    json out = header("zeros");
    out["model"] = md.to_json();
    out["sweep"] = sw ? json{{"parameter", sw->parameter}, {"values", sw->values}} : json(nullptr);
    out["tolerances"] = tol.to_json();
    out["panels"] = pj;
    write_json(opt, "zeros.json", out);
    write_text(opt, "contours.svg", contours_svg(panels));
    write_text(opt, "contours.csv", contours_csv(panels));
    for (int i = 0; i < n; ++i)
        log << "panel " << i << (panels[i].title.empty() ? "" : " (" + panels[i].title + ")")
            << ": " << pj[i]["zeros"].size() << " zeros, " << pj[i]["crossings"].size()
            << " crossings\n";
    return kExitOk;
}

namespace {

json report_to_json(const ResidualReport& r) {
    return json{{"iterations", r.iterations},
                {"final_increment", r.final_increment},
                {"kappa", r.kappa},
                {"kappa_analytic", r.kappa_analytic},
                {"log_envelope_max", r.log_envelope_max},
                {"envelope_ratio", r.envelope_ratio},
                {"majorant_ratio", r.majorant_ratio},
                {"envelope_respected", r.envelope_respected},
                {"cut_truncation", r.cut_truncation},
                {"causality_leak", r.causality_leak},
                {"notes", r.notes}};
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    const double s = std::max(sup_norm(a), sup_norm(b));
    if (s == 0.0) return 0.0;
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d / s;
}

}  // namespace

int cmd_solve(const json& cfg, const Options& opt, std::ostream& log) {
    Reader r = top_level(cfg);
    const Model md = parse_model(r.obj("model"));
    const std::string route = r.str("route", "dyson");
    if (route != "dyson" && route != "polecut" && route != "volterra" && route != "both")
        throw ConfigError("route: expected dyson, polecut, volterra or both");

    Reader gr = r.obj("grid");
    std::vector<double> ps;
    if (gr.has("p") && gr.raw("p").is_array()) ps = gr.nums("p");
    else ps = {gr.num("p", 0.0)};
    if (ps.empty()) throw ConfigError("grid.p: empty list");
    const double t0 = gr.num("t0", 0.0), T = gr.num("T", 50.0), dt = gr.num("dt", 0.01);
    gr.done();

    Reader sr = r.obj("source");
    const std::string skind = sr.str("kind", "bump");
    double s_start = 1.0, s_end = 5.0, amp = 1.0;
    if (skind == "bump") {
        s_start = sr.num("start", s_start);
        s_end = sr.num("end", s_end);
        amp = sr.num("amplitude", amp);
    } else if (skind != "zero") {
        throw ConfigError("source.kind: expected bump or zero");
    }
    sr.done();
    if (skind == "zero") amp = 0.0;

    Tolerances tol({{"polecut_delta", 1e-3}, {"volterra_delta", 1e-6}, {"dyson_increment", 1e-13}});
    if (r.has("tolerances")) tol.apply_block(r.obj("tolerances"));
    tol.apply_overrides(opt.tol_overrides);

    DysonConfig dc;
    dc.coeffs = md.coeffs();
    dc.m = md.m();
    dc.tol = tol["dyson_increment"];
    if (r.has("dyson")) {
        Reader d = r.obj("dyson");
        if (d.has("c")) dc.c = d.num("c");
        const std::string ref = d.str("reference", "normal_form");
        if (ref == "self") dc.reference = DysonConfig::Reference::self;
        else if (ref != "normal_form") throw ConfigError("dyson.reference: expected normal_form or self");
        if (d.has("eps")) {
            const auto e = d.nums("eps");
            if (e.size() != 2) throw ConfigError("dyson.eps: expected two numbers");
            dc.eps = {e[0], e[1]};
        }
        dc.max_iter = d.integer("max_iter", dc.max_iter);
        d.done();
    }
    std::optional<FitWindow> fit;
    if (r.has("fit")) {
        Reader f = r.obj("fit");
        FitWindow w;
        w.t_lo = f.num("t_lo");
        w.t_hi = f.num("t_hi");
        w.width = f.num("width", 0.0);
        w.step = f.num("step", 0.0);
        w.origin = f.num("origin", 0.0);
        const std::string env = f.str("envelope", "rms");
        if (env == "max") w.envelope = FitWindow::Envelope::max;
        else if (env != "rms") throw ConfigError("fit.envelope: expected rms or max");
        f.done();
        if (!(w.t_hi > w.t_lo) || !(w.t_lo > w.origin)) throw ConfigError("fit: bad window");
        fit = w;
    }
    r.done();

    std::vector<ModeSource> sources;
    for (double p : ps) {
        sources.push_back(as_config([&] {
            ModeGrid g{p, t0, T, dt};
            g.validate();
            if (skind == "zero") {
                ModeSource s{g, std::vector<double>(g.steps() + 1, 0.0), t0};
                return s;
            }
            return bump_source(g, s_start, s_end, amp);
        }));
    }

    const auto k = md.coeffs();
    const double m = md.m();
    const Classification cls = classify_stability(k, m);
    const bool want_d = route == "dyson" || route == "both";
    const bool want_v = route == "volterra" || route == "both";
    const bool want_p = route == "polecut" || route == "both";
    if (want_p && cls.zeros.absorbed_into_cut)
        throw DomainError("route polecut is invalid here: zeros are absorbed into the cut");

    const int n = static_cast<int>(ps.size());
    std::vector<std::map<std::string, ModeSolution>> sols(n);
    parallel_for(n, [&](int i) {
        const ModeSource& S = sources[i];
        auto& out = sols[i];
        if (want_d || want_v) {
            const DysonSetup setup = dyson_setup(S, dc);
            if (want_d) out["dyson"] = dyson_solve(S, setup, dc);
            if (want_v) out["volterra"] = volterra_solve(S, setup);
        }
        if (want_p) {
            PolecutOptions po;
            po.zeros = cls.zeros;
            out["polecut"] = polecut_solve(S, k, m, po);
        }
    });

    bool passed = true;
    json modes = json::array();
    for (int i = 0; i < n; ++i) {
        json mj{{"index", i}, {"p", ps[i]}};
        json files = json::object(), reports = json::object();
        const ModeSolution* primary = nullptr;
        for (const char* name : {"dyson", "polecut", "volterra"}) {
            auto it = sols[i].find(name);
            if (it == sols[i].end()) continue;
            const auto& s = it->second;
            if (!primary) primary = &s;
            std::vector<double> t(s.samples.size()), im(s.samples.size(), 0.0);
            for (std::size_t j = 0; j < t.size(); ++j) t[j] = s.grid.t(static_cast<int>(j));
            const std::string file = "mode_" + std::to_string(i) + "_" + name + ".csv";
            write_text(opt, file, series_csv(t, s.samples, im));
            files[name] = file;
            reports[name] = report_to_json(s.report);
            if (!s.report.envelope_respected) passed = false;
        }
        mj["files"] = files;
        mj["reports"] = reports;
        if (route == "both") {
            const auto& d = sols[i]["dyson"].samples;
            const double dp = rel_diff(d, sols[i]["polecut"].samples);
            const double dv = rel_diff(d, sols[i]["volterra"].samples);
            mj["deltas"] = json{{"polecut", dp}, {"volterra", dv}};
            mj["deltas_ok"] = dp < tol["polecut_delta"] && dv < tol["volterra_delta"];
            if (!mj["deltas_ok"].get<bool>()) passed = false;
        }
        if (fit && primary) {
            std::vector<double> t(primary->samples.size());
            for (std::size_t j = 0; j < t.size(); ++j) t[j] = primary->grid.t(static_cast<int>(j));
            const AsymptoticFit af = asymptotic_fit(t, primary->samples, *fit);
            mj["fit"] = json{{"route", to_string(primary->route)},
                             {"kind", to_string(af.kind)},
                             {"power_exponent", af.power_exponent},
                             {"rate", af.rate},
                             {"power_residual", af.power_residual},
                             {"exp_residual", af.exp_residual},
                             {"fit_error", af.fit_error},
                             {"points", af.points}};
        }
        modes.push_back(mj);
    }

    json man = header("solve");
    man["model"] = md.to_json();
    man["route"] = route;
    man["grid"] = json{{"p", ps}, {"t0", t0}, {"T", T}, {"dt", dt}};
    man["source"] = json{{"kind", skind}, {"start", s_start}, {"end", s_end}, {"amplitude", amp}};
    man["classification"] = json{{"verdict", to_string(cls.verdict)}, {"rate", cls.rate}};
    man["tolerances"] = tol.to_json();
    man["modes"] = modes;
    man["passed"] = passed;
    write_json(opt, "manifest.json", man);
    log << "solved " << n << " mode(s), route " << route << (passed ? ", checks passed\n" : ", checks FAILED\n");
    return passed ? kExitOk : kExitValidation;
}

int cmd_classify(const json& cfg, const Options& opt, std::ostream& log) {
    Reader r = top_level(cfg);
    const Model md = parse_model(r.obj("model"));
    SearchSpec ss;
    if (r.has("search")) ss = parse_search(r.obj("search"));
    Tolerances tol({{"zero_residual", 1e-10}});
    if (r.has("tolerances")) tol.apply_block(r.obj("tolerances"));
    tol.apply_overrides(opt.tol_overrides);
    r.done();

    const Classification c = classify_stability(md.coeffs(), md.m(), ss.box(md.m()));
    json zeros = json::array();
    double max_res = 0.0;
    for (const auto& z : c.zeros.zeros) {
        zeros.push_back(zero_to_json(z));
        max_res = std::max(max_res, z.residual);
    }
    json out = header("classify");
    out["model"] = md.to_json();
    out["verdict"] = to_string(c.verdict);
    out["zeros"] = zeros;
    out["L_or_null"] = c.L > 0.0 ? json(c.L) : json(nullptr);
    out["H_bound"] = c.rate;
    out["absorbed_into_cut"] = c.zeros.absorbed_into_cut;
    out["winding_count"] = c.zeros.winding_count;
    out["all_found"] = c.zeros.all_found;
    out["max_residual"] = max_res;
    out["residual_ok"] = max_res <= tol["zero_residual"];
    out["tolerances"] = tol.to_json();
    write_json(opt, "classify.json", out);
    log << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_decompose(const json& cfg, const Options& opt, std::ostream& log) {
    using namespace tensor;
    Reader r = top_level(cfg);
    Tolerances tol({{"reconstruction", 1e-10}, {"tt_trace", 1e-10}, {"tt_divergence", 1e-10}});
    SymmetricTensorField h;
    const bool has_in = r.has("input"), has_gen = r.has("generate");
    if (has_in == has_gen) throw ConfigError("decompose: give exactly one of input or generate");
    bool generated = false;
    if (has_in) {
        fs::path p(r.str("input"));
        if (p.is_relative()) p = fs::path(opt.base_dir) / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("input: cannot open " + p.string());
        try {
            h = read_field<2>(in);
        } catch (const ParseError& e) {
            throw ConfigError(p.string() + ": " + e.what());
        }
    } else {
        Reader g = r.obj("generate");
        const std::string kind = g.str("kind", "random");
        const int n = g.integer("n", 4), per_axis = g.integer("per_axis", 8);
        const double ell = g.num("ell", 2.0 * kPi), t0 = g.num("t0", 0.0), dt = g.num("dt", 0.05);
        const int steps = g.integer("steps", 256), seed = g.integer("seed", 1), band = g.integer("band", 2);
        const double start = g.num("support_start", t0 + 0.5);
        g.done();
        if (kind != "random" && kind != "tt") throw ConfigError("generate.kind: expected random or tt");
        if (per_axis < 1 || band < 0 || seed < 0) throw ConfigError("generate: bad box parameters");
        h = as_config([&] {
            const Space s = Space::periodic_box(n, per_axis, ell, t0, dt, steps, start);
            s.validate();
            return kind == "tt" ? random_tt(s, seed, band) : random_tensor(s, seed, band);
        });
        generated = true;
    }
    if (r.has("tolerances")) tol.apply_block(r.obj("tolerances"));
    tol.apply_overrides(opt.tol_overrides);
    r.done();

    const DecompositionResult d = decompose(h);
    const double hn = sup_norm(h), ttn = sup_norm(d.hTT);
    const double recon = relative_diff(h, d.hS + d.hV + d.hTT);
    const double tr = ttn > 0.0 ? sup_norm(trace(d.hTT)) / ttn : 0.0;
    const double dv = divergence_residual(d.hTT);

    auto save = [&](const std::string& name, const auto& f) {
        std::ostringstream os;
        write_field(os, f);
        write_text(opt, name, os.str());
    };
    if (generated) save("h.field", h);
    save("w.field", d.w);
    save("vT.field", d.vT);
    save("hS.field", d.hS);
    save("hV.field", d.hV);
    save("hTT.field", d.hTT);

    const bool ok = recon < tol["reconstruction"] && tr < tol["tt_trace"] && dv < tol["tt_divergence"];
    json res = header("decompose");
    res["n"] = h.space.n;
    res["modes"] = h.space.modes.size();
    res["steps"] = h.space.steps;
    res["input_sup"] = hn;
    res["reconstruction"] = recon;
    res["tt_trace"] = tr;
    res["tt_divergence"] = dv;
    res["w_sup"] = sup_norm(d.w);
    res["vT_sup"] = sup_norm(d.vT);
    res["hS_sup"] = sup_norm(d.hS);
    res["hV_sup"] = sup_norm(d.hV);
    res["hTT_sup"] = ttn;
    res["tolerances"] = tol.to_json();
    res["passed"] = ok;
    write_json(opt, "residuals.json", res);
    log << "decomposed " << h.space.modes.size() << " modes: reconstruction " << fmt("%.3e", recon)
        << ", TT trace " << fmt("%.3e", tr) << ", TT divergence " << fmt("%.3e", dv) << "\n";
    return ok ? kExitOk : kExitValidation;
}

int cmd_cosmology(const json& cfg, const Options& opt, std::ostream& log) {
    Reader r = top_level(cfg);
    CosmologyInputs in;
    in.Omega_Lambda = r.num("Omega_Lambda", in.Omega_Lambda);
    in.Lambda = r.num("Lambda", in.Lambda);
    in.M_P = r.num("M_P", in.M_P);
    std::optional<double> b2;
    if (r.has("b2")) b2 = r.num("b2");
    const double mu = r.num("mu_over_m", 1.0);
    Tolerances tol({{"hierarchy_threshold", kHierarchyThreshold}});
    if (r.has("tolerances")) tol.apply_block(r.obj("tolerances"));
    tol.apply_overrides(opt.tol_overrides);
    r.done();
    as_config([&] {
        in.validate();
        if (!(mu > 0.0)) throw DomainError("mu_over_m must be positive");
        return 0;
    });

    const double m = invert_mass(in);
    PhysicalParams p = planck_params(m, in);
    p.mu = mu * m;
    std::optional<PrototypeCoefficients> k;
    const double a1S = fixed_linear_constants().alpha1_S;
    if (b2) k = s_mode_coefficients(p, a1S, *b2);
    const RootEstimate est = unstable_root_estimate(p, k, tol["hierarchy_threshold"]);
    const HubbleLambda hl = hubble_and_lambda(p, in);

    json out = header("cosmology");
    out["gamma_tilde"] = est.gamma_tilde;
    out["H"] = hl.H;
    out["Lambda_pred"] = hl.Lambda_pred;
    out["m_eV"] = m;
    out["inputs"] = json{{"Omega_Lambda", in.Omega_Lambda}, {"Lambda", in.Lambda}, {"M_P", in.M_P}};
    out["G"] = p.G;
    out["alpha1_S"] = a1S;
    // Round-trip error of the inversion: Lambda recovered from m against the input.
    out["Lambda_roundtrip_error"] = std::abs(hl.Lambda_pred - in.Lambda) / in.Lambda;
    json hier{{"ok", est.hierarchy_ok}};
    hier["b2_ratio"] = est.b2_ratio ? json(*est.b2_ratio) : json(nullptr);
    hier["J_ratio"] = est.J_ratio ? json(*est.J_ratio) : json(nullptr);
    if (!est.warning.empty()) hier["warning"] = est.warning;
    out["hierarchy"] = hier;
    out["tolerances"] = tol.to_json();
    write_json(opt, "cosmology.json", out);
    log << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_validate(const json& cfg, const Options& opt, std::ostream& log) {
    Tolerances tol(default_validation_tolerances());
    if (!cfg.is_null()) {
        Reader r = top_level(cfg);
        if (r.has("tolerances")) tol.apply_block(r.obj("tolerances"));
        r.done();
    }
    tol.apply_overrides(opt.tol_overrides);
    const auto checks = run_validation(tol.values());
    bool all = true;
    json arr = json::array();
    for (const auto& c : checks) {
        all = all && c.passed;
        json e{{"name", c.name},
               {"passed", c.passed},
               {"value", num_or_null(c.value)},
               {"tolerance", c.tolerance},
               {"detail", c.detail}};
        json ex = json::object();
        for (const auto& [k, v] : c.extra) ex[k] = num_or_null(v);
        e["extra"] = ex;
        arr.push_back(e);
        log << (c.passed ? "PASS " : "FAIL ") << c.name << " value " << fmt("%.3e", c.value)
            << " tolerance " << fmt("%.1e", c.tolerance);
        for (const auto& [k, v] : c.extra) log << " " << k << " " << fmt("%.4g", v);
        log << "\n";
    }
    json out = header("validate");
    out["passed"] = all;
    out["checks"] = arr;
    write_json(opt, "report.json", out);
    return all ? kExitOk : kExitValidation;
}

}  // namespace semistab::cli
