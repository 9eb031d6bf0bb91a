#include <lrs/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace lrs;

namespace {

struct Options {
    std::string config_file;
    std::vector<std::string> overrides;
    int threads = 1;
    // indexset
    std::vector<std::string> e0;
    bool m_nonzero = false;
    double depth = 3.5;
    // fit
    std::string slices_file;
    // verify
    std::vector<int> criteria;
};

json build_config(const Options& o) {
    json cfg = o.config_file.empty() ? default_config() : load_config(o.config_file);
    for (const auto& s : o.overrides) apply_override(cfg, s);
    return resolve_config(cfg);
}

int cmd_geometry_check(json cfg) {
    auto rd = open_run(cfg, "geometry-check");
    GeometryReport rep;
    try {
        auto mdl = config_model(cfg);
        rep = geometry_check(mdl, cfg_get<int>(cfg, "geometry.samples"), cfg_get<double>(cfg, "geometry.remainder_bound"));
    } catch (const ConfigError& e) {
        rd.write_json("geometry_report.json", {{"pass", false}, {"error", e.what()}});
        throw;
    } catch (const std::exception& e) {
        rd.write_json("geometry_report.json", {{"pass", false}, {"error", e.what()}});
        std::cerr << "geometry-check: " << e.what() << "\n";
        return 1;
    }
    rd.write_json("geometry_report.json", rep.to_json());
    for (const auto& c : rep.checks) std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << " (worst " << c.worst << ")\n";
    const auto& k = rep.constants;
    std::cout << "constants: omega=" << k.omega << " alpha=" << k.alpha << " beta=" << k.beta << " m=" << k.m << "\n";
    std::cout << "report: " << (rd.path / "geometry_report.json").string() << "\n";
    return all_pass(rep.checks) ? 0 : 1;
}

int cmd_flow(json cfg) {
    auto rd = open_run(cfg, "flow");
    auto mdl = config_model(cfg);
    const int seeds = cfg_get<int>(cfg, "flow.seeds"), ntraj = std::min(seeds, cfg_get<int>(cfg, "flow.trajectories"));
    const double horizon = cfg_get<double>(cfg, "flow.horizon"), tol = cfg_get<double>(cfg, "flow.tol");
    if (seeds < 0 || ntraj < 0 || horizon < 0 || !(tol > 0)) throw ConfigError("flow: seeds, trajectories, horizon must be >= 0 and tol > 0");
    std::vector<Bicharacteristic> curves(ntraj);
    TraceOptions topt;
    topt.tol = tol;
    parallel_for(ntraj, [&](int i) { curves[i] = trace_bicharacteristic(mdl, null_seed(mdl, i), horizon, topt); });
    rd.write("trajectories.csv", trajectories_csv(curves));
    json lin;
    bool lin_ok = true;
    try {
        auto R = linearization(mdl);
        lin = linearization_json(R);
        for (const auto& c : R.covectors) lin_ok = lin_ok && c.pass;
        std::cout << "radial-set eigenvalues:";
        for (const auto& c : R.eigen) std::cout << " " << c.value.real() << " (x" << c.algebraic << ")";
        std::cout << (R.jordan_block ? "; Jordan block present" : "; diagonalizable") << "\n";
    } catch (const std::runtime_error& e) {
        lin = {{"error", e.what()}};
        lin_ok = false;
    }
    rd.write_json("linearization.json", lin);
    auto nt = check_nontrapping(mdl, seeds, horizon, tol);
    rd.write("nontrapping.csv", nontrapping_csv(nt));
    rd.write_json("nontrapping.json", nontrapping_json(nt));
    std::cout << "non-trapping: " << nt.reached << " reached, " << nt.left_chart << " left chart, " << nt.unclassified << " unclassified of "
              << nt.seeds << "\n";
    std::cout << "run directory: " << rd.path.string() << "\n";
    return lin_ok && nt.pass ? 0 : 1;
}

int cmd_solve(json cfg) {
    const double M = config_mass(cfg);
    auto rd = open_run(cfg, "solve");
    auto so = run_solve(cfg, M, cfg_get<double>(cfg, "solver.dr"));
    write_checkpoint(so.sol, rd.path / "solution", rd.run_id);
    rd.write("slices.csv", slices_csv(so.slices, so.chart));
    std::cout << so.sol.label << ": " << so.sol.steps << " steps, " << so.sol.levels.size() << " stored levels, max |psi| " << so.sol.max_abs
              << "\n";
    if (M == 0 && cfg_get<bool>(cfg, "solver.convergence.enabled")) {
        auto rep = run_convergence(cfg);
        rd.write("convergence.csv", convergence_csv(rep));
        std::cout << convergence_csv(rep);
    }
    std::cout << "run directory: " << rd.path.string() << "\n";
    return 0;
}

int cmd_fit(json cfg, const std::string& slices_file) {
    const double M = config_mass(cfg);
    auto rd = open_run(cfg, "fit");
    std::vector<NullSlice> slices;
    ExtractionChart chart;
    if (!slices_file.empty()) {
        std::ifstream in(slices_file);
        if (!in) throw ConfigError(cat("cannot read slices file ", slices_file));
        std::tie(slices, chart) = read_slices_csv(in);
    } else {
        auto so = run_solve(cfg, M, cfg_get<double>(cfg, "solver.dr"));
        slices = std::move(so.slices);
        chart = so.chart;
        rd.write("slices.csv", slices_csv(slices, chart));
    }
    auto fo = run_fit(cfg, slices, M);
    fo.fit.chart = chart_name(chart);
    rd.write("fit.csv", fit_csv(fo.fit, fo.has_log_report ? &fo.log : nullptr));
    auto rep = fit_report_json(fo);
    rd.write_json("verify_report.json", rep);
    rd.write_json("tail_report.json", fo.tail.to_json());
    if (fo.has_log_report)
        std::cout << "log coefficient: max relative residual " << fo.log.max_rel_residual << " against " << fo.log.factor
                  << " * d_s w0 (tolerance " << cfg_get<double>(cfg, "fit.log_tolerance") << ")\n";
    else
        std::cout << "short range: max(|w1^1|, |w1^2|) / max|w1^0| = " << fo.m0_ratio << "\n";
    if (fo.tail.present)
        std::cout << "tail: p = " << fo.tail.fit.p << ", kappa = " << fo.tail.fit.kappa << (fo.tail.fit.stable ? " (stable)" : " (unstable)") << "\n";
    else
        std::cout << "tail: no signal above the floor in s >= " << cfg_get<double>(cfg, "fit.tail.s_min") << "\n";
    std::cout << "run directory: " << rd.path.string() << "\n";
    return fo.pass ? 0 : 1;
}

int cmd_indexset(json cfg, const Options& o) {
    if (!(o.depth > 0)) throw ConfigError("--depth must be > 0");
    if (o.e0.empty()) throw ConfigError("indexset needs at least one --e0 re,im,k entry");
    auto parsed = IndexSet::from_text([&] {
        std::string t;
        for (const auto& e : o.e0) t += e + "\n";
        return t;
    }(), o.depth);
    auto R = resonance_sets(parsed.entries(), o.m_nonzero, o.depth);
    auto rd = open_run(cfg, "indexset");
    std::ostringstream os;
    os << "# E0\n" << parsed.to_text() << "# E_res0\n" << R.E_res0.to_text() << "# E_res\n" << R.E_res.to_text() << "# E_scri\n" << R.E_scri.to_text();
    rd.write("e_tot.txt", os.str());
    std::cout << os.str();
    return 0;
}

int cmd_verify(json cfg, std::vector<int> ids) {
    if (ids.empty())
        for (int i = 1; i <= 10; ++i) ids.push_back(i);
    auto rd = open_run(cfg, "verify");
    json rep = json::array();
    std::ostringstream txt;
    bool ok = true;
    for (int id : ids) {
        auto r = run_criterion(id, cfg);
        std::cout << r.line() << "\n";
        txt << r.line() << "\n";
        for (const auto& i : r.info) {
            std::cout << "INFO criterion " << id << ": " << i << "\n";
            txt << "INFO criterion " << id << ": " << i << "\n";
        }
        std::cout.flush();
        rep.push_back(criterion_json(r));
        ok = ok && r.pass;
    }
    rd.write("acceptance.txt", txt.str());
    rd.write_json("acceptance.json", rep);
    std::cout << "run directory: " << rd.path.string() << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lrs: long-range scattering toolkit (geometry, flow, wave solver, expansions, index sets)"};
    app.require_subcommand(0, 1);
    Options o;
    bool print_default = false, show_version = false;
    app.add_flag("--print-default-config", print_default, "Print the default configuration as JSON and exit");
    app.add_flag("--version", show_version, "Print the version and exit");
    app.add_option("-c,--config", o.config_file, "JSON config file overlaid on the defaults")->check(CLI::ExistingFile);
    app.add_option("-s,--set", o.overrides, "Override one config key, e.g. --set solver.dr=0.1 (repeatable)");
    app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);

    auto* geo = app.add_subcommand("geometry-check", "Validate the configured metric model and report its normal-form constants");
    auto* flow = app.add_subcommand("flow", "Trace null bicharacteristics, linearize at the radial set, sample non-trapping");
    auto* solve = app.add_subcommand("solve", "Run the radial wave solver and extract null slices");
    auto* fit = app.add_subcommand("fit", "Fit the front-face expansion and check the log coefficient");
    fit->add_option("--slices", o.slices_file, "Slice CSV from a previous solve (default: solve first)");
    auto* idx = app.add_subcommand("indexset", "Print the total index set for a given E0");
    idx->add_option("--e0", o.e0, "Entry 're,im,k' of E0, decimals snapped to small-denominator rationals (repeatable)")->required();
    idx->add_flag("--m-nonzero", o.m_nonzero, "Long-range case m != 0");
    idx->add_option("--depth", o.depth, "Truncation depth A");
    auto* ver = app.add_subcommand("verify", "Run the acceptance pipeline");
    ver->add_option("--criterion", o.criteria, "Run only these criteria (1-10, repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    thread_count() = o.threads;
    try {
        if (show_version) {
            std::cout << "lrs " << version << "\n";
            return 0;
        }
        if (print_default) {
            std::cout << default_config().dump(2) << "\n";
            std::cerr << config_schema_notes();
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 2;
        }
        json cfg = build_config(o);
        if (*geo) return cmd_geometry_check(cfg);
        if (*flow) return cmd_flow(cfg);
        if (*solve) return cmd_solve(cfg);
        if (*fit) return cmd_fit(cfg, o.slices_file);
        if (*idx) return cmd_indexset(cfg, o);
        if (*ver) return cmd_verify(cfg, o.criteria);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
