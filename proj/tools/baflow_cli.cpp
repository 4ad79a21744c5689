// baflow: experiment runner. Every command writes its data files plus <command>.manifest.json
// into --output-dir and prints the main report on stdout.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <baflow/acceptance.hpp>
#include <baflow/baflow.hpp>

namespace fs = std::filesystem;
using namespace baflow;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw IoError("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct Globals {
    std::string output_dir = ".";
    std::string format = "csv";
    std::string units = "nats";
    std::string config;
    std::uint64_t seed = 42;
};

// Output sink for one command invocation.
class Run {
public:
    Run(std::string command, const Globals& g, json inputs)
        : command_(std::move(command)), g_(g), inputs_(std::move(inputs)) {
        std::error_code ec;
        fs::create_directories(g_.output_dir, ec);
        if (ec) throw IoError("cannot create output directory " + g_.output_dir + ": " + ec.message());
    }

    // information quantities are computed in nats
    double info(double nats) const { return g_.units == "bits" ? nats / std::log(2.0) : nats; }
    bool bits() const { return g_.units == "bits"; }
    std::uint64_t seed() const { return g_.seed; }

    void emit(const std::string& name, const std::string& content) {
        write_text_file((fs::path(g_.output_dir) / name).string(), content);
        files_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
    }

    void table(const std::string& stem, const Table& t) {
        if (g_.format == "json") {
            json a = json::array();
            for (const auto& r : t.rows) {
                json o = json::object();
                for (std::size_t i = 0; i < r.size(); ++i) o[t.header[i]] = r[i];
                a.push_back(o);
            }
            emit(stem + ".json", a.dump(1) + "\n");
        } else {
            CsvWriter w(t.header);
            for (const auto& r : t.rows) w.row(r);
            emit(stem + ".csv", w.str());
        }
    }

    void report(const std::string& stem, const json& j) {
        emit(stem + ".json", j.dump(2) + "\n");
        std::cout << j.dump(2) << "\n";
    }

    void check(const std::string& name, bool ok) {
        if (!ok) failures_.push_back(name);
    }

    int finish() {
        json m{{"command", command_},
               {"version", kVersion},
               {"units", g_.units},
               {"format", g_.format},
               {"inputs", inputs_},
               {"files", files_},
               {"failed_checks", failures_}};
        const std::string stem = command_;
        std::string name;
        for (char c : stem) name += c == ' ' ? '_' : c;
        write_text_file((fs::path(g_.output_dir) / (name + ".manifest.json")).string(), m.dump(2) + "\n");
        if (failures_.empty()) return 0;
        std::string msg;
        for (const auto& f : failures_) msg += (msg.empty() ? "" : ", ") + f;
        throw NumericalError("check failed: " + msg);
    }

private:
    std::string command_;
    const Globals& g_;
    json inputs_;
    json files_ = json::array();
    std::vector<std::string> failures_;
};

// ---- problem selection shared by the generic commands ----

struct ProblemOpts {
    std::string problem_file;
    std::string model = "two-point";
    double alpha = 0.5;
    double beta_d = 2.0;
    int m = 5;
    double delta = 3.0;
    double beta = std::nan("");
    std::vector<double> weights;
    std::vector<double> q0;
};

void add_problem_options(CLI::App* sub, ProblemOpts& p) {
    sub->add_option("--problem", p.problem_file, "BAProblem JSON file (overrides --model)");
    sub->add_option("--model", p.model, "built-in problem")->check(CLI::IsMember({"two-point", "three-cluster"}));
    sub->add_option("--alpha", p.alpha, "two-point source weight");
    sub->add_option("--beta-d", p.beta_d, "two-point scaled cost");
    sub->add_option("--m", p.m, "three-cluster cluster size");
    sub->add_option("--delta", p.delta, "three-cluster inter-cluster cost");
    sub->add_option("--beta", p.beta, "inverse temperature override (three-cluster default 2)");
    sub->add_option("--weights", p.weights, "three-cluster source weights");
    sub->add_option("--q0", p.q0, "initial reconstruction distribution");
}

ThreeClusterSpec cluster_spec(int m, double delta, double beta, const std::vector<double>& weights) {
    ThreeClusterSpec s{m, delta, beta};
    if (!weights.empty()) {
        require(weights.size() == 3, "--weights needs three entries");
        std::copy(weights.begin(), weights.end(), s.source_weights.begin());
    }
    return s;
}

BAProblem build_problem(const ProblemOpts& p) {
    if (!p.problem_file.empty()) {
        BAProblem prob = problem_from_json(read_json_file(p.problem_file));
        return std::isnan(p.beta) ? prob : prob.with_beta(p.beta);
    }
    if (p.model == "two-point") {
        BAProblem prob = two_point_problem({p.alpha, p.beta_d});
        return std::isnan(p.beta) ? prob : prob.with_beta(p.beta);
    }
    return three_cluster_problem(cluster_spec(p.m, p.delta, std::isnan(p.beta) ? 2.0 : p.beta, p.weights));
}

ProbVec initial_state(const ProblemOpts& p, Index n) {
    if (p.q0.empty()) return uniform_perturbed(n);
    require(Index(p.q0.size()) == n, "--q0 must have one entry per reconstruction symbol");
    return ProbVec(Vec::Map(p.q0.data(), Index(p.q0.size())));
}

Table trajectory_table(const Trajectory& tr, const Run& run) {
    Table t;
    const Index n = tr.states.empty() ? 0 : tr.states.front().dim();
    t.header.push_back("t");
    for (Index i = 0; i < n; ++i) t.header.push_back("q_" + std::to_string(i));
    for (const char* c : {"free_energy", "dissipation", "residual_l1", "dist_l1"}) t.header.push_back(c);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        std::vector<double> r{tr.times[k]};
        for (Index i = 0; i < n; ++i) r.push_back(tr.states[k][i]);
        r.push_back(run.info(tr.free_energy[k]));
        r.push_back(run.info(tr.dissipation[k]));
        r.push_back(tr.residual_l1[k]);
        r.push_back(tr.has_ref() ? tr.dist_to_ref_l1[k] : std::nan(""));
        t.rows.push_back(std::move(r));
    }
    return t;
}

json fit_json(const DecayFit& f) {
    return json{{"rate", f.rate},           {"r_squared", f.r_squared}, {"t_begin", f.t_begin},
                {"t_end", f.t_end},         {"monotone_tail", f.monotone_tail}};
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1));
    return v;
}

// ---- config file: keys are long option names of the invoked command; flags win ----

std::vector<std::string> config_values(const json& v) {
    auto one = [](const json& x) -> std::string {
        if (x.is_string()) return x.get<std::string>();
        if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
        if (x.is_number()) return x.dump();
        throw ValidationError("config: unsupported value " + x.dump());
    };
    std::vector<std::string> out;
    if (v.is_array())
        for (const auto& x : v) out.push_back(one(x));
    else
        out.push_back(one(v));
    return out;
}

void apply_config(const std::vector<CLI::App*>& chain, const std::string& path) {
    const json cfg = read_json_file(path);
    if (!cfg.is_object()) throw ValidationError("config: expected a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        CLI::Option* opt = nullptr;
        for (auto it = chain.rbegin(); it != chain.rend() && !opt; ++it) opt = (*it)->get_option_no_throw("--" + key);
        if (!opt || key == "config") throw ValidationError("config: unknown key '" + key + "'");
        if (opt->count() > 0) continue;
        for (const auto& s : config_values(value)) opt->add_result(s);
        opt->run_callback();
    }
}

json collect_inputs(const std::vector<CLI::App*>& chain) {
    json in = json::object();
    for (CLI::App* app : chain)
        for (const CLI::Option* o : app->get_options()) {
            if (o->get_lnames().empty()) continue;
            const std::string name = o->get_lnames().front();
            if (name == "help" || name == "version" || name == "config" || name == "output-dir") continue;
            if (o->count() == 0) {
                in[name] = o->get_default_str();
            } else if (o->get_items_expected_max() > 1) {
                in[name] = o->results();
            } else {
                in[name] = o->results().back();
            }
        }
    return in;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blahut-Arimoto flow experiments", "baflow"};
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Globals g;
    app.add_option("--output-dir", g.output_dir, "directory for data files and manifests")->envname("BAFLOW_OUTPUT_DIR");
    app.add_option("--format", g.format, "format for tables")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--units", g.units, "units for information quantities")->check(CLI::IsMember({"nats", "bits"}));
    app.add_option("--config", g.config, "JSON file of option values; command-line flags take precedence");
    app.add_option("--seed", g.seed, "seed for randomized checks");

    std::map<const CLI::App*, std::function<void(Run&)>> handlers;
    ProblemOpts po;

    // flow
    IntegratorConfig ic;
    std::string method = "rk4";
    double fit_tail = 0.3;
    {
        auto* sub = app.add_subcommand("flow", "integrate the flow and report diagnostics");
        add_problem_options(sub, po);
        sub->add_option("--dt", ic.dt)->check(CLI::PositiveNumber);
        sub->add_option("--t-max", ic.t_max)->check(CLI::PositiveNumber);
        sub->add_option("--method", method)->check(CLI::IsMember({"rk4", "euler"}));
        sub->add_option("--sample-every", ic.sample_every)->check(CLI::PositiveNumber);
        sub->add_option("--floor", ic.positivity_floor, "positivity floor");
        sub->add_option("--fit-tail", fit_tail, "tail fraction for the decay fit");
        handlers[sub] = [&](Run& run) {
            ic.method = parse_method(method);
            const BAProblem prob = build_problem(po);
            const ProbVec q0 = initial_state(po, prob.dim());
            const FixedPointResult fp = ba_fixed_point(prob, q0, 1e-12);
            const Trajectory tr = integrate_flow(prob, q0, ic, fp.converged ? std::optional<ProbVec>(fp.q) : std::nullopt);
            run.table("flow_trajectory", trajectory_table(tr, run));
            json side = trajectory_sidecar(prob, ic, tr);
            side["max_free_energy_increase"] = run.info(tr.max_free_energy_increase);
            side["reference_converged"] = fp.converged;
            if (fp.converged) {
                side["reference"] = to_json(fp.q.values());
                try {
                    side["decay_fit"] = fit_json(fit_decay_rate(tr, fp.q, fit_tail));
                } catch (const std::exception& e) {
                    side["decay_fit"] = e.what();
                }
            }
            run.report("flow", side);
            run.check("free energy is non-increasing", !tr.lyapunov_violation);
        };
    }

    // fixed-point
    double fp_tol = 1e-12;
    long fp_iter = 200000;
    {
        auto* sub = app.add_subcommand("fixed-point", "iterate the BA map to a fixed point");
        add_problem_options(sub, po);
        sub->add_option("--tol", fp_tol)->check(CLI::PositiveNumber);
        sub->add_option("--max-iter", fp_iter)->check(CLI::PositiveNumber);
        handlers[sub] = [&](Run& run) {
            const BAProblem prob = build_problem(po);
            const FixedPointResult fp = ba_fixed_point(prob, initial_state(po, prob.dim()), fp_tol, fp_iter);
            run.report("fixed_point", json{{"q", to_json(fp.q.values())},
                                           {"residual", fp.residual},
                                           {"iterations", fp.iterations},
                                           {"converged", fp.converged},
                                           {"free_energy", run.info(free_energy(prob, fp.q))},
                                           {"entropic_free_energy", run.info(entropic_free_energy(prob, fp.q))}});
            run.check("fixed point converged", fp.converged);
        };
    }

    // dissipation-check
    IntegratorConfig dc;
    dc.dt = 1e-3;
    dc.t_max = 5.0;
    double dc_tol = 1e-5;
    {
        auto* sub = app.add_subcommand("dissipation-check", "compare dF/dt with minus the chi-square dissipation");
        add_problem_options(sub, po);
        sub->add_option("--dt", dc.dt)->check(CLI::PositiveNumber);
        sub->add_option("--t-max", dc.t_max)->check(CLI::PositiveNumber);
        sub->add_option("--tol", dc_tol)->check(CLI::PositiveNumber);
        handlers[sub] = [&](Run& run) {
            const BAProblem prob = build_problem(po);
            const Trajectory tr = integrate_flow(prob, initial_state(po, prob.dim()), dc);
            const DissipationReport d = verify_dissipation(prob, tr);
            Table t{{"t", "abs_err"}, {}};
            for (std::size_t i = 0; i < d.times.size(); ++i) t.rows.push_back({d.times[i], run.info(d.per_sample_err[i])});
            run.table("dissipation_errors", t);
            run.report("dissipation_check", json{{"max_abs_err", run.info(d.max_abs_err)},
                                                 {"tol", run.info(dc_tol)},
                                                 {"samples", d.times.size()},
                                                 {"passed", d.max_abs_err <= dc_tol}});
            run.check("dissipation identity", d.max_abs_err <= dc_tol);
        };
    }

    // spectrum
    std::string jac_method = "fd";
    {
        auto* sub = app.add_subcommand("spectrum", "Gram and Jacobian spectra at the fixed point");
        add_problem_options(sub, po);
        sub->add_option("--tol", fp_tol, "fixed-point tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--jacobian", jac_method)->check(CLI::IsMember({"fd", "analytic"}));
        handlers[sub] = [&](Run& run) {
            const BAProblem prob = build_problem(po);
            const FixedPointResult fp = ba_fixed_point(prob, initial_state(po, prob.dim()), fp_tol, fp_iter);
            if (!fp.converged) throw NumericalError("fixed point did not converge");
            const GramKernel k = gram_kernel(prob, fp.q);
            JacobianSpectrumOptions jo;
            jo.method = jac_method == "fd" ? JacobianMethod::finite_difference : JacobianMethod::analytic;
            const JacobianSpectrum js = jacobian_spectrum(prob, fp.q, jo);
            run.report("spectrum", json{{"q_star", to_json(fp.q.values())},
                                        {"gram", to_json(tangent_spectrum(k))},
                                        {"weighted_gram", to_json(weighted_gram_spectrum(k))},
                                        {"jacobian_relaxation", to_json(js.relaxation)},
                                        {"map_eigenvalues", to_json(js.map_eigenvalues)},
                                        {"asymmetry", js.asymmetry}});
        };
    }

    // fr-compare
    int fr_dirs = 4;
    {
        auto* sub = app.add_subcommand("fr-compare", "Fisher-Rao gradient flow against the BA flow");
        add_problem_options(sub, po);
        sub->add_option("--dirs", fr_dirs, "random tangent directions for the Hessian check")->check(CLI::PositiveNumber);
        handlers[sub] = [&](Run& run) {
            const BAProblem prob = build_problem(po);
            const FixedPointResult fp = ba_fixed_point(prob, initial_state(po, prob.dim()), 1e-13, 2000000);
            if (!fp.converged) throw NumericalError("fixed point did not converge");
            const FrLinearizationReport lin = fr_linearization_check(prob, fp.q);
            const HessianReport h = fr_hessian_check(prob, fp.q, fr_dirs, run.seed());
            run.report("fr_compare", json{{"q_star", to_json(fp.q.values())},
                                          {"beta", lin.beta},
                                          {"linearization_err_vs_inverse_beta", lin.max_abs_err},
                                          {"linearization_err_vs_exact", lin.max_abs_err_exact},
                                          {"difference", to_json(lin.difference)},
                                          {"hessian_max_rel_err", h.max_rel_err},
                                          {"hessian_max_abs_err", h.max_abs_err},
                                          {"hessian_asymmetry", h.max_asymmetry}});
        };
    }

    // gaussian
    GaussianParams gp;
    int n_eig = 8, n_phase = 201, grid_points = 201;
    double s_max = std::nan(""), half_width = 6.0, grid_tmax = 10.0, grid_dt = 0.05, grid_tol = 1e-3;
    double s0 = std::nan(""), mb_a = 1.0;
    std::vector<double> sigma_p, a_mat;
    std::string shape = "gaussian";
    {
        auto* gsub = app.add_subcommand("gaussian", "scalar Gaussian source under squared error");
        gsub->require_subcommand(1);
        auto gauss_opts = [&](CLI::App* s) {
            s->add_option("--sigma2", gp.sigma2, "source variance");
            s->add_option("--beta", gp.beta, "inverse temperature");
        };

        auto* ph = gsub->add_subcommand("phase", "variance field on [0, s_max]");
        gauss_opts(ph);
        ph->add_option("--s-max", s_max, "upper end (default 2 sigma2)");
        ph->add_option("--n", n_phase)->check(CLI::Range(2, 1000000));
        handlers[ph] = [&](Run& run) {
            const double top = std::isnan(s_max) ? 2.0 * gp.sigma2 : s_max;
            Table t{{"s", "s_tilde", "field"}, {}};
            for (const PhasePoint& p : phase_portrait(gp, top, n_phase)) t.rows.push_back({p.s, p.field + p.s, p.field});
            run.table("gaussian_phase", t);
            run.report("gaussian_phase_summary",
                       json{{"s_star", gp.degenerate() ? 0.0 : gp.s_star()}, {"degenerate", gp.degenerate()}});
        };

        auto* sp = gsub->add_subcommand("spectrum", "Hermite spectrum at the Gaussian fixed point");
        gauss_opts(sp);
        sp->add_option("--n", n_eig)->check(CLI::Range(1, 10000));
        handlers[sp] = [&](Run& run) {
            const HermiteSpectrum h = hermite_spectrum(gp, n_eig);
            const GaussianGap gg = gaussian_gap(gp);
            run.report("gaussian_spectrum", json{{"alpha", h.alpha},
                                                 {"eigenvalues", to_json(h.eigenvalues)},
                                                 {"relaxation", to_json(h.relaxation)},
                                                 {"kernel_variance", h.kernel_variance},
                                                 {"lambda_star", gg.lambda_star},
                                                 {"tau_relax", gg.tau_relax}});
        };

        auto* gc = gsub->add_subcommand("grid-check", "discretized flow against the variance ODE");
        gauss_opts(gc);
        gc->add_option("--points", grid_points)->check(CLI::Range(11, 5001));
        gc->add_option("--half-width", half_width, "grid half width in source standard deviations");
        gc->add_option("--t-max", grid_tmax)->check(CLI::PositiveNumber);
        gc->add_option("--dt", grid_dt)->check(CLI::PositiveNumber);
        gc->add_option("--s0", s0, "initial second moment (default sigma2)");
        gc->add_option("--shape", shape)->check(CLI::IsMember({"gaussian", "bimodal", "uniform"}));
        gc->add_option("--tol", grid_tol, "max second-moment error for a Gaussian start");
        handlers[gc] = [&](Run& run) {
            const GaussianGrid grid = discretize_gaussian(gp, half_width, grid_points);
            const GridShape gs = shape == "gaussian" ? GridShape::gaussian
                                 : shape == "bimodal" ? GridShape::bimodal
                                                      : GridShape::uniform;
            const ProbVec q0 = grid_initial_state(grid, gs, std::isnan(s0) ? gp.sigma2 : s0);
            const Trajectory tr = integrate_flow(grid.problem, q0, grid_integrator_config(grid_tmax, grid_dt));
            const ScalarSeries ode = integrate_variance_ode(gp, grid_second_moment(grid, q0), grid_dt, grid_tmax);
            Table t{{"t", "grid_second_moment", "grid_mean", "ode_second_moment", "abs_err"}, {}};
            double max_err = 0.0;
            for (std::size_t k = 0; k < std::min(tr.size(), ode.s.size()); ++k) {
                const double m2 = grid_second_moment(grid, tr.states[k]);
                const double err = std::abs(m2 - ode.s[k]);
                max_err = std::max(max_err, err);
                t.rows.push_back({tr.times[k], m2, grid_mean(grid, tr.states[k]), ode.s[k], err});
            }
            run.table("gaussian_grid", t);
            const FixedPointResult fp = gaussian_grid_fixed_point(grid, gp);
            const double m_star = grid_second_moment(grid, fp.q);
            run.report("gaussian_grid_check", json{{"shape", shape},
                                                   {"max_abs_err", max_err},
                                                   {"tol", grid_tol},
                                                   {"fixed_point_converged", fp.converged},
                                                   {"fixed_point_second_moment", m_star},
                                                   {"s_star", gp.degenerate() ? 0.0 : gp.s_star()}});
            if (gs == GridShape::gaussian) run.check("grid second moment tracks the ODE", max_err <= grid_tol);
        };

        auto* mb = gsub->add_subcommand("moment-bound", "second-moment bound constants");
        gauss_opts(mb);
        mb->add_option("--a", mb_a, "distortion weight (scalar case)");
        mb->add_option("--sigma-p", sigma_p, "source covariance, row-major (matrix case)");
        mb->add_option("--a-matrix", a_mat, "distortion weight matrix, row-major (matrix case)");
        mb->add_option("--v0", s0, "initial second moment");
        handlers[mb] = [&](Run& run) {
            MomentBound b;
            if (sigma_p.empty()) {
                b = moment_bound_constants(gp.sigma2, mb_a, gp.beta);
            } else {
                const Index d = Index(std::lround(std::sqrt(double(sigma_p.size()))));
                require(d * d == Index(sigma_p.size()), "--sigma-p must have d*d entries");
                require(a_mat.size() == sigma_p.size(), "--a-matrix must match --sigma-p in size");
                const Mat sp_m = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(sigma_p.data(), d, d);
                const Mat a_m = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(a_mat.data(), d, d);
                b = moment_bound_constants(sp_m, a_m, gp.beta);
            }
            json j{{"c1", b.c1}, {"c2", b.c2}, {"c", b.c}, {"level", b.level()}};
            if (!std::isnan(s0)) j["bound"] = b.bound(s0);
            run.report("moment_bound", j);
        };
    }

    // model
    std::vector<double> alphas = linspace(0.1, 0.9, 9), beta_ds = linspace(0.5, 4.0, 8);
    int jobs = 1;
    ThreeClusterSpec tc;
    std::vector<double> tc_weights;
    IntegratorConfig ts;
    ts.t_max = 25.0;
    {
        auto* msub = app.add_subcommand("model", "worked examples");
        msub->require_subcommand(1);

        auto* tp = msub->add_subcommand("two-point", "two-point gap surface");
        tp->add_option("--alphas", alphas);
        tp->add_option("--beta-ds", beta_ds);
        tp->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 256));
        handlers[tp] = [&](Run& run) {
            Table t{{"alpha", "beta_d", "interior", "theta", "lambda_pipeline", "lambda_closed_form", "relaxation_rate"},
                    {}};
            for (const TwoPointGapRow& r : two_point_gap_surface(alphas, beta_ds, jobs))
                t.rows.push_back({r.alpha, r.beta_d, r.interior ? 1.0 : 0.0, r.theta, r.lambda_pipeline,
                                  r.lambda_closed_form, r.relaxation_rate});
            run.table("two_point_gap_surface", t);
            run.report("two_point_summary", json{{"rows", t.rows.size()}, {"symmetric_gap_at_beta_d_2", two_point_symmetric_gap(2.0)}});
        };

        auto cluster_opts = [&](CLI::App* s) {
            s->add_option("--m", tc.m)->check(CLI::Range(3, 1000));
            s->add_option("--delta", tc.delta);
            s->add_option("--beta", tc.beta);
            s->add_option("--weights", tc_weights);
        };

        auto* tcs = msub->add_subcommand("three-cluster", "reduced Gram spectrum of the three-cluster model");
        cluster_opts(tcs);
        handlers[tcs] = [&](Run& run) {
            tc = cluster_spec(tc.m, tc.delta, tc.beta, tc_weights);
            const FixedPointResult fp = ba_fixed_point(three_cluster_problem(tc), ProbVec::uniform(3 * tc.m), 1e-13);
            if (!fp.converged) throw NumericalError("fixed point did not converge");
            const ThreeClusterReduced r = three_cluster_reduced(tc, fp.q);
            run.report("three_cluster", json{{"masses", to_json(cluster_masses(tc, fp.q))},
                                             {"reduced_gram", to_json(r.reduced_gram)},
                                             {"reduced_gap_mass", r.reduced_gap_mass},
                                             {"reduced_gap_perentry", r.reduced_gap_perentry},
                                             {"zero_modes", r.zero_modes},
                                             {"mass_relaxation_fd", to_json(r.mass_relaxation_fd)},
                                             {"mass_relaxation_gram", to_json(r.mass_relaxation_gram)}});
        };

        auto* tsc = msub->add_subcommand("two-scale", "two-scale relaxation run");
        cluster_opts(tsc);
        tsc->add_option("--t-max", ts.t_max)->check(CLI::PositiveNumber);
        tsc->add_option("--dt", ts.dt)->check(CLI::PositiveNumber);
        tsc->add_option("--fit-tail", fit_tail);
        handlers[tsc] = [&](Run& run) {
            tc = cluster_spec(tc.m, tc.delta, tc.beta, tc_weights);
            const TwoScaleResult r = two_scale_experiment(tc, uniform_perturbed(3 * tc.m), ts, fit_tail);
            Table t{{"t", "dist_l1", "free_energy"}, {}};
            for (std::size_t k = 0; k < r.trajectory.size(); ++k)
                t.rows.push_back({r.trajectory.times[k], r.distance[k], run.info(r.trajectory.free_energy[k])});
            run.table("two_scale", t);
            run.report("two_scale_summary", json{{"degenerate", r.degenerate},
                                                 {"has_plateau", r.has_plateau},
                                                 {"t_plateau_end", r.t_plateau_end},
                                                 {"fit", fit_json(r.fit)},
                                                 {"lambda_star", r.lambda_star},
                                                 {"lambda_star_mass", r.lambda_star_mass},
                                                 {"lambda_star_perentry", r.lambda_star_perentry},
                                                 {"bound_rate", r.bound_rate},
                                                 {"fd_min_rate", r.fd_min_rate}});
        };
    }

    // mimo
    MimoSpec ms{{1.0, 0.5}, 3.0, 1.0};
    int p_points = 50;
    double p_max = std::nan("");
    {
        auto* sub = app.add_subcommand("mimo", "water-filling allocation and per-direction gaps");
        sub->add_option("--gains", ms.channel_gains);
        sub->add_option("--power", ms.total_power);
        sub->add_option("--beta", ms.beta);
        sub->add_option("--p-max", p_max, "sweep upper end (default 2 x power)");
        sub->add_option("--p-points", p_points)->check(CLI::Range(1, 100000));
        handlers[sub] = [&](Run& run) {
            const WaterFilling w = water_filling(ms);
            const DirectionGaps cap = mimo_direction_gaps(ms, w.powers, MimoGapVariant::caption);
            const DirectionGaps txt = mimo_direction_gaps(ms, w.powers, MimoGapVariant::text);
            const std::size_t n = ms.channel_gains.size();
            Table t{{"P", "level", "active"}, {}};
            for (std::size_t i = 0; i < n; ++i)
                for (const char* c : {"power_", "gap_caption_", "gap_text_"}) t.header.push_back(c + std::to_string(i));
            for (const char* c : {"system_gap_caption", "system_gap_text", "stiffness_caption", "stiffness_text"})
                t.header.push_back(c);
            const double top = std::isnan(p_max) ? 2.0 * ms.total_power : p_max;
            for (int k = 1; k <= p_points; ++k) {
                MimoSpec s = ms;
                s.total_power = top * double(k) / double(p_points);
                const WaterFilling wk = water_filling(s);
                const DirectionGaps a = mimo_direction_gaps(s, wk.powers), b =
                    mimo_direction_gaps(s, wk.powers, MimoGapVariant::text);
                std::vector<double> r{s.total_power, wk.level, double(wk.active)};
                for (std::size_t i = 0; i < n; ++i) {
                    r.push_back(wk.powers[i]);
                    r.push_back(a.per_direction[i]);
                    r.push_back(b.per_direction[i]);
                }
                for (double v : {a.system_gap, b.system_gap, a.stiffness_ratio, b.stiffness_ratio}) r.push_back(v);
                t.rows.push_back(std::move(r));
            }
            run.table("mimo_sweep", t);
            run.report("mimo", json{{"powers", w.powers},
                                    {"level", w.level},
                                    {"active", w.active},
                                    {"gaps_caption", cap.per_direction},
                                    {"gaps_text", txt.per_direction},
                                    {"system_gap_caption", cap.system_gap},
                                    {"system_gap_text", txt.system_gap},
                                    {"stiffness_caption", cap.stiffness_ratio},
                                    {"stiffness_text", txt.stiffness_ratio}});
        };
    }

    // wz
    WynerZivSpec wz{1.0, 0.0, 2.0};
    std::vector<double> rhos{0.0, 0.3, 0.6, 0.9};
    int wz_points = 200;
    {
        auto* sub = app.add_subcommand("wz", "side-information extension (interpreted dynamics)");
        sub->add_option("--sigma2", wz.sigma2);
        sub->add_option("--beta", wz.beta);
        sub->add_option("--rhos", rhos, "correlations for the phase portraits");
        sub->add_option("--points", wz_points)->check(CLI::Range(2, 100000));
        handlers[sub] = [&](Run& run) {
            Table ratio{{"rho", "fixed_point", "beta_eff_over_beta", "rate_gap"}, {}};
            for (int k = 0; k < 20; ++k) {
                const WynerZivSpec s{wz.sigma2, 0.05 * k, wz.beta};
                const double fp = wz_fixed_point(s);
                ratio.rows.push_back({s.rho, fp, wz_effective_beta(s, fp) / s.beta, run.info(wz_rate_gap(s.rho))});
            }
            run.table("wz_beta_ratio", ratio);

            Table rate{{"rho", "rate_gap"}, {}};
            for (double r : linspace(-0.99, 0.99, 199)) rate.rows.push_back({r, run.info(wz_rate_gap(r))});
            run.table("wz_rate_gap", rate);

            Table phase{{"rho", "s", "beta_eff", "field"}, {}};
            json per_rho = json::array();
            for (double r : rhos) {
                const WynerZivSpec s{wz.sigma2, r, wz.beta};
                const double top = r == 0.0 ? 2.0 * s.sigma2 : std::min(2.0 * s.sigma2, 0.999 * s.sigma2 / (r * r));
                for (double v : linspace(0.0, top, wz_points))
                    phase.rows.push_back({r, v, wz_effective_beta(s, v), wz_field(s, v)});
                per_rho.push_back({{"rho", r}, {"fixed_point", wz_fixed_point(s)}, {"rate_gap", run.info(wz_rate_gap(r))}});
            }
            run.table("wz_phase", phase);
            run.report("wz", json{{"dynamics", "interpreted"},
                                  {"field", "s_tilde(s; sigma2, beta_eff(s)) - s"},
                                  {"per_rho", per_rho}});
        };
    }

    // verify-all
    std::vector<int> only;
    {
        auto* sub = app.add_subcommand("verify-all", "run the acceptance suite");
        sub->add_option("--only", only, "criterion ids")->check(CLI::Range(1, acceptance::kCriteria));
        handlers[sub] = [&](Run& run) {
            std::vector<int> ids = only;
            if (ids.empty())
                for (int i = 1; i <= acceptance::kCriteria; ++i) ids.push_back(i);
            json all = json::array();
            acceptance::Options opt;
            opt.seed = run.seed();
            for (int id : ids) {
                const acceptance::CriterionResult r = acceptance::run_criterion(id, opt);
                std::cout << acceptance::summary_line(r) << "\n";
                for (const auto& c : r.checks)
                    std::cout << "    " << (c.passed ? "ok  " : "FAIL") << " " << c.name << ": " << c.detail << "\n";
                all.push_back(acceptance::to_json(r));
                run.check("criterion " + std::to_string(id), r.passed());
            }
            run.emit("verify_all.json", all.dump(2) + "\n");
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    std::vector<CLI::App*> chain{&app};
    while (!chain.back()->get_subcommands().empty()) chain.push_back(chain.back()->get_subcommands().front());
    std::string command;
    for (std::size_t i = 1; i < chain.size(); ++i) command += (i > 1 ? " " : "") + chain[i]->get_name();

    try {
        if (!g.config.empty()) apply_config(chain, g.config);
        auto it = handlers.find(chain.back());
        if (it == handlers.end()) throw ValidationError("no command given");
        Run run(command, g, collect_inputs(chain));
        it->second(run);
        return run.finish();
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
