// faber-relu: sparse-grid Faber interpolation and its ReLU network compiler.

#include "fabernet/constructors.hpp"
#include "fabernet/corpus.hpp"
#include "fabernet/error.hpp"
#include "fabernet/faber.hpp"
#include "fabernet/index.hpp"
#include "fabernet/metrics.hpp"
#include "fabernet/network_io.hpp"
#include "fabernet/sampling.hpp"
#include "fabernet/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

using namespace fabernet;

namespace {

constexpr int exit_fail = 1;
constexpr int exit_param = 2;

std::string num(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Accepts "inf" as well as ordinary numbers.
double parse_p(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "Inf")
        return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || used == 0)
        throw InvalidParameter("cannot parse p value '" + text + "'");
    return v;
}

std::vector<double> parse_ps(const std::vector<std::string>& texts) {
    std::vector<double> out;
    for (const auto& t : texts)
        out.push_back(parse_p(t));
    return out;
}

std::ofstream open_out(const std::string& path) {
    if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

IndexSet make_set(const std::string& kind, int d, double beta, int m) {
    switch (parse_index_set_kind(kind)) {
    case IndexSetKind::notched:
        return enumerate_notched(d, beta, m);
    case IndexSetKind::smolyak:
        return enumerate_smolyak(d, m);
    case IndexSetKind::full:
        return enumerate_full(d, m);
    }
    throw InvalidParameter("unknown index set kind '" + kind + "'");
}

// "func:<id>", "expansion:<file>" or "net:<file>".
DiffFunction load_operand(const std::string& spec, int d, double alpha, int& dim_out) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InvalidParameter("operand '" + spec + "' must be func:<id>, expansion:<file> or net:<file>");
    const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
    DiffFunction g;
    if (kind == "func") {
        if (d <= 0)
            throw InvalidParameter("func operands need --dim");
        g = make_corpus(arg, d, alpha).diff();
    } else if (kind == "expansion") {
        std::ifstream in(arg);
        if (!in)
            throw std::runtime_error("cannot read expansion file '" + arg + "'");
        g = from_expansion(std::make_shared<const FaberExpansion>(read_expansion(in)));
    } else if (kind == "net") {
        g = from_network(std::make_shared<const ReluNetwork>(load_network(arg)));
    } else {
        throw InvalidParameter("unknown operand kind '" + kind + "'");
    }
    dim_out = g.dim;
    return g;
}

struct GridOpts {
    int dim = 2;
    double beta = 2.0;
    int m = 3;
    std::string kind = "notched";
    std::string out;
    bool points = false;
};

int run_grid(const GridOpts& o) {
    const auto set = make_set(o.kind, o.dim, o.beta, o.m);
    std::ostringstream text;
    if (o.points)
        write_grid(text, grid_points(set));
    else
        write_index_set(text, set);
    if (o.out.empty()) {
        std::cout << text.str();
    } else {
        auto f = open_out(o.out);
        f << text.str();
        std::cout << "indices=" << set.entries.size() << " grid=" << grid_size(set) << " D=" << cardinality_D(set) << '\n';
    }
    return 0;
}

struct SampleOpts {
    std::string func = "poly_tent";
    int dim = 2;
    double alpha = 2.0;
    double beta = 3.0;
    std::string p = "2";
    int m = 4;
    std::string kind = "notched";
    double prune_tol = 0.0;
    std::string out;
};

int run_sample(const SampleOpts& o) {
    const ApproxConfig cfg{o.dim, o.alpha, o.beta, parse_p(o.p), std::nullopt};
    cfg.validate();
    if (o.m < 0)
        throw InvalidParameter("m must be >= 0");
    const auto f = make_corpus(o.func, o.dim, o.alpha);
    const auto set = make_set(o.kind, o.dim, o.beta, o.m);
    auto R = build_R(f.oracle(), set);
    if (o.prune_tol > 0.0) {
        FaberExpansion kept(o.dim);
        for (const auto& t : R.terms())
            if (std::abs(t.coefficient) >= o.prune_tol)
                kept.set(t.index, t.coefficient);
        R = std::move(kept);
    }
    if (!o.out.empty()) {
        auto file = open_out(o.out);
        write_expansion(file, R);
    }
    std::cout << "terms=" << R.size() << " grid=" << grid_size(set) << " bound=" << num(theorem31_bound(cfg, o.m))
              << '\n';
    return 0;
}

struct CompileOpts {
    std::string func = "poly_tent";
    int dim = 2;
    double alpha = 2.0;
    double beta = 3.0;
    std::string p = "2";
    double eps = 0.1;
    bool narrow = false;
    std::string out;
};

int run_compile(const CompileOpts& o) {
    const ApproxConfig cfg{o.dim, o.alpha, o.beta, parse_p(o.p), o.eps};
    cfg.validate();
    const auto f = make_corpus(o.func, o.dim, o.alpha);
    const auto c = o.narrow ? compile_narrow(f.oracle(), cfg) : compile(f.oracle(), cfg);
    if (!o.out.empty())
        save_network(o.out, c.net);
    const auto st = c.net.stats();
    std::cout << "m=" << c.plan.m << " delta=" << num(c.plan.delta) << " terms=" << c.terms << " W=" << st.W
              << " L=" << st.L << " Nw=" << st.N_w << " eps0=" << num(c.plan.eps0) << " B=" << num(c.plan.B) << '\n';
    return 0;
}

struct MeasureOpts {
    std::string lhs;
    std::string rhs;
    std::string p = "2";
    std::string scheme = "mc";
    int n = 64;
    std::size_t N = 1'000'000;
    std::uint64_t seed = 42;
    int dim = 0;
    double alpha = 2.0;
    bool header = false;
};

int run_measure(const MeasureOpts& o) {
    const double p = parse_p(o.p);
    if (!(p >= 1.0))
        throw InvalidParameter("p must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    int dl = 0, dr = 0;
    const auto g1 = load_operand(o.lhs, o.dim, o.alpha, dl);
    const auto g2 = load_operand(o.rhs, o.dim > 0 ? o.dim : dl, o.alpha, dr);
    if (dl != dr)
        throw InvalidParameter("operand dimensions differ (" + std::to_string(dl) + " vs " + std::to_string(dr) + ")");
    const QuadratureSpec q = parse_scheme(o.scheme) == Scheme::tensor_midpoint ? QuadratureSpec::tensor(o.n)
                                                                               : QuadratureSpec::monte_carlo(o.N, o.seed);
    const auto est = w1p_estimate(g1, g2, q, p);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (o.header)
        std::cout << "lhs,rhs,p,scheme,value,std_error,runtime_ms\n";
    std::cout << o.lhs << ',' << o.rhs << ',' << num(p) << ',' << to_string(q.scheme) << ',' << num(est.value) << ','
              << num(est.std_error) << ',' << num(std::round(ms * 1000.0) / 1000.0) << '\n';
    return 0;
}

int run_corpus_list() {
    std::cout << "id,d_range,alpha_range,certified,note\n";
    for (const auto& c : corpus_list()) {
        const std::string dr = std::to_string(c.d_min) + ".." + (c.d_max == 0 ? std::string("*") : std::to_string(c.d_max));
        std::ostringstream ar;
        ar << (c.alpha_lo <= 1.0 ? "(" : "[") << c.alpha_lo << "," << c.alpha_hi << "]";
        std::cout << c.id << ',' << dr << ',' << ar.str() << ',' << (c.certified ? "yes" : "no") << ",\"" << c.note
                  << "\"\n";
    }
    return 0;
}

struct ExperimentOpts {
    ExperimentConfig cfg;
    std::vector<std::string> ps{"1", "2", "inf"};
    std::vector<std::string> compile_ps{"2"};
    std::string out = "sweep.csv";
    bool no_measure = false;

    ExperimentConfig resolved() const {
        auto c = cfg;
        c.ps = parse_ps(ps);
        c.compile_ps = parse_ps(compile_ps);
        return c;
    }
};

void add_experiment_flags(CLI::App* app, ExperimentOpts& o) {
    auto& c = o.cfg;
    app->add_option("--dims", c.dims, "sampling dimensions")->delimiter(',');
    app->add_option("--alphas", c.alphas, "smoothness values")->delimiter(',');
    app->add_option("--betas", c.betas, "notch parameters (default alpha + 1)")->delimiter(',');
    app->add_option("--ps", o.ps, "norm exponents (inf allowed)")->delimiter(',');
    app->add_option("--ms", c.ms, "sampling levels")->delimiter(',');
    app->add_option("--corpus", c.corpus, "corpus ids for the sampling bound")->delimiter(',');
    app->add_option("--rate-function", c.rate_function, "corpus id used for the rate fit when alpha < 2");
    app->add_option("--rate-function-alpha2", c.rate_function_alpha2, "corpus id used for the rate fit at alpha = 2");
    app->add_option("--compile-dims", c.compile_dims, "compiler dimensions")->delimiter(',');
    app->add_option("--compile-alphas", c.compile_alphas, "compiler smoothness values")->delimiter(',');
    app->add_option("--compile-betas", c.compile_betas, "compiler notch parameters")->delimiter(',');
    app->add_option("--compile-ps", o.compile_ps, "compiler norm exponents")->delimiter(',');
    app->add_option("--compile-function", c.compile_function, "corpus id compiled");
    app->add_option("--eps", c.eps, "accuracies for the end-to-end check")->delimiter(',');
    app->add_option("--sweep-eps", c.sweep_eps, "accuracies for the scaling sweep")->delimiter(',');
    app->add_option("--narrow-dims", c.narrow_dims, "dimensions for the narrow layout check")->delimiter(',');
    app->add_option("--mc-samples", c.mc_samples, "Monte Carlo samples");
    app->add_option("--seed", c.seed, "random seed");
}

int run_verify(const ExperimentOpts& o) {
    const auto cfg = o.resolved();
    const auto report = verify_all(cfg, &std::cout);
    std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "verify.csv").string() << '\n';
    return report.exit_code();
}

int run_sweep(const ExperimentOpts& o) {
    const auto cfg = o.resolved();
    const auto result = report_sweep(cfg, !o.no_measure);
    auto file = open_out(o.out);
    write_sweep_csv(file, result);
    std::cout << "rows=" << result.rows.size() << " K2=" << num(result.K2) << " K3=" << num(result.K3) << '\n';
    for (const auto& r : result.rows)
        if (!r.skipped && !std::isnan(r.err_w1p) && r.err_w1p > r.eps)
            return exit_fail;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-grid Faber interpolation compiled into deep ReLU networks"};
    app.require_subcommand(1);

    GridOpts grid;
    auto* g = app.add_subcommand("grid", "enumerate an index set or its sparse grid");
    g->add_option("--dim", grid.dim)->check(CLI::PositiveNumber);
    g->add_option("--beta", grid.beta);
    g->add_option("--m", grid.m);
    g->add_option("--kind", grid.kind)->check(CLI::IsMember({"notched", "smolyak", "full"}));
    g->add_option("--out", grid.out);
    g->add_flag("--points", grid.points, "write grid points instead of levels");

    SampleOpts sample;
    auto* s = app.add_subcommand("sample", "build R_beta(m, f) and write its expansion");
    s->add_option("--func", sample.func);
    s->add_option("--dim", sample.dim);
    s->add_option("--alpha", sample.alpha);
    s->add_option("--beta", sample.beta);
    s->add_option("--p", sample.p);
    s->add_option("--m", sample.m);
    s->add_option("--kind", sample.kind)->check(CLI::IsMember({"notched", "smolyak", "full"}));
    s->add_option("--prune-tol", sample.prune_tol, "drop coefficients smaller in magnitude");
    s->add_option("--out", sample.out);

    CompileOpts comp;
    auto* c = app.add_subcommand("compile", "compile a corpus function into a ReLU network");
    c->add_option("--func", comp.func);
    c->add_option("--dim", comp.dim);
    c->add_option("--alpha", comp.alpha);
    c->add_option("--beta", comp.beta);
    c->add_option("--p", comp.p);
    c->add_option("--eps", comp.eps);
    c->add_flag("--narrow", comp.narrow, "chain hats through source and collation rows");
    c->add_option("--out", comp.out);

    MeasureOpts meas;
    auto* m = app.add_subcommand("measure", "W^1_p seminorm distance between two operands");
    m->add_option("--lhs", meas.lhs)->required();
    m->add_option("--rhs", meas.rhs)->required();
    m->add_option("--p", meas.p);
    m->add_option("--scheme", meas.scheme);
    m->add_option("--n", meas.n, "tensor nodes per axis");
    m->add_option("--N", meas.N, "Monte Carlo samples");
    m->add_option("--seed", meas.seed);
    m->add_option("--dim", meas.dim, "dimension for func operands");
    m->add_option("--alpha", meas.alpha, "smoothness for func operands");
    m->add_flag("--header", meas.header, "print the CSV header first");

    auto* corpus = app.add_subcommand("corpus", "test function registry");
    corpus->require_subcommand(1);
    auto* list = corpus->add_subcommand("list", "list registered functions");

    ExperimentOpts ver;
    auto* v = app.add_subcommand("verify", "run the acceptance suite");
    add_experiment_flags(v, ver);
    v->add_option("--criteria", ver.cfg.criteria, "criterion ids")->delimiter(',');
    v->add_option("--out-dir", ver.cfg.out_dir, "directory for verify.csv");

    ExperimentOpts sw;
    auto* w = app.add_subcommand("sweep", "compile over an eps sweep and write per-cell statistics");
    add_experiment_flags(w, sw);
    w->add_option("--out", sw.out, "CSV path");
    w->add_flag("--no-measure", sw.no_measure, "skip the error measurement");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_param;
    }

    try {
        if (*g)
            return run_grid(grid);
        if (*s)
            return run_sample(sample);
        if (*c)
            return run_compile(comp);
        if (*m)
            return run_measure(meas);
        if (*list)
            return run_corpus_list();
        if (*v)
            return run_verify(ver);
        if (*w)
            return run_sweep(sw);
    } catch (const EpsilonTooLarge& e) {
        std::cerr << "error: " << e.what() << " (eps0=" << num(e.eps0()) << ")\n";
        return exit_param;
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_param;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_fail;
    }
    return exit_param;
}
