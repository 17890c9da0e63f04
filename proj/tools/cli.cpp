#include "cli.hpp"

#include "tvcycles/cone.hpp"
#include "tvcycles/errors.hpp"
#include "tvcycles/flow.hpp"
#include "tvcycles/form_io.hpp"
#include "tvcycles/hodge.hpp"
#include "tvcycles/tvprox.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace tvcycles::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string number(double v)
{
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) parts.push_back(item);
    return parts;
}

std::vector<int> parse_dims(const std::string& text)
{
    std::vector<int> dims;
    for (const std::string& part : split(text, 'x')) {
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size()) throw UsageError("bad --grid '" + text + "', expected e.g. 64 or 8x8x8x8");
        dims.push_back(value);
    }
    if (dims.empty()) throw UsageError("--grid is empty");
    return dims;
}

std::vector<double> parse_lengths(const std::string& text, std::size_t n)
{
    if (text.empty()) return std::vector<double>(n, 1.0);
    std::vector<double> lengths;
    for (const std::string& part : split(text, 'x')) {
        std::size_t used = 0;
        double value = 0;
        try {
            value = std::stod(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size()) throw UsageError("bad --lengths '" + text + "'");
        lengths.push_back(value);
    }
    if (lengths.size() == 1 && n > 1) lengths.assign(n, lengths.front());
    if (lengths.size() != n) throw UsageError("--lengths needs one value per axis");
    return lengths;
}

// Sum of a few low Fourier modes per component.
DiscreteForm smooth_random(const GridPtr& grid, int degree, std::mt19937_64& rng)
{
    struct Mode {
        std::vector<int> wave;
        double amplitude;
        double phase;
    };
    const int n = grid->dim();
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> wave(-2, 2);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<std::vector<Mode>> modes(binomial(n, degree));
    for (auto& list : modes) {
        for (int m = 0; m < 3; ++m) {
            Mode mode{std::vector<int>(n), gauss(rng), phase(rng)};
            for (int& k : mode.wave) k = wave(rng);
            list.push_back(std::move(mode));
        }
    }
    const auto lengths = grid->lengths();
    return DiscreteForm::sample(grid, degree, [&](std::span<const double> x, AxisMask axes) {
        double value = 0.0;
        for (const Mode& mode : modes[basis_position(n, axes)]) {
            double arg = mode.phase;
            for (int a = 0; a < n; ++a) arg += 2.0 * std::numbers::pi * mode.wave[a] * x[a] / lengths[a];
            value += mode.amplitude * std::cos(arg);
        }
        return value;
    });
}

DiscreteForm white_random(const GridPtr& grid, int degree, std::mt19937_64& rng)
{
    DiscreteForm out(grid, degree);
    std::normal_distribution<double> gauss;
    for (Eigen::Index i = 0; i < out.values().size(); ++i) out.values()[i] = gauss(rng);
    return out;
}

KVector random_constant(int n, int degree, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss;
    KVector v(n, degree);
    for (double& c : v.coeffs()) c = gauss(rng);
    return v;
}

fs::path companion_path(const fs::path& out, const std::string& tag)
{
    fs::path p = out;
    p.replace_extension();
    p += "." + tag + ".json";
    return p;
}

struct Globals {
    std::uint64_t seed = 1;
    bool json = false;
    std::string trace;
};

struct GenArgs {
    std::string grid;
    std::string lengths;
    int degree = -1;
    std::string preset;
    std::string calibration;
    double noise = 0.1;
    std::string out;
};

struct FlowArgs {
    std::string in;
    std::string out;
    FlowConfig cfg;
    std::vector<std::string> companions;  // probes for denoise, witnesses for calibrate
    std::string calibration;
    long steps = 0;  // > 0: step budget that is not a failure when reached
};

struct HodgeArgs {
    std::string in;
    std::string out_prefix;
    double cg_tol = 1e-10;
};

struct NormArgs {
    int n = 0;
    int k = -1;
    std::string expr;
};

struct EnergyArgs {
    std::string in;
    int restarts = 4;
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int gen(const Globals& g, const GenArgs& a);
    int denoise(const Globals& g, const FlowArgs& a);
    int calibrate(const Globals& g, const FlowArgs& a);
    int hodge(const Globals& g, const HodgeArgs& a);
    int norms(const Globals& g, const NormArgs& a);
    int energy(const Globals& g, const EnergyArgs& a);

private:
    void emit(const Globals& g, const json& report)
    {
        if (g.json) {
            out_ << report.dump(2) << '\n';
            return;
        }
        for (const auto& [key, value] : report.items()) {
            out_ << key << ' ';
            if (value.is_number()) {
                out_ << number(value.get<double>());
            } else if (value.is_string()) {
                out_ << value.get<std::string>();
            } else {
                out_ << value.dump();
            }
            out_ << '\n';
        }
    }

    int finish_flow(const Globals& g, const FlowArgs& a, const FlowResult& result, json report);

    std::ostream& out_;
    std::ostream& err_;
};

int Runner::gen(const Globals& g, const GenArgs& a)
{
    const std::vector<int> dims = parse_dims(a.grid);
    GridPtr grid;
    try {
        grid = make_grid(dims, parse_lengths(a.lengths, dims.size()));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const int n = grid->dim();
    std::mt19937_64 rng(g.seed);
    json report;
    report["preset"] = a.preset;

    std::optional<DiscreteForm> form;
    if (a.preset == "calibrated-random") {
        if (a.calibration.empty()) throw UsageError("calibrated-random needs --calibration");
        const ConeSpec spec = make_cone(make_calibration(a.calibration, n));
        if (a.degree >= 0 && a.degree != spec.degree()) {
            throw UsageError("--degree must be n - k = " + std::to_string(spec.degree()) + " for this calibration");
        }
        form = sample_calibrated(spec, grid, g.seed);
        report["calibration"] = a.calibration;
        report["cone_residual"] = cone_residual(spec, *form).max_site_distance;
    } else {
        const int p = a.degree < 0 ? 0 : a.degree;
        if (p >= n) throw UsageError("--degree must be below the grid dimension for this preset");
        if (a.preset == "step") {
            form = DiscreteForm::sample(grid, p, [&](std::span<const double> x, AxisMask axes) {
                return axes == basis_masks(n, p)[0] && x[0] >= 0.5 * grid->lengths()[0] ? 1.0 : 0.0;
            });
        } else if (a.preset == "noisy-closed") {
            DiscreteForm closed = DiscreteForm::constant(grid, random_constant(n, p, rng));
            if (p > 0) closed += exterior_derivative(smooth_random(grid, p - 1, rng));
            DiscreteForm noise = codifferential(white_random(grid, p + 1, rng));
            const double rms = noise.values().norm() / std::sqrt(static_cast<double>(noise.values().size()));
            if (rms > 0) noise *= a.noise / rms;
            form = closed + noise;
            write_form(companion_path(a.out, "closed"), closed);
            write_form(companion_path(a.out, "noise"), noise);
            report["closed"] = companion_path(a.out, "closed").string();
            report["noise"] = companion_path(a.out, "noise").string();
        } else if (a.preset == "harmonic-plus-coexact") {
            DiscreteForm harmonic = DiscreteForm::constant(grid, random_constant(n, p, rng));
            form = harmonic + codifferential(smooth_random(grid, p + 1, rng));
        } else {
            throw UsageError("unknown preset '" + a.preset + "'");
        }
    }
    write_form(a.out, *form);
    report["out"] = a.out;
    report["degree"] = form->degree();
    if (form->degree() < n) report["tv_energy"] = tv_energy(*form);
    emit(g, report);
    return kSuccess;
}


FlowConfig flow_config(const FlowArgs& a)
{
    FlowConfig cfg = a.cfg;
    if (a.steps > 0) cfg.outer_max_iters = a.steps;
    return cfg;
}

void write_trace(const Globals& g, const FlowTrace& trace)
{
    if (g.trace.empty()) return;
    std::ofstream file(g.trace);
    if (!file) throw UsageError("cannot write trace file " + g.trace);
    trace.write_csv(file);
}

int Runner::finish_flow(const Globals& g, const FlowArgs& a, const FlowResult& result, json report)
{
    write_form(a.out, result.omega_inf);
    write_trace(g, result.trace);
    const FlowRecord& first = result.trace.records.front();
    const FlowRecord& last = result.trace.records.back();
    report["termination"] = std::string(to_string(result.termination));
    report["steps"] = static_cast<long>(result.trace.records.size()) - 1;
    report["tv_energy_initial"] = first.tv_energy;
    report["tv_energy_final"] = last.tv_energy;
    report["last_step_norm"] = last.step_norm;
    report["out"] = a.out;
    if (result.termination == Termination::step_failure) {
        report["failed_iteration"] = result.failed_iteration;
        report["error"] = result.failure_message;
    }
    emit(g, report);
    switch (result.termination) {
    case Termination::converged:
        return kSuccess;
    case Termination::max_iters:
        if (a.steps > 0) return kSuccess;
        err_ << "flow did not converge within " << a.cfg.outer_max_iters << " steps\n";
        return kSolverFailure;
    case Termination::step_failure:
        err_ << result.failure_message << '\n';
        return kSolverFailure;
    }
    return kSolverFailure;
}

int Runner::denoise(const Globals& g, const FlowArgs& a)
{
    const DiscreteForm omega1 = read_form(a.in);
    std::vector<DiscreteForm> probes;
    if (a.companions.empty()) {
        // Unit constant forms, one per basis multi-index: all harmonic forms.
        const int n = omega1.grid().dim();
        for (AxisMask axes : basis_masks(n, omega1.degree())) {
            probes.push_back(DiscreteForm::constant(omega1.grid_ptr(), KVector::basis(n, axes)));
        }
    } else {
        for (const std::string& path : a.companions) probes.push_back(read_form(path));
    }
    const FlowResult result = prox_flow_unconstrained(omega1, flow_config(a), probes);
    json report;
    report["probes"] = probes.size();
    return finish_flow(g, a, result, std::move(report));
}

int Runner::calibrate(const Globals& g, const FlowArgs& a)
{
    const DiscreteForm omega1 = read_form(a.in);
    if (a.calibration.empty()) throw UsageError("calibrate needs --calibration");
    const ConeSpec spec = make_cone(make_calibration(a.calibration, omega1.grid().dim()));
    std::vector<DiscreteForm> witnesses;
    if (a.companions.empty()) {
        DiscreteForm constant = DiscreteForm::constant(omega1.grid_ptr(), spec.direction);
        if (constant.degree() == omega1.degree() &&
            cone_residual(spec, constant).max_site_distance <= 1e-12 * (1.0 + euclid_norm(spec.direction))) {
            witnesses.push_back(std::move(constant));
        }
    } else {
        for (const std::string& path : a.companions) witnesses.push_back(read_form(path));
    }
    const FlowResult result = prox_flow_constrained(omega1, spec, flow_config(a), witnesses);
    json report;
    report["calibration"] = a.calibration;
    report["cone"] = std::string(to_string(spec.kind));
    report["witnesses"] = witnesses.size();
    report["cone_residual"] = result.trace.records.back().cone_residual;
    report["t_phi"] = result.trace.records.back().t_phi;
    return finish_flow(g, a, result, std::move(report));
}

int Runner::hodge(const Globals& g, const HodgeArgs& a)
{
    const DiscreteForm omega = read_form(a.in);
    const HodgeSplit split = hodge_decompose(omega, a.cg_tol);
    fs::path prefix = a.out_prefix.empty() ? fs::path(a.in).replace_extension() : fs::path(a.out_prefix);
    json report;
    const std::pair<const char*, const DiscreteForm*> parts[] = {
        {"exact", &split.exact}, {"coexact", &split.coexact}, {"harmonic", &split.harmonic}};
    for (const auto& [name, part] : parts) {
        fs::path path = prefix;
        path += std::string(".") + name + ".json";
        write_form(path, *part);
        report[name] = path.string();
    }
    report["reconstruction_residual"] = split.reconstruction_residual;
    report["orthogonality_residual"] = split.orthogonality_residual;
    report["cg_iterations"] = split.cg_iterations;
    // The residual report is JSON regardless of --json.
    out_ << report.dump(2) << '\n';
    (void)g;
    return kSuccess;
}

json norm_json(const NormValue& v)
{
    const char* quality = v.quality == NormQuality::exact         ? "exact"
                          : v.quality == NormQuality::upper_bound ? "upper_bound"
                                                                  : "lower_bound";
    json j;
    j["value"] = v.value;
    j["lower"] = v.lower;
    j["upper"] = v.upper;
    j["quality"] = quality;
    return j;
}

int Runner::norms(const Globals& g, const NormArgs& a)
{
    if (a.n < 1 || a.n > kMaxDimension) throw UsageError("--n must be in 1.." + std::to_string(kMaxDimension));
    KVector v(a.n, 0);
    try {
        v = KVector::parse(a.n, a.expr);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.k >= 0 && v.degree() != a.k) {
        throw UsageError("expression has degree " + std::to_string(v.degree()) + ", --k says " + std::to_string(a.k));
    }
    const NormValue mass = mass_norm(v);
    const NormValue comass = comass_norm(v);
    if (g.json) {
        json report;
        report["n"] = a.n;
        report["k"] = v.degree();
        report["euclid"] = euclid_norm(v);
        report["mass"] = norm_json(mass);
        report["comass"] = norm_json(comass);
        out_ << report.dump(2) << '\n';
        return kSuccess;
    }
    out_ << "euclid " << number(euclid_norm(v)) << '\n';
    for (const auto& [name, value] : {std::pair{"mass", mass}, std::pair{"comass", comass}}) {
        out_ << name << ' ' << number(value.value);
        if (!value.is_exact()) {
            out_ << ' ' << norm_json(value)["quality"].get<std::string>() << " [" << number(value.lower) << ", "
                 << number(value.upper) << ']';
        }
        out_ << '\n';
    }
    return kSuccess;
}

int Runner::energy(const Globals& g, const EnergyArgs& a)
{
    const DiscreteForm omega = read_form(a.in);
    const DualEnergy dual = tv_energy_dual(omega, a.restarts, g.seed);
    json report;
    report["tv_energy"] = dual.primal;
    report["tv_energy_dual"] = dual.value;
    report["gap"] = dual.gap;
    emit(g, report);
    return kSuccess;
}

void add_flow_options(CLI::App* cmd, FlowArgs& a)
{
    cmd->add_option("--in", a.in, "input form file")->required();
    cmd->add_option("--out", a.out, "output form file")->required();
    cmd->add_option("--h", a.cfg.h, "proximal step")->capture_default_str();
    cmd->add_option("--max-iters", a.cfg.outer_max_iters, "outer iteration limit")->capture_default_str();
    cmd->add_option("--tol", a.cfg.outer_tol, "relative step-norm tolerance")->capture_default_str();
    cmd->add_option("--inner-max-iters", a.cfg.tv.inner_max_iters, "prox iteration limit")->capture_default_str();
    cmd->add_option("--inner-tol", a.cfg.tv.inner_tol, "prox relative gap tolerance")->capture_default_str();
    cmd->add_option("--steps", a.steps, "stop after this many steps without reporting failure")
        ->check(CLI::PositiveNumber);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Total-variation flows of discrete currents on flat tori", "tvcycles"};
    // --h is the proximal step, so help is long-form only.
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "read options from a TOML/INI file");

    Globals globals;
    app.add_option("--seed", globals.seed, "random seed")->capture_default_str();
    app.add_flag("--json", globals.json, "machine-readable output");
    app.add_option("--trace", globals.trace, "write the flow trace CSV here");

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a test form");
    gen_cmd->add_option("--grid", gen.grid, "resolution, e.g. 64 or 8x8x8x8")->required();
    gen_cmd->add_option("--lengths", gen.lengths, "period lengths, e.g. 1x1 (default 1)");
    gen_cmd->add_option("--degree", gen.degree, "form degree");
    gen_cmd->add_option("--preset", gen.preset, "noisy-closed | step | harmonic-plus-coexact | calibrated-random")
        ->required();
    gen_cmd->add_option("--calibration", gen.calibration, "volume | axis:i,j,... | kahler4");
    gen_cmd->add_option("--noise", gen.noise, "RMS of the coexact noise (noisy-closed)")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output form file")->required();

    FlowArgs denoise;
    CLI::App* denoise_cmd = app.add_subcommand("denoise", "run the unconstrained TV flow");
    add_flow_options(denoise_cmd, denoise);
    denoise_cmd->add_option("--probe", denoise.companions, "closed probe form file (repeatable)");

    FlowArgs calibrate;
    CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "run the cone-constrained TV flow");
    add_flow_options(calibrate_cmd, calibrate);
    calibrate_cmd->add_option("--calibration", calibrate.calibration, "volume | axis:i,j,... | kahler4")->required();
    calibrate_cmd->add_flag("--normalize", calibrate.cfg.normalize, "keep the pairing with phi equal to 1");
    calibrate_cmd->add_option("--witness", calibrate.companions, "feasible closed witness form file (repeatable)");
    calibrate_cmd->add_option("--splitting-max-iters", calibrate.cfg.splitting_max_iters, "step iteration limit")
        ->capture_default_str();
    calibrate_cmd->add_option("--splitting-tol", calibrate.cfg.splitting_tol, "step tolerance")
        ->capture_default_str();

    HodgeArgs hodge;
    CLI::App* hodge_cmd = app.add_subcommand("hodge", "split a form into exact, coexact and harmonic parts");
    hodge_cmd->add_option("--in", hodge.in, "input form file")->required();
    hodge_cmd->add_option("--out-prefix", hodge.out_prefix, "prefix for <prefix>.exact.json etc.");
    hodge_cmd->add_option("--cg-tol", hodge.cg_tol, "conjugate-gradient tolerance")->capture_default_str();

    NormArgs norms;
    CLI::App* norms_cmd = app.add_subcommand("norms", "Euclidean, mass and comass norms of a k-vector");
    norms_cmd->add_option("--n", norms.n, "ambient dimension")->required();
    norms_cmd->add_option("--k", norms.k, "expected degree");
    norms_cmd->add_option("expr", norms.expr, "coefficient expression, e.g. e12+2e34")->required();

    EnergyArgs energy;
    CLI::App* energy_cmd = app.add_subcommand("energy", "TV energy and its dual lower bound");
    energy_cmd->add_option("--in", energy.in, "input form file")->required();
    energy_cmd->add_option("--restarts", energy.restarts, "dual ascent restarts")->capture_default_str();

    auto fail = [&](int code, const std::string& message) {
        if (globals.json) {
            json j;
            j["error"] = message;
            j["exit_code"] = code;
            err << j.dump() << '\n';
        } else {
            err << "error: " << message << '\n';
        }
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        // Parsing may stop before --json is seen.
        globals.json = globals.json || std::any_of(argv + 1, argv + argc, [](const char* a) {
            return std::string_view(a) == "--json";
        });
        if (globals.json) return fail(kUsageError, e.what());
        app.exit(e, out, err);
        return kUsageError;
    }

    Runner runner(out, err);
    try {
        if (*gen_cmd) return runner.gen(globals, gen);
        if (*denoise_cmd) return runner.denoise(globals, denoise);
        if (*calibrate_cmd) return runner.calibrate(globals, calibrate);
        if (*hodge_cmd) return runner.hodge(globals, hodge);
        if (*norms_cmd) return runner.norms(globals, norms);
        if (*energy_cmd) return runner.energy(globals, energy);
    } catch (const SolverFailure& e) {
        return fail(kSolverFailure, e.what());
    } catch (const std::exception& e) {
        return fail(kUsageError, e.what());
    }
    return kUsageError;
}

} // namespace tvcycles::cli
