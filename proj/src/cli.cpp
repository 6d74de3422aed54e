#include "mott/cli.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mott/chain_solver.hpp"
#include "mott/env_model.hpp"
#include "mott/error.hpp"
#include "mott/experiments.hpp"
#include "mott/rng.hpp"
#include "mott/walker_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mott {

json default_config() {
    return {
        {"gap_law", "shifted_exponential"},
        {"gap_d", 1.0},
        {"gap_rate", 2.0},
        {"gap_tail", 3.0},
        {"mark_law", "power_uniform"},
        {"mark_alpha", 0.0},
        {"mark_A", 1.0},
        {"beta", 1.0},
        {"u_kind", "mott"},
        {"lambda", 0.3},
        {"N", 2048},
        {"horizons", {1e5, 1e6}},
        {"n_walkers", 32},
        {"n_environments", 8},
        {"seed", std::uint64_t{1}},
        {"eps_tail", default_eps_tail},
        {"solver_tol", 1e-10},
        {"h", 0.01},
        {"walk_kind", "continuous"},
        {"averaging", "annealed"},
        {"batches", default_batches},
        {"trajectory", false},
        {"range_lo", -100},
        {"range_hi", 100},
        {"c_grid", {0.3, 0.4, 0.6, 0.8, 1.0}},
        {"betas", {1.0, 2.0, 3.0, 4.0, 5.0}},
        {"continuity_lambdas", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}},
        {"measure", false},
        {"out", "runs"},
        {"jobs", 1},
        {"force", false},
    };
}

const std::vector<std::string>& execution_keys() {
    static const std::vector<std::string> keys{"out", "jobs", "force"};
    return keys;
}

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"gen-env", "simulate", "solve", "sweep", "einstein", "classify", "arrhenius"};
    return names;
}

namespace {

bool same_kind(const json& def, const json& v) {
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number()) return v.is_number();
    if (def.is_array()) return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
    return false;
}

std::string kind_name(const json& def) {
    if (def.is_boolean()) return "a boolean";
    if (def.is_string()) return "a string";
    if (def.is_number_integer()) return "an integer";
    if (def.is_number()) return "a number";
    return "an array of numbers";
}

void set_key(json& config, const json& defaults, const std::string& key, const json& value) {
    if (!defaults.contains(key)) throw config_error("unknown config key '" + key + "'");
    json v = value;
    // integers are accepted where reals are expected
    if (defaults.at(key).is_number_float() && v.is_number()) v = v.get<double>();
    if (!same_kind(defaults.at(key), v)) throw config_error("config key '" + key + "' must be " + kind_name(defaults.at(key)));
    if (defaults.at(key).is_array())
        for (auto& e : v) e = e.get<double>();
    config[key] = v;
}

double num(const json& c, const char* key) { return c.at(key).get<double>(); }
long integer(const json& c, const char* key) { return c.at(key).get<long>(); }
std::vector<double> numbers(const json& c, const char* key) { return c.at(key).get<std::vector<double>>(); }

void require(bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
}

}  // namespace

json resolve_config(const json& file, const std::map<std::string, std::string>& overrides) {
    const json defaults = default_config();
    json config = defaults;
    if (!file.is_null()) {
        if (!file.is_object()) throw config_error("config file must hold a JSON object");
        for (const auto& [k, v] : file.items()) set_key(config, defaults, k, v);
    }
    for (const auto& [k, raw] : overrides) {
        if (!defaults.contains(k)) throw config_error("unknown config key '" + k + "'");
        json v;
        if (defaults.at(k).is_string()) {
            v = raw;
        } else {
            try {
                v = json::parse(raw);
            } catch (const json::parse_error&) {
                throw config_error("config key '" + k + "' must be " + kind_name(defaults.at(k)) + ", got '" + raw + "'");
            }
        }
        set_key(config, defaults, k, v);
    }
    return config;
}

void validate_config(const std::string& command, const json& c) {
    require(std::find(commands().begin(), commands().end(), command) != commands().end(),
            "unknown command '" + command + "'");
    (void)model_from_json(c);
    const double lambda = num(c, "lambda");
    require(lambda >= 0.0 && lambda < 1.0, "lambda must lie in [0, 1)");
    if (command == "classify") require(lambda > 0.0, "classify needs lambda in (0, 1)");
    require(integer(c, "N") >= 3, "N must be >= 3");
    require(integer(c, "n_walkers") >= 1, "n_walkers must be >= 1");
    require(integer(c, "n_environments") >= 1, "n_environments must be >= 1");
    require(integer(c, "batches") >= 8, "batches must be >= 8");
    require(integer(c, "jobs") >= 1, "jobs must be >= 1");
    require(num(c, "eps_tail") > 0.0 && num(c, "eps_tail") < 1.0, "eps_tail must lie in (0, 1)");
    require(num(c, "solver_tol") > 0.0, "solver_tol must be positive");
    require(num(c, "h") > 0.0 && num(c, "h") <= 0.05, "h must lie in (0, 0.05]");
    require(c.at("seed").is_number_unsigned() || c.at("seed").get<long>() >= 0, "seed must be non-negative");
    const std::string kind = c.at("walk_kind");
    require(kind == "discrete" || kind == "continuous", "walk_kind must be discrete or continuous");
    const std::string avg = c.at("averaging");
    require(avg == "annealed" || avg == "quenched", "averaging must be annealed or quenched");
    require(integer(c, "range_lo") <= 0 && integer(c, "range_hi") >= 0, "range_lo <= 0 <= range_hi is required");
    const auto hs = numbers(c, "horizons");
    require(!hs.empty(), "horizons must not be empty");
    for (std::size_t k = 0; k < hs.size(); ++k) {
        require(hs[k] > 0.0, "horizons must be positive");
        require(k == 0 || hs[k] > hs[k - 1], "horizons must be strictly increasing");
    }
    for (double l : numbers(c, "continuity_lambdas")) require(l >= 0.0 && l < 1.0, "continuity_lambdas must lie in [0, 1)");
    for (double b : numbers(c, "betas")) require(b >= 0.0, "betas must be non-negative");
    for (double r : numbers(c, "c_grid")) require(r > 0.0, "c_grid rates must be positive");
    if (command == "simulate" || command == "sweep" || (command == "classify" && c.at("measure").get<bool>()))
        require(integer(c, "n_walkers") >= integer(c, "batches"), "n_walkers must be >= batches");
    if (command == "sweep") {
        require(hs.size() >= 2, "sweep needs at least two horizons");
        require(!numbers(c, "c_grid").empty(), "c_grid must not be empty");
        require(lambda > 0.0, "sweep needs lambda in (0, 1)");
    }
    if (command == "arrhenius") {
        require(numbers(c, "betas").size() >= 2, "arrhenius needs at least two betas");
        require(integer(c, "n_environments") >= 2, "arrhenius needs n_environments >= 2");
        require(c.at("u_kind") == "mott", "arrhenius needs u_kind = mott");
        require(c.at("mark_law") == "power_uniform", "arrhenius needs mark_law = power_uniform");
    }
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[md[k] >> 4];
        out += hex[md[k] & 15];
    }
    return out;
}

namespace {

json result_config(const json& config) {
    json c = config;
    for (const auto& k : execution_keys()) c.erase(k);
    return c;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::uint64_t seed_of(const json& c) { return c.at("seed").get<std::uint64_t>(); }

SolverOptions solver_of(const json& c) {
    SolverOptions o;
    o.tolerance = num(c, "solver_tol");
    return o;
}

EnsembleOptions ensemble_of(const json& c) {
    EnsembleOptions o;
    o.kind = c.at("walk_kind") == "discrete" ? WalkKind::discrete : WalkKind::continuous;
    o.averaging = c.at("averaging") == "quenched" ? Averaging::quenched : Averaging::annealed;
    o.batches = static_cast<int>(integer(c, "batches"));
    o.eps_tail = num(c, "eps_tail");
    o.jobs = static_cast<int>(integer(c, "jobs"));
    return o;
}

std::string csv_line(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& cell : cells) {
        if (!s.empty()) s += ',';
        s += cell;
    }
    return s + "\n";
}

std::string fd(double v) { return format_double(v); }

Artifacts cmd_gen_env(const json& c) {
    const EnvModel m = model_from_json(c);
    const EnvWindow w =
        sample_window(m, {integer(c, "range_lo"), integer(c, "range_hi")}, derive_seed(seed_of(c), seed_tag::environment, 0));
    std::ostringstream csv;
    write_window_csv(csv, w);
    json r = window_descriptor(w);
    r["n_sites"] = w.range().size();
    r["oracle_only"] = m.oracle_only();
    return {{"window.csv", csv.str()}, {"result.json", dump(r)}};
}

Artifacts cmd_simulate(const json& c) {
    const EnvModel m = model_from_json(c);
    const double lambda = num(c, "lambda");
    const auto hs = numbers(c, "horizons");
    const EnsembleOptions o = ensemble_of(c);
    const VelocityRun run = velocity_estimate(m, lambda, hs, static_cast<int>(integer(c, "n_walkers")), seed_of(c), o);

    json r{{"lambda", lambda}, {"horizons", run.horizons}, {"walk_kind", c.at("walk_kind")}, {"averaging", c.at("averaging")}};
    auto est = json::array();
    for (const auto& e : run.estimates) est.push_back(to_json(e));
    r["velocity"] = est;
    std::string endpoints = "env_seed,walk_seed,lambda,horizon,final_x,final_t,n_jumps\n";
    std::vector<double> msd;
    for (const auto& e : run.endpoints) {
        endpoints += csv_line({std::to_string(e.env_seed), std::to_string(e.walk_seed), fd(e.lambda), fd(e.horizon),
                               fd(e.final_x), fd(e.final_t), std::to_string(e.n_jumps)});
        if (e.horizon == hs.back()) msd.push_back(e.final_x * e.final_x / e.horizon);
    }
    if (lambda == 0.0) r["msd_diffusion"] = to_json(batch_means_of_samples(msd, o.batches));
    Artifacts a{{"result.json", dump(r)}, {"endpoints.csv", endpoints}};
    if (c.at("trajectory").get<bool>()) {
        WalkSpec spec{o.kind, hs, Recording::full};
        const Trajectory tr = simulate(m, lambda, spec, derive_seed(seed_of(c), seed_tag::environment, 0),
                                       derive_seed(seed_of(c), seed_tag::walker, 0), o.eps_tail);
        std::string t = "t,x\n";
        for (std::size_t k = 0; k < tr.times.size(); ++k) t += csv_line({fd(tr.clock[k]), fd(tr.displacements[k])});
        a["trajectory.csv"] = t;
    }
    return a;
}

Artifacts cmd_solve(const json& c) {
    const EnvModel m = model_from_json(c);
    const auto n = static_cast<std::size_t>(integer(c, "N"));
    const EnvWindow w = sample_window(m, {0, static_cast<std::int64_t>(n)}, derive_seed(seed_of(c), seed_tag::environment, 0));
    const ChainSummary s = summarize_chain(w, n, num(c, "lambda"), num(c, "h"), num(c, "eps_tail"), solver_of(c));
    json r = to_json(s);
    r["oracle_only"] = m.oracle_only();
    std::string t = "index,x,E,pi0,pi_lambda,g\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::int64_t>(i);
        t += csv_line({std::to_string(i), fd(w.x(k)), fd(w.energy(k)), fd(s.pi0[i]), fd(s.pi_lambda[i]), fd(s.corrector[i])});
    }
    return {{"result.json", dump(r)}, {"chain.csv", t}};
}

Artifacts cmd_sweep(const json& c) {
    PhaseSweepConfig cfg;
    cfg.lambda = num(c, "lambda");
    cfg.min_gap = num(c, "gap_d");
    cfg.rates = numbers(c, "c_grid");
    cfg.base = model_from_json(c);
    cfg.horizons = numbers(c, "horizons");
    cfg.n_walkers = static_cast<int>(integer(c, "n_walkers"));
    cfg.seed = seed_of(c);
    cfg.options = ensemble_of(c);
    const PhaseSweep s = phase_sweep(cfg);
    std::string t = "rate,predicted,horizon,velocity,stderr,ratio_to_previous\n";
    for (const auto& p : s.points)
        for (std::size_t k = 0; k < p.verdict.horizons.size(); ++k)
            t += csv_line({fd(p.rate), to_string(p.verdict.predicted), fd(p.verdict.horizons[k]),
                           fd(p.verdict.measured_velocity[k].value), fd(p.verdict.measured_velocity[k].std_error),
                           k == 0 ? std::string("") : fd(p.ratios[k - 1])});
    return {{"result.json", dump(to_json(s))}, {"sweep.csv", t}};
}

Artifacts cmd_einstein(const json& c) {
    EinsteinConfig cfg;
    cfg.model = model_from_json(c);
    cfg.n_sites = static_cast<std::size_t>(integer(c, "N"));
    cfg.n_envs = static_cast<int>(integer(c, "n_environments"));
    cfg.h = num(c, "h");
    cfg.seed = seed_of(c);
    cfg.eps_tail = num(c, "eps_tail");
    cfg.continuity_lambdas = numbers(c, "continuity_lambdas");
    cfg.jobs = static_cast<int>(integer(c, "jobs"));
    cfg.solver = solver_of(c);
    const EinsteinReport r = einstein_report(cfg);
    std::string t = "env_seed,mobility_Y,D_Y,mobility_X,D_X,rel_Y,rel_X,rel_beta,corrector_residual\n";
    for (const auto& e : r.envs)
        t += csv_line({std::to_string(e.env_seed), fd(e.mobility_y), fd(e.d_y), fd(e.mobility_x), fd(e.d_x), fd(e.rel_y),
                       fd(e.rel_x), fd(e.rel_beta), fd(e.corrector_residual)});
    return {{"result.json", dump(to_json(r))}, {"einstein.csv", t}};
}

Artifacts cmd_classify(const json& c) {
    const EnvModel m = model_from_json(c);
    const double lambda = num(c, "lambda");
    RegimeVerdict v = c.at("measure").get<bool>()
                          ? classify_regime(m, lambda, numbers(c, "horizons"), static_cast<int>(integer(c, "n_walkers")),
                                            seed_of(c), ensemble_of(c))
                          : classify_regime(m, lambda);
    return {{"result.json", dump(to_json(v))}};
}

Artifacts cmd_arrhenius(const json& c) {
    ArrheniusConfig cfg;
    cfg.model = model_from_json(c);
    cfg.betas = numbers(c, "betas");
    cfg.n_sites = static_cast<std::size_t>(integer(c, "N"));
    cfg.n_envs = static_cast<int>(integer(c, "n_environments"));
    cfg.seed = seed_of(c);
    cfg.eps_tail = num(c, "eps_tail");
    cfg.jobs = static_cast<int>(integer(c, "jobs"));
    cfg.solver = solver_of(c);
    const ArrheniusFit f = arrhenius_sweep(cfg);
    std::string t = "beta,D,logD,D_stderr,D_Y,D_Y_stderr\n";
    for (const auto& p : f.points)
        t += csv_line({fd(p.beta), fd(p.d_x), fd(p.log_d), fd(p.d_x_stderr), fd(p.d_y), fd(p.d_y_stderr)});
    return {{"result.json", dump(to_json(f))}, {"arrhenius.csv", t}};
}

void write_file(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    os << s;
    if (!os) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

std::string config_hash(const std::string& command, const json& config) {
    return sha256_hex(command + "\n" + result_config(config).dump());
}

Artifacts run_command(const std::string& command, const json& config) {
    validate_config(command, config);
    if (command == "gen-env") return cmd_gen_env(config);
    if (command == "simulate") return cmd_simulate(config);
    if (command == "solve") return cmd_solve(config);
    if (command == "sweep") return cmd_sweep(config);
    if (command == "einstein") return cmd_einstein(config);
    if (command == "classify") return cmd_classify(config);
    return cmd_arrhenius(config);
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"mottvrh: biased Mott variable-range hopping in one dimension"};
    app.set_help_flag("--help", "print this help and exit");
    std::string command;
    std::string config_path;
    app.add_option("command", command, "gen-env | simulate | solve | sweep | einstein | classify | arrhenius")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("--config", config_path, "JSON config file (flat keys)");
    bool force = false;
    app.add_flag("--force", force, "replace an existing output directory");
    std::map<std::string, std::string> raw;
    const json defaults = default_config();
    for (const auto& [key, def] : defaults.items()) {
        if (key == "force") continue;
        app.add_option("--" + key, raw[key], "override '" + key + "' (default " + def.dump() + ")");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }
    std::map<std::string, std::string> overrides;
    for (const auto& [k, v] : raw)
        if (app.count("--" + k) > 0) overrides[k] = v;
    if (force) overrides["force"] = "true";

    try {
        json file;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw config_error("cannot open config file '" + config_path + "'");
            try {
                file = json::parse(is);
            } catch (const json::parse_error& e) {
                throw config_error(std::string("config file does not parse: ") + e.what());
            }
        }
        const json config = resolve_config(file, overrides);
        validate_config(command, config);
        const std::string hash = config_hash(command, config);
        const fs::path base = fs::path(config.at("out").get<std::string>()) / command;
        const fs::path target = base / hash;
        const bool replace = config.at("force").get<bool>();
        if (fs::exists(target) && !replace) {
            err << "output " << target.string() << " already exists; rerun with --force to replace it\n";
            return 3;
        }

        Artifacts artifacts = run_command(command, config);
        artifacts["config.json"] = dump(result_config(config));
        json manifest{{"command", command}, {"config_hash", hash}, {"seed", config.at("seed")}, {"tool", "mottvrh"}};
        json sums = json::object();
        for (const auto& [name, bytes] : artifacts) sums[name] = sha256_hex(bytes);
        manifest["artifacts"] = sums;

        fs::create_directories(base);
        const std::string tag = hash + "-" + std::to_string(::getpid());
        const fs::path tmp = base / (".tmp-" + tag);
        fs::remove_all(tmp);
        fs::create_directory(tmp);
        for (const auto& [name, bytes] : artifacts) write_file(tmp / name, bytes);
        write_file(tmp / "manifest.json", dump(manifest));
        if (fs::exists(target)) {
            const fs::path old = base / (".old-" + tag);
            fs::rename(target, old);
            fs::rename(tmp, target);
            fs::remove_all(old);
        } else {
            fs::rename(tmp, target);
        }
        out << target.string() << "\n";
        return 0;
    } catch (const config_error& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        err << "numeric error: " << e.what() << " (residual " << format_double(e.residual()) << ")\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mott
