#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "repel/repel.hpp"

namespace {

using repel::io::Json;
using repel::io::format_double;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
    std::string format;
};

struct Range {
    int lo = 0;
    int hi = -1;
};

/// "a..b" or a single integer; b < a is an empty range.
Range parse_range(const std::string& text) {
    const std::size_t dots = text.find("..");
    try {
        std::size_t used = 0;
        if (dots == std::string::npos) {
            const int v = std::stoi(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return {v, v};
        }
        const std::string a = text.substr(0, dots);
        const std::string b = text.substr(dots + 2);
        const int lo = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument(text);
        const int hi = std::stoi(b, &used);
        if (used != b.size()) throw std::invalid_argument(text);
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw UsageError("cannot parse range \"" + text + "\" (expected N or A..B)");
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        try {
            std::size_t used = 0;
            if constexpr (std::is_floating_point_v<T>) {
                out.push_back(static_cast<T>(std::stod(cell, &used)));
            } else {
                const long long v = std::stoll(cell, &used);
                if (v < 0) throw std::invalid_argument(cell);
                out.push_back(static_cast<T>(v));
            }
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::logic_error&) {
            throw UsageError(std::string("cannot parse ") + what + " entry \"" + cell + "\"");
        }
    }
    if (out.empty()) throw UsageError(std::string(what) + " must not be empty");
    return out;
}

repel::RepulsionSchedule parse_schedule(const std::string& text, int depth) {
    if (text == "cantor") return repel::RepulsionSchedule::cantor(depth);
    return repel::RepulsionSchedule(parse_list<double>(text, "schedule"));
}

repel::LeafMeasure parse_measure(const std::string& text, const repel::GenerationalSet& set) {
    if (text == "equidistributed") return repel::LeafMeasure::equidistributed(set.leaf_count());
    repel::LeafMeasure mu = repel::io::read_masses_csv(repel::io::read_text(text), text);
    if (mu.size() != set.leaf_count()) {
        throw repel::DomainError("measure " + text + " has " + std::to_string(mu.size()) + " masses but the set has " +
                                 std::to_string(set.leaf_count()) + " leaves");
    }
    return mu;
}

std::string resolve_format(const Globals& g, const char* fallback, bool csv_ok, bool json_ok = true) {
    const std::string f = g.format.empty() ? fallback : g.format;
    if ((f == "csv" && !csv_ok) || (f == "json" && !json_ok)) {
        throw UsageError("--format " + f + " is not supported by this command");
    }
    return f;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// Writes the result to --out (plus a manifest sidecar) or to stdout.
class Emitter {
public:
    Emitter(const Globals& globals, const CLI::App& root)
        : globals_(globals), root_(root), start_(std::chrono::steady_clock::now()) {}

    bool to_file() const { return !globals_.out.empty(); }

    void emit(const std::string& text) const {
        if (!to_file()) {
            std::cout << text;
            std::cout.flush();
            return;
        }
        repel::io::write_text(globals_.out, text);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        Json manifest;
        manifest["command"] = command_path();
        manifest["parameters"] = parameters();
        manifest["seed"] = globals_.seed;
        manifest["tool_version"] = repel::kVersion;
        manifest["wall_time_seconds"] = wall;
        repel::io::write_text(globals_.out + ".manifest.json", dump(manifest));
    }

    /// Summary lines go to stdout when the payload went to a file.
    std::ostream& summary() const { return to_file() ? std::cout : std::cerr; }

private:
    std::vector<const CLI::App*> chain() const {
        std::vector<const CLI::App*> apps{&root_};
        for (const CLI::App* app = &root_;;) {
            const auto subs = app->get_subcommands();
            if (subs.empty()) break;
            app = subs.front();
            apps.push_back(app);
        }
        return apps;
    }

    std::string command_path() const {
        std::string out;
        for (const CLI::App* app : chain()) {
            if (app == &root_) continue;
            if (!out.empty()) out += ' ';
            out += app->get_name();
        }
        return out;
    }

    Json parameters() const {
        Json params = Json::object();
        for (const CLI::App* app : chain()) {
            for (const CLI::Option* opt : app->get_options()) {
                const std::string name = opt->get_single_name();
                if (name == "help" || name == "version") continue;
                if (opt->count() > 0) {
                    std::string joined;
                    for (const std::string& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
                    params[name] = joined;
                } else if (!opt->get_default_str().empty()) {
                    params[name] = opt->get_default_str();
                }
            }
        }
        return params;
    }

    const Globals& globals_;
    const CLI::App& root_;
    std::chrono::steady_clock::time_point start_;
};

Json equidistribution_json(const repel::EquidistributionReport& rep) {
    return Json{{"passed", rep.passed},
                {"worst_generation", rep.worst_generation},
                {"worst_ratio", nullable(rep.worst_ratio)},
                {"lightest_node", rep.lightest_node},
                {"heaviest_node", rep.heaviest_node}};
}

Json row_sum_json(const repel::RowSumReport& rep) {
    Json j{{"min", rep.min},
           {"max", rep.max},
           {"mean", rep.mean},
           {"spread", rep.spread},
           {"predicted_lambda", rep.predicted_lambda}};
    j["solved_lambda"] = rep.solved_lambda ? Json(*rep.solved_lambda) : Json(nullptr);
    j["agrees"] = rep.agrees ? Json(*rep.agrees) : Json(nullptr);
    return j;
}

std::vector<repel::PointConfiguration> cantor_instances(const Range& range) {
    std::vector<repel::PointConfiguration> out;
    for (int n = range.lo; n <= range.hi; ++n) out.push_back(repel::cantor_configuration(n));
    return out;
}

std::uint64_t instance_seed(std::uint64_t seed, std::size_t index) {
    return repel::mix_seed(seed ^ repel::mix_seed(static_cast<std::uint64_t>(index)));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repulsion, Riesz energy and repulsion-matrix computations on generational sets"};
    app.require_subcommand(1);
    app.set_version_flag("--version", repel::kVersion);

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker thread cap")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file (default stdout); a <out>.manifest.json sidecar is written next to it");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

    const auto sub = [&](CLI::App* parent, const char* name, const char* desc) {
        CLI::App* s = parent->add_subcommand(name, desc);
        s->fallthrough();
        return s;
    };

    // generate
    CLI::App* generate = sub(&app, "generate", "Write a generational set as JSON");
    generate->require_subcommand(1);
    int gen_n = 0;
    std::size_t gen_max_children = 4;
    std::string gen_profile;
    bool gen_corners = false;
    CLI::App* gen_cantor = sub(generate, "cantor", "Four-corner Cantor generation K_n");
    gen_cantor->add_option("--n", gen_n, "Generation (0..10)")->required();
    CLI::App* gen_socialist = sub(generate, "socialist", "Socialist filtration with a fixed branching profile");
    gen_socialist->add_option("--profile", gen_profile, "Children per generation, e.g. 2,3")->required();
    gen_socialist->add_flag("--corners", gen_corners, "Attach corner geometry (every count must be <= 4)");
    CLI::App* gen_random = sub(generate, "random", "Seeded combinatorial tree");
    gen_random->add_option("--n", gen_n, "Depth (>= 1)")->required();
    gen_random->add_option("--max-children", gen_max_children, "Child counts are uniform on 1..max")
        ->capture_default_str();

    // minimize
    CLI::App* minimize = sub(&app, "minimize", "Minimize the repulsion over probability measures on the leaves");
    std::string set_path;
    std::string schedule_text;
    std::string masses_path;
    repel::MinimizerOptions min_opts;
    minimize->add_option("--set", set_path, "Set JSON")->required();
    minimize->add_option("--schedule", schedule_text, "'cantor' or r_0,...,r_n")->required();
    minimize->add_option("--masses", masses_path, "Also write the leaf-mass CSV here");
    minimize->add_option("--kkt-tol", min_opts.kkt_tolerance)->capture_default_str();
    minimize->add_option("--max-iter", min_opts.max_iterations)->capture_default_str();

    // repulsion
    CLI::App* repulsion = sub(&app, "repulsion", "Evaluate the repulsion of a measure");
    std::string measure_text = "equidistributed";
    std::string method = "hierarchical";
    std::string exchange_text;
    repulsion->add_option("--set", set_path, "Set JSON")->required();
    repulsion->add_option("--schedule", schedule_text, "'cantor' or r_0,...,r_n")->required();
    repulsion->add_option("--measure", measure_text, "'equidistributed' or a masses CSV")->capture_default_str();
    repulsion->add_option("--method", method)
        ->check(CLI::IsMember({"hierarchical", "naive", "both"}))
        ->capture_default_str();
    repulsion->add_option("--exchange", exchange_text, "Sibling node ids A,B: report the mass-exchange decrease");

    // energy
    CLI::App* energy = sub(&app, "energy", "Monte-Carlo Riesz 1-energy of a measure on a geometric set");
    std::size_t samples = 100000;
    double even_c = 2.0;
    double even_eps = 0.5;
    energy->add_option("--set", set_path, "Set JSON")->required();
    energy->add_option("--measure", measure_text, "'equidistributed' or a masses CSV")->capture_default_str();
    energy->add_option("--samples", samples)->capture_default_str();
    energy->add_option("--schedule", schedule_text, "Also report the repulsion lower bound for this schedule");
    energy->add_option("--even-c", even_c, "Even-distribution constant C")->capture_default_str();
    energy->add_option("--even-eps", even_eps, "Even-distribution separation constant")->capture_default_str();

    // point-configuration sources shared by matrix / conjecture / capacity
    std::string cantor_text;
    std::string config_path;
    bool random_source = false;
    std::size_t count = 100;
    std::size_t points = 200;
    double radius = 0.01;
    double box = 1.0;
    std::size_t config_index = 0;
    repel::SolveOptions solve_opts;

    CLI::App* matrix = sub(&app, "matrix", "Solve A x = lambda 1 for one point configuration");
    matrix->add_option("--cantor", cantor_text, "Cantor generation n");
    matrix->add_option("--config", config_path, "Configuration JSON (object or array)");
    matrix->add_option("--index", config_index, "Entry of an array config file")->capture_default_str();
    matrix->add_flag("--random", random_source, "Seeded random separated configuration");
    matrix->add_option("--n", points, "Number of random points")->capture_default_str();
    matrix->add_option("--r", radius, "Random configuration scale r")->capture_default_str();
    matrix->add_option("--box", box, "Random configurations live in [0, box]^2")->capture_default_str();
    matrix->add_option("--dense-limit", solve_opts.dense_limit)->capture_default_str();

    CLI::App* conjecture = sub(&app, "conjecture", "Check A^{-1} 1 >= 0 over a family of configurations");
    conjecture->add_option("--cantor", cantor_text, "Cantor range A..B");
    conjecture->add_option("--config", config_path, "Configuration JSON (object or array)");
    conjecture->add_flag("--random", random_source, "Seeded random separated configurations");
    conjecture->add_option("--count", count, "Number of random instances")->capture_default_str();
    conjecture->add_option("--n", points, "Points per random instance")->capture_default_str();
    conjecture->add_option("--r", radius, "Random configuration scale r")->capture_default_str();
    conjecture->add_option("--box", box, "Random configurations live in [0, box]^2")->capture_default_str();
    conjecture->add_option("--dense-limit", solve_opts.dense_limit)->capture_default_str();

    CLI::App* capacity = sub(&app, "capacity", "Capacity statistic 1^T A^{-1} 1 against n");
    capacity->add_option("--cantor", cantor_text, "Cantor range A..B (default 1..5)");
    capacity->add_option("--config", config_path, "Configuration JSON; row n is the 1-based entry index");
    capacity->add_option("--dense-limit", solve_opts.dense_limit)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    solve_opts.threads = g.threads;
    const Emitter out(g, app);
    try {
        if (generate->parsed()) {
            resolve_format(g, "json", false);
            std::optional<repel::GenerationalSet> set;
            if (gen_cantor->parsed()) {
                set = repel::build_cantor(gen_n);
            } else if (gen_socialist->parsed()) {
                const repel::BranchingProfile profile(parse_list<std::size_t>(gen_profile, "profile"));
                set = gen_corners ? repel::build_socialist(profile, repel::corner_placer())
                                  : repel::build_socialist(profile);
            } else {
                set = repel::build_random_filtration(gen_n, gen_max_children, g.seed);
            }
            out.emit(repel::io::write_set(*set));
            return 0;
        }

        if (minimize->parsed()) {
            const std::string format = resolve_format(g, "json", true);
            const repel::GenerationalSet set = repel::io::read_set_file(set_path);
            const repel::RepulsionSchedule sched = parse_schedule(schedule_text, set.depth());
            const repel::MinimizationResult res = repel::minimize_repulsion(set, sched, min_opts);
            const std::string masses = repel::io::masses_csv(set, res.minimizer);
            if (!masses_path.empty()) repel::io::write_text(masses_path, masses);
            if (format == "csv") {
                out.emit(masses);
                return 0;
            }
            Json doc;
            doc["leaves"] = set.leaf_count();
            doc["min_value"] = res.min_value;
            doc["kkt_residual"] = res.kkt_residual;
            doc["iterations"] = res.iterations;
            doc["used_projected_gradient"] = res.used_projected_gradient;
            doc["active_bound_count"] = res.active_bound_count;
            doc["min_mass"] = repel::verify_nondegeneracy(res, 0.0).min_mass;
            doc["socialist"] = set.is_socialist();
            doc["equidistribution"] = set.is_socialist()
                                          ? equidistribution_json(repel::verify_equidistribution(res, set, 1e-8))
                                          : Json(nullptr);
            doc["masses"] = std::vector<double>(res.minimizer.masses().begin(), res.minimizer.masses().end());
            out.emit(dump(doc));
            return 0;
        }

        if (repulsion->parsed()) {
            const std::string format = resolve_format(g, "json", true);
            const repel::GenerationalSet set = repel::io::read_set_file(set_path);
            const repel::RepulsionSchedule sched = parse_schedule(schedule_text, set.depth());
            const repel::LeafMeasure mu = parse_measure(measure_text, set);
            const auto t = repel::generation_mass_squares(set, mu);
            if (format == "csv") {
                std::ostringstream csv;
                csv << "generation,r,mass_squares\n";
                for (std::size_t l = 0; l < t.size(); ++l)
                    csv << l << ',' << format_double(sched[l]) << ',' << format_double(t[l]) << "\n";
                out.emit(csv.str());
                return 0;
            }
            Json doc;
            doc["leaves"] = set.leaf_count();
            if (method != "naive") doc["repulsion"] = repel::repulsion_hierarchical(set, sched, mu);
            if (method != "hierarchical") doc["repulsion_naive"] = repel::repulsion_naive(set, sched, mu);
            doc["generation_mass_squares"] = t.per_generation;
            if (!exchange_text.empty()) {
                const auto ids = parse_list<std::size_t>(exchange_text, "exchange");
                if (ids.size() != 2) throw UsageError("--exchange expects two node ids A,B");
                const auto a = static_cast<repel::NodeId>(ids[0]);
                const auto b = static_cast<repel::NodeId>(ids[1]);
                const double dq = repel::delta_q_exchange(set, sched, mu, a, b);
                const repel::LeafMeasure swapped = repel::mass_exchange(mu, set, a, b);
                const double direct =
                    repel::repulsion_hierarchical(set, sched, mu) - repel::repulsion_hierarchical(set, sched, swapped);
                Json ex{{"a", a}, {"b", b}, {"delta_q", dq}, {"direct_difference", direct}};
                if (set.is_leaf(a)) {
                    const double ma = mu[set.leaf_index(a)];
                    const double mb = mu[set.leaf_index(b)];
                    const auto n = static_cast<std::size_t>(set.depth());
                    ex["finest_scale"] = repel::finest_scale_delta(sched[n], sched[n - 1], ma, mb);
                } else {
                    ex["finest_scale"] = nullptr;
                }
                doc["exchange"] = std::move(ex);
            }
            out.emit(dump(doc));
            return 0;
        }

        if (energy->parsed()) {
            const std::string format = resolve_format(g, "json", true);
            const repel::GenerationalSet set = repel::io::read_set_file(set_path);
            const repel::LeafMeasure mu = parse_measure(measure_text, set);
            const repel::EnergyEstimate est = repel::energy_mc(set, mu, {samples, g.seed, g.threads});
            std::optional<repel::RepulsionEnergyBound> bound;
            if (!schedule_text.empty()) {
                bound = repel::energy_lower_bound_via_repulsion(set, parse_schedule(schedule_text, set.depth()), mu,
                                                                even_c, even_eps);
            }
            if (format == "csv") {
                std::ostringstream csv;
                csv << "value,standard_error,samples,seed,block_classes,lower_bound\n"
                    << format_double(est.value) << ',' << format_double(est.standard_error) << ',' << est.samples
                    << ',' << est.seed << ',' << est.block_classes << ','
                    << (bound ? format_double(bound->bound) : std::string()) << "\n";
                out.emit(csv.str());
                return 0;
            }
            Json doc;
            doc["value"] = est.value;
            doc["standard_error"] = est.standard_error;
            doc["samples"] = est.samples;
            doc["seed"] = est.seed;
            doc["block_classes"] = est.block_classes;
            if (bound) {
                doc["lower_bound"] = Json{{"bound", bound->bound},
                                          {"constant", bound->constant},
                                          {"repulsion", bound->repulsion},
                                          {"within_3se", est.value >= bound->bound - 3.0 * est.standard_error}};
            } else {
                doc["lower_bound"] = nullptr;
            }
            out.emit(dump(doc));
            return 0;
        }

        // Point-configuration commands.
        const int sources = (!cantor_text.empty()) + (!config_path.empty()) + (random_source ? 1 : 0);
        if (sources > 1) throw UsageError("choose one of --cantor, --config, --random");

        if (matrix->parsed()) {
            const std::string format = resolve_format(g, "json", true);
            if (sources == 0) throw UsageError("matrix needs --cantor, --config or --random");
            std::optional<repel::PointConfiguration> cfg;
            if (!cantor_text.empty()) {
                const Range range = parse_range(cantor_text);
                if (range.lo != range.hi) throw UsageError("matrix takes a single Cantor generation");
                cfg = repel::cantor_configuration(range.lo);
            } else if (!config_path.empty()) {
                auto all = repel::io::read_configs_file(config_path);
                if (config_index >= all.size()) throw UsageError("--index out of range");
                cfg = std::move(all[config_index]);
            } else {
                cfg = repel::random_separated_configuration(points, radius, box, g.seed);
            }
            const repel::EquilibriumSolution sol = repel::solve_equilibrium(*cfg, solve_opts);
            const repel::RowSumReport sums = cfg->size() <= solve_opts.dense_limit
                                                 ? repel::row_sum_report(repel::build_repulsion_matrix(*cfg), &sol)
                                                 : repel::row_sum_report(*cfg, &sol);
            if (format == "csv") {
                std::ostringstream csv;
                csv << "index,x,y,inverse_row_sum,x_star\n";
                for (std::size_t i = 0; i < cfg->size(); ++i) {
                    csv << i << ',' << format_double((*cfg)[i].x) << ',' << format_double((*cfg)[i].y) << ','
                        << format_double(sol.inverse_row_sums[i]) << ',' << format_double(sol.x_star[i]) << "\n";
                }
                out.emit(csv.str());
                return 0;
            }
            Json doc;
            doc["N"] = cfg->size();
            doc["r"] = cfg->r();
            doc["lambda"] = sol.lambda;
            doc["capacity_stat"] = repel::capacity_lower_bound(sol);
            doc["min_weight"] = *std::min_element(sol.x_star.begin(), sol.x_star.end());
            doc["nonneg"] = sol.nonneg;
            doc["residual"] = sol.residual;
            doc["iterative"] = sol.iterative;
            doc["iterations"] = sol.iterations;
            doc["row_sums"] = row_sum_json(sums);
            out.emit(dump(doc));
            return 0;
        }

        if (conjecture->parsed()) {
            const std::string format = resolve_format(g, "csv", true);
            if (sources == 0) throw UsageError("conjecture needs --cantor, --config or --random");
            std::vector<repel::PointConfiguration> instances;
            if (!cantor_text.empty()) {
                instances = cantor_instances(parse_range(cantor_text));
            } else if (!config_path.empty()) {
                instances = repel::io::read_configs_file(config_path);
            } else {
                for (std::size_t i = 0; i < count; ++i)
                    instances.push_back(
                        repel::random_separated_configuration(points, radius, box, instance_seed(g.seed, i)));
            }
            const repel::ConjectureReport rep = repel::conjecture_sweep(instances, g.threads, solve_opts);
            if (format == "csv") {
                out.emit(repel::io::sweep_csv(rep));
            } else {
                Json rows = Json::array();
                for (const repel::ConjectureRow& row : rep.rows) {
                    Json j{{"instance_id", row.instance_id}, {"N", row.n_points},
                           {"r", row.r},                     {"lambda", nullable(row.lambda)},
                           {"capacity_stat", nullable(row.capacity_stat)},
                           {"min_weight", nullable(row.min_weight)},
                           {"nonneg", row.nonneg},           {"rowsum_min", nullable(row.rowsum_min)},
                           {"rowsum_max", nullable(row.rowsum_max)},
                           {"residual", nullable(row.residual)},
                           {"flagged", row.flagged}};
                    j["error"] = row.error.empty() ? Json(nullptr) : Json(row.error);
                    rows.push_back(std::move(j));
                }
                out.emit(dump(Json{{"instances", rep.rows.size()},
                                   {"flagged", rep.flagged},
                                   {"failed", rep.failed},
                                   {"rows", std::move(rows)}}));
            }
            out.summary() << "instances=" << rep.rows.size() << " flags=" << rep.flagged.size()
                          << " failed=" << rep.failed.size() << "\n";
            if (!rep.flagged.empty()) {
                // Full instances, so a candidate counterexample can be replayed with --config.
                Json flagged = Json::array();
                for (std::size_t id : rep.flagged) flagged.push_back(repel::io::config_to_json(instances[id]));
                const std::string path = (g.out.empty() ? std::string("conjecture") : g.out) + ".flagged.json";
                repel::io::write_text(path, dump(flagged));
                out.summary() << "flagged instances written to " << path << "\n";
            }
            return 0;
        }

        if (capacity->parsed()) {
            const std::string format = resolve_format(g, "csv", true);
            if (random_source) throw UsageError("capacity takes --cantor or --config");
            std::vector<repel::PointConfiguration> instances =
                !config_path.empty() ? repel::io::read_configs_file(config_path)
                                     : cantor_instances(parse_range(cantor_text.empty() ? "1..5" : cantor_text));
            const int first = config_path.empty() ? parse_range(cantor_text.empty() ? "1..5" : cantor_text).lo : 1;
            std::vector<double> stat;
            for (const repel::PointConfiguration& cfg : instances)
                stat.push_back(repel::capacity_lower_bound(repel::solve_equilibrium(cfg, solve_opts)));
            std::vector<double> scaled(stat.size());
            for (std::size_t i = 0; i < stat.size(); ++i) scaled[i] = (first + static_cast<double>(i)) * stat[i];
            if (format == "csv") {
                std::ostringstream csv;
                csv << "n,capacity_stat,n_times_stat\n";
                for (std::size_t i = 0; i < stat.size(); ++i)
                    csv << first + static_cast<int>(i) << ',' << format_double(stat[i]) << ','
                        << format_double(scaled[i]) << "\n";
                out.emit(csv.str());
            } else {
                Json rows = Json::array();
                for (std::size_t i = 0; i < stat.size(); ++i)
                    rows.push_back(Json{{"n", first + static_cast<int>(i)},
                                        {"capacity_stat", stat[i]},
                                        {"n_times_stat", scaled[i]}});
                out.emit(dump(Json{{"rows", std::move(rows)}}));
            }
            if (!scaled.empty()) {
                const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
                out.summary() << "rows=" << scaled.size() << " band=" << format_double(*hi / *lo) << "\n";
            } else {
                out.summary() << "rows=0\n";
            }
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const repel::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
