// Command-line driver: calibration, season runs, reports and the
// gain-schedule / safe-set extractions.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"

#include "roomtune.hpp"

namespace fs = std::filesystem;
using namespace roomtune;

namespace {

std::string output_dir(const SeasonConfig& cfg, const std::string& override_dir)
{
    const std::string dir = override_dir.empty() ? cfg.season.output_dir : override_dir;
    fs::create_directories(dir);
    return dir;
}

std::string results_path(const std::string& dir, Method m, std::uint64_t seed)
{
    return (fs::path(dir) / (to_string(m) + "_seed" + std::to_string(seed) + ".csv")).string();
}

std::string state_path(const std::string& dir, Method m, std::uint64_t seed)
{
    return (fs::path(dir) / (to_string(m) + "_seed" + std::to_string(seed) + ".state.json")).string();
}

std::string calibration_path(const std::string& dir) { return (fs::path(dir) / "calibration.json").string(); }

SeasonConfig load_config(const std::string& path)
{
    const SeasonConfig cfg = parse_config(load_json_file(path));
    return cfg;
}

Calibration load_calibration(const std::string& path)
{
    if (!fs::exists(path)) throw ContractError("no calibration at '" + path + "'; run 'calibrate' first");
    Calibration cal;
    read(load_json_file(path), cal, "calibration");
    return cal;
}

void print_calibration(const Calibration& cal)
{
    const char* names[] = {"rise time [s]", "overshoot [degC]", "valve move", "valve"};
    std::cout << "episodes " << cal.episodes << ", context range [" << cal.context.min << ", " << cal.context.max
              << "] degC\n";
    for (std::size_t i = 0; i < cost_count; ++i) {
        std::cout << "  J" << i + 1 << " " << std::left << std::setw(18) << names[i] << std::right
                  << " scale " << std::setw(10) << cal.normalization.scales[i];
        if (i < constraint_count) std::cout << "  threshold " << cal.normalization.thresholds[i];
        std::cout << '\n';
    }
    for (const std::string& w : cal.warnings) std::cerr << "warning: " << w << '\n';
}

Calibration calibrate_into(const SeasonConfig& cfg, const std::string& dir)
{
    const Calibration cal = run_calibration(cfg);
    save_json_file(calibration_path(dir), to_json_value(cal));
    return cal;
}

void run_one(const SeasonConfig& cfg, const Calibration& cal, const std::string& dir, Method m, std::uint64_t seed,
             std::optional<std::size_t> stop_after, bool resume)
{
    std::optional<SeasonCheckpoint> from;
    std::vector<DailyResult> earlier;
    const std::string csv = results_path(dir, m, seed);
    if (resume) {
        LoadedCheckpoint lc = checkpoint_from_json(load_json_file(state_path(dir, m, seed)));
        from = std::move(lc.checkpoint);
        std::ifstream in(csv);
        if (!in) throw ContractError("cannot resume: missing '" + csv + "'");
        earlier = read_results_csv(in);
        require(earlier.size() + 1 == from->next_day, "results file and checkpoint disagree");
    }
    SeasonRun run = run_season(cfg, m, seed, cal, std::move(from), stop_after);
    earlier.insert(earlier.end(), run.rows.begin(), run.rows.end());
    {
        std::ofstream out(csv, std::ios::binary);
        if (!out) throw ContractError("cannot write '" + csv + "'");
        write_results_csv(out, earlier);
    }
    save_json_file(state_path(dir, m, seed), checkpoint_to_json(run.checkpoint, cfg, cal));
    std::size_t violations = 0;
    double sum = 0.0;
    for (const DailyResult& r : earlier) {
        violations += r.violation;
        sum += r.costs.total;
    }
    std::cout << std::left << std::setw(6) << to_string(m) << std::right << " seed " << seed << ": " << earlier.size()
              << " days, average cost " << std::fixed << std::setprecision(4)
              << (earlier.empty() ? 0.0 : sum / static_cast<double>(earlier.size())) << ", violations " << violations
              << '\n'
              << std::defaultfloat << std::setprecision(6);
}

json report_json(const SeasonReport& rep)
{
    json methods = json::object();
    for (const MethodSummary& s : rep.methods) {
        methods[to_string(s.method)] = {{"seeds", s.seeds},
                                        {"final_median", s.final_median},
                                        {"improvement_pct", s.improvement_pct ? json(*s.improvement_pct) : json(nullptr)},
                                        {"violation_fraction", s.violation_fraction},
                                        {"worst_day", s.worst_day},
                                        {"median", s.median},
                                        {"min", s.min},
                                        {"max", s.max}};
    }
    return {{"days", rep.days}, {"methods", methods}};
}

void print_report(const SeasonReport& rep)
{
    std::cout << "days " << rep.days << "\n";
    std::cout << std::left << std::setw(8) << "method" << std::right << std::setw(6) << "seeds" << std::setw(12)
              << "median" << std::setw(10) << "min" << std::setw(10) << "max" << std::setw(13) << "improvement"
              << std::setw(12) << "violations" << std::setw(10) << "worst" << '\n';
    std::cout << std::fixed;
    for (const MethodSummary& s : rep.methods) {
        std::cout << std::left << std::setw(8) << to_string(s.method) << std::right << std::setw(6) << s.seeds
                  << std::setprecision(4) << std::setw(12) << s.final_median << std::setw(10) << s.min.back()
                  << std::setw(10) << s.max.back();
        if (s.improvement_pct) {
            std::ostringstream pct;
            pct << std::fixed << std::setprecision(1) << *s.improvement_pct << "%";
            std::cout << std::setw(13) << pct.str();
        } else {
            std::cout << std::setw(13) << "-";
        }
        std::ostringstream v;
        v << std::fixed << std::setprecision(1) << 100.0 * s.violation_fraction << "%";
        std::cout << std::setw(12) << v.str() << std::setprecision(3) << std::setw(10) << s.worst_day << '\n';
    }
    std::cout << std::defaultfloat;
}

SeasonReport report_dir(const std::string& dir)
{
    const std::regex name(R"(^(fixed|ada|bo|cbo|scbo)_seed(\d+)\.csv$)");
    std::map<Method, std::map<std::uint64_t, std::vector<DailyResult>>> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string file = entry.path().filename().string();
        if (!std::regex_match(file, m, name)) continue;
        std::ifstream in(entry.path());
        found[method_from_string(m[1])][std::stoull(m[2])] = read_results_csv(in);
    }
    if (found.empty()) throw ContractError("no result files in '" + dir + "'");
    std::map<Method, std::vector<std::vector<DailyResult>>> runs;
    for (auto& [method, seeds] : found) {
        for (auto& [seed, rows] : seeds) runs[method].push_back(std::move(rows));
    }
    return compare_report(runs);
}

LoadedCheckpoint load_state(const std::string& path)
{
    LoadedCheckpoint lc = checkpoint_from_json(load_json_file(path));
    if (!lc.checkpoint.optimizer) {
        throw ContractError("'" + path + "' is a " + to_string(lc.checkpoint.method) + " run without optimizer state");
    }
    return lc;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Safe contextual Bayesian tuning of a room-heating PI loop"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;

    auto* cal_cmd = app.add_subcommand("calibrate", "run the calibration season and fit surrogate hyperparameters");
    cal_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);
    cal_cmd->add_option("--out", out_dir, "output directory (default: season.output_dir)");

    std::string method_name;
    std::uint64_t seed = 1;
    std::size_t stop_after = 0;
    bool resume = false;
    auto* run_cmd = app.add_subcommand("run", "run one method over the heating season for one seed");
    run_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--method", method_name, "fixed, ada, bo, cbo or scbo")
        ->required()
        ->check(CLI::IsMember({"fixed", "ada", "bo", "cbo", "scbo"}));
    run_cmd->add_option("--seed", seed, "seed of the weather and plant disturbances")->required();
    run_cmd->add_option("--out", out_dir, "output directory (default: season.output_dir)");
    run_cmd->add_option("--stop-after", stop_after, "last day to simulate (default: whole season)");
    run_cmd->add_flag("--resume", resume, "continue from the saved state of this method and seed");

    auto* season_cmd = app.add_subcommand("season", "calibrate, run every method for every seed, then report");
    season_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);
    season_cmd->add_option("--out", out_dir, "output directory (default: season.output_dir)");

    std::string report_path;
    auto* report_cmd = app.add_subcommand("report", "summarize the result files of a directory");
    report_cmd->add_option("--dir", report_path, "results directory")->required()->check(CLI::ExistingDirectory);

    std::string state;
    double oat_min = -10.0, oat_max = 15.0, oat_step = 1.0;
    auto* sched_cmd = app.add_subcommand("gain-schedule", "posterior-optimal safe gains over an OAT grid");
    sched_cmd->add_option("--state", state, "optimizer state JSON")->required()->check(CLI::ExistingFile);
    sched_cmd->add_option("--oat-min", oat_min, "first OAT [degC]");
    sched_cmd->add_option("--oat-max", oat_max, "last OAT [degC]");
    sched_cmd->add_option("--oat-step", oat_step, "OAT spacing [degC]")->check(CLI::PositiveNumber);

    std::size_t day = 0;
    double oat = 0.0;
    std::string format = "grid";
    auto* safe_cmd = app.add_subcommand("safe-set", "safe-set membership over the gain grid after a given day");
    safe_cmd->add_option("--state", state, "optimizer state JSON")->required()->check(CLI::ExistingFile);
    safe_cmd->add_option("--day", day, "use observations of days 1..D (0 = none)")->required();
    safe_cmd->add_option("--oat", oat, "context OAT [degC]")->required();
    safe_cmd->add_option("--format", format, "grid or csv")->check(CLI::IsMember({"grid", "csv"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cal_cmd) {
            const SeasonConfig cfg = load_config(config_path);
            const std::string dir = output_dir(cfg, out_dir);
            print_calibration(calibrate_into(cfg, dir));
            std::cout << "wrote " << calibration_path(dir) << '\n';
        } else if (*run_cmd) {
            const SeasonConfig cfg = load_config(config_path);
            const std::string dir = output_dir(cfg, out_dir);
            const Calibration cal = load_calibration(calibration_path(dir));
            run_one(cfg, cal, dir, method_from_string(method_name), seed,
                    stop_after ? std::optional<std::size_t>(stop_after) : std::nullopt, resume);
        } else if (*season_cmd) {
            const SeasonConfig cfg = load_config(config_path);
            const std::string dir = output_dir(cfg, out_dir);
            const Calibration cal = calibrate_into(cfg, dir);
            print_calibration(cal);
            for (int s = 0; s < cfg.season.seeds; ++s) {
                for (Method m : all_methods) run_one(cfg, cal, dir, m, cfg.season.first_seed + s, std::nullopt, false);
            }
            const SeasonReport rep = report_dir(dir);
            save_json_file((fs::path(dir) / "summary.json").string(), report_json(rep));
            print_report(rep);
        } else if (*report_cmd) {
            const SeasonReport rep = report_dir(report_path);
            save_json_file((fs::path(report_path) / "summary.json").string(), report_json(rep));
            print_report(rep);
        } else if (*sched_cmd) {
            const LoadedCheckpoint lc = load_state(state);
            std::vector<double> grid;
            for (double z = oat_min; z <= oat_max + 1e-9; z += oat_step) grid.push_back(z);
            std::cout << "oat_c,kp,ki\n";
            for (const GainScheduleRow& r : extract_gain_schedule(*lc.checkpoint.optimizer, grid)) {
                std::cout << r.oat_c << ',' << r.gains.kp << ',' << r.gains.ki << '\n';
            }
        } else if (*safe_cmd) {
            const LoadedCheckpoint lc = load_state(state);
            if (!lc.checkpoint.optimizer->safe()) throw ContractError("state has no constraint models (method is not scbo)");
            const OptimizerState at = optimizer_at_day(*lc.checkpoint.optimizer, day);
            const SafeSetSnapshot snap = extract_safe_set_snapshot(at, oat);
            const GainDomain& d = at.domain();
            if (format == "csv") {
                std::cout << "kp,ki,safe\n";
                for (std::size_t i = 0; i < snap.kp_count; ++i)
                    for (std::size_t j = 0; j < snap.ki_count; ++j)
                        std::cout << d.kp_at(i) << ',' << d.ki_at(j) << ',' << snap.at(i, j) << '\n';
            } else {
                std::cout << "day " << day << ", oat " << oat << " degC: " << snap.size << " of " << d.size()
                          << " gains safe" << (snap.fallback ? " (fallback to initial gains)" : "") << '\n';
                std::cout << "rows kp " << d.kp_max << " (top) .. " << d.kp_min << ", columns ki " << d.ki_min << " .. "
                          << d.ki_max << '\n';
                for (std::size_t r = snap.kp_count; r-- > 0;) {
                    for (std::size_t j = 0; j < snap.ki_count; ++j) std::cout << (snap.at(r, j) ? '#' : '.');
                    std::cout << '\n';
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
