#include "pinnmeta/experiment.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"
#include "pinnmeta/metrics.hpp"
#include "pinnmeta/seeds.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <tuple>

namespace pinnmeta {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string prepare_dir(const RunConfig& config) {
    const std::string dir = output_dir(config);
    fs::create_directories(dir);
    return dir;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Writes config.txt and manifest.json; `artifacts` are file names in `dir`.
void finish_run(const std::string& dir, const RunConfig& config, const std::string& subcommand,
                std::vector<std::string> artifacts, const json& seeds, int exit_code) {
    {
        std::ofstream os(join(dir, "config.txt"), std::ios::binary);
        os << "# resolved configuration of " << subcommand << "; rerun with --config\n";
        config.write(os);
    }
    artifacts.insert(artifacts.begin(), "config.txt");

    json m;
    m["schema"] = 1;
    m["tool"] = "pinnmeta";
    m["subcommand"] = subcommand;
    m["run_id"] = config.get("run_id");
    m["exit_code"] = exit_code;
    json cfg = json::object();
    for (const auto& [k, v] : config.values()) {
        cfg[k] = v;
    }
    m["config"] = cfg;
    m["seeds"] = seeds;
    json arts = json::array();
    for (const auto& a : artifacts) {
        const std::string path = join(dir, a);
        arts.push_back({{"path", a}, {"bytes", fs::file_size(path)}, {"sha256", sha256_file(path)}});
    }
    m["artifacts"] = arts;
    std::ofstream os(join(dir, "manifest.json"), std::ios::binary);
    os << m.dump(2) << '\n';
}

std::string hex_seed(std::uint64_t s) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(s));
    return buf;
}

std::vector<int> layer_sizes_of(const RunConfig& config, const TaskSpec& probe) {
    return pinn_layer_sizes(probe.input_dim(), static_cast<int>(config.get_int("hidden_layers")),
                            static_cast<int>(config.get_int("width")));
}

TaskSpec probe_task(IcFamily family) {
    return make_task(family, std::vector<double>(static_cast<std::size_t>(family_arity(family)), 0.0));
}

} // namespace

std::string output_dir(const RunConfig& config) {
    if (!config.get("out").empty()) {
        return config.get("out");
    }
    const char* root = std::getenv(kOutputRootEnv);
    return (fs::path(root && *root ? root : "runs") / config.get("run_id")).string();
}

std::vector<TaskSpec> held_out_tasks(IcFamily family, int m, std::uint64_t seed,
                                     const std::vector<double>& params_list, bool frequency_in_y) {
    std::vector<TaskSpec> tasks;
    const auto arity = static_cast<std::size_t>(family_arity(family));
    if (!params_list.empty()) {
        if (arity == 0 || params_list.size() % arity != 0) {
            throw UsageError("parameter list length must be a multiple of " + std::to_string(arity));
        }
        for (std::size_t i = 0; i < params_list.size(); i += arity) {
            tasks.push_back(make_task(family, {params_list.begin() + static_cast<std::ptrdiff_t>(i),
                                               params_list.begin() + static_cast<std::ptrdiff_t>(i + arity)}));
        }
    } else {
        std::mt19937_64 rng(derive_seed(seed, "test-tasks"));
        for (int i = 0; i < m; ++i) {
            tasks.push_back(sample_task(family, rng));
        }
    }
    for (auto& t : tasks) {
        t.frequency_in_y = frequency_in_y && family == IcFamily::HeatFrequency;
    }
    return tasks;
}

FineTuneConfig fine_tune_config_for(Arm arm, const RunConfig& config) {
    FineTuneConfig f;
    f.epochs = static_cast<int>(config.get_int("epochs"));
    f.log_interval = static_cast<int>(config.get_int("log_interval"));
    f.adam.learning_rate = config.get_double("outer_lr");
    if (arm == Arm::Random) {
        f.n_collocation = static_cast<int>(config.get_int("ft_nf"));
        f.n_ib = static_cast<int>(config.get_int("ft_nib"));
        f.resample = false;
    } else {
        f.n_collocation = static_cast<int>(config.get_int("ft_meta_nf"));
        f.n_ib = static_cast<int>(config.get_int("ft_meta_nib"));
        f.resample = config.get_bool("ft_meta_resample");
    }
    return f;
}

MlpParams fine_tune_start(Arm arm, const std::vector<int>& layer_sizes, const MlpParams* meta,
                          std::uint64_t seed, std::size_t task_index) {
    if (arm == Arm::Random) {
        return init_params(layer_sizes, derive_seed(seed, "random-init", task_index));
    }
    if (!meta) {
        throw UsageError("meta arm needs meta-trained parameters");
    }
    if (meta->layer_sizes() != layer_sizes) {
        throw UsageError("snapshot shape does not match the configured network");
    }
    return *meta;
}

std::uint64_t fine_tune_point_seed(std::uint64_t seed, std::size_t task_index) {
    return derive_seed(seed, "fine-tune-points", task_index);
}

int cmd_meta_train(RunConfig config, std::ostream& log) {
    config.resolve("meta-train");
    const MetaConfig mc = meta_config_of(config);
    if (mc.arm == Arm::Random) {
        throw UsageError("meta-train needs arm mamlpinn or gampinn");
    }
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed"));
    const std::string dir = prepare_dir(config);
    CsvWriter csv(join(dir, "metrics.csv"), metrics_columns());
    const std::string run_id = config.get("run_id");
    const std::string arm = to_string(mc.arm);

    int exit_code = 0;
    int last_epoch = 0;
    MetaTrainResult result;
    auto on_epoch = [&](const MetaEpochRecord& r) {
        MetricsRow row;
        row.run_id = run_id;
        row.phase = "meta-train";
        row.arm = arm;
        row.epoch = r.epoch;
        row.l_pde = r.l_pde;
        row.l_data = r.l_data;
        if (mc.arm == Arm::GamPinn) {
            row.l_gam = r.l_gam;
        }
        row.l_support = r.l_support;
        row.l_query = r.l_meta;
        row.wall_ms = r.wall_ms;
        csv.write(row);
        last_epoch = r.epoch;
        if (r.epoch % 100 == 0) {
            log << "meta-train epoch " << r.epoch << " L_meta " << format_double(r.l_meta) << '\n';
        }
    };
    try {
        result = meta_train(mc, seed, on_epoch);
        save_snapshot(join(dir, "meta_params.txt"), result.params);
        log << "meta-train finished after " << result.trace.size() << " epochs"
            << (result.converged ? " (converged)" : "") << '\n';
    } catch (const NumericError& e) {
        MetricsRow row;
        row.run_id = run_id;
        row.phase = "meta-train";
        row.arm = arm;
        row.epoch = last_epoch + 1;
        row.status = "diverged";
        csv.write(row);
        log << "meta-train diverged: " << e.what() << '\n';
        exit_code = 1;
    }
    std::vector<std::string> artifacts = {"metrics.csv"};
    if (exit_code == 0) {
        artifacts.push_back("meta_params.txt");
    }
    finish_run(dir, config, "meta-train", artifacts,
               {{"master", seed},
                {"meta-init", hex_seed(derive_seed(seed, "meta-init"))},
                {"rule", "derive_seed(master, phase, index) = splitmix64(master ^ splitmix64(fnv1a(phase) + index))"}},
               exit_code);
    return exit_code;
}

int cmd_fine_tune(RunConfig config, std::ostream& log) {
    config.resolve("fine-tune");
    const Arm arm = parse_arm(config.get("arm"));
    const IcFamily family = family_of(config);
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed"));
    const std::vector<int> sizes = layer_sizes_of(config, probe_task(family));

    std::optional<MlpParams> meta;
    if (arm != Arm::Random) {
        if (config.get("snapshot").empty()) {
            throw UsageError("fine-tune of arm " + to_string(arm) + " needs --snapshot");
        }
        if (!fs::exists(config.get("snapshot"))) {
            throw UsageError("snapshot not found: " + config.get("snapshot"));
        }
        meta = load_snapshot(config.get("snapshot"));
        fine_tune_start(arm, sizes, &*meta, seed, 0); // shape check before any work
    }
    const std::vector<TaskSpec> tasks =
        held_out_tasks(family, static_cast<int>(config.get_int("ft_tasks")), seed,
                       config.get_doubles("theta_list"), config.get_bool("frequency_in_y"));
    const FineTuneConfig ft = fine_tune_config_for(arm, config);

    const std::string dir = prepare_dir(config);
    struct Outcome {
        std::optional<FineTuneResult> result;
        std::string error;
    };
    std::vector<Outcome> outcomes(tasks.size());
    parallel_for(tasks.size(), static_cast<int>(config.get_int("threads")), [&](std::size_t i) {
        try {
            const SolutionField field = evaluation_field(tasks[i]);
            outcomes[i].result = fine_tune(fine_tune_start(arm, sizes, meta ? &*meta : nullptr, seed, i),
                                           tasks[i], field, ft, fine_tune_point_seed(seed, i));
        } catch (const NumericError& e) {
            outcomes[i].error = e.what();
        } catch (const SolverFailure& e) {
            outcomes[i].error = e.what();
        }
    });

    CsvWriter csv(join(dir, "metrics.csv"), metrics_columns());
    CsvWriter summary(join(dir, "summary.csv"),
                      {"schema", "run_id", "arm", "epoch", "task_index", "task", "field_mse"});
    const std::string run_id = config.get("run_id");
    int exit_code = 0;
    std::map<int, std::vector<double>> at_epoch;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string record = to_record(tasks[i]);
        if (!outcomes[i].result) {
            MetricsRow row;
            row.run_id = run_id;
            row.phase = "fine-tune";
            row.arm = to_string(arm);
            row.task_index = static_cast<int>(i);
            row.task = record;
            row.status = "diverged";
            csv.write(row);
            log << "task " << i << " diverged: " << outcomes[i].error << '\n';
            exit_code = 1;
            continue;
        }
        for (const FineTuneRecord& r : outcomes[i].result->trace) {
            MetricsRow row;
            row.run_id = run_id;
            row.phase = "fine-tune";
            row.arm = to_string(arm);
            row.task_index = static_cast<int>(i);
            row.task = record;
            row.epoch = r.epoch;
            row.l_pde = r.l_pde;
            row.l_data = r.l_data;
            row.l_query = r.l_pde + r.l_data;
            row.field_mse = r.field_mse;
            row.wall_ms = r.wall_ms;
            csv.write(row);
            if (std::find(kSummaryEpochs.begin(), kSummaryEpochs.end(), r.epoch) != kSummaryEpochs.end()) {
                summary.write_line(std::to_string(kMetricsSchema) + "," + run_id + "," + to_string(arm) +
                                   "," + std::to_string(r.epoch) + "," + std::to_string(i) + "," + record +
                                   "," + format_double(r.field_mse));
                at_epoch[r.epoch].push_back(r.field_mse);
            }
        }
        log << "task " << i << " (" << record << ") final field MSE "
            << format_double(outcomes[i].result->trace.back().field_mse) << '\n';
    }
    for (const auto& [epoch, v] : at_epoch) {
        double mean = 0.0;
        for (double x : v) {
            mean += x;
        }
        mean /= static_cast<double>(v.size());
        summary.write_line(std::to_string(kMetricsSchema) + "," + run_id + "," + to_string(arm) + "," +
                           std::to_string(epoch) + ",mean,," + format_double(mean));
    }
    finish_run(dir, config, "fine-tune", {"metrics.csv", "summary.csv"},
               {{"master", seed},
                {"test-tasks", hex_seed(derive_seed(seed, "test-tasks"))},
                {"rule", "per task i: random-init(i), fine-tune-points(i)"}},
               exit_code);
    return exit_code;
}

int cmd_denoise(RunConfig config, std::ostream& log) {
    config.resolve("denoise");
    const double p = config.get_double("noise_p");
    if (!(p > 0.0)) {
        throw UsageError("denoise needs --noise-p > 0");
    }
    const IcFamily family = family_of(config);
    if (family != IcFamily::BurgersSinOnly) {
        throw UsageError("denoise runs on ic_family sin-only");
    }
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed"));
    DenoiseConfig dc;
    dc.epochs = static_cast<int>(config.get_int("epochs"));
    dc.n_collocation = static_cast<int>(config.get_int("ft_nf"));
    dc.n_ib = static_cast<int>(config.get_int("ft_nib"));
    dc.adam.learning_rate = config.get_double("outer_lr");
    dc.log_interval = static_cast<int>(config.get_int("log_interval"));
    dc.refit_interval = static_cast<int>(config.get_int("refit_interval"));
    dc.gam = gam_config_of(config);
    dc.hidden_layers = static_cast<int>(config.get_int("hidden_layers"));
    dc.width = static_cast<int>(config.get_int("width"));
    const TaskSpec task = make_task(family, {}, p, seed);

    const std::string dir = prepare_dir(config);
    int exit_code = 0;
    std::vector<std::string> artifacts = {"metrics.csv", "summary.csv"};
    CsvWriter csv(join(dir, "metrics.csv"), metrics_columns());
    CsvWriter summary(join(dir, "summary.csv"),
                      {"schema", "run_id", "noise_p", "seed", "noisy_mse", "corrected_mse",
                       "noisy_max_amplitude", "corrected_max_amplitude"});
    const std::string run_id = config.get("run_id");
    try {
        const DenoiseResult r = denoise_run(task, dc, seed);
        for (const auto& [name, arm] : {std::pair<std::string, const DenoiseArm*>{"denoise-noisy", &r.noisy},
                                        {"denoise-corrected", &r.corrected}}) {
            for (const FineTuneRecord& rec : arm->trace) {
                MetricsRow row;
                row.run_id = run_id;
                row.phase = name;
                row.arm = name == "denoise-noisy" ? "noisy" : "gam-corrected";
                row.task_index = 0;
                row.task = to_record(task);
                row.epoch = rec.epoch;
                row.l_pde = rec.l_pde;
                row.l_data = rec.l_data;
                row.field_mse = rec.field_mse;
                row.wall_ms = rec.wall_ms;
                csv.write(row);
            }
        }
        summary.write_line(std::to_string(kMetricsSchema) + "," + run_id + "," + format_double(p) + "," +
                           std::to_string(seed) + "," + format_double(r.noisy.field_mse) + "," +
                           format_double(r.corrected.field_mse) + "," +
                           format_double(r.noisy.max_amplitude) + "," +
                           format_double(r.corrected.max_amplitude));
        save_field(join(dir, "field_clean.txt"), r.clean);
        save_field(join(dir, "field_noisy.txt"), r.noisy.field);
        save_field(join(dir, "field_corrected.txt"), r.corrected.field);
        artifacts.insert(artifacts.end(), {"field_clean.txt", "field_noisy.txt", "field_corrected.txt"});
        log << "noisy MSE " << format_double(r.noisy.field_mse) << ", corrected MSE "
            << format_double(r.corrected.field_mse) << '\n';
    } catch (const NumericError& e) {
        MetricsRow row;
        row.run_id = run_id;
        row.phase = "denoise";
        row.status = "diverged";
        csv.write(row);
        log << "denoise diverged: " << e.what() << '\n';
        exit_code = 1;
    }
    finish_run(dir, config, "denoise", artifacts,
               {{"master", seed},
                {"denoise-init", hex_seed(derive_seed(seed, "denoise-init"))},
                {"denoise-points", hex_seed(derive_seed(seed, "denoise-points"))}},
               exit_code);
    return exit_code;
}

int cmd_solve_oracle(RunConfig config, std::ostream& log) {
    config.resolve("solve-oracle");
    const IcFamily family = family_of(config);
    const auto seed = static_cast<std::uint64_t>(config.get_int("seed"));
    std::vector<double> params = config.get_doubles("theta_list");
    if (params.empty()) {
        params.assign(static_cast<std::size_t>(family_arity(family)), 0.0);
    }
    TaskSpec task = make_task(family, params);
    task.frequency_in_y = config.get_bool("frequency_in_y") && family == IcFamily::HeatFrequency;
    const int nx = static_cast<int>(config.get_int("nx"));
    const int nt = static_cast<int>(config.get_int("nt"));
    const int refine = static_cast<int>(config.get_int("refine"));
    SolutionField field;
    if (task.equation == Equation::Burgers1D) {
        BurgersOptions o;
        o.refine = refine;
        field = solve_burgers(task, nx, nt, o);
    } else {
        HeatOptions o;
        o.refine = refine;
        field = solve_heat2d(task, nx, static_cast<int>(config.get_int("ny")), nt, o);
    }
    const std::string dir = prepare_dir(config);
    save_field(join(dir, "field.txt"), field);
    log << "wrote " << field.num_points() << " values (" << field.scheme << ")\n";
    finish_run(dir, config, "solve-oracle", {"field.txt"}, {{"master", seed}}, 0);
    return 0;
}

int cmd_export_figures_data(RunConfig config, std::ostream& log) {
    config.resolve("export-figures-data");
    std::vector<std::string> inputs;
    for (const auto& s : split(config.get("inputs"), ',')) {
        if (!trim(s).empty()) {
            inputs.emplace_back(trim(s));
        }
    }
    if (inputs.empty()) {
        throw UsageError("export-figures-data needs --inputs dir1,dir2,...");
    }
    // (phase, arm, epoch) -> field MSE of every task that logged it.
    std::map<std::tuple<std::string, std::string, int>, std::vector<double>> curves;
    std::vector<std::string> table_lines;
    for (const auto& in : inputs) {
        const CsvTable t = read_csv(join(in, "metrics.csv"));
        const std::size_t c_phase = t.column("phase"), c_arm = t.column("arm"),
                          c_epoch = t.column("epoch"), c_mse = t.column("field_mse"),
                          c_status = t.column("status");
        for (const auto& row : t.rows) {
            if (row[c_status] != "ok" || row[c_mse].empty()) {
                continue;
            }
            curves[{row[c_phase], row[c_arm], static_cast<int>(parse_int(row[c_epoch]))}].push_back(
                parse_double(row[c_mse]));
        }
        if (fs::exists(join(in, "summary.csv"))) {
            const CsvTable s = read_csv(join(in, "summary.csv"));
            if (std::find(s.columns.begin(), s.columns.end(), "task_index") != s.columns.end()) {
                for (const auto& row : s.rows) {
                    table_lines.push_back(csv_header(row));
                }
            }
        }
    }
    const std::string dir = prepare_dir(config);
    {
        CsvWriter out(join(dir, "convergence.csv"),
                      {"schema", "phase", "arm", "epoch", "n", "mean_field_mse", "sd_field_mse",
                       "ci95_half_width"});
        for (const auto& [key, v] : curves) {
            const auto& [phase, arm, epoch] = key;
            const double n = static_cast<double>(v.size());
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= n;
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
            out.write_line(std::to_string(kMetricsSchema) + "," + phase + "," + arm + "," +
                           std::to_string(epoch) + "," + std::to_string(v.size()) + "," +
                           format_double(mean) + "," + format_double(sd) + "," +
                           format_double(1.96 * sd / std::sqrt(n)));
        }
    }
    {
        CsvWriter out(join(dir, "table.csv"),
                      {"schema", "run_id", "arm", "epoch", "task_index", "task", "field_mse"});
        for (const auto& l : table_lines) {
            out.write_line(l);
        }
    }
    log << "exported " << curves.size() << " curve points from " << inputs.size() << " runs\n";
    finish_run(dir, config, "export-figures-data", {"convergence.csv", "table.csv"}, json::object(), 0);
    return 0;
}

} // namespace pinnmeta
