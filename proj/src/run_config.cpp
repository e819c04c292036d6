#include "pinnmeta/run_config.hpp"

#include "pinnmeta/errors.hpp"
#include "pinnmeta/format.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace pinnmeta {

const std::vector<ConfigKey>& RunConfig::keys() {
    static const std::vector<ConfigKey> k = {
        {"equation", "burgers", "burgers | heat2d"},
        {"ic_family", "", "burgers: sincos | sin-only; heat2d: amplitude | frequency"},
        {"frequency_in_y", "false", "heat frequency family: use cos(b2 pi y)"},
        {"arm", "gampinn", "random | mamlpinn | gampinn"},
        {"seed", "1", "master seed"},
        {"epochs", "", "meta epochs (meta-train) or training epochs (fine-tune, denoise)"},
        {"tasks", "5", "tasks per meta batch"},
        {"inner_steps", "1", "inner gradient steps"},
        {"inner_lr", "0.005", "inner step size"},
        {"outer_lr", "0.005", "Adam rate of the outer loop and of fine-tuning"},
        {"support_nf", "20", "support collocation points"},
        {"support_nib", "10", "support initial/boundary points"},
        {"query_nf", "20", "query collocation points"},
        {"query_nib", "10", "query initial/boundary points"},
        {"outer_mode", "first-order", "first-order | second-order"},
        {"epsilon", "0.001", "meta-loss convergence threshold"},
        {"fixed_task_pool", "false", "sample the meta task batch once"},
        {"gam_basis", "12", "B-spline functions per feature"},
        {"gam_lambda", "0.001", "second-difference penalty weight"},
        {"gam_tolerance", "1e-06", "backfitting tolerance"},
        {"gam_max_cycles", "100", "backfitting cycle cap"},
        {"gam_mode", "smoothed-residual", "smoothed-residual | literal-mean"},
        {"hidden_layers", "7", "hidden layers"},
        {"width", "20", "units per hidden layer"},
        {"ft_tasks", "10", "held-out tasks for fine-tune"},
        {"theta_list", "", "explicit held-out parameters, ';' or ',' separated (one per task)"},
        {"ft_nf", "10000", "fine-tune collocation points, random arm"},
        {"ft_nib", "100", "fine-tune initial/boundary points, random arm"},
        {"ft_meta_nf", "10000", "fine-tune collocation points, meta arms"},
        {"ft_meta_nib", "100", "fine-tune initial/boundary points, meta arms"},
        {"ft_meta_resample", "false", "meta arms draw a fresh point set every epoch"},
        {"snapshot", "", "meta-trained parameters for fine-tune of a meta arm"},
        {"log_interval", "50", "epochs between logged rows"},
        {"noise_p", "0", "noise weight p for denoise"},
        {"refit_interval", "50", "epochs between GAM refits in denoise"},
        {"nx", "", "oracle x intervals"},
        {"ny", "", "oracle y intervals"},
        {"nt", "", "oracle t intervals"},
        {"refine", "1", "oracle internal refinement"},
        {"threads", "1", "worker threads"},
        {"run_id", "", "run name (default derived from the command)"},
        {"out", "", "output directory (default $PINNMETA_OUTPUT_ROOT/<run_id>)"},
        {"inputs", "", "run directories for export-figures-data, ',' separated"},
    };
    return k;
}

bool RunConfig::known(const std::string& key) {
    const auto& k = keys();
    return std::any_of(k.begin(), k.end(), [&](const ConfigKey& c) { return c.name == key; });
}

RunConfig::RunConfig() {
    for (const auto& k : keys()) {
        values_[k.name] = k.default_value;
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!known(key)) {
        throw UsageError("unknown configuration key '" + key + "'");
    }
    values_[key] = value;
}

void RunConfig::load(std::istream& is, const std::string& origin) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        std::string_view body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (!known(key)) {
            throw UsageError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        values_[key] = value;
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw UsageError("cannot open config file " + path);
    }
    load(is, path);
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw UsageError("unknown configuration key '" + key + "'");
    }
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return parse_double(get(key));
    } catch (const UsageError&) {
        throw UsageError("configuration key '" + key + "' needs a number, got '" + get(key) + "'");
    }
}

long long RunConfig::get_int(const std::string& key) const {
    try {
        return parse_int(get(key));
    } catch (const UsageError&) {
        throw UsageError("configuration key '" + key + "' needs an integer, got '" + get(key) + "'");
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("configuration key '" + key + "' needs true/false, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    std::string v = get(key);
    std::replace(v.begin(), v.end(), ';', ',');
    std::vector<double> out;
    for (const auto& tok : split(v, ',')) {
        const std::string_view t = trim(tok);
        if (!t.empty()) {
            out.push_back(parse_double(t));
        }
    }
    return out;
}

void RunConfig::resolve(const std::string& subcommand) {
    const Equation eq = parse_equation(get("equation"));
    values_["equation"] = to_string(eq);
    if (get("ic_family").empty()) {
        values_["ic_family"] = to_string(eq == Equation::Heat2D ? IcFamily::HeatAmplitude
                                         : subcommand == "denoise" ? IcFamily::BurgersSinOnly
                                                                   : IcFamily::BurgersSinCos);
    }
    const IcFamily fam = parse_ic_family(get("ic_family"));
    if (equation_of(fam) != eq) {
        throw UsageError("ic_family " + to_string(fam) + " does not belong to equation " + to_string(eq));
    }
    values_["ic_family"] = to_string(fam);
    values_["arm"] = to_string(parse_arm(get("arm")));
    values_["outer_mode"] = to_string(parse_outer_mode(get("outer_mode")));
    values_["gam_mode"] = to_string(parse_gam_mode(get("gam_mode")));
    if (get("epochs").empty()) {
        values_["epochs"] = subcommand == "meta-train" ? "7000" : "2000";
    }
    const bool heat = eq == Equation::Heat2D;
    if (get("nx").empty()) values_["nx"] = heat ? "128" : "512";
    if (get("ny").empty()) values_["ny"] = "128";
    if (get("nt").empty()) values_["nt"] = heat ? "256" : "1024";

    for (const char* k : {"seed", "epochs", "tasks", "inner_steps", "support_nf", "support_nib",
                          "query_nf", "query_nib", "gam_basis", "gam_max_cycles", "hidden_layers",
                          "width", "ft_tasks", "ft_nf", "ft_nib", "ft_meta_nf", "ft_meta_nib",
                          "log_interval", "refit_interval", "nx", "ny", "nt", "refine", "threads"}) {
        if (get_int(k) < 0) {
            throw UsageError("configuration key '" + std::string(k) + "' must be >= 0");
        }
    }
    for (const char* k : {"inner_lr", "outer_lr", "epsilon", "gam_lambda", "gam_tolerance", "noise_p"}) {
        get_double(k);
    }
    for (const char* k : {"fixed_task_pool", "ft_meta_resample", "frequency_in_y"}) {
        get_bool(k);
    }
    get_doubles("theta_list");
    if (get_int("threads") < 1 || get_int("log_interval") < 1 || get_int("refit_interval") < 1) {
        throw UsageError("threads, log_interval and refit_interval must be >= 1");
    }
    meta_config_of(*this).validate();
    if (get("run_id").empty()) {
        std::string id = subcommand + "-" + get("equation") + "-" + get("ic_family");
        if (subcommand == "meta-train" || subcommand == "fine-tune") {
            id += "-" + get("arm");
        }
        if (subcommand == "denoise") {
            id += "-p" + get("noise_p");
        }
        values_["run_id"] = id + "-seed" + get("seed");
    }
}

void RunConfig::write(std::ostream& os) const {
    for (const auto& [k, v] : values_) {
        os << k << " = " << v << '\n';
    }
}

IcFamily family_of(const RunConfig& config) { return parse_ic_family(config.get("ic_family")); }

GamConfig gam_config_of(const RunConfig& config) {
    GamConfig g;
    g.n_basis = static_cast<int>(config.get_int("gam_basis"));
    g.lambda = config.get_double("gam_lambda");
    g.tolerance = config.get_double("gam_tolerance");
    g.max_cycles = static_cast<int>(config.get_int("gam_max_cycles"));
    return g;
}

MetaConfig meta_config_of(const RunConfig& config) {
    MetaConfig m;
    m.family = family_of(config);
    m.tasks_per_batch = static_cast<int>(config.get_int("tasks"));
    m.inner_steps = static_cast<int>(config.get_int("inner_steps"));
    m.inner_lr = config.get_double("inner_lr");
    m.outer_lr = config.get_double("outer_lr");
    m.meta_epochs = static_cast<int>(config.get_int("epochs"));
    m.support_nf = static_cast<int>(config.get_int("support_nf"));
    m.support_nib = static_cast<int>(config.get_int("support_nib"));
    m.query_nf = static_cast<int>(config.get_int("query_nf"));
    m.query_nib = static_cast<int>(config.get_int("query_nib"));
    m.arm = parse_arm(config.get("arm"));
    m.outer_mode = parse_outer_mode(config.get("outer_mode"));
    m.epsilon = config.get_double("epsilon");
    m.gam = gam_config_of(config);
    m.gam_mode = parse_gam_mode(config.get("gam_mode"));
    m.fixed_task_pool = config.get_bool("fixed_task_pool");
    m.hidden_layers = static_cast<int>(config.get_int("hidden_layers"));
    m.width = static_cast<int>(config.get_int("width"));
    m.threads = static_cast<int>(config.get_int("threads"));
    return m;
}

} // namespace pinnmeta
