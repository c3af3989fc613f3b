#include "ticketlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "ticketlab/csv.hpp"

namespace ticketlab {

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::train_full: return "train_full";
        case ExperimentKind::imp_layerwise: return "imp_layerwise";
        case ExperimentKind::imp_global: return "imp_global";
        case ExperimentKind::rg_observables: return "rg_observables";
        case ExperimentKind::transfer_nlo_to_hh: return "transfer_nlo_to_hh";
        case ExperimentKind::transfer_hh_to_nlo: return "transfer_hh_to_nlo";
    }
    return "?";
}

ExperimentKind experiment_kind_from(const std::string& name, int line) {
    for (ExperimentKind k :
         {ExperimentKind::train_full, ExperimentKind::imp_layerwise, ExperimentKind::imp_global,
          ExperimentKind::rg_observables, ExperimentKind::transfer_nlo_to_hh,
          ExperimentKind::transfer_hh_to_nlo})
        if (to_string(k) == name) return k;
    throw ConfigError(line, "unknown experiment kind '" + name + "'");
}

SystemSpec SystemSpecFromConfig(const ExperimentConfig& cfg) {
    std::string name = cfg.system_name;
    if (name.empty()) {
        switch (cfg.kind) {
            case ExperimentKind::transfer_nlo_to_hh: name = "hh"; break;
            case ExperimentKind::transfer_hh_to_nlo: name = "nlo"; break;
            default: name = "nlo"; break;
        }
    }
    SystemSpec sys = make_system_named(name);
    if (cfg.initial_state) {
        if (static_cast<int>(cfg.initial_state->size()) != sys.dim)
            throw std::invalid_argument("initial_state length does not match system dimension");
        sys.initial_state = *cfg.initial_state;
    }
    return sys;
}

SystemSpec ExperimentConfig::make_target_system() const { return SystemSpecFromConfig(*this); }

ArchSpec ExperimentConfig::make_arch() const {
    ArchSpec arch;
    arch.hidden = hidden;
    arch.output_dim = make_target_system().dim;
    return arch;
}

void ExperimentConfig::apply_paper_fidelity() {
    if (!paper_fidelity) return;
    train.epochs = 50000;
    prune.max_iterations = 1000;
}

void ExperimentConfig::validate() const {
    train.validate();
    prune.validate(make_arch());
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    if (ticket_stride < 1) throw std::invalid_argument("ticket_stride must be >= 1");
    for (double t : t_max_sweep)
        if (!(t > 0.0)) throw std::invalid_argument("t_max_sweep entries must be > 0");
    if (prune_layer_1based < 0 ||
        prune_layer_1based > static_cast<int>(hidden.size()) + 1)
        throw std::invalid_argument("prune layer out of range");
}

namespace {

struct Line {
    int number;
    std::string section;
    std::string key;
    std::string value;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const Line& ln) {
    try {
        std::size_t used = 0;
        const double v = std::stod(ln.value, &used);
        if (used != ln.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(ln.number, "expected a number for '" + ln.key + "', got '" + ln.value + "'");
    }
}

long long parse_int(const Line& ln) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(ln.value, &used);
        if (used != ln.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(ln.number, "expected an integer for '" + ln.key + "', got '" + ln.value + "'");
    }
}

uint64_t parse_u64(const Line& ln) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(ln.value, &used);
        if (used != ln.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(ln.number, "expected an unsigned integer for '" + ln.key + "'");
    }
}

bool parse_bool(const Line& ln) {
    if (ln.value == "true" || ln.value == "1") return true;
    if (ln.value == "false" || ln.value == "0") return false;
    throw ConfigError(ln.number, "expected true/false for '" + ln.key + "'");
}

std::vector<double> parse_reals(const Line& ln) {
    std::istringstream in(ln.value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("");
        } catch (...) {
            throw ConfigError(ln.number, "expected numbers for '" + ln.key + "'");
        }
    }
    if (out.empty()) throw ConfigError(ln.number, "empty list for '" + ln.key + "'");
    return out;
}

std::vector<int> parse_ints(const Line& ln) {
    std::vector<int> out;
    for (double v : parse_reals(ln)) {
        if (v != std::floor(v)) throw ConfigError(ln.number, "expected integers for '" + ln.key + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void check_range(const Line& ln, double v, double lo, double hi, bool lo_open, bool hi_open) {
    const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok)
        throw ConfigError(ln.number, "'" + ln.key + "' = " + ln.value + " out of range");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              std::optional<ExperimentKind> implied_kind) {
    ExperimentConfig cfg;
    bool kind_seen = false;
    bool floor_seen = false;
    bool scope_seen = false;
    std::string prune_scope_value;
    int prune_scope_line = 0;

    std::istringstream in(text);
    std::string raw;
    int number = 0;
    std::string section;
    std::vector<Line> lines;
    while (std::getline(in, raw)) {
        ++number;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(number, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "system" && section != "arch" && section != "train" &&
                section != "prune" && section != "transfer")
                throw ConfigError(number, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(number, "expected 'key = value'");
        Line ln{number, section, trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
        if (ln.key.empty()) throw ConfigError(number, "empty key");
        if (ln.value.empty()) throw ConfigError(number, "empty value for '" + ln.key + "'");
        lines.push_back(std::move(ln));
    }

    for (const Line& ln : lines) {
        if (ln.section.empty()) {
            if (ln.key == "experiment") {
                cfg.kind = experiment_kind_from(ln.value, ln.number);
                kind_seen = true;
            } else if (ln.key == "seed") {
                cfg.seed = parse_u64(ln);
            } else if (ln.key == "out") {
                cfg.out = ln.value;
            } else if (ln.key == "input_run") {
                cfg.input_run = ln.value;
            } else if (ln.key == "parallelism") {
                const long long v = parse_int(ln);
                check_range(ln, static_cast<double>(v), 1, 64, false, false);
                cfg.parallelism = static_cast<int>(v);
            } else if (ln.key == "paper_fidelity") {
                cfg.paper_fidelity = parse_bool(ln);
            } else {
                throw ConfigError(ln.number, "unknown key '" + ln.key + "'");
            }
        } else if (ln.section == "system") {
            if (ln.key == "name") {
                if (ln.value != "nlo" && ln.value != "hh")
                    throw ConfigError(ln.number, "system name must be nlo or hh");
                cfg.system_name = ln.value;
            } else if (ln.key == "t_max") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 1e6, true, false);
                cfg.train.t_max = v;
            } else if (ln.key == "initial_state") {
                cfg.initial_state = parse_reals(ln);
            } else {
                throw ConfigError(ln.number, "unknown key '" + ln.key + "' in [system]");
            }
        } else if (ln.section == "arch") {
            if (ln.key == "hidden") {
                cfg.hidden = parse_ints(ln);
                for (int h : cfg.hidden)
                    if (h < 1 || h > 4096)
                        throw ConfigError(ln.number, "hidden widths out of range");
                if (cfg.hidden.empty()) throw ConfigError(ln.number, "hidden may not be empty");
            } else {
                throw ConfigError(ln.number, "unknown key '" + ln.key + "' in [arch]");
            }
        } else if (ln.section == "train") {
            if (ln.key == "epochs") {
                const long long v = parse_int(ln);
                check_range(ln, static_cast<double>(v), 0, 1e9, false, false);
                cfg.train.epochs = static_cast<int>(v);
            } else if (ln.key == "learning_rate") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 10.0, true, false);
                cfg.train.learning_rate = v;
            } else if (ln.key == "lr_min") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 10.0, false, false);
                cfg.train.lr_min = v;
            } else if (ln.key == "lr_schedule") {
                if (ln.value == "cosine")
                    cfg.train.lr_schedule = LrSchedule::cosine;
                else if (ln.value == "constant")
                    cfg.train.lr_schedule = LrSchedule::constant;
                else
                    throw ConfigError(ln.number, "lr_schedule must be cosine or constant");
            } else if (ln.key == "grid_points") {
                const long long v = parse_int(ln);
                check_range(ln, static_cast<double>(v), 2, 1e7, false, false);
                cfg.train.grid_points = static_cast<int>(v);
            } else if (ln.key == "beta1") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 1.0, false, true);
                cfg.train.beta1 = v;
            } else if (ln.key == "beta2") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 1.0, false, true);
                cfg.train.beta2 = v;
            } else if (ln.key == "adam_epsilon") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 1.0, true, false);
                cfg.train.adam_epsilon = v;
            } else if (ln.key == "engine") {
                if (ln.value == "fused")
                    cfg.train.engine = GradEngine::fused;
                else if (ln.value == "tape")
                    cfg.train.engine = GradEngine::tape;
                else
                    throw ConfigError(ln.number, "engine must be fused or tape");
            } else {
                throw ConfigError(ln.number, "unknown key '" + ln.key + "' in [train]");
            }
        } else if (ln.section == "prune") {
            if (ln.key == "scope") {
                prune_scope_value = ln.value;
                prune_scope_line = ln.number;
                scope_seen = true;
            } else if (ln.key == "layer") {
                const long long v = parse_int(ln);
                check_range(ln, static_cast<double>(v), 1, 64, false, false);
                cfg.prune_layer_1based = static_cast<int>(v);
            } else if (ln.key == "rate") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 1.0, true, true);
                cfg.prune.rate = v;
            } else if (ln.key == "floor") {
                const double v = parse_real(ln);
                check_range(ln, v, 0.0, 1.0, true, true);
                cfg.prune.floor_density = v;
                floor_seen = true;
            } else if (ln.key == "max_iterations") {
                const long long v = parse_int(ln);
                check_range(ln, static_cast<double>(v), 0, 100000, false, false);
                cfg.prune.max_iterations = static_cast<int>(v);
            } else {
                throw ConfigError(ln.number, "unknown key '" + ln.key + "' in [prune]");
            }
        } else if (ln.section == "transfer") {
            if (ln.key == "t_max_sweep") {
                cfg.t_max_sweep = parse_reals(ln);
                for (double v : cfg.t_max_sweep) check_range(ln, v, 0.0, 1e6, true, false);
            } else if (ln.key == "carry_source_init") {
                cfg.carry_source_init = parse_bool(ln);
            } else if (ln.key == "ticket_stride") {
                const long long v = parse_int(ln);
                check_range(ln, static_cast<double>(v), 1, 1000, false, false);
                cfg.ticket_stride = static_cast<int>(v);
            } else {
                throw ConfigError(ln.number, "unknown key '" + ln.key + "' in [transfer]");
            }
        }
    }

    if (implied_kind) {
        if (kind_seen && cfg.kind != *implied_kind)
            throw ConfigError(0, "config experiment kind '" + to_string(cfg.kind) +
                                     "' conflicts with subcommand '" + to_string(*implied_kind) +
                                     "'");
        cfg.kind = *implied_kind;
        kind_seen = true;
    }
    if (!kind_seen) throw ConfigError(0, "missing 'experiment =' and no subcommand implies one");

    if (scope_seen) {
        if (prune_scope_value == "global")
            cfg.prune.scope = PruneScope::global;
        else if (prune_scope_value == "layer")
            cfg.prune.scope = PruneScope::single_layer;
        else if (prune_scope_value == "layerwise_all")
            cfg.prune.scope = PruneScope::layerwise_all;
        else
            throw ConfigError(prune_scope_line, "scope must be global, layer, or layerwise_all");
    } else {
        cfg.prune.scope = cfg.kind == ExperimentKind::imp_layerwise ? PruneScope::single_layer
                                                                    : PruneScope::global;
    }
    if (!floor_seen)
        cfg.prune.floor_density = cfg.prune.scope == PruneScope::global ? 0.05 : 0.10;
    if (cfg.prune.scope == PruneScope::single_layer && cfg.prune_layer_1based > 0)
        cfg.prune.layer = cfg.prune_layer_1based - 1;

    cfg.apply_paper_fidelity();
    cfg.validate();
    return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
    std::string out;
    auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    kv("experiment", to_string(cfg.kind));
    kv("seed", std::to_string(cfg.seed));
    kv("parallelism", std::to_string(cfg.parallelism));
    kv("paper_fidelity", cfg.paper_fidelity ? "true" : "false");
    if (!cfg.input_run.empty()) kv("input_run", cfg.input_run.string());

    out += "[system]\n";
    SystemSpec sys = cfg.make_target_system();
    kv("name", sys.name);
    kv("t_max", format_double(cfg.train.t_max));
    std::string ic;
    for (double v : sys.initial_state) ic += (ic.empty() ? "" : " ") + format_double(v);
    kv("initial_state", ic);

    out += "[arch]\n";
    std::string h;
    for (int v : cfg.hidden) h += (h.empty() ? "" : " ") + std::to_string(v);
    kv("hidden", h);

    out += "[train]\n";
    kv("epochs", std::to_string(cfg.train.epochs));
    kv("learning_rate", format_double(cfg.train.learning_rate));
    kv("lr_schedule", cfg.train.lr_schedule == LrSchedule::cosine ? "cosine" : "constant");
    kv("lr_min", format_double(cfg.train.lr_min));
    kv("grid_points", std::to_string(cfg.train.grid_points));
    kv("beta1", format_double(cfg.train.beta1));
    kv("beta2", format_double(cfg.train.beta2));
    kv("adam_epsilon", format_double(cfg.train.adam_epsilon));
    kv("engine", cfg.train.engine == GradEngine::fused ? "fused" : "tape");

    out += "[prune]\n";
    kv("scope", cfg.prune.scope == PruneScope::global          ? "global"
                : cfg.prune.scope == PruneScope::single_layer ? "layer"
                                                              : "layerwise_all");
    if (cfg.prune.scope == PruneScope::single_layer)
        kv("layer", std::to_string(cfg.prune_layer_1based));
    kv("rate", format_double(cfg.prune.rate));
    kv("floor", format_double(cfg.prune.floor_density));
    kv("max_iterations", std::to_string(cfg.prune.max_iterations));

    out += "[transfer]\n";
    std::string sweep;
    TransferOptions defaults;
    const auto& tmaxes = cfg.t_max_sweep.empty() ? defaults.t_max_sweep : cfg.t_max_sweep;
    for (double v : tmaxes) sweep += (sweep.empty() ? "" : " ") + format_double(v);
    kv("t_max_sweep", sweep);
    kv("carry_source_init", cfg.carry_source_init ? "true" : "false");
    kv("ticket_stride", std::to_string(cfg.ticket_stride));
    return out;
}

}  // namespace ticketlab
