#include "gcnn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gcnn {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool looks_integer(const std::string& tok) {
    if (tok.empty()) return false;
    std::size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
    if (i == tok.size()) return false;
    return std::all_of(tok.begin() + i, tok.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::vector<std::string> split_array_items(const std::string& inner) {
    std::vector<std::string> items;
    std::string cur;
    bool in_string = false;
    for (char c : inner) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty()) items.push_back(last);
    return items;
}

KvConfig::Value parse_value(const std::string& raw, int line_no) {
    const std::string tok = trim(raw);
    if (tok.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty value");

    if (tok.front() == '[') {
        if (tok.back() != ']') {
            throw ConfigError("config line " + std::to_string(line_no) + ": unterminated array");
        }
        const auto items = split_array_items(tok.substr(1, tok.size() - 2));
        if (!items.empty() && items.front().front() == '"') {
            std::vector<std::string> out;
            for (const auto& it : items) {
                if (it.size() < 2 || it.front() != '"' || it.back() != '"') {
                    throw ConfigError("config line " + std::to_string(line_no) +
                                      ": malformed string array item '" + it + "'");
                }
                out.push_back(it.substr(1, it.size() - 2));
            }
            return out;
        }
        std::vector<double> out;
        for (const auto& it : items) {
            double v = 0.0;
            if (!parse_number(it, v)) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed number array item '" + it + "'");
            }
            out.push_back(v);
        }
        return out;
    }
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"') {
            throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string");
        }
        return tok.substr(1, tok.size() - 2);
    }
    if (tok == "true") return true;
    if (tok == "false") return false;
    double v = 0.0;
    if (!parse_number(tok, v)) {
        throw ConfigError("config line " + std::to_string(line_no) + ": cannot parse value '" +
                          tok + "'");
    }
    if (looks_integer(tok)) return static_cast<std::int64_t>(v);
    return v;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        cfg.sections_[section][key] = parse_value(line.substr(eq + 1), line_no);
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

const KvConfig::Value* KvConfig::find(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    return &kit->second;
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::int64_t KvConfig::get_int(const std::string& section, const std::string& key,
                               std::int64_t fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
    if (const auto* d = std::get_if<double>(v)) return static_cast<std::int64_t>(*d);
    throw ConfigError("config key " + section + "." + key + " is not an integer");
}

double KvConfig::get_double(const std::string& section, const std::string& key,
                            double fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (const auto* d = std::get_if<double>(v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    throw ConfigError("config key " + section + "." + key + " is not a number");
}

bool KvConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (const auto* b = std::get_if<bool>(v)) return *b;
    throw ConfigError("config key " + section + "." + key + " is not a boolean");
}

std::string KvConfig::get_string(const std::string& section, const std::string& key,
                                 const std::string& fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (const auto* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError("config key " + section + "." + key + " is not a string");
}

std::vector<double> KvConfig::get_doubles(const std::string& section, const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return {};
    if (const auto* a = std::get_if<std::vector<double>>(v)) return *a;
    if (const auto* d = std::get_if<double>(v)) return {*d};
    if (const auto* i = std::get_if<std::int64_t>(v)) return {static_cast<double>(*i)};
    throw ConfigError("config key " + section + "." + key + " is not a number array");
}

std::vector<std::string> KvConfig::get_strings(const std::string& section,
                                               const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return {};
    if (const auto* a = std::get_if<std::vector<std::string>>(v)) return *a;
    if (const auto* s = std::get_if<std::string>(v)) return {*s};
    throw ConfigError("config key " + section + "." + key + " is not a string array");
}

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
    ExperimentConfig cfg;

    // [dataset]: either explicit value lists or counts following the
    // default progressions
    const int objects = static_cast<int>(kv.get_int("dataset", "objects", 10));
    const int angles = static_cast<int>(kv.get_int("dataset", "angles", 42));
    const int size = static_cast<int>(kv.get_int("dataset", "size", 64));
    int n_distances = 4;
    int n_heights = 5;
    std::vector<double> explicit_distances, explicit_heights;
    if (kv.has("dataset", "distances")) {
        const auto arr = kv.get_doubles("dataset", "distances");
        if (arr.size() == 1 && arr[0] == std::floor(arr[0]) && arr[0] < 16.0) {
            n_distances = static_cast<int>(arr[0]);
        } else {
            explicit_distances = arr;
        }
    }
    if (kv.has("dataset", "heights")) {
        const auto arr = kv.get_doubles("dataset", "heights");
        if (arr.size() == 1 && arr[0] == std::floor(arr[0]) && arr[0] < 16.0) {
            n_heights = static_cast<int>(arr[0]);
        } else {
            explicit_heights = arr;
        }
    }
    cfg.dataset = DatasetConfig::from_counts(objects, n_distances, n_heights, angles, size);
    if (!explicit_distances.empty()) cfg.dataset.distances = explicit_distances;
    if (!explicit_heights.empty()) cfg.dataset.heights = explicit_heights;
    cfg.dataset_seed = static_cast<std::uint64_t>(kv.get_int("dataset", "seed", 42));

    // [experiment]
    const auto variants = kv.get_strings("experiment", "variants");
    if (!variants.empty()) {
        cfg.variants.clear();
        for (const auto& v : variants) cfg.variants.push_back(parse_variant(v));
    }
    const auto archs = kv.get_strings("experiment", "architectures");
    if (!archs.empty()) {
        cfg.architectures.clear();
        for (const auto& a : archs) cfg.architectures.push_back(parse_arch(a));
    }
    cfg.train_distances = kv.get_doubles("experiment", "train_distances");
    if (cfg.train_distances.empty()) cfg.train_distances = {cfg.dataset.distances.front()};
    cfg.trials = static_cast<int>(kv.get_int("experiment", "trials", 5));
    cfg.net_size = static_cast<int>(kv.get_int("experiment", "net_size", 32));
    cfg.base_seed = static_cast<std::uint64_t>(kv.get_int("experiment", "seed", 1));
    for (double s : kv.get_doubles("experiment", "seeds")) {
        cfg.trial_seeds.push_back(static_cast<std::uint64_t>(s));
    }
    cfg.save_checkpoints = kv.get_bool("experiment", "save_checkpoints", false);

    // [optim]
    cfg.optim.base_lr = kv.get_double("optim", "base_lr", 1e-2);
    cfg.optim.weight_decay = kv.get_double("optim", "weight_decay", 1e-2);
    cfg.optim.momentum = kv.get_double("optim", "momentum", 0.9);
    cfg.optim.warmup_epochs = static_cast<int>(kv.get_int("optim", "warmup_epochs", 5));
    cfg.optim.total_epochs = static_cast<int>(kv.get_int("optim", "total_epochs", 50));
    cfg.batch_size = static_cast<int>(kv.get_int("optim", "batch_size", 64));

    if (cfg.trials < 1) throw ConfigError("experiment.trials must be >= 1");
    if (cfg.variants.empty() || cfg.architectures.empty() || cfg.train_distances.empty()) {
        throw ConfigError("experiment requires non-empty variants/architectures/train_distances");
    }
    if (!cfg.trial_seeds.empty() && cfg.trial_seeds.size() != static_cast<std::size_t>(cfg.trials)) {
        throw ConfigError("experiment.seeds must list exactly `trials` seeds");
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_kv(KvConfig::parse_file(path));
}

}  // namespace gcnn
