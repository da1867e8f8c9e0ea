#include "cbp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cbp {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string format_real(double x) {
    std::ostringstream out;
    out.precision(17);
    out << x;
    return out.str();
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
    KeyValues kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        kv.set(key, value);
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
    if (it != entries_.end())
        it->second = value;
    else
        entries_.emplace_back(key, value);
}

void KeyValues::apply_overrides(const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("override '" + a + "' is not of the form key=value");
        set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
    }
}

bool KeyValues::has(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KeyValues::get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return std::nullopt;
}

void KeyValues::require_known(const std::set<std::string>& allowed,
                              const std::vector<std::string>& allowed_prefixes) const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : entries_) {
        if (allowed.count(k)) continue;
        const bool prefixed = std::any_of(allowed_prefixes.begin(), allowed_prefixes.end(), [&](const auto& p) {
            return k.size() > p.size() && k.compare(0, p.size(), p) == 0;
        });
        if (!prefixed) unknown.push_back(k);
    }
    if (unknown.empty()) return;
    std::string msg = origin_ + ": unknown key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
}

std::string KeyValues::to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

const std::set<std::string>& model_keys() {
    static const std::set<std::string> keys = {"n",    "p",      "r",       "a_R",     "a_B",
                                               "seed", "regime", "alpha_R", "alpha_B", "q"};
    return keys;
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double x = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(x)) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + value + "' is not a real number");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    std::int64_t x = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, x);
    if (ec == std::errc() && ptr == end) return x;
    // Accept integral reals written in scientific notation (1e5).
    const double d = parse_real(key, value);
    if (d != std::floor(d) || std::abs(d) > 9e15)
        throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
    return static_cast<std::int64_t>(d);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t x = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, x);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': '" + value + "' is not an unsigned 64-bit integer");
    return x;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("key '" + key + "': empty list element");
        out.push_back(parse_real(key, item));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

ModelConfig model_from_config(const KeyValues& kv) {
    auto required = [&](const char* key) {
        auto v = kv.get(key);
        if (!v) throw ConfigError(std::string("missing required key '") + key + "'");
        return *v;
    };
    ModelConfig cfg;
    auto& params = cfg.params;
    params.n = parse_int("n", required("n"));
    params.p = parse_real("p", required("p"));
    params.r = static_cast<int>(parse_int("r", required("r")));
    if (auto v = kv.get("seed")) params.seed = parse_u64("seed", *v);

    std::optional<double> q;
    if (auto v = kv.get("q")) q = parse_real("q", *v);
    if (auto v = kv.get("regime")) {
        const Regime regime = parse_regime(*v);
        if (!kv.has("alpha_R") || !kv.has("alpha_B"))
            throw ConfigError("a regime declaration needs alpha_R and alpha_B");
        const double alpha_R = parse_real("alpha_R", *kv.get("alpha_R"));
        const double alpha_B = parse_real("alpha_B", *kv.get("alpha_B"));
        try {
            cfg.regime = RegimeSpec::for_instance(regime, alpha_R, alpha_B, params.n, params.p, params.r, q);
        } catch (const HardInvariantViolation& e) {
            throw ConfigError(e.what());
        }
    } else if (kv.has("alpha_R") || kv.has("alpha_B") || q) {
        throw ConfigError("alpha_R, alpha_B and q require a 'regime' key");
    }

    if (auto v = kv.get("a_R")) {
        params.a_R = parse_int("a_R", *v);
    } else if (cfg.regime) {
        params.a_R = seed_count(cfg.regime->alpha_R(), cfg.regime->q());
        cfg.seeds_from_alpha = true;
    }
    if (auto v = kv.get("a_B")) {
        params.a_B = parse_int("a_B", *v);
    } else if (cfg.regime) {
        params.a_B = seed_count(cfg.regime->alpha_B(), cfg.regime->q());
        cfg.seeds_from_alpha = true;
    }
    return cfg;
}

std::string to_config_text(const ModelParams& params, const std::optional<RegimeSpec>& regime) {
    std::ostringstream out;
    out << "n = " << params.n << "\n"
        << "p = " << format_real(params.p) << "\n"
        << "r = " << params.r << "\n"
        << "a_R = " << params.a_R << "\n"
        << "a_B = " << params.a_B << "\n"
        << "seed = " << params.seed << "\n";
    if (regime) {
        out << "regime = " << to_string(regime->regime()) << "\n"
            << "alpha_R = " << format_real(regime->alpha_R()) << "\n"
            << "alpha_B = " << format_real(regime->alpha_B()) << "\n"
            << "q = " << format_real(regime->q()) << "\n";
    }
    return out.str();
}

}  // namespace cbp
