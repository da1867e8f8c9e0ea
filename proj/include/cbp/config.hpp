#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cbp/model.hpp"

namespace cbp {

/// Flat `key = value` file: one pair per line, `#` starts a comment, blank
/// lines ignored. Later occurrences of a key override earlier ones.
class KeyValues {
public:
    static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
    /// Throws ConfigError naming the path when the file is missing or unreadable.
    static KeyValues load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    /// Applies `key=value` overrides (last wins).
    void apply_overrides(const std::vector<std::string>& assignments);

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    /// Throws ConfigError listing every key not in `allowed` and not matching one of
    /// the `allowed_prefixes`.
    void require_known(const std::set<std::string>& allowed,
                       const std::vector<std::string>& allowed_prefixes = {}) const;

    std::string to_text() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::string origin_ = "<string>";
};

/// Model keys recognised in every config file.
const std::set<std::string>& model_keys();

/// Instance plus optional regime, resolved from a config.
struct ModelConfig {
    ModelParams params;
    std::optional<RegimeSpec> regime;
    /// True when a_R / a_B were derived as floor(alpha * q) rather than given.
    bool seeds_from_alpha = false;
};

/// n, p and r are required. When a regime is declared, alpha_R and alpha_B are
/// required and missing seed counts default to floor(alpha_S * q). Does not check
/// for unknown keys; see KeyValues::require_known.
ModelConfig model_from_config(const KeyValues& kv);

/// Inverse of model_from_config (emits explicit a_R / a_B).
std::string to_config_text(const ModelParams& params, const std::optional<RegimeSpec>& regime);

double parse_real(const std::string& key, const std::string& value);
std::int64_t parse_int(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
std::vector<double> parse_real_list(const std::string& key, const std::string& value);

}  // namespace cbp
