#ifndef QEMLAB_COMMANDS_HPP
#define QEMLAB_COMMANDS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qemlab {

// Key-value run configuration, merged from an optional config file and
// command-line overrides. Unknown keys are rejected per command.
class RunConfig {
  public:
    static RunConfig make(const std::optional<std::string>& config_path,
                          const std::vector<std::string>& overrides,
                          const std::vector<std::string>& allowed_keys);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t seed() const;
    std::string out_dir() const;

  private:
    std::map<std::string, std::string> kv_;
};

void cmd_synth(const RunConfig& cfg);
void cmd_fit(const std::string& dataset_csv, const RunConfig& cfg);
void cmd_profile(const std::string& dataset_csv, const std::string& model_json,
                 const RunConfig& cfg);
void cmd_cost(const std::string& profile_json, const RunConfig& cfg);
void cmd_validate(const std::string& suite, const RunConfig& cfg);

// Full argv-level dispatch. Returns the process exit code: 0 success,
// 1 I/O or configuration error, 2 domain error.
int run_cli(const std::vector<std::string>& args);

}  // namespace qemlab

#endif
