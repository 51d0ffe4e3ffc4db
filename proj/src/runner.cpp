#include "stereolab/runner.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "stereolab/csv.hpp"
#include "stereolab/rng.hpp"
#include "stereolab/sampler.hpp"
#include "stereolab/synthbench.hpp"

namespace stereolab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError("invalid boolean '" + v + "'");
}

std::vector<BiasLevel> parse_grid(const std::string& v) {
  if (v == "default") return default_bias_grid();
  if (v.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t colon; (colon = v.find(':', start)) != std::string::npos; start = colon + 1) {
      parts.push_back(v.substr(start, colon - start));
    }
    parts.push_back(v.substr(start));
    if (parts.size() != 3) throw ConfigError("bias_grid range must be lo:hi:step");
    return bias_grid(BiasLevel::parse(trim(parts[0])), BiasLevel::parse(trim(parts[1])),
                     BiasLevel::parse(trim(parts[2])));
  }
  std::vector<BiasLevel> out;
  for (const auto& p : split_fields(v)) out.push_back(BiasLevel::parse(trim(p)));
  return out;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

json matrix_to_json(const RecallMatrix& m) {
  json correct = json::array();
  json support = json::array();
  for (std::size_t l = 0; l < m.labels().size(); ++l) {
    json c = json::array();
    json s = json::array();
    for (std::size_t g = 0; g < m.groups().size(); ++g) {
      c.push_back(m.correct(l, g));
      s.push_back(m.support(l, g));
    }
    correct.push_back(c);
    support.push_back(s);
  }
  return json{{"correct", correct}, {"support", support}};
}

struct RunKey {
  RunKind kind;
  BiasLevel level;
  int repeat;
  friend auto operator<=>(const RunKey&, const RunKey&) = default;
};

struct Job {
  RunKind kind;
  BiasLevel level;
  std::size_t level_index;
  int repeat;
};

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.source_manifest.empty()) throw ConfigError("source_manifest is required");
  if (c.target_label.empty()) throw ConfigError("target_label is required");
  if (c.target_group.empty()) throw ConfigError("target_group is required");
  if (c.bias_grid.empty()) throw ConfigError("bias_grid is empty");
  for (std::size_t i = 1; i < c.bias_grid.size(); ++i) {
    if (!(c.bias_grid[i - 1] < c.bias_grid[i])) throw ConfigError("bias_grid must be strictly increasing");
  }
  if (c.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.classifier == ClassifierKind::external) {
    for (std::string_view ph : {"{train}", "{test}", "{out}"}) {
      if (c.external_command.find(ph) == std::string::npos) {
        throw ConfigError("external_command must contain " + std::string(ph));
      }
    }
  }
  if (c.external_timeout.count() <= 0) throw ConfigError("external_timeout_s must be > 0");
}

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& base_dir) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = unquote(trim(std::string_view(line).substr(eq + 1)));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      if (key == "source_manifest") {
        fs::path p(value);
        c.source_manifest = p.is_relative() ? base_dir / p : p;
      } else if (key == "target_label") {
        c.target_label = value;
      } else if (key == "target_group") {
        c.target_group = value;
      } else if (key == "reference_group") {
        c.reference_group = value;
      } else if (key == "bias_grid") {
        c.bias_grid = parse_grid(value);
      } else if (key == "repeats") {
        c.repeats = static_cast<int>(parse_i64(value));
      } else if (key == "base_seed") {
        c.base_seed = parse_u64(value);
      } else if (key == "classifier") {
        if (value == "builtin_centroid") {
          c.classifier = ClassifierKind::builtin_centroid;
        } else if (value == "external") {
          c.classifier = ClassifierKind::external;
        } else {
          throw ConfigError("classifier must be builtin_centroid or external");
        }
      } else if (key == "external_command") {
        c.external_command = value;
      } else if (key == "external_timeout_s") {
        c.external_timeout = std::chrono::seconds(parse_i64(value));
      } else if (key == "baseline") {
        c.baseline = parse_bool(value);
      } else if (key == "jobs") {
        c.jobs = static_cast<int>(parse_i64(value));
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const std::exception& e) {
      throw ConfigError(where + " (" + key + "): " + e.what());
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_file(path), path.parent_path());
}

std::string_view to_string(RunKind kind) { return kind == RunKind::biased ? "biased" : "baseline"; }

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t level_index, int repeat_index) {
  return SeedHasher(base_seed).add(static_cast<std::uint64_t>(level_index)).add(static_cast<std::uint64_t>(repeat_index)).value();
}

std::string run_name(RunKind kind, BiasLevel level, int repeat_index) {
  char rep[16];
  std::snprintf(rep, sizeof rep, "%02d", repeat_index);
  return std::string(to_string(kind)) + "_b" + level.str() + "_r" + rep;
}

std::string ledger_line(const RunRecord& r) {
  json j{{"kind", std::string(to_string(r.kind))},
         {"bias_level", r.bias_level.str()},
         {"repeat_index", r.repeat_index},
         {"derived_seed", r.derived_seed},
         {"train_manifest_path", r.train_manifest_path},
         {"predictions_path", r.predictions_path},
         {"train_checksum", r.train_checksum},
         {"predictions_checksum", r.predictions_checksum},
         {"train_size", r.train_size},
         {"status", r.ok ? "ok" : "failed"},
         {"error", r.error},
         {"recall_matrix", r.recall_matrix ? matrix_to_json(*r.recall_matrix) : json(nullptr)}};
  return j.dump();
}

RunRecord parse_ledger_line(std::string_view line, const LabelSet& labels, const GroupSet& groups) {
  try {
    const json j = json::parse(line);
    RunRecord r;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "biased") {
      r.kind = RunKind::biased;
    } else if (kind == "baseline") {
      r.kind = RunKind::baseline;
    } else {
      throw FormatError("unknown run kind '" + kind + "'");
    }
    r.bias_level = BiasLevel::parse(j.at("bias_level").get<std::string>());
    r.repeat_index = j.at("repeat_index").get<int>();
    r.derived_seed = j.at("derived_seed").get<std::uint64_t>();
    r.train_manifest_path = j.at("train_manifest_path").get<std::string>();
    r.predictions_path = j.at("predictions_path").get<std::string>();
    r.train_checksum = j.at("train_checksum").get<std::string>();
    r.predictions_checksum = j.at("predictions_checksum").get<std::string>();
    r.train_size = j.at("train_size").get<std::size_t>();
    r.ok = j.at("status").get<std::string>() == "ok";
    r.error = j.at("error").get<std::string>();
    const auto& m = j.at("recall_matrix");
    if (!m.is_null()) {
      r.recall_matrix = RecallMatrix(labels, groups,
                                     m.at("correct").get<std::vector<std::vector<std::size_t>>>(),
                                     m.at("support").get<std::vector<std::vector<std::size_t>>>());
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed ledger line: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed ledger line: ") + e.what());
  }
}

std::vector<RunRecord> read_ledger(const fs::path& path, const LabelSet& labels, const GroupSet& groups) {
  std::map<RunKey, RunRecord> latest;
  std::vector<RunKey> order;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (trim(line).empty()) continue;
    RunRecord r;
    try {
      r = parse_ledger_line(line, labels, groups);
    } catch (const FormatError&) {
      // A torn final line from an interrupted run is dropped; that run reruns.
      if (pos >= text.size()) break;
      throw;
    }
    RunKey key{r.kind, r.bias_level, r.repeat_index};
    if (!latest.count(key)) order.push_back(key);
    latest[key] = std::move(r);
  }
  std::vector<RunRecord> out;
  for (const auto& k : order) out.push_back(latest[k]);
  return out;
}

PredictionSet external_predict(std::string_view command_template, const fs::path& train,
                               const fs::path& test, const fs::path& out, std::chrono::seconds timeout,
                               const std::optional<fs::path>& log_path) {
  std::string cmd(command_template);
  for (std::string_view ph : {"{train}", "{test}", "{out}"}) {
    if (cmd.find(ph) == std::string::npos) {
      throw ExternalCommandError("command template lacks placeholder " + std::string(ph));
    }
  }
  cmd = replace_all(cmd, "{train}", shell_quote(fs::absolute(train).string()));
  cmd = replace_all(cmd, "{test}", shell_quote(fs::absolute(test).string()));
  cmd = replace_all(cmd, "{out}", shell_quote(fs::absolute(out).string()));
  std::error_code ec;
  fs::remove(out, ec);

  const std::string log = log_path ? log_path->string() : std::string("/dev/null");
  const pid_t pid = fork();
  if (pid < 0) throw ExternalCommandError("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) throw ExternalCommandError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw ExternalCommandError("external command timed out after " + std::to_string(timeout.count()) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
    throw ExternalCommandError("external command exited with status " + std::to_string(code));
  }
  if (!fs::exists(out)) throw ExternalCommandError("external command did not write " + out.string());
  try {
    return load_predictions(out);
  } catch (const FormatError& e) {
    throw ExternalCommandError(std::string("malformed predictions: ") + e.what());
  }
}

GridResult run_grid(const ExperimentConfig& config, const fs::path& out_dir) {
  validate(config);
  const Manifest source = load_manifest(config.source_manifest);
  const auto& labels = source.labels();
  const auto& groups = source.groups();
  if (!labels.contains(config.target_label)) {
    throw ConfigError("target_label '" + config.target_label + "' not in manifest");
  }
  if (!groups.contains(config.target_group)) {
    throw ConfigError("target_group '" + config.target_group + "' not in manifest");
  }
  std::string reference;
  if (config.reference_group) {
    reference = *config.reference_group;
  } else if (groups.size() == 2) {
    reference = groups[0] == config.target_group ? groups[1] : groups[0];
  } else {
    throw ConfigError("reference_group is required when there are more than two groups");
  }
  if (!groups.contains(reference) || reference == config.target_group) {
    throw ConfigError("reference_group '" + reference + "' must be a different group of the manifest");
  }
  if (config.classifier == ClassifierKind::builtin_centroid && source.feature_dim() == 0) {
    throw ConfigError("builtin classifier needs a manifest with feature columns");
  }
  if (source.split_size(Split::test) == 0) throw ConfigError("source manifest has no test split");

  fs::create_directories(out_dir / "runs");
  const fs::path test_path = out_dir / "test.csv";
  const Manifest test_manifest = source.with_records(source.split_records(Split::test));
  save_manifest(test_manifest, test_path);

  std::vector<Job> jobs;
  for (std::size_t li = 0; li < config.bias_grid.size(); ++li) {
    for (int rep = 0; rep < config.repeats; ++rep) {
      jobs.push_back({RunKind::biased, config.bias_grid[li], li, rep});
      if (config.baseline) jobs.push_back({RunKind::baseline, config.bias_grid[li], li, rep});
    }
  }

  const fs::path ledger_path = out_dir / "ledger.jsonl";
  std::map<RunKey, RunRecord> previous;
  if (fs::exists(ledger_path)) {
    for (auto& r : read_ledger(ledger_path, labels, groups)) {
      previous[{r.kind, r.bias_level, r.repeat_index}] = std::move(r);
    }
    const std::string text = read_file(ledger_path);
    if (!text.empty() && text.back() != '\n') {
      const auto keep = text.rfind('\n');
      fs::resize_file(ledger_path, keep == std::string::npos ? 0 : keep + 1);
    }
  }

  auto intact = [&](const RunRecord& r, std::uint64_t seed) {
    if (!r.ok || r.derived_seed != seed || !r.recall_matrix) return false;
    const fs::path train = out_dir / r.train_manifest_path;
    const fs::path preds = out_dir / r.predictions_path;
    if (!fs::exists(train) || !fs::exists(preds)) return false;
    return file_checksum(train) == r.train_checksum && file_checksum(preds) == r.predictions_checksum;
  };

  auto execute_job = [&](const Job& job) -> RunRecord {
    RunRecord r;
    r.kind = job.kind;
    r.bias_level = job.level;
    r.repeat_index = job.repeat;
    r.derived_seed = derive_seed(config.base_seed, job.level_index, job.repeat);
    const std::string name = run_name(job.kind, job.level, job.repeat);
    const fs::path dir = out_dir / "runs" / name;
    r.train_manifest_path = (fs::path("runs") / name / "train.csv").generic_string();
    r.predictions_path = (fs::path("runs") / name / "predictions.csv").generic_string();
    try {
      fs::create_directories(dir);
      const Manifest balanced = balanced_subsample(source, SeedHasher(r.derived_seed).add("balance").value());
      // Both kinds draw from the same per-cell streams, so a baseline differs
      // from its biased twin only in the target label's cells.
      const std::uint64_t derive = SeedHasher(r.derived_seed).add("derive").value();
      const Manifest derived =
          job.kind == RunKind::biased
              ? biased_subsample(balanced, config.target_label, config.target_group, job.level.value(), derive)
              : stratified_subsample(balanced, job.level.size_ratio(), derive);
      const Manifest train = derived.with_records(derived.split_records(Split::train));
      r.train_size = train.size();
      const fs::path train_path = out_dir / r.train_manifest_path;
      const fs::path preds_path = out_dir / r.predictions_path;
      save_manifest(train, train_path);
      r.train_checksum = file_checksum(train_path);

      PredictionSet preds;
      if (config.classifier == ClassifierKind::builtin_centroid) {
        preds = predict(fit_centroid(train), test_manifest);
        save_predictions(preds, preds_path);
      } else {
        preds = external_predict(config.external_command, train_path, test_path, preds_path,
                                 config.external_timeout, dir / "external.log");
      }
      r.predictions_checksum = file_checksum(preds_path);
      r.recall_matrix = evaluate(source, preds);
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
      r.recall_matrix.reset();
    }
    return r;
  };

  GridResult result;
  std::vector<std::optional<RunRecord>> done(jobs.size());
  std::vector<bool> reused(jobs.size(), false);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    auto it = previous.find({j.kind, j.level, j.repeat});
    if (it != previous.end() && intact(it->second, derive_seed(config.base_seed, j.level_index, j.repeat))) {
      done[i] = it->second;
      reused[i] = true;
      ++result.resumed;
    }
  }

  // Completed runs are appended in grid order, so the ledger content does not
  // depend on the number of worker threads.
  std::ofstream ledger(ledger_path, std::ios::app | std::ios::binary);
  if (!ledger) throw IoError("cannot open " + ledger_path.string());
  std::mutex mu;
  std::size_t next_commit = 0;
  auto commit_ready = [&]() {
    while (next_commit < jobs.size() && done[next_commit]) {
      if (!reused[next_commit]) {
        ledger << ledger_line(*done[next_commit]) << '\n';
        ledger.flush();
      }
      ++next_commit;
    }
  };
  {
    std::lock_guard lock(mu);
    commit_ready();
  }

  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= jobs.size()) return;
      if (reused[i]) continue;
      RunRecord r = execute_job(jobs[i]);
      std::lock_guard lock(mu);
      done[i] = std::move(r);
      commit_ready();
    }
  };
  const int threads = std::min<int>(config.jobs, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  ledger.close();

  for (auto& d : done) result.records.push_back(std::move(*d));

  for (RunKind kind : {RunKind::biased, RunKind::baseline}) {
    auto& target = kind == RunKind::biased ? result.biased : result.baseline;
    for (BiasLevel level : config.bias_grid) {
      std::vector<RecallMatrix> matrices;
      std::vector<double> sizes;
      for (const auto& r : result.records) {
        if (r.kind != kind || r.bias_level != level || !r.ok) continue;
        matrices.push_back(*r.recall_matrix);
        sizes.push_back(static_cast<double>(r.train_size));
      }
      if (matrices.empty()) continue;
      target.emplace(level, aggregate(matrices, config.target_group, reference, sizes));
    }
  }
  for (const auto& r : result.records) {
    if (!r.ok) ++result.failed;
  }
  if (!result.biased.empty()) emit_reports(result.biased, out_dir / "reports", "biased");
  if (!result.baseline.empty()) emit_reports(result.baseline, out_dir / "reports", "baseline");
  return result;
}

}  // namespace stereolab
