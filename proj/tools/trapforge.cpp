// trapforge: build labeled packet datasets from synthetic scans and filtered
// background traffic. One executable, five subcommands: daemon, campaign,
// benign, salt, reshape.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trapforge/benign.hpp"
#include "trapforge/campaign.hpp"
#include "trapforge/daemon_runtime.hpp"
#include "trapforge/dataset.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/log.hpp"
#include "trapforge/manifest.hpp"
#include "trapforge/version.hpp"

namespace tf = trapforge;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

std::uint64_t elapsed_ms(std::chrono::steady_clock::time_point since) {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - since)
                                        .count());
}

// Line and column of a byte offset, for JSON parse diagnostics.
std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

nlohmann::json parse_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tf::IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw tf::ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
  }
}

std::uint32_t parse_ip_flag(const std::string& text, const char* flag) {
  const auto ip = tf::parse_ipv4(text);
  if (!ip) throw tf::ConfigError(std::string(flag) + " '" + text + "' is not a valid IPv4 address");
  return *ip;
}

void print_stats(const tf::DatasetStats& stats) {
  std::printf("rows: %llu\n", static_cast<unsigned long long>(stats.total));
  for (const tf::ClassCount& c : stats.classes) {
    std::printf("  %-28s %12llu  %3d%%\n", c.label.c_str(),
                static_cast<unsigned long long>(c.count), c.percent);
  }
  std::printf("benign: %llu (%d%%)  attack: %llu (%d%%)\n",
              static_cast<unsigned long long>(stats.benign_count), stats.benign_percent,
              static_cast<unsigned long long>(stats.attack_count), stats.attack_percent);
}

// ---------------------------------------------------------------------------

struct DaemonArgs {
  std::uint16_t port = 6060;
  std::string address;
  std::string out_dir = ".";
  std::string inject;
  std::size_t max_sessions = 0;
};

int cmd_daemon(const DaemonArgs& args) {
  tf::DaemonOptions opts;
  opts.port = args.port;
  opts.self_ip = parse_ip_flag(args.address, "--address");
  opts.output_dir = args.out_dir;
  if (!args.inject.empty()) opts.inject = fs::path(args.inject);
  opts.max_sessions = args.max_sessions;
  fs::create_directories(opts.output_dir);

  tf::DaemonRuntime daemon(std::move(opts));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on port %u\n", daemon.port());
  std::fflush(stdout);

  daemon.run(&g_stop);

  for (const auto& path : daemon.files_written()) std::printf("wrote %s\n", path.c_str());
  std::printf("sessions: %zu\n", daemon.sessions_closed());
  return 0;
}

// ---------------------------------------------------------------------------

struct CampaignArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

int cmd_campaign(const CampaignArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  tf::CampaignConfig config = tf::parse_campaign_config(parse_json_file(args.config_path));
  if (args.seed) config.seed = *args.seed;

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);

  std::vector<std::unique_ptr<tf::InProcessTarget>> targets;
  std::vector<tf::CampaignTarget*> ptrs;
  for (const tf::TargetSpec& spec : config.targets) {
    if (spec.name.find('/') != std::string::npos || spec.name.find('\\') != std::string::npos ||
        spec.name == "." || spec.name == "..")
      throw tf::ConfigError("target name '" + spec.name + "' is not usable as a directory name");
    targets.push_back(std::make_unique<tf::InProcessTarget>(spec.name, spec.ip, config.attacker_ip,
                                                            out_dir / spec.name));
    ptrs.push_back(targets.back().get());
  }

  const tf::CampaignResult result = tf::run_campaign(config, ptrs, tf::synthetic_executor());
  for (auto& t : targets) t->shutdown();

  tf::RunManifest manifest;
  manifest.command = "campaign";
  manifest.seed = config.seed;
  manifest.seed_set = true;
  manifest.inputs = {fs::path(args.config_path)};
  manifest.parameters["attacker_ip"] = tf::format_ipv4(config.attacker_ip);
  manifest.parameters["targets"] = config.targets.size();
  manifest.parameters["attacks"] = config.attacks.size();

  for (const tf::RunRecord& run : result.runs) {
    const std::size_t frames = run.path ? tf::read_pcap_file(*run.path).frames.size() : 0;
    std::printf("wrote %s (%zu frames, %s via %s on %s)\n",
                run.path ? run.path->c_str() : run.filename.c_str(), frames, run.label.c_str(),
                run.technique.c_str(), run.target_name.c_str());
    if (run.path) manifest.outputs.push_back(*run.path);
  }
  for (const tf::RunFailure& f : result.failures) {
    std::fprintf(stderr, "trapforge: attack '%s' on %s (repetition %u) failed: %s\n",
                 f.label.c_str(), f.target_name.c_str(), f.repetition, f.error.c_str());
  }

  manifest.duration_ms = elapsed_ms(t0);
  if (!manifest.outputs.empty()) tf::write_manifest(manifest, out_dir / "campaign.manifest.json");
  return result.complete() ? 0 : 3;
}

// ---------------------------------------------------------------------------

struct BenignArgs {
  std::string in_path;
  std::string out_path;
  std::string labels_path;
  bool remove_notice = false;
  std::optional<std::uint64_t> sample_count;
  std::optional<double> sample_ratio;
  std::string mode = "stateless";
  std::uint64_t seed = 0;
};

int cmd_benign(const BenignArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const tf::CaptureFile cap = tf::read_pcap_file(args.in_path);
  tf::ExtractionTally tally;
  tf::TidyDataset ds = tf::dataset_from_capture(cap, std::nullopt, &tally);
  std::printf("extracted %zu of %zu frames", tally.extracted, cap.frames.size());
  if (tally.skipped_total()) {
    std::printf(" (skipped:");
    for (int r = 0; r < 4; ++r) {
      if (tally.skipped[r])
        std::printf(" %s=%zu", tf::skip_reason_name(static_cast<tf::SkipReason>(r)),
                    tally.skipped[r]);
    }
    std::printf(")");
  }
  std::printf("\n");

  if (!args.labels_path.empty()) {
    const tf::LabelSet labels =
        tf::parse_label_file(tf::csv::read_text_file(args.labels_path), args.labels_path);
    tf::FilterResult res = tf::filter_benign(ds.rows, labels, args.remove_notice);
    std::printf("anomaly filter: kept %zu, removed %zu of %zu (%zu descriptors)\n",
                res.report.kept_count, res.report.removed_count, res.report.input_count,
                labels.descriptors.size());
    ds.rows = std::move(res.kept);
  } else {
    std::printf("anomaly filter: no label file, removed 0 of %zu\n", ds.rows.size());
  }

  if (args.sample_count || args.sample_ratio) {
    const tf::SampleTarget target = args.sample_count
                                        ? tf::SampleTarget::of_count(*args.sample_count)
                                        : tf::SampleTarget::of_ratio(*args.sample_ratio);
    const tf::SampleMode mode =
        args.mode == "stateful" ? tf::SampleMode::stateful : tf::SampleMode::stateless;
    ds.rows = tf::sample_packets(ds.rows, target, args.seed, mode);
    std::printf("sampled %zu packets (%s)\n", ds.rows.size(), args.mode.c_str());
  }

  tf::export_csv_file(args.out_path, ds);
  std::printf("wrote %s (%zu rows)\n", args.out_path.c_str(), ds.rows.size());

  tf::RunManifest manifest;
  manifest.command = "benign";
  manifest.seed = args.seed;
  manifest.seed_set = true;
  manifest.inputs = {fs::path(args.in_path)};
  if (!args.labels_path.empty()) manifest.inputs.push_back(fs::path(args.labels_path));
  manifest.parameters["remove_notice"] = args.remove_notice;
  manifest.parameters["mode"] = args.mode;
  if (args.sample_count) manifest.parameters["sample_count"] = *args.sample_count;
  if (args.sample_ratio) manifest.parameters["sample_ratio"] = *args.sample_ratio;
  manifest.outputs = {fs::path(args.out_path)};
  manifest.duration_ms = elapsed_ms(t0);
  tf::write_manifest(manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct SaltArgs {
  std::string benign_path;
  std::vector<std::string> attack_paths;
  std::string out_path;
  std::uint64_t seed = 0;
};

std::vector<fs::path> collect_pcaps(const std::vector<std::string>& paths) {
  std::vector<fs::path> files;
  for (const std::string& p : paths) {
    const fs::path path(p);
    if (fs::is_directory(path)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pcap")
          found.push_back(entry.path());
      }
      if (found.empty()) throw tf::ConfigError("no .pcap files in directory " + path.string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(path)) {
      files.push_back(path);
    } else {
      throw tf::IoError("attack path " + path.string() + " does not exist");
    }
  }
  return files;
}

int cmd_salt(const SaltArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const tf::TidyDataset benign = tf::import_csv_file(args.benign_path);
  const std::vector<fs::path> files = collect_pcaps(args.attack_paths);

  std::vector<std::pair<std::string, tf::TidyDataset>> attacks;
  attacks.reserve(files.size());
  for (const fs::path& f : files) {
    const auto [label, ts] = tf::label_from_filename(f.filename().string());
    attacks.emplace_back(label, tf::dataset_from_capture(tf::read_pcap_file(f), label));
  }

  const tf::TidyDataset salted = tf::salt(benign, attacks, args.seed);
  tf::export_csv_file(args.out_path, salted);
  std::printf("wrote %s\n", args.out_path.c_str());
  print_stats(tf::dataset_stats(salted));

  tf::RunManifest manifest;
  manifest.command = "salt";
  manifest.seed = args.seed;
  manifest.seed_set = true;
  manifest.inputs.push_back(fs::path(args.benign_path));
  for (const fs::path& f : files) manifest.inputs.push_back(f);
  manifest.parameters["attack_files"] = files.size();
  manifest.outputs = {fs::path(args.out_path)};
  manifest.duration_ms = elapsed_ms(t0);
  tf::write_manifest(manifest);
  return 0;
}

// ---------------------------------------------------------------------------

struct ReshapeArgs {
  std::string in_path;
  std::string out_path;
  std::string mode;
};

int cmd_reshape(const ReshapeArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const tf::TidyDataset ds = tf::import_csv_file(args.in_path);

  std::size_t rows = 0;
  std::size_t cols = 0;
  if (args.mode == "stateless") {
    const tf::TidyDataset out = tf::to_stateless(ds);
    tf::export_csv_file(args.out_path, out);
    rows = out.rows.size();
    cols = out.schema.column_count();
  } else {
    const std::vector<tf::FlowRecord> flows = tf::to_stateful(ds);
    tf::export_csv_file(args.out_path, flows);
    rows = flows.size();
    cols = tf::flow_csv_columns().size();
  }
  std::printf("wrote %s (%zu rows, %zu columns, mode %s)\n", args.out_path.c_str(), rows, cols,
              args.mode.c_str());

  tf::RunManifest manifest;
  manifest.command = "reshape";
  manifest.inputs = {fs::path(args.in_path)};
  manifest.parameters["mode"] = args.mode;
  manifest.outputs = {fs::path(args.out_path)};
  manifest.duration_ms = elapsed_ms(t0);
  tf::write_manifest(manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"labeled packet dataset toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tf::kVersion));

  DaemonArgs daemon_args;
  CLI::App* daemon_cmd = app.add_subcommand("daemon", "run the capture control daemon");
  daemon_cmd->add_option("--port", daemon_args.port, "UDP control port (0 picks a free port)")
      ->default_val(6060);
  daemon_cmd->add_option("--address", daemon_args.address, "this instance's IPv4 address (capture filter destination)")
      ->required();
  daemon_cmd->add_option("--out", daemon_args.out_dir, "directory for capture files")
      ->default_val(".");
  daemon_cmd->add_option("--inject", daemon_args.inject, "pcap replayed through the filter on each session");
  daemon_cmd->add_option("--max-sessions", daemon_args.max_sessions, "exit after this many sessions (0 = run until signaled)");

  CampaignArgs campaign_args;
  CLI::App* campaign_cmd = app.add_subcommand("campaign", "run a configured attack campaign against simulated targets");
  campaign_cmd->add_option("--config", campaign_args.config_path, "campaign JSON")->required();
  campaign_cmd->add_option("--out", campaign_args.out_dir, "directory for capture files")
      ->default_val(".");
  campaign_cmd->add_option("--seed", campaign_args.seed, "override the config seed");

  BenignArgs benign_args;
  CLI::App* benign_cmd = app.add_subcommand("benign", "extract a benign dataset from a packet trace");
  benign_cmd->add_option("--in", benign_args.in_path, "input pcap")->required();
  benign_cmd->add_option("--out", benign_args.out_path, "output CSV (.gz supported)")->required();
  benign_cmd->add_option("--labels", benign_args.labels_path, "anomaly label CSV; matching packets are removed");
  benign_cmd->add_flag("--remove-notice", benign_args.remove_notice, "also remove notice-level matches");
  auto* count_opt = benign_cmd->add_option("--sample-count", benign_args.sample_count, "sample exactly N packets");
  auto* ratio_opt = benign_cmd->add_option("--sample-ratio", benign_args.sample_ratio, "sample a fraction in (0,1]");
  count_opt->excludes(ratio_opt);
  benign_cmd->add_option("--mode", benign_args.mode, "sampling mode")
      ->check(CLI::IsMember({"stateless", "stateful"}))
      ->default_val("stateless");
  benign_cmd->add_option("--seed", benign_args.seed, "sampling seed")->default_val(0);

  SaltArgs salt_args;
  CLI::App* salt_cmd = app.add_subcommand("salt", "merge benign and attack data into one labeled dataset");
  salt_cmd->add_option("--benign", salt_args.benign_path, "benign dataset CSV")->required();
  salt_cmd->add_option("--attack", salt_args.attack_paths, "attack capture file or directory (repeatable)")
      ->required();
  salt_cmd->add_option("--out", salt_args.out_path, "output CSV (.gz supported)")->required();
  salt_cmd->add_option("--seed", salt_args.seed, "shuffle seed")->default_val(0);

  ReshapeArgs reshape_args;
  CLI::App* reshape_cmd = app.add_subcommand("reshape", "project a dataset for per-packet or per-flow training");
  reshape_cmd->add_option("--in", reshape_args.in_path, "input dataset CSV")->required();
  reshape_cmd->add_option("--out", reshape_args.out_path, "output CSV (.gz supported)")->required();
  reshape_cmd->add_option("--mode", reshape_args.mode, "stateless drops context columns; stateful aggregates flows")
      ->check(CLI::IsMember({"stateless", "stateful"}))
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(daemon_cmd)) return cmd_daemon(daemon_args);
    if (app.got_subcommand(campaign_cmd)) return cmd_campaign(campaign_args);
    if (app.got_subcommand(benign_cmd)) return cmd_benign(benign_args);
    if (app.got_subcommand(salt_cmd)) return cmd_salt(salt_args);
    if (app.got_subcommand(reshape_cmd)) return cmd_reshape(reshape_args);
  } catch (const tf::ConfigError& e) {
    std::fprintf(stderr, "trapforge: config error: %s\n", e.what());
    return 2;
  } catch (const tf::SchemaMismatchError& e) {
    std::fprintf(stderr, "trapforge: schema error: %s\n", e.what());
    return 4;
  } catch (const tf::IoError& e) {
    std::fprintf(stderr, "trapforge: io error: %s\n", e.what());
    return 5;
  } catch (const tf::Error& e) {
    std::fprintf(stderr, "trapforge: error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "trapforge: error: %s\n", e.what());
    return 3;
  }
  return 0;
}
