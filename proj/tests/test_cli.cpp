// End-to-end tests that drive the built executable. The test runner exports
// TRAPFORGE_BIN with the binary's path.

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trapforge/campaign.hpp"
#include "trapforge/control.hpp"
#include "trapforge/daemon_runtime.hpp"
#include "trapforge/dataset.hpp"
#include "trapforge/csv.hpp"
#include "trapforge/pcap.hpp"
#include "trapforge/version.hpp"

using namespace trapforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("trapforge_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string bin_path() {
  const char* bin = std::getenv("TRAPFORGE_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

struct CmdResult {
  int status = -1;
  std::string output;  // stdout and stderr combined

  bool contains(const std::string& needle) const { return output.find(needle) != std::string::npos; }
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = bin_path() + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
  const int rc = ::pclose(pipe);
  res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return res;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

// A capture whose frames all parse as TCP/IPv4, from three distinct sources.
CaptureFile background_capture() {
  const ScanTechnique* syn = find_technique("syn");
  REQUIRE(syn != nullptr);
  CaptureFile cap{LinkType::ethernet, {}};
  const std::uint32_t sources[] = {0x0a000001, 0x0a090909, 0x0a000003};
  for (std::uint32_t src : sources) {
    for (const Frame& f :
         generate_scan(*syn, src, 0x0a000009, {80, 81, 82, 83, 84, 85, 86, 87, 88, 89}, 1000, src))
      cap.add_frame(f.ts_epoch_us, f.bytes);
  }
  return cap;
}

std::map<std::string, std::size_t> label_counts(const TidyDataset& ds) {
  std::map<std::string, std::size_t> counts;
  for (const PacketRecord& r : ds.rows) counts[r.label.value_or("<none>")]++;
  return counts;
}

}  // namespace

TEST_CASE("--version prints the toolkit version") {
  const CmdResult res = run_cli("--version");
  CHECK(res.status == 0);
  CHECK(res.contains(std::string(kVersion)));
}

TEST_CASE("a bare invocation is a usage error") {
  const CmdResult res = run_cli("");
  CHECK(res.status == 2);
}

TEST_CASE("campaign runs are reproducible end to end") {
  TempDir dir;
  const fs::path config = dir.path / "campaign.json";
  write_file(config, R"({
  "seed": 42,
  "attacker_ip": "10.66.0.1",
  "targets": [{"name": "alpha", "ip": "10.0.0.2"}],
  "attacks": [
    {"label": "syn_fast", "technique": "syn", "target": "alpha", "ports": "1-64"},
    {"label": "xmas_probe", "technique": "xmas", "target": "alpha", "ports": [7, 9]}
  ]
})");

  const fs::path out1 = dir.path / "run1";
  const CmdResult res = run_cli("campaign --config " + config.string() + " --out " + out1.string());
  INFO(res.output);
  REQUIRE(res.status == 0);
  CHECK(res.contains("syn_fast via syn on alpha"));
  CHECK(res.contains("xmas_probe via xmas on alpha"));

  std::vector<fs::path> captures;
  for (const auto& entry : fs::directory_iterator(out1 / "alpha")) captures.push_back(entry.path());
  REQUIRE(captures.size() == 2);

  std::map<std::string, std::size_t> frames_by_label;
  for (const fs::path& p : captures) {
    const auto [label, ts] = label_from_filename(p.filename().string());
    frames_by_label[label] = read_pcap_file(p).frames.size();
  }
  CHECK(frames_by_label.at("syn_fast") == 64);
  CHECK(frames_by_label.at("xmas_probe") == 2);

  const fs::path manifest_path = out1 / "campaign.manifest.json";
  REQUIRE(fs::exists(manifest_path));
  std::ifstream in(manifest_path);
  const nlohmann::json manifest = nlohmann::json::parse(in);
  CHECK(manifest.at("tool") == "trapforge");
  CHECK(manifest.at("command") == "campaign");
  CHECK(manifest.at("seed") == 42);
  REQUIRE(manifest.at("outputs").size() == 2);
  for (const auto& o : manifest.at("outputs")) {
    CHECK(o.at("sha256").get<std::string>().size() == 64);
  }

  // Same config, same seed, fresh directory: byte-identical captures.
  const fs::path out2 = dir.path / "run2";
  const CmdResult rerun =
      run_cli("campaign --config " + config.string() + " --out " + out2.string());
  REQUIRE(rerun.status == 0);
  std::ifstream in2(out2 / "campaign.manifest.json");
  const nlohmann::json manifest2 = nlohmann::json::parse(in2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(manifest.at("outputs")[i].at("sha256") == manifest2.at("outputs")[i].at("sha256"));
    CHECK(manifest.at("outputs")[i].at("path") == manifest2.at("outputs")[i].at("path"));
  }

  // A different seed changes the probe order and therefore the digests.
  const fs::path out3 = dir.path / "run3";
  const CmdResult reseeded = run_cli("campaign --config " + config.string() + " --out " +
                                     out3.string() + " --seed 43");
  REQUIRE(reseeded.status == 0);
  std::ifstream in3(out3 / "campaign.manifest.json");
  const nlohmann::json manifest3 = nlohmann::json::parse(in3);
  CHECK(manifest3.at("seed") == 43);
  CHECK(manifest.at("outputs")[0].at("sha256") != manifest3.at("outputs")[0].at("sha256"));
}

TEST_CASE("campaign rejects broken input without touching the output directory") {
  TempDir dir;

  SECTION("JSON syntax errors carry file, line, and column") {
    const fs::path config = dir.path / "broken.json";
    write_file(config, "{\n  \"seed\": ,\n}\n");
    const CmdResult res = run_cli("campaign --config " + config.string());
    CHECK(res.status == 2);
    CHECK(res.contains("config error"));
    CHECK(res.contains("broken.json:2:"));
  }

  SECTION("unknown technique names the offender") {
    const fs::path config = dir.path / "campaign.json";
    write_file(config, R"({"attacks": [{"label": "x", "technique": "quantum", "target": "10.0.0.2", "ports": 80}]})");
    const CmdResult res = run_cli("campaign --config " + config.string());
    CHECK(res.status == 2);
    CHECK(res.contains("quantum"));
  }

  SECTION("missing config file is an io error") {
    const CmdResult res = run_cli("campaign --config " + (dir.path / "absent.json").string());
    CHECK(res.status == 5);
    CHECK(res.contains("io error"));
  }
}

TEST_CASE("benign extracts, filters, samples, and leaves a manifest") {
  TempDir dir;
  const fs::path in_pcap = dir.path / "background.pcap";
  write_pcap_file(in_pcap, background_capture());

  const fs::path labels = dir.path / "labels.csv";
  write_file(labels,
             "taxonomy,src_ip,src_port,dst_ip,dst_port,proto\n"
             "anomalous,10.9.9.9,,,,\n");

  SECTION("label-driven removal") {
    const fs::path out = dir.path / "benign.csv";
    const CmdResult res = run_cli("benign --in " + in_pcap.string() + " --out " + out.string() +
                                  " --labels " + labels.string());
    INFO(res.output);
    REQUIRE(res.status == 0);
    CHECK(res.contains("extracted 30 of 30 frames"));
    CHECK(res.contains("kept 20, removed 10 of 30"));

    const TidyDataset ds = import_csv_file(out);
    CHECK(ds.rows.size() == 20);
    for (const PacketRecord& r : ds.rows) CHECK(r.src_ip != 0x0a090909);

    const fs::path manifest_path = out.string() + ".manifest.json";
    REQUIRE(fs::exists(manifest_path));
    std::ifstream in(manifest_path);
    const nlohmann::json manifest = nlohmann::json::parse(in);
    CHECK(manifest.at("command") == "benign");
    CHECK(manifest.at("inputs").size() == 2);
    CHECK(manifest.at("outputs")[0].at("path") == "benign.csv");
  }

  SECTION("sampling to an exact count") {
    const fs::path out = dir.path / "sampled.csv";
    const CmdResult res = run_cli("benign --in " + in_pcap.string() + " --out " + out.string() +
                                  " --sample-count 12 --seed 3");
    REQUIRE(res.status == 0);
    CHECK(res.contains("sampled 12 packets (stateless)"));
    CHECK(import_csv_file(out).rows.size() == 12);
  }

  SECTION("asking for more packets than exist is a data error") {
    const CmdResult res = run_cli("benign --in " + in_pcap.string() + " --out " +
                                  (dir.path / "x.csv").string() + " --sample-count 1000");
    CHECK(res.status == 3);
    CHECK(res.contains("trapforge: error"));
  }

  SECTION("count and ratio are mutually exclusive") {
    const CmdResult res = run_cli("benign --in " + in_pcap.string() + " --out " +
                                  (dir.path / "x.csv").string() +
                                  " --sample-count 5 --sample-ratio 0.5");
    CHECK(res.status == 2);
  }
}

TEST_CASE("salt merges benign and attack data and prints the class balance") {
  TempDir dir;

  // Benign side: extract the background capture to a CSV with the full schema.
  const fs::path benign_csv = dir.path / "benign.csv";
  export_csv_file(benign_csv, dataset_from_capture(background_capture()));

  // Attack side: a directory of labeled captures.
  const fs::path attack_dir = dir.path / "attacks";
  fs::create_directories(attack_dir);
  const ScanTechnique* syn = find_technique("syn");
  const ScanTechnique* xmas = find_technique("xmas");
  CaptureFile syn_cap{LinkType::ethernet, {}};
  for (const Frame& f : generate_scan(*syn, 0x0a420001, 0x0a000002,
                                      {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 1000, 5))
    syn_cap.add_frame(f.ts_epoch_us, f.bytes);
  write_pcap_file(attack_dir / "syn_fast_1700000000.pcap", syn_cap);
  CaptureFile xmas_cap{LinkType::ethernet, {}};
  for (const Frame& f : generate_scan(*xmas, 0x0a420001, 0x0a000002, {80, 443, 8080}, 1000, 6))
    xmas_cap.add_frame(f.ts_epoch_us, f.bytes);
  write_pcap_file(attack_dir / "xmas_slow_1700000001.pcap", xmas_cap);

  SECTION("happy path") {
    const fs::path out = dir.path / "salted.csv";
    const CmdResult res = run_cli("salt --benign " + benign_csv.string() + " --attack " +
                                  attack_dir.string() + " --out " + out.string() + " --seed 9");
    INFO(res.output);
    REQUIRE(res.status == 0);
    CHECK(res.contains("rows: 43"));
    CHECK(res.contains("benign: 30"));
    CHECK(res.contains("attack: 13"));

    const auto counts = label_counts(import_csv_file(out));
    CHECK(counts.at("benign") == 30);
    CHECK(counts.at("syn_fast") == 10);
    CHECK(counts.at("xmas_slow") == 3);
  }

  SECTION("a stateless benign dataset is a schema error") {
    const fs::path stateless_csv = dir.path / "stateless.csv";
    export_csv_file(stateless_csv, to_stateless(import_csv_file(benign_csv)));
    const CmdResult res = run_cli("salt --benign " + stateless_csv.string() + " --attack " +
                                  attack_dir.string() + " --out " + (dir.path / "x.csv").string());
    CHECK(res.status == 4);
    CHECK(res.contains("schema error"));
    CHECK(res.contains("ts_epoch_us"));
  }

  SECTION("an empty attack directory is a config error") {
    const fs::path empty = dir.path / "empty";
    fs::create_directories(empty);
    const CmdResult res = run_cli("salt --benign " + benign_csv.string() + " --attack " +
                                  empty.string() + " --out " + (dir.path / "x.csv").string());
    CHECK(res.status == 2);
    CHECK(res.contains("no .pcap files"));
  }
}

TEST_CASE("reshape projects a dataset for each training style") {
  TempDir dir;
  const fs::path tidy_csv = dir.path / "tidy.csv";
  export_csv_file(tidy_csv, dataset_from_capture(background_capture(), std::string("probe")));

  SECTION("stateless drops the context columns") {
    const fs::path out = dir.path / "stateless.csv";
    const CmdResult res =
        run_cli("reshape --in " + tidy_csv.string() + " --out " + out.string() + " --mode stateless");
    REQUIRE(res.status == 0);
    CHECK(res.contains("30 rows, 36 columns, mode stateless"));

    const std::string text = csv::read_text_file(out);
    const std::string header = text.substr(0, text.find('\n'));
    CHECK(header.find("ts_epoch_us") == std::string::npos);
    CHECK(header.substr(0, 10) == "frame_len,");
  }

  SECTION("stateful aggregates per flow") {
    const fs::path out = dir.path / "flows.csv";
    const CmdResult res =
        run_cli("reshape --in " + tidy_csv.string() + " --out " + out.string() + " --mode stateful");
    REQUIRE(res.status == 0);
    // 3 sources x 10 destination ports, one flow per (src, src_port, dst, dst_port).
    CHECK(res.contains("mode stateful"));
    const std::string text = csv::read_text_file(out);
    CHECK(text.substr(0, text.find('\n')) ==
          "ip_a,port_a,ip_b,port_b,proto,pkt_count,total_bytes,duration_us,mean_interarrival_us,"
          "min_payload_len,max_payload_len,syn_count,fin_count,rst_count,distinct_dst_ports,label");
  }

  SECTION("an unknown mode is a usage error") {
    const CmdResult res = run_cli("reshape --in " + tidy_csv.string() + " --out " +
                                  (dir.path / "x.csv").string() + " --mode sideways");
    CHECK(res.status == 2);
    CHECK(res.contains("stateless"));
  }
}

TEST_CASE("the daemon records a controller-driven session") {
  TempDir dir;
  const fs::path capture_dir = dir.path / "captures";

  // Keepers must look like controller -> daemon traffic: over loopback the
  // daemon sees our datagrams coming from 127.0.0.1.
  const ScanTechnique* syn = find_technique("syn");
  CaptureFile inject{LinkType::ethernet, {}};
  for (const Frame& f : generate_scan(*syn, 0x7f000001, 0x0a000002, {22, 80, 443, 8080}, 1000, 7))
    inject.add_frame(f.ts_epoch_us, f.bytes);
  for (const Frame& f : generate_scan(*syn, 0x0a000002, 0x7f000001, {9000}, 1000, 8))
    inject.add_frame(f.ts_epoch_us, f.bytes);  // wrong direction, must be dropped
  const fs::path inject_path = dir.path / "inject.pcap";
  write_pcap_file(inject_path, inject);

  const std::string cmd = bin_path() + " daemon --port 0 --address 10.0.0.2 --out " +
                          capture_dir.string() + " --inject " + inject_path.string() +
                          " --max-sessions 1 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);

  char line[256];
  REQUIRE(std::fgets(line, sizeof line, pipe) != nullptr);
  unsigned port = 0;
  REQUIRE(std::sscanf(line, "listening on port %u", &port) == 1);
  REQUIRE(port > 0);

  UdpControlTransport transport({0x7f000001, static_cast<std::uint16_t>(port)});
  const std::string name = controller_run(
      transport, "cli_session", [] {}, [] { return static_cast<std::uint32_t>(std::time(nullptr)); });
  CHECK(label_from_filename(name).first == "cli_session");

  std::string rest;
  while (std::fgets(line, sizeof line, pipe) != nullptr) rest += line;
  const int rc = ::pclose(pipe);
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(rest.find("sessions: 1") != std::string::npos);
  CHECK(rest.find("wrote ") != std::string::npos);

  std::vector<fs::path> captures;
  for (const auto& entry : fs::directory_iterator(capture_dir)) captures.push_back(entry.path());
  REQUIRE(captures.size() == 1);
  CHECK(label_from_filename(captures[0].filename().string()).first == "cli_session");
  CHECK(read_pcap_file(captures[0]).frames.size() == 4);
}

TEST_CASE("the daemon reports an occupied port as an io error") {
  UdpSocket holder;
  holder.bind(0, 0);
  const CmdResult res =
      run_cli("daemon --port " + std::to_string(holder.local_port()) + " --address 10.0.0.2");
  CHECK(res.status == 5);
  CHECK(res.contains("io error"));
  CHECK(res.contains("already bound"));
}

TEST_CASE("the daemon validates its address flag") {
  const CmdResult res = run_cli("daemon --port 0 --address not-an-ip");
  CHECK(res.status == 2);
  CHECK(res.contains("--address"));
}
