// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "oracles.hpp"
#include "pivotlab/bindshell.hpp"
#include "pivotlab/cli.hpp"
#include "pivotlab/evaluation.hpp"
#include "pivotlab/ngrams.hpp"
#include "pivotlab/pivoting.hpp"
#include "pivotlab/synth.hpp"
#include "pivotlab/traffic.hpp"

namespace fs = std::filesystem;
using namespace pivotlab;

namespace {

// Pinned tolerances and sizes.
constexpr int kSeeds = 100;
constexpr double kPerCorpusSeconds = 5.0;
constexpr int kRequiredScanHits = 95;
constexpr int kRequiredPathHits = 95;
constexpr int kBenignPathsPerSeed = 100;
constexpr std::size_t kRoundTripRecords = 1000;
constexpr int kBucketizeCorpora = 1000;

struct Outcome {
  bool pass;
  std::string detail;
};

std::set<oracle::StringPair> positive_keys(const pivoting::LabelResult& r) {
  std::set<oracle::StringPair> out;
  for (const auto& p : r.labels)
    if (p.label == PairLabelValue::kPositive) out.emplace(p.entity_a, p.entity_b);
  return out;
}

template <typename V>
std::set<oracle::StringPair> keys_of(const std::map<oracle::StringPair, V>& m) {
  std::set<oracle::StringPair> out;
  for (const auto& [k, v] : m) out.insert(k);
  return out;
}

Outcome lift_example() {
  const double lift = evaluation::precision_lift(0.10, 1.0 / 10000.0);
  return {lift == 1000.0, "lift=" + traffic::format_real(lift)};
}

Outcome ngram_example() {
  auto h = ngrams::extract("01234", 4);
  const bool direct = h.counts == std::map<std::string, std::uint64_t>{{"0123", 1}, {"1234", 1}};
  auto d = ngrams::marginalize_prefix(h, 3);
  auto x = ngrams::extract("01234", 3);
  // Derivation misses exactly the final 3-gram.
  const bool gap = d.counts == std::map<std::string, std::uint64_t>{{"012", 1}, {"123", 1}} &&
                   x.counts.count("234") == 1 && d.counts.count("234") == 0;
  return {direct && gap, "derived 3-grams=" + std::to_string(d.counts.size())};
}

Outcome malware_oracle() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    auto comms = oracle::random_comms(rng, 2 + rng() % 199, 1 + rng() % 50);
    pivoting::PivotConfig cfg;
    cfg.max_files_per_domain = 1 + rng() % 20;
    cfg.multiclass = true;
    cfg.rng_seed = rng();
    const auto t0 = std::chrono::steady_clock::now();
    auto r = pivoting::label_malware_pairs(comms, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    worst = std::max(worst, secs);
    std::map<oracle::StringPair, std::string> classes;
    for (const auto& p : r.labels)
      if (p.label == PairLabelValue::kPositive) classes[{p.entity_a, p.entity_b}] = p.class_key.value_or("");
    if (classes != oracle::malware_positives(comms, {}, cfg.max_files_per_domain))
      return {false, "mismatch at corpus " + std::to_string(seed)};
    if (secs > kPerCorpusSeconds) return {false, "corpus " + std::to_string(seed) + " took " + std::to_string(secs) + "s"};
  }
  return {true, "slowest corpus " + std::to_string(worst) + "s"};
}

Outcome host_modes() {
  std::mt19937_64 rng(1002);
  for (int seed = 0; seed < kSeeds; ++seed) {
    auto comms = oracle::random_comms(rng, 10 + rng() % 60, 1 + rng() % 50);
    std::set<std::string> domains;
    for (const auto& c : comms) domains.insert(c.domain);
    std::vector<std::string> ips;
    for (std::size_t i = 1 + rng() % 80; i > 0; --i) ips.push_back(oracle::random_ip(rng));
    pivoting::ResolveMap resolve;
    for (const auto& d : domains)
      if (rng() % 6)
        for (std::size_t k = 1 + rng() % 3; k > 0; --k) resolve[d].insert(ips[rng() % ips.size()]);
    std::set<std::string> signed_ips;
    pivoting::SignatureMap sigs;
    for (const auto& ip : ips)
      if (rng() % 4) {
        signed_ips.insert(ip);
        sigs[ip] = HostSignature{ip, {}, ""};
      }
    pivoting::PivotConfig cfg;
    cfg.max_files_per_domain = 2 + rng() % 10;
    using M = pivoting::HostPairMode;
    auto f = pivoting::label_host_pairs(comms, cfg, resolve, &sigs, M::kSharedDomainFormula);
    auto p = pivoting::label_host_pairs(comms, cfg, resolve, &sigs, M::kSharedMalwareDomains);
    if (positive_keys(f) != keys_of(oracle::host_positives_formula(comms, {}, cfg.max_files_per_domain, resolve, &signed_ips)))
      return {false, "formula mode mismatch at seed " + std::to_string(seed)};
    if (positive_keys(p) != keys_of(oracle::host_positives_prose(comms, {}, cfg.max_files_per_domain, resolve, &signed_ips)))
      return {false, "shared-domains mode mismatch at seed " + std::to_string(seed)};
  }
  return {true, std::to_string(kSeeds) + " seeds, both modes"};
}

Outcome bucketize_oracle() {
  std::mt19937_64 rng(1003);
  for (int round = 0; round < kBucketizeCorpora; ++round) {
    auto rows = oracle::random_sessions(rng, 1 + rng() % 80, 5, 4 * 3600);
    auto out = traffic::bucketize(rows);
    auto expect = oracle::group_by(rows);
    if (out.size() != expect.size()) return {false, "group count differs at corpus " + std::to_string(round)};
    std::size_t k = 0;
    for (const auto& [key, g] : expect) {
      const auto& r = out[k++];
      if (oracle::GroupKey{oracle::floor_div(r.min_start_time, 600), r.src_index, r.dst_index, r.src_port,
                           r.dst_port, r.path} != key ||
          oracle::GroupSums{r.min_start_time, r.tvolume, r.rtvolume, r.pkt, r.rpkt, r.cnt, r.failed_num} != g)
        return {false, "group differs at corpus " + std::to_string(round)};
    }
    std::ostringstream once, twice;
    write_traffic(once, out);
    write_traffic(twice, traffic::bucketize(out));
    if (once.str() != twice.str()) return {false, "not idempotent at corpus " + std::to_string(round)};
  }
  return {true, std::to_string(kBucketizeCorpora) + " corpora"};
}

synth::ScenarioSpec traffic_spec(std::uint64_t seed) {
  synth::ScenarioSpec spec;
  spec.rng_seed = seed;
  return spec;
}

Outcome scan_rank() {
  int hits = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto t = synth::gen_traffic_scenario(traffic_spec(static_cast<std::uint64_t>(seed)));
    auto model = traffic::fit_port_model(t.sessions);
    auto ranked = traffic::rank_sources(model, t.sessions);
    if (!ranked.empty() && ranked[0].src_index == t.truth.scanners.at(0)) ++hits;
  }
  return {hits >= kRequiredScanHits, std::to_string(hits) + "/" + std::to_string(kSeeds) + " at rank 1"};
}

Outcome lateral_path() {
  int hits = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto spec = traffic_spec(static_cast<std::uint64_t>(seed));
    auto t = synth::gen_traffic_scenario(spec);
    auto g = traffic::build_access_graph(t.sessions);
    const auto& planted = t.truth.lateral_path;
    const double score = g.path_log_probability(planted);
    // Benign paths: random walks along observed edges, weighted by count.
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919);
    std::vector<HostIndex> nodes(g.nodes().begin(), g.nodes().end());
    std::vector<double> benign;
    for (int tries = 0; benign.size() < static_cast<std::size_t>(kBenignPathsPerSeed) && tries < 100 * kBenignPathsPerSeed;
         ++tries) {
      std::vector<HostIndex> walk = {nodes[rng() % nodes.size()]};
      while (walk.size() < planted.size()) {
        const auto& next = g.successors(walk.back());
        if (next.empty()) break;
        std::vector<HostIndex> to;
        std::vector<double> w;
        for (const auto& [v, c] : next) {
          to.push_back(v);
          w.push_back(static_cast<double>(c));
        }
        walk.push_back(to[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)]);
      }
      if (walk.size() == planted.size()) benign.push_back(g.path_log_probability(walk));
    }
    if (benign.empty()) continue;
    std::nth_element(benign.begin(), benign.begin() + static_cast<long>(benign.size() / 2), benign.end());
    if (score < benign[benign.size() / 2]) ++hits;
  }
  return {hits >= kRequiredPathHits, std::to_string(hits) + "/" + std::to_string(kSeeds) + " below the benign median"};
}

Outcome bindshell_oracle() {
  std::size_t largest = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto spec = traffic_spec(static_cast<std::uint64_t>(seed));
    spec.traffic.host_count = 30 + static_cast<std::size_t>(seed % 30);
    auto t = synth::gen_traffic_scenario(spec);
    if (t.sessions.size() > 1000) return {false, "scenario exceeds 1000 sessions"};
    largest = std::max(largest, t.sessions.size());
    auto p = bindshell::pair_connections(t.sessions);
    bindshell::FeatureConfig cfg;
    cfg.workers = 1 + static_cast<unsigned>(seed % 4);
    auto got = bindshell::compute_candidate_features(p.candidates, p.population, t.sessions, cfg);
    auto expect = oracle::recount_all(t.sessions, bindshell::kDefaultWindowSeconds, cfg.lookback_seconds);
    oracle::sort_fully(got);
    oracle::sort_fully(expect);
    if (got != expect) return {false, "features differ at seed " + std::to_string(seed)};
    std::set<bindshell::PairKey> keys;
    for (const auto& pair : p.population) keys.insert(bindshell::key_of(pair, t.sessions));
    if (!keys.count(t.truth.bindshell_pairs.at(0))) return {false, "planted pair missing at seed " + std::to_string(seed)};
  }
  return {true, "largest scenario " + std::to_string(largest) + " sessions"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("pivotlab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto d = [&](const std::string& name) { return (dir / name).string(); };
  {
    std::ofstream(d("a.bin"), std::ios::binary) << "MZ\x90 acceptance sample bytes for gram extraction";
    std::ofstream(d("paths.txt")) << "0,1,2\n3,4\n";
  }
  using Args = std::vector<std::string>;
  const std::vector<std::pair<std::string, std::function<Args(const std::string&)>>> runs = {
      {"synth", [&](const std::string& o) { return Args{"synth", "--out-dir", d(o), "--seed", "5"}; }},
      {"pivot-malware", [&](const std::string& o) {
         return Args{"pivot-malware", "--comms", d("s0/comms.tsv"), "--allowlist", d("s0/allowlist.txt"), "--out", d(o)};
       }},
      {"pivot-hosts", [&](const std::string& o) {
         return Args{"pivot-hosts", "--comms", d("s0/comms.tsv"), "--resolve", d("s0/resolve.tsv"),
                     "--signatures", d("s0/signatures.jsonl"), "--out", d(o)};
       }},
      {"bucketize", [&](const std::string& o) { return Args{"bucketize", "--traffic", d("s0/traffic.tsv"), "--out", d(o)}; }},
      {"scan-score", [&](const std::string& o) { return Args{"scan-score", "--traffic", d("s0/traffic.tsv"), "--out", d(o)}; }},
      {"path-score", [&](const std::string& o) {
         return Args{"path-score", "--traffic", d("s0/traffic.tsv"), "--paths", d("paths.txt"), "--out", d(o)};
       }},
      {"bindshell", [&](const std::string& o) {
         return Args{"bindshell", "--traffic", d("s0/traffic.tsv"), "--out", d(o), "--workers", "4"};
       }},
      {"ngram-extract", [&](const std::string& o) { return Args{"ngram-extract", d("a.bin"), "--out", d(o)}; }},
      {"ngram-derive", [&](const std::string& o) { return Args{"ngram-derive", "--in", d("s0/ngrams.tsv"), "--k", "2", "--out", d(o)}; }},
      {"eval", [&](const std::string& o) {
         return Args{"eval", "--pair-labels", d("s0/pairs"), "--scores", d("s0/scores"), "--out", d(o)};
       }},
  };
  std::string failed;
  std::size_t ok = 0;
  for (const auto& [name, make] : runs) {
    std::string first_out;
    bool same = true;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string target = "s" + std::to_string(attempt);
      const std::string out_name = name == "synth" ? target : name + "." + target;
      std::ostringstream out, err;
      if (name == "eval" && attempt == 0) {
        // Label and score fixtures derived from the synthetic corpus.
        std::ostringstream o2, e2;
        cli::run({"pivot-malware", "--comms", d("s0/comms.tsv"), "--out", d("s0/pairs")}, o2, e2);
        std::ofstream scores(d("s0/scores"));
        std::ifstream pairs(d("s0/pairs"));
        std::string line;
        for (double s = 1.0; std::getline(pairs, line); s += 1.0) {
          auto f = split_tabs(line);
          scores << f[0] << '|' << f[1] << '\t' << s << '\n';
        }
      }
      const int code = cli::run(make(out_name), out, err);
      if (code != 0) {
        same = false;
        break;
      }
      std::string bytes;
      if (name == "synth") {
        for (const auto& e : fs::directory_iterator(dir / out_name))
          if (e.path().filename() != "pairs" && e.path().filename() != "scores") bytes += slurp(e.path());
      } else {
        bytes = slurp(dir / out_name);
      }
      if (attempt == 0) first_out = bytes;
      else same = bytes == first_out && !bytes.empty();
    }
    if (same) ++ok;
    else failed += (failed.empty() ? "" : ",") + name;
  }
  fs::remove_all(dir);
  return {failed.empty(), std::to_string(ok) + "/" + std::to_string(runs.size()) + " subcommands" +
                              (failed.empty() ? "" : " failed: " + failed)};
}

template <typename T, typename Read, typename Write>
bool round_trips(const std::vector<T>& recs, Read read, Write write) {
  std::ostringstream out;
  write(out, recs);
  std::istringstream in(out.str());
  auto back = read(in);
  std::ostringstream again;
  write(again, back);
  return back == recs && again.str() == out.str();
}

Outcome formats() {
  std::mt19937_64 rng(1010);
  std::vector<CommunicationRecord> comms;
  std::vector<IndexedHistogram> grams;
  std::vector<VerdictRecord> verdicts;
  std::vector<HostSignature> sigs;
  for (std::size_t i = 0; i < kRoundTripRecords; ++i) {
    comms.push_back({oracle::random_hex(rng, 64), "h" + oracle::random_hex(rng, 12) + ".example", oracle::random_ip(rng)});
    IndexedHistogram h;
    h.file_index = i;
    for (int g = 0; g < 8; ++g) {
      std::string gram(4, '\0');
      for (auto& c : gram) c = static_cast<char>(rng() % 256);
      h.histogram.counts[gram] += 1 + rng() % 50;
    }
    grams.push_back(std::move(h));
    verdicts.push_back({i, static_cast<Verdict>(rng() % 3), {"fam" + std::to_string(rng() % 9)}});
    nlohmann::json doc{{"ip_str", oracle::random_ip(rng)},
                       {"data", {{{"port", rng() % 65536}, {"product", "svc" + std::to_string(rng() % 50)}}}}};
    sigs.push_back(parse_host_signature(doc.dump(), i + 1));
  }
  auto traffic_rows = oracle::random_sessions(rng, kRoundTripRecords, 40, 1 << 28);
  std::vector<std::string> bad;
  if (!round_trips(comms, read_communications, write_communications)) bad.push_back("communications");
  if (!round_trips(traffic_rows, read_traffic, write_traffic)) bad.push_back("traffic");
  if (!round_trips(grams, read_ngram_file, write_ngram_file)) bad.push_back("ngrams");
  if (!round_trips(verdicts, read_verdicts, write_verdicts)) bad.push_back("verdicts");
  if (!round_trips(sigs, read_host_signatures, write_host_signatures)) bad.push_back("signatures");
  std::string detail = std::to_string(5 - bad.size()) + "/5 formats";
  for (const auto& b : bad) detail += " " + b;
  return {bad.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"lift of the worked example is 1000", lift_example},
      {"n-gram worked example and derivation gap", ngram_example},
      {"malware pairs equal the exhaustive oracle within time", malware_oracle},
      {"host pair modes equal their oracles", host_modes},
      {"bucketize equals the group-by oracle and is idempotent", bucketize_oracle},
      {"planted scanner ranks first", scan_rank},
      {"planted lateral path scores below benign paths", lateral_path},
      {"bind-shell features equal the recount oracle", bindshell_oracle},
      {"subcommands are byte-deterministic", cli_determinism},
      {"file formats round-trip", formats},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failures;
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " (" << r.detail << ")"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
