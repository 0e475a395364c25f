#include "pivotlab/synth.hpp"

#include <algorithm>
#include <array>
#include <random>

namespace pivotlab::synth {

namespace {

using nlohmann::json;
using Rng = std::mt19937_64;

constexpr std::array<std::string_view, 24> kBenignDomains = {
    "google.com",        "www.google.com",   "microsoft.com",   "windowsupdate.com",
    "bing.com",          "yahoo.com",        "amazon.com",      "apple.com",
    "facebook.com",      "twitter.com",      "wikipedia.org",   "cloudflare.com",
    "akamai.net",        "msftncsi.com",     "live.com",        "office.com",
    "github.com",        "youtube.com",      "linkedin.com",    "baidu.com",
    "yandex.ru",         "adobe.com",        "dropbox.com",     "digicert.com"};

constexpr std::array<Port, 8> kPopularPorts = {80, 443, 53, 22, 445, 3389, 25, 8080};

constexpr std::array<std::string_view, 6> kFamilies = {"ramnit", "allaple", "virut",
                                                       "sality", "emotet", "zbot"};

// Independent stream per generator so toggling one part of a scenario does
// not perturb the others.
Rng stream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  return Rng(seq);
}

template <typename T>
T uniform(Rng& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::string random_hex(Rng& rng, std::size_t len) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(len, '0');
  for (auto& c : s) c = kHex[uniform<int>(rng, 0, 15)];
  return s;
}

std::string random_word(Rng& rng, std::size_t len) {
  std::string s(len, 'a');
  for (auto& c : s) c = static_cast<char>('a' + uniform<int>(rng, 0, 25));
  return s;
}

std::string random_ssdeep(Rng& rng) {
  static constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  auto chunk = [&](std::size_t n) {
    std::string s(n, 'A');
    for (auto& c : s) c = kB64[uniform<int>(rng, 0, 63)];
    return s;
  };
  const int block = 3 << uniform<int>(rng, 4, 12);
  return std::to_string(block) + ":" + chunk(24) + ":" + chunk(12);
}

HostSignature make_signature(const std::string& ip, const json& services) {
  json doc = {{"ip_str", ip}, {"data", services}};
  return parse_host_signature(doc.dump());
}

std::pair<std::string, std::string> canonical(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

TrafficSession session(std::int64_t t, HostIndex src, HostIndex dst, Port sport, Port dport,
                       Rng& rng) {
  TrafficSession s;
  s.min_start_time = t;
  s.src_index = src;
  s.dst_index = dst;
  s.src_port = sport;
  s.dst_port = dport;
  s.tvolume = uniform<std::uint64_t>(rng, 200, 20000);
  s.rtvolume = uniform<std::uint64_t>(rng, 200, 200000);
  s.pkt = s.tvolume / 500 + 1;
  s.rpkt = s.rtvolume / 500 + 1;
  s.cnt = 1;
  s.failed_num = coin(rng, 0.05) ? 1 : 0;
  s.path = dport == 53 ? "udp" : "tcp";
  return s;
}

Port ephemeral(Rng& rng) { return uniform<Port>(rng, 32768, 60999); }

}  // namespace

std::span<const std::string_view> benign_domain_names() { return kBenignDomains; }

void ScenarioSpec::validate() const {
  if (n_operators < 1 || malware_per_operator < 1 || domains_per_operator < 1)
    throw ArgumentError("operator counts must be at least 1");
  if (n_operators > 65536) throw ArgumentError("at most 65536 operators fit the address plan");
  if (domains_per_operator > 127) throw ArgumentError("at most 127 domains per operator fit the address plan");
  if (benign_domain_count > kBenignDomains.size())
    throw ArgumentError("benign_domain_count " + std::to_string(benign_domain_count) +
                        " exceeds the " + std::to_string(kBenignDomains.size()) +
                        " embedded benign domain names");
  if (popularity_threshold < 1) throw ArgumentError("popularity_threshold must be at least 1");
  if (malware_per_operator > popularity_threshold)
    throw ArgumentError("malware_per_operator exceeds the popularity threshold");

  const auto& t = traffic;
  if (t.host_count < t.server_count + 2 || t.server_count < 1)
    throw ArgumentError("traffic needs at least one server and two clients");
  if (t.bucket_count < 1 || t.sessions_per_host < 1)
    throw ArgumentError("traffic bucket_count and sessions_per_host must be at least 1");
  const std::size_t clients = t.host_count - t.server_count;
  if (t.scan.enabled) {
    if (t.scan.port_count < 1 || t.scan.port_count > 500)
      throw ArgumentError("scan port_count must be in 1..500");
    if (t.scan.target && *t.scan.target >= t.host_count)
      throw ArgumentError("scan target is not a host of the scenario");
  }
  if (t.lateral.enabled) {
    if (t.lateral.path_length < 2) throw ArgumentError("lateral path_length must be at least 2");
    const std::size_t usable = clients - (t.scan.enabled ? 1 : 0);
    if (t.lateral.path_length > usable)
      throw ArgumentError("host count too small for a lateral path of " +
                          std::to_string(t.lateral.path_length) + " hosts");
  }
  if (t.bindshell.enabled) {
    if (t.bindshell.window_gap_seconds < 0 ||
        t.bindshell.window_gap_seconds > bindshell::kDefaultWindowSeconds)
      throw ArgumentError("bind-shell gap must lie inside the pairing window");
    if (t.bindshell.exploit_port == t.bindshell.shell_port)
      throw ArgumentError("bind-shell phases need distinct destination ports");
  }
}

OperatorCorpus gen_operator_corpus(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng = stream(spec.rng_seed, 1);
  OperatorCorpus out;

  for (std::size_t i = 0; i < spec.benign_domain_count; ++i) {
    std::string d(kBenignDomains[i]);
    out.benign_domains.push_back(d);
    for (int k = 1; k <= 2; ++k) {
      auto ip = "198.51." + std::to_string(i) + "." + std::to_string(k);
      out.resolve[d].insert(ip);
      out.signatures.push_back(make_signature(
          ip, json::array({{{"port", 80}, {"product", "gws"}},
                           {{"port", 443}, {"product", "gws"}, {"ssl", "TLSv1.2"}}})));
    }
  }

  auto add_file = [&](const std::string& sha, const std::string& ssdeep) {
    out.files.push_back({sha, random_hex(rng, 32), ssdeep, uniform<std::uint64_t>(rng, 10'000, 2'000'000)});
  };
  auto contact = [&](const std::string& sha, const std::string& domain) {
    const auto& ips = out.resolve.at(domain);
    auto pick = uniform<std::size_t>(rng, 0, ips.size() - 1);
    out.comms.push_back({sha, domain, *std::next(ips.begin(), static_cast<std::ptrdiff_t>(pick))});
  };

  std::set<std::string> used_sha;
  auto fresh_sha = [&] {
    std::string s;
    do s = random_hex(rng, 64);
    while (!used_sha.insert(s).second);
    return s;
  };

  for (std::size_t o = 0; o < spec.n_operators; ++o) {
    // Operators reuse one host build, so their addresses share a service profile.
    json profile = json::array(
        {{{"port", 22}, {"product", "OpenSSH"}, {"version", "7." + std::to_string(uniform(rng, 0, 9))}},
         {{"port", 80}, {"product", "nginx"}, {"version", "1." + std::to_string(uniform(rng, 10, 25))}},
         {{"port", 3306}, {"product", "MySQL"}, {"version", "5." + std::to_string(uniform(rng, 1, 7))}}});
    std::vector<std::string> domains;
    const auto prefix = random_word(rng, 6);
    for (std::size_t j = 0; j < spec.domains_per_operator; ++j) {
      auto d = prefix + std::to_string(o) + "-" + std::to_string(j) + ".example";
      domains.push_back(d);
      const int n_ips = uniform(rng, 1, 2);
      for (int k = 0; k < n_ips; ++k) {
        auto ip = "10." + std::to_string(o / 256) + "." + std::to_string(o % 256) + "." +
                  std::to_string(2 * j + 1 + k);
        out.resolve[d].insert(ip);
        out.signatures.push_back(make_signature(ip, profile));
      }
    }

    std::vector<std::string> members;
    std::map<std::string, std::size_t> contacts;
    const auto family_ssdeep = random_ssdeep(rng);
    for (std::size_t m = 0; m < spec.malware_per_operator; ++m) {
      auto sha = fresh_sha();
      // Colored variants of one build often keep the fuzzy hash.
      add_file(sha, coin(rng, 0.5) ? family_ssdeep : random_ssdeep(rng));
      contact(sha, domains[0]);
      ++contacts[domains[0]];
      for (std::size_t j = 1; j < domains.size(); ++j) {
        if (!coin(rng, 0.5)) continue;
        contact(sha, domains[j]);
        ++contacts[domains[j]];
      }
      for (const auto& d : out.benign_domains)
        if (coin(rng, 0.5)) contact(sha, d);
      members.push_back(sha);
    }

    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        out.truth.malware_pairs.insert(canonical(members[a], members[b]));
    for (const auto& [d, n] : contacts) {
      if (n < 2) continue;
      const auto& ips = out.resolve.at(d);
      for (auto i = ips.begin(); i != ips.end(); ++i)
        for (auto k = std::next(i); k != ips.end(); ++k) out.truth.host_pairs.insert(canonical(*i, *k));
    }
  }

  // Connectivity-check samples push every benign domain past the popularity
  // threshold.
  if (!out.benign_domains.empty()) {
    for (std::uint64_t f = 0; f <= spec.popularity_threshold; ++f) {
      auto sha = fresh_sha();
      add_file(sha, random_ssdeep(rng));
      for (const auto& d : out.benign_domains) contact(sha, d);
    }
  }
  return out;
}

TrafficScenario gen_traffic_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto& t = spec.traffic;
  Rng rng = stream(spec.rng_seed, 2);
  TrafficScenario out;

  const HostIndex servers = t.server_count;
  const HostIndex hosts = t.host_count;
  const std::int64_t span = static_cast<std::int64_t>(t.bucket_count) * 600;
  auto random_time = [&] { return t.start_time + uniform<std::int64_t>(rng, 0, span - 1); };
  auto random_client = [&] { return uniform<HostIndex>(rng, servers, hosts - 1); };

  std::vector<std::vector<Port>> services(servers);
  for (auto& s : services) {
    std::vector<Port> ports(kPopularPorts.begin(), kPopularPorts.end());
    std::shuffle(ports.begin(), ports.end(), rng);
    s.assign(ports.begin(), ports.begin() + 2);
  }
  auto pick_peers = [&](HostIndex self, std::size_t want) {
    std::vector<HostIndex> all;
    for (HostIndex h = 0; h < servers; ++h)
      if (h != self) all.push_back(h);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min(want, all.size()));
    return all;
  };

  for (HostIndex h = 0; h < hosts; ++h) {
    auto peers = pick_peers(h, h < servers ? 2 : 3);
    if (peers.empty()) continue;
    for (std::size_t k = 0; k < t.sessions_per_host; ++k) {
      auto dst = peers[uniform<std::size_t>(rng, 0, peers.size() - 1)];
      const auto& ports = services[dst];
      auto dport = ports[uniform<std::size_t>(rng, 0, ports.size() - 1)];
      out.sessions.push_back(session(random_time(), h, dst, ephemeral(rng), dport, rng));
    }
  }

  std::optional<HostIndex> scanner;
  if (t.scan.enabled) {
    scanner = random_client();
    auto target = t.scan.target.value_or(uniform<HostIndex>(rng, 0, servers - 1));
    std::set<Port> excluded(kPopularPorts.begin(), kPopularPorts.end());
    excluded.insert(t.bindshell.shell_port);
    excluded.insert(t.bindshell.exploit_port);
    std::set<Port> ports;
    while (ports.size() < t.scan.port_count) {
      auto p = uniform<Port>(rng, 1024, 65535);
      if (!excluded.contains(p)) ports.insert(p);
    }
    const auto bucket = uniform<std::int64_t>(rng, 0, static_cast<std::int64_t>(t.bucket_count) - 1);
    const auto t0 = t.start_time + bucket * 600 +
                    uniform<std::int64_t>(rng, 0, 599 - static_cast<std::int64_t>(ports.size()));
    std::int64_t i = 0;
    for (auto p : ports) {
      auto s = session(t0 + i++, *scanner, target, ephemeral(rng), p, rng);
      s.tvolume = 60;
      s.rtvolume = 0;
      s.pkt = 1;
      s.rpkt = 0;
      s.failed_num = 1;
      out.sessions.push_back(std::move(s));
    }
    out.truth.scanners.push_back(*scanner);
  }

  if (t.lateral.enabled) {
    std::vector<HostIndex> clients;
    for (HostIndex h = servers; h < hosts; ++h)
      if (h != scanner) clients.push_back(h);
    std::shuffle(clients.begin(), clients.end(), rng);
    clients.resize(t.lateral.path_length);
    auto when = random_time();
    for (std::size_t i = 0; i + 1 < clients.size(); ++i) {
      out.sessions.push_back(session(when, clients[i], clients[i + 1], ephemeral(rng), 445, rng));
      when += uniform<std::int64_t>(rng, 60, 300);
    }
    out.truth.lateral_path = clients;
  }

  if (t.bindshell.enabled) {
    HostIndex attacker;
    do attacker = random_client();
    while (attacker == scanner);
    auto victim = uniform<HostIndex>(rng, 0, servers - 1);
    auto when = t.start_time + uniform<std::int64_t>(rng, 0, std::max<std::int64_t>(0, span - 1 - t.bindshell.window_gap_seconds));
    auto exploit = session(when, attacker, victim, ephemeral(rng), t.bindshell.exploit_port, rng);
    auto shell = session(when + t.bindshell.window_gap_seconds, attacker, victim, ephemeral(rng),
                         t.bindshell.shell_port, rng);
    exploit.failed_num = 0;
    shell.failed_num = 0;
    out.sessions.push_back(exploit);
    out.sessions.push_back(shell);
    out.truth.bindshell_pairs.push_back(
        {attacker, victim, when, t.bindshell.exploit_port, t.bindshell.shell_port});
  }

  std::sort(out.sessions.begin(), out.sessions.end(), [](const TrafficSession& a, const TrafficSession& b) {
    return std::tie(a.min_start_time, a.src_index, a.dst_index, a.src_port, a.dst_port) <
           std::tie(b.min_start_time, b.src_index, b.dst_index, b.src_port, b.dst_port);
  });
  return out;
}

FileCorpus gen_file_corpus(const ScenarioSpec& spec) {
  Rng rng = stream(spec.rng_seed, 3);
  FileCorpus out;
  for (std::size_t i = 0; i < spec.file_count; ++i) {
    const auto size = uniform<std::size_t>(rng, 256, 4096);
    std::string content = "MZ";
    // Mix of repeated section padding and random bytes.
    while (content.size() < size) {
      if (coin(rng, 0.3)) content.append(uniform<std::size_t>(rng, 4, 64), '\0');
      else content.push_back(static_cast<char>(uniform<int>(rng, 0, 255)));
    }
    content.resize(size);
    out.contents.push_back(std::move(content));

    VerdictRecord v;
    v.file_index = i;
    auto roll = uniform<int>(rng, 0, 9);
    v.verdict = roll < 6 ? Verdict::kBenign : roll < 9 ? Verdict::kMalware : Verdict::kGreyware;
    if (v.verdict != Verdict::kBenign) {
      auto tags = uniform<int>(rng, 0, 2);
      for (int k = 0; k < tags; ++k)
        v.family_tags.emplace_back(kFamilies[uniform<std::size_t>(rng, 0, kFamilies.size() - 1)]);
    }
    out.verdicts.push_back(std::move(v));
  }
  return out;
}

json to_json(const GroundTruth& truth) {
  json j;
  auto pairs = [](const auto& set) {
    json arr = json::array();
    for (const auto& [a, b] : set) arr.push_back({a, b});
    return arr;
  };
  j["malware_pairs"] = pairs(truth.malware_pairs);
  j["host_pairs"] = pairs(truth.host_pairs);
  j["scanners"] = truth.scanners;
  j["lateral_path"] = truth.lateral_path;
  j["bindshell_pairs"] = json::array();
  for (const auto& k : truth.bindshell_pairs) {
    j["bindshell_pairs"].push_back({{"source", k.source},
                                    {"destination", k.destination},
                                    {"start_time_phase1", k.start_time_phase1},
                                    {"dst_port_phase1", k.dst_port_phase1},
                                    {"dst_port_phase2", k.dst_port_phase2}});
  }
  return j;
}

}  // namespace pivotlab::synth
