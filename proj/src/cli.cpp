#include "pivotlab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pivotlab/atomic_output.hpp"
#include "pivotlab/bindshell.hpp"
#include "pivotlab/datamodel.hpp"
#include "pivotlab/evaluation.hpp"
#include "pivotlab/ngrams.hpp"
#include "pivotlab/pivoting.hpp"
#include "pivotlab/synth.hpp"
#include "pivotlab/traffic.hpp"

namespace pivotlab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  unsigned workers = 1;

  // shared inputs / outputs
  std::string comms, traffic, out, report;

  // pivoting
  std::string allowlist, resolve, signatures, mode = "shared_domain_formula";
  std::uint64_t max_files = 100;
  double negative_ratio = 1.0;
  std::uint64_t seed = pivoting::kDefaultSeed;
  bool multiclass = false;

  // traffic analytics
  double alpha = 1.0;
  std::int64_t scan_window = traffic::kBucketSeconds;
  std::string paths, protocol;

  // bind shell
  std::int64_t pair_window = bindshell::kDefaultWindowSeconds;
  std::int64_t lookback = bindshell::kDefaultLookbackSeconds;
  std::string noise_filter = "none", bind_labels;

  // n-grams
  std::vector<std::string> inputs;
  std::string ngram_in;
  int gram_length = 4;
  int k = 3;
  std::uint64_t first_index = 0;

  // evaluation
  std::string labels, pair_labels, predictions, scores, files;
  bool complete = false;
  std::optional<double> base_rate, precision;

  // synth
  std::string out_dir;
  synth::ScenarioSpec spec;
  bool no_scan = false, no_lateral = false, no_bindshell = false;
};

std::ifstream open_input(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::exists(path) || fs::is_directory(path)) throw UsageError(std::string(flag) + ": no such file: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string(flag) + ": cannot open " + path);
  return in;
}

void require_output(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
}

std::string config_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw UsageError("config values must be scalars or arrays of scalars");
}

// Feeds values from the JSON config into options the command line left
// unset. Keys are long option names without the leading dashes; the
// "common" section applies to any subcommand that has the option.
void apply_config(CLI::App& app, CLI::App& sub, const std::string& path) {
  std::ifstream in = open_input(path, "--config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("--config: expected a JSON object");

  auto apply_section = [&](const json& section, bool strict) {
    if (!section.is_object()) throw UsageError("--config: sections must be objects");
    for (const auto& [key, value] : section.items()) {
      CLI::Option* opt = sub.get_option_no_throw("--" + key);
      if (opt == nullptr) opt = app.get_option_no_throw("--" + key);
      if (opt == nullptr) {
        if (strict) throw UsageError("--config: unknown option '" + key + "' for " + sub.get_name());
        continue;
      }
      if (opt->count() > 0) continue;
      if (value.is_array()) {
        for (const auto& v : value) opt->add_result(config_scalar(v));
      } else {
        opt->add_result(config_scalar(value));
      }
      opt->run_callback();
    }
  };
  if (auto it = doc.find("common"); it != doc.end()) apply_section(*it, false);
  if (auto it = doc.find(sub.get_name()); it != doc.end()) apply_section(*it, true);
}

pivoting::PivotConfig pivot_config(const Options& o) {
  pivoting::PivotConfig cfg;
  cfg.max_files_per_domain = o.max_files;
  cfg.negative_ratio = o.negative_ratio;
  cfg.rng_seed = o.seed;
  cfg.multiclass = o.multiclass;
  if (!o.allowlist.empty()) {
    auto in = open_input(o.allowlist, "--allowlist");
    cfg.benign_allowlist = pivoting::read_allowlist(in);
  }
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

json summary_json(const pivoting::LabelSummary& s) {
  return {{"entities", s.entities},
          {"positives", s.positives},
          {"negatives", s.negatives},
          {"negatives_requested", s.negatives_requested},
          {"negative_shortfall", s.negative_shortfall},
          {"skipped_missing_signature", s.skipped_missing_signature},
          {"unresolved_domains", s.unresolved_domains}};
}

json write_labels(const Options& o, const pivoting::LabelResult& result, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  write_pair_labels(outputs.open(o.out), result.labels);
  auto summary = summary_json(result.summary);
  const std::string report = o.report.empty() ? o.out + ".report.json" : o.report;
  outputs.open(report) << summary.dump(2) << '\n';
  return summary;
}

json cmd_pivot_malware(const Options& o, AtomicOutputs& outputs) {
  auto cfg = pivot_config(o);
  auto in = open_input(o.comms, "--comms");
  auto comms = read_communications(in);
  return write_labels(o, pivoting::label_malware_pairs(comms, cfg), outputs);
}

json cmd_pivot_hosts(const Options& o, AtomicOutputs& outputs) {
  auto cfg = pivot_config(o);
  pivoting::HostPairMode mode;
  try {
    mode = pivoting::parse_host_pair_mode(o.mode);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  auto in = open_input(o.comms, "--comms");
  auto comms = read_communications(in);
  pivoting::ResolveMap resolve;
  if (o.resolve.empty()) {
    resolve = pivoting::resolve_map_from_communications(comms);
  } else {
    auto rin = open_input(o.resolve, "--resolve");
    resolve = pivoting::read_resolve_map(rin);
  }
  std::optional<pivoting::SignatureMap> sigs;
  if (!o.signatures.empty()) {
    auto sin = open_input(o.signatures, "--signatures");
    sigs = pivoting::index_signatures(read_host_signatures(sin));
  }
  auto result = pivoting::label_host_pairs(comms, cfg, resolve, sigs ? &*sigs : nullptr, mode);
  auto summary = write_labels(o, result, outputs);
  summary["mode"] = std::string(pivoting::to_string(mode));
  return summary;
}

std::vector<TrafficSession> load_traffic(const Options& o) {
  auto in = open_input(o.traffic, "--traffic");
  return read_traffic(in);
}

json cmd_bucketize(const Options& o, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  auto sessions = load_traffic(o);
  auto rows = traffic::bucketize(sessions);
  write_traffic(outputs.open(o.out), rows);
  return {{"rows_in", sessions.size()}, {"rows_out", rows.size()}};
}

json cmd_scan_score(const Options& o, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  auto sessions = load_traffic(o);
  auto model = traffic::fit_port_model(sessions, o.alpha);
  if (o.scan_window <= 0 || o.scan_window % traffic::kBucketSeconds != 0)
    throw UsageError("--window must be a positive multiple of 600");
  auto ranked = traffic::rank_sources(model, sessions, o.scan_window);
  traffic::write_source_scores(outputs.open(o.out), ranked);
  json summary = {{"observations", model.observations()},
                  {"ports", model.universe()},
                  {"windows", ranked.size()}};
  if (!ranked.empty()) {
    summary["top"] = {{"src_index", ranked.front().src_index},
                      {"window_start", ranked.front().window_start},
                      {"score", ranked.front().score}};
  }
  return summary;
}

json cmd_path_score(const Options& o, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  auto sessions = load_traffic(o);
  auto pin = open_input(o.paths, "--paths");
  auto paths = traffic::read_paths(pin);
  traffic::AccessGraph graph(o.alpha);
  if (o.protocol.empty()) {
    graph = traffic::build_access_graph(sessions, o.alpha);
  } else {
    auto graphs = traffic::build_access_graphs_by_protocol(sessions, o.alpha);
    auto it = graphs.find(o.protocol);
    if (it == graphs.end()) throw Error("no sessions with protocol '" + o.protocol + "'");
    graph = it->second;
  }
  std::vector<double> scores;
  scores.reserve(paths.size());
  for (const auto& p : paths) scores.push_back(graph.path_log_probability(p));
  traffic::write_path_scores(outputs.open(o.out), paths, scores);
  return {{"paths", paths.size()}, {"nodes", graph.nodes().size()}};
}

json cmd_bindshell(const Options& o, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  if (o.pair_window <= 0) throw UsageError("--window must be positive");
  if (o.lookback < 0) throw UsageError("--lookback must be non-negative");
  bindshell::NoiseFilter filter;
  try {
    filter = bindshell::make_noise_filter(o.noise_filter);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  auto sessions = load_traffic(o);
  std::optional<bindshell::LabelMap> labels;
  if (!o.bind_labels.empty()) {
    auto lin = open_input(o.bind_labels, "--labels");
    labels = bindshell::read_pair_labels(lin);
  }
  auto pairing = bindshell::pair_connections(sessions, o.pair_window, filter);
  bindshell::FeatureConfig cfg;
  cfg.lookback_seconds = o.lookback;
  cfg.workers = o.workers;
  cfg.labels = labels ? &*labels : nullptr;
  auto rows = bindshell::compute_candidate_features(pairing.candidates, pairing.population, sessions, cfg);
  bindshell::write_candidates(outputs.open(o.out), rows);
  return {{"population", pairing.population.size()},
          {"candidates", pairing.candidates.size()},
          {"filtered_out", pairing.filtered_out}};
}

json cmd_ngram_extract(const Options& o, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  if (o.inputs.empty()) throw UsageError("at least one input file is required");
  std::vector<std::string> contents;
  for (const auto& path : o.inputs) {
    auto in = open_input(path, "input");
    contents.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::vector<std::string_view> views(contents.begin(), contents.end());
  auto hists = ngrams::extract_all(views, o.gram_length, o.workers);
  std::vector<IndexedHistogram> rows;
  for (std::size_t i = 0; i < hists.size(); ++i) rows.push_back({o.first_index + i, std::move(hists[i])});
  write_ngram_file(outputs.open(o.out), rows);
  std::vector<NgramHistogram> just;
  for (const auto& r : rows) just.push_back(r.histogram);
  return {{"files", rows.size()}, {"median_grams_per_file", ngrams::median_total(just)}};
}

json cmd_ngram_derive(const Options& o, AtomicOutputs& outputs) {
  require_output(o.out, "--out");
  auto in = open_input(o.ngram_in, "--in");
  auto rows = read_ngram_file(in);
  for (auto& r : rows) r.histogram = ngrams::marginalize_prefix(r.histogram, o.k);
  write_ngram_file(outputs.open(o.out), rows);
  return {{"histograms", rows.size()}, {"k", o.k}};
}

json cmd_eval(const Options& o, AtomicOutputs& outputs) {
  evaluation::ReportInputs in;
  if (!o.labels.empty() && !o.pair_labels.empty())
    throw UsageError("--labels and --pair-labels are mutually exclusive");
  if (!o.labels.empty()) {
    auto s = open_input(o.labels, "--labels");
    in.labels = evaluation::read_labels(s);
  } else if (!o.pair_labels.empty()) {
    auto s = open_input(o.pair_labels, "--pair-labels");
    in.labels = evaluation::labels_from_pairs(read_pair_labels(s));
  }
  if (!o.predictions.empty()) {
    auto s = open_input(o.predictions, "--predictions");
    in.predictions = evaluation::read_predictions(s);
  }
  if (!o.scores.empty()) {
    auto s = open_input(o.scores, "--scores");
    in.ranked = evaluation::read_ranking(s);
  }
  if (!in.predictions && !in.ranked && !o.precision)
    throw UsageError("eval needs --predictions, --scores or --precision");
  if ((in.predictions || in.ranked) && o.labels.empty() && o.pair_labels.empty())
    throw UsageError("--predictions and --scores need --labels or --pair-labels");
  if (o.precision && (*o.precision < 0.0 || *o.precision > 1.0))
    throw UsageError("--precision must lie in [0, 1]");
  if (o.base_rate && !(*o.base_rate > 0.0)) throw UsageError("--base-rate must be positive");
  in.labels_complete = o.complete;
  in.base_rate = o.base_rate;
  in.precision = o.precision;
  std::map<std::string, std::string> ssdeep;
  if (!o.files.empty()) {
    auto s = open_input(o.files, "--files");
    for (const auto& r : read_file_records(s)) ssdeep.emplace(r.sha256, r.ssdeep);
    in.ssdeep_by_sha = &ssdeep;
  }
  auto report = evaluation::evaluation_report(in);
  if (!o.out.empty()) outputs.open(o.out) << report.dump(2) << '\n';
  return report;
}

json cmd_synth(Options o, AtomicOutputs& outputs) {
  require_output(o.out_dir, "--out-dir");
  auto& spec = o.spec;
  spec.rng_seed = o.seed;
  spec.traffic.scan.enabled = !o.no_scan;
  spec.traffic.lateral.enabled = !o.no_lateral;
  spec.traffic.bindshell.enabled = !o.no_bindshell;
  try {
    spec.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  auto ops = synth::gen_operator_corpus(spec);
  auto net = synth::gen_traffic_scenario(spec);
  auto files = synth::gen_file_corpus(spec);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_communications(outputs.open(dir / "comms.tsv"), ops.comms);
  write_file_records(outputs.open(dir / "files.tsv"), ops.files);
  pivoting::write_resolve_map(outputs.open(dir / "resolve.tsv"), ops.resolve);
  write_host_signatures(outputs.open(dir / "signatures.jsonl"), ops.signatures);
  auto& allow = outputs.open(dir / "allowlist.txt");
  for (const auto& d : ops.benign_domains) allow << d << '\n';
  write_traffic(outputs.open(dir / "traffic.tsv"), net.sessions);

  std::vector<std::string_view> views(files.contents.begin(), files.contents.end());
  auto hists = ngrams::extract_all(views, 4, o.workers);
  std::vector<IndexedHistogram> rows;
  for (std::size_t i = 0; i < hists.size(); ++i) rows.push_back({i, hists[i]});
  write_ngram_file(outputs.open(dir / "ngrams.tsv"), rows);
  write_verdicts(outputs.open(dir / "verdicts.tsv"), files.verdicts);

  json truth = synth::to_json(ops.truth);
  auto traffic_truth = synth::to_json(net.truth);
  for (const char* key : {"scanners", "lateral_path", "bindshell_pairs"}) truth[key] = traffic_truth[key];
  outputs.open(dir / "ground_truth.json") << truth.dump(2) << '\n';

  return {{"communications", ops.comms.size()},
          {"files", ops.files.size()},
          {"signatures", ops.signatures.size()},
          {"sessions", net.sessions.size()},
          {"positive_malware_pairs", ops.truth.malware_pairs.size()},
          {"positive_host_pairs", ops.truth.host_pairs.size()},
          {"median_grams_per_file", ngrams::median_total(hists)}};
}

json error_object(const char* type, const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Label generation, traffic scoring and evaluation for security data sets", "pivotlab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "JSON config with per-subcommand sections");
  app.add_option("--workers", o.workers, "Worker threads for parallel operations")->check(CLI::Range(1u, 256u));

  auto add_pivot_options = [&](CLI::App* sub) {
    sub->add_option("--comms", o.comms, "Communication TSV (sha256, domain, ip)");
    sub->add_option("--out", o.out, "Pair label TSV to write");
    sub->add_option("--report", o.report, "Sidecar JSON report (default: <out>.report.json)");
    sub->add_option("--allowlist", o.allowlist, "Benign domains, one per line");
    sub->add_option("--max-files", o.max_files, "Drop domains contacted by more distinct files")
        ->check(CLI::PositiveNumber);
    sub->add_option("--negative-ratio", o.negative_ratio, "Negatives sampled per positive");
    sub->add_option("--seed", o.seed, "Negative sampling seed");
    sub->add_flag("--multiclass", o.multiclass, "Emit the smallest mutual domain as class key");
  };

  auto* pm = app.add_subcommand("pivot-malware", "Label malware pairs by shared operator domains");
  add_pivot_options(pm);

  auto* ph = app.add_subcommand("pivot-hosts", "Label host pairs through operator domains");
  add_pivot_options(ph);
  ph->add_option("--resolve", o.resolve, "Resolve TSV (domain, ip); default: the comms ip column");
  ph->add_option("--signatures", o.signatures, "Host signatures (JSON lines)");
  ph->add_option("--mode", o.mode, "shared_domain_formula | shared_malware_domains");

  auto* bz = app.add_subcommand("bucketize", "Aggregate sessions into 10-minute buckets");
  bz->add_option("--traffic", o.traffic, "Traffic TSV");
  bz->add_option("--out", o.out, "Aggregated traffic TSV");

  auto* ss = app.add_subcommand("scan-score", "Rank sources by port-combination improbability");
  ss->add_option("--traffic", o.traffic, "Traffic TSV");
  ss->add_option("--out", o.out, "Score TSV (src_index, window_start, score)");
  ss->add_option("--alpha", o.alpha, "Additive smoothing")->check(CLI::PositiveNumber);
  ss->add_option("--window", o.scan_window, "Window length in seconds (multiple of 600)");

  auto* ps = app.add_subcommand("path-score", "Log-probability of host paths under the access graph");
  ps->add_option("--traffic", o.traffic, "Traffic TSV");
  ps->add_option("--paths", o.paths, "One comma-joined host path per line");
  ps->add_option("--out", o.out, "Path score TSV");
  ps->add_option("--alpha", o.alpha, "Additive smoothing")->check(CLI::PositiveNumber);
  ps->add_option("--protocol", o.protocol, "Score against the graph of one protocol only");

  auto* bs = app.add_subcommand("bindshell", "Pair connections and compute bind-shell features");
  bs->add_option("--traffic", o.traffic, "Traffic TSV");
  bs->add_option("--out", o.out, "Candidate feature TSV");
  bs->add_option("--window", o.pair_window, "Maximum seconds between phase starts");
  bs->add_option("--lookback", o.lookback, "Seconds a host must be unseen to count as new");
  bs->add_option("--noise-filter", o.noise_filter, "none | failed-phase2");
  bs->add_option("--labels", o.bind_labels, "Known pair labels TSV");

  auto* ne = app.add_subcommand("ngram-extract", "Byte n-gram histograms of files");
  ne->add_option("inputs", o.inputs, "Files to read");
  ne->add_option("--out", o.out, "N-gram TSV");
  ne->add_option("--n", o.gram_length, "Gram length")->check(CLI::Range(1, 4));
  ne->add_option("--first-index", o.first_index, "File index of the first input");

  auto* nd = app.add_subcommand("ngram-derive", "Derive shorter grams by prefix marginalization");
  nd->add_option("--in", o.ngram_in, "N-gram TSV");
  nd->add_option("--k", o.k, "Target gram length")->check(CLI::Range(1, 3));
  nd->add_option("--out", o.out, "Derived n-gram TSV");

  auto* ev = app.add_subcommand("eval", "Imbalance-aware evaluation report");
  ev->add_option("--labels", o.labels, "Labels TSV (key, 1|0|-1)");
  ev->add_option("--pair-labels", o.pair_labels, "Pair label TSV; keys become a|b");
  ev->add_option("--predictions", o.predictions, "Predictions TSV (key, 0|1)");
  ev->add_option("--scores", o.scores, "Scores TSV (key, score) for ranked metrics");
  ev->add_flag("--complete", o.complete, "Labels are complete, so recall is reported");
  ev->add_option("--base-rate", o.base_rate, "Positive base rate override");
  ev->add_option("--precision", o.precision, "Precision to evaluate directly");
  ev->add_option("--files", o.files, "File records TSV for ssdeep dependence notes");
  ev->add_option("--out", o.out, "Report JSON to write");

  auto* sy = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  sy->add_option("--out-dir", o.out_dir, "Directory for the generated files");
  sy->add_option("--seed", o.seed, "Generator seed");
  sy->add_option("--operators", o.spec.n_operators, "Operators");
  sy->add_option("--malware-per-operator", o.spec.malware_per_operator, "Malware per operator");
  sy->add_option("--domains-per-operator", o.spec.domains_per_operator, "Private domains per operator");
  sy->add_option("--benign-domains", o.spec.benign_domain_count, "Shared benign domains");
  sy->add_option("--popularity-threshold", o.spec.popularity_threshold, "D_max the corpus targets");
  sy->add_option("--files", o.spec.file_count, "Files in the n-gram corpus");
  sy->add_option("--hosts", o.spec.traffic.host_count, "Hosts in the traffic scenario");
  sy->add_option("--servers", o.spec.traffic.server_count, "Server hosts among them");
  sy->add_option("--sessions-per-host", o.spec.traffic.sessions_per_host, "Benign sessions per host");
  sy->add_option("--buckets", o.spec.traffic.bucket_count, "10-minute buckets covered");
  sy->add_option("--scan-ports", o.spec.traffic.scan.port_count, "Ports probed by the planted scan");
  sy->add_option("--path-length", o.spec.traffic.lateral.path_length, "Hosts on the planted path");
  sy->add_option("--bind-gap", o.spec.traffic.bindshell.window_gap_seconds, "Seconds between shell phases");
  sy->add_flag("--no-scan", o.no_scan, "Do not plant a scan");
  sy->add_flag("--no-lateral", o.no_lateral, "Do not plant a lateral path");
  sy->add_flag("--no-bindshell", o.no_bindshell, "Do not plant a bind shell");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  CLI::App* sub = nullptr;
  try {
    app.parse(reversed);
    sub = app.get_subcommands().front();
    if (!o.config.empty()) apply_config(app, *sub, o.config);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    out << error_object("usage", e.what()).dump() << '\n';
    err << e.what() << '\n';
    return kUsageError;
  } catch (const UsageError& e) {
    out << error_object("usage", e.what()).dump() << '\n';
    err << e.what() << '\n';
    return kUsageError;
  }

  const std::string name = sub->get_name();
  try {
    AtomicOutputs outputs;
    json summary;
    if (name == "pivot-malware") summary = cmd_pivot_malware(o, outputs);
    else if (name == "pivot-hosts") summary = cmd_pivot_hosts(o, outputs);
    else if (name == "bucketize") summary = cmd_bucketize(o, outputs);
    else if (name == "scan-score") summary = cmd_scan_score(o, outputs);
    else if (name == "path-score") summary = cmd_path_score(o, outputs);
    else if (name == "bindshell") summary = cmd_bindshell(o, outputs);
    else if (name == "ngram-extract") summary = cmd_ngram_extract(o, outputs);
    else if (name == "ngram-derive") summary = cmd_ngram_derive(o, outputs);
    else if (name == "eval") summary = cmd_eval(o, outputs);
    else if (name == "synth") summary = cmd_synth(o, outputs);
    outputs.commit();

    json result = {{"subcommand", name}};
    json written = json::array();
    for (const auto& p : outputs.targets()) written.push_back(p.string());
    result["outputs"] = std::move(written);
    for (auto& [k, v] : summary.items()) result[k] = v;
    out << result.dump() << '\n';
    return kOk;
  } catch (const UsageError& e) {
    out << error_object("usage", e.what()).dump() << '\n';
    err << name << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    json obj = error_object("parse", e.what());
    obj["error"]["line"] = e.line();
    obj["error"]["field"] = e.field();
    out << obj.dump() << '\n';
    err << name << ": " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    out << error_object("runtime", e.what()).dump() << '\n';
    err << name << ": " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace pivotlab::cli
