#include "seqmarkov/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "seqmarkov/csv.hpp"
#include "seqmarkov/error.hpp"
#include "seqmarkov/estimation.hpp"
#include "seqmarkov/modelselect.hpp"
#include "seqmarkov/parallel.hpp"
#include "seqmarkov/printing.hpp"
#include "seqmarkov/procmine.hpp"
#include "seqmarkov/serialize.hpp"

namespace seqmarkov::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage_error", what) {}
};

std::vector<std::string> split(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (text.back() == sep) out.emplace_back();
  return out;
}

struct DataArgs {
  std::string input;
  std::string seq_cols;
  std::string id_col;
  std::string alphabet;
  std::string colors;
  std::string missing;
  std::string covariates_file;
  std::vector<std::string> covariates;
  std::vector<std::string> levels;
  std::string intercept = "on";
};

void add_data_options(CLI::App* sub, DataArgs& d, bool covariates) {
  sub->add_option("--input", d.input, "Wide sequence file (CSV/TSV) or sequence JSON");
  sub->add_option("--seq-cols", d.seq_cols, "1-based column range of the sequence, e.g. 2-11");
  sub->add_option("--id-col", d.id_col, "Name of the subject id column");
  sub->add_option("--alphabet", d.alphabet, "Comma-separated symbols in display order");
  sub->add_option("--colors", d.colors, "Comma-separated colors matching the alphabet");
  sub->add_option("--missing", d.missing, "Token marking a missing observation");
  if (!covariates) return;
  sub->add_option("--covariates-file", d.covariates_file,
                  "File holding the covariates (defaults to --input)");
  sub->add_option("--covariates", d.covariates, "Categorical covariates, e.g. GPA")
      ->delimiter(',');
  sub->add_option("--levels", d.levels, "Level order of a covariate, e.g. GPA=Low,Middle,High");
  sub->add_option("--intercept", d.intercept, "Include an intercept column")
      ->check(CLI::IsMember({"on", "off"}));
}

SequenceSet load_sequences(const DataArgs& d) {
  if (d.input.empty()) throw UsageError("--input is required");
  const std::filesystem::path path(d.input);
  if (path.extension() == ".json") {
    const Json j = read_json_file(path);
    return sequences_from_json(j.contains("sequences") ? j.at("sequences") : j);
  }
  if (d.seq_cols.empty()) throw UsageError("--seq-cols is required for delimited input");
  WideCsvOptions opts;
  opts.seq_columns = parse_column_range(d.seq_cols);
  if (!d.id_col.empty()) opts.id_column = d.id_col;
  if (!d.alphabet.empty()) opts.alphabet = Alphabet(split(d.alphabet), split(d.colors));
  opts.missing_token = d.missing;
  return ingest_wide_csv(path, opts);
}

std::map<std::string, std::vector<std::string>> parse_levels(const std::vector<std::string>& specs) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("--levels expects NAME=level1,level2,...");
    out[spec.substr(0, eq)] = split(spec.substr(eq + 1));
  }
  return out;
}

CovariateFrame load_covariates_for(const DataArgs& d, const SequenceSet& s,
                                   const std::vector<std::string>& names,
                                   std::map<std::string, std::vector<std::string>> level_order) {
  if (names.empty()) return {};
  const std::string file = d.covariates_file.empty() ? d.input : d.covariates_file;
  if (file.empty()) throw UsageError("covariates need --covariates-file or --input");
  const auto cov = load_covariates(file, d.id_col.empty() ? std::nullopt
                                                          : std::optional<std::string>(d.id_col),
                                   names, level_order);
  cov.check_aligned(s);
  return cov;
}

// Covariates required by a model's design, with the levels used at fit time.
CovariateFrame covariates_for_model(const DataArgs& d, const SequenceSet& s,
                                    const MixtureModel& m) {
  std::vector<std::string> names;
  std::map<std::string, std::vector<std::string>> levels;
  for (const auto& [name, lv] : m.design.factors) {
    names.push_back(name);
    levels[name] = lv;
  }
  return load_covariates_for(d, s, names, levels);
}

Json load_model_json(const std::string& path) {
  if (path.empty()) throw UsageError("--model is required");
  Json j = read_json_file(path);
  return j.contains("model") ? j.at("model") : j;
}

// Full option set of a subcommand: values given on the command line, or the
// defaults. The worker count is left out because it never changes results.
Json provenance(const CLI::App* sub) {
  Json argv = Json::array({sub->get_name()});
  Json config = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "threads") continue;
    if (opt->count() > 0) {
      const auto results = opt->results();
      argv.push_back("--" + name);
      for (const auto& r : results) argv.push_back(r);
      if (results.size() == 1)
        config[name] = results.front();
      else
        config[name] = results;
    } else {
      const std::string def = opt->get_default_str();
      if (def == "{}")
        config[name] = Json::array();
      else
        config[name] = def;
    }
  }
  return Json{{"tool", "seqmarkov"},
              {"version", kVersion},
              {"subcommand", sub->get_name()},
              {"argv", std::move(argv)},
              {"config", std::move(config)}};
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
  if (!out) throw InputError("failed writing " + path);
}

// Writes to `path`, or to `out` when the path is empty.
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty())
    out << content;
  else
    write_text(path, content);
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

Json data_description(const SequenceSet& s) {
  Json empty = Json::array();
  for (std::size_t i = 0; i < s.n_sequences(); ++i)
    if (s.length(i) == 0) empty.push_back(s.ids()[i]);
  return Json{{"sequences", s.n_sequences()},
              {"timepoints", s.n_timepoints()},
              {"observations", count_observations(s)},
              {"empty_rows", std::move(empty)}};
}

std::vector<std::string> labels_or_default(const std::string& text, std::size_t n,
                                           const std::vector<std::string>& fallback) {
  if (text.empty()) return fallback;
  auto labels = split(text);
  if (labels.size() != n)
    throw UsageError("expected " + std::to_string(n) + " labels, got " +
                     std::to_string(labels.size()));
  return labels;
}

HiddenMarkovModel random_hmm(const Alphabet& a, std::size_t n_states, std::uint64_t seed,
                             double diag_boost) {
  HiddenMarkovModel h;
  h.alphabet = a;
  h.state_labels = default_state_labels(n_states);
  h.initial = simulate_initial_probs(n_states, round_seed(seed, 0));
  h.transitions = simulate_transition_probs(n_states, 1, diag_boost, round_seed(seed, 1)).front();
  h.emissions = simulate_emission_probs(n_states, a.size(), 1, round_seed(seed, 2)).front();
  return h;
}

HiddenMarkovModel random_chain(const Alphabet& a, std::uint64_t seed, double diag_boost) {
  MarkovModel m;
  m.alphabet = a;
  m.initial = simulate_initial_probs(a.size(), round_seed(seed, 0));
  m.transitions = simulate_transition_probs(a.size(), 1, diag_boost, round_seed(seed, 1)).front();
  return embed_markov_model(m);
}

std::vector<std::size_t> parse_state_counts(const std::string& text, std::size_t n_clusters) {
  if (text.empty()) throw UsageError("--n-states is required");
  std::vector<std::size_t> counts;
  for (const auto& item : split(text)) {
    try {
      const long v = std::stol(item);
      if (v < 1) throw UsageError("--n-states values must be positive");
      counts.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw UsageError("--n-states expects positive integers");
    }
  }
  if (counts.size() == 1) counts.assign(n_clusters, counts.front());
  if (counts.size() != n_clusters)
    throw UsageError("--n-states needs one value or one per cluster");
  return counts;
}

std::string model_type(const AnyModel& m) {
  if (std::holds_alternative<MarkovModel>(m)) return "mm";
  if (std::holds_alternative<HiddenMarkovModel>(m)) return "hmm";
  return std::get<MixtureModel>(m).kind == MixtureKind::mmm ? "mmm" : "mhmm";
}

void print_fit_line(std::ostream& out, const ModelScore& score) {
  out << "\nLog-likelihood: " << format_number(score.log_likelihood)
      << "   BIC: " << format_number(score.bic) << " \n";
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  DataArgs data;
  std::string model;
  std::string n_states;
  std::size_t n_clusters = 1;
  std::string cluster_labels;
  std::size_t restarts = 0;
  std::size_t n_optimum = 25;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
  std::size_t max_iterations = 1000;
  unsigned threads = 0;
  std::string method = "em";
  std::size_t maxeval = 100000;
  double maxtime = 0;
  std::size_t multistart = 10;
  double diag_boost = 0;
  std::string start;
  std::string out;
  std::string report;
};

void register_fit(CLI::App& app, FitArgs& a) {
  auto* sub = app.add_subcommand("fit", "Estimate a model from sequence data");
  sub->add_option("--model", a.model, "Model type")
      ->required()
      ->check(CLI::IsMember({"mm", "hmm", "mmm", "mhmm"}));
  add_data_options(sub, a.data, true);
  sub->add_option("--n-states", a.n_states, "Hidden states, one value or one per cluster");
  sub->add_option("--n-clusters", a.n_clusters, "Number of clusters")->check(CLI::PositiveNumber);
  sub->add_option("--cluster-labels", a.cluster_labels, "Comma-separated cluster names");
  sub->add_option("--restarts", a.restarts, "Additional EM rounds from random starts");
  sub->add_option("--n-optimum", a.n_optimum, "Length of the likelihood ledger")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", a.seed, "Master seed");
  sub->add_option("--tolerance", a.tolerance, "Relative log-likelihood tolerance of EM")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--max-iterations", a.max_iterations, "EM iteration cap");
  sub->add_option("--threads", a.threads, "Worker threads (0: SEQMARKOV_THREADS or 1)");
  sub->add_option("--method", a.method, "em or direct")->check(CLI::IsMember({"em", "direct"}));
  sub->add_option("--maxeval", a.maxeval, "Objective evaluation budget of direct fitting")
      ->check(CLI::PositiveNumber);
  sub->add_option("--maxtime", a.maxtime, "Wall-clock budget in seconds (not reproducible)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--multistart", a.multistart, "Starting points of direct fitting")
      ->check(CLI::PositiveNumber);
  sub->add_option("--diag-boost", a.diag_boost, "Diagonal weight of random transition starts")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--start", a.start, "Model JSON with starting values");
  sub->add_option("--out", a.out, "Model JSON output");
  sub->add_option("--report", a.report, "Fit report JSON output");
}

Json model_file(const Json& prov, const Json& model) {
  return Json{{"format", "seqmarkov-model"}, {"provenance", prov}, {"model", model}};
}

Json report_file(const Json& prov, const SequenceSet& s, const ModelScore& score, Json fit) {
  return Json{{"format", "seqmarkov-fit-report"},
              {"provenance", prov},
              {"data", data_description(s)},
              {"score", to_json(score)},
              {"fit", std::move(fit)}};
}

int run_fit(const CLI::App* sub, const FitArgs& a, std::ostream& out) {
  const Json prov = provenance(sub);
  const SequenceSet s = load_sequences(a.data);

  if (a.model == "mm") {
    const MarkovModel m = estimate_mm(s);
    const ModelScore score = bic(m, s);
    print_model(out, m);
    print_fit_line(out, score);
    Json fit{{"method", "closed_form"}, {"logLik", number_to_json(score.log_likelihood)}};
    Json fallback = Json::array();
    for (const auto r : m.fallback_rows) fallback.push_back(m.alphabet.symbol(r));
    fit["fallback_rows"] = std::move(fallback);
    if (!a.out.empty()) write_json_file(a.out, model_file(prov, to_json(m)));
    if (!a.report.empty()) write_json_file(a.report, report_file(prov, s, score, std::move(fit)));
    return 0;
  }

  if (sub->count("--seed") == 0) throw UsageError("--seed is required for randomized fitting");
  if (sub->count("--maxtime") > 0 && a.method != "direct")
    throw UsageError("--maxtime applies to --method direct only");

  RestartControl rc;
  rc.times = a.restarts;
  rc.n_optimum = a.n_optimum;
  rc.seed = a.seed;
  rc.threads = a.threads;
  rc.em.relative_tolerance = a.tolerance;
  rc.em.max_iterations = a.max_iterations;
  rc.em.threads = a.threads;

  GlobalControl gc;
  gc.maxeval = a.maxeval;
  if (sub->count("--maxtime") > 0) gc.maxtime = a.maxtime;
  gc.multistart = a.multistart;
  gc.n_optimum = a.n_optimum;
  gc.seed = a.seed;
  gc.threads = a.threads;

  const std::uint64_t init_seed = round_seed(a.seed, 0);

  if (a.model == "hmm") {
    HiddenMarkovModel start;
    if (!a.start.empty()) {
      start = hmm_from_json(load_model_json(a.start));
    } else {
      const auto counts = parse_state_counts(a.n_states, 1);
      start = random_hmm(s.alphabet(), counts.front(), init_seed, a.diag_boost);
    }
    if (!(start.alphabet == s.alphabet()))
      throw InputError("starting model and data alphabets differ");
    const HmmRestartFit fit =
        a.method == "em" ? fit_with_restarts(start, s, rc) : direct_ml_fit(start, s, gc);
    const ModelScore score = bic(fit.model, s, a.threads);
    print_model(out, fit.model);
    print_fit_line(out, score);
    if (!a.out.empty()) write_json_file(a.out, model_file(prov, to_json(fit.model)));
    if (!a.report.empty()) write_json_file(a.report, report_file(prov, s, score, to_json(fit.report)));
    return 0;
  }

  MixtureModel start;
  CovariateFrame cov;
  if (!a.start.empty()) {
    start = mixture_from_json(load_model_json(a.start));
    cov = covariates_for_model(a.data, s, start);
  } else {
    const bool mmm = a.model == "mmm";
    const std::size_t k = a.n_clusters;
    cov = load_covariates_for(a.data, s, a.data.covariates, parse_levels(a.data.levels));
    DesignSpec design = a.data.covariates.empty()
                            ? intercept_only_design()
                            : make_design(cov, a.data.covariates, a.data.intercept == "on");
    std::vector<HiddenMarkovModel> clusters;
    const auto counts = mmm ? std::vector<std::size_t>(k, 0) : parse_state_counts(a.n_states, k);
    for (std::size_t c = 0; c < k; ++c) {
      const std::uint64_t seed = round_seed(init_seed, c);
      clusters.push_back(mmm ? random_chain(s.alphabet(), seed, a.diag_boost)
                             : random_hmm(s.alphabet(), counts[c], seed, a.diag_boost));
    }
    start = make_mixture(mmm ? MixtureKind::mmm : MixtureKind::mhmm, std::move(clusters),
                         std::move(design));
    start.cluster_labels = labels_or_default(a.cluster_labels, k, start.cluster_labels);
  }
  if (!(start.alphabet() == s.alphabet()))
    throw InputError("starting model and data alphabets differ");
  const MixtureRestartFit fit = a.method == "em" ? fit_with_restarts(start, cov, s, rc)
                                                 : direct_ml_fit(start, cov, s, gc);
  const MixtureSummary summary = summarize(fit.model, cov, s, a.threads);
  print_summary(out, summary);
  const ModelScore score{summary.log_likelihood, summary.free_parameters, summary.n_observations,
                         summary.bic};
  if (!a.out.empty()) write_json_file(a.out, model_file(prov, to_json(fit.model)));
  if (!a.report.empty()) write_json_file(a.report, report_file(prov, s, score, to_json(fit.report)));
  return 0;
}

// ---------------------------------------------------------------- trate

struct TrateArgs {
  DataArgs data;
  std::string out;
};

int run_trate(const CLI::App* sub, const TrateArgs& a, std::ostream& out) {
  const SequenceSet s = load_sequences(a.data);
  const TransitionMatrix t = seqtrate(s);
  const auto& names = s.alphabet().symbols();
  out << "Transition probabilities :\n";
  print_matrix(out, t, names, names, "from", "to");
  if (!a.out.empty())
    write_json_file(a.out, Json{{"format", "seqmarkov-transitions"},
                                {"provenance", provenance(sub)},
                                {"alphabet", to_json(s.alphabet())},
                                {"transitions", to_json(MarkovModel{s.alphabet(), {}, t, {}})
                                                    .at("transitions")}});
  return 0;
}

// ---------------------------------------------------------------- graph / diff

struct GraphArgs {
  DataArgs data;
  std::string model;
  std::string group_col;
  std::string groups_file;
  double cut = 0.15;
  double minimum = 0.05;
  std::string format = "dot";
  std::string out;
};

std::vector<std::string> load_groups(const GraphArgs& a, const SequenceSet& s) {
  const std::string file = a.groups_file.empty() ? a.data.input : a.groups_file;
  auto groups = load_column(file, a.group_col);
  if (groups.size() != s.n_sequences())
    throw DimensionError("group column length does not match the number of sequences");
  return groups;
}

std::string dot_with_provenance(const Json& prov, const std::vector<ProcessGraph>& graphs) {
  std::ostringstream text;
  text << "// provenance: " << prov.dump() << '\n';
  write_dot(text, graphs);
  return text.str();
}

int run_graph(const CLI::App* sub, const GraphArgs& a, std::ostream& out) {
  std::vector<ProcessGraph> graphs;
  if (!a.model.empty()) {
    const AnyModel model = model_from_json(load_model_json(a.model));
    if (const auto* mm = std::get_if<MarkovModel>(&model)) {
      graphs.push_back(build_process_graph(*mm, a.cut, a.minimum));
    } else if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) {
      graphs.push_back(
          build_process_graph(h->transitions, h->initial, a.cut, a.minimum, h->state_labels));
    } else {
      graphs = cluster_process_maps(std::get<MixtureModel>(model), a.cut, a.minimum);
    }
  } else {
    const SequenceSet s = load_sequences(a.data);
    if (a.group_col.empty()) {
      graphs.push_back(build_process_graph(estimate_mm(s), a.cut, a.minimum));
    } else {
      for (const auto& [label, m] : group_models(s, load_groups(a, s))) {
        auto g = build_process_graph(m, a.cut, a.minimum);
        g.title = label;
        graphs.push_back(std::move(g));
      }
    }
  }
  const Json prov = provenance(sub);
  if (a.format == "dot") {
    emit(a.out, dot_with_provenance(prov, graphs), out);
  } else {
    Json list = Json::array();
    for (const auto& g : graphs) list.push_back(to_json(g));
    emit(a.out,
         json_text(Json{{"format", "seqmarkov-process-map"},
                        {"provenance", prov},
                        {"graphs", std::move(list)}}),
         out);
  }
  return 0;
}

struct DiffArgs {
  DataArgs data;
  std::string model_a;
  std::string model_b;
  std::string group_col;
  std::string groups_file;
  std::string group_a;
  std::string group_b;
  double minimum = 0;
  std::string format = "dot";
  std::string out;
};

int run_diff(const CLI::App* sub, const DiffArgs& a, std::ostream& out) {
  MarkovModel ma;
  MarkovModel mb;
  std::string name_a = a.group_a;
  std::string name_b = a.group_b;
  if (!a.model_a.empty() || !a.model_b.empty()) {
    if (a.model_a.empty() || a.model_b.empty())
      throw UsageError("--model-a and --model-b go together");
    ma = markov_from_json(load_model_json(a.model_a));
    mb = markov_from_json(load_model_json(a.model_b));
    if (!(ma.alphabet == mb.alphabet)) throw DimensionError("models have different alphabets");
    name_a = std::filesystem::path(a.model_a).stem().string();
    name_b = std::filesystem::path(a.model_b).stem().string();
  } else {
    if (a.group_col.empty() || a.group_a.empty() || a.group_b.empty())
      throw UsageError("diff needs --model-a/--model-b or --group-col with --group-a/--group-b");
    const SequenceSet s = load_sequences(a.data);
    GraphArgs ga;
    ga.data = a.data;
    ga.group_col = a.group_col;
    ga.groups_file = a.groups_file;
    const auto models = group_models(s, load_groups(ga, s));
    const auto ia = models.find(a.group_a);
    const auto ib = models.find(a.group_b);
    if (ia == models.end()) throw InputError("group '" + a.group_a + "' has no sequences");
    if (ib == models.end()) throw InputError("group '" + a.group_b + "' has no sequences");
    ma = ia->second;
    mb = ib->second;
  }
  DiffGraph g = diff_graph(ma.transitions, mb.transitions, a.minimum, ma.alphabet.symbols());
  g.title = name_b + " - " + name_a;
  const Json prov = provenance(sub);
  if (a.format == "dot") {
    std::ostringstream text;
    text << "// provenance: " << prov.dump() << '\n';
    write_dot(text, g);
    emit(a.out, text.str(), out);
  } else {
    emit(a.out,
         json_text(Json{{"format", "seqmarkov-difference-map"},
                        {"provenance", prov},
                        {"graph", to_json(g)}}),
         out);
  }
  return 0;
}

// ---------------------------------------------------------------- paths

struct PathsArgs {
  DataArgs data;
  std::string model;
  unsigned threads = 0;
  std::string out;
};

int run_paths(const CLI::App* sub, const PathsArgs& a, std::ostream& out) {
  const AnyModel model = model_from_json(load_model_json(a.model));
  const SequenceSet s = load_sequences(a.data);
  std::vector<HiddenPath> paths;
  std::vector<std::string> labels;
  if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) {
    if (!(h->alphabet == s.alphabet())) throw InputError("model and data alphabets differ");
    paths = viterbi(*h, s, a.threads);
    labels = h->state_labels;
  } else if (const auto* m = std::get_if<MixtureModel>(&model)) {
    if (!(m->alphabet() == s.alphabet())) throw InputError("model and data alphabets differ");
    const CovariateFrame cov = covariates_for_model(a.data, s, *m);
    const Eigen::MatrixXd priors = cluster_priors(*m, cov, s.n_sequences());
    paths.resize(s.n_sequences());
    parallel_for(s.n_sequences(), a.threads, [&](std::size_t i) {
      const HiddenMarkovModel joint =
          joint_block_model(*m, priors.row(static_cast<Eigen::Index>(i)).transpose());
      paths[i] = viterbi(joint, s.observed_row(i));
    });
    labels = joint_block_model(*m, Eigen::VectorXd::Constant(
                                       static_cast<Eigen::Index>(m->n_clusters()),
                                       1.0 / static_cast<double>(m->n_clusters())))
                 .state_labels;
  } else {
    throw InputError("paths needs a hidden Markov or mixture model");
  }

  std::ostringstream text;
  text << "# provenance: " << provenance(sub).dump() << '\n';
  std::vector<std::string> fields{"id", "log_probability"};
  fields.insert(fields.end(), s.time_labels().begin(), s.time_labels().end());
  csv::write_row(text, fields);
  for (std::size_t i = 0; i < s.n_sequences(); ++i) {
    fields.assign({s.ids()[i], format_number(paths[i].log_probability, 15)});
    for (std::size_t t = 0; t < s.n_timepoints(); ++t)
      fields.push_back(t < paths[i].states.size() ? labels[paths[i].states[t]] : std::string());
    csv::write_row(text, fields);
  }
  emit(a.out, text.str(), out);
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  DataArgs data;
  std::string model;
  std::size_t n = 0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::string missing;
  std::string out;
};

int run_simulate(const CLI::App* sub, const SimulateArgs& a, std::ostream& out) {
  if (sub->count("--seed") == 0) throw UsageError("--seed is required for simulation");
  if (a.length == 0) throw UsageError("--length must be positive");
  const AnyModel model = model_from_json(load_model_json(a.model));
  std::optional<SequenceSet> s;
  std::vector<std::string> clusters;
  if (const auto* mm = std::get_if<MarkovModel>(&model)) {
    if (a.n == 0) throw UsageError("--n must be positive");
    s = simulate_sequences(embed_markov_model(*mm), a.n, a.length, a.seed);
  } else if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) {
    if (a.n == 0) throw UsageError("--n must be positive");
    s = simulate_sequences(*h, a.n, a.length, a.seed);
  } else {
    const auto& m = std::get<MixtureModel>(model);
    Eigen::MatrixXd design;
    std::vector<std::string> ids;
    if (m.design.has_covariates()) {
      const std::string file = a.data.covariates_file.empty() ? a.data.input : a.data.covariates_file;
      if (file.empty()) throw UsageError("simulating this mixture needs --covariates-file");
      std::vector<std::string> names;
      std::map<std::string, std::vector<std::string>> levels;
      for (const auto& [name, lv] : m.design.factors) {
        names.push_back(name);
        levels[name] = lv;
      }
      const auto cov = load_covariates(
          file, a.data.id_col.empty() ? std::nullopt : std::optional<std::string>(a.data.id_col),
          names, levels);
      design = design_matrix(m.design, cov, cov.n_rows());
      ids = cov.ids();
    } else {
      if (a.n == 0) throw UsageError("--n must be positive");
      design = design_matrix(m.design, {}, a.n);
    }
    auto sim = simulate_sequences(m, design, a.length, a.seed);
    if (!ids.empty())
      sim.sequences = SequenceSet(sim.sequences.alphabet(), sim.sequences.cells(), ids,
                                  sim.sequences.time_labels());
    for (const auto k : sim.clusters) clusters.push_back(m.cluster_labels[k]);
    s = std::move(sim.sequences);
  }

  std::ostringstream text;
  text << "# provenance: " << provenance(sub).dump() << '\n';
  if (clusters.empty()) {
    write_wide_csv(text, *s, a.missing);
  } else {
    std::vector<std::string> fields{"id", "cluster"};
    fields.insert(fields.end(), s->time_labels().begin(), s->time_labels().end());
    csv::write_row(text, fields);
    for (std::size_t i = 0; i < s->n_sequences(); ++i) {
      fields.assign({s->ids()[i], clusters[i]});
      for (const Cell c : s->row(i)) fields.push_back(s->alphabet().symbol(static_cast<std::size_t>(c)));
      csv::write_row(text, fields);
    }
  }
  emit(a.out, text.str(), out);
  return 0;
}

// ---------------------------------------------------------------- bic / summary

struct BicArgs {
  DataArgs data;
  std::vector<std::string> models;
  unsigned threads = 0;
  std::string out;
};

int run_bic(const CLI::App* sub, const BicArgs& a, std::ostream& out) {
  const SequenceSet s = load_sequences(a.data);
  std::vector<NamedScore> scores;
  for (const auto& path : a.models) {
    const AnyModel model = model_from_json(load_model_json(path));
    NamedScore ns{path, model_type(model), {}};
    if (const auto* mm = std::get_if<MarkovModel>(&model)) {
      ns.score = bic(*mm, s);
    } else if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) {
      ns.score = bic(*h, s, a.threads);
    } else {
      const auto& m = std::get<MixtureModel>(model);
      ns.score = bic(m, covariates_for_model(a.data, s, m), s, a.threads);
    }
    scores.push_back(std::move(ns));
  }
  print_bic_table(out, scores);
  if (!a.out.empty()) {
    std::stable_sort(scores.begin(), scores.end(), [](const NamedScore& x, const NamedScore& y) {
      return x.score.bic < y.score.bic;
    });
    Json list = Json::array();
    for (const auto& ns : scores) {
      Json j{{"model", ns.name}, {"type", ns.type}};
      const Json score = to_json(ns.score);
      for (const auto& [k, v] : score.items()) j[k] = v;
      list.push_back(std::move(j));
    }
    write_json_file(a.out, Json{{"format", "seqmarkov-bic-table"},
                                {"provenance", provenance(sub)},
                                {"scores", std::move(list)}});
  }
  return 0;
}

struct SummaryArgs {
  DataArgs data;
  std::string model;
  unsigned threads = 0;
  std::string out;
};

int run_summary(const CLI::App* sub, const SummaryArgs& a, std::ostream& out) {
  const SequenceSet s = load_sequences(a.data);
  const MixtureModel m = mixture_from_json(load_model_json(a.model));
  const MixtureSummary summary = summarize(m, covariates_for_model(a.data, s, m), s, a.threads);
  print_summary(out, summary);
  if (!a.out.empty())
    write_json_file(a.out, Json{{"format", "seqmarkov-summary"},
                                {"provenance", provenance(sub)},
                                {"summary", to_json(summary)}});
  return 0;
}

// ---------------------------------------------------------------- rerun

std::vector<std::string> recorded_argv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::string first;
  std::getline(in, first);
  Json prov;
  for (const std::string prefix : {"// provenance: ", "# provenance: "}) {
    if (first.rfind(prefix, 0) == 0) prov = Json::parse(first.substr(prefix.size()));
  }
  if (prov.is_null()) {
    const Json j = read_json_file(path);
    if (!j.contains("provenance")) throw InputError(path + " carries no provenance block");
    prov = j.at("provenance");
  }
  return prov.at("argv").get<std::vector<std::string>>();
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Markov, hidden Markov and mixture models for categorical sequences",
               "seqmarkov");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FitArgs fit;
  register_fit(app, fit);

  TrateArgs trate;
  auto* trate_cmd = app.add_subcommand("trate", "Empirical transition probabilities");
  add_data_options(trate_cmd, trate.data, false);
  trate_cmd->add_option("--out", trate.out, "Transition matrix JSON output");

  GraphArgs graph;
  auto* graph_cmd = app.add_subcommand("graph", "Process map of transition probabilities");
  add_data_options(graph_cmd, graph.data, false);
  graph_cmd->add_option("--model", graph.model, "Model JSON (instead of --input)");
  graph_cmd->add_option("--group-col", graph.group_col, "One map per value of this column");
  graph_cmd->add_option("--groups-file", graph.groups_file, "File holding --group-col");
  graph_cmd->add_option("--cut", graph.cut, "Edges below this are drawn faded")
      ->check(CLI::Range(0.0, 1.0));
  graph_cmd->add_option("--minimum", graph.minimum, "Edges below this are omitted")
      ->check(CLI::Range(0.0, 1.0));
  graph_cmd->add_option("--format", graph.format, "dot or json")
      ->check(CLI::IsMember({"dot", "json"}));
  graph_cmd->add_option("--out", graph.out, "Output file (default: standard output)");

  DiffArgs diff;
  auto* diff_cmd = app.add_subcommand("diff", "Difference map B - A of two transition matrices");
  add_data_options(diff_cmd, diff.data, false);
  diff_cmd->add_option("--model-a", diff.model_a, "Markov model JSON A");
  diff_cmd->add_option("--model-b", diff.model_b, "Markov model JSON B");
  diff_cmd->add_option("--group-col", diff.group_col, "Grouping column");
  diff_cmd->add_option("--groups-file", diff.groups_file, "File holding --group-col");
  diff_cmd->add_option("--group-a", diff.group_a, "Group A");
  diff_cmd->add_option("--group-b", diff.group_b, "Group B");
  diff_cmd->add_option("--minimum", diff.minimum, "Smallest absolute difference shown")
      ->check(CLI::Range(0.0, 1.0));
  diff_cmd->add_option("--format", diff.format, "dot or json")
      ->check(CLI::IsMember({"dot", "json"}));
  diff_cmd->add_option("--out", diff.out, "Output file (default: standard output)");

  PathsArgs paths;
  auto* paths_cmd = app.add_subcommand("paths", "Most probable hidden paths as CSV");
  add_data_options(paths_cmd, paths.data, true);
  paths_cmd->add_option("--model", paths.model, "Model JSON")->required();
  paths_cmd->add_option("--threads", paths.threads, "Worker threads");
  paths_cmd->add_option("--out", paths.out, "Output CSV (default: standard output)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate sequences from a model");
  add_data_options(sim_cmd, sim.data, true);
  sim_cmd->add_option("--model", sim.model, "Model JSON")->required();
  sim_cmd->add_option("--n", sim.n, "Number of sequences");
  sim_cmd->add_option("--length", sim.length, "Sequence length")->required();
  sim_cmd->add_option("--seed", sim.seed, "Seed");
  sim_cmd->add_option("--out", sim.out, "Output CSV (default: standard output)");

  BicArgs bic_args;
  auto* bic_cmd = app.add_subcommand("bic", "Compare models by BIC");
  add_data_options(bic_cmd, bic_args.data, true);
  bic_cmd->add_option("--models", bic_args.models, "Model JSON files")->required()->delimiter(',');
  bic_cmd->add_option("--threads", bic_args.threads, "Worker threads");
  bic_cmd->add_option("--out", bic_args.out, "BIC table JSON output");

  SummaryArgs summary;
  auto* summary_cmd = app.add_subcommand("summary", "Summarize a fitted mixture model");
  add_data_options(summary_cmd, summary.data, true);
  summary_cmd->add_option("--model", summary.model, "Mixture model JSON")->required();
  summary_cmd->add_option("--threads", summary.threads, "Worker threads");
  summary_cmd->add_option("--out", summary.out, "Summary JSON output");

  std::string rerun_from;
  unsigned rerun_threads = 0;
  auto* rerun_cmd = app.add_subcommand("rerun", "Repeat the run recorded in an output file");
  rerun_cmd->add_option("--from", rerun_from, "Output file with a provenance block")->required();
  rerun_cmd->add_option("--threads", rerun_threads, "Worker threads");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[usage_error]: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    for (const auto* sub : app.get_subcommands()) {
      if (sub == app.get_subcommand("fit")) return run_fit(sub, fit, out);
      if (sub == trate_cmd) return run_trate(sub, trate, out);
      if (sub == graph_cmd) return run_graph(sub, graph, out);
      if (sub == diff_cmd) return run_diff(sub, diff, out);
      if (sub == paths_cmd) return run_paths(sub, paths, out);
      if (sub == sim_cmd) return run_simulate(sub, sim, out);
      if (sub == bic_cmd) return run_bic(sub, bic_args, out);
      if (sub == summary_cmd) return run_summary(sub, summary, out);
      if (sub == rerun_cmd) {
        auto argv = recorded_argv(rerun_from);
        if (rerun_cmd->count("--threads") > 0) {
          argv.push_back("--threads");
          argv.push_back(std::to_string(rerun_threads));
        }
        if (!argv.empty() && argv.front() == "rerun")
          throw UsageError("refusing to rerun a rerun");
        return run(argv, out, err);
      }
    }
  } catch (const UsageError& e) {
    err << "error[" << e.kind() << "]: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error[" << e.kind() << "]: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error[input_error]: malformed JSON: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal_error]: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

int main(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace seqmarkov::cli
