#include "seqmarkov/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "seqmarkov/error.hpp"

namespace seqmarkov {

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw InputError(std::string("JSON is missing the field '") + key + "'");
  return j.at(key);
}

Eigen::VectorXd vector_from(const Json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = number_from_json(j[i]);
  return v;
}

Eigen::MatrixXd matrix_from(const Json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw DimensionError("matrix rows in JSON have unequal lengths");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number_from_json(j[r][c]);
  }
  return m;
}

std::vector<std::string> strings_from(const Json& j) {
  try {
    return j.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("expected a JSON array of strings");
  }
}

Json hmm_body(const HiddenMarkovModel& h) {
  Json j;
  j["state_labels"] = h.state_labels;
  j["initial"] = vector_json(h.initial);
  j["transitions"] = matrix_json(h.transitions);
  j["emissions"] = matrix_json(h.emissions);
  return j;
}

HiddenMarkovModel hmm_body_from(const Json& j, const Alphabet& alphabet) {
  HiddenMarkovModel h;
  h.alphabet = alphabet;
  h.initial = vector_from(field(j, "initial"));
  h.transitions = matrix_from(field(j, "transitions"));
  h.emissions = matrix_from(field(j, "emissions"));
  h.state_labels = j.contains("state_labels") ? strings_from(j.at("state_labels"))
                                              : default_state_labels(h.n_states());
  h.validate();
  return h;
}

}  // namespace

Json number_to_json(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  return x;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-Inf") return -std::numeric_limits<double>::infinity();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InputError("expected a number in JSON");
}

Json to_json(const Alphabet& a) {
  Json j;
  j["symbols"] = a.symbols();
  if (!a.colors().empty()) j["colors"] = a.colors();
  return j;
}

Alphabet alphabet_from_json(const Json& j) {
  if (j.is_array()) return Alphabet(strings_from(j));
  std::vector<std::string> colors;
  if (j.contains("colors")) colors = strings_from(j.at("colors"));
  return Alphabet(strings_from(field(j, "symbols")), std::move(colors));
}

Json to_json(const SequenceSet& s) {
  Json j;
  j["alphabet"] = to_json(s.alphabet());
  j["ids"] = s.ids();
  j["time_labels"] = s.time_labels();
  Json cells = Json::array();
  for (std::size_t i = 0; i < s.n_sequences(); ++i) {
    Json row = Json::array();
    for (const Cell c : s.row(i)) {
      if (c == kUnknown)
        row.push_back(kUnknownToken);
      else if (c == kPadding)
        row.push_back(kPaddingToken);
      else
        row.push_back(s.alphabet().symbol(static_cast<std::size_t>(c)));
    }
    cells.push_back(std::move(row));
  }
  j["cells"] = std::move(cells);
  return j;
}

SequenceSet sequences_from_json(const Json& j) {
  Alphabet alphabet = alphabet_from_json(field(j, "alphabet"));
  const auto& rows = field(j, "cells");
  if (!rows.is_array() || rows.empty()) throw InputError("sequence JSON has no rows");
  const std::size_t width = rows[0].size();
  CellGrid cells(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) throw InputError("sequence JSON rows have unequal lengths");
    for (std::size_t t = 0; t < width; ++t) {
      const auto token = rows[i][t].get<std::string>();
      Cell c;
      if (token == kUnknownToken) {
        c = kUnknown;
      } else if (token == kPaddingToken) {
        c = kPadding;
      } else {
        const auto idx = alphabet.index_of(token);
        if (!idx) throw InputError("unknown symbol '" + token + "' in sequence JSON");
        c = static_cast<Cell>(*idx);
      }
      cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = c;
    }
  }
  return SequenceSet(std::move(alphabet), std::move(cells), strings_from(field(j, "ids")),
                     j.contains("time_labels") ? strings_from(j.at("time_labels"))
                                               : std::vector<std::string>{});
}

Json to_json(const MarkovModel& m) {
  Json j;
  j["type"] = "mm";
  j["alphabet"] = to_json(m.alphabet);
  j["initial"] = vector_json(m.initial);
  j["transitions"] = matrix_json(m.transitions);
  if (!m.fallback_rows.empty()) {
    Json rows = Json::array();
    for (const auto r : m.fallback_rows) rows.push_back(m.alphabet.symbol(r));
    j["fallback_rows"] = std::move(rows);
  }
  return j;
}

Json to_json(const HiddenMarkovModel& h) {
  Json j;
  j["type"] = "hmm";
  j["alphabet"] = to_json(h.alphabet);
  const Json body = hmm_body(h);
  for (const auto& [key, value] : body.items()) j[key] = value;
  return j;
}

Json to_json(const MixtureModel& m) {
  Json j;
  j["type"] = m.kind == MixtureKind::mmm ? "mmm" : "mhmm";
  j["alphabet"] = to_json(m.alphabet());
  j["cluster_labels"] = m.cluster_labels;
  Json clusters = Json::array();
  for (const auto& c : m.clusters) clusters.push_back(hmm_body(c));
  j["clusters"] = std::move(clusters);
  Json factors = Json::array();
  for (const auto& [name, levels] : m.design.factors)
    factors.push_back(Json{{"name", name}, {"levels", levels}});
  j["design"] = Json{{"intercept", m.design.intercept},
                     {"factors", std::move(factors)},
                     {"columns", m.design.columns}};
  j["coefficients"] = matrix_json(m.coefficients);
  return j;
}

MarkovModel markov_from_json(const Json& j) {
  MarkovModel m;
  m.alphabet = alphabet_from_json(field(j, "alphabet"));
  m.initial = vector_from(field(j, "initial"));
  m.transitions = matrix_from(field(j, "transitions"));
  if (j.contains("fallback_rows"))
    for (const auto& s : strings_from(j.at("fallback_rows"))) {
      const auto idx = m.alphabet.index_of(s);
      if (!idx) throw InputError("unknown fallback row '" + s + "'");
      m.fallback_rows.push_back(*idx);
    }
  m.validate();
  return m;
}

HiddenMarkovModel hmm_from_json(const Json& j) {
  return hmm_body_from(j, alphabet_from_json(field(j, "alphabet")));
}

MixtureModel mixture_from_json(const Json& j) {
  const auto type = field(j, "type").get<std::string>();
  if (type != "mmm" && type != "mhmm") throw InputError("model type '" + type + "' is not a mixture");
  const Alphabet alphabet = alphabet_from_json(field(j, "alphabet"));
  MixtureModel m;
  m.kind = type == "mmm" ? MixtureKind::mmm : MixtureKind::mhmm;
  for (const auto& c : field(j, "clusters")) m.clusters.push_back(hmm_body_from(c, alphabet));
  m.cluster_labels = j.contains("cluster_labels") ? strings_from(j.at("cluster_labels"))
                                                  : default_cluster_labels(m.clusters.size());
  const auto& design = field(j, "design");
  m.design.intercept = field(design, "intercept").get<bool>();
  for (const auto& f : field(design, "factors"))
    m.design.factors.emplace_back(field(f, "name").get<std::string>(),
                                  strings_from(field(f, "levels")));
  m.design.columns = strings_from(field(design, "columns"));
  m.coefficients = matrix_from(field(j, "coefficients"));
  m.validate();
  return m;
}

AnyModel model_from_json(const Json& j) {
  const auto type = field(j, "type").get<std::string>();
  if (type == "mm") return markov_from_json(j);
  if (type == "hmm") return hmm_from_json(j);
  if (type == "mmm" || type == "mhmm") return mixture_from_json(j);
  throw InputError("unknown model type '" + type + "'");
}

Json to_json(const EMResult& r) {
  Json j;
  j["logLik"] = number_to_json(r.log_likelihood);
  j["iterations"] = r.iterations;
  j["change"] = number_to_json(r.change);
  Json trace = Json::array();
  for (const double x : r.trace) trace.push_back(number_to_json(x));
  j["trace"] = std::move(trace);
  return j;
}

Json to_json(const FitReport& r) {
  Json j;
  j["method"] = r.method;
  j["logLik"] = number_to_json(r.log_likelihood);
  j["best_round"] = r.best_round;
  Json ledger = Json::array();
  for (const double x : r.best_opt_restart) ledger.push_back(number_to_json(x));
  j["best_opt_restart"] = std::move(ledger);
  j["n_optimum"] = r.n_optimum;
  j["same_optimum"] = Json{{"count", r.same_optimum_count},
                           {"tolerance", r.same_optimum_tolerance}};
  if (r.method == "em") {
    Json conv = to_json(r.em);
    conv.erase("trace");
    conv["criterion"] = "relative";
    conv["tolerance"] = r.tolerance;
    conv["max_iterations"] = r.max_iterations;
    j["convergence"] = std::move(conv);
    Json trace = Json::array();
    for (const double x : r.em.trace) trace.push_back(number_to_json(x));
    j["trace"] = std::move(trace);
  } else {
    j["optimizer"] = Json{{"algorithm", "multistart L-BFGS with softmax parameters"},
                          {"evaluations", r.evaluations},
                          {"termination", r.termination},
                          {"iterations", r.em.iterations},
                          {"wall_clock_budget", r.wall_clock_budget},
                          {"wall_clock_budget_hit", r.wall_clock_budget_hit},
                          {"reproducible", !r.wall_clock_budget}};
  }
  Json rounds = Json::array();
  for (const auto& o : r.rounds) {
    Json round{{"round", o.round},
               {"seed", o.seed},
               {"logLik", number_to_json(o.log_likelihood)},
               {"iterations", o.iterations}};
    if (r.method == "em") round["change"] = number_to_json(o.change);
    if (o.failed) {
      round["error_class"] = o.error_kind;
      round["error"] = o.error;
    }
    rounds.push_back(std::move(round));
  }
  j["rounds"] = std::move(rounds);
  j["rng"] = Json{{"engine", "mt19937_64"},
                  {"round_seed", "splitmix64(splitmix64(master) ^ round)"},
                  {"master_seed", r.master_seed}};
  return j;
}

Json to_json(const ModelScore& s) {
  return Json{{"logLik", number_to_json(s.log_likelihood)},
              {"df", s.free_parameters},
              {"nobs", s.n_observations},
              {"BIC", number_to_json(s.bic)}};
}

Json to_json(const MixtureSummary& s) {
  Json j;
  j["cluster_labels"] = s.cluster_labels;
  j["design_columns"] = s.design_columns;
  j["coefficients"] = matrix_json(s.coefficients);
  j["standard_errors"] = matrix_json(s.standard_errors);
  j["logLik"] = number_to_json(s.log_likelihood);
  j["BIC"] = number_to_json(s.bic);
  j["df"] = s.free_parameters;
  j["nobs"] = s.n_observations;
  j["prior_means"] = vector_json(s.prior_means);
  j["most_probable_counts"] = std::vector<int>(s.cluster_counts.data(),
                                               s.cluster_counts.data() + s.cluster_counts.size());
  j["most_probable_proportions"] = vector_json(s.cluster_proportions);
  j["classification"] = matrix_json(s.classification);
  Json most = Json::array();
  for (const auto k : s.most_probable) most.push_back(s.cluster_labels[k]);
  j["most_probable"] = std::move(most);
  j["posteriors"] = matrix_json(s.posteriors);
  return j;
}

Json to_json(const ProcessGraph& g) {
  Json j;
  if (!g.title.empty()) j["title"] = g.title;
  Json nodes = Json::array();
  for (const auto& n : g.nodes)
    nodes.push_back(Json{{"label", n.label}, {"initial", n.initial}, {"color", n.color}});
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& e : g.edges)
    edges.push_back(Json{{"from", g.nodes[e.from].label},
                         {"to", g.nodes[e.to].label},
                         {"p", e.probability},
                         {"faded", e.faded}});
  j["edges"] = std::move(edges);
  j["thresholds"] = Json{{"cut", g.cut}, {"minimum", g.minimum}};
  return j;
}

ProcessGraph process_graph_from_json(const Json& j) {
  ProcessGraph g;
  if (j.contains("title")) g.title = j.at("title").get<std::string>();
  std::map<std::string, std::size_t> index;
  for (const auto& n : field(j, "nodes")) {
    ProcessNode node{field(n, "label").get<std::string>(), field(n, "initial").get<double>(),
                     n.contains("color") ? n.at("color").get<std::string>() : std::string()};
    index[node.label] = g.nodes.size();
    g.nodes.push_back(std::move(node));
  }
  auto lookup = [&](const Json& label) {
    const auto it = index.find(label.get<std::string>());
    if (it == index.end()) throw InputError("edge refers to an unknown node");
    return it->second;
  };
  for (const auto& e : field(j, "edges"))
    g.edges.push_back({lookup(field(e, "from")), lookup(field(e, "to")),
                       field(e, "p").get<double>(), field(e, "faded").get<bool>()});
  const auto& t = field(j, "thresholds");
  g.cut = field(t, "cut").get<double>();
  g.minimum = field(t, "minimum").get<double>();
  return g;
}

Json to_json(const DiffGraph& g) {
  Json j;
  if (!g.title.empty()) j["title"] = g.title;
  j["labels"] = g.labels;
  Json edges = Json::array();
  for (const auto& e : g.edges)
    edges.push_back(Json{{"from", g.labels[e.from]},
                         {"to", g.labels[e.to]},
                         {"weight", e.weight},
                         {"sign", e.positive() ? "positive" : "negative"}});
  j["edges"] = std::move(edges);
  j["minimum"] = g.minimum;
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace seqmarkov
