#include "seqmarkov/procmine.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "seqmarkov/error.hpp"

namespace seqmarkov {

namespace {

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

void check_square(const TransitionMatrix& t, std::size_t n_labels) {
  if (t.rows() != t.cols()) throw DimensionError("transition matrix must be square");
  if (static_cast<std::size_t>(t.rows()) != n_labels)
    throw DimensionError("number of labels does not match the transition matrix");
}

}  // namespace

TransitionMatrix seqtrate(const SequenceSet& s) {
  return normalize_counts(count_transitions(s).pairs).probabilities;
}

ProcessGraph build_process_graph(const TransitionMatrix& t, const ProbabilityVector& initial,
                                 double cut, double minimum,
                                 const std::vector<std::string>& labels,
                                 const std::vector<std::string>& colors) {
  if (!(minimum >= 0 && minimum <= cut && cut <= 1))
    throw InputError("thresholds must satisfy 0 <= minimum <= cut <= 1");
  check_square(t, labels.size());
  if (initial.size() != t.rows())
    throw DimensionError("initial vector does not match the transition matrix");
  if (!colors.empty() && colors.size() != labels.size())
    throw DimensionError("number of colors does not match the number of labels");

  ProcessGraph g;
  g.cut = cut;
  g.minimum = minimum;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double init = initial(static_cast<Eigen::Index>(i));
    if (!(init >= 0 && init <= 1)) throw InputError("initial probabilities must lie in [0, 1]");
    g.nodes.push_back({labels[i], init, colors.empty() ? std::string() : colors[i]});
  }
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
      const double p = t(r, c);
      if (p < minimum) continue;
      g.edges.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), p, p < cut});
    }
  return g;
}

ProcessGraph build_process_graph(const MarkovModel& m, double cut, double minimum) {
  return build_process_graph(m.transitions, m.initial, cut, minimum, m.alphabet.symbols(),
                             m.alphabet.colors());
}

DiffGraph diff_graph(const TransitionMatrix& a, const TransitionMatrix& b, double minimum,
                     const std::vector<std::string>& labels) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("transition matrices differ in shape");
  check_square(a, labels.size());
  if (!(minimum >= 0)) throw InputError("minimum must be nonnegative");
  DiffGraph g;
  g.labels = labels;
  g.minimum = minimum;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const double d = b(r, c) - a(r, c);
      if (d == 0 || std::abs(d) < minimum) continue;
      g.edges.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), d});
    }
  return g;
}

std::map<std::string, MarkovModel> group_models(const SequenceSet& s,
                                                const std::vector<std::string>& groups) {
  if (groups.size() != s.n_sequences())
    throw DimensionError("group labels must align with the sequences");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  std::map<std::string, MarkovModel> out;
  for (const auto& [label, rows] : members) {
    try {
      out.emplace(label, estimate_mm(s.subset(rows)));
    } catch (const EstimationError& e) {
      throw EstimationError("group '" + label + "': " + e.what());
    }
  }
  return out;
}

std::vector<ProcessGraph> cluster_process_maps(const MixtureModel& m, double cut,
                                               double minimum) {
  std::vector<ProcessGraph> out;
  for (std::size_t k = 0; k < m.n_clusters(); ++k) {
    const auto& c = m.clusters[k];
    std::vector<std::string> colors;
    if (m.kind == MixtureKind::mmm) colors = c.alphabet.colors();
    auto g = build_process_graph(c.transitions, c.initial, cut, minimum, c.state_labels, colors);
    g.title = m.cluster_labels[k];
    out.push_back(std::move(g));
  }
  return out;
}

void write_dot(std::ostream& out, const std::vector<ProcessGraph>& graphs) {
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = graphs[gi];
    if (gi > 0) out << '\n';
    out << "digraph " << quoted(g.title.empty() ? "process" : g.title) << " {\n";
    out << "  graph [start=1, label=" << quoted(g.title) << "];\n";
    out << "  node [shape=circle, style=filled];\n";
    for (const auto& n : g.nodes) {
      out << "  " << quoted(n.label) << " [xlabel=" << quoted(fixed2(n.initial));
      if (!n.color.empty()) out << ", fillcolor=" << quoted(n.color);
      out << "];\n";
    }
    for (const auto& e : g.edges) {
      out << "  " << quoted(g.nodes[e.from].label) << " -> " << quoted(g.nodes[e.to].label)
          << " [label=" << quoted(fixed2(e.probability));
      if (e.faded)
        out << ", style=\"dashed\", penwidth=0.5";
      else
        out << ", penwidth=" << fixed2(1 + 4 * e.probability);
      out << "];\n";
    }
    out << "}\n";
  }
}

void write_dot(std::ostream& out, const DiffGraph& g) {
  out << "digraph " << quoted(g.title.empty() ? "difference" : g.title) << " {\n";
  out << "  graph [start=1, label=" << quoted(g.title) << "];\n";
  out << "  node [shape=circle];\n";
  for (const auto& label : g.labels) out << "  " << quoted(label) << ";\n";
  for (const auto& e : g.edges) {
    out << "  " << quoted(g.labels[e.from]) << " -> " << quoted(g.labels[e.to])
        << " [label=" << quoted(fixed2(e.weight))
        << ", color=" << (e.positive() ? "\"blue\"" : "\"red\"")
        << ", penwidth=" << fixed2(1 + 8 * std::abs(e.weight)) << "];\n";
  }
  out << "}\n";
}

}  // namespace seqmarkov
