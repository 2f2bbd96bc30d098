#ifndef SEQMARKOV_PROCMINE_HPP
#define SEQMARKOV_PROCMINE_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "seqmarkov/markov.hpp"
#include "seqmarkov/mixture.hpp"
#include "seqmarkov/seqdata.hpp"

namespace seqmarkov {

struct ProcessNode {
  std::string label;
  double initial = 0;
  std::string color;  // empty when unassigned
};

struct ProcessEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double probability = 0;
  bool faded = false;
};

// Thresholded transition graph. Edges below `minimum` are dropped; edges in
// [minimum, cut) are faded. Nodes follow alphabet order and edges are listed
// row-major.
struct ProcessGraph {
  std::string title;
  std::vector<ProcessNode> nodes;
  std::vector<ProcessEdge> edges;
  double cut = 0;
  double minimum = 0;
};

struct DiffEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0;  // b - a
  bool positive() const { return weight > 0; }
};

struct DiffGraph {
  std::string title;
  std::vector<std::string> labels;
  std::vector<DiffEdge> edges;
  double minimum = 0;
};

// Pooled empirical transition probabilities; identical to the transition
// part of estimate_mm.
TransitionMatrix seqtrate(const SequenceSet& s);

ProcessGraph build_process_graph(const TransitionMatrix& t, const ProbabilityVector& initial,
                                 double cut, double minimum,
                                 const std::vector<std::string>& labels,
                                 const std::vector<std::string>& colors = {});
ProcessGraph build_process_graph(const MarkovModel& m, double cut, double minimum);

// Edges with |b - a| >= minimum and a nonzero difference.
DiffGraph diff_graph(const TransitionMatrix& a, const TransitionMatrix& b, double minimum,
                     const std::vector<std::string>& labels);

// One Markov model per distinct group label, keyed in sorted label order.
std::map<std::string, MarkovModel> group_models(const SequenceSet& s,
                                                const std::vector<std::string>& groups);

// One graph per cluster from its transition matrix and within-cluster
// initial vector. Node labels are the cluster's state labels.
std::vector<ProcessGraph> cluster_process_maps(const MixtureModel& m, double cut,
                                               double minimum);

// Graphviz output. Several graphs are written as consecutive digraphs.
void write_dot(std::ostream& out, const std::vector<ProcessGraph>& graphs);
void write_dot(std::ostream& out, const DiffGraph& graph);

}  // namespace seqmarkov

#endif  // SEQMARKOV_PROCMINE_HPP
